use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-heater switch counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchTelemetry {
    per_heater_switches: Vec<u64>,
    total_switches: u64,
}

impl SwitchTelemetry {
    pub fn new(n_heaters: usize) -> Self {
        Self { per_heater_switches: vec![0; n_heaters], total_switches: 0 }
    }

    pub fn per_heater(&self) -> &[u64] {
        &self.per_heater_switches
    }

    pub fn total(&self) -> u64 {
        self.total_switches
    }

    /// Counts one switch for every distinct heater in `changed`.
    pub fn record_switch(&mut self, changed: &[usize]) -> Result<()> {
        let n = self.per_heater_switches.len();
        if let Some(&bad) = changed.iter().find(|&&i| i >= n) {
            return Err(Error::domain(format!("heater {bad} out of range for {n} heaters")));
        }
        let mut idx = changed.to_vec();
        idx.sort_unstable();
        idx.dedup();
        for i in idx {
            self.per_heater_switches[i] += 1;
            self.total_switches += 1;
        }
        Ok(())
    }

    /// Records one reconfiguration that drives every heater.
    pub fn record_full_reconfiguration(&mut self) {
        for c in &mut self.per_heater_switches {
            *c += 1;
        }
        self.total_switches += self.per_heater_switches.len() as u64;
    }

    /// Heaters whose setting differs between two current vectors.
    pub fn changed_heaters(previous: &[f64], next: &[f64]) -> Vec<usize> {
        previous.iter().zip(next).enumerate().filter(|(_, (a, b))| a != b).map(|(i, _)| i).collect()
    }

    /// Sums counters of independent runs.
    pub fn merge(&mut self, other: &SwitchTelemetry) -> Result<()> {
        if other.per_heater_switches.len() != self.per_heater_switches.len() {
            return Err(Error::contract("telemetry heater counts differ"));
        }
        for (a, b) in self.per_heater_switches.iter_mut().zip(&other.per_heater_switches) {
            *a += b;
        }
        self.total_switches += other.total_switches;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_run_counts() {
        let mut t = SwitchTelemetry::new(56);
        let all: Vec<usize> = (0..56).collect();
        for _ in 0..500 {
            t.record_switch(&all).unwrap();
        }
        assert!(t.per_heater().iter().all(|&c| c == 500));
        assert_eq!(t.total(), 28_000);
    }

    #[test]
    fn empty_and_duplicate_sets() {
        let mut t = SwitchTelemetry::new(4);
        t.record_switch(&[]).unwrap();
        assert_eq!(t, SwitchTelemetry::new(4));
        t.record_switch(&[1, 1, 3]).unwrap();
        assert_eq!(t.per_heater(), &[0, 1, 0, 1]);
        assert_eq!(t.total(), 2);
        assert!(t.record_switch(&[4]).is_err());
    }

    #[test]
    fn merge_sums() {
        let mut a = SwitchTelemetry::new(2);
        a.record_full_reconfiguration();
        let mut b = SwitchTelemetry::new(2);
        b.record_switch(&[0]).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a.per_heater(), &[2, 1]);
        assert_eq!(a.total(), 3);
        assert!(a.merge(&SwitchTelemetry::new(3)).is_err());
    }

    #[test]
    fn changed_detection() {
        assert_eq!(SwitchTelemetry::changed_heaters(&[1.0, 2.0, 3.0], &[1.0, 2.5, 0.0]), vec![1, 2]);
    }
}
