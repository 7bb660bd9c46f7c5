//! Fitting `P = A - B cos(alpha x^2 + phi0)` to a single-heater current sweep.
//!
//! The fit works in normalized coordinates `w = x^2 / max(x^2)` so the
//! frequency parameter is the total phase excursion `kappa = alpha max(x^2)`.
//! Starts are deterministic: a frequency estimate from the number of
//! mean crossings is refined by a separable scan (linear least squares in
//! `A`, `B cos phi0`, `B sin phi0` for each trial frequency), then
//! Levenberg-Marquardt runs from the four `phi0` quadrants and the scan's
//! own estimate. The lowest-cost result wins.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::TableRow;
use crate::annealer::wrap_phase;
use crate::error::{Error, Result};
use crate::mesh::PowerDistribution;
use crate::rng::seeded;

/// Peak-to-peak power below which a sweep carries no usable signal.
pub const NOISE_FLOOR: f64 = 1e-6;
const MIN_POINTS: usize = 4;
const SCAN_POINTS: usize = 1201;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSweep {
    currents: Vec<f64>,
    powers: Vec<PowerDistribution>,
}

impl CalibrationSweep {
    pub fn new(currents: Vec<f64>, powers: Vec<PowerDistribution>) -> Result<Self> {
        if currents.len() != powers.len() {
            return Err(Error::contract(format!(
                "{} currents but {} power rows",
                currents.len(),
                powers.len()
            )));
        }
        if let Some(&x) = currents.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(Error::domain(format!("sweep current {x} must be finite and non-negative")));
        }
        if currents.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("sweep currents must be strictly increasing"));
        }
        if let Some(first) = powers.first() {
            if powers.iter().any(|p| p.len() != first.len()) {
                return Err(Error::contract("sweep rows have different port counts"));
            }
        }
        Ok(Self { currents, powers })
    }

    pub fn currents(&self) -> &[f64] {
        &self.currents
    }

    pub fn powers(&self) -> &[PowerDistribution] {
        &self.powers
    }

    pub fn n_ports(&self) -> usize {
        self.powers.first().map_or(0, |p| p.len())
    }

    pub fn len(&self) -> usize {
        self.currents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.currents.is_empty()
    }

    /// Reads `current_mA, p_out_0, ..., p_out_{N-1}`. Rows are normalized to
    /// unit sum on ingest; `#` lines are comments.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
        let headers = reader.headers()?.clone();
        let parse_err = |row: usize, message: String| Error::Parse { path: path.to_path_buf(), row, message };
        if headers.len() < 3 || &headers[0] != "current_mA" {
            return Err(parse_err(
                1,
                "header must be `current_mA,p_out_0,...` with at least two ports".into(),
            ));
        }
        for (j, h) in headers.iter().skip(1).enumerate() {
            if h != format!("p_out_{j}") {
                return Err(parse_err(1, format!("expected column `p_out_{j}`, found `{h}`")));
            }
        }
        let mut currents = Vec::new();
        let mut powers = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let row = e.position().map_or(0, |p| p.line() as usize);
                parse_err(row, e.to_string())
            })?;
            let row = record.position().map_or(0, |p| p.line() as usize);
            let values: Vec<f64> = record
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| parse_err(row, format!("`{f}`: {e}"))))
                .collect::<Result<_>>()?;
            currents.push(values[0]);
            let p = PowerDistribution::normalized(values[1..].to_vec())
                .map_err(|e| parse_err(row, e.to_string()))?;
            powers.push(p);
        }
        Self::new(currents, powers).map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        use crate::table::{fmt_float, CsvTable};
        let n = self.n_ports();
        let mut header = vec!["current_mA".to_owned()];
        header.extend((0..n).map(|j| format!("p_out_{j}")));
        let mut t = CsvTable::new(header);
        for (x, p) in self.currents.iter().zip(&self.powers) {
            let mut row = vec![fmt_float(*x)];
            row.extend(p.as_slice().iter().map(|v| fmt_float(*v)));
            t.push_row(row);
        }
        t.render()
    }
}

/// Sweep generated from the heater law. `port` receives
/// `A - B cos(alpha (x / ma_per_unit)^2 + phi0)` (plus optional Gaussian
/// noise, clamped to `[0, 1]`); the remaining power is shared equally by the
/// other ports.
pub fn synthetic_sweep(
    law: TableRow,
    currents: &[f64],
    n_ports: usize,
    port: usize,
    ma_per_unit: f64,
    noise: Option<(f64, u64)>,
) -> Result<CalibrationSweep> {
    if n_ports < 2 || port >= n_ports {
        return Err(Error::domain(format!("port {port} invalid for {n_ports} ports")));
    }
    let mut rng = seeded(noise.map_or(0, |(_, s)| s));
    let normal = Normal::new(0.0, noise.map_or(0.0, |(s, _)| s))
        .map_err(|e| Error::domain(format!("noise level: {e}")))?;
    let powers = currents
        .iter()
        .map(|&x| {
            let u = x / ma_per_unit;
            let mut p = law.a - law.b * (law.alpha * u * u + law.phi0).cos();
            if noise.is_some() {
                p += normal.sample(&mut rng);
            }
            let p = p.clamp(0.0, 1.0);
            let rest = (1.0 - p) / (n_ports - 1) as f64;
            let row = (0..n_ports).map(|j| if j == port { p } else { rest }).collect();
            PowerDistribution::normalized(row)
        })
        .collect::<Result<Vec<_>>>()?;
    CalibrationSweep::new(currents.to_vec(), powers)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeaterFit {
    pub a: f64,
    pub b: f64,
    /// Per current unit squared.
    pub alpha: f64,
    /// In `[0, 2pi)`.
    pub phi0: f64,
    pub rms_residual: f64,
}

impl HeaterFit {
    pub fn predict(&self, x_units: f64) -> f64 {
        self.a - self.b * (self.alpha * x_units * x_units + self.phi0).cos()
    }
}

/// Parameters in normalized coordinates: `[A, B, kappa, phi0]`.
type Params = [f64; 4];

struct Problem<'a> {
    w: &'a [f64],
    y: &'a [f64],
}

impl Problem<'_> {
    fn cost(&self, p: &Params) -> f64 {
        self.w
            .iter()
            .zip(self.y)
            .map(|(w, y)| {
                let r = p[0] - p[1] * (p[2] * w + p[3]).cos() - y;
                r * r
            })
            .sum()
    }

    /// `J^T J` and `J^T r`.
    fn normal_equations(&self, p: &Params) -> ([[f64; 4]; 4], [f64; 4]) {
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (w, y) in self.w.iter().zip(self.y) {
            let th = p[2] * w + p[3];
            let (s, c) = th.sin_cos();
            let r = p[0] - p[1] * c - y;
            let j = [1.0, -c, p[1] * s * w, p[1] * s];
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        (jtj, jtr)
    }

    fn levenberg_marquardt(&self, mut p: Params) -> (Params, f64) {
        let mut cost = self.cost(&p);
        let mut lambda = 1e-3;
        for _ in 0..2000 {
            let (jtj, jtr) = self.normal_equations(&p);
            let mut improved = false;
            while lambda < 1e20 {
                let mut m = jtj;
                for (k, row) in m.iter_mut().enumerate() {
                    row[k] += lambda * jtj[k][k].max(1e-12);
                }
                let rhs = jtr.map(|g| -g);
                let Some(step) = solve::<4>(m, rhs) else {
                    lambda *= 10.0;
                    continue;
                };
                let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]];
                let trial_cost = self.cost(&trial);
                if trial_cost < cost {
                    let small = step.iter().zip(&p).all(|(d, v)| d.abs() <= 1e-15 * (v.abs() + 1e-12));
                    p = trial;
                    let done = small || cost - trial_cost <= 1e-30;
                    cost = trial_cost;
                    lambda = (lambda / 3.0).max(1e-15);
                    improved = !done;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (p, cost)
    }

    /// Best linear fit of `A + C cos(kappa w) + S sin(kappa w)` for fixed
    /// `kappa`, returned as `[A, B, kappa, phi0]` with its cost.
    fn separable(&self, kappa: f64) -> Option<(Params, f64)> {
        let mut m = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for (w, y) in self.w.iter().zip(self.y) {
            let (s, c) = (kappa * w).sin_cos();
            let basis = [1.0, c, s];
            for a in 0..3 {
                rhs[a] += basis[a] * y;
                for b in 0..3 {
                    m[a][b] += basis[a] * basis[b];
                }
            }
        }
        let [a, c, s] = solve::<3>(m, rhs)?;
        // -B cos(t + phi0) = -B cos(phi0) cos t + B sin(phi0) sin t
        let p = [a, c.hypot(s), kappa, s.atan2(-c)];
        Some((p, self.cost(&p)))
    }
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve<const N: usize>(mut m: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = m[row][col] / m[col][col];
            let pivot = m[col];
            for (v, p) in m[row].iter_mut().zip(pivot).skip(col) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Maps any parameter vector to the canonical `B >= 0`, `kappa >= 0`,
/// `phi0 in [0, 2pi)` representative of the same curve.
fn canonical(mut p: Params) -> Params {
    if p[2] < 0.0 {
        p[2] = -p[2];
        p[3] = -p[3];
    }
    if p[1] < 0.0 {
        p[1] = -p[1];
        p[3] += PI;
    }
    p[3] = wrap_phase(p[3]);
    p
}

/// Fits the heater law to the power observed at `output_port`, with sweep
/// currents converted to current units by `ma_per_unit`.
pub fn fit_heater_model(sweep: &CalibrationSweep, output_port: usize, ma_per_unit: f64) -> Result<HeaterFit> {
    if sweep.len() < MIN_POINTS {
        return Err(Error::contract(format!(
            "a heater fit needs at least {MIN_POINTS} sweep points, got {}",
            sweep.len()
        )));
    }
    if output_port >= sweep.n_ports() {
        return Err(Error::domain(format!(
            "output port {output_port} out of range for {} ports",
            sweep.n_ports()
        )));
    }
    if !(ma_per_unit > 0.0) {
        return Err(Error::domain(format!("ma_per_unit = {ma_per_unit} must be positive")));
    }
    let u: Vec<f64> = sweep.currents.iter().map(|x| (x / ma_per_unit).powi(2)).collect();
    let y: Vec<f64> = sweep.powers.iter().map(|p| p.as_slice()[output_port]).collect();
    let u_max = u.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi - lo < NOISE_FLOOR || u_max <= 0.0 {
        return Err(Error::Unidentifiable(format!(
            "power at port {output_port} is flat (peak-to-peak {:.3e}); alpha and phi0 cannot be determined",
            hi - lo
        )));
    }
    let w: Vec<f64> = u.iter().map(|v| v / u_max).collect();
    let problem = Problem { w: &w, y: &y };

    // Mean crossings: each one is roughly pi of phase excursion.
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let crossings = y.windows(2).filter(|p| (p[0] - mean).signum() != (p[1] - mean).signum()).count();
    let span = w[w.len() - 1] - w[0];
    let kappa0 = PI * (crossings as f64).max(0.5) / span.max(1e-12);

    let (scan_best, _) = (0..SCAN_POINTS)
        .filter_map(|i| {
            let t = i as f64 / (SCAN_POINTS - 1) as f64;
            problem.separable(kappa0 * 64f64.powf(t) / 8.0)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Unidentifiable("no trial frequency admits a fit".into()))?;

    let mut starts: Vec<Params> = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]
        .iter()
        .map(|&phi| [scan_best[0], scan_best[1], scan_best[2], phi])
        .collect();
    starts.push(scan_best);
    let (best, cost) = starts
        .into_iter()
        .map(|s| problem.levenberg_marquardt(s))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    let best = canonical(best);
    if best[1] < NOISE_FLOOR {
        return Err(Error::Unidentifiable(format!(
            "fitted amplitude B = {:.3e} is below the noise floor; alpha and phi0 cannot be determined",
            best[1]
        )));
    }
    Ok(HeaterFit {
        a: best[0],
        b: best[1],
        alpha: best[2] / u_max,
        phi0: best[3],
        rms_residual: (cost / y.len() as f64).sqrt(),
    })
}
