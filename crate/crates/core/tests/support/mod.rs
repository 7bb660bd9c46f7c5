//! Randomized invariant checks shared by the property tests and the
//! acceptance harness. Each check runs at least `CASES` generated cases.

#![allow(dead_code)]

use std::f64::consts::TAU;

use mesh_anneal::annealer::{vfsa_step, vfsa_temperature};
use mesh_anneal::mesh::{dc_unitary, ps_unitary, TransferMatrix};
use mesh_anneal::{
    build_mesh, fidelity, optimize, AnnealConfig, Architecture, MeshLayout, PowerDistribution,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub const CASES: u32 = 256;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn architecture() -> impl Strategy<Value = Architecture> {
    prop_oneof![Just(Architecture::ErrorTolerant), Just(Architecture::ClementsMzi)]
}

/// A mesh with per-block transmissions in `[0, 1]` and matching phases.
fn mesh_case(max_modes: usize) -> impl Strategy<Value = (MeshLayout, Vec<f64>)> {
    (architecture(), 2..=max_modes)
        .prop_flat_map(|(arch, n)| {
            let blocks = n * (n - 1);
            (
                Just(arch),
                Just(n),
                prop::collection::vec(0.0..=1.0f64, blocks),
                prop::collection::vec(0.0..TAU, blocks),
            )
        })
        .prop_map(|(arch, n, ts, phases)| (build_mesh(arch, n, ts).unwrap(), phases))
}

fn distribution(n: usize) -> impl Strategy<Value = PowerDistribution> {
    prop::collection::vec(0.0..1.0f64, n)
        .prop_filter("nonzero total", |w| w.iter().sum::<f64>() > 1e-6)
        .prop_map(|w| PowerDistribution::normalized(w).unwrap())
}

pub fn unitarity() -> Result<(), String> {
    report(runner(CASES).run(&mesh_case(8), |(mesh, phases)| {
        let u = mesh.compose_unitary(&phases).unwrap();
        let d = u.unitarity_defect();
        prop_assert!(d < 1e-10, "defect {d}");
        Ok(())
    }))
}

pub fn power_conservation() -> Result<(), String> {
    report(runner(CASES).run(&(mesh_case(8), 0..8usize), |((mesh, phases), port)| {
        let port = port % mesh.n_modes();
        let p = mesh.propagate(&phases, port).unwrap();
        prop_assert!((p.sum() - 1.0).abs() < 1e-12, "sum {}", p.sum());
        prop_assert!(p.as_slice().iter().all(|&v| v >= 0.0));
        Ok(())
    }))
}

pub fn fidelity_bounds_and_symmetry() -> Result<(), String> {
    let pair = (2..=8usize).prop_flat_map(|n| (distribution(n), distribution(n)));
    report(runner(CASES).run(&pair, |(x, y)| {
        let f = fidelity(&x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(f, fidelity(&y, &x).unwrap());
        prop_assert!((fidelity(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        Ok(())
    }))
}

pub fn schedule_monotonicity() -> Result<(), String> {
    let args = (0u64..1_000_000, 1e-3..10.0f64, 1e-3..10.0f64, 1usize..64);
    report(runner(CASES).run(&args, |(k, t0, c, d)| {
        let a = vfsa_temperature(k, t0, c, d);
        let b = vfsa_temperature(k + 1, t0, c, d);
        prop_assert!(b <= a, "T({}) = {b} > T({k}) = {a}", k + 1);
        prop_assert!(a > 0.0 || a == 0.0 && b == 0.0);
        prop_assert_eq!(vfsa_temperature(0, t0, c, d), t0);
        Ok(())
    }))
}

pub fn proposal_endpoints() -> Result<(), String> {
    let args = (1e-12..100.0f64, 0.0..=1.0f64);
    report(runner(CASES).run(&args, |(temp, u)| {
        prop_assert_eq!(vfsa_step(0.0, temp), -1.0);
        prop_assert_eq!(vfsa_step(1.0, temp), 1.0);
        prop_assert_eq!(vfsa_step(0.5, temp), 0.0);
        let y = vfsa_step(u, temp);
        prop_assert!((-1.0..=1.0).contains(&y));
        let mirrored = vfsa_step(1.0 - u, temp);
        prop_assert!((y + mirrored).abs() <= 1e-12 * (1.0 + y.abs()), "{y} vs {mirrored}");
        Ok(())
    }))
}

pub fn determinism() -> Result<(), String> {
    report(runner(100).run(&(any::<u64>(), 2..=4usize), |(seed, n)| {
        let mesh = build_mesh(Architecture::ErrorTolerant, n, 0.65).unwrap();
        let target = PowerDistribution::indicator(n, n - 1).unwrap();
        let cfg = AnnealConfig { dims: mesh.n_phases(), iterations: 200, seed, ..AnnealConfig::default() };
        let run = |()| {
            let obj = |p: &[f64]| {
                let out = mesh.propagate(p, 0).unwrap();
                1.0 - fidelity(&out, &target).unwrap()
            };
            let r = optimize(obj, &cfg, None).unwrap();
            (r.trace_table(None).render(), serde_json::to_string(&r.sidecar(&cfg)).unwrap())
        };
        prop_assert_eq!(run(()), run(()));
        Ok(())
    }))
}

/// Embeds a 2x2 transfer matrix acting on modes `(top, top + 1)`.
fn embed(n: usize, top: usize, m: &TransferMatrix) -> TransferMatrix {
    let mut out = TransferMatrix::identity(n);
    for r in 0..2 {
        for c in 0..2 {
            out.set(top + r, top + c, m.get(r, c));
        }
    }
    out
}

/// Dense left-multiplication of every block's `PS * DC`, block by block.
pub fn oracle_unitary(mesh: &MeshLayout, phases: &[f64]) -> TransferMatrix {
    let n = mesh.n_modes();
    let mut u = TransferMatrix::identity(n);
    for b in mesh.blocks() {
        let dc = dc_unitary(b.transmission).unwrap();
        let local = match b.phase_index {
            Some(i) => &ps_unitary(phases[i]).unwrap() * &dc,
            None => dc,
        };
        u = &embed(n, b.top_mode, &local) * &u;
    }
    u
}

pub fn small_mesh_oracle() -> Result<(), String> {
    report(runner(CASES).run(&mesh_case(3), |(mesh, phases)| {
        let fast = mesh.compose_unitary(&phases).unwrap();
        let slow = oracle_unitary(&mesh, &phases);
        let d = fast.max_abs_diff(&slow);
        prop_assert!(d < 1e-12, "difference {d}");
        for port in 0..mesh.n_modes() {
            let p = mesh.propagate(&phases, port).unwrap();
            for (j, v) in p.as_slice().iter().enumerate() {
                let want = slow.get(j, port).norm_sqr();
                prop_assert!((v - want).abs() < 1e-12);
            }
        }
        Ok(())
    }))
}

pub type Property = fn() -> Result<(), String>;

/// Every property, by name.
pub fn all() -> Vec<(&'static str, Property)> {
    vec![
        ("unitarity", unitarity as Property),
        ("power conservation", power_conservation),
        ("fidelity bounds and symmetry", fidelity_bounds_and_symmetry),
        ("schedule monotonicity", schedule_monotonicity),
        ("proposal endpoints", proposal_endpoints),
        ("determinism", determinism),
        ("small-mesh oracle", small_mesh_oracle),
    ]
}
