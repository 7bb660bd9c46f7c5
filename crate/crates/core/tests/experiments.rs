use mesh_anneal::experiments::{
    clements_corner_bound, run_switch, run_target_distribution, sweep_capability, Mode, SweepOptions,
};
use mesh_anneal::hardware::HeaterModel;
use mesh_anneal::{build_mesh, AnnealConfig, Architecture, PowerDistribution};

fn config(seed: u64) -> AnnealConfig {
    AnnealConfig { seed, ..AnnealConfig::default() }
}

#[test]
fn error_tolerant_switch_to_output_five() {
    let mesh = build_mesh(Architecture::ErrorTolerant, 8, 0.65).unwrap();
    let out = run_switch(&mesh, 5, 0, &config(1), &Mode::IdealPhase, 1).unwrap();
    assert!(out.best_infidelity() < 1e-3, "{}", out.best_infidelity());
}

#[test]
fn hardware_mode_compensates_crosstalk() {
    let mesh = build_mesh(Architecture::ErrorTolerant, 8, 0.65).unwrap();
    let model = HeaterModel::chip_default(&mesh).unwrap();
    let out = run_switch(&mesh, 5, 0, &config(2), &Mode::Hardware(model.clone()), 1).unwrap();
    assert!(out.best_infidelity() < 1e-2, "{}", out.best_infidelity());
    let hw = out.hardware.unwrap();
    assert!(hw.total_power_w > 0.0 && hw.total_power_w <= 56.0 * 0.33);
    assert_eq!(hw.telemetry.per_heater().len(), 56);
    assert!(hw.telemetry.total() > 0);
}

#[test]
fn uniform_target() {
    let mesh = build_mesh(Architecture::ErrorTolerant, 8, 0.65).unwrap();
    let target = PowerDistribution::uniform(8).unwrap();
    let out = run_target_distribution(&mesh, &target, 0, &config(3), &Mode::IdealPhase, 1).unwrap();
    assert!(out.best_infidelity() < 1e-3, "{}", out.best_infidelity());
}

#[test]
fn skyline_target_runs_unchanged() {
    let mesh = build_mesh(Architecture::ErrorTolerant, 8, 0.65).unwrap();
    let target = PowerDistribution::normalized(vec![1.0, 2.0, 4.0, 7.0, 7.0, 4.0, 2.0, 1.0]).unwrap();
    let cfg = AnnealConfig { iterations: 2_000, ..config(4) };
    let out = run_target_distribution(&mesh, &target, 2, &cfg, &Mode::IdealPhase, 1).unwrap();
    assert!(out.best_infidelity() < 0.05, "{}", out.best_infidelity());
}

#[test]
fn more_restarts_never_hurt() {
    let mesh = build_mesh(Architecture::ClementsMzi, 6, 0.6).unwrap();
    let cfg = AnnealConfig { iterations: 1_500, ..config(5) };
    let mut previous = f64::INFINITY;
    for r in 1..=4 {
        let out = run_switch(&mesh, 3, 0, &cfg, &Mode::IdealPhase, r).unwrap();
        assert!(out.best_infidelity() <= previous);
        assert_eq!(out.restart_infidelities.len(), r);
        previous = out.best_infidelity();
    }
}

#[test]
fn capability_sets_nest_and_corner_bound_holds() {
    let grid = [0.5, 0.6, 0.7, 0.8];
    let opts = SweepOptions { n_modes: 6, restarts: 2, ..SweepOptions::default() };
    let cfg = AnnealConfig { iterations: 6_000, ..config(6) };
    let et = sweep_capability(Architecture::ErrorTolerant, &grid, &[0], &opts, &cfg).unwrap();
    let mzi = sweep_capability(Architecture::ClementsMzi, &grid, &[0], &opts, &cfg).unwrap();
    for r in &mzi.records {
        let e = et.get(Architecture::ErrorTolerant, r.input, r.transmission).unwrap();
        assert!(!r.capable || e.capable, "Clements capable but not ET at T = {}", r.transmission);
        if clements_corner_bound(r.transmission) < 1.0 - opts.threshold {
            assert!(!r.capable);
            assert!(r.per_output[5] >= 1.0 - clements_corner_bound(r.transmission) - 1e-12);
        }
    }
    assert!(mzi.get(Architecture::ClementsMzi, 0, 0.5).unwrap().capable);
    assert!(et.get(Architecture::ErrorTolerant, 0, 0.5).unwrap().capable);
}

#[test]
fn sweeps_are_reproducible_byte_for_byte() {
    let opts = SweepOptions { n_modes: 4, restarts: 1, jitter_scale: Some(0.5), ..SweepOptions::default() };
    let cfg = AnnealConfig { iterations: 500, ..config(7) };
    let a = sweep_capability(Architecture::ErrorTolerant, &[0.6, 0.7], &[0, 1], &opts, &cfg).unwrap();
    let b = sweep_capability(Architecture::ErrorTolerant, &[0.6, 0.7], &[0, 1], &opts, &cfg).unwrap();
    assert_eq!(a.to_table().render(), b.to_table().render());
    assert_eq!(a.to_long_table().render(), b.to_long_table().render());
}
