use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mesh_anneal::experiments::{
    campaign_telemetry, run_broadband_suite, run_target_distribution, sweep_capability, CapabilityMap,
    LengthReport, Mode, SweepOptions,
};
use mesh_anneal::hardware::{fit_heater_model, two_pi_scale, CalibrationSweep, HeaterModel, TABLE_ONE};
use mesh_anneal::table::{fmt_float, CsvTable};
use mesh_anneal::{build_mesh, Error, PowerDistribution};

use crate::config::{CampaignConfig, ModeName};
use crate::{CalibrateArgs, Common, GeometryArgs, TelemetryArgs, EXIT_DEGENERATE, EXIT_THRESHOLD};

fn write_table(dir: &Path, name: &str, table: CsvTable, config: &CampaignConfig) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, table.with_comment(config.provenance()).render())
        .with_context(|| format!("cannot write {}", path.display()))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
}

fn mode_for(config: &CampaignConfig) -> Result<Mode> {
    match config.mode {
        ModeName::Ideal => Ok(Mode::IdealPhase),
        ModeName::Hardware => {
            let model = match &config.hardware_model {
                Some(p) => HeaterModel::load(p).with_context(|| format!("heater model {}", p.display()))?,
                None => HeaterModel::chip_default(&build_mesh(config.architecture, config.n_modes, 0.5)?)?,
            };
            Ok(Mode::Hardware(model))
        }
    }
}

fn strict_exit(common: &Common, failures: usize, what: &str) -> u8 {
    if common.strict && failures > 0 {
        eprintln!("strict: {failures} {what} missed the threshold");
        EXIT_THRESHOLD
    } else {
        0
    }
}

pub fn switch(common: &Common) -> Result<u8> {
    let config = common.resolve()?;
    let mode = mode_for(&config)?;
    let suite = run_broadband_suite(
        config.architecture,
        config.n_modes,
        &config.switch.wavelengths,
        &config.switch.inputs,
        &config.anneal(),
        &mode,
        config.restarts,
    )?;
    write_table(&common.out, "broadband.csv", suite.to_table(), &config)?;
    let traces = common.out.join("traces");
    for r in &suite.records {
        let mut t = CsvTable::new(["iteration", "best_infidelity"]);
        for &(k, v) in &r.trace {
            t.push_row(vec![k.to_string(), fmt_float(v)]);
        }
        let name = format!("switch_{}nm_in{}_out{}.csv", r.wavelength_nm, r.input, r.output);
        write_table(&traces, &name, t, &config)?;
    }
    let failures = suite.records.iter().filter(|r| 1.0 - r.fidelity >= config.threshold).count();
    match suite.min_fidelity() {
        Some(min) => println!(
            "{} runs, minimum fidelity {min:.6}, {failures} at or above infidelity {}",
            suite.records.len(),
            config.threshold
        ),
        None => println!("0 runs"),
    }
    Ok(strict_exit(common, failures, "runs"))
}

pub fn sweep(common: &Common) -> Result<u8> {
    let config = common.resolve()?;
    if config.sweep.architectures.is_empty() {
        bail!("config field `sweep.architectures` is empty");
    }
    let inputs = config.sweep.inputs.clone().unwrap_or_else(|| (0..config.n_modes).collect());
    let options = SweepOptions {
        n_modes: config.n_modes,
        threshold: config.threshold,
        restarts: config.restarts,
        jitter_scale: config.sweep.jitter_scale,
    };
    let mut map = CapabilityMap { threshold: config.threshold, records: Vec::new() };
    for &arch in &config.sweep.architectures {
        let part = sweep_capability(arch, &config.sweep.t_grid, &inputs, &options, &config.anneal())?;
        map.records.extend(part.records);
    }
    write_table(&common.out, "capability.csv", map.to_table(), &config)?;
    write_table(&common.out, "capability_long.csv", map.to_long_table(), &config)?;
    let incapable = map.records.iter().filter(|r| !r.capable).count();
    println!("{} records, {} capable", map.records.len(), map.records.len() - incapable);
    Ok(strict_exit(common, incapable, "records"))
}

pub fn target(common: &Common) -> Result<u8> {
    let config = common.resolve()?;
    let n = config.n_modes;
    let target = match &config.target.distribution {
        Some(w) => PowerDistribution::normalized(w.clone()).context("config field `target.distribution`")?,
        None => PowerDistribution::uniform(n)?,
    };
    let mesh = build_mesh(config.architecture, n, config.target.transmission)?;
    let mode = mode_for(&config)?;
    let anneal = config.anneal();
    let out = run_target_distribution(&mesh, &target, config.target.input, &anneal, &mode, config.restarts)?;
    write_table(&common.out, "target_trace.csv", out.run.trace_table(None), &config)?;
    let mut side = out.run.sidecar(&anneal.with_dims(mesh.n_phases()));
    side["config_sha256"] = config.hash().into();
    side["restart_infidelities"] = serde_json::to_value(&out.restart_infidelities)?;
    if let Some(hw) = &out.hardware {
        side["hardware"] = serde_json::to_value(hw)?;
    }
    write_json(&common.out.join("target_run.json"), &side)?;
    println!("best infidelity {:.3e}", out.best_infidelity());
    let failed = usize::from(out.best_infidelity() >= config.threshold);
    Ok(strict_exit(common, failed, "runs"))
}

pub fn calibrate(args: &CalibrateArgs) -> Result<u8> {
    let scale = args.ma_per_unit.unwrap_or_else(|| two_pi_scale(TABLE_ONE[0].alpha));
    let mut fits = Vec::new();
    let mut degenerate = Vec::new();
    for (heater, path) in args.sweeps.iter().enumerate() {
        let sweep = CalibrationSweep::from_csv(path)?;
        match fit_heater_model(&sweep, args.port, scale) {
            Ok(fit) => fits.push(fit),
            Err(Error::Unidentifiable(msg)) => {
                eprintln!("heater {heater} ({}): {msg}", path.display());
                degenerate.push(heater);
            }
            Err(e) => return Err(e).with_context(|| format!("heater {heater} ({})", path.display())),
        }
    }
    if !degenerate.is_empty() {
        let list: Vec<String> = degenerate.iter().map(ToString::to_string).collect();
        eprintln!("calibration degenerate for heaters {}", list.join(", "));
        return Ok(EXIT_DEGENERATE);
    }
    let alpha: Vec<f64> = fits.iter().map(|f| f.alpha).collect();
    let phi0 = fits.iter().map(|f| f.phi0).collect();
    let model = HeaterModel::diagonal(&alpha, phi0, args.resistance, scale)?;
    let mut doc = serde_json::to_value(&model)?;
    doc["fits"] = serde_json::to_value(&fits)?;
    write_json(&args.model, &doc)?;
    for (i, f) in fits.iter().enumerate() {
        println!(
            "heater {i}: alpha {:.6e} phi0 {:.6} A {:.6} B {:.6} rms {:.3e}",
            f.alpha, f.phi0, f.a, f.b, f.rms_residual
        );
    }
    Ok(0)
}

pub fn geometry(args: &GeometryArgs) -> Result<u8> {
    let mut config = args.common.resolve()?;
    let g = &mut config.geometry;
    let overrides = [
        (&mut g.bend_radius_mm, args.radius),
        (&mut g.port_pitch_um, args.pitch),
        (&mut g.heater_length_mm, args.heater_length),
        (&mut g.coupler_gap_um, args.gap),
        (&mut g.interaction_length_mm, args.interaction),
    ];
    for (field, value) in overrides {
        if let Some(v) = value {
            *field = v;
        }
    }
    if let Some(m) = args.modes {
        config.n_modes = m;
    }
    let report = LengthReport::new(config.n_modes, &config.geometry)?;
    println!("{:<20}{:>12}{:>16}", "layout", "length_mm", "et_reduction_%");
    for row in report.to_table().rows() {
        println!("{:<20}{:>12}{:>16}", row[0], row[1], row[2]);
    }
    write_table(&args.common.out, "geometry.csv", report.to_table(), &config)?;
    Ok(0)
}

pub fn telemetry(args: &TelemetryArgs) -> Result<u8> {
    let mut config = args.common.resolve()?;
    let t = &mut config.telemetry;
    for (field, value) in [
        (&mut t.n_heaters, args.heaters),
        (&mut t.wavelengths, args.wavelengths),
        (&mut t.inputs, args.inputs),
        (&mut t.outputs, args.outputs),
        (&mut t.iterations, args.iterations),
    ] {
        if let Some(v) = value {
            *field = v;
        }
    }
    let t = &config.telemetry;
    let counts = campaign_telemetry(t.n_heaters, t.wavelengths, t.inputs, t.outputs, t.iterations);
    let mut table = CsvTable::new(["heater", "switches"]);
    for (i, c) in counts.per_heater().iter().enumerate() {
        table.push_row(vec![i.to_string(), c.to_string()]);
    }
    write_table(&args.common.out, "telemetry.csv", table, &config)?;
    let per = counts.per_heater().iter().min().copied().unwrap_or(0);
    println!("{} heaters, minimum {per} switches per heater, {} total", t.n_heaters, counts.total());
    Ok(0)
}
