// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use cmerw_core::montecarlo::config::{default_parallelism, VerifyConfig};
use cmerw_core::montecarlo::ensemble::{run_ensemble, run_ensemble_resumable, EnsembleConfig};
use cmerw_core::montecarlo::verify::{run_verification, CheckResult};
use cmerw_core::{limit_constants, ModelParams, Regime, Tracking, WalkState};

use crate::args::{
    Command, EnsembleArgs, FigureArgs, Format, LimitsArgs, ModelArgs, OutputArgs, SimulateArgs, TrackingArg,
    VerifyArgs,
};
use crate::error::{CliError, CliResult};
use crate::provenance::{Document, RunConfig};
use crate::svg::{render, simulate_planar};
use crate::trajectory_csv::{read_trajectory, replay, ReplayReport, TrajectoryWriter};

/// Process exit status when every hard check passes.
pub const EXIT_OK: i32 = 0;
/// Process exit status when a hard verification check fails.
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
/// Process exit status for usage, configuration and i/o errors.
pub const EXIT_USAGE: i32 = 2;

fn open_output(out: &Option<std::path::PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) if path.as_os_str() != "-" => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Usage(format!("cannot write {}: {e}", path.display()))
        })?)),
        _ => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn format_for(output: &OutputArgs, default: Format, allowed: &[Format]) -> CliResult<Format> {
    let f = output.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(CliError::Usage(format!("format {f:?} is not available for this command")))
    }
}

fn params(model: &ModelArgs) -> CliResult<ModelParams> {
    Ok(ModelParams::parse(model.d, &model.p)?)
}

fn write_json<T: Serialize>(out: &Option<std::path::PathBuf>, run: &RunConfig, body: &T) -> CliResult<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, &Document { run: run.clone(), body })?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs a parsed command; returns the process exit status.
pub fn run(command: &Command, argv: &[String]) -> CliResult<i32> {
    match command {
        Command::Simulate(a) => simulate(a, argv),
        Command::Ensemble(a) => ensemble(a, argv),
        Command::Verify(a) => verify(a, argv),
        Command::Figure(a) => figure(a, argv),
        Command::Limits(a) => limits(a, argv),
    }
}

fn simulate(args: &SimulateArgs, argv: &[String]) -> CliResult<i32> {
    let params = params(&args.model)?;
    let format = format_for(&args.output, Format::Csv, &[Format::Csv, Format::Json])?;
    if args.steps == 0 || args.record_every == 0 {
        return Err(CliError::Usage("--steps and --record-every must be at least 1".into()));
    }
    let run = RunConfig {
        d: Some(args.model.d),
        p: Some(args.model.p.clone()),
        steps: Some(args.steps),
        seed: Some(args.seed),
        record_every: Some(args.record_every),
        out: args.output.out.clone(),
        format: Some(format),
        ..RunConfig::new("simulate", argv)
    };
    match format {
        Format::Csv => {
            let mut state = WalkState::new(params, args.seed, Tracking::Martingale)?;
            let mut writer = TrajectoryWriter::new(open_output(&args.output.out)?, &run, params.dim())?;
            for _ in 0..args.steps {
                state.step();
                if state.n() % args.record_every == 0 {
                    writer.write_state(&state)?;
                }
            }
            writer.finish()?.flush()?;
        }
        _ => {
            let path = cmerw_core::run_path(&params, args.steps, args.seed, args.record_every)?;
            write_json(&args.output.out, &run, &path)?;
        }
    }
    Ok(EXIT_OK)
}

fn tracking(t: TrackingArg) -> Tracking {
    match t {
        TrackingArg::Position => Tracking::Position,
        TrackingArg::Martingale => Tracking::Martingale,
        TrackingArg::QuadraticVariation => Tracking::QuadraticVariation,
    }
}

fn ensemble(args: &EnsembleArgs, argv: &[String]) -> CliResult<i32> {
    let params = params(&args.model)?;
    format_for(&args.output, Format::Json, &[Format::Json])?;
    let workers = args.parallelism.unwrap_or_else(default_parallelism);
    let config = EnsembleConfig::new(params, args.steps, args.replicas, args.seed)
        .parallelism(workers)
        .tracking(tracking(args.tracking))
        .checkpoints(args.checkpoints.clone());
    let result = match &args.checkpoint_file {
        Some(path) => run_ensemble_resumable(&config, path, args.chunk)?,
        None => run_ensemble(&config)?,
    };
    let run = RunConfig {
        d: Some(args.model.d),
        p: Some(args.model.p.clone()),
        steps: Some(args.steps),
        replicas: Some(args.replicas),
        seed: Some(args.seed),
        out: args.output.out.clone(),
        format: Some(Format::Json),
        parallelism: Some(workers),
        ..RunConfig::new("ensemble", argv)
    };
    write_json(&args.output.out, &run, &result)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct VerifyBody {
    params: ModelParams,
    regime: Regime,
    passed: bool,
    config: VerifyConfig,
    checks: Vec<CheckResult>,
}

#[derive(Debug, Serialize)]
struct ReplayBody {
    passed: bool,
    replay: ReplayReport,
    checks: Vec<CheckResult>,
}

fn verify_config(args: &VerifyArgs, regime: Option<Regime>) -> CliResult<VerifyConfig> {
    let mut config = match &args.tolerance_file {
        Some(path) => VerifyConfig::from_file(path)?,
        None => VerifyConfig::default(),
    };
    let plan = &mut config.plan;
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    if let Some(workers) = args.parallelism {
        plan.parallelism = workers;
    }
    if let Some(steps) = args.steps {
        match regime {
            Some(Regime::Critical) => plan.clt_steps_critical = steps,
            Some(Regime::Superdiffusive) => plan.super_steps = steps,
            _ => plan.clt_steps_diffusive = steps,
        }
    }
    if let Some(replicas) = args.replicas {
        plan.clt_replicas = replicas;
        plan.super_replicas = replicas;
    }
    if plan.parallelism == 0 {
        return Err(CliError::Usage("parallelism must be at least 1".into()));
    }
    Ok(config)
}

fn verify(args: &VerifyArgs, argv: &[String]) -> CliResult<i32> {
    format_for(&args.output, Format::Json, &[Format::Json])?;
    let model = match (args.d, &args.p) {
        (Some(d), Some(p)) => Some(ModelParams::parse(d, p)?),
        (None, None) => None,
        _ => return Err(CliError::Usage("--d and --p must be given together".into())),
    };
    let config = verify_config(args, model.map(|m| m.regime()))?;
    let mut run = RunConfig {
        d: args.d,
        p: args.p.clone(),
        steps: args.steps,
        replicas: args.replicas,
        seed: Some(config.plan.seed),
        out: args.output.out.clone(),
        format: Some(Format::Json),
        tolerance_file: args.tolerance_file.clone(),
        parallelism: Some(config.plan.parallelism),
        ..RunConfig::new("verify", argv)
    };
    if let Some(path) = &args.trajectory {
        return replay_trajectory(path, model, &config, &mut run, &args.output);
    }
    let params = model.ok_or_else(|| CliError::Usage("verify needs --d and --p, or --trajectory".into()))?;
    let report = run_verification(&params, &config)?;
    let passed = report.passed();
    let body = VerifyBody {
        params: report.params,
        regime: report.regime,
        passed,
        config: report.config,
        checks: report.checks,
    };
    write_json(&args.output.out, &run, &body)?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn replay_trajectory(
    path: &Path,
    model: Option<ModelParams>,
    config: &VerifyConfig,
    run: &mut RunConfig,
    output: &OutputArgs,
) -> CliResult<i32> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file = read_trajectory(BufReader::new(file))?;
    let params = match (model, &file.run) {
        (Some(m), _) => Some(m),
        (None, Some(r)) => match (r.d, &r.p) {
            (Some(d), Some(p)) => Some(ModelParams::parse(d, p)?),
            _ => None,
        },
        (None, None) => None,
    };
    if let Some(p) = &params {
        if p.dim() != file.d {
            return Err(CliError::Usage(format!("trajectory has d = {}, model has d = {}", file.d, p.dim())));
        }
    }
    let report = replay(&file, params.as_ref());
    let tol = &config.tolerances;
    let checks = vec![
        check("cm_decomposition_residual", report.recomputed_max_residual, tol.residual_abs),
        check("martingale_representations", report.representation_gap, tol.representation_rel),
    ];
    let passed = checks.iter().all(|c| c.pass);
    run.command = "verify --trajectory".into();
    write_json(&output.out, run, &ReplayBody { passed, replay: report, checks })?;
    Ok(if passed { EXIT_OK } else { EXIT_VERIFICATION_FAILED })
}

fn check(name: &str, empirical: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        tag: "decomposition".into(),
        theoretical: 0.0,
        empirical,
        tolerance,
        pass: empirical <= tolerance,
        hard: true,
        note: None,
    }
}

fn figure(args: &FigureArgs, argv: &[String]) -> CliResult<i32> {
    let params = params(&args.model)?;
    format_for(&args.output, Format::Svg, &[Format::Svg])?;
    let run = RunConfig {
        d: Some(args.model.d),
        p: Some(args.model.p.clone()),
        steps: Some(args.steps),
        seed: Some(args.seed),
        out: args.output.out.clone(),
        format: Some(Format::Svg),
        ..RunConfig::new("figure", argv)
    };
    let path = simulate_planar(&params, args.steps, args.seed)?;
    let svg = render(&params, &path, &run)?;
    let mut w = open_output(&args.output.out)?;
    w.write_all(svg.as_bytes())?;
    w.flush()?;
    Ok(EXIT_OK)
}

fn limits(args: &LimitsArgs, argv: &[String]) -> CliResult<i32> {
    let params = params(&args.model)?;
    format_for(&args.output, Format::Json, &[Format::Json])?;
    let constants = limit_constants(&params)?;
    let run = RunConfig {
        d: Some(args.model.d),
        p: Some(args.model.p.clone()),
        out: args.output.out.clone(),
        format: Some(Format::Json),
        ..RunConfig::new("limits", argv)
    };
    write_json(&args.output.out, &run, &constants)?;
    Ok(EXIT_OK)
}
