mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;
use serde_json::json;
use unravel::ensemble::{run_ensemble, threads_from_env, with_threads};
use unravel::fluorescence::{figure_rows, write_figure_csv, Scenario};
use unravel::oracle::{ensemble_summary, integrate_master_strided};
use unravel::trajectory::{run_trajectory, write_trajectory_csv, TrajectoryConfig};
use unravel::{verify, PureState};

use config::{Cli, Mode, ModelSource, RunConfig};

/// Multiple of the jackknife standard error allowed by `ensemble-check`.
const GATE_SE: f64 = 3.0;

enum Outcome {
    Ok,
    GateFailed(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match config::resolve(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    match with_threads(threads_from_env(), || run(&config)) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::GateFailed(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(config: &RunConfig) -> anyhow::Result<Outcome> {
    fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("cannot create {}", config.output_dir.display()))?;
    match config.mode {
        Mode::Trajectories => trajectories(config),
        Mode::EnsembleCheck => ensemble_check(config),
        Mode::Figures => figures(config),
        Mode::Verify => verify_mode(config),
    }
}

fn trajectory_config(config: &RunConfig) -> TrajectoryConfig {
    let mut tc = TrajectoryConfig::new(config.unraveling.clone(), config.dt, config.steps());
    tc.seed = config.seed;
    tc.record_stride = config.record_stride;
    tc
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn initial(config: &RunConfig, dim: usize) -> anyhow::Result<PureState> {
    config.initial_state(dim).map_err(anyhow::Error::msg)
}

fn trajectories(config: &RunConfig) -> anyhow::Result<Outcome> {
    let model = config.build_model()?;
    let psi0 = initial(config, model.dim())?;
    let tc = trajectory_config(config);
    let trajs = run_ensemble(&model, &tc, config.n_traj, &psi0)?;
    let mut files = Vec::with_capacity(trajs.len());
    for traj in &trajs {
        let name = format!("trajectory_{:05}.csv", traj.trajectory_index);
        let path = config.output_dir.join(&name);
        let out = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        write_trajectory_csv(out, traj, model.channels())?;
        files.push(name);
    }
    write_json(
        &config.output_dir.join("manifest.json"),
        &json!({
            "mode": "trajectories",
            "model": model,
            "unraveling": config.unraveling,
            "dt": config.dt,
            "steps": tc.steps,
            "record_stride": config.record_stride,
            "seed": config.seed,
            "n_traj": config.n_traj,
            "files": files,
        }),
    )?;
    println!("wrote {} trajectories to {}", trajs.len(), config.output_dir.display());
    Ok(Outcome::Ok)
}

fn ensemble_check(config: &RunConfig) -> anyhow::Result<Outcome> {
    let model = config.build_model()?;
    let psi0 = initial(config, model.dim())?;
    let tc = trajectory_config(config);
    let trajs = run_ensemble(&model, &tc, config.n_traj, &psi0)?;
    let oracle = integrate_master_strided(&model, &psi0.to_density(), config.dt, tc.steps, config.record_stride)?;
    let states: Vec<Vec<PureState>> = trajs.into_iter().map(|t| t.states).collect();
    let times: Vec<f64> = (0..oracle.len()).map(|i| (i * config.record_stride) as f64 * config.dt).collect();
    let summary = ensemble_summary(&times, &states, &oracle)?;
    let path = config.output_dir.join("summary.json");
    fs::write(&path, summary.to_json(GATE_SE)? + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    let failures = summary.failures(GATE_SE);
    if failures.is_empty() {
        println!("ensemble gate passed at {} times ({} trajectories)", times.len(), config.n_traj);
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::GateFailed(format!(
            "ensemble mean departs from the master equation by more than {GATE_SE} standard errors at t = {:?}",
            failures
        )))
    }
}

fn figures(config: &RunConfig) -> anyhow::Result<Outcome> {
    let ModelSource::Atom(params) = config.model else {
        bail!("figures mode requires the atom model");
    };
    let model = config.build_model()?;
    let ground = PureState::new(unravel::operators::pauli::ground())?;
    let psi0 = match &config.initial {
        Some(s) => s.clone(),
        None => ground,
    };
    let mut entries = serde_json::Map::new();
    for scenario in Scenario::ALL {
        let mut tc = trajectory_config(config);
        tc.unraveling = scenario.spec();
        let traj = run_trajectory(&model, &tc, &psi0)?;
        let name = format!("{}.csv", scenario.name());
        let path = config.output_dir.join(&name);
        let out = BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?);
        write_figure_csv(out, &figure_rows(&traj)?)?;
        entries.insert(
            scenario.name().to_string(),
            json!({
                "file": name,
                "unraveling": tc.unraveling,
                "gamma": params.gamma,
                "omega": params.omega,
                "dt": config.dt,
                "t_max": config.t_max,
                "record_stride": config.record_stride,
                "seed": config.seed,
            }),
        );
    }
    write_json(&config.output_dir.join("figures.json"), &serde_json::Value::Object(entries))?;
    println!("wrote {} scenario files to {}", Scenario::ALL.len(), config.output_dir.display());
    Ok(Outcome::Ok)
}

fn verify_mode(config: &RunConfig) -> anyhow::Result<Outcome> {
    let report = verify::run_all(config.seed)?;
    write_json(&config.output_dir.join("verify.json"), &serde_json::to_value(&report)?)?;
    for c in &report.checks {
        println!("{:<28} {} value {:.3e} tolerance {:.1e}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.value, c.tolerance);
    }
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::GateFailed(format!("invariant checks failed: {}", failed.join(", "))))
    }
}
