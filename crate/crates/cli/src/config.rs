use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use unravel::fluorescence::{build_atom, AtomParams};
use unravel::{LindbladModel, PureState, UMatrix, UnravelingSpec, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Trajectories,
    EnsembleCheck,
    Figures,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnravelingKind {
    Fixed,
    Homodyne,
    Heterodyne,
    Invariant,
}

#[derive(Debug, Parser)]
#[command(name = "unravel", version, about = "Diffusive quantum trajectory simulator")]
pub struct Cli {
    /// JSON config file; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// "atom" or a path to a model JSON file
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, value_enum)]
    pub unraveling: Option<UnravelingKind>,
    /// u matrix as JSON rows of [re, im] pairs, inline or a file path
    #[arg(long)]
    pub u_json: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub theta2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<i32>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub n_traj: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub record_stride: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

/// Either a builtin name or an explicit model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelChoice {
    Builtin(String),
    Custom(LindbladModel),
}

/// Contents of `--config`; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<Mode>,
    pub model: Option<ModelChoice>,
    pub gamma: Option<f64>,
    pub omega: Option<f64>,
    pub unraveling: Option<UnravelingSpec>,
    /// Initial state amplitudes as `[re, im]` pairs.
    pub initial: Option<Vec<[f64; 2]>>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub n_traj: Option<u64>,
    pub seed: Option<u64>,
    pub record_stride: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum ModelSource {
    Atom(AtomParams),
    Custom(LindbladModel),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub model: ModelSource,
    pub unraveling: UnravelingSpec,
    pub initial: Option<PureState>,
    pub dt: f64,
    pub t_max: f64,
    pub n_traj: u64,
    pub seed: u64,
    pub record_stride: usize,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn build_model(&self) -> unravel::Result<LindbladModel> {
        match &self.model {
            ModelSource::Atom(p) => build_atom(p),
            ModelSource::Custom(m) => Ok(m.clone()),
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Configured state, else `(|e⟩ + |g⟩)/√2` for the atom and the first
    /// basis vector otherwise.
    pub fn initial_state(&self, dim: usize) -> Result<PureState, String> {
        if let Some(s) = &self.initial {
            if s.dim() != dim {
                return Err(format!("initial state has dimension {}, model has {dim}", s.dim()));
            }
            return Ok(s.clone());
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        match self.model {
            ModelSource::Atom(_) => amps.iter_mut().for_each(|a| *a = C64::new(1.0, 0.0)),
            ModelSource::Custom(_) => amps[0] = C64::new(1.0, 0.0),
        }
        PureState::from_slice(&amps).map_err(|e| e.to_string())
    }
}

fn read_text(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn parse_u(arg: &str) -> Result<UMatrix, String> {
    let text = if arg.trim_start().starts_with('[') { arg.to_string() } else { read_text(Path::new(arg))? };
    serde_json::from_str(&text).map_err(|e| format!("invalid --u-json: {e}"))
}

fn unraveling_from_flags(cli: &Cli, kind: UnravelingKind) -> Result<UnravelingSpec, String> {
    Ok(match kind {
        UnravelingKind::Fixed => {
            let u = cli.u_json.as_deref().ok_or("--unraveling fixed needs --u-json")?;
            UnravelingSpec::Fixed { u: parse_u(u)? }
        }
        UnravelingKind::Homodyne => UnravelingSpec::Homodyne {
            eta: cli.eta.unwrap_or(1.0),
            theta1: cli.theta1.unwrap_or(0.0),
            theta2: cli.theta2.unwrap_or(0.0),
        },
        UnravelingKind::Heterodyne => UnravelingSpec::Heterodyne,
        UnravelingKind::Invariant => UnravelingSpec::InvariantStateDep { sign: cli.sign.unwrap_or(1) },
    })
}

fn positive(name: &str, v: f64) -> Result<f64, String> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be positive, got {v}"))
    }
}

/// Merges flags over the config file over defaults and validates the result.
pub fn resolve(cli: &Cli) -> Result<RunConfig, String> {
    let file = match &cli.config {
        Some(p) => serde_json::from_str::<ConfigFile>(&read_text(p)?).map_err(|e| format!("invalid config: {e}"))?,
        None => ConfigFile::default(),
    };
    let mode = cli.mode.or(file.mode).unwrap_or(Mode::Trajectories);
    let gamma = cli.gamma.or(file.gamma).unwrap_or(1.0);
    let omega = cli.omega.or(file.omega).unwrap_or(10.0);

    let choice = match &cli.model {
        Some(s) if s == "atom" => ModelChoice::Builtin(s.clone()),
        Some(path) => ModelChoice::Custom(
            serde_json::from_str(&read_text(Path::new(path))?).map_err(|e| format!("invalid model {path}: {e}"))?,
        ),
        None => file.model.unwrap_or(ModelChoice::Builtin("atom".into())),
    };
    let model = match choice {
        ModelChoice::Builtin(name) if name == "atom" => {
            let p = AtomParams { gamma, omega };
            p.validate().map_err(|e| e.to_string())?;
            ModelSource::Atom(p)
        }
        ModelChoice::Builtin(name) => return Err(format!("unknown builtin model {name:?}")),
        ModelChoice::Custom(m) => ModelSource::Custom(m),
    };

    let unraveling = match cli.unraveling {
        Some(kind) => unraveling_from_flags(cli, kind)?,
        None => file.unraveling.unwrap_or(UnravelingSpec::Heterodyne),
    };
    let initial = match file.initial {
        Some(amps) => {
            let v: Vec<C64> = amps.iter().map(|[r, i]| C64::new(*r, *i)).collect();
            Some(PureState::normalized(v.into()).map_err(|e| format!("invalid initial state: {e}"))?)
        }
        None => None,
    };

    let dt = positive("dt", cli.dt.or(file.dt).unwrap_or(1e-4))?;
    let t_max = positive("t_max", cli.t_max.or(file.t_max).unwrap_or(4.0))?;
    let n_traj = cli.n_traj.or(file.n_traj).unwrap_or(100);
    let record_stride = cli.record_stride.or(file.record_stride).unwrap_or(100);
    if n_traj == 0 {
        return Err("n_traj must be positive".into());
    }
    if record_stride == 0 {
        return Err("record_stride must be positive".into());
    }
    let config = RunConfig {
        mode,
        model,
        unraveling,
        initial,
        dt,
        t_max,
        n_traj,
        seed: cli.seed.or(file.seed).unwrap_or(0),
        record_stride,
        output_dir: cli.output_dir.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from("out")),
    };
    if config.steps() == 0 {
        return Err(format!("t_max {t_max} is shorter than dt {dt}"));
    }
    let model = config.build_model().map_err(|e| e.to_string())?;
    config.unraveling.check(&model).map_err(|e| format!("invalid unraveling: {e}"))?;
    config.initial_state(model.dim())?;
    Ok(config)
}
