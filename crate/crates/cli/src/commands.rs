//! `train`, `eval` and `export`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use ralm_core::critic::{Rpp, RppConfig, StatePoint};
use ralm_core::envs::{BallBeam, Environment, Pendulum};
use ralm_core::fuzzy::FuzzySystem;
use ralm_core::learner::{evaluate, play_area_starts, train_offline, train_online, TrainOutcome};
use ralm_core::presets::linear_seed;

use crate::config::{EnvKind, Mode, Plant, Resolved, RunConfig};
use crate::error::{invalid, usage, CliError, Result};
use crate::formats;

pub const CONFIG_FILE: &str = "config.toml";
pub const RULES_FILE: &str = "rules.ralmfs";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

/// Flags shared by every command that reads a configuration.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Configuration file (flat dotted `key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw; overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub env: Option<EnvKind>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output directory; overrides `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Model directory written by `train`, or a rule-base file.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    /// CSV of start states, one per row.
    #[arg(long)]
    pub initial_states: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Artifact {
    Rules,
    Planes,
    Rpp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Pgm,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(value_enum)]
    pub what: Artifact,
    /// Model directory written by `train` (a rule-base file is enough for `rules`).
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Export an untrained critic built from the configuration.
    #[arg(long)]
    pub fresh: bool,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Either benchmark behind one [`Environment`].
pub enum PlantEnv {
    Pendulum(Pendulum),
    BallBeam(BallBeam),
}

impl PlantEnv {
    pub fn new(plant: &Plant) -> Result<Self> {
        Ok(match plant {
            Plant::Pendulum(p) => PlantEnv::Pendulum(Pendulum::new(p.clone()).map_err(invalid)?),
            Plant::BallBeam(p) => PlantEnv::BallBeam(BallBeam::new(p.clone()).map_err(invalid)?),
        })
    }

    fn inner(&self) -> &dyn Environment {
        match self {
            PlantEnv::Pendulum(e) => e,
            PlantEnv::BallBeam(e) => e,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Environment {
        match self {
            PlantEnv::Pendulum(e) => e,
            PlantEnv::BallBeam(e) => e,
        }
    }
}

impl Environment for PlantEnv {
    fn input_ranges(&self) -> &[(f64, f64)] {
        self.inner().input_ranges()
    }
    fn actuator_range(&self) -> (f64, f64) {
        self.inner().actuator_range()
    }
    fn dt(&self) -> f64 {
        self.inner().dt()
    }
    fn reset(&mut self, inputs: &[f64]) -> ralm_core::Result<()> {
        self.inner_mut().reset(inputs)
    }
    fn observe(&self) -> Vec<f64> {
        self.inner().observe()
    }
    fn step(&mut self, action: f64) -> ralm_core::Result<()> {
        self.inner_mut().step(action)
    }
    fn error(&self) -> f64 {
        self.inner().error()
    }
    fn error_rate(&self) -> f64 {
        self.inner().error_rate()
    }
    fn state_point(&self) -> StatePoint {
        self.inner().state_point()
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

/// Loads `--config` (or `fallback` when it exists) and applies the flags.
fn load_config(o: &Overrides, fallback: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match (&o.config, fallback) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(p)) if p.is_file() => RunConfig::load(p)?,
        _ => RunConfig::default(),
    };
    cfg.seed = o.seed.or(cfg.seed);
    cfg.env = o.env.or(cfg.env);
    cfg.mode = o.mode.or(cfg.mode);
    Ok(cfg)
}

fn seed_system(r: &Resolved, env: &PlantEnv) -> Result<FuzzySystem> {
    let s = r.seed_controller.as_ref().ok_or_else(|| usage("online training needs a seed controller"))?;
    linear_seed(env.input_ranges(), env.actuator_range(), &s.gains, s.resolution, s.ink).map_err(invalid)
}

pub fn train(args: &TrainArgs) -> Result<PathBuf> {
    let mut cfg = load_config(&args.overrides, None)?;
    let out = args.out.clone().or(cfg.out.take()).unwrap_or_else(|| PathBuf::from("ralm-out"));
    let r = cfg.resolve()?;
    let mut env = PlantEnv::new(&r.plant)?;
    let outcome = match r.mode {
        Mode::Offline => train_offline(&mut env, &r.train),
        Mode::Online => {
            let seed = seed_system(&r, &env)?;
            train_online(&mut env, &seed, &r.train)
        }
    }
    .map_err(CliError::Train)?;
    log::info!(
        "{:?} {:?}: {} rules, {} steps, {} successes, stable at {:?}",
        r.env,
        r.mode,
        outcome.system.rules().len(),
        outcome.metrics.steps,
        outcome.metrics.success_count,
        outcome.metrics.steps_to_stable
    );
    create_dir(&out)?;
    write(&out.join(CONFIG_FILE), &cfg.to_flat_string())?;
    write_model(&out, &r, &outcome, env.input_count())?;
    Ok(out)
}

fn write_planes(dir: &Path, prefix: &str, planes: &[ralm_core::grid::Plane]) -> Result<()> {
    for (i, p) in planes.iter().enumerate() {
        write(&dir.join(format!("{prefix}_{i}.csv")), &formats::plane_csv(p))?;
        write(&dir.join(format!("{prefix}_{i}.pgm")), &formats::plane_pgm(p))?;
    }
    Ok(())
}

fn write_rpp(dir: &Path, rpp: &Rpp, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            write(&dir.join("rpp.csv"), &formats::plane_csv(rpp.plane()))?;
            write(&dir.join("rpp_mask.csv"), &formats::mask_csv(rpp.plane().spec(), rpp.mask()))
        }
        Format::Pgm => write(&dir.join("rpp.pgm"), &formats::plane_pgm(rpp.plane())),
    }
}

fn write_model(dir: &Path, r: &Resolved, o: &TrainOutcome, inputs: usize) -> Result<()> {
    write(&dir.join(RULES_FILE), &formats::rules_text(&o.system))?;
    write_rpp(dir, &o.rpp, Format::Csv)?;
    write_rpp(dir, &o.rpp, Format::Pgm)?;
    if let Some(aps) = &o.action_planes {
        write_planes(dir, "action_plane", aps.planes())?;
    }
    if let Some(planes) = o.system.backing_planes() {
        write_planes(dir, "backing_plane", planes)?;
    }
    write(&dir.join(TRAJECTORY_FILE), &formats::trajectory_csv(&o.metrics.trajectory, inputs))?;
    write(&dir.join(METRICS_FILE), &formats::metrics_csv(&o.metrics, None))?;
    if r.dump_samples {
        if let (Some(explored), Some(selected)) = (&o.explored, &o.selected) {
            write(&dir.join("explored.csv"), &formats::dataset_csv(explored))?;
            write(&dir.join("selected.csv"), &formats::dataset_csv(selected))?;
        }
    }
    Ok(())
}

/// Rule file and configuration fallback for a model path.
fn model_paths(model: &Path) -> (PathBuf, Option<PathBuf>) {
    if model.is_dir() {
        (model.join(RULES_FILE), Some(model.join(CONFIG_FILE)))
    } else {
        (model.to_path_buf(), None)
    }
}

pub struct EvalSummary {
    pub out: PathBuf,
    pub success_rate: f64,
    pub metrics: ralm_core::learner::Metrics,
}

pub fn eval(args: &EvalArgs) -> Result<EvalSummary> {
    let (rules_path, fallback) = model_paths(&args.model);
    let fs = formats::parse_rules(&read(&rules_path)?).map_err(|e| usage(format!("{}: {e}", rules_path.display())))?;
    let cfg = load_config(&args.overrides, fallback.as_deref())?;
    let r = cfg.resolve()?;
    let mut env = PlantEnv::new(&r.plant)?;
    if fs.input_count() != env.input_count() {
        return Err(usage(format!("model has {} inputs, the {:?} plant has {}", fs.input_count(), r.env, env.input_count())));
    }
    let starts = match &args.initial_states {
        Some(p) => formats::parse_states_csv(&read(p)?, env.input_count())?,
        None => play_area_starts(r.eval.starts, &r.eval.start_box, &r.train.rpp, env.dt(), r.eval.seed).map_err(invalid)?,
    };
    let ev = evaluate(&mut env, &fs, &starts, &r.train.rpp, r.eval.horizon).map_err(invalid)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("ralm-eval"));
    create_dir(&out)?;
    for (k, roll) in ev.rollouts.iter().enumerate() {
        write(&out.join(format!("trajectory_{k:03}.csv")), &formats::trajectory_csv(&roll.trajectory, env.input_count()))?;
    }
    let mut table = String::from("start,in_0,in_1,rise_time,overshoot,reached,settled\n");
    for (k, roll) in ev.rollouts.iter().enumerate() {
        let init: Vec<String> = roll.initial.iter().map(|v| v.to_string()).collect();
        let rise = roll.rise_time.map(|t| t.to_string()).unwrap_or_default();
        table.push_str(&format!("{k},{},{rise},{},{},{}\n", init.join(","), roll.overshoot, roll.reached, roll.settled));
    }
    write(&out.join("rollouts.csv"), &table)?;
    let rate = ev.success_rate();
    write(&out.join("summary.csv"), &formats::metrics_csv(&ev.metrics, Some(rate)))?;
    Ok(EvalSummary { out, success_rate: rate, metrics: ev.metrics })
}

fn plane_files(dir: &Path) -> Result<Vec<PathBuf>> {
    for prefix in ["action_plane", "backing_plane"] {
        let files: Vec<PathBuf> = (0..).map(|i| dir.join(format!("{prefix}_{i}.csv"))).take_while(|p| p.is_file()).collect();
        if !files.is_empty() {
            return Ok(files);
        }
    }
    Err(usage(format!("{}: no plane dumps found", dir.display())))
}

pub fn export(args: &ExportArgs) -> Result<Vec<PathBuf>> {
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("ralm-export"));
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, text: String| -> Result<()> {
        write(&path, &text)?;
        written.push(path);
        Ok(())
    };
    match args.what {
        Artifact::Rules => {
            if args.format != Format::Csv {
                return Err(usage("rules export only as RALM-FS text"));
            }
            let (rules_path, _) = model_paths(&args.model);
            let fs = formats::parse_rules(&read(&rules_path)?)?;
            create_dir(&out)?;
            emit(out.join(RULES_FILE), formats::rules_text(&fs))?;
        }
        Artifact::Planes => {
            let files = plane_files(&args.model)?;
            create_dir(&out)?;
            for f in files {
                let plane = formats::parse_plane_csv(&read(&f)?)?;
                let stem = f.file_stem().unwrap().to_string_lossy().into_owned();
                match args.format {
                    Format::Csv => emit(out.join(format!("{stem}.csv")), formats::plane_csv(&plane))?,
                    Format::Pgm => emit(out.join(format!("{stem}.pgm")), formats::plane_pgm(&plane))?,
                }
            }
        }
        Artifact::Rpp => {
            let rpp = if args.fresh {
                let fallback = args.model.join(CONFIG_FILE);
                let r = load_config(&args.overrides, Some(&fallback))?.resolve()?;
                Rpp::new(r.train.rpp).map_err(invalid)?
            } else {
                let plane = formats::parse_plane_csv(&read(&args.model.join("rpp.csv"))?)?;
                let (_, mask) = formats::parse_mask_csv(&read(&args.model.join("rpp_mask.csv"))?)?;
                let fallback = args.model.join(CONFIG_FILE);
                let r = load_config(&args.overrides, Some(&fallback))?.resolve()?;
                stored_rpp(r.train.rpp, plane, mask)?
            };
            create_dir(&out)?;
            match args.format {
                Format::Csv => {
                    emit(out.join("rpp.csv"), formats::plane_csv(rpp.plane()))?;
                    emit(out.join("rpp_mask.csv"), formats::mask_csv(rpp.plane().spec(), rpp.mask()))?;
                }
                Format::Pgm => emit(out.join("rpp.pgm"), formats::plane_pgm(rpp.plane()))?,
            }
        }
    }
    Ok(written)
}

fn stored_rpp(cfg: RppConfig, plane: ralm_core::grid::Plane, mask: Vec<ralm_core::critic::Region>) -> Result<Rpp> {
    Rpp::from_parts(cfg, plane, mask).map_err(|e| usage(format!("stored critic does not match its configuration: {e}")))
}
