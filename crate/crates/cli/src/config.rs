//! Run configuration: flat dotted `key = value` files layered over the
//! built-in presets.
//!
//! ```text
//! env = "pendulum"
//! mode = "offline"
//! seed = 7
//! train.episodes = 20000
//! rpp.window.rx = 0
//! ```
//!
//! Every key is optional. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use ralm_core::actor::SamConfig;
use ralm_core::envs::{BallBeamParams, PendulumParams};
use ralm_core::grid::{InkWindow, WindowShape};
use ralm_core::learner::{DivergenceGuard, TrainConfig, TrainMode};
use ralm_core::presets;
use serde::{Deserialize, Serialize};
use serde_with::skip_serializing_none;

use crate::error::{invalid, usage, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Pendulum,
    Ballbeam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Offline,
    Online,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Pyramid,
    Gaussian,
}

type Range = [f64; 2];

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: Option<EnvKind>,
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub train: TrainKeys,
    pub rpp: RppKeys,
    pub sam: SamKeys,
    pub alm: AlmKeys,
    pub pendulum: PendulumKeys,
    pub ballbeam: BallBeamKeys,
    pub online: OnlineKeys,
    pub eval: EvalKeys,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowKeys {
    pub shape: Option<Shape>,
    pub rx: Option<usize>,
    pub ry: Option<usize>,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainKeys {
    pub episodes: Option<usize>,
    pub max_steps: Option<usize>,
    pub episode_steps: Option<usize>,
    pub action_nx: Option<usize>,
    pub action_ny: Option<usize>,
    pub action_window: WindowKeys,
    pub refresh_period: Option<usize>,
    pub adapt: Option<bool>,
    pub stable_steps: Option<usize>,
    pub start_box: Option<Vec<Range>>,
    pub log_head: Option<usize>,
    pub log_tail: Option<usize>,
    /// Abort once the penalty rate over `divergence_window` steps exceeds
    /// `divergence_fraction`, checked from step `divergence_after` on.
    pub divergence_after: Option<usize>,
    pub divergence_window: Option<usize>,
    pub divergence_fraction: Option<f64>,
    /// Also write the explored and selected samples (offline only).
    pub dump_samples: Option<bool>,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RppKeys {
    pub e_range: Option<Range>,
    pub ce_range: Option<Range>,
    pub reward_e: Option<Range>,
    pub reward_ce: Option<Range>,
    pub penalty_fraction: Option<f64>,
    pub penalty_value: Option<f64>,
    pub lambda_reward: Option<f64>,
    pub lambda_penalty: Option<f64>,
    pub window: WindowKeys,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamKeys {
    pub var: Option<f64>,
    pub alpha: Option<f64>,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlmKeys {
    pub spread_threshold: Option<f64>,
    pub max_depth: Option<usize>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub window: WindowKeys,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PendulumKeys {
    pub cart_mass: Option<f64>,
    pub pole_mass: Option<f64>,
    pub half_length: Option<f64>,
    pub gravity: Option<f64>,
    pub force_max: Option<f64>,
    pub theta_range: Option<Range>,
    pub theta_dot_range: Option<Range>,
    pub dt: Option<f64>,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallBeamKeys {
    pub ball_factor: Option<f64>,
    pub gravity: Option<f64>,
    pub half_length: Option<f64>,
    pub angle_max: Option<f64>,
    pub velocity_range: Option<Range>,
    pub dt: Option<f64>,
}

/// Linear seed controller for online runs.
#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineKeys {
    pub seed_gains: Option<Vec<f64>>,
    pub seed_resolution: Option<usize>,
    pub seed_ink: Option<f64>,
}

#[skip_serializing_none]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalKeys {
    pub starts: Option<usize>,
    pub horizon: Option<f64>,
    pub start_box: Option<Vec<Range>>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Plant {
    Pendulum(PendulumParams),
    BallBeam(BallBeamParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedController {
    pub gains: Vec<f64>,
    pub resolution: usize,
    pub ink: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub starts: usize,
    pub horizon: f64,
    pub start_box: Vec<(f64, f64)>,
    pub seed: u64,
}

/// A configuration with every default filled in and checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub env: EnvKind,
    pub mode: Mode,
    pub seed: u64,
    pub plant: Plant,
    pub train: TrainConfig,
    pub seed_controller: Option<SeedController>,
    pub eval: EvalSettings,
    pub dump_samples: bool,
}

pub const DEFAULT_SEED: u64 = 1;

fn pair(r: Range) -> (f64, f64) {
    (r[0], r[1])
}

fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
    if let Some(v) = src {
        *dst = v.clone();
    }
}

fn set_range(dst: &mut (f64, f64), src: &Option<Range>) {
    if let Some(r) = src {
        *dst = pair(*r);
    }
}

impl WindowKeys {
    fn apply(&self, base: &InkWindow) -> InkWindow {
        let shape = match self.shape {
            Some(Shape::Pyramid) => WindowShape::Pyramid,
            Some(Shape::Gaussian) => WindowShape::Gaussian,
            None => base.shape(),
        };
        let (rx, ry) = base.radii();
        InkWindow::new(shape, self.rx.unwrap_or(rx), self.ry.unwrap_or(ry))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    /// One `dotted.key = value` line per set key, sorted by key.
    pub fn to_flat_string(&self) -> String {
        let value = toml::Value::try_from(self).expect("config serializes to a table");
        let mut lines = Vec::new();
        flatten("", &value, &mut lines);
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let env = self.env.unwrap_or(EnvKind::Pendulum);
        let mode = self.mode.unwrap_or(Mode::Offline);
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        let (plant, mut train, default_gains, eval_box, starts) = match env {
            EnvKind::Pendulum => {
                let mut p = PendulumParams::default();
                let k = &self.pendulum;
                set(&mut p.cart_mass, &k.cart_mass);
                set(&mut p.pole_mass, &k.pole_mass);
                set(&mut p.half_length, &k.half_length);
                set(&mut p.gravity, &k.gravity);
                set(&mut p.force_max, &k.force_max);
                set_range(&mut p.theta_range, &k.theta_range);
                set_range(&mut p.theta_dot_range, &k.theta_dot_range);
                set(&mut p.dt, &k.dt);
                p.validate().map_err(invalid)?;
                let mut train = match mode {
                    Mode::Offline => presets::pendulum_offline(),
                    Mode::Online => presets::pendulum_online(),
                };
                train.rpp = presets::pendulum_rpp(&p);
                let gains = presets::PENDULUM_GAINS.iter().map(|g| -g).collect();
                (Plant::Pendulum(p), train, Some(gains), presets::PENDULUM_EVAL_BOX, 50)
            }
            EnvKind::Ballbeam => {
                let mut p = BallBeamParams::default();
                let k = &self.ballbeam;
                set(&mut p.ball_factor, &k.ball_factor);
                set(&mut p.gravity, &k.gravity);
                set(&mut p.half_length, &k.half_length);
                set(&mut p.angle_max, &k.angle_max);
                set_range(&mut p.velocity_range, &k.velocity_range);
                set(&mut p.dt, &k.dt);
                p.validate().map_err(invalid)?;
                let mut train = presets::ballbeam_offline();
                if mode == Mode::Online {
                    train.mode = TrainMode::Online;
                }
                train.rpp = presets::ballbeam_rpp(&p);
                (Plant::BallBeam(p), train, None, presets::BALLBEAM_EVAL_BOX, 20)
            }
        };

        let t = &self.train;
        set(&mut train.episodes, &t.episodes);
        set(&mut train.max_steps, &t.max_steps);
        set(&mut train.episode_steps, &t.episode_steps);
        set(&mut train.action_nx, &t.action_nx);
        set(&mut train.action_ny, &t.action_ny);
        train.action_window = t.action_window.apply(&train.action_window);
        set(&mut train.refresh_period, &t.refresh_period);
        set(&mut train.adapt, &t.adapt);
        set(&mut train.stable_steps, &t.stable_steps);
        if let Some(b) = &t.start_box {
            train.start_box = Some(b.iter().copied().map(pair).collect());
        }
        set(&mut train.log_head, &t.log_head);
        set(&mut train.log_tail, &t.log_tail);
        train.divergence = match (t.divergence_after, t.divergence_window, t.divergence_fraction) {
            (None, None, None) => None,
            (after, Some(window), Some(max_fraction)) => Some(DivergenceGuard { after: after.unwrap_or(0), window, max_fraction }),
            _ => return Err(usage("train.divergence_window and train.divergence_fraction must be set together")),
        };

        let r = &self.rpp;
        set_range(&mut train.rpp.e_range, &r.e_range);
        set_range(&mut train.rpp.ce_range, &r.ce_range);
        set_range(&mut train.rpp.reward_e, &r.reward_e);
        set_range(&mut train.rpp.reward_ce, &r.reward_ce);
        set(&mut train.rpp.penalty_fraction, &r.penalty_fraction);
        set(&mut train.rpp.penalty_value, &r.penalty_value);
        set(&mut train.rpp.lambda_reward, &r.lambda_reward);
        set(&mut train.rpp.lambda_penalty, &r.lambda_penalty);
        train.rpp.window = r.window.apply(&train.rpp.window);
        set(&mut train.rpp.nx, &r.nx);
        set(&mut train.rpp.ny, &r.ny);

        train.sam = SamConfig {
            var: self.sam.var.unwrap_or(train.sam.var),
            alpha: self.sam.alpha.unwrap_or(train.sam.alpha),
            seed,
        };

        let a = &self.alm;
        set(&mut train.alm.spread_threshold, &a.spread_threshold);
        set(&mut train.alm.max_depth, &a.max_depth);
        set(&mut train.alm.nx, &a.nx);
        set(&mut train.alm.ny, &a.ny);
        train.alm.window = a.window.apply(&train.alm.window);
        train.validate().map_err(invalid)?;

        let seed_controller = match mode {
            Mode::Offline => None,
            Mode::Online => {
                let gains = self
                    .online
                    .seed_gains
                    .clone()
                    .or(default_gains)
                    .ok_or_else(|| usage("online.seed_gains is required for this environment"))?;
                if gains.len() != 2 {
                    return Err(usage("online.seed_gains needs one gain per input (2)"));
                }
                Some(SeedController {
                    gains,
                    resolution: self.online.seed_resolution.unwrap_or(32),
                    ink: self.online.seed_ink.unwrap_or(0.03),
                })
            }
        };

        let e = &self.eval;
        let eval = EvalSettings {
            starts: e.starts.unwrap_or(starts),
            horizon: e.horizon.unwrap_or(10.0),
            start_box: match &e.start_box {
                Some(b) => b.iter().copied().map(pair).collect(),
                None => eval_box.to_vec(),
            },
            seed: e.seed.unwrap_or(seed),
        };
        if !(eval.horizon.is_finite() && eval.horizon > 0.0) {
            return Err(usage("eval.horizon must be finite and positive"));
        }
        if eval.start_box.len() != 2 {
            return Err(usage("eval.start_box needs one interval per input (2)"));
        }

        Ok(Resolved {
            env,
            mode,
            seed,
            plant,
            train,
            seed_controller,
            eval,
            dump_samples: self.train.dump_samples.unwrap_or(false),
        })
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        leaf => out.push(format!("{prefix} = {leaf}")),
    }
}
