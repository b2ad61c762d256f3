//! Benchmark configurations and hand-built seed controllers.

use alloc::vec;
use alloc::vec::Vec;

use crate::actor::SamConfig;
use crate::alm::AlmConfig;
use crate::critic::RppConfig;
use crate::envs::{BallBeamParams, PendulumParams};
use crate::error::Result;
use crate::fuzzy::{antecedents_for, FuzzySystem, Rule};
use crate::grid::{GridSpec, InkWindow, NarrowLine, Plane};
use crate::learner::{TrainConfig, TrainMode};

/// Offline pendulum run: random actions, 4-rule extraction.
pub fn pendulum_offline() -> TrainConfig {
    let p = PendulumParams::default();
    TrainConfig {
        mode: TrainMode::Offline,
        episodes: 20_000,
        rpp: pendulum_rpp(&p),
        alm: AlmConfig { max_depth: 2, ..AlmConfig::default() },
        ..TrainConfig::default()
    }
}

/// Online pendulum run; pair with [`pendulum_seed`].
pub fn pendulum_online() -> TrainConfig {
    let p = PendulumParams::default();
    TrainConfig {
        mode: TrainMode::Online,
        max_steps: 50_000,
        rpp: pendulum_rpp(&p),
        sam: SamConfig { var: 400.0, ..SamConfig::default() },
        ..TrainConfig::default()
    }
}

/// Critic axes for the pendulum: angle and per-step angle change.
pub fn pendulum_rpp(p: &PendulumParams) -> RppConfig {
    RppConfig {
        e_range: p.theta_range,
        ce_range: (p.theta_dot_range.0 * p.dt, p.theta_dot_range.1 * p.dt),
        reward_e: (-0.23, 0.23),
        reward_ce: (-0.98 * p.dt, 0.98 * p.dt),
        ..RppConfig::default()
    }
}

/// Critic axes for the ball and beam: position and per-step displacement.
///
/// The ball moves a small fraction of a cell per step on fine grids, so
/// most transitions would stay inside one cell and carry no signal; a
/// coarse 12 x 12 grid is used instead.
pub fn ballbeam_rpp(p: &BallBeamParams) -> RppConfig {
    RppConfig {
        e_range: (-p.half_length, p.half_length),
        ce_range: (p.velocity_range.0 * p.dt, p.velocity_range.1 * p.dt),
        reward_e: (-0.1 * p.half_length, 0.1 * p.half_length),
        reward_ce: (-0.1 * p.dt, 0.1 * p.dt),
        nx: 12,
        ny: 12,
        ..RppConfig::default()
    }
}

pub fn ballbeam_offline() -> TrainConfig {
    let p = BallBeamParams::default();
    TrainConfig {
        mode: TrainMode::Offline,
        episodes: 5000,
        rpp: ballbeam_rpp(&p),
        alm: AlmConfig { max_depth: 2, ..AlmConfig::default() },
        ..TrainConfig::default()
    }
}

/// Start states used to evaluate pendulum controllers: the part of the
/// play area from which the default cart can still catch the pole.
pub const PENDULUM_EVAL_BOX: [(f64, f64); 2] = [(-0.5, 0.5), (-1.0, 1.0)];

/// Start states used to evaluate ball-and-beam controllers: the ball is
/// released at rest, so rise time and overshoot describe a step response.
pub const BALLBEAM_EVAL_BOX: [(f64, f64); 2] = [(-0.8, 0.8), (0.0, 0.0)];

/// Four-rule pendulum controller `F = k . x` with light backing ink, ready
/// for online adaptation. Pass negated [`PENDULUM_GAINS`] for a controller
/// that pushes the pole over.
pub fn pendulum_seed(p: &PendulumParams, gains: &[f64; 2]) -> Result<FuzzySystem> {
    linear_seed(&[p.theta_range, p.theta_dot_range], (-p.force_max, p.force_max), gains, 32, 0.03)
}

/// Four-rule linear controller `u = k . x`, split once along each input.
///
/// Every rule carries the same lines `2 k_i x_i` with equal weights, so the
/// blended output is exactly `k . x` before clamping. Backing planes are
/// inked along those lines with `ink` per column and the lines are then
/// re-extracted from them, so refreshing an untouched system is a no-op.
pub fn linear_seed(input_ranges: &[(f64, f64)], output_range: (f64, f64), gains: &[f64], resolution: usize, ink: f64) -> Result<FuzzySystem> {
    let m = input_ranges.len();
    let mut regions: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for r in input_ranges {
        let mid = 0.5 * (r.0 + r.1);
        regions = regions
            .into_iter()
            .flat_map(|reg| {
                let mut lo = reg.clone();
                lo.push((r.0, mid));
                let mut hi = reg;
                hi.push((mid, r.1));
                [lo, hi]
            })
            .collect();
    }
    let ants = antecedents_for(&regions, input_ranges);
    let weight = 1.0 / m as f64;
    let full_lines: Vec<NarrowLine> = input_ranges
        .iter()
        .zip(gains)
        .map(|(r, k)| {
            let ys = (0..resolution)
                .map(|i| {
                    let x = r.0 + (r.1 - r.0) * i as f64 / (resolution - 1) as f64;
                    (k * x / weight).clamp(output_range.0, output_range.1)
                })
                .collect();
            NarrowLine::from_samples(*r, ys)
        })
        .collect::<Result<_>>()?;
    let rules = regions
        .iter()
        .zip(ants)
        .map(|(reg, antecedent)| Rule {
            antecedent,
            lines: full_lines.iter().zip(reg).map(|(l, r)| l.resampled(*r, resolution)).collect(),
            weights: vec![weight; m],
        })
        .collect();
    let mut planes = Vec::with_capacity(m);
    let window = InkWindow::pyramid(0, 1);
    for (r, line) in input_ranges.iter().zip(&full_lines) {
        let spec = GridSpec::new(*r, output_range, resolution, resolution)?;
        let mut plane = Plane::new(spec)?;
        for ix in 0..resolution {
            plane.drop_ink(spec.x_at(ix), line.y_at[ix], &window, ink)?;
        }
        planes.push(plane);
    }
    let mut fs = FuzzySystem::new(rules, input_ranges.to_vec(), output_range)?.with_backing_planes(planes)?;
    fs.refresh_lines()?;
    Ok(fs)
}

/// A stabilizing state-feedback gain for the default pendulum,
/// `F = 25 theta + 5 theta_dot`, in newtons per radian and per rad/s.
pub const PENDULUM_GAINS: [f64; 2] = [25.0, 5.0];
