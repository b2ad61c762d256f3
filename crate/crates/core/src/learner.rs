//! Reinforcement training loops built on the critic, the action planes and
//! ALM rule extraction.
//!
//! Offline training explores with uniformly random actions, credits each
//! action with the critic's TD change, drops the samples that landed on
//! negative action-plane cells and fits a rule base to the rest. Online
//! training starts from a seed rule base, explores around it with the
//! stochastic action modifier and periodically re-extracts its lines from
//! the credited planes.
//!
//! Both plants observe `(error, error rate)`; the critic axes are the error
//! and its per-step difference, so the reward box maps onto the fuzzy inputs
//! as `(reward_e, reward_ce / dt)`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::actor::{modulate, RngStream, SamConfig};
use crate::alm::{alm_fit, AlmConfig, Dataset};
use crate::critic::{Region, Rpp, RppConfig, StatePoint};
use crate::envs::Environment;
use crate::error::{config_err, finite, Error, Result};
use crate::fuzzy::FuzzySystem;
use crate::grid::{GridSpec, InkWindow, Plane, DEFAULT_RESOLUTION};

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub prev_inputs: Vec<f64>,
    pub prev_action: f64,
    pub prev_point: StatePoint,
    pub cur_point: StatePoint,
}

/// One input-vs-action plane per input. Each cell holds the running mean of
/// the window-weighted deltas credited to it.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPlaneSet {
    planes: Vec<Plane>,
    sums: Vec<Plane>,
    counts: Vec<Vec<u32>>,
}

impl ActionPlaneSet {
    pub fn new(input_ranges: &[(f64, f64)], action_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let mut planes = Vec::with_capacity(input_ranges.len());
        for r in input_ranges {
            planes.push(Plane::new(GridSpec::new(*r, action_range, nx, ny)?)?);
        }
        let counts = vec![vec![0; nx * ny]; planes.len()];
        Ok(ActionPlaneSet { sums: planes.clone(), planes, counts })
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn counts(&self, input: usize) -> &[u32] {
        &self.counts[input]
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    /// Credits `delta` to the previous action on every input plane.
    pub fn update(&mut self, tr: &Transition, delta: f64, window: &InkWindow) -> Result<()> {
        finite(delta, "delta")?;
        if tr.prev_inputs.len() != self.planes.len() {
            return Err(Error::DimensionMismatch { expected: self.planes.len(), found: tr.prev_inputs.len() });
        }
        for (i, x) in tr.prev_inputs.iter().enumerate() {
            let spec = *self.planes[i].spec();
            let (ix, iy) = spec.cell_of(finite(*x, "input")?, finite(tr.prev_action, "action")?)?;
            for (cx, cy, w) in window.footprint(ix, iy, spec.nx, spec.ny) {
                let k = cy * spec.nx + cx;
                let sum = self.sums[i].get(cx, cy) + w * delta;
                self.sums[i].set(cx, cy, sum);
                self.counts[i][k] += 1;
                self.planes[i].set(cx, cy, sum / self.counts[i][k] as f64);
            }
        }
        Ok(())
    }

    pub fn value_at(&self, input: usize, x: f64, action: f64) -> Result<f64> {
        self.planes[input].value_at(x, action)
    }
}

/// Keeps the samples whose action is non-negative on every input plane.
pub fn filter_data(dataset: &Dataset, aps: &ActionPlaneSet) -> Result<Dataset> {
    if dataset.input_count() != aps.len() {
        return Err(Error::DimensionMismatch { expected: aps.len(), found: dataset.input_count() });
    }
    let mut failure = None;
    let kept = dataset.filtered(|s| {
        s.inputs.iter().enumerate().all(|(i, x)| match aps.value_at(i, *x, s.output) {
            Ok(v) => v >= 0.0,
            Err(e) => {
                failure.get_or_insert(e);
                false
            }
        })
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if kept.is_empty() {
        return Err(Error::EmptyFilter);
    }
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Offline,
    Online,
}

/// Abort online training when penalties keep piling up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceGuard {
    /// Steps before the guard arms.
    pub after: usize,
    pub window: usize,
    pub max_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// Offline: number of exploration episodes.
    pub episodes: usize,
    /// Online: total step budget.
    pub max_steps: usize,
    /// Episode cap; an episode also ends on entering the penalty area.
    pub episode_steps: usize,
    pub rpp: RppConfig,
    pub sam: SamConfig,
    pub alm: AlmConfig,
    pub action_nx: usize,
    pub action_ny: usize,
    pub action_window: InkWindow,
    /// Online: steps between line refreshes.
    pub refresh_period: usize,
    /// Online: when false the seed system is never modified.
    pub adapt: bool,
    /// Online: penalty-free steps that count as stable.
    pub stable_steps: usize,
    pub divergence: Option<DivergenceGuard>,
    /// Episode starts are drawn from this box (in input units) when set,
    /// rejecting only penalty states; otherwise from the full input ranges,
    /// rejecting everything outside the play area.
    pub start_box: Option<Vec<(f64, f64)>>,
    /// Logged steps kept from the start and from the end of the run.
    pub log_head: usize,
    pub log_tail: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: TrainMode::Offline,
            episodes: 5000,
            max_steps: 50_000,
            episode_steps: 500,
            rpp: RppConfig::default(),
            sam: SamConfig::default(),
            alm: AlmConfig::default(),
            action_nx: DEFAULT_RESOLUTION,
            action_ny: DEFAULT_RESOLUTION,
            action_window: InkWindow::default(),
            refresh_period: 50,
            adapt: true,
            stable_steps: 1000,
            divergence: None,
            start_box: None,
            log_head: 1000,
            log_tail: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.rpp.validate()?;
        self.sam.validate()?;
        self.alm.validate()?;
        if self.episode_steps == 0 || self.stable_steps == 0 {
            return Err(config_err("episode and stability step limits must be positive"));
        }
        if self.mode == TrainMode::Online && (self.max_steps == 0 || self.refresh_period == 0) {
            return Err(config_err("online training needs positive max_steps and refresh_period"));
        }
        if let Some(g) = &self.divergence {
            if g.window == 0 || !(0.0..=1.0).contains(&g.max_fraction) {
                return Err(config_err("divergence guard needs a positive window and a fraction in [0, 1]"));
            }
        }
        if let Some(b) = &self.start_box {
            if b.iter().any(|r| !(r.0 <= r.1)) {
                return Err(config_err("start box intervals must satisfy min <= max"));
            }
        }
        Ok(())
    }
}

/// One logged control step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub t: f64,
    pub inputs: Vec<f64>,
    pub action: f64,
    pub e: f64,
    pub ce: f64,
    pub rpp_value: f64,
    pub delta: f64,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    /// Mean rise time over settled rollouts, seconds.
    pub rise_time: Option<f64>,
    /// Worst overshoot over settled rollouts, percent of initial displacement.
    pub overshoot: f64,
    /// Training: entries into the reward area. Evaluation: settled rollouts.
    pub success_count: usize,
    pub steps_to_stable: Option<usize>,
    pub episodes: usize,
    pub steps: usize,
    pub penalty_count: usize,
    pub trajectory: Vec<LogRow>,
}

struct Log {
    head: Vec<LogRow>,
    tail: VecDeque<LogRow>,
    head_cap: usize,
    tail_cap: usize,
}

impl Log {
    fn new(head_cap: usize, tail_cap: usize) -> Self {
        Log { head: Vec::new(), tail: VecDeque::new(), head_cap, tail_cap }
    }

    fn push(&mut self, row: LogRow) {
        if self.head.len() < self.head_cap {
            self.head.push(row);
        } else if self.tail_cap > 0 {
            if self.tail.len() == self.tail_cap {
                self.tail.pop_front();
            }
            self.tail.push_back(row);
        }
    }

    fn finish(self) -> Vec<LogRow> {
        let mut rows = self.head;
        rows.extend(self.tail);
        rows
    }
}

/// Fuzzy inputs' reward ranges: `(reward_e, reward_ce / dt)`.
pub fn reward_input_ranges(rpp: &RppConfig, dt: f64) -> Vec<(f64, f64)> {
    vec![rpp.reward_e, (rpp.reward_ce.0 / dt, rpp.reward_ce.1 / dt)]
}

/// The rule base plus its reward-area rescaling, switched on the state.
#[derive(Debug, Clone)]
pub struct Controller {
    base: FuzzySystem,
    scaled: FuzzySystem,
    reward: Vec<(f64, f64)>,
}

impl Controller {
    pub fn new(base: FuzzySystem, rpp: &RppConfig, dt: f64) -> Result<Self> {
        let reward = reward_input_ranges(rpp, dt);
        let scaled = base.scale_for_reward(&reward)?;
        Ok(Controller { base, scaled, reward })
    }

    pub fn system(&self) -> &FuzzySystem {
        &self.base
    }

    pub fn into_system(self) -> FuzzySystem {
        self.base
    }

    fn rescale(&mut self) -> Result<()> {
        self.scaled = self.base.scale_for_reward(&self.reward)?;
        Ok(())
    }

    /// The scaled system answers inside the reward area, the base one elsewhere.
    pub fn act(&self, inputs: &[f64], in_reward: bool) -> Result<f64> {
        if in_reward {
            self.scaled.infer(inputs)
        } else {
            self.base.infer(inputs)
        }
    }
}

fn reset_random<E: Environment>(env: &mut E, rng: &mut RngStream, cfg: &TrainConfig) -> Result<()> {
    let (bounds, explicit) = match &cfg.start_box {
        Some(b) => (b.clone(), true),
        None => (env.input_ranges().to_vec(), false),
    };
    if bounds.len() != env.input_count() {
        return Err(Error::DimensionMismatch { expected: env.input_count(), found: bounds.len() });
    }
    let mut x = vec![0.0; bounds.len()];
    for _ in 0..10_000 {
        for (v, b) in x.iter_mut().zip(&bounds) {
            *v = rng.uniform(b.0, b.1);
        }
        env.reset(&x)?;
        let region = cfg.rpp.classify(env.state_point());
        let ok = if explicit { region != Region::Penalty } else { region == Region::Play };
        if ok {
            return Ok(());
        }
    }
    Err(config_err("could not sample a start state outside the penalty area"))
}

/// Everything produced by a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub system: FuzzySystem,
    pub rpp: Rpp,
    /// Offline only.
    pub action_planes: Option<ActionPlaneSet>,
    /// Offline only: the explored samples and the ones kept by the filter.
    pub explored: Option<Dataset>,
    pub selected: Option<Dataset>,
    pub metrics: Metrics,
}

/// Random-action exploration followed by filtering and rule extraction.
pub fn train_offline<E: Environment>(env: &mut E, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.episodes == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = RngStream::new(cfg.sam.seed);
    let mut rpp = Rpp::new(cfg.rpp.clone())?;
    let ranges = env.input_ranges().to_vec();
    let actuator = env.actuator_range();
    let mut aps = ActionPlaneSet::new(&ranges, actuator, cfg.action_nx, cfg.action_ny)?;
    let mut data = Dataset::new(ranges, actuator)?;
    let mut log = Log::new(cfg.log_head, cfg.log_tail);
    let mut metrics = Metrics::default();
    let dt = env.dt();

    for _ in 0..cfg.episodes {
        reset_random(env, &mut rng, cfg)?;
        let mut prev = env.state_point();
        metrics.episodes += 1;
        for _ in 0..cfg.episode_steps {
            let inputs = env.observe();
            let action = rng.uniform(actuator.0, actuator.1);
            env.step(action)?;
            let cur = env.state_point();
            let delta = rpp.td_update(prev, cur)?;
            let tr = Transition { prev_inputs: inputs, prev_action: action, prev_point: prev, cur_point: cur };
            aps.update(&tr, delta, &cfg.action_window)?;
            data.push(&tr.prev_inputs, action)?;
            let region = rpp.classify(cur);
            if region == Region::Reward && rpp.classify(prev) != Region::Reward {
                metrics.success_count += 1;
            }
            metrics.steps += 1;
            log.push(LogRow {
                step: metrics.steps,
                t: metrics.steps as f64 * dt,
                inputs: tr.prev_inputs,
                action,
                e: cur.e,
                ce: cur.ce,
                rpp_value: rpp.value(cur)?,
                delta,
                region,
            });
            prev = cur;
            if region == Region::Penalty {
                metrics.penalty_count += 1;
                break;
            }
        }
    }
    let selected = filter_data(&data, &aps)?;
    log::info!("offline: {} of {} samples kept", selected.len(), data.len());
    let system = alm_fit(&selected, &cfg.alm)?;
    metrics.trajectory = log.finish();
    Ok(TrainOutcome {
        system,
        rpp,
        action_planes: Some(aps),
        explored: Some(data),
        selected: Some(selected),
        metrics,
    })
}

/// Online adaptation of `seed` through critic-gated exploration.
///
/// Stops once `stable_steps` consecutive penalty-free steps have been
/// observed; `steps_to_stable` is the first step of that run (1-based).
pub fn train_online<E: Environment>(env: &mut E, seed: &FuzzySystem, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if seed.input_count() != env.input_count() {
        return Err(Error::DimensionMismatch { expected: env.input_count(), found: seed.input_count() });
    }
    if cfg.adapt && seed.backing_planes().is_none() {
        return Err(Error::NoBackingPlanes);
    }
    let dt = env.dt();
    let actuator = env.actuator_range();
    let mut rng = RngStream::new(cfg.sam.seed);
    let mut rpp = Rpp::new(cfg.rpp.clone())?;
    let mut ctl = Controller::new(seed.clone(), &cfg.rpp, dt)?;
    let mut log = Log::new(cfg.log_head, cfg.log_tail);
    let mut metrics = Metrics::default();
    let mut recent: VecDeque<bool> = VecDeque::new();
    let mut recent_penalties = 0usize;
    let (mut run, mut run_start) = (0usize, 0usize);
    let mut episode_left = 0usize;
    let mut prev = StatePoint::new(0.0, 0.0);

    for step in 1..=cfg.max_steps {
        if episode_left == 0 {
            reset_random(env, &mut rng, cfg)?;
            prev = env.state_point();
            episode_left = cfg.episode_steps;
            metrics.episodes += 1;
        }
        let inputs = env.observe();
        let in_reward = rpp.classify(prev) == Region::Reward;
        let asn = ctl.act(&inputs, in_reward)?;
        let action = modulate(asn, rpp.value(prev)?, &cfg.sam, &mut rng)?.clamp(actuator.0, actuator.1);
        env.step(action)?;
        let cur = env.state_point();
        let delta = rpp.td_update(prev, cur)?;
        if cfg.adapt {
            if let Some(planes) = ctl.base.backing_planes_mut() {
                for (plane, x) in planes.iter_mut().zip(&inputs) {
                    plane.drop_ink(*x, action, &cfg.action_window, delta)?;
                }
            }
            if step % cfg.refresh_period == 0 {
                ctl.base.refresh_lines()?;
                ctl.rescale()?;
            }
        }
        let region = rpp.classify(cur);
        if region == Region::Reward && rpp.classify(prev) != Region::Reward {
            metrics.success_count += 1;
        }
        metrics.steps = step;
        log.push(LogRow {
            step,
            t: step as f64 * dt,
            inputs,
            action,
            e: cur.e,
            ce: cur.ce,
            rpp_value: rpp.value(cur)?,
            delta,
            region,
        });
        let penalty = region == Region::Penalty;
        if penalty {
            metrics.penalty_count += 1;
            run = 0;
            episode_left = 0;
        } else {
            if run == 0 {
                run_start = step;
            }
            run += 1;
            episode_left -= 1;
            if run >= cfg.stable_steps {
                metrics.steps_to_stable = Some(run_start);
                break;
            }
        }
        if let Some(g) = &cfg.divergence {
            recent.push_back(penalty);
            recent_penalties += penalty as usize;
            if recent.len() > g.window {
                recent_penalties -= recent.pop_front().unwrap() as usize;
            }
            let fraction = recent_penalties as f64 / recent.len() as f64;
            if step >= g.after && recent.len() == g.window && fraction > g.max_fraction {
                return Err(Error::Diverged { step, fraction, window: g.window });
            }
        }
        prev = cur;
    }
    metrics.trajectory = log.finish();
    Ok(TrainOutcome {
        system: ctl.into_system(),
        rpp,
        action_planes: None,
        explored: None,
        selected: None,
        metrics,
    })
}

/// Result of one closed-loop rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub initial: Vec<f64>,
    /// Time at which the error entered the reward band for good.
    pub rise_time: Option<f64>,
    pub overshoot: f64,
    /// The reward area was entered at least once.
    pub reached: bool,
    /// The error stayed in band to the end and the final state is in the
    /// reward area.
    pub settled: bool,
    pub trajectory: Vec<LogRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: Metrics,
    pub rollouts: Vec<Rollout>,
}

impl Evaluation {
    pub fn success_rate(&self) -> f64 {
        if self.rollouts.is_empty() {
            0.0
        } else {
            self.metrics.success_count as f64 / self.rollouts.len() as f64
        }
    }
}

/// Rise time over an error series sampled every `dt`: the first time after
/// which every sample stays inside `band`.
pub fn rise_time(errors: &[f64], band: (f64, f64), dt: f64) -> Option<f64> {
    let inside = |e: &f64| band.0 <= *e && *e <= band.1;
    if !errors.last().is_some_and(inside) {
        return None;
    }
    let first = errors.iter().rposition(|e| !inside(e)).map_or(0, |k| k + 1);
    Some(first as f64 * dt)
}

/// Largest excursion past the setpoint beyond the opposite edge of `band`,
/// in percent of the initial displacement.
pub fn overshoot(errors: &[f64], band: (f64, f64)) -> f64 {
    let Some(&e0) = errors.first() else { return 0.0 };
    if e0 == 0.0 {
        return 0.0;
    }
    let s = e0.signum();
    let edge = if s > 0.0 { -band.0 } else { band.1 };
    let peak = errors.iter().map(|e| -s * e).fold(0.0, f64::max);
    100.0 * (peak - edge).max(0.0) / e0.abs()
}

/// Closed-loop rollouts of `fs` without exploration noise.
pub fn evaluate<E: Environment>(env: &mut E, fs: &FuzzySystem, initial_states: &[Vec<f64>], rpp: &RppConfig, horizon: f64) -> Result<Evaluation> {
    rpp.validate()?;
    let dt = env.dt();
    let steps = libm::round(horizon / dt) as usize;
    let ctl = Controller::new(fs.clone(), rpp, dt)?;
    let actuator = env.actuator_range();
    let mut rollouts = Vec::with_capacity(initial_states.len());
    for initial in initial_states {
        env.reset(initial)?;
        let mut prev = env.state_point();
        let mut errors = Vec::with_capacity(steps + 1);
        errors.push(prev.e);
        let mut reached = rpp.classify(prev) == Region::Reward;
        let mut trajectory = Vec::with_capacity(steps);
        for step in 1..=steps {
            let inputs = env.observe();
            let in_reward = rpp.classify(prev) == Region::Reward;
            let action = ctl.act(&inputs, in_reward)?.clamp(actuator.0, actuator.1);
            env.step(action)?;
            let cur = env.state_point();
            let region = rpp.classify(cur);
            reached |= region == Region::Reward;
            errors.push(cur.e);
            trajectory.push(LogRow {
                step,
                t: step as f64 * dt,
                inputs,
                action,
                e: cur.e,
                ce: cur.ce,
                rpp_value: 0.0,
                delta: 0.0,
                region,
            });
            prev = cur;
        }
        let band = rpp.reward_e;
        let rise = rise_time(&errors, band, dt);
        let settled = rise.is_some() && rpp.classify(prev) == Region::Reward;
        rollouts.push(Rollout {
            initial: initial.clone(),
            rise_time: rise,
            overshoot: overshoot(&errors, band),
            reached,
            settled,
            trajectory,
        });
    }
    let settled: Vec<f64> = rollouts.iter().filter(|r| r.settled).filter_map(|r| r.rise_time).collect();
    let metrics = Metrics {
        rise_time: if settled.is_empty() { None } else { Some(settled.iter().sum::<f64>() / settled.len() as f64) },
        overshoot: rollouts.iter().filter(|r| r.settled).map(|r| r.overshoot).fold(0.0, f64::max),
        success_count: settled.len(),
        episodes: rollouts.len(),
        steps: rollouts.len() * steps,
        ..Metrics::default()
    };
    Ok(Evaluation { metrics, rollouts })
}

/// Uniform random states from `bounds` that lie in the play area.
pub fn play_area_starts(count: usize, bounds: &[(f64, f64)], rpp: &RppConfig, dt: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    if bounds.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: bounds.len() });
    }
    let mut rng = RngStream::new(seed);
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        tries += 1;
        if tries > 1000 * count.max(1) {
            return Err(config_err("start box has (almost) no play-area states"));
        }
        let x: Vec<f64> = bounds.iter().map(|b| rng.uniform(b.0, b.1)).collect();
        if rpp.classify(StatePoint::new(x[0], x[1] * dt)) == Region::Play {
            out.push(x);
        }
    }
    Ok(out)
}
