use ralm_core::actor::RngStream;
use ralm_core::critic::{Region, Rpp, RppConfig, StatePoint};
use ralm_core::envs::{Environment, Pendulum, PendulumParams};
use ralm_core::grid::InkWindow;
use ralm_core::learner::{train_offline, train_online, ActionPlaneSet, TrainConfig, Transition};
use ralm_core::presets::{pendulum_offline, pendulum_online, pendulum_rpp, pendulum_seed, PENDULUM_GAINS};
use ralm_core::{Error, Result};

/// Error runs away from zero at unit speed whatever the action.
struct Runaway {
    e: f64,
    ranges: [(f64, f64); 2],
}

impl Environment for Runaway {
    fn input_ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }
    fn actuator_range(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }
    fn dt(&self) -> f64 {
        0.02
    }
    fn reset(&mut self, inputs: &[f64]) -> Result<()> {
        self.e = inputs[0];
        Ok(())
    }
    fn observe(&self) -> Vec<f64> {
        vec![self.e, self.error_rate()]
    }
    fn step(&mut self, _action: f64) -> Result<()> {
        self.e += self.dt() * self.error_rate();
        Ok(())
    }
    fn error(&self) -> f64 {
        self.e
    }
    fn error_rate(&self) -> f64 {
        if self.e >= 0.0 { 1.0 } else { -1.0 }
    }
}

fn short_offline(episodes: usize) -> TrainConfig {
    TrainConfig { episodes, ..pendulum_offline() }
}

#[test]
fn offline_needs_episodes() {
    let mut env = Pendulum::new(PendulumParams::default()).unwrap();
    assert!(matches!(train_offline(&mut env, &short_offline(0)), Err(Error::EmptyDataset)));
}

#[test]
fn offline_is_deterministic() {
    let run = || {
        let mut env = Pendulum::new(PendulumParams::default()).unwrap();
        train_offline(&mut env, &short_offline(1500)).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.system, b.system);
    assert_eq!(a.rpp, b.rpp);
    assert_eq!(a.metrics, b.metrics);
}

#[test]
fn critic_learns_signed_ridge() {
    let mut env = Pendulum::new(PendulumParams::default()).unwrap();
    let out = train_offline(&mut env, &short_offline(3000)).unwrap();
    let (mut pos, mut neg) = (0, 0);
    let spec = *out.rpp.plane().spec();
    for iy in 0..spec.ny {
        for ix in 0..spec.nx {
            if out.rpp.region(ix, iy) == Region::Play {
                let v = out.rpp.plane().get(ix, iy);
                pos += (v > 0.0) as usize;
                neg += (v < 0.0) as usize;
            }
        }
    }
    assert!(pos > 0 && neg > 0, "{pos} positive, {neg} negative play cells");
}

#[test]
fn unreachable_reward_leaves_no_positive_cells() {
    let mut env = Runaway { e: 0.0, ranges: [(-1.0, 1.0), (-1.0, 1.0)] };
    let cfg = RppConfig {
        e_range: (-1.0, 1.0),
        ce_range: (-0.04, 0.04),
        reward_e: (-0.1, 0.1),
        reward_ce: (-0.01, 0.01),
        nx: 40,
        ..RppConfig::default()
    };
    let mut rpp = Rpp::new(cfg).unwrap();
    let mut rng = RngStream::new(3);
    for _ in 0..300 {
        env.reset(&[rng.uniform(-0.8, 0.8), 0.0]).unwrap();
        let mut prev = env.state_point();
        while rpp.classify(prev) != Region::Penalty {
            env.step(rng.uniform(-1.0, 1.0)).unwrap();
            let cur = env.state_point();
            assert!(rpp.td_update(prev, cur).unwrap() <= 0.0);
            prev = cur;
        }
    }
    let spec = *rpp.plane().spec();
    let mut negative = 0;
    for iy in 0..spec.ny {
        for ix in 0..spec.nx {
            if rpp.region(ix, iy) == Region::Play {
                let v = rpp.plane().get(ix, iy);
                assert!(v <= 0.0);
                negative += (v < 0.0) as usize;
            }
        }
    }
    assert!(negative > 0);
}

#[test]
fn perfect_seed_is_stable_at_once() {
    let p = PendulumParams::default();
    let seed = pendulum_seed(&p, &PENDULUM_GAINS).unwrap();
    let mut cfg = pendulum_online();
    cfg.sam.var = 0.0;
    cfg.start_box = Some(vec![(-0.05, 0.05), (-0.1, 0.1)]);
    let mut env = Pendulum::new(p).unwrap();
    let out = train_online(&mut env, &seed, &cfg).unwrap();
    assert_eq!(out.metrics.steps_to_stable, Some(1));
    assert_eq!(out.metrics.penalty_count, 0);
    for (a, b) in out.system.rules().iter().zip(seed.rules()) {
        for (la, lb) in a.lines.iter().zip(&b.lines) {
            for (ya, yb) in la.y_at.iter().zip(&lb.y_at) {
                assert!((ya - yb).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn online_rejects_seed_without_planes() {
    let p = PendulumParams::default();
    let seed = pendulum_seed(&p, &PENDULUM_GAINS).unwrap();
    let bare = ralm_core::fuzzy::FuzzySystem::new(seed.rules().to_vec(), seed.input_ranges().to_vec(), seed.output_range()).unwrap();
    let mut env = Pendulum::new(p).unwrap();
    assert!(matches!(train_online(&mut env, &bare, &pendulum_online()), Err(Error::NoBackingPlanes)));
}

#[test]
fn action_cells_average_their_deltas() {
    let mut aps = ActionPlaneSet::new(&[(-1.0, 1.0)], (-1.0, 1.0), 11, 11).unwrap();
    let w = InkWindow::pyramid(2, 2);
    let tr = Transition {
        prev_inputs: vec![0.2],
        prev_action: -0.4,
        prev_point: StatePoint::new(0.0, 0.0),
        cur_point: StatePoint::new(0.0, 0.0),
    };
    let deltas = [0.9, -0.025, 0.3, 0.0, -0.7];
    for d in deltas {
        aps.update(&tr, d, &w).unwrap();
    }
    // the neighbour one column over carries weight 1/2
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    assert!((aps.value_at(0, 0.2, -0.4).unwrap() - mean).abs() < 1e-15);
    assert!((aps.value_at(0, 0.4, -0.4).unwrap() - 0.5 * mean).abs() < 1e-15);
    assert_eq!(aps.counts(0)[3 * 11 + 6], 5);
}

#[test]
fn rpp_preset_matches_pendulum_axes() {
    let p = PendulumParams::default();
    let rpp = pendulum_rpp(&p);
    let mut env = Pendulum::new(p.clone()).unwrap();
    env.reset(&[0.1, 0.5]).unwrap();
    assert_eq!(rpp.classify(env.state_point()), Region::Reward);
    env.reset(&[0.85, 0.0]).unwrap();
    assert_eq!(rpp.classify(env.state_point()), Region::Penalty);
}
