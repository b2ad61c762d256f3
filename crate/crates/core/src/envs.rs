//! Fixed-step benchmark plants: cart-pole and ball-and-beam.
//!
//! Both are integrated with one explicit Euler step per control period.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::critic::StatePoint;
use crate::error::{config_err, finite, Error, Result};

/// Control step shared by both benchmarks, in seconds.
pub const DEFAULT_DT: f64 = 0.021;

/// A plant driven by one scalar action and observed through a few inputs.
pub trait Environment {
    /// Physical ranges of the observed inputs.
    fn input_ranges(&self) -> &[(f64, f64)];
    fn actuator_range(&self) -> (f64, f64);
    fn dt(&self) -> f64;
    /// Puts the plant in the state described by the observed inputs;
    /// unobserved state is zeroed.
    fn reset(&mut self, inputs: &[f64]) -> Result<()>;
    fn observe(&self) -> Vec<f64>;
    fn step(&mut self, action: f64) -> Result<()>;
    /// Controlled variable minus its setpoint.
    fn error(&self) -> f64;
    /// Time derivative of [`Environment::error`].
    fn error_rate(&self) -> f64;

    fn input_count(&self) -> usize {
        self.input_ranges().len()
    }

    /// Critic coordinates of the current state: the error and its change
    /// over the coming step, `dt * error_rate`. Under explicit Euler this
    /// is exactly the next per-step difference of the error, so the last
    /// action already shows in it.
    fn state_point(&self) -> StatePoint {
        StatePoint::new(self.error(), self.dt() * self.error_rate())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendulumParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Distance from pivot to the pole's center of mass.
    pub half_length: f64,
    pub gravity: f64,
    pub force_max: f64,
    pub theta_range: (f64, f64),
    pub theta_dot_range: (f64, f64),
    pub dt: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            gravity: 9.8,
            force_max: 25.0,
            theta_range: (-0.9, 0.9),
            theta_dot_range: (-4.3, 4.3),
            dt: DEFAULT_DT,
        }
    }
}

impl PendulumParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.cart_mass, self.pole_mass, self.half_length, self.gravity, self.force_max, self.dt];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(config_err("pendulum parameters must be finite and positive"));
        }
        if !(self.theta_range.0 < self.theta_range.1 && self.theta_dot_range.0 < self.theta_dot_range.1) {
            return Err(config_err("pendulum observation ranges must satisfy min < max"));
        }
        Ok(())
    }
}

/// Full cart-pole state; only `theta` and `theta_dot` are observed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PendulumState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl PendulumState {
    /// Second derivatives `(x_ddot, theta_ddot)` under `force`.
    pub fn accelerations(&self, force: f64, p: &PendulumParams) -> (f64, f64) {
        let total = p.cart_mass + p.pole_mass;
        let (sin, cos) = (libm::sin(self.theta), libm::cos(self.theta));
        let temp = (force + p.pole_mass * p.half_length * self.theta_dot * self.theta_dot * sin) / total;
        let theta_acc = (p.gravity * sin - cos * temp)
            / (p.half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total));
        let x_acc = temp - p.pole_mass * p.half_length * theta_acc * cos / total;
        (x_acc, theta_acc)
    }

    /// Kinetic plus potential energy, with the pole modeled as a uniform rod.
    pub fn energy(&self, p: &PendulumParams) -> f64 {
        let l = p.half_length;
        let (sin, cos) = (libm::sin(self.theta), libm::cos(self.theta));
        // pole center of mass velocity
        let vx = self.x_dot + l * cos * self.theta_dot;
        let vy = -l * sin * self.theta_dot;
        let inertia = p.pole_mass * l * l / 3.0;
        0.5 * p.cart_mass * self.x_dot * self.x_dot
            + 0.5 * p.pole_mass * (vx * vx + vy * vy)
            + 0.5 * inertia * self.theta_dot * self.theta_dot
            + p.pole_mass * p.gravity * l * cos
    }
}

/// One explicit Euler step of the frictionless cart-pole.
pub fn pendulum_step(s: PendulumState, force: f64, dt: f64, p: &PendulumParams) -> Result<PendulumState> {
    if [s.x, s.x_dot, s.theta, s.theta_dot].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pendulum state"));
    }
    finite(force, "pendulum force")?;
    let force = force.clamp(-p.force_max, p.force_max);
    let (x_acc, theta_acc) = s.accelerations(force, p);
    let mut theta = s.theta + dt * s.theta_dot;
    if theta > PI {
        theta -= 2.0 * PI;
    } else if theta < -PI {
        theta += 2.0 * PI;
    }
    Ok(PendulumState {
        x: s.x + dt * s.x_dot,
        x_dot: s.x_dot + dt * x_acc,
        theta,
        theta_dot: s.theta_dot + dt * theta_acc,
    })
}

#[derive(Debug, Clone)]
pub struct Pendulum {
    pub params: PendulumParams,
    pub state: PendulumState,
    ranges: [(f64, f64); 2],
}

impl Pendulum {
    pub fn new(params: PendulumParams) -> Result<Self> {
        params.validate()?;
        let ranges = [params.theta_range, params.theta_dot_range];
        Ok(Pendulum { params, state: PendulumState::default(), ranges })
    }
}

impl Environment for Pendulum {
    fn input_ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    fn actuator_range(&self) -> (f64, f64) {
        (-self.params.force_max, self.params.force_max)
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn reset(&mut self, inputs: &[f64]) -> Result<()> {
        if inputs.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: inputs.len() });
        }
        self.state = PendulumState {
            theta: finite(inputs[0], "theta")?,
            theta_dot: finite(inputs[1], "theta_dot")?,
            ..PendulumState::default()
        };
        Ok(())
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.state.theta, self.state.theta_dot]
    }

    fn step(&mut self, action: f64) -> Result<()> {
        self.state = pendulum_step(self.state, action, self.params.dt, &self.params)?;
        Ok(())
    }

    fn error(&self) -> f64 {
        self.state.theta
    }

    fn error_rate(&self) -> f64 {
        self.state.theta_dot
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallBeamParams {
    /// Rolling factor; 5/7 for a solid ball.
    pub ball_factor: f64,
    pub gravity: f64,
    pub half_length: f64,
    pub angle_max: f64,
    pub velocity_range: (f64, f64),
    pub dt: f64,
}

impl Default for BallBeamParams {
    fn default() -> Self {
        BallBeamParams {
            ball_factor: 5.0 / 7.0,
            gravity: 9.8,
            half_length: 1.0,
            angle_max: 0.25,
            velocity_range: (-2.0, 2.0),
            dt: DEFAULT_DT,
        }
    }
}

impl BallBeamParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.ball_factor, self.gravity, self.half_length, self.angle_max, self.dt];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(config_err("ball-and-beam parameters must be finite and positive"));
        }
        if !(self.velocity_range.0 < self.velocity_range.1) {
            return Err(config_err("ball-and-beam velocity range must satisfy min < max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BallBeamState {
    pub r: f64,
    pub v: f64,
}

/// One Euler step with the beam angle applied instantaneously. The ball
/// stops dead at either end of the beam.
pub fn ballbeam_step(s: BallBeamState, beam_angle: f64, dt: f64, p: &BallBeamParams) -> Result<BallBeamState> {
    if !s.r.is_finite() || !s.v.is_finite() {
        return Err(Error::NonFinite("ball-and-beam state"));
    }
    finite(beam_angle, "beam angle")?;
    let angle = beam_angle.clamp(-p.angle_max, p.angle_max);
    let acc = -p.ball_factor * p.gravity * libm::sin(angle);
    let mut next = BallBeamState { r: s.r + dt * s.v, v: s.v + dt * acc };
    if next.r.abs() > p.half_length {
        next.r = p.half_length.copysign(next.r);
        next.v = 0.0;
    }
    Ok(next)
}

#[derive(Debug, Clone)]
pub struct BallBeam {
    pub params: BallBeamParams,
    pub state: BallBeamState,
    ranges: [(f64, f64); 2],
}

impl BallBeam {
    pub fn new(params: BallBeamParams) -> Result<Self> {
        params.validate()?;
        let ranges = [(-params.half_length, params.half_length), params.velocity_range];
        Ok(BallBeam { params, state: BallBeamState::default(), ranges })
    }
}

impl Environment for BallBeam {
    fn input_ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    fn actuator_range(&self) -> (f64, f64) {
        (-self.params.angle_max, self.params.angle_max)
    }

    fn dt(&self) -> f64 {
        self.params.dt
    }

    fn reset(&mut self, inputs: &[f64]) -> Result<()> {
        if inputs.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: inputs.len() });
        }
        let h = self.params.half_length;
        self.state = BallBeamState { r: finite(inputs[0], "ball position")?.clamp(-h, h), v: finite(inputs[1], "ball velocity")? };
        Ok(())
    }

    fn observe(&self) -> Vec<f64> {
        vec![self.state.r, self.state.v]
    }

    fn step(&mut self, action: f64) -> Result<()> {
        self.state = ballbeam_step(self.state, action, self.params.dt, &self.params)?;
        Ok(())
    }

    fn error(&self) -> f64 {
        self.state.r
    }

    fn error_rate(&self) -> f64 {
        self.state.v
    }
}
