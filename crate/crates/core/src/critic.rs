//! Reward-Penalty-Plane critic over (error, change in error).
//!
//! Reward cells are pinned to 1 and penalty cells to the configured negative
//! value. Play cells start at 0 and move toward the value of the state the
//! system lands in next, with a fast rate for improvements and a slow one for
//! deteriorations.

use alloc::vec::Vec;

use crate::error::{config_err, Error, Result};
use crate::grid::{GridSpec, InkWindow, Plane};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatePoint {
    pub e: f64,
    pub ce: f64,
}

impl StatePoint {
    pub fn new(e: f64, ce: f64) -> Self {
        StatePoint { e, ce }
    }

    fn check(&self) -> Result<()> {
        if self.e.is_nan() || self.ce.is_nan() {
            Err(Error::NonFinite("state point"))
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Reward,
    Penalty,
    Play,
}

impl Region {
    pub fn letter(self) -> char {
        match self {
            Region::Reward => 'R',
            Region::Penalty => 'P',
            Region::Play => 'Y',
        }
    }

    pub fn from_letter(c: char) -> Option<Region> {
        match c {
            'R' => Some(Region::Reward),
            'P' => Some(Region::Penalty),
            'Y' => Some(Region::Play),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RppConfig {
    pub e_range: (f64, f64),
    pub ce_range: (f64, f64),
    pub reward_e: (f64, f64),
    pub reward_ce: (f64, f64),
    /// Cells farther from the axis center than this fraction of the
    /// half-range, on either axis, are penalty cells.
    pub penalty_fraction: f64,
    pub penalty_value: f64,
    pub lambda_reward: f64,
    pub lambda_penalty: f64,
    pub window: InkWindow,
    pub nx: usize,
    pub ny: usize,
}

impl Default for RppConfig {
    /// Inverted pendulum: error is the pole angle, change in error the
    /// per-step angle difference at a 0.021 s step. Updates touch only the
    /// previous cell; wider windows let the optimistic reward rate flood
    /// the whole play area with values near 1.
    fn default() -> Self {
        RppConfig {
            e_range: (-0.9, 0.9),
            ce_range: (-0.09, 0.09),
            reward_e: (-0.23, 0.23),
            reward_ce: (-0.98 * 0.021, 0.98 * 0.021),
            penalty_fraction: 0.9,
            penalty_value: -0.5,
            lambda_reward: 0.9,
            lambda_penalty: 0.05,
            window: InkWindow::pyramid(0, 0),
            nx: 32,
            ny: 32,
        }
    }
}

fn axis_penalty(v: f64, range: (f64, f64), fraction: f64) -> bool {
    let c = 0.5 * (range.0 + range.1);
    let h = 0.5 * (range.1 - range.0);
    (v - c).abs() > fraction * h
}

fn within(v: f64, r: (f64, f64)) -> bool {
    r.0 <= v && v <= r.1
}

impl RppConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid_spec()?;
        if !(self.penalty_fraction > 0.0 && self.penalty_fraction <= 1.0) {
            return Err(config_err("rpp.penalty_fraction must lie in (0, 1]"));
        }
        if !(self.penalty_value >= -1.0 && self.penalty_value < 0.0) {
            return Err(config_err("rpp.penalty_value must lie in [-1, 0)"));
        }
        for l in [self.lambda_reward, self.lambda_penalty] {
            if !(l > 0.0 && l <= 1.0) {
                return Err(config_err("rpp learning rates must lie in (0, 1]"));
            }
        }
        if self.lambda_penalty > self.lambda_reward {
            return Err(config_err("rpp.lambda_penalty must not exceed rpp.lambda_reward"));
        }
        if !(self.reward_e.0 < self.reward_e.1 && self.reward_ce.0 < self.reward_ce.1) {
            return Err(config_err("reward box intervals must satisfy min < max"));
        }
        let corners = [
            (self.reward_e.0, self.e_range),
            (self.reward_e.1, self.e_range),
            (self.reward_ce.0, self.ce_range),
            (self.reward_ce.1, self.ce_range),
        ];
        if corners.iter().any(|(v, r)| axis_penalty(*v, *r, self.penalty_fraction) || !within(*v, *r)) {
            return Err(config_err("reward box overlaps the penalty margin"));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.e_range, self.ce_range, self.nx, self.ny)
    }

    /// Region of an exact (continuous) state point.
    pub fn classify(&self, s: StatePoint) -> Region {
        if axis_penalty(s.e, self.e_range, self.penalty_fraction) || axis_penalty(s.ce, self.ce_range, self.penalty_fraction) {
            Region::Penalty
        } else if within(s.e, self.reward_e) && within(s.ce, self.reward_ce) {
            Region::Reward
        } else {
            Region::Play
        }
    }
}

/// The critic plane together with its fixed region mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Rpp {
    cfg: RppConfig,
    plane: Plane,
    mask: Vec<Region>,
}

impl Rpp {
    pub fn new(cfg: RppConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.grid_spec()?;
        let mut plane = Plane::new(spec)?;
        let mut mask = Vec::with_capacity(spec.nx * spec.ny);
        for iy in 0..spec.ny {
            for ix in 0..spec.nx {
                let region = cfg.classify(StatePoint::new(spec.x_at(ix), spec.y_at(iy)));
                plane.set(ix, iy, region_value(&cfg, region, 0.0));
                mask.push(region);
            }
        }
        Ok(Rpp { cfg, plane, mask })
    }

    /// Rebuilds a critic from a stored plane; fixed regions are re-pinned.
    pub fn from_parts(cfg: RppConfig, plane: Plane, mask: Vec<Region>) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.grid_spec()?;
        if *plane.spec() != spec {
            return Err(config_err("stored plane does not match the critic grid"));
        }
        if mask.len() != spec.nx * spec.ny {
            return Err(Error::DimensionMismatch { expected: spec.nx * spec.ny, found: mask.len() });
        }
        let mut rpp = Rpp { cfg, plane, mask };
        for iy in 0..spec.ny {
            for ix in 0..spec.nx {
                let region = rpp.region(ix, iy);
                let v = region_value(&rpp.cfg, region, rpp.plane.get(ix, iy).clamp(-1.0, 1.0));
                rpp.plane.set(ix, iy, v);
            }
        }
        Ok(rpp)
    }

    pub fn config(&self) -> &RppConfig {
        &self.cfg
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn mask(&self) -> &[Region] {
        &self.mask
    }

    pub fn region(&self, ix: usize, iy: usize) -> Region {
        self.mask[iy * self.plane.spec().nx + ix]
    }

    pub fn cell_of(&self, s: StatePoint) -> Result<(usize, usize)> {
        s.check()?;
        self.plane.cell_of(s.e, s.ce)
    }

    /// Value of `s`: fixed for states in the reward or penalty area, else
    /// the value of the nearest cell. Cells straddling a region edge may
    /// belong to the other region than the state itself.
    pub fn value(&self, s: StatePoint) -> Result<f64> {
        let (ix, iy) = self.cell_of(s)?;
        Ok(region_value(&self.cfg, self.classify(s), self.plane.get(ix, iy)))
    }

    pub fn classify(&self, s: StatePoint) -> Region {
        self.cfg.classify(s)
    }

    /// TD step from `prev` toward `cur`. Returns the change applied at the
    /// center cell, `lambda * (V(cur) - V(prev))`.
    pub fn td_update(&mut self, prev: StatePoint, cur: StatePoint) -> Result<f64> {
        let (px, py) = self.cell_of(prev)?;
        let raw = self.value(cur)? - self.value(prev)?;
        if raw == 0.0 {
            return Ok(0.0);
        }
        let lambda = if raw > 0.0 { self.cfg.lambda_reward } else { self.cfg.lambda_penalty };
        let spec = *self.plane.spec();
        let step = lambda * raw;
        for (cx, cy, w) in self.cfg.window.footprint(px, py, spec.nx, spec.ny) {
            if self.region(cx, cy) == Region::Play && w > 0.0 {
                let v = (self.plane.get(cx, cy) + w * step).clamp(-1.0, 1.0);
                self.plane.set(cx, cy, v);
            }
        }
        Ok(step)
    }
}

fn region_value(cfg: &RppConfig, region: Region, play: f64) -> f64 {
    match region {
        Region::Reward => 1.0,
        Region::Penalty => cfg.penalty_value,
        Region::Play => play,
    }
}
