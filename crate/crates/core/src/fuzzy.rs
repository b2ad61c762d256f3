//! Fuzzy inference over ALM rules (the action selection network).
//!
//! Each rule combines one single-input curve per input, weighted by that
//! input's importance. Rules fire with the min of their antecedent
//! memberships and are blended by a firing-weighted average.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, finite, Error, Result};
use crate::grid::{column_masses, extract_narrow_line, spread_of, NarrowLine, Plane};

/// Trapezoidal membership with breakpoints `a <= b <= c <= d`.
///
/// `a == b` makes a left shoulder (membership 1 for every `x <= b`), and
/// `c == d` a right shoulder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Trapezoid {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if !(a <= b && b <= c && c <= d) || [a, b, c, d].iter().any(|v| !v.is_finite()) {
            return Err(config_err("trapezoid breakpoints must be finite and ordered"));
        }
        Ok(Trapezoid { a, b, c, d })
    }

    /// Membership 1 everywhere on `[lo, hi]` and beyond.
    pub fn full(lo: f64, hi: f64) -> Self {
        Trapezoid { a: lo, b: lo, c: hi, d: hi }
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x < self.b {
            if self.a == self.b {
                1.0
            } else if x <= self.a {
                0.0
            } else {
                (x - self.a) / (self.b - self.a)
            }
        } else if x <= self.c || self.c == self.d {
            1.0
        } else if x >= self.d {
            0.0
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }

    /// The crisp interval this trapezoid stands for: ramp midpoints.
    pub fn interval(&self) -> (f64, f64) {
        (0.5 * (self.a + self.b), 0.5 * (self.c + self.d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub antecedent: Vec<Trapezoid>,
    pub lines: Vec<NarrowLine>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn firing(&self, inputs: &[f64]) -> f64 {
        self.antecedent
            .iter()
            .zip(inputs)
            .map(|(t, x)| t.membership(*x))
            .fold(1.0, f64::min)
    }

    pub fn consequent(&self, inputs: &[f64]) -> f64 {
        self.lines.iter().zip(&self.weights).zip(inputs).map(|((l, w), x)| w * l.eval(*x)).sum()
    }

    fn validate(&self, m: usize) -> Result<()> {
        for len in [self.antecedent.len(), self.lines.len(), self.weights.len()] {
            if len != m {
                return Err(Error::DimensionMismatch { expected: m, found: len });
            }
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
            return Err(config_err("rule weights must lie in (0, 1]"));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(config_err("rule weights must sum to 1"));
        }
        Ok(())
    }
}

/// Multi-input single-output fuzzy system built from ALM rules.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzySystem {
    rules: Vec<Rule>,
    input_ranges: Vec<(f64, f64)>,
    output_range: (f64, f64),
    backing_planes: Option<Vec<Plane>>,
    input_gains: Vec<f64>,
    output_gain: f64,
}

impl FuzzySystem {
    pub fn new(rules: Vec<Rule>, input_ranges: Vec<(f64, f64)>, output_range: (f64, f64)) -> Result<Self> {
        if rules.is_empty() {
            return Err(config_err("a fuzzy system needs at least one rule"));
        }
        let m = input_ranges.len();
        if m == 0 {
            return Err(config_err("a fuzzy system needs at least one input"));
        }
        if input_ranges.iter().chain(core::iter::once(&output_range)).any(|r| !(r.0 < r.1)) {
            return Err(config_err("fuzzy system ranges must satisfy min < max"));
        }
        for r in &rules {
            r.validate(m)?;
        }
        Ok(FuzzySystem { rules, input_ranges, output_range, backing_planes: None, input_gains: vec![1.0; m], output_gain: 1.0 })
    }

    /// Attaches one input-vs-output plane per input for online refresh.
    pub fn with_backing_planes(mut self, planes: Vec<Plane>) -> Result<Self> {
        if planes.len() != self.input_count() {
            return Err(Error::DimensionMismatch { expected: self.input_count(), found: planes.len() });
        }
        self.backing_planes = Some(planes);
        Ok(self)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn input_count(&self) -> usize {
        self.input_ranges.len()
    }

    pub fn input_ranges(&self) -> &[(f64, f64)] {
        &self.input_ranges
    }

    pub fn output_range(&self) -> (f64, f64) {
        self.output_range
    }

    pub fn backing_planes(&self) -> Option<&[Plane]> {
        self.backing_planes.as_deref()
    }

    pub fn backing_planes_mut(&mut self) -> Option<&mut [Plane]> {
        self.backing_planes.as_deref_mut()
    }

    pub fn input_gains(&self) -> &[f64] {
        &self.input_gains
    }

    pub fn output_gain(&self) -> f64 {
        self.output_gain
    }

    /// Recommended action for `inputs`.
    pub fn infer(&self, inputs: &[f64]) -> Result<f64> {
        let m = self.input_count();
        if inputs.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: inputs.len() });
        }
        let mut x = [0.0f64; 8];
        let mut heap;
        let x: &mut [f64] = if m <= x.len() {
            &mut x[..m]
        } else {
            heap = vec![0.0; m];
            &mut heap
        };
        for i in 0..m {
            let v = finite(inputs[i], "fuzzy input")? / self.input_gains[i];
            let (lo, hi) = self.input_ranges[i];
            x[i] = v.clamp(lo, hi);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for rule in &self.rules {
            let mu = rule.firing(x);
            if mu > 0.0 {
                num += mu * rule.consequent(x);
                den += mu;
            }
        }
        if den <= 0.0 {
            return Err(Error::CoverageViolation);
        }
        let (lo, hi) = self.output_range;
        Ok((num / den).clamp(lo, hi) * self.output_gain)
    }

    /// Derived system whose input domains are shrunk to the reward ranges.
    ///
    /// Input `i` gets gain `g_i = |reward_i| / |range_i|`: the derived system
    /// answers at `x` what the original answers at `x / g_i`, so the whole
    /// rule base is replayed inside the reward area. The output is multiplied
    /// by `max_i g_i`.
    pub fn scale_for_reward(&self, reward_ranges: &[(f64, f64)]) -> Result<FuzzySystem> {
        let m = self.input_count();
        if reward_ranges.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: reward_ranges.len() });
        }
        let mut gains = Vec::with_capacity(m);
        for (i, (r, range)) in reward_ranges.iter().zip(&self.input_ranges).enumerate() {
            // nesting is checked against the domain this system currently reads
            let g = self.input_gains[i];
            let (lo, hi) = (range.0 * g, range.1 * g);
            if !(r.0 < r.1) || r.0 < lo || r.1 > hi {
                return Err(Error::NotNested(i));
            }
            gains.push((r.1 - r.0) / (hi - lo));
        }
        let out = gains.iter().copied().fold(f64::MIN, f64::max);
        let mut scaled = self.clone();
        for (g, k) in scaled.input_gains.iter_mut().zip(&gains) {
            *g *= k;
        }
        scaled.output_gain *= out;
        Ok(scaled)
    }

    /// Re-extracts every consequent line from the backing planes.
    ///
    /// Negative cells are ignored by the extraction. A plane without positive
    /// mass leaves the corresponding lines untouched; its index is reported.
    pub fn refresh_lines(&mut self) -> Result<RefreshReport> {
        let planes = self.backing_planes.as_ref().ok_or(Error::NoBackingPlanes)?;
        let mut report = RefreshReport::default();
        let mut fresh = Vec::with_capacity(planes.len());
        for (i, plane) in planes.iter().enumerate() {
            match extract_narrow_line(plane) {
                Ok(line) => {
                    let spread = spread_of(plane, &line)?;
                    fresh.push(Some((line, spread, column_masses(plane))));
                }
                Err(Error::EmptyPlane) => {
                    log::warn!("backing plane {i} has no positive mass; keeping its lines");
                    report.unchanged.push(i);
                    fresh.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        let eps = 1e-6 * (self.output_range.1 - self.output_range.0);
        for rule in &mut self.rules {
            let mut spreads = Vec::with_capacity(fresh.len());
            for (i, f) in fresh.iter().enumerate() {
                let old = &rule.lines[i];
                match f {
                    Some((line, spread, masses)) => {
                        let range = (old.x_min, old.x_max);
                        let spec = planes[i].spec();
                        let lo = spec.cell_of(range.0, spec.y_min)?.0;
                        let hi = spec.cell_of(range.1, spec.y_min)?.0;
                        spreads.push(Some(spread.aggregate_over(masses, lo..=hi)));
                        rule.lines[i] = line.resampled(range, old.len());
                    }
                    None => spreads.push(None),
                }
            }
            if spreads.iter().all(|s| s.is_some()) {
                let s: Vec<f64> = spreads.into_iter().flatten().collect();
                rule.weights = crate::alm::importance_weights(&s, eps);
            }
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefreshReport {
    /// Inputs whose backing plane had no positive mass.
    pub unchanged: Vec<usize>,
}

/// Antecedent trapezoids for a set of box regions that tile the input space.
///
/// Along every input the distinct region edges form an elementary partition;
/// each interior edge gets a linear ramp reaching a quarter of the narrower
/// adjacent elementary interval into both sides, so the memberships of
/// regions that meet at an edge sum to one across it.
pub fn antecedents_for(regions: &[Vec<(f64, f64)>], ranges: &[(f64, f64)]) -> Vec<Vec<Trapezoid>> {
    let m = ranges.len();
    let mut half_widths: Vec<Vec<(f64, f64)>> = Vec::with_capacity(m);
    for (i, range) in ranges.iter().enumerate() {
        let mut edges: Vec<f64> = vec![range.0, range.1];
        for r in regions {
            edges.push(r[i].0);
            edges.push(r[i].1);
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        let mut hw = Vec::with_capacity(edges.len());
        for k in 0..edges.len() {
            let o = if k == 0 || k + 1 == edges.len() {
                0.0
            } else {
                0.25 * (edges[k] - edges[k - 1]).min(edges[k + 1] - edges[k])
            };
            hw.push((edges[k], o));
        }
        half_widths.push(hw);
    }
    let ramp = |i: usize, edge: f64| -> f64 {
        half_widths[i].iter().find(|(e, _)| *e == edge).map(|(_, o)| *o).unwrap_or(0.0)
    };
    regions
        .iter()
        .map(|r| {
            (0..m)
                .map(|i| {
                    let (lo, hi) = r[i];
                    let (ol, oh) = (ramp(i, lo), ramp(i, hi));
                    Trapezoid { a: lo - ol, b: lo + ol, c: hi - oh, d: hi + oh }
                })
                .collect()
        })
        .collect()
}
