//! Active Learning Method: recursive fuzzy modeling of a MISO dataset.
//!
//! Every input is projected onto its own input-vs-output plane, the narrow
//! line of each plane becomes a single-input model, and the inverse spreads
//! weigh the inputs against each other. A region whose best input still
//! spreads more than the threshold is cut in half along its worst input.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::error::{config_err, finite, Error, Result};
use crate::fuzzy::{antecedents_for, FuzzySystem, Rule};
use crate::grid::{extract_narrow_line, spread_of, GridSpec, InkWindow, NarrowLine, Plane, DEFAULT_RESOLUTION};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub inputs: Vec<f64>,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    input_ranges: Vec<(f64, f64)>,
    output_range: (f64, f64),
}

impl Dataset {
    pub fn new(input_ranges: Vec<(f64, f64)>, output_range: (f64, f64)) -> Result<Self> {
        if input_ranges.is_empty() {
            return Err(config_err("dataset needs at least one input"));
        }
        if input_ranges.iter().chain(core::iter::once(&output_range)).any(|r| !(r.0 < r.1) || !r.0.is_finite() || !r.1.is_finite()) {
            return Err(config_err("dataset ranges must be finite with min < max"));
        }
        Ok(Dataset { samples: Vec::new(), input_ranges, output_range })
    }

    /// Appends a sample, clamping every coordinate into the declared ranges.
    pub fn push(&mut self, inputs: &[f64], output: f64) -> Result<()> {
        if inputs.len() != self.input_ranges.len() {
            return Err(Error::DimensionMismatch { expected: self.input_ranges.len(), found: inputs.len() });
        }
        let mut clamped = Vec::with_capacity(inputs.len());
        for (x, r) in inputs.iter().zip(&self.input_ranges) {
            clamped.push(finite(*x, "sample input")?.clamp(r.0, r.1));
        }
        let output = finite(output, "sample output")?.clamp(self.output_range.0, self.output_range.1);
        self.samples.push(Sample { inputs: clamped, output });
        Ok(())
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
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

    /// Same ranges, only the samples for which `keep` holds.
    pub fn filtered(&self, mut keep: impl FnMut(&Sample) -> bool) -> Dataset {
        Dataset {
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
            input_ranges: self.input_ranges.clone(),
            output_range: self.output_range,
        }
    }

    fn in_region(&self, s: &Sample, region: &[(f64, f64)]) -> bool {
        s.inputs.iter().zip(region).zip(&self.input_ranges).all(|((x, r), full)| {
            // half-open cells; the upper domain edge belongs to the last one
            (r.0 <= *x && *x < r.1) || (*x == r.1 && r.1 == full.1)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmConfig {
    pub spread_threshold: f64,
    pub max_depth: usize,
    pub nx: usize,
    pub ny: usize,
    pub window: InkWindow,
}

impl Default for AlmConfig {
    fn default() -> Self {
        AlmConfig {
            spread_threshold: 0.05,
            max_depth: 3,
            nx: DEFAULT_RESOLUTION,
            ny: DEFAULT_RESOLUTION,
            window: InkWindow::default(),
        }
    }
}

impl AlmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spread_threshold.is_finite() && self.spread_threshold > 0.0) {
            return Err(config_err("alm.spread_threshold must be finite and positive"));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(config_err("alm grid needs at least 2 cells per axis"));
        }
        Ok(())
    }
}

/// Projects the in-region samples onto the plane of input `input` vs output.
pub fn project(dataset: &Dataset, input: usize, region: &[(f64, f64)], cfg: &AlmConfig) -> Result<Plane> {
    if input >= dataset.input_count() {
        return Err(Error::DimensionMismatch { expected: dataset.input_count(), found: input + 1 });
    }
    if region.len() != dataset.input_count() {
        return Err(Error::DimensionMismatch { expected: dataset.input_count(), found: region.len() });
    }
    let spec = GridSpec::new(region[input], dataset.output_range, cfg.nx, cfg.ny)?;
    let mut plane = Plane::new(spec)?;
    let mut hits = 0usize;
    for s in dataset.samples.iter().filter(|s| dataset.in_region(s, region)) {
        plane.drop_ink(s.inputs[input], s.output, &cfg.window, 1.0)?;
        hits += 1;
    }
    if hits == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(plane)
}

/// Normalized inverse-spread importance: `(1/(s_i+eps)) / sum_j (1/(s_j+eps))`.
pub fn importance_weights(spreads: &[f64], eps: f64) -> Vec<f64> {
    let inv: Vec<f64> = spreads.iter().map(|s| 1.0 / (s.max(0.0) + eps)).collect();
    let total: f64 = inv.iter().sum();
    inv.into_iter().map(|v| v / total).collect()
}

/// Binary partition of the input space produced by [`alm_fit_tree`].
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionNode {
    Split { input: usize, at: f64, low: Box<PartitionNode>, high: Box<PartitionNode> },
    Leaf { rule: usize },
}

impl PartitionNode {
    pub fn depth(&self) -> usize {
        match self {
            PartitionNode::Leaf { .. } => 0,
            PartitionNode::Split { low, high, .. } => 1 + low.depth().max(high.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            PartitionNode::Leaf { .. } => 1,
            PartitionNode::Split { low, high, .. } => low.leaves() + high.leaves(),
        }
    }
}

struct RegionModel {
    lines: Vec<NarrowLine>,
    spreads: Vec<f64>,
}

struct Leaf {
    region: Vec<(f64, f64)>,
    model: RegionModel,
}

struct Fitter<'a> {
    data: &'a Dataset,
    cfg: &'a AlmConfig,
    eps: f64,
    leaves: Vec<Leaf>,
}

impl Fitter<'_> {
    fn model(&self, region: &[(f64, f64)]) -> Result<RegionModel> {
        let m = self.data.input_count();
        let mut lines = Vec::with_capacity(m);
        let mut spreads = Vec::with_capacity(m);
        for i in 0..m {
            let plane = project(self.data, i, region, self.cfg)?;
            let line = extract_narrow_line(&plane)?;
            spreads.push(spread_of(&plane, &line)?.aggregate);
            lines.push(line);
        }
        Ok(RegionModel { lines, spreads })
    }

    fn leaf(&mut self, region: Vec<(f64, f64)>, model: RegionModel) -> PartitionNode {
        self.leaves.push(Leaf { region, model });
        PartitionNode::Leaf { rule: self.leaves.len() - 1 }
    }

    fn fit(&mut self, region: Vec<(f64, f64)>, model: RegionModel, depth: usize) -> Result<PartitionNode> {
        let best = model.spreads.iter().copied().fold(f64::INFINITY, f64::min);
        if best <= self.cfg.spread_threshold || depth >= self.cfg.max_depth {
            return Ok(self.leaf(region, model));
        }
        let worst = (0..model.spreads.len())
            .fold(0, |w, i| if model.spreads[i] > model.spreads[w] { i } else { w });
        let (lo, hi) = region[worst];
        let at = 0.5 * (lo + hi);
        let mut low = region.clone();
        low[worst].1 = at;
        let mut high = region;
        high[worst].0 = at;
        let low_node = self.child(low, &model, depth)?;
        let high_node = self.child(high, &model, depth)?;
        Ok(PartitionNode::Split { input: worst, at, low: Box::new(low_node), high: Box::new(high_node) })
    }

    fn child(&mut self, region: Vec<(f64, f64)>, parent: &RegionModel, depth: usize) -> Result<PartitionNode> {
        match self.model(&region) {
            Ok(model) => self.fit(region, model, depth + 1),
            Err(Error::EmptyRegion) | Err(Error::EmptyPlane) => {
                log::info!("empty ALM region {region:?}; reusing parent lines");
                let lines = parent
                    .lines
                    .iter()
                    .zip(&region)
                    .map(|(l, r)| l.resampled(*r, l.len()))
                    .collect();
                let model = RegionModel { lines, spreads: parent.spreads.clone() };
                Ok(self.leaf(region, model))
            }
            Err(e) => Err(e),
        }
    }
}

/// Fits a fuzzy system and returns it with its partition tree.
///
/// The system's backing planes are the full-domain projections, one per input.
pub fn alm_fit_tree(dataset: &Dataset, cfg: &AlmConfig) -> Result<(PartitionNode, FuzzySystem)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (out_lo, out_hi) = dataset.output_range;
    let mut fitter = Fitter { data: dataset, cfg, eps: 1e-6 * (out_hi - out_lo), leaves: Vec::new() };
    let root_region = dataset.input_ranges.clone();
    let root = fitter.model(&root_region)?;
    let tree = fitter.fit(root_region.clone(), root, 0)?;

    let regions: Vec<Vec<(f64, f64)>> = fitter.leaves.iter().map(|l| l.region.clone()).collect();
    let antecedents = antecedents_for(&regions, &dataset.input_ranges);
    let eps = fitter.eps;
    let rules = fitter
        .leaves
        .into_iter()
        .zip(antecedents)
        .map(|(leaf, antecedent)| Rule {
            antecedent,
            weights: importance_weights(&leaf.model.spreads, eps),
            lines: leaf.model.lines,
        })
        .collect();
    let planes = (0..dataset.input_count())
        .map(|i| project(dataset, i, &root_region, cfg))
        .collect::<Result<Vec<_>>>()?;
    let fs = FuzzySystem::new(rules, dataset.input_ranges.clone(), dataset.output_range)?.with_backing_planes(planes)?;
    Ok((tree, fs))
}

pub fn alm_fit(dataset: &Dataset, cfg: &AlmConfig) -> Result<FuzzySystem> {
    alm_fit_tree(dataset, cfg).map(|(_, fs)| fs)
}
