//! Ink-drop-spread planes.
//!
//! A [`Plane`] is a uniform grid of signed intensities over two physical axes.
//! Data points are stamped onto it with an [`InkWindow`]; the per-column center
//! of gravity of the positive intensities is the plane's [`NarrowLine`], and the
//! intensity-weighted deviation around that line is its spread.
//!
//! Cells are laid out on nodes: cell `i` on the x axis sits at
//! `x_min + i * (x_max - x_min) / (nx - 1)`, so both range endpoints are cells.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config_err, finite, Error, Result};

/// Default resolution for planes whose resolution is not configured.
pub const DEFAULT_RESOLUTION: usize = 64;

/// Physical extent and resolution of a plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        let spec = GridSpec { x_min: x.0, x_max: x.1, y_min: y.0, y_max: y.1, nx, ny };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) || !(self.y_min < self.y_max) {
            return Err(config_err("grid ranges must satisfy min < max"));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(config_err("grid needs at least 2 cells per axis"));
        }
        let (dx, dy) = (self.dx(), self.dy());
        if !(dx.is_finite() && dx > 0.0 && dy.is_finite() && dy > 0.0) {
            return Err(config_err("grid cell size must be finite and positive"));
        }
        Ok(())
    }

    /// Cell width along x.
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    /// Cell height along y.
    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x_at(&self, ix: usize) -> f64 {
        if ix + 1 == self.nx {
            self.x_max
        } else {
            self.x_min + ix as f64 * self.dx()
        }
    }

    pub fn y_at(&self, iy: usize) -> f64 {
        if iy + 1 == self.ny {
            self.y_max
        } else {
            self.y_min + iy as f64 * self.dy()
        }
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x_min, self.x_max)
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y_min, self.y_max)
    }

    /// Nearest cell to `(x, y)`, clamped to the grid. Exact half-way points
    /// resolve to the lower index.
    pub fn cell_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        if x.is_nan() || y.is_nan() {
            return Err(Error::NonFinite("cell coordinate"));
        }
        Ok((
            nearest_index(x, self.x_min, self.dx(), self.nx),
            nearest_index(y, self.y_min, self.dy(), self.ny),
        ))
    }
}

fn nearest_index(v: f64, lo: f64, step: f64, n: usize) -> usize {
    let t = (v - lo) / step;
    // ceil(t - 0.5) rounds half toward the lower index
    let i = libm::ceil(t - 0.5);
    if i <= 0.0 {
        0
    } else if i >= (n - 1) as f64 {
        n - 1
    } else {
        i as usize
    }
}

/// Uniform grid of signed intensities. Values are stored row-major by y.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    spec: GridSpec,
    values: Vec<f64>,
}

impl Plane {
    /// Zero plane over `spec`.
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Plane { spec, values: vec![0.0; spec.nx * spec.ny] })
    }

    /// Builds a plane from row-major values (one row per y cell).
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.nx * spec.ny {
            return Err(Error::DimensionMismatch { expected: spec.nx * spec.ny, found: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("plane value"));
        }
        Ok(Plane { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.values[iy * self.spec.nx + ix] = v;
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        self.spec.cell_of(x, y)
    }

    /// Value of the cell nearest to `(x, y)`.
    pub fn value_at(&self, x: f64, y: f64) -> Result<f64> {
        let (ix, iy) = self.cell_of(x, y)?;
        Ok(self.get(ix, iy))
    }

    /// Stamps `weight * window` centered on the cell nearest to `(x, y)`.
    /// Footprint cells outside the grid are skipped.
    pub fn drop_ink(&mut self, x: f64, y: f64, window: &InkWindow, weight: f64) -> Result<()> {
        finite(weight, "ink weight")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite("ink coordinate"));
        }
        let (ix, iy) = self.cell_of(x, y)?;
        self.drop_ink_at(ix, iy, window, weight);
        Ok(())
    }

    /// Cell-indexed variant of [`Plane::drop_ink`].
    pub fn drop_ink_at(&mut self, ix: usize, iy: usize, window: &InkWindow, weight: f64) {
        let nx = self.spec.nx;
        for (cx, cy, w) in window.footprint(ix, iy, nx, self.spec.ny) {
            self.values[cy * nx + cx] += weight * w;
        }
    }

    /// Sum of the strictly positive cells.
    pub fn positive_mass(&self) -> f64 {
        self.values.iter().filter(|v| **v > 0.0).sum()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }

    /// Multiplies every cell by `k`.
    pub fn scale(&mut self, k: f64) {
        self.values.iter_mut().for_each(|v| *v *= k);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowShape {
    Pyramid,
    Gaussian,
}

/// Stamp kernel with center weight 1.
#[derive(Debug, Clone, PartialEq)]
pub struct InkWindow {
    shape: WindowShape,
    rx: usize,
    ry: usize,
    weights: Vec<f64>,
}

impl Default for InkWindow {
    fn default() -> Self {
        InkWindow::pyramid(3, 3)
    }
}

impl InkWindow {
    pub fn new(shape: WindowShape, rx: usize, ry: usize) -> Self {
        let (w, h) = (2 * rx + 1, 2 * ry + 1);
        let mut weights = Vec::with_capacity(w * h);
        for dy in -(ry as isize)..=ry as isize {
            for dx in -(rx as isize)..=rx as isize {
                let d = scaled(dx, rx).max(scaled(dy, ry));
                let v = match shape {
                    WindowShape::Pyramid => 1.0 - d,
                    // sigma = half the radius; truncated at the radius
                    WindowShape::Gaussian => libm::exp(-2.0 * d * d),
                };
                weights.push(v.max(0.0));
            }
        }
        InkWindow { shape, rx, ry, weights }
    }

    pub fn pyramid(rx: usize, ry: usize) -> Self {
        Self::new(WindowShape::Pyramid, rx, ry)
    }

    pub fn gaussian(rx: usize, ry: usize) -> Self {
        Self::new(WindowShape::Gaussian, rx, ry)
    }

    pub fn shape(&self) -> WindowShape {
        self.shape
    }

    pub fn radii(&self) -> (usize, usize) {
        (self.rx, self.ry)
    }

    /// Weight at offset `(dx, dy)` from the center; zero outside the window.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        if dx.unsigned_abs() > self.rx || dy.unsigned_abs() > self.ry {
            return 0.0;
        }
        let col = (dx + self.rx as isize) as usize;
        let row = (dy + self.ry as isize) as usize;
        self.weights[row * (2 * self.rx + 1) + col]
    }

    /// Cells `(x, y, weight)` covered when centered on `(ix, iy)` in an
    /// `nx` x `ny` grid.
    pub fn footprint(&self, ix: usize, iy: usize, nx: usize, ny: usize) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let x0 = ix.saturating_sub(self.rx);
        let x1 = (ix + self.rx).min(nx - 1);
        let y0 = iy.saturating_sub(self.ry);
        let y1 = (iy + self.ry).min(ny - 1);
        (y0..=y1).flat_map(move |cy| {
            (x0..=x1).map(move |cx| {
                (cx, cy, self.weight(cx as isize - ix as isize, cy as isize - iy as isize))
            })
        })
    }
}

fn scaled(d: isize, r: usize) -> f64 {
    if r == 0 {
        0.0
    } else {
        d.unsigned_abs() as f64 / r as f64
    }
}

/// Behavior curve extracted from a plane: one y value per x column.
#[derive(Debug, Clone, PartialEq)]
pub struct NarrowLine {
    pub x_min: f64,
    pub x_max: f64,
    pub y_at: Vec<f64>,
    pub deviation: Vec<f64>,
    pub covered: Vec<bool>,
}

impl NarrowLine {
    /// A fully covered line with zero deviation through the given nodes.
    pub fn from_samples(x_range: (f64, f64), y_at: Vec<f64>) -> Result<Self> {
        if y_at.len() < 2 {
            return Err(config_err("a narrow line needs at least 2 nodes"));
        }
        if !(x_range.0 < x_range.1) {
            return Err(config_err("narrow line range must satisfy min < max"));
        }
        if y_at.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("narrow line node"));
        }
        let n = y_at.len();
        Ok(NarrowLine { x_min: x_range.0, x_max: x_range.1, y_at, deviation: vec![0.0; n], covered: vec![true; n] })
    }

    pub fn len(&self) -> usize {
        self.y_at.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_at.is_empty()
    }

    pub fn x_of(&self, i: usize) -> f64 {
        let n = self.y_at.len();
        if i + 1 == n {
            self.x_max
        } else {
            self.x_min + i as f64 * (self.x_max - self.x_min) / (n - 1) as f64
        }
    }

    /// Piecewise-linear evaluation, constant outside the line's x range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y_at.len();
        if x <= self.x_min {
            return self.y_at[0];
        }
        if x >= self.x_max {
            return self.y_at[n - 1];
        }
        let t = (x - self.x_min) / (self.x_max - self.x_min) * (n - 1) as f64;
        let i = (libm::floor(t) as usize).min(n - 2);
        let f = t - i as f64;
        self.y_at[i] * (1.0 - f) + self.y_at[i + 1] * f
    }

    /// Values at `n` evenly spaced points across the line's range.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        if n == self.y_at.len() {
            return self.y_at.clone();
        }
        (0..n)
            .map(|i| {
                let x = if i + 1 == n {
                    self.x_max
                } else {
                    self.x_min + i as f64 * (self.x_max - self.x_min) / (n - 1).max(1) as f64
                };
                self.eval(x)
            })
            .collect()
    }

    /// Resamples this line onto `n` nodes spanning `range`.
    pub fn resampled(&self, range: (f64, f64), n: usize) -> NarrowLine {
        let y_at: Vec<f64> = (0..n)
            .map(|i| {
                let x = if i + 1 == n { range.1 } else { range.0 + i as f64 * (range.1 - range.0) / (n - 1) as f64 };
                self.eval(x)
            })
            .collect();
        NarrowLine { x_min: range.0, x_max: range.1, y_at, deviation: vec![0.0; n], covered: vec![true; n] }
    }
}

struct ColumnStats {
    mass: f64,
    center: f64,
}

fn column_stats(plane: &Plane, ix: usize) -> ColumnStats {
    let spec = plane.spec();
    let (mut mass, mut moment) = (0.0, 0.0);
    for iy in 0..spec.ny {
        let v = plane.get(ix, iy);
        if v > 0.0 {
            mass += v;
            moment += v * spec.y_at(iy);
        }
    }
    let center = if mass > 0.0 { moment / mass } else { 0.0 };
    ColumnStats { mass, center }
}

fn column_deviation(plane: &Plane, ix: usize, center: f64) -> (f64, f64) {
    let spec = plane.spec();
    let (mut mass, mut second) = (0.0, 0.0);
    for iy in 0..spec.ny {
        let v = plane.get(ix, iy);
        if v > 0.0 {
            let d = spec.y_at(iy) - center;
            mass += v;
            second += v * d * d;
        }
    }
    if mass > 0.0 {
        (mass, libm::sqrt(second / mass))
    } else {
        (0.0, 0.0)
    }
}

/// Per-column center of gravity of the positive intensities.
///
/// Columns without positive mass are filled by linear interpolation between
/// the nearest covered columns, constant beyond the outermost ones.
pub fn extract_narrow_line(plane: &Plane) -> Result<NarrowLine> {
    let spec = plane.spec();
    let nx = spec.nx;
    let stats: Vec<ColumnStats> = (0..nx).map(|ix| column_stats(plane, ix)).collect();
    let covered: Vec<bool> = stats.iter().map(|s| s.mass > 0.0).collect();
    let anchors: Vec<usize> = (0..nx).filter(|&i| covered[i]).collect();
    if anchors.is_empty() {
        return Err(Error::EmptyPlane);
    }
    let mut y_at = vec![0.0; nx];
    for &i in &anchors {
        y_at[i] = stats[i].center.clamp(spec.y_min, spec.y_max);
    }
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    for ix in 0..first {
        y_at[ix] = y_at[first];
    }
    for ix in last + 1..nx {
        y_at[ix] = y_at[last];
    }
    for pair in anchors.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for ix in a + 1..b {
            let f = (ix - a) as f64 / (b - a) as f64;
            y_at[ix] = y_at[a] * (1.0 - f) + y_at[b] * f;
        }
    }
    let deviation = (0..nx)
        .map(|ix| if covered[ix] { column_deviation(plane, ix, y_at[ix]).1 } else { 0.0 })
        .collect();
    Ok(NarrowLine { x_min: spec.x_min, x_max: spec.x_max, y_at, deviation, covered })
}

/// Spread of a plane's positive mass around `line`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spread {
    pub per_column: Vec<f64>,
    /// Mass-weighted mean of the per-column spreads over covered columns.
    pub aggregate: f64,
}

impl Spread {
    /// Mass-weighted aggregate restricted to columns `cols`.
    pub fn aggregate_over(&self, masses: &[f64], cols: core::ops::RangeInclusive<usize>) -> f64 {
        let (mut m, mut s) = (0.0, 0.0);
        for ix in cols {
            m += masses[ix];
            s += masses[ix] * self.per_column[ix];
        }
        if m > 0.0 {
            s / m
        } else {
            0.0
        }
    }
}

pub fn spread_of(plane: &Plane, line: &NarrowLine) -> Result<Spread> {
    let nx = plane.spec().nx;
    if line.len() != nx {
        return Err(Error::DimensionMismatch { expected: nx, found: line.len() });
    }
    let mut per_column = vec![0.0; nx];
    let (mut total, mut acc) = (0.0, 0.0);
    for ix in 0..nx {
        let (mass, sd) = column_deviation(plane, ix, line.y_at[ix]);
        if mass > 0.0 {
            per_column[ix] = sd;
            total += mass;
            acc += mass * sd;
        }
    }
    let aggregate = if total > 0.0 { acc / total } else { 0.0 };
    Ok(Spread { per_column, aggregate })
}

/// Positive mass in each column.
pub fn column_masses(plane: &Plane) -> Vec<f64> {
    (0..plane.spec().nx).map(|ix| column_stats(plane, ix).mass).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> GridSpec {
        GridSpec::new((0.0, 1.0), (0.0, 1.0), n, n).unwrap()
    }

    #[test]
    fn make_plane_is_zero() {
        let p = Plane::new(unit(4)).unwrap();
        assert_eq!(p.values(), &[0.0; 16]);
        let pend = Plane::new(GridSpec::new((-0.9, 0.9), (-25.0, 25.0), 64, 64).unwrap()).unwrap();
        assert_eq!(pend.values().len(), 64 * 64);
        assert!(pend.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn degenerate_specs_rejected() {
        assert!(GridSpec::new((1.0, 1.0), (0.0, 1.0), 4, 4).is_err());
        assert!(GridSpec::new((1.0, 0.0), (0.0, 1.0), 4, 4).is_err());
        assert!(GridSpec::new((0.0, 1.0), (0.0, 1.0), 1, 4).is_err());
        assert!(GridSpec::new((0.0, f64::INFINITY), (0.0, 1.0), 4, 4).is_err());
    }

    #[test]
    fn cell_of_corners_and_clamp() {
        let s = GridSpec::new((-1.0, 2.0), (3.0, 5.0), 7, 9).unwrap();
        assert_eq!(s.cell_of(-1.0, 3.0).unwrap(), (0, 0));
        assert_eq!(s.cell_of(2.0, 5.0).unwrap(), (6, 8));
        assert_eq!(s.cell_of(100.0, -100.0).unwrap(), (6, 0));
        assert!(s.cell_of(f64::NAN, 0.0).is_err());
        // half-way between cells 0 and 1 goes to 0
        assert_eq!(s.cell_of(-1.0 + 0.25, 3.0).unwrap().0, 0);
        for ix in 0..7 {
            for iy in 0..9 {
                assert_eq!(s.cell_of(s.x_at(ix), s.y_at(iy)).unwrap(), (ix, iy));
            }
        }
    }

    #[test]
    fn point_stamp_and_cancellation() {
        let mut p = Plane::new(unit(5)).unwrap();
        p.drop_ink(0.5, 0.5, &InkWindow::pyramid(0, 0), 1.0).unwrap();
        assert_eq!(p.get(2, 2), 1.0);
        assert_eq!(p.values().iter().filter(|v| **v != 0.0).count(), 1);
        p.drop_ink(0.5, 0.5, &InkWindow::pyramid(0, 0), -1.0).unwrap();
        assert!(p.values().iter().all(|v| *v == 0.0));
        assert!(p.drop_ink(0.5, 0.5, &InkWindow::pyramid(0, 0), f64::NAN).is_err());
    }

    #[test]
    fn pyramid_5x5_matches_hand_values() {
        let mut p = Plane::new(unit(5)).unwrap();
        p.drop_ink(0.5, 0.5, &InkWindow::pyramid(2, 2), 1.0).unwrap();
        for iy in 0..5 {
            for ix in 0..5 {
                let d = (ix as f64 - 2.0).abs().max((iy as f64 - 2.0).abs());
                let expect = 1.0 - d / 2.0;
                assert!((p.get(ix, iy) - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn window_weights_monotone() {
        for w in [InkWindow::pyramid(3, 2), InkWindow::gaussian(4, 4)] {
            assert_eq!(w.weight(0, 0), 1.0);
            let (rx, ry) = w.radii();
            for dy in -(ry as isize)..=ry as isize {
                for dx in 0..rx as isize {
                    assert!(w.weight(dx + 1, dy) <= w.weight(dx, dy));
                    assert!(w.weight(dx, dy) >= 0.0);
                }
            }
        }
        assert_eq!(InkWindow::pyramid(3, 3).weight(3, 0), 0.0);
    }

    #[test]
    fn truncated_at_edges() {
        let mut p = Plane::new(unit(4)).unwrap();
        p.drop_ink(0.0, 0.0, &InkWindow::pyramid(2, 2), 1.0).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.get(1, 1), 0.5);
        assert_eq!(p.get(3, 3), 0.0);
    }

    #[test]
    fn single_drop_line() {
        let mut p = Plane::new(unit(8)).unwrap();
        let s = *p.spec();
        p.drop_ink(s.x_at(3), s.y_at(5), &InkWindow::pyramid(0, 0), 1.0).unwrap();
        let line = extract_narrow_line(&p).unwrap();
        assert!(line.y_at.iter().all(|y| (*y - s.y_at(5)).abs() < 1e-15));
        assert_eq!(line.covered.iter().filter(|c| **c).count(), 1);
        assert!(line.covered[3]);
    }

    #[test]
    fn symmetric_pair_line_and_spread() {
        let mut p = Plane::new(unit(9)).unwrap();
        let s = *p.spec();
        let w = InkWindow::pyramid(0, 0);
        p.drop_ink(s.x_at(4), s.y_at(2), &w, 1.0).unwrap();
        p.drop_ink(s.x_at(4), s.y_at(6), &w, 1.0).unwrap();
        let line = extract_narrow_line(&p).unwrap();
        assert!((line.y_at[4] - s.y_at(4)).abs() < 1e-15);
        let spread = spread_of(&p, &line).unwrap();
        assert!((spread.per_column[4] - (s.y_at(6) - s.y_at(4))).abs() < 1e-15);
    }

    #[test]
    fn empty_plane_and_negative_only() {
        let mut p = Plane::new(unit(4)).unwrap();
        assert_eq!(extract_narrow_line(&p), Err(Error::EmptyPlane));
        p.drop_ink(0.5, 0.5, &InkWindow::pyramid(1, 1), -1.0).unwrap();
        assert_eq!(extract_narrow_line(&p), Err(Error::EmptyPlane));
    }

    #[test]
    fn negatives_excluded_from_line() {
        let mut p = Plane::new(unit(5)).unwrap();
        let s = *p.spec();
        let w = InkWindow::pyramid(0, 0);
        p.drop_ink(s.x_at(1), s.y_at(1), &w, 2.0).unwrap();
        p.drop_ink(s.x_at(1), s.y_at(4), &w, -5.0).unwrap();
        let line = extract_narrow_line(&p).unwrap();
        assert_eq!(line.y_at[1], s.y_at(1));
    }

    #[test]
    fn spread_dimension_mismatch() {
        let mut p = Plane::new(unit(4)).unwrap();
        p.drop_ink(0.5, 0.5, &InkWindow::pyramid(0, 0), 1.0).unwrap();
        let line = NarrowLine::from_samples((0.0, 1.0), vec![0.0; 5]).unwrap();
        assert!(matches!(spread_of(&p, &line), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn line_interpolation() {
        let line = NarrowLine::from_samples((0.0, 2.0), vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(line.eval(-1.0), 0.0);
        assert_eq!(line.eval(0.5), 0.5);
        assert_eq!(line.eval(1.5), 2.5);
        assert_eq!(line.eval(3.0), 4.0);
        assert_eq!(line.sample(3), vec![0.0, 1.0, 4.0]);
        assert_eq!(line.sample(5), vec![0.0, 0.5, 1.0, 2.5, 4.0]);
    }
}
