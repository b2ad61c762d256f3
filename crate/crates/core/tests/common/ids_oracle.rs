//! Brute-force reference computations for ink planes, written without the
//! library's own grid code.

use ralm_core::alm::AlmConfig;
use ralm_core::grid::{GridSpec, WindowShape};

pub fn nearest_node(v: f64, lo: f64, step: f64, n: usize) -> usize {
    let mut best = 0;
    for i in 1..n {
        if (v - (lo + i as f64 * step)).abs() < (v - (lo + best as f64 * step)).abs() {
            best = i;
        }
    }
    best
}

pub fn window_weight(shape: WindowShape, rx: usize, ry: usize, dx: i64, dy: i64) -> f64 {
    if dx.unsigned_abs() as usize > rx || dy.unsigned_abs() as usize > ry {
        return 0.0;
    }
    let sx = if rx == 0 { 0.0 } else { dx.abs() as f64 / rx as f64 };
    let sy = if ry == 0 { 0.0 } else { dy.abs() as f64 / ry as f64 };
    let d = sx.max(sy);
    match shape {
        WindowShape::Pyramid => (1.0 - d).max(0.0),
        WindowShape::Gaussian => (-2.0 * d * d).exp(),
    }
}

pub struct Drop {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

pub fn oracle_plane(spec: &GridSpec, shape: WindowShape, rx: usize, ry: usize, drops: &[Drop]) -> Vec<f64> {
    let dx = (spec.x_max - spec.x_min) / (spec.nx - 1) as f64;
    let dy = (spec.y_max - spec.y_min) / (spec.ny - 1) as f64;
    let mut out = vec![0.0; spec.nx * spec.ny];
    for d in drops {
        let cx = nearest_node(d.x, spec.x_min, dx, spec.nx) as i64;
        let cy = nearest_node(d.y, spec.y_min, dy, spec.ny) as i64;
        for iy in 0..spec.ny {
            for ix in 0..spec.nx {
                out[iy * spec.nx + ix] += d.w * window_weight(shape, rx, ry, ix as i64 - cx, iy as i64 - cy);
            }
        }
    }
    out
}

/// Per-column center of gravity of positive cells; gaps interpolated.
pub fn oracle_line(spec: &GridSpec, values: &[f64]) -> Vec<f64> {
    let dy = (spec.y_max - spec.y_min) / (spec.ny - 1) as f64;
    let mut cog: Vec<Option<f64>> = Vec::new();
    for ix in 0..spec.nx {
        let (mut m, mut s) = (0.0, 0.0);
        for iy in 0..spec.ny {
            let v = values[iy * spec.nx + ix];
            if v > 0.0 {
                m += v;
                s += v * (spec.y_min + iy as f64 * dy);
            }
        }
        cog.push(if m > 0.0 { Some((s / m).clamp(spec.y_min, spec.y_max)) } else { None });
    }
    (0..spec.nx)
        .map(|ix| {
            if let Some(c) = cog[ix] {
                return c;
            }
            let left = (0..ix).rev().find(|&j| cog[j].is_some());
            let right = (ix + 1..spec.nx).find(|&j| cog[j].is_some());
            match (left, right) {
                (Some(a), Some(b)) => {
                    let f = (ix - a) as f64 / (b - a) as f64;
                    cog[a].unwrap() * (1.0 - f) + cog[b].unwrap() * f
                }
                (Some(a), None) => cog[a].unwrap(),
                (None, Some(b)) => cog[b].unwrap(),
                (None, None) => f64::NAN,
            }
        })
        .collect()
}

/// Spread of `y = f(x)` samples whose x lies in `[lo, hi)` (upper domain
/// edge included), computed from scratch.
pub fn oracle_region_spread(xs: &[f64], f: impl Fn(f64) -> f64, lo: f64, hi: f64, domain_hi: f64, cfg: &AlmConfig, out: (f64, f64)) -> f64 {
    let spec = GridSpec::new((lo, hi), out, cfg.nx, cfg.ny).unwrap();
    let (rx, ry) = cfg.window.radii();
    let drops: Vec<Drop> = xs
        .iter()
        .filter(|&&x| x >= lo && (x < hi || (hi == domain_hi && x <= hi)))
        .map(|&x| Drop { x, y: f(x), w: 1.0 })
        .collect();
    let values = oracle_plane(&spec, cfg.window.shape(), rx, ry, &drops);
    let line = oracle_line(&spec, &values);
    let dy = (spec.y_max - spec.y_min) / (spec.ny - 1) as f64;
    let (mut total, mut acc) = (0.0, 0.0);
    for ix in 0..spec.nx {
        let (mut m, mut s2) = (0.0, 0.0);
        for iy in 0..spec.ny {
            let v = values[iy * spec.nx + ix];
            if v > 0.0 {
                let d = spec.y_min + iy as f64 * dy - line[ix];
                m += v;
                s2 += v * d * d;
            }
        }
        if m > 0.0 {
            total += m;
            acc += m * (s2 / m).sqrt();
        }
    }
    acc / total
}
