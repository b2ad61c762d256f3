//! Stochastic action modifier: Gaussian exploration gated by the critic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{config_err, finite, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamConfig {
    /// Variance of the perturbation, in actuator units squared.
    pub var: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SamConfig {
    fn default() -> Self {
        SamConfig { var: 1.0, alpha: 2.0, seed: 0 }
    }
}

impl SamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.var.is_finite() && self.var >= 0.0) {
            return Err(config_err("sam.var must be finite and non-negative"));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(config_err("sam.alpha must be finite and positive"));
        }
        Ok(())
    }
}

/// Seeded pseudo-random stream. Every random draw of a run comes from here.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.random::<f64>()
    }
}

/// Perturbation multiplier `exp(-alpha * v) - exp(-alpha)`; zero at `v = 1`.
pub fn gate(alpha: f64, rpp_value: f64) -> f64 {
    libm::exp(-alpha * rpp_value) - libm::exp(-alpha)
}

/// Applies a given standard-normal draw `z`: the noise is `z * sqrt(var)`.
pub fn modulate_with_draw(asn_out: f64, rpp_value: f64, cfg: &SamConfig, z: f64) -> f64 {
    let g = gate(cfg.alpha, rpp_value);
    if g == 0.0 || cfg.var == 0.0 {
        return asn_out;
    }
    asn_out + z * libm::sqrt(cfg.var) * g
}

/// Perturbs the recommended action; a perfect critic score leaves it intact.
pub fn modulate(asn_out: f64, rpp_value: f64, cfg: &SamConfig, rng: &mut RngStream) -> Result<f64> {
    cfg.validate()?;
    finite(asn_out, "recommended action")?;
    finite(rpp_value, "critic value")?;
    let z = rng.standard_normal();
    Ok(modulate_with_draw(asn_out, rpp_value, cfg, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn full_score_is_untouched() {
        let cfg = SamConfig { var: 4.0, alpha: 1.3, seed: 0 };
        let mut rng = RngStream::new(11);
        for k in 0..200 {
            let a = -5.0 + k as f64 * 0.05;
            assert_eq!(modulate(a, 1.0, &cfg, &mut rng).unwrap().to_bits(), a.to_bits());
        }
        assert_eq!(modulate(-0.0, 1.0, &cfg, &mut rng).unwrap().to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn zero_variance_is_untouched() {
        let cfg = SamConfig { var: 0.0, alpha: 2.0, seed: 0 };
        let mut rng = RngStream::new(3);
        for v in [-1.0, -0.3, 0.0, 0.7] {
            assert_eq!(modulate(1.25, v, &cfg, &mut rng).unwrap(), 1.25);
        }
    }

    #[test]
    fn gate_at_zero_value() {
        let cfg = SamConfig { var: 1.0, alpha: 1.0, seed: 0 };
        let g = 1.0 - (-1.0f64).exp();
        assert!((g - 0.6321).abs() < 1e-4);
        let z = 0.8;
        assert!((modulate_with_draw(2.0, 0.0, &cfg, z) - 2.0 - g * z).abs() < 1e-15);
    }

    #[test]
    fn gate_is_strictly_decreasing() {
        for alpha in [0.5, 2.0, 5.0] {
            let vals: Vec<f64> = (0..=200).map(|k| gate(alpha, -1.0 + k as f64 * 0.01)).collect();
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
            assert_eq!(*vals.last().unwrap(), 0.0);
        }
    }

    #[test]
    fn invalid_config() {
        let mut rng = RngStream::new(0);
        assert!(modulate(0.0, 0.0, &SamConfig { var: -1.0, ..SamConfig::default() }, &mut rng).is_err());
        assert!(modulate(0.0, 0.0, &SamConfig { alpha: 0.0, ..SamConfig::default() }, &mut rng).is_err());
    }

    #[test]
    fn deterministic_and_unbiased() {
        let cfg = SamConfig { var: 2.0, alpha: 2.0, seed: 0 };
        let run = |seed| {
            let mut rng = RngStream::new(seed);
            (0..20000).map(|_| modulate(0.0, 0.0, &cfg, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        let a = run(5);
        assert_eq!(a, run(5));
        let n = a.len() as f64;
        let mean = a.iter().sum::<f64>() / n;
        let sigma = 2.0f64.sqrt() * gate(2.0, 0.0);
        assert!(mean.abs() < 3.0 * sigma / n.sqrt());
        let var = a.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((var.sqrt() / sigma - 1.0).abs() < 0.03);
    }
}
