use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Strategy parameters of one CMA-ES run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaParams {
    pub dim: usize,
    pub lambda: usize,
    pub mu: usize,
    /// Positive, nonincreasing, summing to one.
    pub weights: Vec<f64>,
    pub mu_w: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    /// `E‖N(0, I)‖`.
    pub chi_n: f64,
    /// Apply the `(1 − h_σ) c_c (2 − c_c)` variance-loss correction to the
    /// rank-one term when `h_σ = 0`.
    pub hsig_correction: bool,
}

/// Exact `E‖N(0, I_d)‖ = √2 Γ((d+1)/2) / Γ(d/2)`.
pub fn expected_norm(d: usize) -> f64 {
    let d = d as f64;
    std::f64::consts::SQRT_2 * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
}

/// Default strategy parameters; `lambda` defaults to `4 + ⌊3 ln d⌋`.
pub fn default_params(d: usize, lambda: Option<usize>) -> Result<CmaParams> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
    }
    let n = d as f64;
    let lambda = lambda.unwrap_or(4 + (3.0 * n.ln()).floor() as usize);
    if lambda < 2 {
        return Err(Error::InvalidArgument("population size must be ≥ 2".into()));
    }
    let mu = lambda / 2;
    let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mu_w = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

    let c_sigma = (mu_w + 2.0) / (n + mu_w + 5.0);
    let d_sigma = 1.0 + 2.0 * (((mu_w - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
    let c_c = (4.0 + mu_w / n) / (n + 4.0 + 2.0 * mu_w / n);
    let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_w);
    let c_mu = (1.0 - c_1).min(2.0 * (mu_w - 2.0 + 1.0 / mu_w) / ((n + 2.0).powi(2) + mu_w));

    Ok(CmaParams {
        dim: d,
        lambda,
        mu,
        weights,
        mu_w,
        c_sigma,
        d_sigma,
        c_c,
        c_1,
        c_mu,
        chi_n: expected_norm(d),
        hsig_correction: true,
    })
}

impl CmaParams {
    /// Same settings with a different population size.
    pub fn with_lambda(&self, lambda: usize) -> Result<CmaParams> {
        let mut p = default_params(self.dim, Some(lambda))?;
        p.hsig_correction = self.hsig_correction;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_population_sizes() {
        let p2 = default_params(2, None).unwrap();
        assert_eq!(p2.lambda, 6);
        assert_eq!(p2.mu, 3);
        assert_eq!(default_params(10, None).unwrap().lambda, 10);
        assert_eq!(default_params(20, None).unwrap().lambda, 12);
    }

    #[test]
    fn weights_and_rates_are_consistent() {
        for d in [1, 2, 3, 5, 10, 20, 40] {
            for lambda in [None, Some(4), Some(50)] {
                let p = default_params(d, lambda).unwrap();
                assert_eq!(p.mu, p.lambda / 2);
                assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(p.weights.windows(2).all(|w| w[0] >= w[1]));
                assert!(p.weights.iter().all(|&w| w > 0.0));
                assert!(p.c_1 + p.c_mu <= 1.0);
                for r in [p.c_sigma, p.d_sigma, p.c_c, p.c_1, p.mu_w] {
                    assert!(r > 0.0);
                }
                assert!(p.c_mu >= 0.0);
            }
        }
    }

    #[test]
    fn expected_norm_values() {
        assert!((expected_norm(1) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        // E‖N(0,I_2)‖ = √(π/2)
        assert!((expected_norm(2) - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-14);
    }
}
