//! Prediction-error measures: MSE and the ranking difference error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// Mean squared error.
pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64)
}

fn tri(n: usize) -> usize {
    n * (n + 1) / 2
}

/// `max_π Σ_{i ≤ μ} |i − π⁻¹(i)|` over permutations of `1..=λ`.
///
/// The optimum sends the first `a` of the top-μ positions to the `a` largest
/// ranks and the last `μ − a` to the smallest ones, for the best `a`.
pub fn rde_denominator(lambda: usize, mu: usize) -> usize {
    (0..=mu)
        .map(|a| {
            let b = mu - a;
            let down = tri(mu) - tri(mu - b) - tri(b);
            let up = tri(lambda) - tri(lambda - a) - tri(a);
            down + up
        })
        .max()
        .unwrap_or(0)
}

/// Ranking difference error of predictions `y_hat` against the truth `y`
/// over the `μ` points the model ranks best. Ranks are strict, ties broken
/// by index.
pub fn rde(y: &[f64], y_hat: &[f64], mu: usize) -> Result<f64> {
    let lambda = y.len();
    if y_hat.len() != lambda {
        return Err(Error::DimensionMismatch {
            expected: lambda,
            got: y_hat.len(),
        });
    }
    if mu == 0 || mu > lambda {
        return Err(Error::InvalidArgument(format!("μ = {mu} with λ = {lambda}")));
    }
    let r_true = stats::ordinal_ranks(y);
    let r_model = stats::ordinal_ranks(y_hat);
    let num: usize = r_model
        .iter()
        .zip(&r_true)
        .filter(|(m, _)| **m <= mu)
        .map(|(m, t)| m.abs_diff(*t))
        .sum();
    let den = rde_denominator(lambda, mu);
    Ok(if den == 0 { 0.0 } else { num as f64 / den as f64 })
}

/// Errors of one (model, generation) cell; both absent when the model was
/// not trained or could not predict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub mse: Option<f64>,
    pub rde: Option<f64>,
    pub not_trained: bool,
}

impl ErrorPair {
    pub fn missing() -> Self {
        ErrorPair {
            mse: None,
            rde: None,
            not_trained: true,
        }
    }

    pub fn compute(y: &[f64], y_hat: &[f64], mu: usize) -> Result<Self> {
        Ok(ErrorPair {
            mse: Some(mse(y, y_hat)?),
            rde: Some(rde(y, y_hat, mu)?),
            not_trained: false,
        })
    }
}
