//! Features of the CMA-ES state and of a point set relative to it.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{named, FeatureValue, Features};
use crate::cmaes::expected_norm;
use crate::sample::SampleSet;
use crate::state::DistributionState;

/// Features that depend only on the state: generation, step size, restart
/// count, `‖p_c‖²` and `‖p_σ‖ / E‖N(0, I)‖`.
pub fn state_features(state: &DistributionState) -> Features {
    named([
        ("generation", FeatureValue::Real(state.generation as f64)),
        ("step_size", FeatureValue::Real(state.sigma)),
        ("restart", FeatureValue::Real(state.restarts as f64)),
        ("evopath_c_norm", FeatureValue::Real(state.p_c.norm_squared())),
        (
            "evopath_s_norm",
            FeatureValue::Real(state.p_sigma.norm() / expected_norm(state.dim())),
        ),
    ])
}

/// Mahalanobis distance of the CMA mean to the sample mean of the points
/// under their sample covariance.
pub fn mean_dist(state: &DistributionState, set: &SampleSet) -> FeatureValue {
    let n = set.len();
    let d = set.dim();
    if n < 2 {
        return FeatureValue::NanOut;
    }
    let mut mu = DVector::zeros(d);
    for x in set.points() {
        mu += x;
    }
    mu /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for x in set.points() {
        let c = x - &mu;
        cov += &c * c.transpose();
    }
    cov /= (n - 1) as f64;
    let Some(ch) = Cholesky::new(cov) else {
        return FeatureValue::NanOut;
    };
    // reject numerically singular covariances
    let diag = ch.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .take(d)
        .fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
    if !(lo > 1e-12 * hi) {
        return FeatureValue::NanOut;
    }
    let diff = &state.mean - &mu;
    FeatureValue::from_f64(diff.dot(&ch.solve(&diff)).sqrt())
}

/// Log-likelihood of the points under `N(m, σ²C)`.
pub fn cma_lik(state: &DistributionState, set: &SampleSet) -> FeatureValue {
    let n = set.len();
    if n == 0 {
        return FeatureValue::NanOut;
    }
    let d = state.dim() as f64;
    let Some(ch) = Cholesky::new(state.cov.clone()) else {
        return FeatureValue::NanOut;
    };
    let logdet: f64 = 2.0 * ch.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad: f64 = set
        .points()
        .iter()
        .map(|x| {
            let u = (x - &state.mean) / state.sigma;
            u.dot(&ch.solve(&u))
        })
        .sum();
    let sigma2 = state.sigma * state.sigma;
    FeatureValue::from_f64(-(n as f64) / 2.0 * (d * (2.0 * PI * sigma2).ln() + logdet) - 0.5 * quad)
}

/// Set-dependent CMA features `{mean_dist, cma_lik}`.
pub fn set_features(state: &DistributionState, set: &SampleSet) -> Features {
    named([("mean_dist", mean_dist(state, set)), ("cma_lik", cma_lik(state, set))])
}

/// All seven CMA features.
pub fn cma_features(state: &DistributionState, set: &SampleSet) -> Features {
    let mut f = state_features(state);
    f.extend(set_features(state, set));
    f
}
