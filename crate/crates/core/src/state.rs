//! CMA-ES distribution state.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sample::Point;

/// Mean, step size, covariance and evolution paths of a CMA-ES run at one
/// generation, together with the generation and restart counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "StateJson", try_from = "StateJson")]
pub struct DistributionState {
    pub mean: Point,
    pub sigma: f64,
    pub cov: DMatrix<f64>,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub generation: usize,
    pub restarts: usize,
}

impl DistributionState {
    /// Initial state: `C = I`, zero evolution paths, generation 0.
    pub fn initial(mean: Point, sigma: f64) -> Self {
        let d = mean.len();
        DistributionState {
            mean,
            sigma,
            cov: DMatrix::identity(d, d),
            p_sigma: DVector::zeros(d),
            p_c: DVector::zeros(d),
            generation: 0,
            restarts: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// The sampling covariance `σ²C`.
    pub fn sampling_cov(&self) -> DMatrix<f64> {
        &self.cov * (self.sigma * self.sigma)
    }

    /// Checks σ > 0, dimensions, symmetry of C within 1e-10 and positive
    /// definiteness.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidArgument("zero-dimensional state".into()));
        }
        Error::check_dim(d, self.cov.nrows())?;
        Error::check_dim(d, self.cov.ncols())?;
        Error::check_dim(d, self.p_sigma.len())?;
        Error::check_dim(d, self.p_c.len())?;
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("step size {}", self.sigma)));
        }
        let asym = (&self.cov - self.cov.transpose()).amax();
        if !(asym <= 1e-10) {
            return Err(Error::DegenerateCovariance);
        }
        if !(linalg::min_eigenvalue(&self.cov) > 0.0) {
            return Err(Error::DegenerateCovariance);
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    m: Vec<f64>,
    sigma: f64,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    p_sigma: Vec<f64>,
    p_c: Vec<f64>,
    g: usize,
    n_r: usize,
}

impl From<DistributionState> for StateJson {
    fn from(s: DistributionState) -> Self {
        StateJson {
            m: s.mean.iter().copied().collect(),
            sigma: s.sigma,
            c: s.cov.row_iter().map(|r| r.iter().copied().collect()).collect(),
            p_sigma: s.p_sigma.iter().copied().collect(),
            p_c: s.p_c.iter().copied().collect(),
            g: s.generation,
            n_r: s.restarts,
        }
    }
}

impl TryFrom<StateJson> for DistributionState {
    type Error = String;

    fn try_from(j: StateJson) -> std::result::Result<Self, String> {
        let d = j.m.len();
        if j.c.len() != d || j.c.iter().any(|r| r.len() != d) {
            return Err(format!("C must be {d}x{d}"));
        }
        if j.p_sigma.len() != d || j.p_c.len() != d {
            return Err("evolution path length mismatch".into());
        }
        Ok(DistributionState {
            mean: DVector::from_vec(j.m),
            sigma: j.sigma,
            cov: DMatrix::from_fn(d, d, |r, c| j.c[r][c]),
            p_sigma: DVector::from_vec(j.p_sigma),
            p_c: DVector::from_vec(j.p_c),
            generation: j.g,
            restarts: j.n_r,
        })
    }
}
