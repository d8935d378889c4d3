//! Mahalanobis distance under σ²C and the σ²C-basis transform.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sample::{Point, SampleSet};
use crate::state::DistributionState;
use crate::stats;

/// `sqrt((x−y)ᵀ σ⁻² C⁻¹ (x−y))`.
pub fn mahalanobis_distance(x: &Point, y: &Point, sigma: f64, cov: &DMatrix<f64>) -> Result<f64> {
    Metric::mahalanobis(sigma, cov)?.distance(x, y)
}

/// Distance used for neighbour search and distance-based features.
#[derive(Debug, Clone)]
pub enum Metric {
    Euclidean,
    /// Stores the whitening matrix `L⁻¹/σ` with `C = L Lᵀ`.
    Mahalanobis {
        whitening: DMatrix<f64>,
    },
}

impl Metric {
    pub fn mahalanobis(sigma: f64, cov: &DMatrix<f64>) -> Result<Metric> {
        if !(sigma > 0.0) || cov.nrows() != cov.ncols() {
            return Err(Error::DegenerateCovariance);
        }
        if (cov - cov.transpose()).amax() > 1e-10 * cov.amax().max(1.0) {
            return Err(Error::DegenerateCovariance);
        }
        let chol = Cholesky::new(cov.clone()).ok_or(Error::DegenerateCovariance)?;
        let d = cov.nrows();
        let linv = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(d, d))
            .ok_or(Error::DegenerateCovariance)?;
        Ok(Metric::Mahalanobis {
            whitening: linv / sigma,
        })
    }

    /// The `σ²C` metric of a CMA-ES state.
    pub fn from_state(state: &DistributionState) -> Result<Metric> {
        Self::mahalanobis(state.sigma, &state.cov)
    }

    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        Error::check_dim(x.len(), y.len())?;
        Ok(self.distance_unchecked(x, y))
    }

    pub(crate) fn distance_unchecked(&self, x: &Point, y: &Point) -> f64 {
        match self {
            Metric::Euclidean => (x - y).norm(),
            Metric::Mahalanobis { whitening } => (whitening * (x - y)).norm(),
        }
    }

    /// Maps points so that the Euclidean distance of the images equals this
    /// metric. Used to precompute distances in bulk.
    pub fn embed(&self, x: &Point) -> Point {
        match self {
            Metric::Euclidean => x.clone(),
            Metric::Mahalanobis { whitening } => whitening * x,
        }
    }
}

/// Affine map of inputs into the σ²C basis plus an output normalisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSpec {
    pub mean: Point,
    /// `C^{-1/2}/σ` (symmetric root).
    pub root_inv: DMatrix<f64>,
    pub y_shift: f64,
    pub y_scale: f64,
}

/// Standard deviations below this use unit output scale.
pub const Y_SCALE_FLOOR: f64 = 1e-14;

impl TransformSpec {
    pub fn identity(dim: usize) -> Self {
        TransformSpec {
            mean: Point::zeros(dim),
            root_inv: DMatrix::identity(dim, dim),
            y_shift: 0.0,
            y_scale: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn forward_point(&self, x: &Point) -> Point {
        &self.root_inv * (x - &self.mean)
    }

    pub fn forward_y(&self, y: f64) -> f64 {
        (y - self.y_shift) / self.y_scale
    }

    /// Inverse of [`forward_point`](Self::forward_point).
    pub fn inverse_point(&self, z: &Point) -> Result<Point> {
        let lu = self.root_inv.clone().lu();
        let x = lu.solve(z).ok_or(Error::DegenerateCovariance)?;
        Ok(x + &self.mean)
    }

    /// Same transform with the output normalisation disabled.
    pub fn inputs_only(&self) -> TransformSpec {
        TransformSpec {
            y_shift: 0.0,
            y_scale: 1.0,
            ..self.clone()
        }
    }
}

/// Builds the σ²C-basis transform centred at the CMA mean and the output
/// normalisation to zero mean and unit (population) variance.
pub fn make_transform(state: &DistributionState, y_train: &[f64]) -> Result<TransformSpec> {
    if y_train.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(state.sigma > 0.0) {
        return Err(Error::DegenerateCovariance);
    }
    let root_inv = linalg::sym_inv_sqrt(&state.cov)? / state.sigma;
    let y_shift = stats::mean(y_train);
    let sd = stats::pop_std(y_train);
    let y_scale = if sd < Y_SCALE_FLOOR || !sd.is_finite() { 1.0 } else { sd };
    Ok(TransformSpec {
        mean: state.mean.clone(),
        root_inv,
        y_shift,
        y_scale,
    })
}

/// Input-only σ²C transform (no output normalisation).
pub fn basis_transform(state: &DistributionState) -> Result<TransformSpec> {
    let root_inv = linalg::sym_inv_sqrt(&state.cov)? / state.sigma;
    Ok(TransformSpec {
        mean: state.mean.clone(),
        root_inv,
        y_shift: 0.0,
        y_scale: 1.0,
    })
}

pub fn apply_transform(t: &TransformSpec, set: &SampleSet) -> Result<SampleSet> {
    Error::check_dim(t.dim(), set.dim())?;
    Ok(set.map_points(|x| t.forward_point(x)).map_outputs(|y| t.forward_y(y)))
}

/// Undoes [`apply_transform`].
pub fn invert_transform(t: &TransformSpec, set: &SampleSet) -> Result<SampleSet> {
    Error::check_dim(t.dim(), set.dim())?;
    let points = set
        .points()
        .iter()
        .map(|z| t.inverse_point(z))
        .collect::<Result<Vec<_>>>()?;
    let outputs = set
        .outputs()
        .iter()
        .map(|y| y.map(|v| invert_transform_y(t, v)))
        .collect();
    SampleSet::new(set.dim(), points, outputs)
}

pub fn invert_transform_y(t: &TransformSpec, y: f64) -> f64 {
    y * t.y_scale + t.y_shift
}
