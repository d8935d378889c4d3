//! Polynomial surrogates: the lq ladder (linear, pure quadratic, full
//! quadratic) and the locally weighted full-quadratic lmm model.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sample::{Point, SampleSet};
use crate::state::DistributionState;
use crate::transform::Metric;

/// Relative singular-value tolerance for the rank check of a design matrix.
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyKind {
    Linear,
    PureQuadratic,
    FullQuadratic,
}

impl PolyKind {
    pub fn n_coefficients(self, d: usize) -> usize {
        match self {
            PolyKind::Linear => d + 1,
            PolyKind::PureQuadratic => 2 * d + 1,
            PolyKind::FullQuadratic => (d + 1) * (d + 2) / 2,
        }
    }

    fn lower(self) -> Option<PolyKind> {
        match self {
            PolyKind::FullQuadratic => Some(PolyKind::PureQuadratic),
            PolyKind::PureQuadratic => Some(PolyKind::Linear),
            PolyKind::Linear => None,
        }
    }
}

/// `f(x) = uᵀAu + bᵀu + c` with `u = x − center`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyModel {
    pub kind: PolyKind,
    pub center: Point,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl PolyModel {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn predict(&self, x: &Point) -> f64 {
        let u = x - &self.center;
        (u.transpose() * &self.a * &u)[(0, 0)] + self.b.dot(&u) + self.c
    }

    /// Rewrites a model fitted on `z = W(x − center)` into the coordinates of
    /// `x`.
    fn pull_back(self, w: &DMatrix<f64>, center: Point) -> PolyModel {
        PolyModel {
            kind: self.kind,
            a: linalg::symmetrize(&(w.transpose() * &self.a * w)),
            b: w.transpose() * &self.b,
            c: self.c,
            center,
        }
    }
}

/// Basis row for `u`: `[1, u_1..u_d, (u_i²) | (u_i u_j, i ≤ j)]`.
fn basis_row(kind: PolyKind, u: &[f64]) -> Vec<f64> {
    let d = u.len();
    let mut row = Vec::with_capacity(kind.n_coefficients(d));
    row.push(1.0);
    row.extend_from_slice(u);
    match kind {
        PolyKind::Linear => {}
        PolyKind::PureQuadratic => row.extend(u.iter().map(|v| v * v)),
        PolyKind::FullQuadratic => {
            for i in 0..d {
                for j in i..d {
                    row.push(u[i] * u[j]);
                }
            }
        }
    }
    row
}

fn unpack(kind: PolyKind, d: usize, beta: &DVector<f64>, center: Point) -> PolyModel {
    let c = beta[0];
    let b = DVector::from_fn(d, |i, _| beta[1 + i]);
    let mut a = DMatrix::zeros(d, d);
    let mut k = d + 1;
    match kind {
        PolyKind::Linear => {}
        PolyKind::PureQuadratic => {
            for i in 0..d {
                a[(i, i)] = beta[k];
                k += 1;
            }
        }
        PolyKind::FullQuadratic => {
            for i in 0..d {
                for j in i..d {
                    if i == j {
                        a[(i, i)] = beta[k];
                    } else {
                        a[(i, j)] = beta[k] / 2.0;
                        a[(j, i)] = beta[k] / 2.0;
                    }
                    k += 1;
                }
            }
        }
    }
    PolyModel { kind, center, a, b, c }
}

/// Least-squares fit of `kind` around `center`, stepping down the ladder
/// full → pure → linear when there are too few points or the design is rank
/// deficient.
pub fn fit_centered(points: &[Point], y: &[f64], kind: PolyKind, center: &Point) -> Result<PolyModel> {
    if points.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: y.len(),
        });
    }
    let d = center.len();
    let mut kind = Some(kind);
    while let Some(k) = kind {
        let p = k.n_coefficients(d);
        if points.len() >= p {
            let mut x = DMatrix::zeros(points.len(), p);
            for (r, pt) in points.iter().enumerate() {
                Error::check_dim(d, pt.len())?;
                let u = pt - center;
                for (c, v) in basis_row(k, u.as_slice()).into_iter().enumerate() {
                    x[(r, c)] = v;
                }
            }
            let yv = DVector::from_column_slice(y);
            if let Some(beta) = linalg::lstsq_full_rank(&x, &yv, RANK_RTOL) {
                if beta.iter().all(|v| v.is_finite()) {
                    return Ok(unpack(k, d, &beta, center.clone()));
                }
            }
        }
        kind = k.lower();
    }
    Err(Error::NotTrained(
        "design matrix rank deficient even for a linear model".into(),
    ))
}

/// Least-squares polynomial of the given kind on the evaluated points of `t`.
pub fn fit_quadratic_ls(t: &SampleSet, kind: PolyKind) -> Result<PolyModel> {
    let known = t.known();
    fit_centered(known.points(), &known.known_outputs(), kind, &Point::zeros(t.dim()))
}

/// Model kind the lq rule picks for `n` points: full quadratic from
/// `τ(d²+3d+2)/2`, pure quadratic from `τ(2d+1)`, linear otherwise.
pub fn lq_kind(n: usize, d: usize, tau: f64) -> PolyKind {
    let n = n as f64;
    let d = d as f64;
    if n >= tau * (d * d + 3.0 * d + 2.0) / 2.0 {
        PolyKind::FullQuadratic
    } else if n >= tau * (2.0 * d + 1.0) {
        PolyKind::PureQuadratic
    } else {
        PolyKind::Linear
    }
}

pub const LQ_TAU: f64 = 1.5;

/// The lq model: kind chosen by the number of points, needs `d + 2` points.
pub fn train_lq(t: &SampleSet, tau: f64) -> Result<PolyModel> {
    let known = t.known();
    let d = t.dim();
    if known.len() < d + 2 {
        return Err(Error::NotTrained(format!(
            "lq needs at least {} points, got {}",
            d + 2,
            known.len()
        )));
    }
    fit_quadratic_ls(&known, lq_kind(known.len(), d, tau))
}

/// Smallest archive the lmm model accepts: `d(d+3)/2 + 1`.
pub fn lmm_min_points(d: usize) -> usize {
    d * (d + 3) / 2 + 1
}

/// Default neighbourhood size `2(d(d+3)/2 + 1)`.
pub fn lmm_default_k(d: usize) -> usize {
    2 * lmm_min_points(d)
}

/// Local full-quadratic model refitted around every query point on its `k`
/// nearest archive points in the `σ²C` metric.
#[derive(Debug, Clone)]
pub struct LmmModel {
    archive: SampleSet,
    metric: Metric,
    k: usize,
}

impl LmmModel {
    pub fn new(archive: &SampleSet, k: usize, state: &DistributionState) -> Result<LmmModel> {
        let known = archive.known();
        let d = archive.dim();
        let min = lmm_min_points(d);
        if known.len() < min {
            return Err(Error::NotTrained(format!(
                "lmm needs at least {min} points, got {}",
                known.len()
            )));
        }
        if k < min {
            return Err(Error::InvalidArgument(format!("lmm k = {k} below {min}")));
        }
        Ok(LmmModel {
            k: k.min(known.len()),
            archive: known,
            metric: Metric::from_state(state)?,
        })
    }

    /// Local model for query `q`, expressed in the original coordinates.
    pub fn local_model(&self, q: &Point) -> Result<PolyModel> {
        Error::check_dim(self.archive.dim(), q.len())?;
        let eq = self.metric.embed(q);
        let mut order: Vec<(f64, usize)> = self
            .archive
            .points()
            .iter()
            .enumerate()
            .map(|(i, x)| ((self.metric.embed(x) - &eq).norm_squared(), i))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let ys = self.archive.known_outputs();
        let (zs, y): (Vec<Point>, Vec<f64>) = order[..self.k]
            .iter()
            .map(|&(_, i)| (self.metric.embed(&self.archive.points()[i]) - &eq, ys[i]))
            .unzip();
        let d = q.len();
        let local = fit_centered(&zs, &y, PolyKind::FullQuadratic, &Point::zeros(d))?;
        if local.kind != PolyKind::FullQuadratic {
            return Err(Error::NotTrained("lmm neighbourhood is degenerate".into()));
        }
        let w = match &self.metric {
            Metric::Euclidean => DMatrix::identity(d, d),
            Metric::Mahalanobis { whitening } => whitening.clone(),
        };
        Ok(local.pull_back(&w, q.clone()))
    }

    /// Prediction at `x` is the constant term of the model centred at `x`.
    pub fn predict(&self, x: &Point) -> Result<f64> {
        Ok(self.local_model(x)?.c)
    }
}

/// One local model per query.
pub fn train_lmm(
    archive: &SampleSet,
    queries: &[Point],
    k: usize,
    state: &DistributionState,
) -> Result<Vec<PolyModel>> {
    let m = LmmModel::new(archive, k, state)?;
    queries.iter().map(|q| m.local_model(q)).collect()
}
