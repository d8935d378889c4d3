//! Gaussian-process regression with the eight covariance functions used in
//! the experiments, and maximum-likelihood hyperparameter fitting.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::optim::NelderMead;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sample::{Point, SampleSet};
use crate::seeding;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CovKind {
    #[serde(rename = "LIN")]
    Lin,
    #[serde(rename = "QUAD")]
    Quad,
    #[serde(rename = "SE")]
    Se,
    #[serde(rename = "MAT52")]
    Mat52,
    #[serde(rename = "RQ")]
    Rq,
    #[serde(rename = "NN")]
    Nn,
    #[serde(rename = "GIBBS")]
    Gibbs,
    #[serde(rename = "SE_Q")]
    SeQ,
}

impl CovKind {
    pub const ALL: [CovKind; 8] = [
        CovKind::Lin,
        CovKind::Quad,
        CovKind::Se,
        CovKind::Mat52,
        CovKind::Rq,
        CovKind::Nn,
        CovKind::Gibbs,
        CovKind::SeQ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CovKind::Lin => "LIN",
            CovKind::Quad => "QUAD",
            CovKind::Se => "SE",
            CovKind::Mat52 => "MAT52",
            CovKind::Rq => "RQ",
            CovKind::Nn => "NN",
            CovKind::Gibbs => "GIBBS",
            CovKind::SeQ => "SE_Q",
        }
    }
}

/// Covariance hyperparameters. Only the fields a kind uses are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovParams {
    pub sigma_f: f64,
    pub ell: f64,
    /// Rational-quadratic shape, must be positive.
    pub alpha: f64,
    /// Bias term of LIN and QUAD.
    pub sigma0_sq: f64,
    /// Gibbs length scale `ℓ(x) = exp(a + bᵀx)`.
    pub gibbs_a: f64,
    pub gibbs_b: Vec<f64>,
}

impl CovParams {
    pub fn se(sigma_f: f64, ell: f64) -> Self {
        CovParams {
            sigma_f,
            ell,
            alpha: 1.0,
            sigma0_sq: 1.0,
            gibbs_a: ell.ln(),
            gibbs_b: Vec::new(),
        }
    }
}

const GIBBS_EXP_CLAMP: f64 = 30.0;

fn gibbs_ell(p: &CovParams, x: &Point) -> f64 {
    let lin: f64 = p.gibbs_b.iter().zip(x.iter()).map(|(b, v)| b * v).sum();
    (p.gibbs_a + lin).clamp(-GIBBS_EXP_CLAMP, GIBBS_EXP_CLAMP).exp()
}

/// Covariance `k(x, x')` for `kind`.
pub fn gp_cov(kind: CovKind, x: &Point, xp: &Point, p: &CovParams) -> Result<f64> {
    Error::check_dim(x.len(), xp.len())?;
    if kind == CovKind::Rq && !(p.alpha > 0.0) {
        return Err(Error::InvalidHyperparameter(format!("RQ alpha = {}", p.alpha)));
    }
    if kind == CovKind::Gibbs && !p.gibbs_b.is_empty() {
        Error::check_dim(x.len(), p.gibbs_b.len())?;
    }
    Ok(cov_unchecked(kind, x, xp, p))
}

fn cov_unchecked(kind: CovKind, x: &Point, xp: &Point, p: &CovParams) -> f64 {
    let sf2 = p.sigma_f * p.sigma_f;
    let r2 = || (x - xp).norm_squared();
    match kind {
        CovKind::Lin => p.sigma0_sq + x.dot(xp),
        CovKind::Quad => (p.sigma0_sq + x.dot(xp)).powi(2),
        CovKind::Se => sf2 * (-r2() / (2.0 * p.ell * p.ell)).exp(),
        CovKind::Mat52 => {
            let s = 5f64.sqrt() * r2().sqrt() / p.ell;
            sf2 * (1.0 + s + s * s / 3.0) * (-s).exp()
        }
        CovKind::Rq => sf2 * (1.0 + r2() / (2.0 * p.ell * p.ell * p.alpha)).powf(-p.alpha),
        CovKind::Nn => {
            let il2 = 1.0 / (p.ell * p.ell);
            let spq = (1.0 + x.dot(xp)) * il2;
            let spp = (1.0 + x.dot(x)) * il2;
            let sqq = (1.0 + xp.dot(xp)) * il2;
            let arg = 2.0 * spq / ((1.0 + 2.0 * spp) * (1.0 + 2.0 * sqq)).sqrt();
            sf2 * arg.clamp(-1.0, 1.0).asin()
        }
        CovKind::Gibbs => {
            let lp = gibbs_ell(p, x);
            let lq = gibbs_ell(p, xp);
            let s = lp * lp + lq * lq;
            let d = x.len() as f64;
            sf2 * (2.0 * lp * lq / s).powf(d / 2.0) * (-r2() / s).exp()
        }
        CovKind::SeQ => cov_unchecked(CovKind::Se, x, xp, p) + cov_unchecked(CovKind::Quad, x, xp, p),
    }
}

/// All GP hyperparameters: covariance, noise variance and constant mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    pub cov: CovParams,
    pub noise_var: f64,
    pub mean: f64,
}

/// Log-parameter bounds applied while searching.
const LOG_BOUND: f64 = 12.0;
const JITTER_MIN_REL: f64 = 1e-10;
const JITTER_MAX_REL: f64 = 1e-4;

/// Unconstrained search vector: `[kernel..., ln σ_n, m]`.
fn encode(kind: CovKind, h: &GpHyper) -> Vec<f64> {
    let c = &h.cov;
    let mut u = match kind {
        CovKind::Lin | CovKind::Quad => vec![0.5 * c.sigma0_sq.ln()],
        CovKind::Se | CovKind::Mat52 | CovKind::Nn => vec![c.sigma_f.ln(), c.ell.ln()],
        CovKind::Rq => vec![c.sigma_f.ln(), c.ell.ln(), c.alpha.ln()],
        CovKind::Gibbs => {
            let mut v = vec![c.sigma_f.ln(), c.gibbs_a];
            v.extend_from_slice(&c.gibbs_b);
            v
        }
        CovKind::SeQ => vec![c.sigma_f.ln(), c.ell.ln(), 0.5 * c.sigma0_sq.ln()],
    };
    u.push(0.5 * h.noise_var.ln());
    u.push(h.mean);
    u
}

fn decode(kind: CovKind, d: usize, u: &[f64]) -> GpHyper {
    let e = |v: f64| v.clamp(-LOG_BOUND, LOG_BOUND).exp();
    let mut c = CovParams::se(1.0, 1.0);
    let k = match kind {
        CovKind::Lin | CovKind::Quad => {
            c.sigma0_sq = e(u[0]).powi(2);
            1
        }
        CovKind::Se | CovKind::Mat52 | CovKind::Nn => {
            c.sigma_f = e(u[0]);
            c.ell = e(u[1]);
            2
        }
        CovKind::Rq => {
            c.sigma_f = e(u[0]);
            c.ell = e(u[1]);
            c.alpha = e(u[2]);
            3
        }
        CovKind::Gibbs => {
            c.sigma_f = e(u[0]);
            c.gibbs_a = u[1].clamp(-LOG_BOUND, LOG_BOUND);
            c.gibbs_b = u[2..2 + d].to_vec();
            2 + d
        }
        CovKind::SeQ => {
            c.sigma_f = e(u[0]);
            c.ell = e(u[1]);
            c.sigma0_sq = e(u[2]).powi(2);
            3
        }
    };
    GpHyper {
        cov: c,
        noise_var: e(u[k]).powi(2),
        mean: u[k + 1],
    }
}

fn kernel_matrix(kind: CovKind, xs: &[Point], p: &CovParams) -> DMatrix<f64> {
    let n = xs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = cov_unchecked(kind, &xs[i], &xs[j], p);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

struct Factor {
    chol: Cholesky<f64, Dyn>,
    jitter: f64,
    alpha: DVector<f64>,
    nll: f64,
}

fn factorise(kind: CovKind, xs: &[Point], y: &DVector<f64>, h: &GpHyper) -> Option<Factor> {
    let n = xs.len();
    let mut k = kernel_matrix(kind, xs, &h.cov);
    for i in 0..n {
        k[(i, i)] += h.noise_var;
    }
    let (chol, jitter) = linalg::cholesky_with_jitter(&k, JITTER_MIN_REL, JITTER_MAX_REL)?;
    let r = y.add_scalar(-h.mean);
    let alpha = chol.solve(&r);
    let logdet: f64 = chol.l_dirty().diagonal().iter().take(n).map(|v| v.ln()).sum::<f64>() * 2.0;
    let nll = 0.5 * r.dot(&alpha) + 0.5 * logdet + 0.5 * n as f64 * (2.0 * PI).ln();
    nll.is_finite().then_some(Factor {
        chol,
        jitter,
        alpha,
        nll,
    })
}

/// Negative log marginal likelihood `½ rᵀK_y⁻¹r + ½ ln|K_y| + n/2 ln 2π`
/// with `K_y = K + σ_n² I` and `r = y − m`. `None` if `K_y` cannot be
/// factorised even with the maximal jitter.
pub fn gp_nll(kind: CovKind, xs: &[Point], y: &[f64], h: &GpHyper) -> Option<f64> {
    factorise(kind, xs, &DVector::from_column_slice(y), h).map(|f| f.nll)
}

/// Hyperparameter search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub n_starts: usize,
    pub max_evaluations: usize,
    pub seed: u64,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            n_starts: 4,
            max_evaluations: 600,
            seed: 0,
        }
    }
}

/// A trained GP with its cached factorisation.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub kind: CovKind,
    pub hyper: GpHyper,
    /// NLL at the fitted hyperparameters.
    pub nll: f64,
    /// NLL at each optimiser start (`+∞` where factorisation failed).
    pub start_nlls: Vec<f64>,
    /// Best NLL per iteration of the winning start.
    pub trace: Vec<f64>,
    /// Diagonal jitter that was needed on top of the noise.
    pub jitter: f64,
    xs: Vec<Point>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

fn check_training(t: &SampleSet, min: usize) -> Result<(Vec<Point>, Vec<f64>)> {
    if t.has_missing() {
        return Err(Error::InvalidArgument("GP training data has missing outputs".into()));
    }
    if t.len() < min {
        return Err(Error::NotTrained(format!("GP needs ≥ {min} points, got {}", t.len())));
    }
    Ok((t.points().to_vec(), t.known_outputs()))
}

impl GpModel {
    /// GP with fixed hyperparameters.
    pub fn with_hyper(t: &SampleSet, kind: CovKind, hyper: GpHyper) -> Result<GpModel> {
        let (xs, y) = check_training(t, 1)?;
        if kind == CovKind::Rq && !(hyper.cov.alpha > 0.0) {
            return Err(Error::InvalidHyperparameter(format!("RQ alpha = {}", hyper.cov.alpha)));
        }
        if kind == CovKind::Gibbs {
            Error::check_dim(t.dim(), hyper.cov.gibbs_b.len())?;
        }
        let f = factorise(kind, &xs, &DVector::from_vec(y), &hyper)
            .ok_or_else(|| Error::NotTrained("covariance matrix not factorisable".into()))?;
        Ok(GpModel {
            kind,
            hyper,
            nll: f.nll,
            start_nlls: vec![f.nll],
            trace: vec![f.nll],
            jitter: f.jitter,
            xs,
            chol: f.chol,
            alpha: f.alpha,
        })
    }

    /// Posterior mean and variance (clamped at zero) of `f(x)`.
    pub fn predict(&self, x: &Point) -> (f64, f64) {
        let c = &self.hyper.cov;
        let ks = DVector::from_iterator(
            self.xs.len(),
            self.xs.iter().map(|xi| cov_unchecked(self.kind, xi, x, c)),
        );
        let mean = self.hyper.mean + ks.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&ks).unwrap_or_else(|| ks.clone());
        let var = cov_unchecked(self.kind, x, x, c) - v.norm_squared();
        (mean, var.max(0.0))
    }
}

pub fn gp_predict(model: &GpModel, x: &Point) -> (f64, f64) {
    model.predict(x)
}

/// Data-scale starting point: `ℓ` from the median pairwise distance, `σ_f`
/// from the spread of `y`, `σ_n = 10⁻²σ_f`, `m` the mean of `y`.
pub fn heuristic_hyper(xs: &[Point], y: &[f64]) -> GpHyper {
    let mut dists = Vec::new();
    for i in 0..xs.len() {
        for j in 0..i {
            dists.push((&xs[i] - &xs[j]).norm());
        }
    }
    let ell = if dists.is_empty() { 1.0 } else { stats::median(&dists) };
    let ell = if ell > 1e-6 && ell.is_finite() { ell } else { 1.0 };
    let sf = stats::pop_std(y);
    let sf = if sf > 1e-6 && sf.is_finite() { sf } else { 1.0 };
    let mut cov = CovParams::se(sf, ell);
    cov.gibbs_b = vec![0.0; xs.first().map_or(0, |x| x.len())];
    GpHyper {
        cov,
        noise_var: (1e-2 * sf).powi(2),
        mean: stats::mean(y),
    }
}

/// Maximum-likelihood fit: Nelder–Mead in log-parameter space from
/// `n_starts` seeded starts, keeping the lowest NLL.
pub fn gp_fit(t: &SampleSet, kind: CovKind, config: &GpConfig) -> Result<GpModel> {
    let (xs, y) = check_training(t, 2)?;
    let d = t.dim();
    let yv = DVector::from_column_slice(&y);
    let base = encode(kind, &heuristic_hyper(&xs, &y));
    let spread = stats::pop_std(&y).max(1e-6);
    let mut rng = seeding::rng(config.seed, &[seeding::label(kind.name())]);
    let nm = NelderMead {
        max_evaluations: config.max_evaluations,
        ..Default::default()
    };
    let objective = |u: &[f64]| factorise(kind, &xs, &yv, &decode(kind, d, u)).map_or(f64::INFINITY, |f| f.nll);

    let mut start_nlls = Vec::new();
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None;
    for s in 0..config.n_starts.max(1) {
        let mut u = base.clone();
        if s > 0 {
            let m = u.len() - 1;
            for (i, v) in u.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *v += if i == m { 0.5 * spread * z } else { z };
            }
        }
        start_nlls.push(objective(&u));
        let min = nm.minimize(&u, objective);
        if min.f.is_finite() && best.as_ref().is_none_or(|b| min.f < b.1) {
            best = Some((min.x, min.f, min.trace));
        }
    }
    let (u, _, trace) =
        best.ok_or_else(|| Error::NotTrained("no hyperparameter start gave a factorisable covariance".into()))?;
    let hyper = decode(kind, d, &u);
    let f = factorise(kind, &xs, &yv, &hyper)
        .ok_or_else(|| Error::NotTrained("covariance matrix not factorisable".into()))?;
    Ok(GpModel {
        kind,
        hyper,
        nll: f.nll,
        start_nlls,
        trace,
        jitter: f.jitter,
        xs,
        chol: f.chol,
        alpha: f.alpha,
    })
}
