//! Linear and quadratic regression fits and their coefficients.

use nalgebra::{DMatrix, DVector};

use super::{named, FeatureValue, Features};
use crate::linalg;
use crate::sample::{Point, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regression {
    LinSimple,
    LinInteract,
    QuadSimple,
    QuadInteract,
}

impl Regression {
    /// Predictors excluding the intercept.
    pub fn n_predictors(self, d: usize) -> usize {
        let inter = d * d.saturating_sub(1) / 2;
        match self {
            Regression::LinSimple => d,
            Regression::LinInteract => d + inter,
            Regression::QuadSimple => 2 * d,
            Regression::QuadInteract => 2 * d + inter,
        }
    }

    /// Row `[1, x, x², x_i x_j (i<j)]`, restricted to the terms of the model.
    fn row(self, x: &Point) -> Vec<f64> {
        let d = x.len();
        let mut r = Vec::with_capacity(1 + self.n_predictors(d));
        r.push(1.0);
        r.extend(x.iter());
        if matches!(self, Regression::QuadSimple | Regression::QuadInteract) {
            r.extend(x.iter().map(|v| v * v));
        }
        if matches!(self, Regression::LinInteract | Regression::QuadInteract) {
            for i in 0..d {
                for j in (i + 1)..d {
                    r.push(x[i] * x[j]);
                }
            }
        }
        r
    }
}

pub struct RegressionFit {
    pub coef: DVector<f64>,
    pub adj_r2: FeatureValue,
}

/// Minimum-norm least squares; `None` unless `n > p + 1`.
pub fn fit_regression(model: Regression, x: &[&Point], y: &[f64]) -> Option<RegressionFit> {
    let n = x.len();
    let d = x.first()?.len();
    let p = model.n_predictors(d);
    if n <= p + 1 {
        return None;
    }
    let rows: Vec<f64> = x.iter().flat_map(|p| model.row(p)).collect();
    let design = DMatrix::from_row_slice(n, p + 1, &rows);
    let target = DVector::from_column_slice(y);
    let coef = linalg::lstsq(&design, &target)?;
    let fitted = &design * &coef;
    let mean = target.mean();
    let ss_tot: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = (&target - fitted).norm_squared();
    let adj_r2 = if ss_tot > 0.0 {
        let r2 = 1.0 - ss_res / ss_tot;
        FeatureValue::from_f64(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64)
    } else {
        FeatureValue::NanOut
    };
    Some(RegressionFit { coef, adj_r2 })
}

fn extremes(v: impl Iterator<Item = f64>) -> (f64, f64) {
    v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Adjusted R² of the four models, linear slope extremes and the spread of
/// the pure quadratic coefficients, on the points with known outputs.
pub fn metamodel_features(set: &SampleSet) -> Features {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (p, v) in set.iter() {
        if let Some(v) = v {
            x.push(p);
            y.push(v);
        }
    }
    let d = set.dim();
    let fits = [
        Regression::LinSimple,
        Regression::LinInteract,
        Regression::QuadSimple,
        Regression::QuadInteract,
    ]
    .map(|m| fit_regression(m, &x, &y));
    let r2 = |i: usize| fits[i].as_ref().map_or(FeatureValue::NanOut, |f| f.adj_r2);

    let (cmin, cmax) = match &fits[0] {
        Some(f) => {
            let (lo, hi) = extremes(f.coef.rows(1, d).iter().map(|c| c.abs()));
            (FeatureValue::Real(lo), FeatureValue::Real(hi))
        }
        None => (FeatureValue::NanOut, FeatureValue::NanOut),
    };
    let cond = match &fits[2] {
        Some(f) => {
            let (lo, hi) = extremes(f.coef.rows(1 + d, d).iter().map(|c| c.abs()));
            FeatureValue::ratio(FeatureValue::Real(hi), FeatureValue::Real(lo))
        }
        None => FeatureValue::NanOut,
    };
    named([
        ("lin_simple_adj_r2", r2(0)),
        ("lin_w_interact_adj_r2", r2(1)),
        ("quad_simple_adj_r2", r2(2)),
        ("quad_w_interact_adj_r2", r2(3)),
        ("lin_simple_coef_min", cmin),
        ("lin_simple_coef_max", cmax),
        ("lin_simple_coef_max_by_min", FeatureValue::ratio(cmax, cmin)),
        ("quad_simple_cond", cond),
    ])
}
