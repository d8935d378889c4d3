//! Sigmoid normalisation mapping the 1% and 99% quantiles to 0.01 and 0.99.

use serde::{Deserialize, Serialize};

use super::FeatureValue;
use crate::stats;

/// Sigmoid parameters of one feature. `k` is infinite when the quantiles
/// coincide or are not finite; the sigmoid then degenerates to a step at `f0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub q01: FeatureValue,
    pub q99: FeatureValue,
    pub k: FeatureValue,
    pub f0: FeatureValue,
}

impl NormalizationSpec {
    pub fn from_quantiles(q01: f64, q99: f64) -> Self {
        let (k, f0) = if q01.is_finite() && q99.is_finite() && q01 < q99 {
            (2.0 * 99f64.ln() / (q99 - q01), 0.5 * (q01 + q99))
        } else {
            let f0 = match (q01.is_finite(), q99.is_finite()) {
                (true, true) => 0.5 * (q01 + q99),
                (true, false) => q01,
                (false, true) => q99,
                (false, false) => 0.0,
            };
            (f64::INFINITY, f0)
        };
        NormalizationSpec {
            q01: FeatureValue::Real(q01),
            q99: FeatureValue::Real(q99),
            k: FeatureValue::Real(k),
            f0: FeatureValue::Real(f0),
        }
    }

    fn k(&self) -> f64 {
        self.k.value().unwrap_or(f64::INFINITY)
    }

    fn f0(&self) -> f64 {
        self.f0.value().unwrap_or(0.0)
    }
}

/// Quantiles over all computable values, infinities included. `None` when
/// every value is `NanOut`.
pub fn fit_normalization(values: &[FeatureValue]) -> Option<NormalizationSpec> {
    let v: Vec<f64> = values.iter().filter_map(|v| v.value()).collect();
    if v.is_empty() {
        return None;
    }
    let sorted = stats::total_cmp_sorted(&v);
    Some(NormalizationSpec::from_quantiles(
        stats::quantile_sorted(&sorted, 0.01),
        stats::quantile_sorted(&sorted, 0.99),
    ))
}

pub fn normalize_value(x: FeatureValue, spec: &NormalizationSpec) -> FeatureValue {
    let FeatureValue::Real(x) = x else {
        return FeatureValue::NanOut;
    };
    let (k, f0) = (spec.k(), spec.f0());
    let v = if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else if k.is_infinite() {
        match x.partial_cmp(&f0) {
            Some(std::cmp::Ordering::Less) => 0.0,
            Some(std::cmp::Ordering::Greater) => 1.0,
            _ => 0.5,
        }
    } else {
        1.0 / (1.0 + (-k * (x - f0)).exp())
    };
    FeatureValue::Real(v)
}

pub fn normalize_feature(values: &[FeatureValue], spec: &NormalizationSpec) -> Vec<FeatureValue> {
    values.iter().map(|v| normalize_value(*v, spec)).collect()
}
