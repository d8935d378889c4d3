//! Landscape features over the sample-set variants of one CMA-ES
//! generation, and their sigmoid normalisation.
//!
//! Every feature yields a [`FeatureValue`]: a real number, `±∞`, or
//! [`FeatureValue::NanOut`] when it cannot be computed on the given set.

pub mod basic;
pub mod cma;
pub mod compute;
pub mod dispersion;
pub mod info;
pub mod levelset;
pub mod metamodel;
pub mod nbc;
pub mod normalize;
pub mod ydist;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use compute::{build_contexts, compute_all, compute_context, FeatureContext, FeatureRow, SetBase, Variant};
pub use normalize::{fit_normalization, normalize_feature, normalize_value, NormalizationSpec};

/// A feature value: finite, `±∞`, or not computable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Real(f64),
    NanOut,
}

impl FeatureValue {
    /// `NaN` becomes `NanOut`; everything else, including `±∞`, is kept.
    pub fn from_f64(v: f64) -> Self {
        if v.is_nan() {
            FeatureValue::NanOut
        } else {
            FeatureValue::Real(v)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            FeatureValue::Real(v) => Some(v),
            FeatureValue::NanOut => None,
        }
    }

    pub fn is_nanout(self) -> bool {
        self == FeatureValue::NanOut
    }

    /// `a / b`, `NanOut` for `0/0` or either side missing.
    pub fn ratio(a: FeatureValue, b: FeatureValue) -> FeatureValue {
        match (a, b) {
            (FeatureValue::Real(a), FeatureValue::Real(b)) => FeatureValue::from_f64(a / b),
            _ => FeatureValue::NanOut,
        }
    }
}

impl fmt::Display for FeatureValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureValue::NanOut => f.write_str("nanout"),
            FeatureValue::Real(v) if *v == f64::INFINITY => f.write_str("inf"),
            FeatureValue::Real(v) if *v == f64::NEG_INFINITY => f.write_str("-inf"),
            FeatureValue::Real(v) => write!(f, "{v:?}"),
        }
    }
}

impl FromStr for FeatureValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nanout" => Ok(FeatureValue::NanOut),
            "inf" => Ok(FeatureValue::Real(f64::INFINITY)),
            "-inf" => Ok(FeatureValue::Real(f64::NEG_INFINITY)),
            t => t
                .parse::<f64>()
                .ok()
                .filter(|v| !v.is_nan())
                .map(FeatureValue::Real)
                .ok_or_else(|| Error::InvalidArgument(format!("bad feature value `{s}`"))),
        }
    }
}

impl Serialize for FeatureValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Named feature values of one group on one set.
pub type Features = Vec<(String, FeatureValue)>;

pub(crate) fn named(pairs: impl IntoIterator<Item = (impl Into<String>, FeatureValue)>) -> Features {
    pairs.into_iter().map(|(n, v)| (n.into(), v)).collect()
}

/// All pairwise distances `i < j` under the Euclidean metric of `points`.
pub(crate) fn pairwise(points: &[&crate::sample::Point]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            out.push((points[i] - points[j]).norm());
        }
    }
    out
}
