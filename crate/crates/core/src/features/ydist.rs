//! Shape of the output distribution.

use std::f64::consts::PI;

use super::{named, FeatureValue, Features};
use crate::stats;

pub const KDE_GRID: usize = 512;

/// Silverman's rule of thumb with the usual fallbacks for zero spread.
pub fn silverman_bandwidth(y: &[f64]) -> f64 {
    let sd = stats::sample_std(y);
    let iqr = stats::quantile(y, 0.75) - stats::quantile(y, 0.25);
    let mut lo = sd.min(iqr / 1.34);
    if !(lo > 0.0) {
        lo = if sd > 0.0 {
            sd
        } else if y[0].abs() > 0.0 {
            y[0].abs()
        } else {
            1.0
        };
    }
    0.9 * lo * (y.len() as f64).powf(-0.2)
}

/// Gaussian KDE on `KDE_GRID` equidistant points over `[min − 3h, max + 3h]`.
pub fn kde(y: &[f64], h: f64) -> Vec<f64> {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (a, b) = (lo - 3.0 * h, hi + 3.0 * h);
    let norm = 1.0 / (y.len() as f64 * h * (2.0 * PI).sqrt());
    (0..KDE_GRID)
        .map(|i| {
            let t = a + (b - a) * i as f64 / (KDE_GRID - 1) as f64;
            norm * y.iter().map(|v| (-0.5 * ((t - v) / h).powi(2)).exp()).sum::<f64>()
        })
        .collect()
}

/// Interior local maxima. Runs of equal values count as one point, so a flat
/// top sampled by two grid points is a single peak.
pub fn count_peaks(density: &[f64]) -> usize {
    let mut runs: Vec<f64> = Vec::with_capacity(density.len());
    for &v in density {
        if runs.last() != Some(&v) {
            runs.push(v);
        }
    }
    runs.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

/// `{skewness, kurtosis, number_of_peaks}` of the known outputs; kurtosis is
/// not centred at zero.
pub fn ydist_features(y: &[f64]) -> Features {
    let n = y.len();
    if n < 3 || y.iter().any(|v| !v.is_finite()) {
        return named(["skewness", "kurtosis", "number_of_peaks"].map(|k| (k, FeatureValue::NanOut)));
    }
    let m = stats::mean(y);
    let moment = |k: i32| y.iter().map(|v| (v - m).powi(k)).sum::<f64>() / n as f64;
    let m2 = moment(2);
    let (skew, kurt) = if m2 > 0.0 {
        (
            FeatureValue::from_f64(moment(3) / m2.powf(1.5)),
            FeatureValue::from_f64(moment(4) / (m2 * m2)),
        )
    } else {
        (FeatureValue::NanOut, FeatureValue::NanOut)
    };
    let peaks = count_peaks(&kde(y, silverman_bandwidth(y)));
    named([
        ("skewness", skew),
        ("kurtosis", kurt),
        ("number_of_peaks", FeatureValue::Real(peaks as f64)),
    ])
}
