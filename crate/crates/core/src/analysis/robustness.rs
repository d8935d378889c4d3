//! Stability of a feature across resamples of the same CMA-ES distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureValue;
use crate::stats;

pub const ROBUSTNESS_DELTA: f64 = 0.05;

/// How the lower end of the within-group spread is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerPercentile {
    /// The 1% quantile with linear interpolation.
    #[default]
    Interpolated,
    /// The smallest value of the group.
    Minimum,
}

/// Per-feature summary over the whole dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub feature: String,
    /// `None` when every group contains `NanOut`.
    pub robustness: Option<f64>,
    pub nan_rate: f64,
    /// `None` when no number of points keeps the `NanOut` rate at 1%.
    pub n_nanout: Option<usize>,
}

/// Fraction of groups whose standardised spread `P100 − P1` is at most
/// `delta`. Standardisation uses the mean and standard deviation of all
/// finite values of the feature; groups containing `NanOut` are skipped.
pub fn robustness(groups: &[Vec<FeatureValue>], delta: f64, lower: LowerPercentile) -> Result<f64> {
    if groups.is_empty() || groups.iter().all(Vec::is_empty) {
        return Err(Error::EmptyInput);
    }
    let usable: Vec<Vec<f64>> = groups
        .iter()
        .filter(|g| !g.is_empty() && g.iter().all(|v| !v.is_nanout()))
        .map(|g| g.iter().filter_map(|v| v.value()).collect())
        .collect();
    if usable.is_empty() {
        return Err(Error::Undefined("every group contains a non-computable value".into()));
    }
    let finite: Vec<f64> = usable.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    let (mu, sd) = if finite.is_empty() {
        (0.0, 0.0)
    } else {
        (stats::mean(&finite), stats::pop_std(&finite))
    };
    let z = |v: f64| {
        if sd > 0.0 {
            (v - mu) / sd
        } else if v.is_finite() {
            0.0
        } else {
            v
        }
    };
    let robust = usable
        .iter()
        .filter(|g| {
            let s = stats::total_cmp_sorted(&g.iter().map(|v| z(*v)).collect::<Vec<_>>());
            let lo = match lower {
                LowerPercentile::Interpolated => stats::quantile_sorted(&s, 0.01),
                LowerPercentile::Minimum => s[0],
            };
            let hi = s[s.len() - 1];
            // equal infinities count as no spread
            let spread = if lo == hi { 0.0 } else { hi - lo };
            spread <= delta
        })
        .count();
    Ok(robust as f64 / usable.len() as f64)
}

pub fn nan_rate(values: &[FeatureValue]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| v.is_nanout()).count() as f64 / values.len() as f64
}

/// Smallest observed point count `N` such that at most 1% of the cases with
/// at least `N` points are `NanOut`.
pub fn estimate_n_nanout(samples: &[(usize, bool)]) -> Option<usize> {
    let mut sizes: Vec<usize> = samples.iter().map(|s| s.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes.into_iter().find(|&n| {
        let (mut total, mut bad) = (0usize, 0usize);
        for &(m, nan) in samples {
            if m >= n {
                total += 1;
                bad += nan as usize;
            }
        }
        total > 0 && bad as f64 <= 0.01 * total as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(v: &[f64]) -> Vec<FeatureValue> {
        v.iter().map(|x| FeatureValue::Real(*x)).collect()
    }

    #[test]
    fn counting_groups() {
        let groups = vec![g(&[1.0; 5]), g(&[2.0; 5]), g(&[0.0, 5.0, 10.0]), g(&[3.0, 7.0, 1.0])];
        assert_eq!(robustness(&groups, 0.05, LowerPercentile::Interpolated).unwrap(), 0.5);
        let mut with_nan = groups.clone();
        with_nan.push(vec![FeatureValue::NanOut]);
        assert_eq!(robustness(&with_nan, 0.05, LowerPercentile::Minimum).unwrap(), 0.5);
        assert!(robustness(&[], 0.05, LowerPercentile::Minimum).is_err());
        assert_eq!(
            robustness(&[g(&[4.0; 3])], 0.05, LowerPercentile::Minimum).unwrap(),
            1.0
        );
    }

    #[test]
    fn n_nanout() {
        let s: Vec<(usize, bool)> = (1..40).map(|n| (n, n < 13)).collect();
        assert_eq!(estimate_n_nanout(&s), Some(13));
        assert_eq!(estimate_n_nanout(&[(5, false), (9, false)]), Some(5));
        assert_eq!(estimate_n_nanout(&[(5, true), (9, true)]), None);
    }
}
