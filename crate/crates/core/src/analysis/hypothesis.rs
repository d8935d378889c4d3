//! Nonparametric tests and multiple-comparison correction.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::features::FeatureValue;
use crate::stats;

const KS_TERMS: usize = 100;

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value with the
/// effective sample size `nm/(n+m)`. The p-value is clamped to
/// `[f64::MIN_POSITIVE, 1]`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sa = stats::total_cmp_sorted(a);
    let sb = stats::total_cmp_sorted(b);
    let (n, m) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let lambda = (n * m / (n + m)).sqrt() * d;
    Ok((d, kolmogorov_survival(lambda)))
}

/// `2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`, truncated.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=KS_TERMS {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
    }
    (2.0 * s).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Holm step-down adjustment. Returns adjusted p-values and rejection flags
/// in the input order.
pub fn holm_correction(p: &[f64], alpha: f64) -> (Vec<f64>, Vec<bool>) {
    let m = p.len();
    let order = stats::argsort(p);
    let mut adjusted = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        running = running.max(((m - pos) as f64 * p[i]).min(1.0));
        adjusted[i] = running;
    }
    let reject = adjusted.iter().map(|a| *a <= alpha).collect();
    (adjusted, reject)
}

/// Friedman test over `blocks[b][t]` (blocks × treatments) with average
/// ranks inside each block. Returns the statistic and the χ²_{k−1} p-value.
pub fn friedman_test(blocks: &[Vec<f64>]) -> Result<(f64, f64)> {
    let n = blocks.len();
    let k = blocks.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::InvalidArgument(format!(
            "friedman test needs ≥2 blocks and treatments, got {n}×{k}"
        )));
    }
    let mut rank_sums = vec![0.0; k];
    for b in blocks {
        if b.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: b.len(),
            });
        }
        for (s, r) in rank_sums.iter_mut().zip(stats::average_ranks(b)) {
            *s += r;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let centre = (kf + 1.0) / 2.0;
    let ss: f64 = rank_sums.iter().map(|s| (s / nf - centre).powi(2)).sum();
    let stat = 12.0 * nf / (kf * (kf + 1.0)) * ss;
    let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok((stat, chi.sf(stat).clamp(0.0, 1.0)))
}

/// Two-sided Wilcoxon signed-rank test on paired differences using the
/// normal approximation with tie and continuity corrections. Zero
/// differences are dropped. Returns `min(W⁺, W⁻)` and the p-value.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<(f64, f64)> {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    if nz.is_empty() {
        return Err(Error::Undefined("all differences are zero".into()));
    }
    if nz.len() < 5 {
        return Err(Error::Undefined(format!(
            "{} nonzero differences, need at least 5",
            nz.len()
        )));
    }
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks = stats::average_ranks(&abs);
    let w_plus: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = nz.len() as f64;
    let total = n * (n + 1.0) / 2.0;
    let w = w_plus.min(total - w_plus);
    let mean = total / 2.0;
    let ties: f64 = stats::tie_sizes(&abs).iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    let z = ((mean - w).abs() - 0.5).max(0.0) / var.sqrt();
    let p = (2.0 * (1.0 - stats::std_normal_cdf(z))).min(1.0);
    Ok((w, p))
}

/// `wins[i][j]`: percentage of shared valid cases where model `i` has the
/// smaller error, ties counting one half. Missing errors exclude the case
/// from every comparison involving that model.
pub fn pairwise_wins(errors: &[Vec<Option<f64>>]) -> Vec<Vec<FeatureValue>> {
    let m = errors.len();
    let mut out = vec![vec![FeatureValue::NanOut; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut score = 0.0;
            let mut valid = 0usize;
            for (a, b) in errors[i].iter().zip(&errors[j]) {
                if let (Some(a), Some(b)) = (a, b) {
                    if a.is_nan() || b.is_nan() {
                        continue;
                    }
                    valid += 1;
                    score += if a < b {
                        1.0
                    } else if a == b {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
            if valid > 0 {
                out[i][j] = FeatureValue::Real(100.0 * score / valid as f64);
            }
        }
    }
    out
}
