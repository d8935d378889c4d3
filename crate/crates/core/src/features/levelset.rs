//! Cross-validated discriminant analysis of the `y < Q_q` level sets.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;

use super::{named, FeatureValue, Features};
use crate::sample::{Point, SampleSet};
use crate::seeding::Rng;
use crate::stats;

pub const LEVELSET_QUANTILES: [f64; 3] = [0.1, 0.25, 0.5];
pub const CV_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Discriminant {
    Lda,
    Qda,
}

struct ClassModel {
    mean: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    log_prior: f64,
}

fn regularized(mut cov: DMatrix<f64>) -> DMatrix<f64> {
    let d = cov.nrows();
    let tr = cov.trace();
    let r = if tr > 0.0 { 1e-8 * tr / d as f64 } else { 1e-8 };
    for i in 0..d {
        cov[(i, i)] += r;
    }
    cov
}

fn scatter(points: &[&Point], mean: &DVector<f64>) -> DMatrix<f64> {
    let d = mean.len();
    let mut s = DMatrix::zeros(d, d);
    for x in points {
        let c = *x - mean;
        s += &c * c.transpose();
    }
    s
}

/// Fits both classes; `None` when a class is absent.
fn fit(method: Discriminant, x: &[&Point], labels: &[bool]) -> Option<[ClassModel; 2]> {
    let n = x.len();
    let d = x[0].len();
    let mut groups: [Vec<&Point>; 2] = [Vec::new(), Vec::new()];
    for (p, l) in x.iter().zip(labels) {
        groups[*l as usize].push(p);
    }
    if groups.iter().any(Vec::is_empty) {
        return None;
    }
    let means: Vec<DVector<f64>> = groups
        .iter()
        .map(|g| g.iter().fold(DVector::zeros(d), |a, p| a + *p) / g.len() as f64)
        .collect();
    let covs: Vec<DMatrix<f64>> = match method {
        Discriminant::Lda => {
            let pooled =
                (scatter(&groups[0], &means[0]) + scatter(&groups[1], &means[1])) / (n.saturating_sub(2).max(1)) as f64;
            vec![pooled.clone(), pooled]
        }
        Discriminant::Qda => groups
            .iter()
            .zip(&means)
            .map(|(g, m)| scatter(g, m) / (g.len().saturating_sub(1).max(1)) as f64)
            .collect(),
    };
    let mut out = Vec::with_capacity(2);
    for c in 0..2 {
        let chol = Cholesky::new(regularized(covs[c].clone()))?;
        out.push(ClassModel {
            mean: means[c].clone(),
            chol,
            log_prior: (groups[c].len() as f64 / n as f64).ln(),
        });
    }
    let [a, b]: [ClassModel; 2] = out.try_into().ok()?;
    Some([a, b])
}

fn score(m: &ClassModel, x: &Point) -> f64 {
    let c = x - &m.mean;
    let logdet: f64 = 2.0 * m.chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    m.log_prior - 0.5 * logdet - 0.5 * c.dot(&m.chol.solve(&c))
}

/// Ties go to the `false` class.
fn classify(models: &[ClassModel; 2], x: &Point) -> bool {
    score(&models[1], x) > score(&models[0], x)
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
/// Fewer than `folds` points gives leave-one-out.
pub(crate) fn stratified_folds(labels: &[bool], folds: usize, rng: &mut Rng) -> Vec<usize> {
    let n = labels.len();
    if n < folds {
        return (0..n).collect();
    }
    let mut fold = vec![0; n];
    let mut next = 0;
    for class in [false, true] {
        let mut idx: Vec<usize> = (0..n).filter(|i| labels[*i] == class).collect();
        idx.shuffle(rng);
        for i in idx {
            fold[i] = next % folds;
            next += 1;
        }
    }
    fold
}

/// Mean of the per-fold misclassification rates; `None` when a training
/// fold lacks a class.
pub fn cv_mmce(method: Discriminant, x: &[&Point], labels: &[bool], folds: &[usize]) -> Option<f64> {
    let k = folds.iter().max()? + 1;
    let mut errors = Vec::with_capacity(k);
    for f in 0..k {
        let (mut tx, mut tl) = (Vec::new(), Vec::new());
        for i in 0..x.len() {
            if folds[i] != f {
                tx.push(x[i]);
                tl.push(labels[i]);
            }
        }
        let held: Vec<usize> = (0..x.len()).filter(|i| folds[*i] == f).collect();
        if held.is_empty() {
            continue;
        }
        if tx.is_empty() {
            return None;
        }
        let models = fit(method, &tx, &tl)?;
        let wrong = held.iter().filter(|&&i| classify(&models, x[i]) != labels[i]).count();
        errors.push(wrong as f64 / held.len() as f64);
    }
    if errors.is_empty() {
        None
    } else {
        Some(stats::mean(&errors))
    }
}

/// `mmce_{lda,qda}_{10,25,50}` and `lda_qda_{10,25,50}` on the points with
/// known outputs.
pub fn levelset_features(set: &SampleSet, rng: &mut Rng) -> Features {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (p, v) in set.iter() {
        if let Some(v) = v {
            x.push(p);
            y.push(v);
        }
    }
    let sorted = stats::total_cmp_sorted(&y);
    let mut out = Vec::with_capacity(9);
    for q in LEVELSET_QUANTILES {
        let tag = format!("{:02}", (q * 100.0).round() as u32);
        let mut res = [FeatureValue::NanOut; 2];
        if x.len() >= 2 {
            let thr = stats::quantile_sorted(&sorted, q);
            let labels: Vec<bool> = y.iter().map(|v| *v < thr).collect();
            let folds = stratified_folds(&labels, CV_FOLDS, rng);
            for (slot, m) in [Discriminant::Lda, Discriminant::Qda].into_iter().enumerate() {
                res[slot] = cv_mmce(m, &x, &labels, &folds).map_or(FeatureValue::NanOut, FeatureValue::Real);
            }
        }
        out.push((format!("mmce_lda_{tag}"), res[0]));
        out.push((format!("mmce_qda_{tag}"), res[1]));
        out.push((format!("lda_qda_{tag}"), FeatureValue::ratio(res[0], res[1])));
    }
    named(out)
}
