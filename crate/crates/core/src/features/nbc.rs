//! Nearest-better clustering features.

use super::{named, FeatureValue, Features};
use crate::sample::SampleSet;
use crate::stats;
use crate::transform::Metric;

const NAMES: [&str; 5] = [
    "nb_std_ratio",
    "nb_mean_ratio",
    "nb_cor",
    "dist_ratio",
    "nb_fitness_cor",
];

fn corr(a: &[f64], b: &[f64]) -> FeatureValue {
    stats::pearson(a, b).map_or(FeatureValue::NanOut, FeatureValue::from_f64)
}

fn sample_std(v: &[f64]) -> FeatureValue {
    FeatureValue::from_f64(stats::sample_std(v))
}

fn mean(v: &[f64]) -> FeatureValue {
    if v.is_empty() {
        FeatureValue::NanOut
    } else {
        FeatureValue::from_f64(stats::mean(v))
    }
}

/// Uses the points with known outputs. A point is "better" only when its
/// output is strictly smaller; distance ties resolve to the lower index.
pub fn nbc_features(set: &SampleSet, metric: &Metric) -> Features {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (p, v) in set.iter() {
        if let Some(v) = v {
            x.push(metric.embed(p));
            y.push(v);
        }
    }
    let n = x.len();
    if n < 3 {
        return named(NAMES.map(|k| (k, FeatureValue::NanOut)));
    }
    let mut nn = Vec::with_capacity(n);
    let mut nb: Vec<Option<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut d_nn = f64::INFINITY;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = (&x[i] - &x[j]).norm();
            d_nn = d_nn.min(d);
            if y[j] < y[i] && best.is_none_or(|b| d < b.1) {
                best = Some((j, d));
            }
        }
        nn.push(d_nn);
        nb.push(best);
    }
    let mut indegree = vec![0.0; n];
    let (mut dnn, mut dnb, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n {
        if let Some((j, d)) = nb[i] {
            indegree[j] += 1.0;
            dnn.push(nn[i]);
            dnb.push(d);
            w.push(if d == 0.0 { 1.0 } else { nn[i] / d });
        }
    }
    named([
        ("nb_std_ratio", FeatureValue::ratio(sample_std(&dnn), sample_std(&dnb))),
        ("nb_mean_ratio", FeatureValue::ratio(mean(&dnn), mean(&dnb))),
        ("nb_cor", corr(&dnn, &dnb)),
        ("dist_ratio", FeatureValue::ratio(sample_std(&w), mean(&w))),
        (
            "nb_fitness_cor",
            match corr(&indegree, &y) {
                FeatureValue::Real(c) => FeatureValue::Real(-c),
                v => v,
            },
        ),
    ])
}
