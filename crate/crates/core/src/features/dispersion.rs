//! Dispersion of the best points compared with the whole set.

use super::{named, pairwise, FeatureValue, Features};
use crate::sample::SampleSet;
use crate::stats;
use crate::transform::Metric;

pub const DISPERSION_QUANTILES: [f64; 4] = [0.02, 0.05, 0.1, 0.25];

fn quantile_tag(q: f64) -> String {
    format!("{:02}", (q * 100.0).round() as u32)
}

/// `{ratio, diff} × {mean, median} × quantiles`. Distances are taken over
/// every point of the set; a quantile subset holds the points with known
/// `y ≤ Q_q(y)`.
pub fn dispersion_features(set: &SampleSet, metric: &Metric) -> Features {
    let emb: Vec<_> = set.points().iter().map(|x| metric.embed(x)).collect();
    let all_refs: Vec<_> = emb.iter().collect();
    let d_all = pairwise(&all_refs);
    let known: Vec<(usize, f64)> = set
        .outputs()
        .iter()
        .enumerate()
        .filter_map(|(i, y)| y.map(|v| (i, v)))
        .collect();
    let ys: Vec<f64> = known.iter().map(|p| p.1).collect();
    let sorted = stats::total_cmp_sorted(&ys);

    let agg = |d: &[f64], mean: bool| -> FeatureValue {
        if d.is_empty() {
            FeatureValue::NanOut
        } else if mean {
            FeatureValue::Real(stats::mean(d))
        } else {
            FeatureValue::Real(stats::median(d))
        }
    };
    let all_mean = agg(&d_all, true);
    let all_median = agg(&d_all, false);

    let mut out = Vec::with_capacity(16);
    for q in DISPERSION_QUANTILES {
        let d_q = if sorted.is_empty() {
            Vec::new()
        } else {
            let thr = stats::quantile_sorted(&sorted, q);
            let sub: Vec<_> = known.iter().filter(|p| p.1 <= thr).map(|p| &emb[p.0]).collect();
            pairwise(&sub)
        };
        let q_mean = agg(&d_q, true);
        let q_median = agg(&d_q, false);
        let tag = quantile_tag(q);
        let diff = |a: FeatureValue, b: FeatureValue| match (a, b) {
            (FeatureValue::Real(a), FeatureValue::Real(b)) => FeatureValue::from_f64(a - b),
            _ => FeatureValue::NanOut,
        };
        out.push((format!("ratio_mean_{tag}"), FeatureValue::ratio(q_mean, all_mean)));
        out.push((format!("ratio_median_{tag}"), FeatureValue::ratio(q_median, all_median)));
        out.push((format!("diff_mean_{tag}"), diff(q_mean, all_mean)));
        out.push((format!("diff_median_{tag}"), diff(q_median, all_median)));
    }
    named(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Point;

    fn get(f: &Features, name: &str) -> FeatureValue {
        f.iter().find(|p| p.0 == name).unwrap().1
    }

    #[test]
    fn constant_y_gives_neutral_values() {
        let pts: Vec<Point> = (0..6)
            .map(|i| Point::from_vec(vec![i as f64, (i * i) as f64]))
            .collect();
        let s = SampleSet::evaluated(2, pts, vec![1.0; 6]).unwrap();
        let f = dispersion_features(&s, &Metric::Euclidean);
        assert_eq!(f.len(), 16);
        for (name, v) in &f {
            let want = if name.starts_with("ratio") { 1.0 } else { 0.0 };
            assert_eq!(*v, FeatureValue::Real(want), "{name}");
        }
    }

    #[test]
    fn best_points_cluster() {
        let pts: Vec<Point> = [0.0, 1.0, 2.0, 10.0]
            .iter()
            .map(|v| Point::from_vec(vec![*v]))
            .collect();
        let s = SampleSet::evaluated(1, pts, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let f = dispersion_features(&s, &Metric::Euclidean);
        // Q_0.25 = 0.75 selects a single point
        assert!(get(&f, "diff_mean_25").is_nanout());
        let pts: Vec<Point> = (0..8).map(|v| Point::from_vec(vec![v as f64])).collect();
        let s = SampleSet::evaluated(1, pts, (0..8).map(|v| v as f64).collect()).unwrap();
        let FeatureValue::Real(d) = get(&dispersion_features(&s, &Metric::Euclidean), "diff_mean_25") else {
            panic!()
        };
        assert!(d < 0.0);
        let small = SampleSet::evaluated(
            1,
            vec![Point::zeros(1), Point::from_vec(vec![1.0]), Point::from_vec(vec![2.0])],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        assert!(get(&dispersion_features(&small, &Metric::Euclidean), "ratio_mean_02").is_nanout());
    }
}
