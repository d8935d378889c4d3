//! Information content of the fitness sequence along a random tour.

use rand::seq::SliceRandom;

use super::{named, FeatureValue, Features};
use crate::sample::{Point, SampleSet};
use crate::seeding::Rng;

pub const SETTLING_THRESHOLD: f64 = 0.05;
pub const PARTIAL_RATIO: f64 = 0.5;

/// `{0} ∪ 10^linspace(−5, 15, 1000)`.
pub fn default_epsilon_grid() -> Vec<f64> {
    let mut g = Vec::with_capacity(1001);
    g.push(0.0);
    for i in 0..1000 {
        g.push(10f64.powf(-5.0 + 20.0 * i as f64 / 999.0));
    }
    g
}

/// One step of the tour: the slope, or `None` when either output is missing.
pub(crate) fn tour_slopes(points: &[Point], outputs: &[Option<f64>], order: &[usize]) -> Vec<Option<f64>> {
    order
        .windows(2)
        .map(|w| {
            let (i, j) = (w[0], w[1]);
            match (outputs[i], outputs[j]) {
                (Some(a), Some(b)) => {
                    let dy = b - a;
                    let dx = (&points[j] - &points[i]).norm();
                    Some(if dy == 0.0 { 0.0 } else { dy / dx })
                }
                _ => None,
            }
        })
        .collect()
}

/// Symbols: `-1`, `0`, `1`, and `2` for a missing step.
pub(crate) fn symbols(slopes: &[Option<f64>], eps: f64) -> Vec<i8> {
    slopes
        .iter()
        .map(|s| match s {
            None => 2,
            Some(v) if *v < -eps => -1,
            Some(v) if *v > eps => 1,
            Some(_) => 0,
        })
        .collect()
}

/// Entropy of the unequal consecutive symbol pairs.
pub(crate) fn entropy(psi: &[i8], with_missing: bool) -> f64 {
    let blocks = psi.len() - 1;
    let base: f64 = if with_missing { 12.0 } else { 6.0 };
    let mut counts = [[0usize; 4]; 4];
    for w in psi.windows(2) {
        if w[0] != w[1] {
            counts[(w[0] + 1) as usize][(w[1] + 1) as usize] += 1;
        }
    }
    let mut h = 0.0;
    for row in counts {
        for c in row {
            if c > 0 {
                let p = c as f64 / blocks as f64;
                h -= p * p.log(base);
            }
        }
    }
    h
}

/// Sign changes in the nonzero subsequence, divided by the number of steps.
pub(crate) fn partial_information(psi: &[i8]) -> f64 {
    let mut changes = 0usize;
    let mut last = 0i8;
    for &s in psi.iter().filter(|s| **s != 0) {
        if last != 0 && s != last {
            changes += 1;
        }
        last = s;
    }
    changes as f64 / psi.len() as f64
}

/// `{h_max, eps_s, eps_max, m0, eps_ratio}` along a random tour through all
/// points of the set; steps touching a missing output get their own symbol.
pub fn info_content_features(set: &SampleSet, grid: &[f64], rng: &mut Rng) -> Features {
    let n = set.len();
    let nan = || named(["h_max", "eps_s", "eps_max", "m0", "eps_ratio"].map(|k| (k, FeatureValue::NanOut)));
    if n < 3 || grid.is_empty() {
        return nan();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let slopes = tour_slopes(set.points(), set.outputs(), &order);
    let with_missing = slopes.iter().any(Option::is_none);

    let mut h_max = f64::NEG_INFINITY;
    let mut eps_max = f64::NAN;
    let mut eps_s = None;
    let mut m = Vec::with_capacity(grid.len());
    for &eps in grid {
        let psi = symbols(&slopes, eps);
        let h = entropy(&psi, with_missing);
        if h > h_max {
            h_max = h;
            eps_max = eps;
        }
        if eps_s.is_none() && h < SETTLING_THRESHOLD {
            eps_s = Some(eps);
        }
        if !with_missing {
            m.push(partial_information(&psi));
        }
    }

    let (m0, eps_ratio) = if with_missing {
        (FeatureValue::NanOut, FeatureValue::NanOut)
    } else {
        let m0 = m[grid.iter().position(|e| *e == 0.0).unwrap_or(0)];
        let above = grid
            .iter()
            .zip(&m)
            .filter(|(_, v)| **v > PARTIAL_RATIO * m0)
            .map(|(e, _)| *e)
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
        (
            FeatureValue::Real(m0),
            above.map_or(FeatureValue::NanOut, |e| FeatureValue::Real(e.log10())),
        )
    };
    named([
        ("h_max", FeatureValue::Real(h_max)),
        (
            "eps_s",
            eps_s.map_or(FeatureValue::NanOut, |e| FeatureValue::Real(e.log10())),
        ),
        ("eps_max", FeatureValue::from_f64(eps_max)),
        ("m0", m0),
        ("eps_ratio", eps_ratio),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn hand_sequence() {
        let psi = [1, -1, 1, -1];
        assert!((partial_information(&psi) - 0.75).abs() < 1e-15);
        // blocks: (1,-1) twice, (-1,1) once
        let want = -(2.0 / 3.0 * (2.0f64 / 3.0).log(6.0) + 1.0 / 3.0 * (1.0f64 / 3.0).log(6.0));
        assert!((entropy(&psi, false) - want).abs() < 1e-15);
        assert_eq!(entropy(&[1, 1, 1], false), 0.0);
        assert_eq!(partial_information(&[0, 1, 0, 1]), 0.0);
    }

    #[test]
    fn monotone_and_flat() {
        let pts: Vec<Point> = (0..10).map(|i| Point::from_vec(vec![i as f64])).collect();
        let s = SampleSet::evaluated(1, pts.clone(), (0..10).map(|i| i as f64).collect()).unwrap();
        let order: Vec<usize> = (0..10).collect();
        let slopes = tour_slopes(s.points(), s.outputs(), &order);
        let psi = symbols(&slopes, 0.5);
        assert!(psi.iter().all(|v| *v == 1));
        assert_eq!(entropy(&psi, false), 0.0);
        assert_eq!(partial_information(&psi), 0.0);
        assert!(symbols(&slopes, 2.0).iter().all(|v| *v == 0));

        let mut rng = Rng::seed_from_u64(3);
        let f = info_content_features(&s, &default_epsilon_grid(), &mut rng);
        let FeatureValue::Real(h) = f[0].1 else { panic!() };
        assert!((0.0..=1.0).contains(&h));
        assert!(f[1].1.value().is_some());
    }

    #[test]
    fn missing_outputs_disable_partial_information() {
        let pts: Vec<Point> = (0..5).map(|i| Point::from_vec(vec![i as f64])).collect();
        let s = SampleSet::new(1, pts, vec![Some(0.0), Some(1.0), None, Some(3.0), Some(2.0)]).unwrap();
        let mut rng = Rng::seed_from_u64(1);
        let f = info_content_features(&s, &default_epsilon_grid(), &mut rng);
        assert!(f[3].1.is_nanout());
        assert!(f[4].1.is_nanout());
        assert!(!f[0].1.is_nanout());
    }
}
