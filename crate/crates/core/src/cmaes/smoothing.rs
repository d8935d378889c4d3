use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::run::RunRecord;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sample::SampleSet;

const KERNEL: [f64; 5] = [1.0, 2.0, 3.0, 2.0, 1.0];

/// Weights `(1, 2, 3, 2, 1)/9` over generations `g−2..=g+2`, truncated to
/// `0..n_generations` and renormalised. Returns `(generation, weight)` pairs.
pub fn smoothing_weights(n_generations: usize, g: usize) -> Vec<(usize, f64)> {
    let picked: Vec<(usize, f64)> = KERNEL
        .iter()
        .enumerate()
        .filter_map(|(i, w)| {
            let n = (g + i).checked_sub(2)?;
            (n < n_generations).then_some((n, *w))
        })
        .collect();
    let total: f64 = picked.iter().map(|(_, w)| w).sum();
    picked.into_iter().map(|(n, w)| (n, w / total)).collect()
}

/// Mean `Σ w_n m^(n)` and covariance `Σ w_n² (σ^(n))² C^(n)` of the smoothed
/// distribution around generation `g`.
pub fn smoothed_distribution(record: &RunRecord, g: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let states = &record.states;
    if states.is_empty() {
        return Err(Error::NoGenerations);
    }
    if g >= states.len() {
        return Err(Error::InvalidArgument(format!(
            "generation {g} outside 0..{}",
            states.len()
        )));
    }
    let d = states[0].dim();
    let mut mean = DVector::zeros(d);
    let mut cov = DMatrix::zeros(d, d);
    for (n, w) in smoothing_weights(states.len(), g) {
        let s = &states[n];
        mean += &s.mean * w;
        cov += s.sampling_cov() * (w * w);
    }
    Ok((mean, linalg::symmetrize(&cov)))
}

/// Draws `n` unevaluated points from the smoothed distribution around
/// generation `g`.
pub fn smoothed_sample<R: Rng + ?Sized>(record: &RunRecord, g: usize, n: usize, rng: &mut R) -> Result<SampleSet> {
    let (mean, cov) = smoothed_distribution(record, g)?;
    let root = linalg::sym_sqrt(&cov)?;
    let d = mean.len();
    let points = (0..n)
        .map(|_| {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            &mean + &root * z
        })
        .collect();
    SampleSet::unevaluated(d, points)
}
