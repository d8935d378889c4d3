use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::params::CmaParams;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sample::Point;
use crate::state::DistributionState;
use crate::stats;

/// Draws `λ` offspring `m + σ C^{1/2} z`, `z ~ N(0, I)`.
pub fn sample_population<R: Rng + ?Sized>(
    state: &DistributionState,
    params: &CmaParams,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let root = linalg::sym_sqrt(&state.cov)?;
    let d = state.dim();
    Ok((0..params.lambda)
        .map(|_| {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            &state.mean + (&root * z) * state.sigma
        })
        .collect())
}

/// Result of one generation update.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub state: DistributionState,
    pub h_sigma: bool,
    /// The covariance needed an eigenvalue floor to stay positive definite.
    pub repaired: bool,
}

/// One generation of mean, evolution-path, covariance and step-size
/// adaptation.
pub fn update(state: &DistributionState, population: &[(Point, f64)], params: &CmaParams) -> Result<DistributionState> {
    update_step(state, population, params).map(|o| o.state)
}

pub fn update_step(
    state: &DistributionState,
    population: &[(Point, f64)],
    params: &CmaParams,
) -> Result<UpdateOutcome> {
    let d = state.dim();
    if population.len() != params.lambda {
        return Err(Error::InvalidArgument(format!(
            "population of {} but λ = {}",
            population.len(),
            params.lambda
        )));
    }
    for (x, f) in population {
        Error::check_dim(d, x.len())?;
        if !f.is_finite() {
            return Err(Error::InvalidFitness(*f));
        }
    }
    let fitness: Vec<f64> = population.iter().map(|(_, f)| *f).collect();
    let order = stats::argsort(&fitness);
    let selected: Vec<&Point> = order[..params.mu].iter().map(|&i| &population[i].0).collect();

    let sigma = state.sigma;
    let mean_old = &state.mean;

    // mean
    let mut mean = DVector::zeros(d);
    for (w, x) in params.weights.iter().zip(&selected) {
        mean += *x * *w;
    }
    let step = (&mean - mean_old) / sigma;

    // step-size path
    let inv_sqrt = linalg::sym_inv_sqrt(&state.cov)?;
    let cs = params.c_sigma;
    let p_sigma = &state.p_sigma * (1.0 - cs) + (&inv_sqrt * &step) * (cs * (2.0 - cs) * params.mu_w).sqrt();

    // stall indicator
    let g1 = (state.generation + 1) as f64;
    let threshold = (1.0 - (1.0 - cs).powf(2.0 * g1)).sqrt() * (1.4 + 2.0 / (d as f64 + 1.0)) * params.chi_n;
    let h_sigma = p_sigma.norm() < threshold;
    let h = if h_sigma { 1.0 } else { 0.0 };

    // covariance path
    let cc = params.c_c;
    let p_c = &state.p_c * (1.0 - cc) + &step * (h * (cc * (2.0 - cc) * params.mu_w).sqrt());

    // rank-μ matrix
    let mut c_mu_mat = DMatrix::zeros(d, d);
    for (w, x) in params.weights.iter().zip(&selected) {
        let y = (*x - mean_old) / sigma;
        c_mu_mat += (&y * y.transpose()) * *w;
    }

    let mut rank_one = &p_c * p_c.transpose();
    if params.hsig_correction && !h_sigma {
        rank_one += &state.cov * (cc * (2.0 - cc));
    }
    let cov = &state.cov * (1.0 - params.c_1 - params.c_mu) + rank_one * params.c_1 + c_mu_mat * params.c_mu;
    let mut cov = linalg::symmetrize(&cov);

    let sigma_new = sigma * ((cs / params.d_sigma) * (p_sigma.norm() / params.chi_n - 1.0)).exp();

    let mut repaired = false;
    if !(linalg::min_eigenvalue(&cov) > 0.0) {
        let eig = linalg::floored_eigen(&cov)?;
        let b = &eig.eigenvectors;
        cov = linalg::symmetrize(&(b * DMatrix::from_diagonal(&eig.eigenvalues) * b.transpose()));
        repaired = true;
    }

    Ok(UpdateOutcome {
        state: DistributionState {
            mean,
            sigma: sigma_new,
            cov,
            p_sigma,
            p_c,
            generation: state.generation + 1,
            restarts: state.restarts,
        },
        h_sigma,
        repaired,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmaes::default_params;
    use crate::seeding;

    #[test]
    fn identical_offspring_keep_mean() {
        let p = default_params(2, None).unwrap();
        let s = DistributionState::initial(DVector::from_vec(vec![1.0, -2.0]), 0.7);
        let pop: Vec<_> = (0..p.lambda).map(|_| (s.mean.clone(), 3.0)).collect();
        let next = update(&s, &pop, &p).unwrap();
        assert!((&next.mean - &s.mean).amax() < 1e-15);
        assert_eq!(next.generation, 1);
    }

    #[test]
    fn rejects_nonfinite_fitness() {
        let p = default_params(2, None).unwrap();
        let s = DistributionState::initial(DVector::zeros(2), 1.0);
        let mut pop: Vec<_> = (0..p.lambda).map(|_| (s.mean.clone(), 0.0)).collect();
        pop[2].1 = f64::NAN;
        assert!(matches!(update(&s, &pop, &p), Err(Error::InvalidFitness(_))));
    }

    #[test]
    fn sampling_is_deterministic_and_collapses() {
        let p = default_params(3, None).unwrap();
        let mut s = DistributionState::initial(DVector::from_vec(vec![1.0, 2.0, 3.0]), 1.0);
        let a = sample_population(&s, &p, &mut seeding::rng(5, &[])).unwrap();
        let b = sample_population(&s, &p, &mut seeding::rng(5, &[])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), p.lambda);
        s.sigma = 1e-12;
        let c = sample_population(&s, &p, &mut seeding::rng(5, &[])).unwrap();
        for x in c {
            assert!((&x - &s.mean).norm() <= 1e-9 * s.mean.norm());
        }
    }

    #[test]
    fn step_size_follows_path_length() {
        let p = default_params(2, None).unwrap();
        let s = DistributionState::initial(DVector::zeros(2), 1.0);
        // all selected offspring far along one axis: long path, σ grows
        let far: Vec<_> = (0..p.lambda)
            .map(|i| (DVector::from_vec(vec![5.0, 0.0]), i as f64))
            .collect();
        assert!(update(&s, &far, &p).unwrap().sigma > s.sigma);
        let near: Vec<_> = (0..p.lambda)
            .map(|i| (DVector::from_vec(vec![0.0, 0.0]), i as f64))
            .collect();
        assert!(update(&s, &near, &p).unwrap().sigma < s.sigma);
    }
}
