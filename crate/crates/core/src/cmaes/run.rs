use rand::Rng;
use serde::{Deserialize, Serialize};

use super::engine::{sample_population, update_step};
use super::params::CmaParams;
use crate::benchfns::ObjectiveInstance;
use crate::error::{Error, Result};
use crate::linalg;
use crate::sample::{Point, SampleSet};
use crate::state::DistributionState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    TargetReached,
    BudgetExhausted,
    Stagnation,
}

/// Everything one CMA-ES run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// `states[g]` is the distribution that sampled generation `g`; the last
    /// entry is the state after the final update.
    pub states: Vec<DistributionState>,
    /// All evaluated points in evaluation order.
    pub archive: SampleSet,
    /// `offsets[g]` is the archive length before generation `g` was sampled.
    pub offsets: Vec<usize>,
    pub termination: Termination,
    pub lambda: usize,
    /// Number of updates that needed the eigenvalue floor.
    pub cov_repairs: usize,
    /// Best fitness seen.
    pub best: f64,
}

impl RunRecord {
    pub fn final_state(&self) -> &DistributionState {
        self.states.last().expect("record has an initial state")
    }

    /// Number of completed generations.
    pub fn generations(&self) -> usize {
        self.states.len() - 1
    }

    /// The archive as it was when generation `g` was sampled.
    pub fn archive_before(&self, g: usize) -> SampleSet {
        let end = self.offsets[g.min(self.offsets.len() - 1)];
        self.archive.subset(&(0..end).collect::<Vec<_>>())
    }

    /// The population evaluated in generation `g`, if it was completed.
    pub fn population(&self, g: usize) -> Option<SampleSet> {
        let start = *self.offsets.get(g)?;
        let end = *self.offsets.get(g + 1)?;
        Some(self.archive.subset(&(start..end).collect::<Vec<_>>()))
    }
}

/// Run settings beyond the strategy parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Maximum number of evaluations; only whole generations are evaluated.
    pub budget: usize,
    /// Stop once `best − f_opt ≤ target`.
    pub target: f64,
    /// Initial mean; drawn uniformly from `[−4, 4]^d` when absent.
    pub initial_mean: Option<Point>,
    pub initial_sigma: f64,
    /// Generations without an improvement above `1e-12` before giving up;
    /// `30·d` when absent.
    pub stagnation_generations: Option<usize>,
    /// Restart counter written into every state.
    pub restart: usize,
}

impl RunOptions {
    pub fn new(budget: usize, target: f64) -> Self {
        RunOptions {
            budget,
            target,
            initial_mean: None,
            initial_sigma: 2.0,
            stagnation_generations: None,
            restart: 0,
        }
    }
}

const IMPROVEMENT_TOL: f64 = 1e-12;
const SIGMA_COLLAPSE: f64 = 1e-20;

/// One CMA-ES run until the target, the budget or stagnation stops it.
pub fn run<R: Rng + ?Sized>(
    objective: &mut ObjectiveInstance,
    params: &CmaParams,
    budget: usize,
    target: f64,
    rng: &mut R,
) -> Result<RunRecord> {
    run_with(objective, params, &RunOptions::new(budget, target), rng)
}

pub fn run_with<R: Rng + ?Sized>(
    objective: &mut ObjectiveInstance,
    params: &CmaParams,
    opts: &RunOptions,
    rng: &mut R,
) -> Result<RunRecord> {
    let d = objective.dim();
    Error::check_dim(d, params.dim)?;
    let mean = match &opts.initial_mean {
        Some(m) => {
            Error::check_dim(d, m.len())?;
            m.clone()
        }
        None => Point::from_fn(d, |_, _| rng.random_range(-4.0..=4.0)),
    };
    let mut state = DistributionState::initial(mean, opts.initial_sigma);
    state.restarts = opts.restart;
    state.validate()?;

    let stall_limit = opts.stagnation_generations.unwrap_or(30 * d);
    let f_opt = objective.f_opt();
    let mut archive = SampleSet::empty(d);
    let mut offsets = vec![0];
    let mut states = vec![state.clone()];
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut repairs = 0;

    let termination = loop {
        if best - f_opt <= opts.target {
            break Termination::TargetReached;
        }
        if archive.len() + params.lambda > opts.budget {
            break Termination::BudgetExhausted;
        }
        let xs = sample_population(&state, params, rng)?;
        let mut population = Vec::with_capacity(xs.len());
        let prev_best = best;
        for x in xs {
            let f = objective.evaluate(&x)?;
            if !f.is_finite() {
                return Err(Error::InvalidFitness(f));
            }
            archive.push(x.clone(), Some(f))?;
            best = best.min(f);
            population.push((x, f));
        }
        let outcome = update_step(&state, &population, params)?;
        repairs += outcome.repaired as usize;
        state = outcome.state;
        offsets.push(archive.len());
        states.push(state.clone());

        if prev_best - best > IMPROVEMENT_TOL {
            stalled = 0;
        } else {
            stalled += 1;
        }
        if best - f_opt <= opts.target {
            break Termination::TargetReached;
        }
        let spread = state.sigma * linalg::max_eigenvalue(&state.cov).max(0.0).sqrt();
        if stalled >= stall_limit || !(spread > SIGMA_COLLAPSE) || !state.sigma.is_finite() {
            break Termination::Stagnation;
        }
    };

    Ok(RunRecord {
        states,
        archive,
        offsets,
        termination,
        lambda: params.lambda,
        cov_repairs: repairs,
        best,
    })
}

/// IPOP-CMA-ES: restart with doubled population size until the target is
/// reached, the shared budget cannot fund another generation, or
/// `max_restarts` restarts were made.
pub fn run_ipop<R: Rng + ?Sized>(
    objective: &mut ObjectiveInstance,
    base_params: &CmaParams,
    budget: usize,
    target: f64,
    max_restarts: usize,
    rng: &mut R,
) -> Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    let mut used = 0;
    for r in 0..=max_restarts {
        let params = if r == 0 {
            base_params.clone()
        } else {
            base_params.with_lambda(base_params.lambda << r)?
        };
        let remaining = budget - used;
        if r > 0 && remaining < params.lambda {
            break;
        }
        let mut opts = RunOptions::new(remaining, target);
        opts.restart = r;
        let rec = run_with(objective, &params, &opts, rng)?;
        used += rec.archive.len();
        let done = rec.termination != Termination::Stagnation;
        records.push(rec);
        if done {
            break;
        }
    }
    Ok(records)
}
