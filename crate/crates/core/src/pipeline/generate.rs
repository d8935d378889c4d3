//! Stage 1: CMA-ES runs, generation sampling and smoothed resamples.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::store::{resample_path, run_dir, run_id, write_atomic, RunMeta};
use super::{with_pool, Failure, StageReport};
use crate::benchfns::{make_instance, BaseFunction, ObjectiveInstance};
use crate::cmaes::{default_params, run, run_ipop, smoothed_distribution, RunRecord};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sample::{Point, SampleSet};
use crate::seeding;

/// Coordinates of one independent run (before restarts).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunKey {
    pub function: BaseFunction,
    pub dim: usize,
    pub instance: u64,
    pub seed: u64,
}

pub fn run_keys(cfg: &ExperimentConfig) -> Vec<RunKey> {
    let mut keys = Vec::new();
    for &dim in &cfg.dims {
        for &function in &cfg.functions {
            for &instance in &cfg.instances {
                for &seed in &cfg.seeds {
                    keys.push(RunKey {
                        function,
                        dim,
                        instance,
                        seed,
                    });
                }
            }
        }
    }
    keys
}

/// Uniform choice without replacement of `count` generations among
/// `1..n_generations` (generation 0 has an empty archive), sorted.
pub fn sample_generations(n_generations: usize, count: usize, seed: u64) -> Vec<usize> {
    let pool = n_generations.saturating_sub(1);
    let mut rng = seeding::rng(seed, &[]);
    let mut g: Vec<usize> = sample(&mut rng, pool, count.min(pool))
        .into_iter()
        .map(|i| i + 1)
        .collect();
    g.sort_unstable();
    g
}

struct Smoothed {
    mean: DVector<f64>,
    root: DMatrix<f64>,
}

impl Smoothed {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let z = DVector::from_fn(self.mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.root * z
    }
}

/// Resample of generation `g`: every earlier generation's population redrawn
/// from its smoothed distribution and evaluated, followed by a fresh
/// unevaluated population from the smoothed distribution at `g`.
fn resample(
    rec: &RunRecord,
    smoothed: &[Smoothed],
    objective: &ObjectiveInstance,
    g: usize,
    rng: &mut seeding::Rng,
) -> Result<SampleSet> {
    let d = objective.dim();
    let mut set = SampleSet::empty(d);
    for n in 0..g {
        for _ in rec.offsets[n]..rec.offsets[n + 1] {
            let x = smoothed[n].draw(rng);
            let y = objective.peek(&x);
            set.push(x, Some(y))?;
        }
    }
    for _ in rec.offsets[g]..rec.offsets[g + 1] {
        set.push(smoothed[g].draw(rng), None)?;
    }
    Ok(set)
}

fn states_jsonl(rec: &RunRecord) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for s in &rec.states {
        serde_json::to_writer(&mut buf, s).map_err(|e| Error::Config(e.to_string()))?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn store_record(
    cfg: &ExperimentConfig,
    out: &Path,
    key: RunKey,
    restart: usize,
    rec: &RunRecord,
    objective: &ObjectiveInstance,
) -> Result<String> {
    let id = run_id(key.function, key.dim, key.instance, key.seed, restart);
    let dir = run_dir(out, &id);
    if dir.join("meta.json").is_file() {
        // complete runs are never rewritten
        return Ok(id);
    }
    let gens = sample_generations(
        rec.generations(),
        cfg.generations,
        seeding::derive(cfg.seed, &[seeding::label("generations"), seeding::label(&id)]),
    );
    let smoothed = (0..rec.states.len())
        .map(|g| {
            let (mean, cov) = smoothed_distribution(rec, g)?;
            Ok(Smoothed {
                mean,
                root: linalg::sym_sqrt(&cov)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for &g in &gens {
        for i in 0..cfg.resamples {
            let mut rng = seeding::rng(
                cfg.seed,
                &[seeding::label("resample"), seeding::label(&id), g as u64, i as u64],
            );
            resample(rec, &smoothed, objective, g, &mut rng)?.save(&resample_path(&dir, g, i))?;
        }
    }
    write_atomic(&dir.join("states.jsonl"), &states_jsonl(rec)?)?;
    rec.archive.save(&dir.join("archive.csv"))?;
    let meta = RunMeta {
        run_id: id.clone(),
        function: key.function,
        dim: key.dim,
        instance: key.instance,
        seed: key.seed,
        restart,
        lambda: rec.lambda,
        mu: default_params(key.dim, Some(rec.lambda))?.mu,
        termination: rec.termination,
        cov_repairs: rec.cov_repairs,
        best: rec.best,
        evaluations: rec.archive.len(),
        offsets: rec.offsets.clone(),
        sampled_generations: gens,
        resamples: cfg.resamples,
    };
    let path = dir.join("meta.json");
    let text = serde_json::to_vec_pretty(&meta).map_err(|e| Error::json(&path, e))?;
    write_atomic(&path, &text)?;
    Ok(id)
}

fn generate_one(cfg: &ExperimentConfig, out: &Path, key: RunKey) -> Result<Vec<String>> {
    let mut objective = make_instance(key.function, key.dim, key.instance)?;
    let params = default_params(key.dim, None)?;
    let mut rng = seeding::rng(
        cfg.seed,
        &[
            seeding::label("run"),
            seeding::label(key.function.name()),
            key.dim as u64,
            key.instance,
            key.seed,
        ],
    );
    let budget = cfg.budget(key.dim);
    let records = if cfg.max_restarts == 0 {
        vec![run(&mut objective, &params, budget, cfg.target, &mut rng)?]
    } else {
        run_ipop(&mut objective, &params, budget, cfg.target, cfg.max_restarts, &mut rng)?
    };
    records
        .iter()
        .enumerate()
        .map(|(r, rec)| store_record(cfg, out, key, r, rec, &objective))
        .collect()
}

/// Runs CMA-ES for every `(dim, function, instance, seed)` and stores the
/// records with their sampled generations and resamples. Runs whose
/// directory is already complete are left untouched.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<StageReport> {
    cfg.validate()?;
    let keys = run_keys(cfg);
    let results: Vec<(RunKey, Result<Vec<String>>)> =
        with_pool(|| keys.par_iter().map(|k| (*k, generate_one(cfg, out, *k))).collect())?;
    let mut report = StageReport::new("generate");
    report.tasks = keys.len();
    for (k, r) in results {
        if let Err(e) = r {
            report.failures.push(Failure {
                item: run_id(k.function, k.dim, k.instance, k.seed, 0),
                error: e.to_string(),
            });
        }
    }
    report.write_manifest(out)?;
    Ok(report)
}
