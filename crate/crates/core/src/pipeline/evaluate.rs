//! Stage 3: train every model setting on the archive of each sampled
//! generation and measure its error on that generation's population.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::store::{write_atomic, StoredRun};
use super::{with_pool, StageReport};
use crate::error::{Error, Result};
use crate::models::{train_model, ErrorPair, ModelSettings};
use crate::sample::{fmt_f64, Point};
use crate::seeding;
use crate::tss::TssSpec;

/// One row of `errors.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub run_id: String,
    pub function: String,
    pub dim: usize,
    pub instance: u64,
    pub seed: u64,
    pub restart: usize,
    pub generation: usize,
    pub tss: String,
    pub model: String,
    #[serde(serialize_with = "opt_f64", deserialize_with = "de_opt_f64")]
    pub mse: Option<f64>,
    #[serde(serialize_with = "opt_f64", deserialize_with = "de_opt_f64")]
    pub rde: Option<f64>,
    /// `ok`, `not_trained` or `predict_failed`.
    pub status: String,
    pub reason: String,
}

fn opt_f64<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.map(fmt_f64).unwrap_or_default())
}

fn de_opt_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    let s = String::deserialize(d)?;
    if s.trim().is_empty() {
        Ok(None)
    } else {
        s.trim().parse().map(Some).map_err(serde::de::Error::custom)
    }
}

fn evaluate_cell(
    cfg: &ExperimentConfig,
    run: &StoredRun,
    g: usize,
    tss: &TssSpec,
    model: &ModelSettings,
) -> Result<ErrorRow> {
    let m = &run.meta;
    let archive = run.archive_before(g);
    let test = run
        .population(g)
        .ok_or_else(|| Error::format(&run.dir, format!("generation {g} has no population")))?;
    let xs: Vec<Point> = test.points().to_vec();
    let y = test.known_outputs();
    let mut rng = seeding::rng(
        cfg.seed,
        &[
            seeding::label("evaluate"),
            seeding::label(&m.run_id),
            g as u64,
            seeding::label(&tss.label()),
            seeding::label(&model.label()),
        ],
    );
    let (pair, status, reason) = match train_model(&archive, &xs, tss, model, &run.states[g], m.lambda, &mut rng) {
        Err(e) => (ErrorPair::missing(), "not_trained", e.to_string()),
        Ok(trained) => match trained.predict_many(&xs).and_then(|p| ErrorPair::compute(&y, &p, m.mu)) {
            Ok(pair) => (pair, "ok", String::new()),
            Err(e) => (ErrorPair::missing(), "predict_failed", e.to_string()),
        },
    };
    Ok(ErrorRow {
        run_id: m.run_id.clone(),
        function: m.function.name().to_string(),
        dim: m.dim,
        instance: m.instance,
        seed: m.seed,
        restart: m.restart,
        generation: g,
        tss: tss.label(),
        model: model.label(),
        mse: pair.mse,
        rde: pair.rde,
        status: status.to_string(),
        reason,
    })
}

pub fn write_error_table(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "run_id",
            "function",
            "dim",
            "instance",
            "seed",
            "restart",
            "generation",
            "tss",
            "model",
            "mse",
            "rde",
            "status",
            "reason",
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(path, &bytes)
}

pub fn read_error_table(path: &Path) -> Result<Vec<ErrorRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}

/// Trains and scores every `(run, generation, TSS, model)` cell into
/// `errors.csv`. Untrainable models become rows with empty errors and the
/// reason; they never abort the sweep.
pub fn cmd_evaluate(cfg: &ExperimentConfig, out: &Path) -> Result<StageReport> {
    cfg.validate()?;
    if cfg.models.is_empty() {
        return Err(Error::Config("no model settings to evaluate".into()));
    }
    let runs = StoredRun::load_all(out)?;
    let mut cells = Vec::new();
    for run in &runs {
        for &g in &run.meta.sampled_generations {
            for tss in &cfg.tss {
                for model in &cfg.models {
                    cells.push((run, g, tss, model));
                }
            }
        }
    }
    let results: Vec<Result<ErrorRow>> = with_pool(|| {
        cells
            .par_iter()
            .map(|(run, g, tss, model)| evaluate_cell(cfg, run, *g, tss, model))
            .collect()
    })?;
    let mut report = StageReport::new("evaluate");
    report.tasks = cells.len();
    let mut rows = Vec::with_capacity(cells.len());
    for ((run, g, tss, model), r) in cells.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => report.failures.push(super::Failure {
                item: format!("{}/g{}/{}/{}", run.meta.run_id, g, tss.label(), model.label()),
                error: e.to_string(),
            }),
        }
    }
    write_error_table(&out.join("errors.csv"), &rows)?;
    report.write_manifest(out)?;
    Ok(report)
}
