//! Stage 2: landscape features for every sampled generation and resample.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::store::{write_atomic, StoredRun};
use super::{with_pool, Failure, StageReport};
use crate::error::{Error, Result};
use crate::features::{build_contexts, compute_all, FeatureValue};
use crate::sample::Point;
use crate::seeding;
use crate::tss::TssSpec;

pub const FEATURE_HEADER: [&str; 8] = [
    "run_id",
    "generation",
    "sample",
    "tss",
    "set_variant",
    "transformed",
    "feature_name",
    "value",
];

/// Sample label: the original archive or resample `i`.
pub fn sample_label(i: Option<usize>) -> String {
    i.map_or_else(|| "orig".to_string(), |i| format!("r{i}"))
}

pub fn feature_file(out: &Path, tss: &TssSpec, run_id: &str) -> PathBuf {
    out.join("features").join(tss.label()).join(format!("{run_id}.csv"))
}

/// One parsed row of a feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub run_id: String,
    pub generation: usize,
    pub sample: String,
    pub tss: String,
    pub variant: String,
    pub feature: String,
    pub value: FeatureValue,
}

impl FeatureRecord {
    /// `group.name@variant`.
    pub fn id(&self) -> String {
        format!("{}@{}", self.feature, self.variant)
    }
}

fn features_for_run(cfg: &ExperimentConfig, run: &StoredRun, tss: &TssSpec) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let id = &run.meta.run_id;
    let path = feature_file(Path::new(""), tss, id);
    w.write_record(FEATURE_HEADER).map_err(|e| Error::csv(&path, e))?;
    for &g in &run.meta.sampled_generations {
        let state = &run.states[g];
        let orig_pop: Vec<Point> = run
            .population(g)
            .ok_or_else(|| Error::format(&run.dir, format!("generation {g} has no population")))?
            .points()
            .to_vec();
        let mut samples = vec![(None, run.archive_before(g), orig_pop)];
        for i in 0..run.meta.resamples {
            let (a, p) = run.resample(g, i)?;
            samples.push((Some(i), a, p));
        }
        for (i, archive, population) in samples {
            let label = sample_label(i);
            let contexts = build_contexts(&archive, &population, tss, state)?;
            let seed = seeding::derive(
                cfg.seed,
                &[
                    seeding::label("features"),
                    seeding::label(id),
                    g as u64,
                    seeding::label(&label),
                ],
            );
            for row in compute_all(&contexts, seed) {
                w.write_record([
                    id.as_str(),
                    &g.to_string(),
                    &label,
                    &tss.label(),
                    row.variant.base.name(),
                    if row.variant.transformed { "true" } else { "false" },
                    &format!("{}.{}", row.group, row.name),
                    &row.value.to_string(),
                ])
                .map_err(|e| Error::csv(&path, e))?;
            }
        }
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

/// Computes features for every stored run and TSS method into
/// `features/<tss>/<run_id>.csv`.
pub fn cmd_features(cfg: &ExperimentConfig, out: &Path) -> Result<StageReport> {
    cfg.validate()?;
    let runs = StoredRun::load_all(out)?;
    let tasks: Vec<(&StoredRun, &TssSpec)> = runs.iter().flat_map(|r| cfg.tss.iter().map(move |t| (r, t))).collect();
    let results: Vec<Result<()>> = with_pool(|| {
        tasks
            .par_iter()
            .map(|(run, tss)| {
                let bytes = features_for_run(cfg, run, tss)?;
                write_atomic(&feature_file(out, tss, &run.meta.run_id), &bytes)
            })
            .collect()
    })?;
    let mut report = StageReport::new("features");
    report.tasks = tasks.len();
    for ((run, tss), r) in tasks.iter().zip(results) {
        if let Err(e) = r {
            report.failures.push(Failure {
                item: format!("{}/{}", tss.label(), run.meta.run_id),
                error: e.to_string(),
            });
        }
    }
    report.write_manifest(out)?;
    Ok(report)
}

/// Reads every feature file of one TSS label, in file-name order.
pub fn read_features(out: &Path, tss_label: &str) -> Result<Vec<FeatureRecord>> {
    let dir = out.join("features").join(tss_label);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    for f in files {
        let mut r = csv::Reader::from_path(&f).map_err(|e| Error::csv(&f, e))?;
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(&f, e))?;
            if rec.len() != FEATURE_HEADER.len() {
                return Err(Error::format(&f, "wrong number of columns"));
            }
            let transformed = &rec[5] == "true";
            rows.push(FeatureRecord {
                run_id: rec[0].to_string(),
                generation: rec[1].parse().map_err(|_| Error::format(&f, "bad generation"))?,
                sample: rec[2].to_string(),
                tss: rec[3].to_string(),
                variant: if transformed {
                    format!("{}:t", &rec[4])
                } else {
                    rec[4].to_string()
                },
                feature: rec[6].to_string(),
                value: rec[7].parse().map_err(|e: Error| Error::format(&f, e.to_string()))?,
            });
        }
    }
    Ok(rows)
}
