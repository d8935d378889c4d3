//! Stage 5: feature screening, clustering and the model-comparison tests.
//!
//! Per TSS method the feature files are screened for `NanOut` rate,
//! normalised, tested for dimension dependence, filtered by robustness and
//! clustered. The error table (the test part of the split when present) then
//! feeds the KS tests of the cluster medoids and the pairwise comparisons of
//! all `(TSS, model)` combinations.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::config::ExperimentConfig;
use super::evaluate::{read_error_table, ErrorRow};
use super::extract::{read_features, FeatureRecord};
use super::store::{write_atomic, RunMeta};
use super::{Failure, StageReport};
use crate::analysis::{
    estimate_n_nanout, friedman_test, hierarchical_cluster, holm_correction, k_medoids, ks_two_sample, nan_rate,
    pairwise_wins, robustness, similarity_matrix, wilcoxon_signed_rank,
};
use crate::error::{Error, Result};
use crate::features::{fit_normalization, normalize_value, FeatureValue, NormalizationSpec};
use crate::sample::fmt_f64;
use crate::seeding;
use crate::stats;

pub const MEASURES: [&str; 2] = ["mse", "rde"];
const ORIG: &str = "orig";

/// `(run_id, generation)`.
type Case = (String, usize);

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::csv(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(path, &bytes)
}

/// Per-feature outcome of the screening.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSummary {
    pub feature: String,
    pub nan_rate: f64,
    pub excluded_nanout: bool,
    pub n_nanout: Option<usize>,
    pub friedman_p: Option<f64>,
    pub friedman_p_holm: Option<f64>,
    pub dim_dependent: bool,
    pub robustness: Option<f64>,
    pub retained: bool,
    pub cluster: Option<usize>,
    pub medoid: bool,
}

/// Feature values indexed by feature id, case and sample label.
struct FeatureTable {
    values: BTreeMap<String, BTreeMap<Case, BTreeMap<String, FeatureValue>>>,
}

impl FeatureTable {
    fn new(records: Vec<FeatureRecord>) -> Self {
        let mut values: BTreeMap<String, BTreeMap<Case, BTreeMap<String, FeatureValue>>> = BTreeMap::new();
        for r in records {
            values
                .entry(r.id())
                .or_default()
                .entry((r.run_id.clone(), r.generation))
                .or_default()
                .insert(r.sample, r.value);
        }
        FeatureTable { values }
    }

    fn all(&self, id: &str) -> Vec<FeatureValue> {
        self.values[id].values().flat_map(|s| s.values().copied()).collect()
    }

    fn originals(&self, id: &str) -> Vec<FeatureValue> {
        self.values[id].values().filter_map(|s| s.get(ORIG).copied()).collect()
    }

    /// Values over the resamples of each case, or the original sample when
    /// the case has no resamples.
    fn groups(&self, id: &str) -> BTreeMap<Case, Vec<FeatureValue>> {
        self.values[id]
            .iter()
            .map(|(c, s)| {
                let r: Vec<FeatureValue> = s.iter().filter(|(k, _)| *k != ORIG).map(|(_, v)| *v).collect();
                let g = if r.is_empty() { s.values().copied().collect() } else { r };
                (c.clone(), g)
            })
            .collect()
    }

    /// `(points in the sample set, is NanOut)` for every sample of `id`, with
    /// the point count read from the `obs` feature of the same raw set.
    fn nanout_pairs(&self, id: &str) -> Vec<(usize, bool)> {
        let variant = id.rsplit_once('@').map_or("A", |(_, v)| v);
        let base = variant.trim_end_matches(":t");
        let Some(obs) = self.values.get(&format!("basic.obs@{base}")) else {
            return Vec::new();
        };
        let mut pairs = Vec::new();
        for (case, samples) in &self.values[id] {
            for (s, v) in samples {
                if let Some(n) = obs.get(case).and_then(|o| o.get(s)).and_then(|o| o.value()) {
                    pairs.push((n as usize, v.is_nanout()));
                }
            }
        }
        pairs
    }
}

/// (function, instance, seed, restart, generation rank)
type Block = (String, u64, u64, usize, usize);

/// Friedman p-value of the per-case medians across dimensions. Blocks pair
/// the same function, instance, seed, restart and generation rank.
fn dimension_test(medians: &BTreeMap<Case, f64>, metas: &BTreeMap<String, RunMeta>) -> Option<f64> {
    let mut blocks: BTreeMap<Block, BTreeMap<usize, f64>> = BTreeMap::new();
    let mut dims = BTreeSet::new();
    for ((run, g), v) in medians {
        let m = metas.get(run)?;
        let rank = m.sampled_generations.iter().position(|x| x == g)?;
        dims.insert(m.dim);
        blocks
            .entry((m.function.name().to_string(), m.instance, m.seed, m.restart, rank))
            .or_default()
            .insert(m.dim, *v);
    }
    let complete: Vec<Vec<f64>> = blocks
        .into_values()
        .filter(|b| b.len() == dims.len())
        .map(|b| b.into_values().collect())
        .collect();
    friedman_test(&complete).ok().map(|(_, p)| p)
}

fn finite_median(vals: &[FeatureValue]) -> Option<f64> {
    let v: Vec<f64> = vals.iter().filter_map(|v| v.value()).collect();
    (!v.is_empty()).then(|| stats::median(&v))
}

type FeatureAnalysis = (Vec<FeatureSummary>, BTreeMap<String, NormalizationSpec>, Vec<String>);

/// Screening, normalisation and clustering of one TSS method's features.
/// Returns the summaries, the normalisation specs and the medoid ids.
fn analyze_features(
    cfg: &ExperimentConfig,
    tss: &str,
    table: &FeatureTable,
    metas: &BTreeMap<String, RunMeta>,
) -> Result<FeatureAnalysis> {
    let mut summaries = Vec::new();
    let mut specs = BTreeMap::new();
    let mut medians: BTreeMap<String, BTreeMap<Case, f64>> = BTreeMap::new();
    let mut friedman = Vec::new();
    for id in table.values.keys() {
        let all = table.all(id);
        let rate = nan_rate(&all);
        let excluded = rate > cfg.nanout_threshold;
        let spec = fit_normalization(&table.originals(id));
        let groups = table.groups(id);
        let rob = robustness(
            &groups.values().cloned().collect::<Vec<_>>(),
            cfg.robustness_delta,
            cfg.lower_percentile,
        )
        .ok();
        if let (Some(spec), false) = (spec, excluded) {
            let med: BTreeMap<Case, f64> = groups
                .iter()
                .filter_map(|(c, g)| {
                    let n: Vec<FeatureValue> = g.iter().map(|v| normalize_value(*v, &spec)).collect();
                    finite_median(&n).map(|m| (c.clone(), m))
                })
                .collect();
            if let Some(p) = dimension_test(&med, metas) {
                friedman.push((summaries.len(), p));
            }
            medians.insert(id.clone(), med);
        }
        if let Some(spec) = spec {
            specs.insert(id.clone(), spec);
        }
        summaries.push(FeatureSummary {
            feature: id.clone(),
            nan_rate: rate,
            excluded_nanout: excluded,
            n_nanout: estimate_n_nanout(&table.nanout_pairs(id)),
            friedman_p: None,
            friedman_p_holm: None,
            dim_dependent: false,
            robustness: rob,
            retained: !excluded && spec.is_some() && rob.is_some_and(|r| r >= cfg.robustness_threshold),
            cluster: None,
            medoid: false,
        });
    }
    let p: Vec<f64> = friedman.iter().map(|(_, p)| *p).collect();
    let (adj, rej) = holm_correction(&p, cfg.alpha);
    for (((i, p), a), r) in friedman.iter().zip(adj).zip(rej) {
        summaries[*i].friedman_p = Some(*p);
        summaries[*i].friedman_p_holm = Some(a);
        summaries[*i].dim_dependent = r;
    }

    // similarity of the retained features over the cases where all of them
    // have a median
    let retained: Vec<usize> = (0..summaries.len()).filter(|i| summaries[*i].retained).collect();
    let mut medoid_ids = Vec::new();
    if !retained.is_empty() {
        let cols: Vec<&BTreeMap<Case, f64>> = retained.iter().map(|i| &medians[&summaries[*i].feature]).collect();
        let cases: Vec<&Case> = cols[0]
            .keys()
            .filter(|c| cols.iter().all(|m| m.contains_key(*c)))
            .collect();
        let columns: Vec<Vec<f64>> = cols.iter().map(|m| cases.iter().map(|c| m[*c]).collect()).collect();
        let sim = similarity_matrix(&columns);
        let k = hierarchical_cluster(&sim, cfg.cluster_threshold).n_clusters;
        let mut rng = seeding::rng(cfg.seed, &[seeding::label("medoids"), seeding::label(tss)]);
        let km = k_medoids(&sim, k, &mut rng, cfg.medoid_restarts.max(1))?;
        for (pos, &i) in retained.iter().enumerate() {
            summaries[i].cluster = Some(km.assignments[pos]);
            summaries[i].medoid = km.medoids.contains(&pos);
        }
        medoid_ids = km
            .medoids
            .iter()
            .map(|&m| summaries[retained[m]].feature.clone())
            .collect();
    }
    Ok((summaries, specs, medoid_ids))
}

fn write_feature_outputs(
    dir: &Path,
    tss: &str,
    summaries: &[FeatureSummary],
    specs: &BTreeMap<String, NormalizationSpec>,
) -> Result<()> {
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.feature.clone(),
                fmt_f64(s.nan_rate),
                s.excluded_nanout.to_string(),
                s.n_nanout.map_or_else(|| "not_reached".to_string(), |n| n.to_string()),
                opt(s.friedman_p),
                opt(s.friedman_p_holm),
                s.dim_dependent.to_string(),
                opt(s.robustness),
                s.retained.to_string(),
                s.cluster.map(|c| c.to_string()).unwrap_or_default(),
                s.medoid.to_string(),
            ]
        })
        .collect();
    write_csv(
        &dir.join(format!("feature_summary_{tss}.csv")),
        &[
            "feature",
            "nan_rate",
            "excluded_nanout",
            "n_nanout",
            "friedman_p",
            "friedman_p_holm",
            "dim_dependent",
            "robustness",
            "retained",
            "cluster",
            "medoid",
        ],
        &rows,
    )?;
    let path = dir.join(format!("normalization_{tss}.json"));
    let text = serde_json::to_vec_pretty(specs).map_err(|e| Error::json(&path, e))?;
    write_atomic(&path, &text)
}

/// Errors of every `(TSS, model)` combination per case.
struct ErrorTable {
    combos: Vec<(String, String)>,
    cases: Vec<Case>,
    /// `values[measure][combo][case]`
    values: Vec<Vec<Vec<Option<f64>>>>,
}

impl ErrorTable {
    fn new(rows: &[ErrorRow]) -> Self {
        let combos: Vec<(String, String)> = rows
            .iter()
            .map(|r| (r.tss.clone(), r.model.clone()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let cases: Vec<Case> = rows
            .iter()
            .map(|r| (r.run_id.clone(), r.generation))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let ci: BTreeMap<&(String, String), usize> = combos.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let ki: BTreeMap<&Case, usize> = cases.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut values = vec![vec![vec![None; cases.len()]; combos.len()]; MEASURES.len()];
        for r in rows {
            let c = ci[&(r.tss.clone(), r.model.clone())];
            let k = ki[&(r.run_id.clone(), r.generation)];
            let ok = |v: Option<f64>| v.filter(|x| !x.is_nan());
            values[0][c][k] = ok(r.mse);
            values[1][c][k] = ok(r.rde);
        }
        ErrorTable { combos, cases, values }
    }

    fn label(&self, c: usize) -> String {
        format!("{}/{}", self.combos[c].0, self.combos[c].1)
    }

    /// Combination with the lowest error per case; ties go to the first.
    fn best(&self, measure: usize) -> Vec<Option<usize>> {
        (0..self.cases.len())
            .map(|k| {
                let mut best: Option<(usize, f64)> = None;
                for c in 0..self.combos.len() {
                    if let Some(v) = self.values[measure][c][k] {
                        if best.is_none_or(|(_, b)| v < b) {
                            best = Some((c, v));
                        }
                    }
                }
                best.map(|(c, _)| c)
            })
            .collect()
    }
}

/// KS tests of each medoid's normalised original-sample values on all cases
/// against the cases where a combination of this TSS is best.
fn ks_tables(
    cfg: &ExperimentConfig,
    dir: &Path,
    tss: &str,
    table: &FeatureTable,
    specs: &BTreeMap<String, NormalizationSpec>,
    medoids: &[String],
    errors: &ErrorTable,
) -> Result<()> {
    for (mi, measure) in MEASURES.iter().enumerate() {
        let best = errors.best(mi);
        let mut rows = Vec::new();
        let mut tests = Vec::new();
        for f in medoids {
            let spec = &specs[f];
            let value = |k: usize| {
                table.values[f]
                    .get(&errors.cases[k])
                    .and_then(|s| s.get(ORIG))
                    .and_then(|v| normalize_value(*v, spec).value())
            };
            let all: Vec<f64> = (0..errors.cases.len()).filter_map(value).collect();
            for c in (0..errors.combos.len()).filter(|c| errors.combos[*c].0 == tss) {
                let sub: Vec<f64> = (0..errors.cases.len())
                    .filter(|k| best[*k] == Some(c))
                    .filter_map(value)
                    .collect();
                let res = ks_two_sample(&all, &sub).ok();
                if let Some((_, p)) = res {
                    tests.push((rows.len(), p));
                }
                rows.push(vec![
                    f.clone(),
                    errors.combos[c].0.clone(),
                    errors.combos[c].1.clone(),
                    all.len().to_string(),
                    sub.len().to_string(),
                    opt(res.map(|r| r.0)),
                    opt(res.map(|r| r.1)),
                    String::new(),
                    String::new(),
                ]);
            }
        }
        let p: Vec<f64> = tests.iter().map(|t| t.1).collect();
        let (adj, rej) = holm_correction(&p, cfg.alpha);
        for (((i, _), a), r) in tests.iter().zip(adj).zip(rej) {
            rows[*i][7] = fmt_f64(a);
            rows[*i][8] = r.to_string();
        }
        write_csv(
            &dir.join(format!("ks_{tss}_{measure}.csv")),
            &[
                "feature", "tss", "model", "n_all", "n_best", "d", "p", "p_holm", "reject",
            ],
            &rows,
        )?;
    }
    Ok(())
}

/// Win matrices, pairwise Wilcoxon tests and the Friedman test over all
/// combinations.
fn comparison_tables(cfg: &ExperimentConfig, dir: &Path, errors: &ErrorTable) -> Result<()> {
    let n = errors.combos.len();
    let labels: Vec<String> = (0..n).map(|c| errors.label(c)).collect();
    let mut friedman_rows = Vec::new();
    for (mi, measure) in MEASURES.iter().enumerate() {
        let e = &errors.values[mi];
        let wins = pairwise_wins(e);
        let mut header = vec!["combination"];
        header.extend(labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                std::iter::once(labels[i].clone())
                    .chain(wins[i].iter().map(|v| v.to_string()))
                    .collect()
            })
            .collect();
        write_csv(&dir.join(format!("wins_{measure}.csv")), &header, &rows)?;

        let mut rows = Vec::new();
        let mut tests = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let diffs: Vec<f64> = e[i]
                    .iter()
                    .zip(&e[j])
                    .filter_map(|(a, b)| Some((*a)? - (*b)?))
                    .collect();
                let res = wilcoxon_signed_rank(&diffs).ok();
                if let Some((_, p)) = res {
                    tests.push((rows.len(), p));
                }
                rows.push(vec![
                    labels[i].clone(),
                    labels[j].clone(),
                    diffs.len().to_string(),
                    opt(res.map(|r| r.0)),
                    opt(res.map(|r| r.1)),
                    String::new(),
                    String::new(),
                ]);
            }
        }
        let p: Vec<f64> = tests.iter().map(|t| t.1).collect();
        let (adj, rej) = holm_correction(&p, cfg.alpha);
        for (((i, _), a), r) in tests.iter().zip(adj).zip(rej) {
            rows[*i][5] = fmt_f64(a);
            rows[*i][6] = r.to_string();
        }
        write_csv(
            &dir.join(format!("wilcoxon_{measure}.csv")),
            &["a", "b", "n", "w", "p", "p_holm", "reject"],
            &rows,
        )?;

        let blocks: Vec<Vec<f64>> = (0..errors.cases.len())
            .filter_map(|k| (0..n).map(|c| e[c][k]).collect::<Option<Vec<f64>>>())
            .collect();
        let res = friedman_test(&blocks).ok();
        friedman_rows.push(vec![
            measure.to_string(),
            blocks.len().to_string(),
            n.to_string(),
            opt(res.map(|r| r.0)),
            opt(res.map(|r| r.1)),
        ]);
    }
    write_csv(
        &dir.join("friedman_errors.csv"),
        &["measure", "n_blocks", "n_combinations", "statistic", "p"],
        &friedman_rows,
    )
}

/// Runs the whole analysis into `analysis/`. The error-based parts use
/// `split/test.csv` when present and `errors.csv` otherwise.
pub fn cmd_analyze(cfg: &ExperimentConfig, out: &Path) -> Result<StageReport> {
    cfg.validate()?;
    let metas: BTreeMap<String, RunMeta> = RunMeta::load_all(out)?
        .into_iter()
        .map(|m| (m.run_id.clone(), m))
        .collect();
    let test_path = out.join("split").join("test.csv");
    let error_path = if test_path.is_file() {
        test_path
    } else {
        out.join("errors.csv")
    };
    let rows = read_error_table(&error_path)?;
    if let Some(r) = rows.iter().find(|r| !metas.contains_key(&r.run_id)) {
        return Err(Error::format(
            &error_path,
            format!("run `{}` is not in the store", r.run_id),
        ));
    }
    let errors = ErrorTable::new(&rows);
    let dir = out.join("analysis");
    let mut report = StageReport::new("analyze");
    for spec in &cfg.tss {
        let tss = spec.label();
        report.tasks += 1;
        let res = (|| -> Result<()> {
            let records = read_features(out, &tss)?;
            if let Some(r) = records.iter().find(|r| !metas.contains_key(&r.run_id)) {
                return Err(Error::InvalidArgument(format!(
                    "feature run `{}` is not in the store",
                    r.run_id
                )));
            }
            let table = FeatureTable::new(records);
            let (summaries, specs, medoids) = analyze_features(cfg, &tss, &table, &metas)?;
            write_feature_outputs(&dir, &tss, &summaries, &specs)?;
            ks_tables(cfg, &dir, &tss, &table, &specs, &medoids, &errors)
        })();
        if let Err(e) = res {
            report.failures.push(Failure {
                item: tss,
                error: e.to_string(),
            });
        }
    }
    report.tasks += 1;
    if let Err(e) = comparison_tables(cfg, &dir, &errors) {
        report.failures.push(Failure {
            item: "comparisons".into(),
            error: e.to_string(),
        });
    }
    report.write_manifest(out)?;
    Ok(report)
}
