//! Seeded validation/test split of the error table along one axis.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;

use super::config::{ExperimentConfig, SplitAxis, SplitSpec};
use super::evaluate::{read_error_table, write_error_table, ErrorRow};
use super::StageReport;
use crate::error::{Error, Result};
use crate::seeding;

fn axis_value(row: &ErrorRow, axis: SplitAxis) -> String {
    match axis {
        SplitAxis::Dim => row.dim.to_string(),
        SplitAxis::Function => row.function.clone(),
        SplitAxis::Instance => row.instance.to_string(),
        SplitAxis::Seed => row.seed.to_string(),
        SplitAxis::Model => row.model.clone(),
    }
}

/// Stratum key: the `(dim, function, instance)` coordinates minus the axis.
fn stratum(row: &ErrorRow, axis: SplitAxis) -> String {
    let mut parts = Vec::new();
    if axis != SplitAxis::Dim {
        parts.push(format!("d{}", row.dim));
    }
    if axis != SplitAxis::Function {
        parts.push(row.function.clone());
    }
    if axis != SplitAxis::Instance {
        parts.push(format!("i{}", row.instance));
    }
    parts.join("/")
}

/// Splits rows into `(validation, test)`. Inside every stratum the distinct
/// axis levels are shuffled with a stratum-seeded stream and the first
/// `validation_levels` go to validation. Row order is preserved.
pub fn split_rows(rows: &[ErrorRow], spec: &SplitSpec) -> Result<(Vec<ErrorRow>, Vec<ErrorRow>)> {
    let mut levels: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for r in rows {
        levels
            .entry(stratum(r, spec.axis))
            .or_default()
            .push(axis_value(r, spec.axis));
    }
    let mut chosen: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (key, mut lv) in levels {
        lv.sort();
        lv.dedup();
        if lv.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "split axis {:?} has {} level(s) in stratum `{key}`, need at least 2",
                spec.axis,
                lv.len()
            )));
        }
        let mut rng = seeding::rng(spec.seed, &[seeding::label("split"), seeding::label(&key)]);
        lv.shuffle(&mut rng);
        lv.truncate(spec.validation_levels.min(lv.len() - 1));
        chosen.insert(key, lv);
    }
    let (mut val, mut test) = (Vec::new(), Vec::new());
    for r in rows {
        if chosen[&stratum(r, spec.axis)].contains(&axis_value(r, spec.axis)) {
            val.push(r.clone());
        } else {
            test.push(r.clone());
        }
    }
    Ok((val, test))
}

/// Writes `split/validation.csv` and `split/test.csv` from `errors.csv`.
pub fn cmd_split(cfg: &ExperimentConfig, out: &Path) -> Result<StageReport> {
    cfg.validate()?;
    let rows = read_error_table(&out.join("errors.csv"))?;
    let (val, test) = split_rows(&rows, &cfg.split)?;
    let dir = out.join("split");
    write_error_table(&dir.join("validation.csv"), &val)?;
    write_error_table(&dir.join("test.csv"), &test)?;
    let mut report = StageReport::new("split");
    report.tasks = 1;
    report.write_manifest(out)?;
    Ok(report)
}
