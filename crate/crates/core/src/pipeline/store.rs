//! The write-once experiment store: atomic writes and run directories.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchfns::BaseFunction;
use crate::cmaes::Termination;
use crate::error::{Error, Result};
use crate::sample::{Point, SampleSet};
use crate::state::DistributionState;

/// Writes `bytes` to `path` via a sibling temporary file and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Run coordinates and bookkeeping stored in `meta.json`. Written last, so its
/// presence marks a complete run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub function: BaseFunction,
    pub dim: usize,
    pub instance: u64,
    pub seed: u64,
    pub restart: usize,
    pub lambda: usize,
    pub mu: usize,
    pub termination: Termination,
    pub cov_repairs: usize,
    pub best: f64,
    pub evaluations: usize,
    /// `offsets[g]`: archive length before generation `g`.
    pub offsets: Vec<usize>,
    /// Generations selected for features and evaluation.
    pub sampled_generations: Vec<usize>,
    pub resamples: usize,
}

pub fn run_id(function: BaseFunction, dim: usize, instance: u64, seed: u64, restart: usize) -> String {
    format!("{}_d{dim}_i{instance}_s{seed}_r{restart}", function.name())
}

pub fn run_dir(out: &Path, run_id: &str) -> PathBuf {
    out.join("store").join(run_id)
}

pub fn resample_path(dir: &Path, g: usize, i: usize) -> PathBuf {
    dir.join("resamples").join(format!("g{g}_{i}.csv"))
}

impl RunMeta {
    pub fn load(dir: &Path) -> Result<RunMeta> {
        let path = dir.join("meta.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(&path, e))
    }

    /// Metadata of every complete run, sorted by id.
    pub fn load_all(out: &Path) -> Result<Vec<RunMeta>> {
        complete_runs(out)?.iter().map(|d| RunMeta::load(d)).collect()
    }
}

fn complete_runs(out: &Path) -> Result<Vec<PathBuf>> {
    let root = out.join("store");
    let entries = fs::read_dir(&root).map_err(|e| Error::io(&root, e))?;
    let mut dirs = Vec::new();
    for e in entries {
        let e = e.map_err(|e| Error::io(&root, e))?;
        if e.path().join("meta.json").is_file() {
            dirs.push(e.path());
        }
    }
    dirs.sort();
    Ok(dirs)
}

/// A run read back from the store.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub dir: PathBuf,
    pub meta: RunMeta,
    pub states: Vec<DistributionState>,
    pub archive: SampleSet,
}

impl StoredRun {
    pub fn load(dir: &Path) -> Result<StoredRun> {
        let meta = RunMeta::load(dir)?;
        let sp = dir.join("states.jsonl");
        let text = fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
        let states = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::json(&sp, e)))
            .collect::<Result<Vec<DistributionState>>>()?;
        let archive = SampleSet::load(&dir.join("archive.csv"))?;
        if states.len() != meta.offsets.len() {
            return Err(Error::format(&sp, "state count does not match the generation offsets"));
        }
        Ok(StoredRun {
            dir: dir.to_path_buf(),
            meta,
            states,
            archive,
        })
    }

    /// All complete runs under `out/store`, sorted by id.
    pub fn load_all(out: &Path) -> Result<Vec<StoredRun>> {
        complete_runs(out)?.iter().map(|d| StoredRun::load(d)).collect()
    }

    pub fn archive_before(&self, g: usize) -> SampleSet {
        let end = self.meta.offsets[g.min(self.meta.offsets.len() - 1)];
        self.archive.subset(&(0..end).collect::<Vec<_>>())
    }

    /// The evaluated population of generation `g`.
    pub fn population(&self, g: usize) -> Option<SampleSet> {
        let start = *self.meta.offsets.get(g)?;
        let end = *self.meta.offsets.get(g + 1)?;
        Some(self.archive.subset(&(start..end).collect::<Vec<_>>()))
    }

    /// Resample `i` of generation `g`: evaluated archive and unevaluated
    /// population.
    pub fn resample(&self, g: usize, i: usize) -> Result<(SampleSet, Vec<Point>)> {
        let set = SampleSet::load(&resample_path(&self.dir, g, i))?;
        let mut archive = SampleSet::empty(set.dim());
        let mut population = Vec::new();
        for (p, y) in set.iter() {
            match y {
                Some(_) => archive.push(p.clone(), y)?,
                None => population.push(p.clone()),
            }
        }
        Ok((archive, population))
    }
}
