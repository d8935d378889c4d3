//! File-based experiment pipeline: generate runs and resamples, compute
//! features, evaluate surrogate models, split the error table and analyse.
//!
//! Output layout under the output directory:
//!
//! ```text
//! store/<run_id>/{meta.json, states.jsonl, archive.csv, resamples/g<gen>_<i>.csv}
//! features/<tss>/<run_id>.csv
//! errors.csv
//! split/{validation,test}.csv
//! analysis/...
//! <stage>_failures.json      (only when some task failed)
//! ```

pub mod analyze;
pub mod config;
pub mod evaluate;
pub mod extract;
pub mod generate;
pub mod split;
pub mod store;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analyze::cmd_analyze;
pub use config::{ExperimentConfig, SplitAxis, SplitSpec};
pub use evaluate::cmd_evaluate;
pub use extract::cmd_features;
pub use generate::cmd_generate;
pub use split::cmd_split;
pub use store::{RunMeta, StoredRun};

/// Environment variable capping the worker threads of every stage.
pub const THREADS_ENV: &str = "ELAS_THREADS";

/// A task that failed without aborting its stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

/// Outcome of one stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub tasks: usize,
    pub failures: Vec<Failure>,
}

impl StageReport {
    pub fn new(stage: &str) -> Self {
        StageReport {
            stage: stage.to_string(),
            ..Default::default()
        }
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// Writes `<stage>_failures.json` when anything failed and removes a
    /// stale manifest otherwise.
    pub fn write_manifest(&self, out: &Path) -> Result<()> {
        let path = out.join(format!("{}_failures.json", self.stage));
        if self.failures.is_empty() {
            if path.exists() {
                std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
            return Ok(());
        }
        let text = serde_json::to_vec_pretty(self).map_err(|e| Error::json(&path, e))?;
        store::write_atomic(&path, &text)
    }
}

/// Runs `f` on a pool sized by `ELAS_THREADS` (all cores when unset).
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
        }
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}
