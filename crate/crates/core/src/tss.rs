//! Training-set selection: which archive points a surrogate is trained on.
//!
//! Distances are measured in the `σ²C` metric of the current CMA-ES state.
//! Ties are broken by the lower archive index and every selection keeps the
//! original archive order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Point, SampleSet};
use crate::state::DistributionState;
use crate::transform::Metric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TssMethod {
    Full,
    Knn,
    Nearest,
}

impl TssMethod {
    pub fn name(self) -> &'static str {
        match self {
            TssMethod::Full => "full",
            TssMethod::Knn => "knn",
            TssMethod::Nearest => "nearest",
        }
    }
}

/// `{method, k?, N_max?, r_max?}`; absent fields take dimension-dependent
/// defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TssSpec {
    pub method: TssMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, rename = "N_max", skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
}

impl TssSpec {
    pub fn full() -> Self {
        TssSpec {
            method: TssMethod::Full,
            k: None,
            n_max: None,
            r_max: None,
        }
    }

    pub fn knn(k: usize) -> Self {
        TssSpec {
            method: TssMethod::Knn,
            k: Some(k),
            n_max: None,
            r_max: None,
        }
    }

    pub fn nearest(n_max: usize, r_max: f64) -> Self {
        TssSpec {
            method: TssMethod::Nearest,
            k: None,
            n_max: Some(n_max),
            r_max: Some(r_max),
        }
    }

    /// All sizes at their dimension-dependent defaults.
    pub fn method(method: TssMethod) -> Self {
        TssSpec {
            method,
            k: None,
            n_max: None,
            r_max: None,
        }
    }

    /// Method name plus any explicit sizes, e.g. `knn` or `nearest_N40_r3`.
    pub fn label(&self) -> String {
        let mut s = self.method.name().to_string();
        if let Some(k) = self.k {
            s += &format!("_k{k}");
        }
        if let Some(n) = self.n_max {
            s += &format!("_N{n}");
        }
        if let Some(r) = self.r_max {
            s += &format!("_r{r}");
        }
        s
    }

    /// Neighbour count for knn; defaults to the full-quadratic coefficient count.
    pub fn k_or_default(&self, d: usize) -> usize {
        self.k.unwrap_or(d * (d + 3) / 2 + 1)
    }

    /// Defaults to `20·d`.
    pub fn n_max_or_default(&self, d: usize) -> usize {
        self.n_max.unwrap_or(20 * d)
    }

    /// Defaults to `4·√d`.
    pub fn r_max_or_default(&self, d: usize) -> f64 {
        self.r_max.unwrap_or(4.0 * (d as f64).sqrt())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == Some(0) || self.n_max == Some(0) {
            return Err(Error::Config("TSS sizes must be positive".into()));
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0) {
                return Err(Error::Config(format!("r_max must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// `T = A`.
pub fn tss_full(archive: &SampleSet) -> SampleSet {
    archive.clone()
}

/// Union of the `k` nearest archive points of every query.
pub fn tss_knn(archive: &SampleSet, queries: &[Point], k: usize, state: &DistributionState) -> Result<SampleSet> {
    let idx = knn_indices(archive, queries, k, state)?;
    Ok(archive.subset(&idx))
}

pub fn knn_indices(archive: &SampleSet, queries: &[Point], k: usize, state: &DistributionState) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    if archive.is_empty() {
        return Err(Error::EmptyInput);
    }
    let metric = Metric::from_state(state)?;
    let all: Vec<usize> = (0..archive.len()).collect();
    let orders = neighbour_orders(archive, &all, queries, &metric)?;
    Ok(union_of_prefixes(&orders, k, archive.len()))
}

/// Restricts the archive to points within `r_max` of the mean, then returns
/// the union of the `k`-nearest neighbours of the queries for the largest `k`
/// whose union has at most `n_max` points (`k = 1` if even that is larger).
pub fn tss_nearest(
    archive: &SampleSet,
    queries: &[Point],
    n_max: usize,
    r_max: f64,
    state: &DistributionState,
) -> Result<SampleSet> {
    let idx = nearest_indices(archive, queries, n_max, r_max, state)?;
    Ok(archive.subset(&idx))
}

pub fn nearest_indices(
    archive: &SampleSet,
    queries: &[Point],
    n_max: usize,
    r_max: f64,
    state: &DistributionState,
) -> Result<Vec<usize>> {
    if n_max == 0 || !(r_max > 0.0) {
        return Err(Error::InvalidArgument("need N_max ≥ 1 and r_max > 0".into()));
    }
    let metric = Metric::from_state(state)?;
    let mut within = Vec::new();
    for (i, x) in archive.points().iter().enumerate() {
        if metric.distance(x, &state.mean)? <= r_max {
            within.push(i);
        }
    }
    if within.is_empty() {
        return Err(Error::EmptySelection);
    }
    let orders = neighbour_orders(archive, &within, queries, &metric)?;
    let mut best = union_of_prefixes(&orders, 1, archive.len());
    for k in 2..=within.len() {
        let u = union_of_prefixes(&orders, k, archive.len());
        if u.len() > n_max {
            break;
        }
        best = u;
    }
    Ok(best)
}

/// Selection by spec. Queries are the points the model will be asked about.
pub fn select_indices(
    spec: &TssSpec,
    archive: &SampleSet,
    queries: &[Point],
    state: &DistributionState,
) -> Result<Vec<usize>> {
    let d = archive.dim();
    match spec.method {
        TssMethod::Full => Ok((0..archive.len()).collect()),
        TssMethod::Knn => knn_indices(archive, queries, spec.k_or_default(d), state),
        TssMethod::Nearest => nearest_indices(
            archive,
            queries,
            spec.n_max_or_default(d),
            spec.r_max_or_default(d),
            state,
        ),
    }
}

pub fn select(spec: &TssSpec, archive: &SampleSet, queries: &[Point], state: &DistributionState) -> Result<SampleSet> {
    Ok(archive.subset(&select_indices(spec, archive, queries, state)?))
}

/// For each query, `candidates` sorted by distance (ties by index).
fn neighbour_orders(
    archive: &SampleSet,
    candidates: &[usize],
    queries: &[Point],
    metric: &Metric,
) -> Result<Vec<Vec<usize>>> {
    let d = archive.dim();
    let emb: Vec<Point> = candidates.iter().map(|&i| metric.embed(&archive.points()[i])).collect();
    queries
        .iter()
        .map(|q| {
            Error::check_dim(d, q.len())?;
            let eq = metric.embed(q);
            let mut order: Vec<(f64, usize)> = emb
                .iter()
                .zip(candidates)
                .map(|(e, &i)| ((e - &eq).norm_squared(), i))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            Ok(order.into_iter().map(|(_, i)| i).collect())
        })
        .collect()
}

fn union_of_prefixes(orders: &[Vec<usize>], k: usize, n: usize) -> Vec<usize> {
    let mut taken = vec![false; n];
    for o in orders {
        for &i in o.iter().take(k) {
            taken[i] = true;
        }
    }
    (0..n).filter(|&i| taken[i]).collect()
}
