//! Average-linkage agglomeration and k-medoids on `1 − similarity`.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::Rng;

/// Clusters after cutting the dendrogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalResult {
    pub n_clusters: usize,
    /// Cluster id per item, numbered by first appearance.
    pub assignments: Vec<usize>,
    /// Merged clusters (by their smallest member) and the average similarity.
    pub merges: Vec<(usize, usize, f64)>,
}

fn renumber(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Repeatedly merges the pair of clusters with the highest average
/// similarity while it is at least `threshold`. Ties go to the pair of
/// lowest indices.
pub fn hierarchical_cluster(sim: &[Vec<f64>], threshold: f64) -> HierarchicalResult {
    let n = sim.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut merges = Vec::new();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut s = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        s += sim[i][j];
                    }
                }
                s /= (clusters[a].len() * clusters[b].len()) as f64;
                if best.is_none_or(|x| s > x.2) {
                    best = Some((a, b, s));
                }
            }
        }
        match best {
            Some((a, b, s)) if s >= threshold => {
                merges.push((clusters[a][0], clusters[b][0], s));
                let moved = clusters.remove(b);
                clusters[a].extend(moved);
                clusters[a].sort_unstable();
            }
            _ => break,
        }
    }
    let mut labels = vec![0; n];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            labels[i] = c;
        }
    }
    HierarchicalResult {
        n_clusters: clusters.len(),
        assignments: renumber(&labels),
        merges,
    }
}

/// Partition around medoids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    /// Medoid item indices, sorted.
    pub medoids: Vec<usize>,
    /// Position in `medoids` for every item.
    pub assignments: Vec<usize>,
    /// Sum of distances to the assigned medoid.
    pub objective: f64,
    /// Objective after initialisation and after each accepted swap of the
    /// winning restart.
    pub trace: Vec<f64>,
}

fn assign(dist: &[Vec<f64>], medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let labels = (0..dist.len())
        .map(|i| {
            if let Some(p) = medoids.iter().position(|m| *m == i) {
                return p;
            }
            let mut best = 0;
            for (p, &m) in medoids.iter().enumerate() {
                if dist[i][m] < dist[i][medoids[best]] {
                    best = p;
                }
            }
            total += dist[i][medoids[best]];
            best
        })
        .collect();
    (labels, total)
}

/// PAM swap search on `1 − sim`, best of `n_restarts` random initialisations.
/// Each pass applies the single swap with the largest improvement.
pub fn k_medoids(sim: &[Vec<f64>], k: usize, rng: &mut Rng, n_restarts: usize) -> Result<ClusterResult> {
    let n = sim.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} for {n} items")));
    }
    let dist: Vec<Vec<f64>> = sim.iter().map(|r| r.iter().map(|s| 1.0 - s).collect()).collect();
    let mut best: Option<ClusterResult> = None;
    for _ in 0..n_restarts.max(1) {
        let mut medoids: Vec<usize> = sample(rng, n, k).into_vec();
        medoids.sort_unstable();
        let (_, mut obj) = assign(&dist, &medoids);
        let mut trace = vec![obj];
        loop {
            let mut swap: Option<(usize, usize, f64)> = None;
            for p in 0..k {
                for o in 0..n {
                    if medoids.contains(&o) {
                        continue;
                    }
                    let mut cand = medoids.clone();
                    cand[p] = o;
                    let (_, c) = assign(&dist, &cand);
                    if c < obj - 1e-12 && swap.is_none_or(|s| c < s.2) {
                        swap = Some((p, o, c));
                    }
                }
            }
            let Some((p, o, c)) = swap else { break };
            medoids[p] = o;
            medoids.sort_unstable();
            obj = c;
            trace.push(obj);
        }
        if best.as_ref().is_none_or(|b| obj < b.objective) {
            let (assignments, objective) = assign(&dist, &medoids);
            best = Some(ClusterResult {
                k,
                medoids,
                assignments,
                objective,
                trace,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}
