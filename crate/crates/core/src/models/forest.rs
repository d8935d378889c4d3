//! Gradient-boosted regression trees with squared loss.
//!
//! Trees are grown greedily with the regularised split gain
//! `½[r(L) + r(R) − r(L∪R)] − γ`, `r(S) = (Σg)² / (Σh + α)`, and leaves get
//! the weight `−Σg / (Σh + α)`. Split search is pluggable through
//! [`SplitStrategy`]; the axis-aligned CART search is provided.
//!
//! Training is plain boosting: tree `t` fits the gradients of the loss at the
//! running sum of trees `1..t−1`. With `average` set, the trained forest
//! predicts that sum divided by the number of trees.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{Point, SampleSet};
use crate::seeding::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSettings {
    pub n_trees: usize,
    /// Fraction of training rows drawn (without replacement) for each tree.
    pub row_fraction: f64,
    /// Fraction of input dimensions offered to each tree.
    pub feature_fraction: f64,
    pub max_depth: usize,
    pub gamma: f64,
    pub alpha: f64,
    /// Predict the boosted sum divided by the number of trees.
    pub average: bool,
    pub seed: u64,
}

impl Default for ForestSettings {
    fn default() -> Self {
        ForestSettings {
            n_trees: 64,
            row_fraction: 1.0,
            feature_fraction: 1.0,
            max_depth: 8,
            gamma: 0.0,
            alpha: 0.0,
            average: true,
            seed: 0,
        }
    }
}

/// Named settings `[n_tree, N_t, n_D]` per split method, TSS and tuning
/// measure. Every method is served by the axis-aligned search; the names of
/// the oblique methods only select their tuned sizes.
pub const FOREST_PRESETS: [(&str, usize, f64, f64); 20] = [
    ("cart_full_mse", 1024, 1.0, 0.75),
    ("scrt_full_mse", 256, 0.25, 0.5),
    ("oc1_full_mse", 128, 1.0, 1.0),
    ("pair_full_mse", 128, 1.0, 0.75),
    ("supp_full_mse", 128, 1.0, 0.25),
    ("cart_full_rde", 64, 0.75, 1.0),
    ("scrt_full_rde", 256, 0.75, 1.0),
    ("oc1_full_rde", 128, 1.0, 1.0),
    ("pair_full_rde", 1024, 0.75, 1.0),
    ("supp_full_rde", 64, 0.75, 1.0),
    ("cart_nearest_mse", 256, 1.0, 0.75),
    ("scrt_nearest_mse", 512, 0.5, 1.0),
    ("oc1_nearest_mse", 128, 1.0, 1.0),
    ("pair_nearest_mse", 128, 1.0, 0.75),
    ("supp_nearest_mse", 1024, 0.25, 1.0),
    ("cart_nearest_rde", 1024, 0.75, 1.0),
    ("scrt_nearest_rde", 256, 0.75, 1.0),
    ("oc1_nearest_rde", 128, 1.0, 1.0),
    ("pair_nearest_rde", 1024, 0.75, 1.0),
    ("supp_nearest_rde", 64, 0.75, 1.0),
];

impl ForestSettings {
    pub fn preset(name: &str) -> Result<ForestSettings> {
        let (_, n, rows, feats) = FOREST_PRESETS
            .iter()
            .find(|p| p.0 == name)
            .ok_or_else(|| Error::Config(format!("unknown forest preset `{name}`")))?;
        Ok(ForestSettings {
            n_trees: *n,
            row_fraction: *rows,
            feature_fraction: *feats,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let frac_ok = |f: f64| f > 0.0 && f <= 1.0;
        if self.n_trees == 0 || !frac_ok(self.row_fraction) || !frac_ok(self.feature_fraction) {
            return Err(Error::Config("forest sizes must be positive fractions/counts".into()));
        }
        if !(self.gamma >= 0.0) || !(self.alpha >= 0.0) {
            return Err(Error::Config("forest penalties must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A node test. `goes_left` decides the branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[non_exhaustive]
pub enum Split {
    /// `x[feature] ≤ threshold`.
    Axis { feature: usize, threshold: f64 },
}

impl Split {
    pub fn goes_left(&self, x: &Point) -> bool {
        match self {
            Split::Axis { feature, threshold } => x[*feature] <= *threshold,
        }
    }
}

/// Gradient statistics of the rows reaching a node.
pub struct NodeData<'a> {
    pub xs: &'a [Point],
    pub rows: &'a [usize],
    pub features: &'a [usize],
    pub g: &'a [f64],
    pub h: &'a [f64],
}

/// Finds the best split of a node, returning it with its gain (already net
/// of `γ`). Only splits with positive gain are used.
pub trait SplitStrategy: Send + Sync {
    fn best_split(&self, node: &NodeData<'_>, alpha: f64, gamma: f64) -> Option<(Split, f64)>;
}

fn score(g: f64, h: f64, alpha: f64) -> f64 {
    let den = h + alpha;
    if den > 0.0 {
        g * g / den
    } else {
        0.0
    }
}

/// Exact greedy search over axis-aligned thresholds at midpoints between
/// consecutive distinct values.
#[derive(Debug, Clone, Copy, Default)]
pub struct AxisAligned;

impl SplitStrategy for AxisAligned {
    fn best_split(&self, node: &NodeData<'_>, alpha: f64, gamma: f64) -> Option<(Split, f64)> {
        let g_tot: f64 = node.rows.iter().map(|&i| node.g[i]).sum();
        let h_tot: f64 = node.rows.iter().map(|&i| node.h[i]).sum();
        let parent = score(g_tot, h_tot, alpha);
        let mut best: Option<(Split, f64)> = None;
        let mut order = node.rows.to_vec();
        for &f in node.features {
            order.sort_by(|&a, &b| node.xs[a][f].total_cmp(&node.xs[b][f]).then(a.cmp(&b)));
            let (mut gl, mut hl) = (0.0, 0.0);
            for w in 0..order.len().saturating_sub(1) {
                let i = order[w];
                gl += node.g[i];
                hl += node.h[i];
                let lo = node.xs[i][f];
                let hi = node.xs[order[w + 1]][f];
                if lo == hi {
                    continue;
                }
                let gain = 0.5 * (score(gl, hl, alpha) + score(g_tot - gl, h_tot - hl, alpha) - parent) - gamma;
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.1) {
                    let threshold = lo + (hi - lo) / 2.0;
                    best = Some((Split::Axis { feature: f, threshold }, gain));
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(f64),
    Internal {
        split: Split,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: Node,
}

impl Tree {
    pub fn predict(&self, x: &Point) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(w) => return *w,
                Node::Internal { split, left, right } => {
                    node = if split.goes_left(x) { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Internal { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 1,
                Node::Internal { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub average: bool,
    pub dim: usize,
}

impl ForestModel {
    pub fn predict(&self, x: &Point) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        if self.average && !self.trees.is_empty() {
            s / self.trees.len() as f64
        } else {
            s
        }
    }
}

pub fn forest_predict(model: &ForestModel, x: &Point) -> f64 {
    model.predict(x)
}

fn grow(strategy: &dyn SplitStrategy, node: &NodeData<'_>, depth: usize, s: &ForestSettings) -> Node {
    let g: f64 = node.rows.iter().map(|&i| node.g[i]).sum();
    let h: f64 = node.rows.iter().map(|&i| node.h[i]).sum();
    let den = h + s.alpha;
    let leaf = Node::Leaf(if den > 0.0 { -g / den } else { 0.0 });
    if depth >= s.max_depth || node.rows.len() < 2 {
        return leaf;
    }
    let Some((split, _)) = strategy.best_split(node, s.alpha, s.gamma) else {
        return leaf;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = node.rows.iter().partition(|&&i| split.goes_left(&node.xs[i]));
    if l.is_empty() || r.is_empty() {
        return leaf;
    }
    let child = |rows: &[usize]| grow(strategy, &NodeData { rows, ..*node }, depth + 1, s);
    Node::Internal {
        left: Box::new(child(&l)),
        right: Box::new(child(&r)),
        split,
    }
}

/// Trains with the axis-aligned strategy.
pub fn forest_train(t: &SampleSet, settings: &ForestSettings) -> Result<ForestModel> {
    forest_train_with(t, settings, &AxisAligned, |_, _| {})
}

/// Trains with any split strategy. `on_round(t, sum)` observes the boosted
/// sum on the training rows after each round.
pub fn forest_train_with(
    t: &SampleSet,
    settings: &ForestSettings,
    strategy: &dyn SplitStrategy,
    mut on_round: impl FnMut(usize, &[f64]),
) -> Result<ForestModel> {
    settings.validate()?;
    let known = t.known();
    let n = known.len();
    if n < 2 {
        return Err(Error::NotTrained(format!("forest needs ≥ 2 points, got {n}")));
    }
    let d = t.dim();
    let xs = known.points();
    let y = known.known_outputs();
    let n_rows = ((settings.row_fraction * n as f64).ceil() as usize).clamp(1, n);
    let n_feats = ((settings.feature_fraction * d as f64).ceil() as usize).clamp(1, d);
    let mut rng: Rng = seeding::rng(settings.seed, &[seeding::label("forest")]);

    let mut pred = vec![0.0; n];
    let mut trees = Vec::with_capacity(settings.n_trees);
    let h = vec![2.0; n];
    for round in 1..=settings.n_trees {
        let g: Vec<f64> = pred.iter().zip(&y).map(|(p, y)| 2.0 * (p - y)).collect();
        let mut rows: Vec<usize> = if n_rows == n {
            (0..n).collect()
        } else {
            sample(&mut rng, n, n_rows).into_vec()
        };
        rows.sort_unstable();
        let mut features: Vec<usize> = if n_feats == d {
            (0..d).collect()
        } else {
            sample(&mut rng, d, n_feats).into_vec()
        };
        features.sort_unstable();
        let node = NodeData {
            xs,
            rows: &rows,
            features: &features,
            g: &g,
            h: &h,
        };
        let tree = Tree {
            root: grow(strategy, &node, 0, settings),
        };
        for (p, x) in pred.iter_mut().zip(xs) {
            *p += tree.predict(x);
        }
        trees.push(tree);
        on_round(round, &pred);
    }
    Ok(ForestModel {
        trees,
        average: settings.average,
        dim: d,
    })
}
