//! Sample-set variants of one generation and the feature groups computed on
//! each of them.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{basic, cma, dispersion, info, levelset, metamodel, nbc, ydist, FeatureValue, Features};
use crate::error::{Error, Result};
use crate::sample::{Point, SampleSet};
use crate::seeding;
use crate::state::DistributionState;
use crate::transform::{apply_transform, basis_transform, Metric};
use crate::tss::{self, TssMethod, TssSpec};

/// Which points make up the set: archive, training set, and either of them
/// joined with the unevaluated population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetBase {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "T")]
    T,
    #[serde(rename = "A+P")]
    AP,
    #[serde(rename = "T+P")]
    TP,
}

impl SetBase {
    pub const ALL: [SetBase; 4] = [SetBase::A, SetBase::T, SetBase::AP, SetBase::TP];

    pub fn name(self) -> &'static str {
        match self {
            SetBase::A => "A",
            SetBase::T => "T",
            SetBase::AP => "A+P",
            SetBase::TP => "T+P",
        }
    }

    pub fn has_population(self) -> bool {
        matches!(self, SetBase::AP | SetBase::TP)
    }

    pub fn parse(s: &str) -> Option<SetBase> {
        SetBase::ALL.into_iter().find(|b| b.name() == s)
    }
}

/// A set base, optionally expressed in the σ²C basis of the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Variant {
    pub base: SetBase,
    pub transformed: bool,
}

impl Variant {
    pub fn name(self) -> String {
        self.to_string()
    }

    /// Inverse of the display form, e.g. `A+P:t`.
    pub fn parse(s: &str) -> Option<Variant> {
        let (b, transformed) = match s.strip_suffix(":t") {
            Some(b) => (b, true),
            None => (s, false),
        };
        Some(Variant {
            base: SetBase::parse(b)?,
            transformed,
        })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.base.name())?;
        if self.transformed {
            f.write_str(":t")?;
        }
        Ok(())
    }
}

/// One set variant with the state it is described against. For transformed
/// variants the state is expressed in the new basis (`m = 0`, `σ = 1`,
/// `C = I`).
#[derive(Debug, Clone)]
pub struct FeatureContext {
    pub variant: Variant,
    pub state: DistributionState,
    pub set: SampleSet,
}

/// One computed feature. `id()` gives `group.name@variant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub variant: Variant,
    pub group: String,
    pub name: String,
    pub value: FeatureValue,
}

impl FeatureRow {
    pub fn id(&self) -> String {
        format!("{}.{}@{}", self.group, self.name, self.variant)
    }
}

fn transformed_state(state: &DistributionState) -> DistributionState {
    let d = state.dim();
    let mut s = DistributionState::initial(Point::zeros(d), 1.0);
    s.p_sigma = state.p_sigma.clone();
    s.p_c = state.p_c.clone();
    s.generation = state.generation;
    s.restarts = state.restarts;
    s
}

/// Builds the set variants of one generation: the archive `A` of evaluated
/// points, the training set `T` selected for the population, and both joined
/// with the population `P` whose outputs are treated as missing. Each comes
/// raw and in the σ²C basis. Under full selection `T = A`, so only the four
/// `A`-based variants are produced.
pub fn build_contexts(
    archive: &SampleSet,
    population: &[Point],
    tss_spec: &TssSpec,
    state: &DistributionState,
) -> Result<Vec<FeatureContext>> {
    let d = state.dim();
    Error::check_dim(d, archive.dim())?;
    let a = archive.known();
    let p = SampleSet::new(d, population.to_vec(), vec![None; population.len()])?;
    let mut bases = vec![(SetBase::A, a.clone()), (SetBase::AP, a.union(&p)?)];
    if tss_spec.method != TssMethod::Full {
        let t = match tss::select(tss_spec, &a, population, state) {
            Ok(t) => t,
            Err(Error::EmptySelection) => SampleSet::empty(d),
            Err(e) => return Err(e),
        };
        bases.push((SetBase::TP, t.union(&p)?));
        bases.push((SetBase::T, t));
    }
    bases.sort_by_key(|b| b.0);

    let basis = basis_transform(state)?;
    let t_state = transformed_state(state);
    let mut out = Vec::with_capacity(2 * bases.len());
    for (base, set) in bases {
        let t_set = apply_transform(&basis, &set)?;
        out.push(FeatureContext {
            variant: Variant {
                base,
                transformed: false,
            },
            state: state.clone(),
            set,
        });
        out.push(FeatureContext {
            variant: Variant {
                base,
                transformed: true,
            },
            state: t_state.clone(),
            set: t_set,
        });
    }
    Ok(out)
}

/// Computes every feature group applicable to the context:
///
/// - `dim` and the state-only CMA features on raw `A` only;
/// - `obs` on raw sets;
/// - set-based CMA, dispersion, information content and levelset on all;
/// - metamodel and NBC on sets without the population;
/// - output distribution on raw `A` and `T`.
pub fn compute_context(ctx: &FeatureContext, seed: u64) -> Vec<FeatureRow> {
    let v = ctx.variant;
    let set = &ctx.set;
    let mut rows = Vec::new();
    let mut push = |group: &str, fs: Features| {
        rows.extend(fs.into_iter().map(|(name, value)| FeatureRow {
            variant: v,
            group: group.to_string(),
            name,
            value,
        }));
    };
    let raw_a = v.base == SetBase::A && !v.transformed;
    let stream = |group: &str| seeding::rng(seed, &[seeding::label(&v.name()), seeding::label(group)]);

    if raw_a {
        push("basic", basic::dim(set));
    }
    if !v.transformed {
        push("basic", basic::obs(set));
    }
    if raw_a {
        push("cma", cma::state_features(&ctx.state));
    }
    push("cma", cma::set_features(&ctx.state, set));
    push("dispersion", dispersion::dispersion_features(set, &Metric::Euclidean));
    push(
        "info",
        info::info_content_features(set, &info::default_epsilon_grid(), &mut stream("info")),
    );
    push("levelset", levelset::levelset_features(set, &mut stream("levelset")));
    if !v.base.has_population() {
        push("metamodel", metamodel::metamodel_features(set));
        push("nbc", nbc::nbc_features(set, &Metric::Euclidean));
    }
    if !v.transformed && matches!(v.base, SetBase::A | SetBase::T) {
        push("ydist", ydist::ydist_features(&set.known_outputs()));
    }
    rows
}

pub fn compute_all(contexts: &[FeatureContext], seed: u64) -> Vec<FeatureRow> {
    contexts.iter().flat_map(|c| compute_context(c, seed)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::Rng;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn setup() -> (SampleSet, Vec<Point>, DistributionState) {
        let mut rng = Rng::seed_from_u64(2);
        let mut draw = |n: usize| -> Vec<Point> {
            (0..n)
                .map(|_| Point::from_fn(2, |_, _| StandardNormal.sample(&mut rng)))
                .collect()
        };
        let pts = draw(30);
        let y = pts.iter().map(|p| p.norm_squared()).collect();
        let archive = SampleSet::evaluated(2, pts, y).unwrap();
        let pop = draw(6);
        let mut state = DistributionState::initial(Point::zeros(2), 0.8);
        state.cov[(0, 1)] = 0.3;
        state.cov[(1, 0)] = 0.3;
        (archive, pop, state)
    }

    #[test]
    fn variant_counts_and_placement() {
        let (a, p, s) = setup();
        let full = build_contexts(&a, &p, &TssSpec::full(), &s).unwrap();
        assert_eq!(full.len(), 4);
        let knn = build_contexts(&a, &p, &TssSpec::knn(10), &s).unwrap();
        assert_eq!(knn.len(), 8);
        let rows = compute_all(&knn, 7);
        let ids: Vec<String> = rows.iter().map(FeatureRow::id).collect();
        assert_eq!(ids.iter().filter(|i| i.starts_with("basic.dim@")).count(), 1);
        assert!(ids.contains(&"basic.dim@A".to_string()));
        assert!(ids.contains(&"cma.cma_lik@A:t".to_string()));
        assert!(!ids.iter().any(|i| i.starts_with("nbc.") && i.contains("+P")));
        assert!(!ids.iter().any(|i| i.starts_with("ydist.") && i.ends_with(":t")));
        let uniq: std::collections::HashSet<_> = ids.iter().collect();
        assert_eq!(uniq.len(), ids.len());
        assert_eq!(compute_all(&knn, 7), rows);
        assert_eq!(Variant::parse("T+P:t").unwrap().to_string(), "T+P:t");
    }

    fn close(a: &Features, b: &Features) {
        let mut real = 0;
        for (x, y) in a.iter().zip(b) {
            match (x.1.value(), y.1.value()) {
                (Some(a), Some(b)) => {
                    real += 1;
                    assert!((a - b).abs() < 1e-8, "{}", x.0)
                }
                (a, b) => assert_eq!(a.is_none(), b.is_none(), "{}", x.0),
            }
        }
        assert!(real > 0);
    }

    #[test]
    fn transformed_distances_match_mahalanobis() {
        let (a, p, s) = setup();
        let ctx = build_contexts(&a, &p, &TssSpec::full(), &s).unwrap();
        let metric = Metric::from_state(&s).unwrap();
        let raw = dispersion::dispersion_features(&ctx[0].set, &metric);
        let tr = dispersion::dispersion_features(&ctx[1].set, &Metric::Euclidean);
        close(&raw, &tr);
        let raw = nbc::nbc_features(&ctx[0].set, &metric);
        let tr = nbc::nbc_features(&ctx[1].set, &Metric::Euclidean);
        close(&raw, &tr);
    }
}
