//! Generalised model training: selection, transforms, fitting and the
//! constancy check on a fresh test population.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::forest::{ForestModel, ForestSettings};
use super::gp::{gp_fit, CovKind, GpConfig, GpModel};
use super::poly::{lmm_default_k, train_lq, LmmModel, PolyModel, LQ_TAU};
use crate::cmaes::{default_params, sample_population};
use crate::error::{Error, Result};
use crate::sample::{Point, SampleSet};
use crate::state::DistributionState;
use crate::stats;
use crate::transform::{apply_transform, make_transform, TransformSpec, Y_SCALE_FLOOR};
use crate::tss::{self, TssMethod, TssSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Lmm,
    Lq,
    Gp,
    Rf,
}

/// `{family, gp_cov?, rf_preset?, seed}` plus optional tuning knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub family: ModelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp_cov: Option<CovKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf_preset: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// lmm neighbourhood size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// lq threshold multiplier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gp_starts: Option<usize>,
    /// Overrides the preset's tree count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf_trees: Option<usize>,
}

impl ModelSettings {
    pub fn new(family: ModelFamily) -> Self {
        ModelSettings {
            family,
            gp_cov: None,
            rf_preset: None,
            seed: 0,
            k: None,
            tau: None,
            gp_starts: None,
            rf_trees: None,
        }
    }

    pub fn gp(cov: CovKind) -> Self {
        ModelSettings {
            gp_cov: Some(cov),
            ..Self::new(ModelFamily::Gp)
        }
    }

    pub fn rf(preset: &str) -> Self {
        ModelSettings {
            rf_preset: Some(preset.to_string()),
            ..Self::new(ModelFamily::Rf)
        }
    }

    /// Short label used in tables, e.g. `gp_SE`, `rf_cart_full_mse`.
    pub fn label(&self) -> String {
        match self.family {
            ModelFamily::Lmm => "lmm".into(),
            ModelFamily::Lq => "lq".into(),
            ModelFamily::Gp => format!("gp_{}", self.gp_cov.unwrap_or(CovKind::Se).name()),
            ModelFamily::Rf => format!("rf_{}", self.rf_preset.as_deref().unwrap_or("cart_full_mse")),
        }
    }

    pub fn forest_settings(&self) -> Result<ForestSettings> {
        let mut s = ForestSettings::preset(self.rf_preset.as_deref().unwrap_or("cart_full_mse"))?;
        if let Some(n) = self.rf_trees {
            s.n_trees = n;
        }
        s.seed = self.seed;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self.family {
            ModelFamily::Rf => self.forest_settings()?.validate(),
            ModelFamily::Lq => match self.tau {
                Some(t) if !(t > 0.0) => Err(Error::Config(format!("lq tau {t}"))),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Whether inputs are mapped into the `σ²C` basis before fitting.
    pub fn transforms_inputs(&self, tss: TssMethod) -> bool {
        match self.family {
            ModelFamily::Lmm | ModelFamily::Rf => false,
            ModelFamily::Lq => tss != TssMethod::Full,
            ModelFamily::Gp => true,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Fitted {
    Poly(PolyModel),
    Lmm(LmmModel),
    Gp(GpModel),
    Forest(ForestModel),
}

impl Fitted {
    fn predict(&self, z: &Point) -> Result<f64> {
        match self {
            Fitted::Poly(m) => Ok(m.predict(z)),
            Fitted::Lmm(m) => m.predict(z),
            Fitted::Gp(m) => Ok(m.predict(z).0),
            Fitted::Forest(m) => Ok(m.predict(z)),
        }
    }
}

/// A trained surrogate: the fitted model plus the transform of its inputs
/// and outputs.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub fitted: Fitted,
    pub transform: TransformSpec,
    /// Number of training points.
    pub n_train: usize,
}

impl TrainedModel {
    /// Prediction in the original output space.
    pub fn predict(&self, x: &Point) -> Result<f64> {
        Error::check_dim(self.transform.dim(), x.len())?;
        let z = self.transform.forward_point(x);
        let v = self.fitted.predict(&z)?;
        if !v.is_finite() {
            return Err(Error::NotTrained(format!("non-finite prediction {v}")));
        }
        Ok(v * self.transform.y_scale + self.transform.y_shift)
    }

    pub fn predict_many(&self, xs: &[Point]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// Predictions in the normalised output space.
    fn predict_normalised(&self, xs: &[Point]) -> Result<Vec<f64>> {
        xs.iter()
            .map(|x| Ok(self.transform.forward_y(self.predict(x)?)))
            .collect()
    }
}

/// Fits the model family on an already transformed training set.
pub fn fit_family(settings: &ModelSettings, t: &SampleSet, state: &DistributionState) -> Result<Fitted> {
    let d = t.dim();
    Ok(match settings.family {
        ModelFamily::Lq => Fitted::Poly(train_lq(t, settings.tau.unwrap_or(LQ_TAU))?),
        ModelFamily::Lmm => Fitted::Lmm(LmmModel::new(t, settings.k.unwrap_or_else(|| lmm_default_k(d)), state)?),
        ModelFamily::Gp => {
            let config = GpConfig {
                n_starts: settings.gp_starts.unwrap_or(GpConfig::default().n_starts),
                seed: settings.seed,
                ..Default::default()
            };
            Fitted::Gp(gp_fit(t, settings.gp_cov.unwrap_or(CovKind::Se), &config)?)
        }
        ModelFamily::Rf => Fitted::Forest(super::forest::forest_train(t, &settings.forest_settings()?)?),
    })
}

/// Trains a surrogate on `archive` for predicting `queries`.
///
/// Selects the training set with `tss` (using `queries` as the points of
/// interest), maps it into the `σ²C` basis where the family expects it,
/// normalises the outputs, fits, and finally rejects the model as constant
/// when its predictions on `λ` fresh points from the state vary by less than
/// `min(1e-8, 0.05·range(y_tr))`. Every failure is reported as
/// [`Error::NotTrained`].
pub fn train_model<R: Rng + ?Sized>(
    archive: &SampleSet,
    queries: &[Point],
    tss_spec: &TssSpec,
    settings: &ModelSettings,
    state: &DistributionState,
    lambda: usize,
    rng: &mut R,
) -> Result<TrainedModel> {
    train_inner(archive, queries, tss_spec, settings, state, lambda, rng).map_err(|e| match e {
        Error::NotTrained(_) => e,
        other => Error::NotTrained(other.to_string()),
    })
}

fn train_inner<R: Rng + ?Sized>(
    archive: &SampleSet,
    queries: &[Point],
    tss_spec: &TssSpec,
    settings: &ModelSettings,
    state: &DistributionState,
    lambda: usize,
    rng: &mut R,
) -> Result<TrainedModel> {
    let d = archive.dim();
    Error::check_dim(d, state.dim())?;
    let known = archive.known();
    if known.is_empty() {
        return Err(Error::NotTrained("empty archive".into()));
    }
    let selected = tss::select(tss_spec, &known, queries, state)?;
    if selected.is_empty() {
        return Err(Error::NotTrained("empty training set".into()));
    }
    let y_tr = selected.known_outputs();

    let full = make_transform(state, &y_tr)?;
    let transform = if settings.transforms_inputs(tss_spec.method) {
        full
    } else {
        TransformSpec {
            mean: Point::zeros(d),
            root_inv: DMatrix::identity(d, d),
            ..full
        }
    };
    let t = apply_transform(&transform, &selected)?;
    let fitted = fit_family(settings, &t, state)?;
    let model = TrainedModel {
        fitted,
        transform,
        n_train: selected.len(),
    };

    // constancy check on a fresh population
    let params = default_params(d, Some(lambda.max(2)))?;
    let test = sample_population(state, &params, rng)?;
    let pred = model.predict_normalised(&test[..lambda.max(1).min(test.len())])?;
    let y_norm: Vec<f64> = t.known_outputs();
    let range = |v: &[f64]| {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
        hi - lo
    };
    let r_tr = range(&y_norm);
    if !(r_tr > 0.0) || stats::pop_std(&y_tr) < Y_SCALE_FLOOR {
        return Err(Error::NotTrained("training outputs are constant".into()));
    }
    if range(&pred) < (1e-8f64).min(0.05 * r_tr) {
        return Err(Error::NotTrained("model is constant on the test population".into()));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    fn archive(f: impl Fn(&Point) -> f64, n: usize, seed: u64) -> SampleSet {
        let mut rng = seeding::rng(seed, &[]);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::from_fn(2, |_, _| rng.random_range(-2.0..2.0)))
            .collect();
        let y = pts.iter().map(&f).collect();
        SampleSet::evaluated(2, pts, y).unwrap()
    }

    #[test]
    fn constant_archive_is_not_trained() {
        let a = archive(|_| 4.0, 20, 1);
        let s = DistributionState::initial(Point::zeros(2), 1.0);
        for fam in [ModelFamily::Lq, ModelFamily::Lmm, ModelFamily::Gp, ModelFamily::Rf] {
            let mut st = ModelSettings::new(fam);
            st.rf_trees = Some(4);
            let r = train_model(&a, &[], &TssSpec::full(), &st, &s, 6, &mut seeding::rng(0, &[]));
            assert!(matches!(r, Err(Error::NotTrained(_))), "{fam:?}");
        }
    }

    #[test]
    fn lq_recovers_quadratic() {
        let f = |x: &Point| 3.0 + x[0] - x[1] + 2.0 * x[0] * x[0] + 0.5 * x[0] * x[1] + x[1] * x[1];
        let a = archive(f, 20, 2);
        let mut s = DistributionState::initial(Point::from_vec(vec![0.2, 0.1]), 0.5);
        s.cov[(0, 1)] = 0.2;
        s.cov[(1, 0)] = 0.2;
        for tss in [TssSpec::full(), TssSpec::knn(15), TssSpec::nearest(40, 100.0)] {
            let m = train_model(
                &a,
                &[Point::zeros(2)],
                &tss,
                &ModelSettings::new(ModelFamily::Lq),
                &s,
                6,
                &mut seeding::rng(0, &[]),
            )
            .unwrap();
            for x in [Point::from_vec(vec![0.3, -0.4]), Point::from_vec(vec![1.0, 1.0])] {
                assert!((m.predict(&x).unwrap() - f(&x)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn settings_json_and_labels() {
        let s: ModelSettings = serde_json::from_str(r#"{"family":"gp","gp_cov":"SE_Q","seed":3}"#).unwrap();
        assert_eq!(s.label(), "gp_SE_Q");
        assert_eq!(ModelSettings::rf("oc1_nearest_rde").label(), "rf_oc1_nearest_rde");
        assert!(!ModelSettings::new(ModelFamily::Lq).transforms_inputs(TssMethod::Full));
        assert!(ModelSettings::new(ModelFamily::Lq).transforms_inputs(TssMethod::Knn));
    }
}
