//! Dimension and number of observations.

use super::{named, FeatureValue, Features};
use crate::sample::SampleSet;

pub fn dim(set: &SampleSet) -> Features {
    named([("dim", FeatureValue::Real(set.dim() as f64))])
}

pub fn obs(set: &SampleSet) -> Features {
    named([("obs", FeatureValue::Real(set.len() as f64))])
}

/// `{dim, obs}`.
pub fn basic_features(set: &SampleSet) -> Features {
    let mut f = dim(set);
    f.extend(obs(set));
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Point;

    #[test]
    fn counts() {
        let s = SampleSet::unevaluated(3, vec![Point::zeros(3); 7]).unwrap();
        assert_eq!(
            basic_features(&s),
            vec![
                ("dim".to_string(), FeatureValue::Real(3.0)),
                ("obs".to_string(), FeatureValue::Real(7.0))
            ]
        );
        assert_eq!(obs(&SampleSet::empty(2))[0].1, FeatureValue::Real(0.0));
    }
}
