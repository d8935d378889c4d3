//! Analytic test objectives with rotation/translation instances.
//!
//! Stand-ins for a benchmarking testbed: each instance evaluates
//! `base(R·(x − x_opt)) + f_shift` on the search domain `[-5, 5]^d`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::Point;
use crate::seeding;

pub const DOMAIN: (f64, f64) = (-5.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum BaseFunction {
    Sphere,
    Ellipsoid,
    Rosenbrock,
    Rastrigin,
}

impl BaseFunction {
    pub const ALL: [BaseFunction; 4] = [
        BaseFunction::Sphere,
        BaseFunction::Ellipsoid,
        BaseFunction::Rosenbrock,
        BaseFunction::Rastrigin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseFunction::Sphere => "sphere",
            BaseFunction::Ellipsoid => "ellipsoid",
            BaseFunction::Rosenbrock => "rosenbrock",
            BaseFunction::Rastrigin => "rastrigin",
        }
    }

    fn id(self) -> u64 {
        self as u64 + 1
    }

    /// Untransformed objective value at `z`.
    pub fn value(self, z: &[f64]) -> f64 {
        let d = z.len();
        match self {
            BaseFunction::Sphere => z.iter().map(|v| v * v).sum(),
            BaseFunction::Ellipsoid => {
                if d == 1 {
                    return z[0] * z[0];
                }
                z.iter()
                    .enumerate()
                    .map(|(i, v)| 10f64.powf(6.0 * i as f64 / (d - 1) as f64) * v * v)
                    .sum()
            }
            BaseFunction::Rosenbrock => {
                if d == 1 {
                    return (1.0 - z[0]).powi(2);
                }
                z.windows(2)
                    .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                    .sum()
            }
            BaseFunction::Rastrigin => {
                10.0 * d as f64 + z.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
            }
        }
    }

    /// Global minimiser of the untransformed function.
    pub fn base_optimum(self, d: usize) -> Vec<f64> {
        match self {
            BaseFunction::Rosenbrock => vec![1.0; d],
            _ => vec![0.0; d],
        }
    }
}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaseFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaseFunction::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown function `{s}`")))
    }
}

/// Serializable instance descriptor `{base, d, seed}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub base: BaseFunction,
    pub d: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveInstance {
    pub descriptor: InstanceDescriptor,
    pub rotation: DMatrix<f64>,
    pub x_opt: Point,
    pub f_shift: f64,
    eval_count: u64,
}

impl ObjectiveInstance {
    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub fn dim(&self) -> usize {
        self.descriptor.d
    }

    /// Optimal objective value.
    pub fn f_opt(&self) -> f64 {
        self.f_shift
    }

    /// A minimiser in the original coordinates.
    pub fn optimum(&self) -> Point {
        let z = Point::from_vec(self.descriptor.base.base_optimum(self.dim()));
        self.rotation.transpose() * z + &self.x_opt
    }

    /// `base(R·(x − x_opt)) + f_shift`; increments the evaluation counter.
    pub fn evaluate(&mut self, x: &Point) -> Result<f64> {
        Error::check_dim(self.dim(), x.len())?;
        self.eval_count += 1;
        Ok(self.peek(x))
    }

    /// Evaluation without touching the counter (for resampling and tests).
    pub fn peek(&self, x: &Point) -> f64 {
        let z = &self.rotation * (x - &self.x_opt);
        self.descriptor.base.value(z.as_slice()) + self.f_shift
    }

    /// Fresh copy with the counter reset.
    pub fn fresh(&self) -> Self {
        ObjectiveInstance {
            eval_count: 0,
            ..self.clone()
        }
    }
}

/// Deterministic instance for `(base, d, seed)`; seed 0 is the canonical
/// untransformed instance.
pub fn make_instance(base: BaseFunction, d: usize, seed: u64) -> Result<ObjectiveInstance> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
    }
    let descriptor = InstanceDescriptor { base, d, seed };
    if seed == 0 {
        return Ok(ObjectiveInstance {
            descriptor,
            rotation: DMatrix::identity(d, d),
            x_opt: Point::zeros(d),
            f_shift: 0.0,
            eval_count: 0,
        });
    }
    let mut rng = seeding::rng(seed, &[base.id(), d as u64]);
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // sign fix makes the distribution Haar
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let x_opt = Point::from_fn(d, |_, _| rng.random_range(-4.0..=4.0));
    let f_shift = rng.random_range(-100.0..=100.0);
    Ok(ObjectiveInstance {
        descriptor,
        rotation: q,
        x_opt,
        f_shift,
        eval_count: 0,
    })
}

impl TryFrom<InstanceDescriptor> for ObjectiveInstance {
    type Error = Error;

    fn try_from(d: InstanceDescriptor) -> Result<Self> {
        make_instance(d.base, d.d, d.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(xs: &[f64]) -> Point {
        Point::from_vec(xs.to_vec())
    }

    #[test]
    fn canonical_values() {
        let mut s = make_instance(BaseFunction::Sphere, 2, 0).unwrap();
        assert_eq!(s.evaluate(&p(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(s.evaluate(&p(&[1.0, 1.0])).unwrap(), 2.0);
        assert_eq!(s.eval_count(), 2);
        let mut r = make_instance(BaseFunction::Rosenbrock, 2, 0).unwrap();
        assert_eq!(r.evaluate(&p(&[1.0, 1.0])).unwrap(), 0.0);
        let mut ra = make_instance(BaseFunction::Rastrigin, 3, 0).unwrap();
        assert!(ra.evaluate(&p(&[0.0, 0.0, 0.0])).unwrap().abs() < 1e-12);
    }

    #[test]
    fn instances_are_deterministic_and_orthogonal() {
        for base in BaseFunction::ALL {
            let a = make_instance(base, 5, 7).unwrap();
            let b = make_instance(base, 5, 7).unwrap();
            assert_eq!(a, b);
            let rtr = a.rotation.transpose() * &a.rotation;
            assert!((rtr - DMatrix::<f64>::identity(5, 5)).amax() < 1e-10);
            assert!(a.x_opt.iter().all(|v| (-4.0..=4.0).contains(v)));
            assert!((-100.0..=100.0).contains(&a.f_shift));
        }
        let a = make_instance(BaseFunction::Sphere, 3, 1).unwrap();
        let b = make_instance(BaseFunction::Sphere, 3, 2).unwrap();
        assert_ne!(a.x_opt, b.x_opt);
    }

    #[test]
    fn optimum_value_is_shift() {
        for seed in 1..20 {
            for base in BaseFunction::ALL {
                let mut inst = make_instance(base, 3, seed).unwrap();
                let x = inst.optimum();
                let f = inst.evaluate(&x).unwrap();
                assert!(
                    (f - inst.f_shift).abs() < 1e-9,
                    "{base} {seed}: {f} vs {}",
                    inst.f_shift
                );
            }
            let mut s = make_instance(BaseFunction::Sphere, 2, seed).unwrap();
            let x_opt = s.x_opt.clone();
            assert_eq!(s.evaluate(&x_opt).unwrap(), s.f_shift);
        }
    }

    #[test]
    fn grid_minimum_approaches_shift() {
        let inst = make_instance(BaseFunction::Ellipsoid, 2, 3).unwrap();
        let mut best = f64::INFINITY;
        for i in -20..=20 {
            for j in -20..=20 {
                let x = &inst.x_opt + p(&[i as f64 * 1e-3, j as f64 * 1e-3]);
                best = best.min(inst.peek(&x));
            }
        }
        assert!(best >= inst.f_shift);
        assert!(best - inst.f_shift < 1e-12);
    }

    #[test]
    fn descriptor_json() {
        let d: InstanceDescriptor = serde_json::from_str(r#"{"base":"rastrigin","d":3,"seed":4}"#).unwrap();
        let inst = ObjectiveInstance::try_from(d).unwrap();
        assert_eq!(inst.descriptor.base, BaseFunction::Rastrigin);
        assert_eq!(inst.dim(), 3);
    }
}
