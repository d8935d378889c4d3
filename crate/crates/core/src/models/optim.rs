//! Derivative-free Nelder–Mead minimisation used for GP hyperparameters.

/// Outcome of one minimisation.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    /// Best objective value after each iteration; nonincreasing.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub initial_step: f64,
    pub max_evaluations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            initial_step: 0.5,
            max_evaluations: 1000,
            f_tol: 1e-10,
            x_tol: 1e-8,
        }
    }
}

impl NelderMead {
    /// Minimises `f` from `x0`. Non-finite objective values are treated as
    /// `+∞`, so infeasible regions are simply rejected.
    pub fn minimize(&self, x0: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Minimum {
        let n = x0.len();
        let mut evals = 0;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let v0 = eval(x0, &mut evals);
        simplex.push((x0.to_vec(), v0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }
        let mut trace = Vec::new();
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            trace.push(simplex[0].1);
            if n == 0 || evals >= self.max_evaluations {
                break;
            }
            let spread = simplex[n].1 - simplex[0].1;
            let diam = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if (spread.is_finite() && spread <= self.f_tol) || diam <= self.x_tol {
                break;
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < simplex[0].1 {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(-0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            // shrink towards the best vertex
            let best = simplex[0].0.clone();
            for item in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = best.iter().zip(&item.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                let v = eval(&x, &mut evals);
                *item = (x, v);
            }
        }
        let (x, fv) = simplex.swap_remove(0);
        Minimum {
            x,
            f: fv,
            trace,
            evaluations: evals,
        }
    }
}
