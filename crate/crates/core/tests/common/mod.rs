//! Independent CMA-ES generation oracle shared by the integration tests:
//! plain vectors, its own Jacobi eigensolver, no library numerics.
#![allow(dead_code, clippy::needless_range_loop)]

use elas_core::cmaes::{default_params, update_step, CmaParams};
use elas_core::seeding::Rng as SeededRng;
use elas_core::DistributionState;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = Vec<Vec<f64>>;

pub fn expected_norm(d: usize) -> f64 {
    // E||N(0,I)|| by the recursion Γ((d+1)/2)/Γ(d/2) with exact base cases
    let mut r = if d % 2 == 1 {
        1.0 / std::f64::consts::PI.sqrt() // d = 1: Γ(1)/Γ(1/2)
    } else {
        std::f64::consts::PI.sqrt() / 2.0 // d = 2: Γ(3/2)/Γ(1)
    };
    let mut k = if d % 2 == 1 { 1 } else { 2 };
    while k < d {
        // ratio(k+2) = ratio(k) * ((k+1)/2) / (k/2)
        r *= (k as f64 + 1.0) / k as f64;
        k += 2;
    }
    std::f64::consts::SQRT_2 * r
}

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
fn jacobi(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.len();
    let mut a = a.clone();
    let mut v: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

fn inv_sqrt(c: &Mat) -> Mat {
    let n = c.len();
    let (vals, vecs) = jacobi(c);
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (0..n).map(|k| vecs[i][k] * vecs[j][k] / vals[k].sqrt()).sum();
        }
    }
    out
}

fn matvec(m: &Mat, v: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub struct Oracle {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub cov: Mat,
    pub ps: Vec<f64>,
    pub pc: Vec<f64>,
    pub hsig: bool,
}

/// One generation written out term by term.
pub fn oracle_step(
    mean: &[f64],
    sigma: f64,
    cov: &Mat,
    ps: &[f64],
    pc: &[f64],
    generation: usize,
    pop: &[(Vec<f64>, f64)],
) -> Oracle {
    let n = mean.len();
    let nf = n as f64;
    let lambda = pop.len();
    let mu = lambda / 2;
    let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
    let sum: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|x| x / sum).collect();
    let mueff = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
    let cs = (mueff + 2.0) / (nf + mueff + 5.0);
    let ds = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
    let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
    let c1 = 2.0 / ((nf + 1.3) * (nf + 1.3) + mueff);
    let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0) * (nf + 2.0) + mueff));
    let chi = expected_norm(n);

    // rank by fitness, ties by index
    let mut idx: Vec<usize> = (0..lambda).collect();
    idx.sort_by(|a, b| pop[*a].1.partial_cmp(&pop[*b].1).unwrap().then(a.cmp(b)));

    let mut m_new = vec![0.0; n];
    for i in 0..mu {
        for k in 0..n {
            m_new[k] += w[i] * pop[idx[i]].0[k];
        }
    }
    let y_w: Vec<f64> = (0..n).map(|k| (m_new[k] - mean[k]) / sigma).collect();
    let cinv = inv_sqrt(cov);
    let cy = matvec(&cinv, &y_w);
    let fs = (cs * (2.0 - cs) * mueff).sqrt();
    let ps_new: Vec<f64> = (0..n).map(|k| (1.0 - cs) * ps[k] + fs * cy[k]).collect();
    let thr = (1.0 - (1.0 - cs).powf(2.0 * (generation as f64 + 1.0))).sqrt() * (1.4 + 2.0 / (nf + 1.0)) * chi;
    let hsig = norm(&ps_new) < thr;
    let h = if hsig { 1.0 } else { 0.0 };
    let fc = (cc * (2.0 - cc) * mueff).sqrt();
    let pc_new: Vec<f64> = (0..n).map(|k| (1.0 - cc) * pc[k] + h * fc * y_w[k]).collect();
    let delta = (1.0 - h) * cc * (2.0 - cc);
    let mut c_new = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let mut rmu = 0.0;
            for i in 0..mu {
                let x = &pop[idx[i]].0;
                rmu += w[i] * ((x[a] - mean[a]) / sigma) * ((x[b] - mean[b]) / sigma);
            }
            c_new[a][b] = (1.0 - c1 - cmu) * cov[a][b] + c1 * (pc_new[a] * pc_new[b] + delta * cov[a][b]) + cmu * rmu;
        }
    }
    for a in 0..n {
        for b in 0..a {
            let s = 0.5 * (c_new[a][b] + c_new[b][a]);
            c_new[a][b] = s;
            c_new[b][a] = s;
        }
    }
    let sigma_new = sigma * ((cs / ds) * (norm(&ps_new) / chi - 1.0)).exp();
    Oracle {
        mean: m_new,
        sigma: sigma_new,
        cov: c_new,
        ps: ps_new,
        pc: pc_new,
        hsig,
    }
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs().max(1.0)
}

/// Random state, parameters and evaluated population in dimension `d`.
pub fn random_case(rng: &mut SeededRng, d: usize) -> (DistributionState, CmaParams, Vec<(DVector<f64>, f64)>) {
    let params = default_params(d, None).unwrap();
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let cov = &a * a.transpose() + DMatrix::identity(d, d) * 0.2;
    let state = DistributionState {
        mean: DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0)),
        sigma: rng.random_range(0.1..2.0),
        cov: (&cov + cov.transpose()) * 0.5,
        p_sigma: DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)),
        p_c: DVector::from_fn(d, |_, _| 0.5 * rng.sample::<f64, _>(StandardNormal)),
        generation: rng.random_range(0..50),
        restarts: 0,
    };
    let pop = (0..params.lambda)
        .map(|_| {
            let x = DVector::from_fn(d, |_, _| rng.random_range(-4.0..4.0));
            let f = x.norm_squared() + rng.random_range(0.0..1.0);
            (x, f)
        })
        .collect();
    (state, params, pop)
}

/// Largest relative deviation `|a − b| / max(|b|, 1)` between the library
/// update and the oracle over every state component, and whether `h_σ`
/// agreed.
pub fn compare_step(state: &DistributionState, params: &CmaParams, pop: &[(DVector<f64>, f64)]) -> (f64, bool) {
    let d = state.dim();
    let got = update_step(state, pop, params).unwrap();
    let to_vec = |v: &DVector<f64>| v.iter().copied().collect::<Vec<f64>>();
    let cm: Mat = (0..d).map(|i| (0..d).map(|j| state.cov[(i, j)]).collect()).collect();
    let pv: Vec<(Vec<f64>, f64)> = pop.iter().map(|(x, f)| (to_vec(x), *f)).collect();
    let want = oracle_step(
        &to_vec(&state.mean),
        state.sigma,
        &cm,
        &to_vec(&state.p_sigma),
        &to_vec(&state.p_c),
        state.generation,
        &pv,
    );
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut dev = rel(got.state.sigma, want.sigma);
    for k in 0..d {
        dev = dev.max(rel(got.state.mean[k], want.mean[k]));
        dev = dev.max(rel(got.state.p_sigma[k], want.ps[k]));
        dev = dev.max(rel(got.state.p_c[k], want.pc[k]));
        for j in 0..d {
            dev = dev.max(rel(got.state.cov[(k, j)], want.cov[k][j]));
        }
    }
    (dev, got.h_sigma == want.hsig && !got.repaired)
}
