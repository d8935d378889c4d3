//! Dense linear-algebra helpers on top of nalgebra for the small (d ≤ 40)
//! matrices this pipeline works with.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor applied before taking matrix roots.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Eigendecomposition of a symmetric matrix with eigenvalues floored at
/// `EIGEN_FLOOR * max(eig)`. Fails when the largest eigenvalue is not positive
/// or any entry is non-finite.
pub fn floored_eigen(c: &DMatrix<f64>) -> Result<SymmetricEigen<f64, Dyn>> {
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateCovariance);
    }
    let sym = symmetrize(c);
    let mut eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.max();
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::DegenerateCovariance);
    }
    let floor = EIGEN_FLOOR * max;
    eig.eigenvalues.apply(|v| *v = v.max(floor));
    Ok(eig)
}

fn compose(eig: &SymmetricEigen<f64, Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let b = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    let m = b * d * b.transpose();
    symmetrize(&m)
}

/// Symmetric square root `C^{1/2}`.
pub fn sym_sqrt(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(compose(&floored_eigen(c)?, f64::sqrt))
}

/// Symmetric inverse square root `C^{-1/2}`.
pub fn sym_inv_sqrt(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(compose(&floored_eigen(c)?, |v| 1.0 / v.sqrt()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(c: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(c)).eigenvalues.min()
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_eigenvalue(c: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(c)).eigenvalues.max()
}

/// Cholesky factorisation, retrying with a diagonal jitter ladder
/// `base, 10·base, …` up to `max_rel * trace/n`. Returns the factor and the
/// jitter that was added.
pub fn cholesky_with_jitter(k: &DMatrix<f64>, min_rel: f64, max_rel: f64) -> Option<(Cholesky<f64, Dyn>, f64)> {
    if k.iter().any(|v| !v.is_finite()) {
        return None;
    }
    if let Some(ch) = Cholesky::new(k.clone()) {
        return Some((ch, 0.0));
    }
    let n = k.nrows();
    let scale = (k.trace() / n as f64).abs().max(f64::MIN_POSITIVE);
    let mut rel = min_rel;
    while rel <= max_rel * (1.0 + 1e-9) {
        let jitter = rel * scale;
        let kj = k + DMatrix::identity(n, n) * jitter;
        if let Some(ch) = Cholesky::new(kj) {
            return Some((ch, jitter));
        }
        rel *= 10.0;
    }
    None
}

/// Least-squares solution of `X β = y` through the SVD. Returns `None` when
/// the numerical rank (relative tolerance `rtol`) is below the column count.
pub fn lstsq_full_rank(x: &DMatrix<f64>, y: &DVector<f64>, rtol: f64) -> Option<DVector<f64>> {
    if x.nrows() < x.ncols() {
        return None;
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return None;
    }
    let rank = svd.singular_values.iter().filter(|&&s| s > rtol * smax).count();
    if rank < x.ncols() {
        return None;
    }
    svd.solve(y, rtol * smax).ok()
}

/// Minimum-norm least-squares solution, tolerating rank deficiency.
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = 1e-12 * smax.max(f64::MIN_POSITIVE);
    svd.solve(y, eps).ok()
}
