//! Schweizer–Wolff rank dependence.

use crate::stats;

/// `#{l : x_l ≤ x_k}` for each `k`, so tied values share the highest rank.
fn max_ranks(xs: &[f64]) -> Vec<usize> {
    let sorted = stats::total_cmp_sorted(xs);
    xs.iter()
        .map(|x| sorted.partition_point(|v| v.total_cmp(x).is_le()))
        .collect()
}

/// `12/(n²−1) Σ_{i,j} |C_n(i/n, j/n) − ij/n²|` with the empirical copula
/// `C_n`. `None` for mismatched lengths, fewer than two points or a
/// constant argument.
pub fn sw_correlation(u: &[f64], v: &[f64]) -> Option<f64> {
    let n = u.len();
    if n < 2 || n != v.len() {
        return None;
    }
    let ru = max_ranks(u);
    let rv = max_ranks(v);
    if ru.iter().all(|r| *r == n) || rv.iter().all(|r| *r == n) {
        return None;
    }
    // counts[i][j] = #{k : ru_k ≤ i, rv_k ≤ j}, built by 2-D prefix sums
    let w = n + 1;
    let mut counts = vec![0u32; w * w];
    for k in 0..n {
        counts[ru[k] * w + rv[k]] += 1;
    }
    for i in 1..w {
        for j in 1..w {
            counts[i * w + j] += counts[(i - 1) * w + j] + counts[i * w + j - 1] - counts[(i - 1) * w + j - 1];
        }
    }
    let nf = n as f64;
    let mut sum = 0.0;
    for i in 1..w {
        for j in 1..w {
            let c = counts[i * w + j] as f64 / nf;
            sum += (c - (i * j) as f64 / (nf * nf)).abs();
        }
    }
    Some((12.0 / (nf * nf - 1.0) * sum).min(1.0))
}

/// Symmetric matrix of `sw_correlation` between the columns; undefined
/// pairs get 0 and the diagonal is 1.
pub fn similarity_matrix(columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = columns.len();
    let mut s = vec![vec![0.0; m]; m];
    for i in 0..m {
        s[i][i] = 1.0;
        for j in (i + 1)..m {
            let r = sw_correlation(&columns[i], &columns[j]).unwrap_or(0.0);
            s[i][j] = r;
            s[j][i] = r;
        }
    }
    s
}
