//! Thin dense helpers over `faer` shared by the spectral modules.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMat = Mat<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

pub fn zeros(r: usize, k: usize) -> CMat {
    Mat::zeros(r, k)
}

pub fn diag(v: &[C64]) -> CMat {
    let n = v.len();
    Mat::from_fn(n, n, |i, j| if i == j { v[i] } else { c(0.0, 0.0) })
}

pub fn diag_real(v: &[f64]) -> CMat {
    let n = v.len();
    Mat::from_fn(n, n, |i, j| if i == j { c(v[i], 0.0) } else { c(0.0, 0.0) })
}

pub fn scale(a: &CMat, s: C64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

/// Row scaling `diag(d) * a`.
pub fn scale_rows(d: &[f64], a: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i])
}

/// Row scaling by a complex diagonal.
pub fn scale_rows_c(d: &[C64], a: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[i])
}

/// Column scaling `a * diag(d)`.
pub fn scale_cols(a: &CMat, d: &[f64]) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[j])
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn sub(a: &CMat, b: &CMat) -> CMat {
    a - b
}

pub fn shift(a: &CMat, z: C64) -> CMat {
    let mut out = a.clone();
    for k in 0..a.nrows().min(a.ncols()) {
        out[(k, k)] -= z;
    }
    out
}

/// Two-by-two block matrix from equally compatible blocks.
pub fn block2(a: &CMat, b: &CMat, cc: &CMat, d: &CMat) -> CMat {
    let (r0, c0) = (a.nrows(), a.ncols());
    let (r1, c1) = (d.nrows(), d.ncols());
    debug_assert_eq!(b.nrows(), r0);
    debug_assert_eq!(b.ncols(), c1);
    debug_assert_eq!(cc.nrows(), r1);
    debug_assert_eq!(cc.ncols(), c0);
    Mat::from_fn(r0 + r1, c0 + c1, |i, j| match (i < r0, j < c0) {
        (true, true) => a[(i, j)],
        (true, false) => b[(i, j - c0)],
        (false, true) => cc[(i - r0, j)],
        (false, false) => d[(i - r0, j - c0)],
    })
}

pub fn sub_block(a: &CMat, r0: usize, nr: usize, c0: usize, nc: usize) -> CMat {
    Mat::from_fn(nr, nc, |i, j| a[(r0 + i, c0 + j)])
}

pub fn frob(a: &CMat) -> f64 {
    a.norm_l2()
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|k| a[(k, k)]).sum()
}

pub fn is_real(a: &CMat) -> bool {
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| a[(i, j)].im == 0.0))
}

pub fn real_part(a: &CMat) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re)
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    let inv = a.partial_piv_lu().inverse();
    check_finite(&inv, "LU inverse")?;
    Ok(inv)
}

pub fn solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let x = a.partial_piv_lu().solve(b);
    check_finite(&x, "LU solve")?;
    Ok(x)
}

/// Least-squares solution of an overdetermined or rank-deficient system via SVD pseudoinverse.
pub fn lstsq(a: &CMat, b: &CMat, rel_tol: f64) -> Result<CMat> {
    let p = pinv(a, rel_tol)?;
    Ok(&p * b)
}

/// Full SVD `a = U diag(s) Vᴴ`; `U` is square in rows, `V` square in columns.
pub fn svd(a: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let svd = a.svd().map_err(|e| Error::Eigen(format!("svd: {e:?}")))?;
    let s = svd.S().column_vector().iter().map(|x| x.re).collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

pub fn pinv(a: &CMat, rel_tol: f64) -> Result<CMat> {
    let svd = a.svd().map_err(|e| Error::Eigen(format!("svd: {e:?}")))?;
    let s: Vec<f64> = svd.S().column_vector().iter().map(|x| x.re).collect();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cut = rel_tol * smax;
    let u = svd.U();
    let v = svd.V();
    let k = s.len();
    let inv_s: Vec<f64> = s.iter().map(|&x| if x > cut { 1.0 / x } else { 0.0 }).collect();
    Ok(Mat::from_fn(a.ncols(), a.nrows(), |i, j| {
        (0..k).map(|l| v[(i, l)] * inv_s[l] * u[(j, l)].conj()).sum()
    }))
}

fn check_finite(a: &CMat, what: &str) -> Result<()> {
    let ok = (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()));
    if ok {
        Ok(())
    } else {
        Err(Error::Singular(what.to_string()))
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    let mut s = a
        .singular_values()
        .map_err(|e| Error::Eigen(format!("singular values: {e:?}")))?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Spectral norm from the largest eigenvalue of the smaller Gram matrix.
///
/// The top eigenvalue of `AᴴA` carries full relative precision, so this matches
/// `σ_max` to rounding at a fraction of the cost of an SVD.
pub fn norm2(a: &CMat) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    let gram = if a.nrows() < a.ncols() { a * &adjoint(a) } else { &adjoint(a) * a };
    let top = hermitian_eigenvalues(&gram)?.into_iter().fold(0.0f64, f64::max);
    Ok(top.max(0.0).sqrt())
}

/// 2-norm condition number; infinite when singular.
pub fn cond(a: &CMat) -> Result<f64> {
    let s = singular_values(a)?;
    let smin = s.last().copied().unwrap_or(0.0);
    Ok(if smin == 0.0 { f64::INFINITY } else { s[0] / smin })
}

/// Eigenvalues ascending and orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let e = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("hermitian: {e:?}")))?;
    let vals: Vec<f64> = e.S().column_vector().iter().map(|x| x.re).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn hermitian_eigenvalues(a: &CMat) -> Result<Vec<f64>> {
    let mut v = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("hermitian: {e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `f(A)` for Hermitian `A` through its eigendecomposition.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, u) = hermitian_eigen(a)?;
    let fv: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
    let uf = scale_cols(&u, &fv);
    Ok(&uf * u.adjoint())
}

/// Eigenvalues of a general matrix, using the real solver when the input is real.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    if is_real(a) {
        real_part(a).eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))
    } else {
        a.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))
    }
}

/// Eigenvalues and right eigenvectors (columns, unit 2-norm) of a general matrix.
pub fn eigen(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let (vals, vecs) = if is_real(a) {
        let e = real_part(a).eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        (e.S().column_vector().iter().copied().collect::<Vec<_>>(), e.U().to_owned())
    } else {
        let e = a.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        (e.S().column_vector().iter().copied().collect::<Vec<_>>(), e.U().to_owned())
    };
    let mut vecs = vecs;
    for j in 0..vecs.ncols() {
        let nrm = col_norm(&vecs, j);
        if nrm > 0.0 {
            for i in 0..vecs.nrows() {
                vecs[(i, j)] /= nrm;
            }
        }
    }
    Ok((vals, vecs))
}

pub fn col(a: &CMat, j: usize) -> Vec<C64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn col_norm(a: &CMat, j: usize) -> f64 {
    (0..a.nrows()).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt()
}

pub fn vnorm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    debug_assert_eq!(a.ncols(), x.len());
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum()).collect()
}

pub fn to_col(x: &[C64]) -> CMat {
    Mat::from_fn(x.len(), 1, |i, _| x[i])
}

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns `assign[i] = j`. Exact Hungarian algorithm up to `HUNGARIAN_MAX`
/// rows, greedy smallest-edge-first beyond that.
pub fn assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n <= HUNGARIAN_MAX {
        hungarian(cost)
    } else {
        greedy_assignment(cost)
    }
}

pub const HUNGARIAN_MAX: usize = 800;

fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

fn greedy_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, row) in cost.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            edges.push((w, i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut assign = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, i, j) in edges {
        if assign[i] == usize::MAX && !taken[j] {
            assign[i] = j;
            taken[j] = true;
        }
    }
    assign
}

/// Largest matched distance under the optimal assignment with cost `|a - b|`.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    if a.is_empty() {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| (x - y).norm()).collect()).collect();
    let assign = assignment(&cost);
    assign.iter().enumerate().map(|(i, &j)| cost[i][j]).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hungarian_beats_sorted_pairing() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&cost);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn multiset_distance_is_permutation_invariant() {
        let a = [c(1.0, 0.0), c(2.0, 1.0), c(-1.0, 0.5)];
        let b = [c(-1.0, 0.5), c(1.0, 1e-3), c(2.0, 1.0)];
        assert!((multiset_distance(&a, &b) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn pinv_solves_consistent_rank_deficient_system() {
        let a = Mat::from_fn(3, 2, |i, j| c((i + j) as f64, 0.0));
        let x = to_col(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let b = &a * &x;
        let y = lstsq(&a, &b, 1e-12).unwrap();
        assert!(frob(&(&(&a * &y) - &b)) < 1e-12);
    }

    #[test]
    fn real_and_complex_eigen_paths_agree() {
        let a = Mat::from_fn(5, 5, |i, j| c(((i * 7 + j * 3) % 5) as f64 - 2.0, 0.0));
        let mut b = a.clone();
        b[(0, 0)] += c(0.0, 1e-300);
        let ea = eigenvalues(&a).unwrap();
        let eb = eigenvalues(&b).unwrap();
        assert!(multiset_distance(&ea, &eb) < 1e-10);
    }
}
