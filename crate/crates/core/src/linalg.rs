//! Sparse Hermitian operators, Krylov propagation and Lanczos eigenpairs.
//!
//! Operators carry ordinary frequencies; propagators take the phase angle
//! `θ = 2π t` so that `exp(-iθH)` is the evolution over time `t`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{inner, norm_sqr};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Anything that can act as `y = H x`.
pub trait Operator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

/// Compressed-row Hermitian (by construction) matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(dim: usize, mut t: Vec<(usize, usize, Complex64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < dim && c < dim, "triplet ({r},{c}) outside dim {dim}");
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != ZERO).collect();
        let mut k = 0;
        let (mut c2, mut v2) = (Vec::new(), Vec::new());
        for i in 0..rows.len() {
            if keep[i] {
                row_ptr[rows[i] + 1] += 1;
                c2.push(cols[i]);
                v2.push(vals[i]);
                k += 1;
            }
        }
        debug_assert_eq!(k, c2.len());
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseMatrix { dim, row_ptr, cols: c2, vals: v2 }
    }

    /// Real diagonal matrix.
    pub fn diagonal(d: &[f64]) -> Self {
        let t = d.iter().enumerate().map(|(i, &x)| (i, i, Complex64::new(x, 0.0))).collect();
        SparseMatrix::from_triplets(d.len(), t)
    }

    pub fn zeros(dim: usize) -> Self {
        SparseMatrix::from_triplets(dim, Vec::new())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => ZERO,
        }
    }

    /// Iterates stored `(row, col, value)` entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim)
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    /// max |H_ij − conj(H_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        self.entries().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SparseMatrix, b: f64) -> SparseMatrix {
        assert_eq!(self.dim, other.dim);
        let t = self
            .entries()
            .map(|(r, c, v)| (r, c, v * a))
            .chain(other.entries().map(|(r, c, v)| (r, c, v * b)))
            .collect();
        SparseMatrix::from_triplets(self.dim, t)
    }

    /// ⟨x|H|x⟩ (real part).
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut y = vec![ZERO; self.dim];
        self.apply(x, &mut y);
        inner(x, &y).re
    }

    /// Upper bound on the spectral radius from row sums.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl Operator for SparseMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yr = acc;
        }
    }
}

/// Linear combination `Σ c_k H_k` evaluated lazily.
pub struct Combination<'a> {
    pub terms: Vec<(f64, &'a SparseMatrix)>,
}

impl Operator for Combination<'_> {
    fn dim(&self) -> usize {
        self.terms[0].1.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for &(c, m) in &self.terms {
            if c == 0.0 {
                continue;
            }
            for (r, yr) in y.iter_mut().enumerate() {
                let mut acc = ZERO;
                for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                    acc += m.vals[k] * x[m.cols[k]];
                }
                *yr += acc * c;
            }
        }
    }
}

/// Settings for the Krylov propagator.
#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    /// Maximum Krylov subspace dimension.
    pub max_dim: usize,
    /// Local error target per accepted step.
    pub tol: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { max_dim: 30, tol: 1e-9 }
    }
}

/// Work counters from a propagation call.
#[derive(Clone, Copy, Debug, Default)]
pub struct KrylovStats {
    pub steps: usize,
    pub matvecs: usize,
}

/// In-place `ψ ← exp(-iθH) ψ` by adaptive Lanczos steps.
pub fn expm_krylov<O: Operator + ?Sized>(
    op: &O,
    psi: &mut [Complex64],
    theta: f64,
    opts: &KrylovOptions,
) -> Result<KrylovStats> {
    let mut stats = KrylovStats::default();
    if theta == 0.0 {
        return Ok(stats);
    }
    let sign = theta.signum();
    let mut remaining = theta.abs();
    // Initial guess from the norm bound keeps the first attempt reasonable.
    let mut h = remaining;
    let n0 = norm_sqr(psi).sqrt();
    let mut halvings = 0usize;
    while remaining > 0.0 {
        let step = h.min(remaining);
        let (out, err, mv, exact) = lanczos_exp(op, psi, sign * step, opts.max_dim)?;
        stats.matvecs += mv;
        if exact || err <= opts.tol * n0.max(1e-300) {
            psi.copy_from_slice(&out);
            remaining -= step;
            stats.steps += 1;
            halvings = 0;
            if !exact && err < 0.1 * opts.tol * n0 {
                h = step * 1.5;
            }
        } else {
            h = step * 0.5;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::Convergence { what: "Krylov propagation", step: stats.steps, residual: err });
            }
        }
    }
    Ok(stats)
}

/// One Lanczos approximation of exp(-iθH)v. Returns (result, error estimate,
/// matvecs, exact) where `exact` flags an invariant subspace.
fn lanczos_exp<O: Operator + ?Sized>(
    op: &O,
    v: &[Complex64],
    theta: f64,
    m_max: usize,
) -> Result<(Vec<Complex64>, f64, usize, bool)> {
    let n = op.dim();
    let beta0 = norm_sqr(v).sqrt();
    if beta0 == 0.0 {
        return Ok((v.to_vec(), 0.0, 0, true));
    }
    let m_max = m_max.min(n).max(1);
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(m_max + 1);
    q.push(v.iter().map(|x| x / beta0).collect());
    let mut alpha = Vec::with_capacity(m_max);
    let mut beta: Vec<f64> = Vec::with_capacity(m_max);
    let mut w = vec![ZERO; n];
    let mut exact = false;
    let mut matvecs = 0;
    for j in 0..m_max {
        op.apply(&q[j], &mut w);
        matvecs += 1;
        let a = inner(&q[j], &w).re;
        alpha.push(a);
        for (wi, qi) in w.iter_mut().zip(&q[j]) {
            *wi -= qi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, qi) in w.iter_mut().zip(&q[j - 1]) {
                *wi -= qi * b;
            }
        }
        // full reorthogonalization: cheap at these subspace sizes
        for qk in &q {
            let c = inner(qk, &w);
            for (wi, qi) in w.iter_mut().zip(qk) {
                *wi -= qi * c;
            }
        }
        let b = norm_sqr(&w).sqrt();
        beta.push(b);
        if b < 1e-12 * (1.0 + a.abs()) {
            exact = true;
            break;
        }
        if j + 1 < m_max {
            q.push(w.iter().map(|x| x / b).collect());
        }
    }
    let m = alpha.len();
    let coeffs = tridiag_expm_e1(&alpha, &beta[..m - 1], theta);
    let err = if exact { 0.0 } else { beta0 * beta[m - 1] * coeffs[m - 1].norm() };
    let mut out = vec![ZERO; n];
    for (c, qk) in coeffs.iter().zip(&q) {
        let c = c * beta0;
        for (o, x) in out.iter_mut().zip(qk) {
            *o += x * c;
        }
    }
    Ok((out, err, matvecs, exact))
}

/// First column of exp(-iθT) for the symmetric tridiagonal T.
fn tridiag_expm_e1(alpha: &[f64], beta: &[f64], theta: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let s = eig.eigenvectors[(0, k)] * eig.eigenvectors[(r, k)];
                    Complex64::from_polar(s, -theta * eig.eigenvalues[k])
                })
                .sum()
        })
        .collect()
}

/// Eigenvalues ascending with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
}

/// Full Hermitian eigendecomposition, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Hermitian eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Largest dimension solved by dense diagonalization.
pub const DENSE_LIMIT: usize = 600;

/// Residual tolerance for returned eigenpairs.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Lowest `k` eigenpairs; dense below [`DENSE_LIMIT`], restarted Lanczos above.
pub fn lowest_eigenpairs(h: &SparseMatrix, k: usize) -> Result<Eigenpairs> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("{k} eigenpairs from dim {n}")));
    }
    if n <= DENSE_LIMIT {
        let (vals, vecs) = hermitian_eigen(&h.to_dense());
        return Ok(Eigenpairs {
            values: vals[..k].to_vec(),
            vectors: (0..k).map(|c| vecs.column(c).iter().copied().collect()).collect(),
        });
    }
    lanczos_lowest(h, k, 400, 30)
}

fn lanczos_lowest(h: &SparseMatrix, k: usize, m_max: usize, restarts: usize) -> Result<Eigenpairs> {
    let n = h.dim();
    let m_max = m_max.min(n);
    // deterministic, generic start vector
    let mut start: Vec<Complex64> =
        (0..n).map(|i| Complex64::new(1.0 + ((i * 7919) % 97) as f64 / 97.0, 0.0)).collect();
    let mut worst = f64::INFINITY;
    let mut w = vec![ZERO; n];
    for round in 0..restarts {
        let s = norm_sqr(&start).sqrt();
        let mut q: Vec<Vec<Complex64>> = vec![start.iter().map(|x| x / s).collect()];
        let mut t = DMatrix::<f64>::zeros(m_max, m_max);
        let mut m = 0;
        for j in 0..m_max {
            h.apply(&q[j], &mut w);
            let a = inner(&q[j], &w).re;
            t[(j, j)] = a;
            for qk in &q {
                let c = inner(qk, &w);
                for (wi, qi) in w.iter_mut().zip(qk) {
                    *wi -= qi * c;
                }
            }
            // second pass keeps orthogonality at machine precision
            for qk in &q {
                let c = inner(qk, &w);
                for (wi, qi) in w.iter_mut().zip(qk) {
                    *wi -= qi * c;
                }
            }
            m = j + 1;
            let b = norm_sqr(&w).sqrt();
            if b < 1e-12 || j + 1 == m_max {
                break;
            }
            t[(j, j + 1)] = b;
            t[(j + 1, j)] = b;
            q.push(w.iter().map(|x| x / b).collect());
        }
        let tm = t.view((0, 0), (m, m)).into_owned();
        let eig = SymmetricEigen::new(tm);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let kk = k.min(m);
        let mut values = Vec::with_capacity(kk);
        let mut vectors = Vec::with_capacity(kk);
        worst = 0.0;
        for &idx in order.iter().take(kk) {
            let y = eig.eigenvectors.column(idx);
            let mut v = vec![ZERO; n];
            for (c, qk) in y.iter().zip(&q) {
                for (o, x) in v.iter_mut().zip(qk) {
                    *o += x * *c;
                }
            }
            let nv = norm_sqr(&v).sqrt();
            v.iter_mut().for_each(|x| *x /= nv);
            let lam = eig.eigenvalues[idx];
            h.apply(&v, &mut w);
            let r = w.iter().zip(&v).map(|(hv, x)| (hv - x * lam).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(r);
            values.push(lam);
            vectors.push(v);
        }
        if worst <= EIGEN_RESIDUAL_TOL && kk == k {
            return Ok(Eigenpairs { values, vectors });
        }
        // restart from a mix of the wanted Ritz vectors
        start = vec![ZERO; n];
        for (i, v) in vectors.iter().enumerate() {
            let c = 1.0 / (1.0 + i as f64 + round as f64 * 0.1);
            for (s, x) in start.iter_mut().zip(v) {
                *s += x * c;
            }
        }
    }
    Err(Error::Convergence { what: "Lanczos eigensolver", step: restarts, residual: worst })
}

/// Dense matrix exponential applied through a precomputed eigenbasis.
#[derive(Clone, Debug)]
pub struct EigenPropagator {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
}

impl EigenPropagator {
    pub fn new(h: &SparseMatrix) -> Self {
        let (values, vectors) = hermitian_eigen(&h.to_dense());
        EigenPropagator { values, vectors }
    }

    /// exp(-iθH) ψ.
    pub fn apply(&self, psi: &[Complex64], theta: f64) -> Vec<Complex64> {
        let v = DVector::from_column_slice(psi);
        let mut c = self.vectors.ad_mul(&v);
        for (ci, &e) in c.iter_mut().zip(&self.values) {
            *ci *= Complex64::from_polar(1.0, -theta * e);
        }
        (&self.vectors * c).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, density: f64, seed: u64) -> SparseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for r in 0..n {
            t.push((r, r, Complex64::new(rng.random_range(-1.0..1.0), 0.0)));
            for c in r + 1..n {
                if rng.random::<f64>() < density {
                    let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    t.push((r, c, v));
                    t.push((c, r, v.conj()));
                }
            }
        }
        SparseMatrix::from_triplets(n, t)
    }

    #[test]
    fn test_triplets_sum_duplicates() {
        let m = SparseMatrix::from_triplets(
            2,
            vec![(0, 1, Complex64::new(1.0, 0.0)), (0, 1, Complex64::new(2.0, 0.0)), (1, 1, Complex64::new(0.0, 0.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), Complex64::new(3.0, 0.0));
    }

    #[test]
    fn test_krylov_matches_dense() {
        let h = random_hermitian(120, 0.05, 3);
        let prop = EigenPropagator::new(&h);
        let mut psi: Vec<Complex64> = (0..120).map(|i| Complex64::new((i as f64).sin(), 0.3)).collect();
        let nn = norm_sqr(&psi).sqrt();
        psi.iter_mut().for_each(|x| *x /= nn);
        let theta = 7.3;
        let want = prop.apply(&psi, theta);
        let mut got = psi.clone();
        expm_krylov(&h, &mut got, theta, &KrylovOptions::default()).unwrap();
        let err: f64 = want.iter().zip(&got).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-8, "err {err}");
        assert!((norm_sqr(&got) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn test_krylov_small_dim_exact() {
        // 2x2 σx: exp(-iθσx)|0> = cosθ|0> - i sinθ|1>
        let h =
            SparseMatrix::from_triplets(2, vec![(0, 1, Complex64::new(1.0, 0.0)), (1, 0, Complex64::new(1.0, 0.0))]);
        let mut psi = vec![Complex64::new(1.0, 0.0), ZERO];
        expm_krylov(&h, &mut psi, 0.4, &KrylovOptions::default()).unwrap();
        assert!((psi[0] - Complex64::new(0.4f64.cos(), 0.0)).norm() < 1e-12);
        assert!((psi[1] - Complex64::new(0.0, -(0.4f64.sin()))).norm() < 1e-12);
    }

    #[test]
    fn test_lanczos_lowest_matches_dense() {
        let h = random_hermitian(700, 0.01, 5);
        let dense = hermitian_eigenvalues(&h.to_dense());
        let ep = lanczos_lowest(&h, 3, 400, 30).unwrap();
        for i in 0..3 {
            assert!((ep.values[i] - dense[i]).abs() < 1e-9, "{i}");
        }
        for i in 0..3 {
            for j in 0..3 {
                let d = inner(&ep.vectors[i], &ep.vectors[j]).norm();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn test_combination_apply() {
        let a = random_hermitian(30, 0.2, 1);
        let b = random_hermitian(30, 0.2, 2);
        let x: Vec<Complex64> = (0..30).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let comb = Combination { terms: vec![(0.5, &a), (-2.0, &b)] };
        let mut y1 = vec![ZERO; 30];
        comb.apply(&x, &mut y1);
        let mut y2 = vec![ZERO; 30];
        a.combine(0.5, &b, -2.0).apply(&x, &mut y2);
        for (u, v) in y1.iter().zip(&y2) {
            assert!((u - v).norm() < 1e-12);
        }
    }
}
