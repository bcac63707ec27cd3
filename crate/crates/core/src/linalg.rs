//! Sparse and dense symmetric linear algebra used by the eigensolvers.
//!
//! * [`SparseMatrix`]: CSR storage with full (both triangles) symmetric layout.
//! * [`EnvelopeCholesky`]: profile Cholesky after reverse Cuthill–McKee
//!   reordering. Meshes here are planar, so the envelope stays narrow.
//! * [`tridiagonal_eigen`]: implicit QL on a symmetric tridiagonal matrix.
//! * [`lanczos_shift_invert`] and [`lanczos_dominant`]: Lanczos with full
//!   reorthogonalization.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square sparse matrix in compressed row form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets, summing duplicates. Columns are
    /// sorted within each row so the result is independent of triplet order
    /// up to floating-point summation order of duplicates, which follows the
    /// input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> SparseMatrix {
        let mut counts = vec![0usize; n + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let k = fill[r];
            cols[k] = c;
            vals[k] = v;
            fill[r] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..n {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            // Stable sort keeps the input order among duplicates.
            scratch.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for &(c, v) in &scratch {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch");
        if self.row_ptr == other.row_ptr && self.col_idx == other.col_idx {
            return SparseMatrix {
                n: self.n,
                row_ptr: self.row_ptr.clone(),
                col_idx: self.col_idx.clone(),
                values: self
                    .values
                    .iter()
                    .zip(&other.values)
                    .map(|(a, b)| a + alpha * b)
                    .collect(),
            };
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            t.extend(self.row(i).map(|(j, v)| (i, j, v)));
            t.extend(other.row(i).map(|(j, v)| (i, j, alpha * v)));
        }
        SparseMatrix::from_triplets(self.n, &t)
    }

    /// Dense copy, for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reverse Cuthill–McKee ordering. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n;
    let degree: Vec<usize> = (0..n).map(|i| a.row_ptr[i + 1] - a.row_ptr[i]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_levels = |start: usize| -> (usize, usize) {
        // (eccentricity, farthest node of minimal degree)
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut q = VecDeque::from([start]);
        let mut last = start;
        while let Some(u) = q.pop_front() {
            last = u;
            for (v, _) in a.row(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        let ecc = dist[last];
        let far = (0..n)
            .filter(|&v| dist[v] == ecc)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(last);
        (ecc, far)
    };
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start node.
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start);
        // A few sweeps to the farthest node are enough on mesh graphs.
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        visited[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = a.row(u).map(|(v, _)| v).filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                q.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Cholesky factor in envelope (profile) storage, `P A Pᵀ = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct EnvelopeCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// First stored column of each row (in permuted numbering).
    first: Vec<usize>,
    /// Offsets into `data`; row `i` occupies `data[start[i]..start[i+1]]`
    /// covering columns `first[i]..=i`.
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<EnvelopeCholesky> {
        let n = a.n;
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (c, _) in a.row(old) {
                let cn = inv[c];
                if cn < first[new] {
                    first[new] = cn;
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; start[n]];
        for (new, &old) in perm.iter().enumerate() {
            for (c, v) in a.row(old) {
                let cn = inv[c];
                if cn <= new {
                    data[start[new] + cn - first[new]] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let (ri, rj) = (start[i], start[j]);
                let mut s = data[ri + j - fi];
                for k in k0..j {
                    s -= data[ri + k - fi] * data[rj + k - fj];
                }
                if j < i {
                    data[ri + j - fi] = s / data[rj + j - fj];
                } else {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite(perm[i]));
                    }
                    data[ri + i - fi] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky {
            n,
            perm,
            first,
            start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y' = y
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        // Lᵀ x = y'
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// What [`tridiagonal_eigen`] should accumulate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vectors {
    None,
    /// Only the last component of each eigenvector (Lanczos error bounds).
    LastRow,
    Full,
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` (`e.len() == d.len() - 1`) by implicit QL.
///
/// Returns eigenvalues in ascending order and, depending on `want`, the
/// eigenvectors as columns of a row-major `n × n` array, or only their last
/// components.
pub fn tridiagonal_eigen(d: &[f64], e: &[f64], want: Vectors) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    e.truncate(n);
    let mut z = match want {
        Vectors::None => Vec::new(),
        Vectors::LastRow => {
            let mut z = vec![0.0; n];
            if n > 0 {
                z[n - 1] = 1.0;
            }
            z
        }
        Vectors::Full => {
            let mut z = vec![0.0; n * n];
            for i in 0..n {
                z[i * n + i] = 1.0;
            }
            z
        }
    };
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                match want {
                    Vectors::None => {}
                    Vectors::LastRow => {
                        let fz = z[i + 1];
                        z[i + 1] = s * z[i] + c * fz;
                        z[i] = c * z[i] - s * fz;
                    }
                    Vectors::Full => {
                        for k in 0..n {
                            let fz = z[k * n + i + 1];
                            z[k * n + i + 1] = s * z[k * n + i] + c * fz;
                            z[k * n + i] = c * z[k * n + i] - s * fz;
                        }
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    // Sort ascending.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let vecs = match want {
        Vectors::None => Vec::new(),
        Vectors::LastRow => idx.iter().map(|&i| z[i]).collect(),
        Vectors::Full => {
            let mut out = vec![0.0; n * n];
            for k in 0..n {
                for (newc, &oldc) in idx.iter().enumerate() {
                    out[k * n + newc] = z[k * n + oldc];
                }
            }
            out
        }
    };
    (vals, vecs)
}

/// Orthogonalizes `w` against the columns `basis` in the inner product
/// induced by `weighted` (where `weighted[j]` is the image of `basis[j]`
/// under the Gram operator). Two passes of classical Gram–Schmidt.
fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>], weighted: &[Vec<f64>]) {
    for _ in 0..2 {
        let coeffs: Vec<f64> = weighted.par_iter().map(|mq| dot(mq, w)).collect();
        const CHUNK: usize = 1024;
        w.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let off = ci * CHUNK;
            for (q, &c) in basis.iter().zip(&coeffs) {
                for (k, wk) in chunk.iter_mut().enumerate() {
                    *wk -= c * q[off + k];
                }
            }
        });
    }
}

/// Result of a Lanczos run: eigenvalues with eigenvectors and residuals.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Lanczos options shared by the solvers in this module.
#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Relative residual tolerance for convergence.
    pub tol: f64,
    /// Hard cap on the Krylov dimension (clamped to the problem size).
    pub max_dim: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: 1e-10,
            max_dim: usize::MAX,
            seed: 0x5eed,
        }
    }
}

/// Smallest `k` eigenpairs of `K x = λ M x` (both symmetric, `M` positive
/// definite, `K - σM` positive definite) by shift-invert Lanczos in the
/// `M` inner product. Eigenvectors are `M`-orthonormal and every returned
/// pair satisfies `‖K x - λ M x‖ ≤ residual_tol ‖M x‖`.
pub fn lanczos_shift_invert(
    k_mat: &SparseMatrix,
    m_mat: &SparseMatrix,
    shift: f64,
    k: usize,
    residual_tol: f64,
    opts: LanczosOptions,
) -> Result<EigenPairs> {
    lanczos_shift_invert_deflated(k_mat, m_mat, shift, k, residual_tol, opts, &[])
}

/// As [`lanczos_shift_invert`], with `known` eigenvectors removed from the
/// Krylov space and returned among the pairs. Deflating a null space keeps a
/// shift close to zero from dominating the shift-inverted operator.
pub fn lanczos_shift_invert_deflated(
    k_mat: &SparseMatrix,
    m_mat: &SparseMatrix,
    shift: f64,
    k: usize,
    residual_tol: f64,
    opts: LanczosOptions,
    known: &[Vec<f64>],
) -> Result<EigenPairs> {
    let n = k_mat.n;
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} modes from a problem of dimension {n}"
        )));
    }
    let mut kq: Vec<Vec<f64>> = Vec::new();
    let mut kmq: Vec<Vec<f64>> = Vec::new();
    for v in known {
        let mut x = v.clone();
        reorthogonalize(&mut x, &kq, &kmq);
        let mx = m_mat.mul_vec(&x);
        let s = dot(&x, &mx).sqrt();
        if !(s > 0.0) {
            return Err(Error::InvalidArgument("deflation vectors are dependent".into()));
        }
        kq.push(x.iter().map(|v| v / s).collect());
        kmq.push(mx.iter().map(|v| v / s).collect());
    }
    let known_pairs = {
        let mut values: Vec<f64> = kq.iter().map(|x| k_mat.quad_form(x)).collect();
        let residuals: Vec<f64> = kq
            .iter()
            .zip(&mut values)
            .map(|(x, lam)| pair_residual(k_mat, m_mat, x, *lam))
            .collect();
        EigenPairs {
            values,
            vectors: kq.clone(),
            residuals,
            iterations: 0,
        }
    };
    if k <= kq.len() || kq.len() == n {
        return Ok(merge_pairs(known_pairs, None, k));
    }
    let k_free = k - kq.len();
    let shifted = k_mat.add_scaled(-shift, m_mat);
    let chol = EnvelopeCholesky::factor(&shifted)?;
    let max_dim = opts.max_dim.min(n - kq.len());
    let mut ritz_tol = opts.tol;
    let mut rng = crate::rng::stream(opts.seed, 0);
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut mq: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    reorthogonalize(&mut start, &kq, &kmq);
    let mut mstart = m_mat.mul_vec(&start);
    let s = dot(&start, &mstart).sqrt();
    start.iter_mut().for_each(|v| *v /= s);
    mstart.iter_mut().for_each(|v| *v /= s);
    q.push(start);
    mq.push(mstart);

    let mut next_check = (2 * k_free + 20).min(max_dim);
    loop {
        let j = q.len() - 1;
        // Op = (K - σM)⁻¹ M is self-adjoint in the M inner product.
        let mut w = chol.solve(&mq[j]);
        alpha.push(dot(&mq[j], &w));
        for _ in 0..2 {
            reorthogonalize(&mut w, &kq, &kmq);
            reorthogonalize(&mut w, &q, &mq);
        }
        let mw = m_mat.mul_vec(&w);
        let b = dot(&w, &mw).max(0.0).sqrt();
        let dim = q.len();

        let exhausted = dim >= max_dim;
        if dim >= next_check || exhausted {
            let (theta, last) = tridiagonal_eigen(&alpha, &beta, Vectors::LastRow);
            // Largest θ correspond to smallest λ.
            let lo = theta.len().saturating_sub(k_free);
            let worst = theta[lo..]
                .iter()
                .zip(&last[lo..])
                .map(|(t, l)| (b * l).abs() / t.abs().max(1e-300))
                .fold(0.0, f64::max);
            if (theta.len() >= k_free && worst < ritz_tol) || exhausted {
                let ritz = ritz_pairs(k_mat, m_mat, shift, k_free, &q, &alpha, &beta, dim);
                let pairs = merge_pairs(known_pairs.clone(), Some(ritz), k);
                let converged = pairs.residuals.iter().filter(|&&r| r <= residual_tol).count();
                if converged == k {
                    return Ok(pairs);
                }
                if exhausted {
                    return Err(Error::NonConvergence {
                        requested: k,
                        converged,
                        iterations: dim,
                        residual: pairs.residuals.iter().cloned().fold(0.0, f64::max),
                    });
                }
                ritz_tol *= 1e-2;
            }
            next_check = ((dim as f64 * 1.3) as usize + 10).min(max_dim);
        }

        let scale = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if b > 1e-12 * scale.max(1e-300) {
            let inv = 1.0 / b;
            beta.push(b);
            q.push(w.iter().map(|v| v * inv).collect());
            mq.push(mw.iter().map(|v| v * inv).collect());
        } else {
            // Invariant subspace found; continue from a fresh direction.
            let mut r: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            reorthogonalize(&mut r, &kq, &kmq);
            reorthogonalize(&mut r, &q, &mq);
            let mr = m_mat.mul_vec(&r);
            let s = dot(&r, &mr).sqrt();
            beta.push(0.0);
            q.push(r.iter().map(|v| v / s).collect());
            mq.push(mr.iter().map(|v| v / s).collect());
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn ritz_pairs(
    k_mat: &SparseMatrix,
    m_mat: &SparseMatrix,
    shift: f64,
    k: usize,
    q: &[Vec<f64>],
    alpha: &[f64],
    beta: &[f64],
    dim: usize,
) -> EigenPairs {
    let m = alpha.len();
    let (theta, z) = tridiagonal_eigen(alpha, &beta[..m - 1], Vectors::Full);
    let n = k_mat.n;
    let take = k.min(m);
    let cols: Vec<usize> = (0..take).map(|i| m - 1 - i).collect();
    let vectors: Vec<Vec<f64>> = cols
        .par_iter()
        .map(|&c| {
            let mut x = vec![0.0; n];
            for (j, qj) in q.iter().enumerate().take(m) {
                let coef = z[j * m + c];
                for (xi, qi) in x.iter_mut().zip(qj) {
                    *xi += coef * qi;
                }
            }
            let nx = m_mat.quad_form(&x).sqrt();
            x.iter_mut().for_each(|v| *v /= nx);
            x
        })
        .collect();
    let values: Vec<f64> = cols.iter().map(|&c| shift + 1.0 / theta[c]).collect();
    let residuals: Vec<f64> = vectors
        .par_iter()
        .zip(&values)
        .map(|(x, &lam)| pair_residual(k_mat, m_mat, x, lam))
        .collect();
    let mut order: Vec<usize> = (0..take).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    EigenPairs {
        values: order.iter().map(|&i| values[i]).collect(),
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        vectors: order.iter().map(|&i| vectors[i].clone()).collect(),
        iterations: dim,
    }
}

fn pair_residual(k_mat: &SparseMatrix, m_mat: &SparseMatrix, x: &[f64], lam: f64) -> f64 {
    let kx = k_mat.mul_vec(x);
    let mx = m_mat.mul_vec(x);
    let r: Vec<f64> = kx.iter().zip(&mx).map(|(a, b)| a - lam * b).collect();
    norm(&r) / norm(&mx).max(1e-300)
}

/// The `k` smallest pairs of the union, ascending.
fn merge_pairs(known: EigenPairs, ritz: Option<EigenPairs>, k: usize) -> EigenPairs {
    let iterations = ritz.as_ref().map_or(0, |r| r.iterations);
    let mut all: Vec<(f64, f64, Vec<f64>)> = known
        .values
        .into_iter()
        .zip(known.residuals)
        .zip(known.vectors)
        .map(|((v, r), x)| (v, r, x))
        .collect();
    if let Some(r) = ritz {
        all.extend(
            r.values
                .into_iter()
                .zip(r.residuals)
                .zip(r.vectors)
                .map(|((v, r), x)| (v, r, x)),
        );
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    all.truncate(k);
    EigenPairs {
        values: all.iter().map(|p| p.0).collect(),
        residuals: all.iter().map(|p| p.1).collect(),
        vectors: all.into_iter().map(|p| p.2).collect(),
        iterations,
    }
}

/// Symmetric linear operator given by its action.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

/// Dense symmetric matrix stored row-major.
pub struct DenseSymmetric<'a> {
    pub n: usize,
    pub data: &'a [f64],
}

impl SymmetricOperator for DenseSymmetric<'_> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .par_chunks(self.n)
            .map(|row| dot(row, x))
            .collect()
    }
}

/// The `k` eigenvalues of largest magnitude of a symmetric operator (with
/// eigenvectors), by Lanczos with full reorthogonalization.
pub fn lanczos_dominant<A: SymmetricOperator>(
    op: &A,
    k: usize,
    opts: LanczosOptions,
) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenvalues from a problem of dimension {n}"
        )));
    }
    let max_dim = opts.max_dim.min(n);
    let mut rng = crate::rng::stream(opts.seed, 1);
    let fresh = |rng: &mut rand_chacha::ChaCha8Rng, q: &[Vec<f64>]| -> Vec<f64> {
        let mut r: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        reorthogonalize(&mut r, q, q);
        let s = norm(&r);
        r.iter().map(|v| v / s).collect()
    };
    let mut q: Vec<Vec<f64>> = vec![fresh(&mut rng, &[])];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut next_check = (2 * k + 10).min(max_dim);
    loop {
        let j = q.len() - 1;
        let mut w = op.apply(&q[j]);
        alpha.push(dot(&q[j], &w));
        reorthogonalize(&mut w, &q, &q);
        let b = norm(&w);
        let dim = q.len();
        let exhausted = dim >= max_dim;
        if dim >= next_check || exhausted {
            let (theta, last) = tridiagonal_eigen(&alpha, &beta, Vectors::LastRow);
            let mut idx: Vec<usize> = (0..theta.len()).collect();
            idx.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs()));
            let scale = theta.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(1e-300);
            let worst = idx
                .iter()
                .take(k)
                .map(|&i| (b * last[i]).abs() / scale)
                .fold(0.0, f64::max);
            if (idx.len() >= k && worst < opts.tol) || exhausted {
                let (theta, z) = tridiagonal_eigen(&alpha, &beta, Vectors::Full);
                let m = theta.len();
                let mut idx: Vec<usize> = (0..m).collect();
                idx.sort_by(|&a, &b| {
                    theta[b]
                        .abs()
                        .total_cmp(&theta[a].abs())
                        .then(theta[b].total_cmp(&theta[a]))
                });
                let take = k.min(m);
                let vectors: Vec<Vec<f64>> = idx[..take]
                    .par_iter()
                    .map(|&c| {
                        let mut x = vec![0.0; n];
                        for (jj, qj) in q.iter().enumerate().take(m) {
                            let coef = z[jj * m + c];
                            for (xi, qi) in x.iter_mut().zip(qj) {
                                *xi += coef * qi;
                            }
                        }
                        x
                    })
                    .collect();
                let values: Vec<f64> = idx[..take].iter().map(|&c| theta[c]).collect();
                let residuals: Vec<f64> = vectors
                    .iter()
                    .zip(&values)
                    .map(|(x, &l)| {
                        let ax = op.apply(x);
                        norm(&ax.iter().zip(x).map(|(a, b)| a - l * b).collect::<Vec<_>>()) / scale
                    })
                    .collect();
                return Ok(EigenPairs {
                    values,
                    vectors,
                    residuals,
                    iterations: dim,
                });
            }
            next_check = ((dim as f64 * 1.3) as usize + 10).min(max_dim);
        }
        let scale = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-300);
        if b > 1e-12 * scale {
            beta.push(b);
            q.push(w.iter().map(|v| v / b).collect());
        } else {
            beta.push(0.0);
            let r = fresh(&mut rng, &q);
            q.push(r);
        }
    }
}

/// Full eigen-decomposition of a dense symmetric matrix (ascending).
pub fn dense_symmetric_eigen(n: usize, data: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let m = nalgebra::DMatrix::from_row_slice(n, n, data);
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = idx
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (vals, vecs)
}

/// All-or-most eigenpairs of `K x = λ M x` through a dense Cholesky
/// reduction `L⁻¹ K L⁻ᵀ`. Returns the `k` smallest, `M`-orthonormal.
pub fn dense_generalized_eigen(
    k_mat: &SparseMatrix,
    m_mat: &SparseMatrix,
    k: usize,
    residual_tol: f64,
) -> Result<EigenPairs> {
    let n = k_mat.n;
    let to_dense = |a: &SparseMatrix| {
        let mut d = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for (j, v) in a.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    };
    let chol = nalgebra::Cholesky::new(to_dense(m_mat)).ok_or(Error::NotPositiveDefinite(0))?;
    let l = chol.l();
    let mut c = to_dense(k_mat);
    // c ← L⁻¹ K L⁻ᵀ
    l.solve_lower_triangular_mut(&mut c);
    let mut c = c.transpose();
    l.solve_lower_triangular_mut(&mut c);
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    idx.truncate(k);
    let lt = l.transpose();
    let mut pairs = EigenPairs {
        values: Vec::with_capacity(k),
        vectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        iterations: 0,
    };
    for &i in &idx {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or(Error::NotPositiveDefinite(0))?;
        let x: Vec<f64> = x.iter().copied().collect();
        let lam = eig.eigenvalues[i];
        pairs.residuals.push(pair_residual(k_mat, m_mat, &x, lam));
        pairs.values.push(lam);
        pairs.vectors.push(x);
    }
    let converged = pairs.residuals.iter().filter(|&&r| r <= residual_tol).count();
    if converged < k {
        return Err(Error::NonConvergence {
            requested: k,
            converged,
            iterations: 0,
            residual: pairs.residuals.iter().copied().fold(0.0, f64::max),
        });
    }
    Ok(pairs)
}
