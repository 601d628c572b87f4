//! Dense linear algebra on row-major `f64` storage: symmetric
//! eigendecomposition (cyclic Jacobi), SVD through the Gram matrix,
//! operator/Frobenius norms, rank truncation, matrix functions and the
//! positive-semidefinite partial order.
//!
//! Everything here is deterministic and allocation-simple; matrices at the
//! scales this crate targets (n up to a couple thousand) do not need an
//! external solver.

use thiserror::Error;

/// Relative tolerance used for eigen/SVD residual guarantees.
pub const TOL_EIG: f64 = 1e-9;

/// Jacobi sweep cap. Convergence is quadratic once off-diagonal mass is
/// small; well-formed inputs finish in well under 20 sweeps.
const MAX_SWEEPS: usize = 64;

/// Relative cut below which a squared singular value from the Gram matrix is
/// treated as exactly zero. The Gram route cannot resolve singular values
/// below roughly sqrt(eps) * s_max, so anything under this threshold is
/// numerical noise.
const GRAM_CUT: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("entries must be finite")]
    NonFinite,
    #[error("Jacobi iteration did not converge (off-diagonal residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("stable rank is undefined for the zero matrix")]
    ZeroMatrix,
    #[error("matrix function undefined at eigenvalue {eigenvalue}")]
    FunctionDomain { eigenvalue: f64 },
}

/// Plain dot product of equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm of a slice.
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense symmetric matrix. The constructor symmetrizes by averaging, so the
/// stored entries always satisfy `a[i][j] == a[j][i]` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if n == 0 {
            return Err(LinalgError::InvalidArgument("n must be >= 1".into()));
        }
        if entries.len() != n * n {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let mut e = entries;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (e[i * n + j] + e[j * n + i]);
                e[i * n + j] = avg;
                e[j * n + i] = avg;
            }
        }
        Ok(Self { n, entries: e })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = diag[i];
        }
        m
    }

    /// Builds from a callback evaluated on the upper triangle (i <= j).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.entries[i * n + j] = v;
                m.entries[j * n + i] = v;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub(crate) fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n + j] = v;
        self.entries[j * self.n + i] = v;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entries[i * self.n + i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.entries)
    }

    /// Largest Euclidean row norm, the lower bound on the operator norm.
    pub fn max_row_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| norm2(self.row(i)))
            .fold(0.0, f64::max)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.n != other.n {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} vs {}",
                self.n, other.n
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { n: self.n, entries })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn to_gen(&self) -> GenMatrix {
        GenMatrix {
            m: self.n,
            n: self.n,
            entries: self.entries.clone(),
        }
    }

    /// Operator norm: the largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> Result<f64, LinalgError> {
        let spec = sym_eig(self)?;
        Ok(spec
            .eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(0.0, f64::max))
    }
}

/// Dense general (rectangular) matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GenMatrix {
    m: usize,
    n: usize,
    entries: Vec<f64>,
}

impl GenMatrix {
    pub fn new(m: usize, n: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if m == 0 || n == 0 {
            return Err(LinalgError::InvalidArgument(
                "dimensions must be >= 1".into(),
            ));
        }
        if entries.len() != m * n {
            return Err(LinalgError::DimensionMismatch(format!(
                "expected {} entries, got {}",
                m * n,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { m, n, entries })
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self { m, n, entries: vec![0.0; m * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a.entries[i * n + i] = 1.0;
        }
        a
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        if rows.is_empty() {
            return Err(LinalgError::InvalidArgument("no rows".into()));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::DimensionMismatch(
                "ragged rows".into(),
            ));
        }
        let mut entries = Vec::with_capacity(rows.len() * n);
        for r in rows {
            entries.extend_from_slice(r);
        }
        Self::new(rows.len(), n, entries)
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> GenMatrix {
        let mut t = GenMatrix::zeros(self.n, self.m);
        for i in 0..self.m {
            for j in 0..self.n {
                t.entries[j * self.m + i] = self.entries[i * self.n + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &GenMatrix) -> Result<GenMatrix, LinalgError> {
        if self.n != other.m {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.m, self.n, other.m, other.n
            )));
        }
        let mut out = GenMatrix::zeros(self.m, other.n);
        for i in 0..self.m {
            for k in 0..self.n {
                let aik = self.entries[i * self.n + k];
                if aik == 0.0 {
                    continue;
                }
                let orow = &other.entries[k * other.n..(k + 1) * other.n];
                let dst = &mut out.entries[i * other.n..(i + 1) * other.n];
                for (d, o) in dst.iter_mut().zip(orow) {
                    *d += aik * o;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.m).map(|i| dot(self.row(i), x)).collect()
    }

    /// A^T A as a symmetric n x n matrix.
    pub fn gram(&self) -> SymMatrix {
        let mut g = SymMatrix::zeros(self.n);
        for i in 0..self.m {
            let r = self.row(i);
            for a in 0..self.n {
                if r[a] == 0.0 {
                    continue;
                }
                for b in a..self.n {
                    g.entries[a * self.n + b] += r[a] * r[b];
                }
            }
        }
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                g.entries[b * self.n + a] = g.entries[a * self.n + b];
            }
        }
        g
    }

    /// A A^T as a symmetric m x m matrix.
    pub fn outer_gram(&self) -> SymMatrix {
        SymMatrix::from_fn(self.m, |i, j| dot(self.row(i), self.row(j)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.entries)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.m != other.m || self.n != other.n {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.m, self.n, other.m, other.n
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { m: self.m, n: self.n, entries })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            entries: self.entries.iter().map(|v| alpha * v).collect(),
        }
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> Result<f64, LinalgError> {
        // Work with the smaller Gram matrix; eigenvalues are the squared
        // singular values either way.
        let g = if self.m >= self.n { self.gram() } else { self.outer_gram() };
        let spec = sym_eig(&g)?;
        Ok(spec.eigenvalues[0].max(0.0).sqrt())
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues sorted descending,
/// eigenvectors as orthonormal columns in matching order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: GenMatrix,
}

impl Spectrum {
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }
}

/// Economy SVD: `min(m, n)` singular triplets, singular values non-increasing
/// and non-negative. The sign convention fixes the largest-magnitude entry of
/// each left singular vector to be positive.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    /// m x k, columns are left singular vectors.
    pub u: GenMatrix,
    /// n x k, columns are right singular vectors.
    pub v: GenMatrix,
}

/// Cyclic Jacobi eigendecomposition.
pub fn sym_eig(x: &SymMatrix) -> Result<Spectrum, LinalgError> {
    let n = x.n;
    let mut a = x.entries.clone();
    // vt holds eigenvectors as rows for contiguous rotation updates.
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }

    let fro = norm2(&a);
    let stop = 1e-13 * (1.0 + fro);
    let mut off = off_diagonal_norm(&a, n);
    let mut sweeps = 0;
    while off > stop {
        if sweeps >= MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { residual: off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= stop / (n as f64) {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // standard stable rotation
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // rotate rows p and q (columns follow by symmetry)
                for k in 0..n {
                    let akp = a[p * n + k];
                    let akq = a[q * n + k];
                    a[p * n + k] = c * akp - s * akq;
                    a[q * n + k] = s * akp + c * akq;
                }
                for k in 0..n {
                    a[k * n + p] = a[p * n + k];
                    a[k * n + q] = a[q * n + k];
                }
                a[p * n + p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q * n + q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for k in 0..n {
                    let vp = vt[p * n + k];
                    let vq = vt[q * n + k];
                    vt[p * n + k] = c * vp - s * vq;
                    vt[q * n + k] = s * vp + c * vq;
                }
            }
        }
        off = off_diagonal_norm(&a, n);
        sweeps += 1;
    }

    // sort descending by value, stable in the original index on ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .expect("finite eigenvalues")
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = GenMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, col, vt[src * n + k]);
        }
    }
    Ok(Spectrum { eigenvalues, eigenvectors: vectors })
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += a[i * n + j] * a[i * n + j];
        }
    }
    (2.0 * s).sqrt()
}

/// SVD through the eigendecomposition of the smaller Gram matrix.
///
/// Squared singular values below `GRAM_CUT` relative to the largest are
/// clamped to exact zero; the matching singular vectors are completed to an
/// orthonormal set. Singular values smaller than ~1e-6 of the largest are
/// therefore not resolved, which is inherent to the Gram route.
pub fn svd(a: &GenMatrix) -> Result<SvdResult, LinalgError> {
    let k = a.m.min(a.n);
    let tall = a.m >= a.n;
    let g = if tall { a.gram() } else { a.outer_gram() };
    let spec = sym_eig(&g)?;

    let lmax = spec.eigenvalues[0].max(0.0);
    let cut = GRAM_CUT * lmax;
    let singular_values: Vec<f64> = spec.eigenvalues[..k]
        .iter()
        .map(|&l| if l <= cut { 0.0 } else { l.sqrt() })
        .collect();

    // Eigenvectors of the Gram side give one factor; the other factor is
    // A v / s (or A^T u / s), completed orthonormally where s == 0.
    let gram_side: Vec<Vec<f64>> = (0..k).map(|j| spec.eigenvectors.column(j)).collect();
    let mut other_side: Vec<Vec<f64>> = Vec::with_capacity(k);
    let other_dim = if tall { a.m } else { a.n };
    let at = if tall { None } else { Some(a.transpose()) };
    for j in 0..k {
        if singular_values[j] > 0.0 {
            let img = if tall {
                a.mat_vec(&gram_side[j])
            } else {
                at.as_ref().unwrap().mat_vec(&gram_side[j])
            };
            let inv = 1.0 / singular_values[j];
            other_side.push(img.iter().map(|v| v * inv).collect());
        } else {
            other_side.push(vec![0.0; other_dim]);
        }
    }
    complete_orthonormal(&mut other_side, other_dim);

    let (mut u_cols, mut v_cols) = if tall {
        (other_side, gram_side)
    } else {
        (gram_side, other_side)
    };

    // sign convention: largest-magnitude entry of each left vector positive
    for j in 0..k {
        let (mut imax, mut vmax) = (0usize, 0.0f64);
        for (i, &val) in u_cols[j].iter().enumerate() {
            if val.abs() > vmax {
                vmax = val.abs();
                imax = i;
            }
        }
        if u_cols[j][imax] < 0.0 {
            for v in u_cols[j].iter_mut() {
                *v = -*v;
            }
            for v in v_cols[j].iter_mut() {
                *v = -*v;
            }
        }
    }

    let mut u = GenMatrix::zeros(a.m, k);
    let mut v = GenMatrix::zeros(a.n, k);
    for j in 0..k {
        for i in 0..a.m {
            u.set(i, j, u_cols[j][i]);
        }
        for i in 0..a.n {
            v.set(i, j, v_cols[j][i]);
        }
    }
    Ok(SvdResult { singular_values, u, v })
}

/// Replaces zero placeholder columns with unit vectors orthogonal to all
/// other columns (Gram-Schmidt against the standard basis).
fn complete_orthonormal(cols: &mut [Vec<f64>], dim: usize) {
    for j in 0..cols.len() {
        if norm2(&cols[j]) > 0.5 {
            continue;
        }
        let mut replacement = None;
        for cand in 0..dim {
            let mut w = vec![0.0; dim];
            w[cand] = 1.0;
            for other in cols.iter() {
                let d = dot(other, &w);
                if d != 0.0 {
                    for (wi, oi) in w.iter_mut().zip(other) {
                        *wi -= d * oi;
                    }
                }
            }
            let nw = norm2(&w);
            if nw > 1e-8 {
                for wi in w.iter_mut() {
                    *wi /= nw;
                }
                replacement = Some(w);
                break;
            }
        }
        cols[j] = replacement.expect("orthonormal completion exists");
    }
}

/// Frobenius-to-operator norm ratio squared; errors on the zero matrix.
pub fn stable_rank(a: &GenMatrix) -> Result<f64, LinalgError> {
    let fro = a.frobenius_norm();
    if fro == 0.0 {
        return Err(LinalgError::ZeroMatrix);
    }
    let op = a.operator_norm()?;
    Ok(fro * fro / (op * op))
}

/// Best rank-`r` approximation by truncating the SVD. Ties at the cut keep
/// the earlier index in the sorted order.
pub fn truncate_rank(a: &GenMatrix, r: usize) -> Result<GenMatrix, LinalgError> {
    let k = a.m.min(a.n);
    if r < 1 || r > k {
        return Err(LinalgError::InvalidArgument(format!(
            "rank {} outside [1, {}]",
            r, k
        )));
    }
    let dec = svd(a)?;
    let mut out = GenMatrix::zeros(a.m, a.n);
    for t in 0..r {
        let s = dec.singular_values[t];
        if s == 0.0 {
            continue;
        }
        for i in 0..a.m {
            let us = s * dec.u.get(i, t);
            if us == 0.0 {
                continue;
            }
            for j in 0..a.n {
                let cur = out.get(i, j);
                out.set(i, j, cur + us * dec.v.get(j, t));
            }
        }
    }
    Ok(out)
}

/// Applies a scalar function to the spectrum: f(X) = Q f(L) Q^T.
pub fn matrix_function(
    x: &SymMatrix,
    f: impl Fn(f64) -> f64,
) -> Result<SymMatrix, LinalgError> {
    let spec = sym_eig(x)?;
    let n = x.n;
    let mapped: Vec<f64> = spec.eigenvalues.iter().map(|&l| f(l)).collect();
    if let Some(&bad) = spec
        .eigenvalues
        .iter()
        .zip(&mapped)
        .find(|(_, m)| !m.is_finite())
        .map(|(l, _)| l)
    {
        return Err(LinalgError::FunctionDomain { eigenvalue: bad });
    }
    let mut out = SymMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for t in 0..n {
                acc += mapped[t] * spec.eigenvectors.get(i, t) * spec.eigenvectors.get(j, t);
            }
            out.set_sym(i, j, acc);
        }
    }
    Ok(out)
}

/// Outcome of comparing two symmetric matrices in the PSD order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdOrder {
    Equal,
    /// A - B is positive semidefinite.
    AGeqB,
    /// B - A is positive semidefinite.
    BGeqA,
    /// A - B is indefinite.
    Incomparable,
}

/// Classifies A vs B in the PSD partial order; eigenvalues of A - B with
/// magnitude below `1e-9 * (1 + ||A-B||_F)` count as zero.
pub fn psd_order(a: &SymMatrix, b: &SymMatrix) -> Result<PsdOrder, LinalgError> {
    let d = a.sub(b)?;
    let tol = 1e-9 * (1.0 + d.frobenius_norm());
    let spec = sym_eig(&d)?;
    let max = spec.eigenvalues[0];
    let min = *spec.eigenvalues.last().expect("n >= 1");
    Ok(if max.abs() <= tol && min.abs() <= tol {
        PsdOrder::Equal
    } else if min >= -tol {
        PsdOrder::AGeqB
    } else if max <= tol {
        PsdOrder::BGeqA
    } else {
        PsdOrder::Incomparable
    })
}
