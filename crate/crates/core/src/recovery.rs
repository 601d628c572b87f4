//! Underdetermined linear recovery by l1 minimization: a deterministic
//! two-phase simplex (Bland's rule) on the nonnegative-split program
//! `min 1'u + 1'v s.t. A(u - v) = y, u, v >= 0`, an exhaustive
//! support-enumeration oracle for small instances, Minkowski-functional
//! recovery over scaled l1 balls, and the sparse-signal experiment harness.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ensembles::{sample_matrix, EnsembleSpec};
use crate::geometry::{LpExponent, SetDescriptor};
use crate::linalg::{dot, norm2, GenMatrix, LinalgError};
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("measurement matrix is rank deficient (rank {rank} < m = {m})")]
    RankDeficient { rank: usize, m: usize },
    #[error("oracle limited to n <= {limit}, got {got}")]
    OracleTooLarge { limit: usize, got: usize },
    #[error("unsupported constraint set: {0}")]
    UnsupportedSet(String),
    #[error("simplex pivot became unbounded; the l1 objective cannot do this on consistent data")]
    Unbounded,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `y = A x` with `m <= n`; the optional truth vector is only used for
/// scoring and must reproduce `y`.
#[derive(Debug, Clone)]
pub struct RecoveryProblem {
    pub a: GenMatrix,
    pub y: Vec<f64>,
    pub truth: Option<Vec<f64>>,
    pub k_set: Option<SetDescriptor>,
}

impl RecoveryProblem {
    pub fn new(a: GenMatrix, y: Vec<f64>) -> Result<Self, RecoveryError> {
        if y.len() != a.rows() {
            return Err(RecoveryError::InvalidArgument(format!(
                "y has length {}, A has {} rows",
                y.len(),
                a.rows()
            )));
        }
        if a.rows() > a.cols() {
            return Err(RecoveryError::InvalidArgument(format!(
                "need m <= n, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        Ok(Self { a, y, truth: None, k_set: None })
    }

    pub fn with_truth(mut self, x: Vec<f64>) -> Result<Self, RecoveryError> {
        if x.len() != self.a.cols() {
            return Err(RecoveryError::InvalidArgument("truth dimension mismatch".into()));
        }
        let image = self.a.mat_vec(&x);
        let res: f64 = image
            .iter()
            .zip(&self.y)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt();
        if res > 1e-10 * (1.0 + norm2(&self.y)) {
            return Err(RecoveryError::InvalidArgument(format!(
                "truth does not reproduce y (residual {res:.3e})"
            )));
        }
        self.truth = Some(x);
        Ok(self)
    }

    pub fn with_constraint_set(mut self, k: SetDescriptor) -> Self {
        self.k_set = Some(k);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, Serialize)]
pub struct BpSolution {
    pub x_hat: Vec<f64>,
    /// l1 norm of `x_hat`.
    pub objective: f64,
    /// `||A x_hat - y||_2`.
    pub residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Dual certificate: `||A' nu||_inf <= 1 + 1e-8` and `nu' y` within
    /// `tol_obj` of the objective whenever the status is optimal.
    pub dual: Option<Vec<f64>>,
    /// Set when the dual certificate is tight off the support, signalling
    /// multiple l1 minimizers.
    pub non_unique: bool,
}

const PIVOT_TOL: f64 = 1e-9;
const REDUCED_COST_TOL: f64 = 1e-9;

struct SimplexOutcome {
    solution: Vec<f64>,
    dual: Option<Vec<f64>>,
    iterations: usize,
    feasible: bool,
    hit_cap: bool,
}

/// Two-phase dense tableau simplex with Bland's rule, minimizing `c' z`
/// subject to `M z = b, z >= 0`. Artificial columns stay in the tableau so
/// the duals can be read back out.
fn simplex_min(
    m_rows: usize,
    n_cols: usize,
    matrix: &[f64],
    b: &[f64],
    costs: &[f64],
    max_iter: usize,
) -> Result<SimplexOutcome, RecoveryError> {
    let width = n_cols + m_rows + 1;
    let rhs_col = n_cols + m_rows;
    let mut t = vec![0.0; m_rows * width];
    let flips: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    for i in 0..m_rows {
        for j in 0..n_cols {
            t[i * width + j] = flips[i] * matrix[i * n_cols + j];
        }
        t[i * width + n_cols + i] = 1.0;
        t[i * width + rhs_col] = flips[i] * b[i];
    }
    let mut basis: Vec<usize> = (0..m_rows).map(|i| n_cols + i).collect();
    let mut row_alive = vec![true; m_rows];
    let mut iterations = 0usize;

    let b_norm = norm2(b);
    let feas_tol = 1e-9 * (1.0 + b_norm);

    // phase 1: minimize the artificial sum
    let phase1_cost = |j: usize| if j >= n_cols { 1.0 } else { 0.0 };
    let mut hit_cap = !run_phase(
        &mut t,
        &mut basis,
        &row_alive,
        m_rows,
        width,
        rhs_col,
        &phase1_cost,
        n_cols + m_rows, // artificials may enter in phase 1
        max_iter,
        &mut iterations,
        Some(feas_tol),
    )?;

    let phase1_value: f64 = basis
        .iter()
        .enumerate()
        .filter(|(i, _)| row_alive[*i])
        .map(|(i, &bj)| phase1_cost(bj) * t[i * width + rhs_col])
        .sum();
    if phase1_value > feas_tol {
        return Ok(SimplexOutcome {
            solution: vec![0.0; n_cols],
            dual: None,
            iterations,
            feasible: false,
            hit_cap,
        });
    }

    // drive remaining artificials out of the basis; rows that cannot pivot
    // are redundant constraints and get deactivated
    let mut dropped_rows = false;
    for i in 0..m_rows {
        if !row_alive[i] || basis[i] < n_cols {
            continue;
        }
        let mut pivot_col = None;
        for j in 0..n_cols {
            if t[i * width + j].abs() > PIVOT_TOL {
                pivot_col = Some(j);
                break;
            }
        }
        match pivot_col {
            Some(j) => {
                pivot(&mut t, &mut basis, &row_alive, m_rows, width, i, j);
                iterations += 1;
            }
            None => {
                row_alive[i] = false;
                dropped_rows = true;
            }
        }
    }

    // phase 2: the real objective (zero on the artificials, which are also
    // barred from entering)
    if !hit_cap {
        hit_cap = !run_phase(
            &mut t,
            &mut basis,
            &row_alive,
            m_rows,
            width,
            rhs_col,
            &|j: usize| if j < n_cols { costs[j] } else { 0.0 },
            n_cols,
            max_iter,
            &mut iterations,
            None,
        )?;
    }

    let mut solution = vec![0.0; n_cols];
    for i in 0..m_rows {
        if row_alive[i] && basis[i] < n_cols {
            solution[basis[i]] = t[i * width + rhs_col];
        }
    }
    // duals from the artificial columns: nu' = c_B' B^{-1}, mapped back
    // through the row sign flips to the original constraint orientation
    let dual = if dropped_rows {
        None
    } else {
        let mut nu = vec![0.0; m_rows];
        for (col, slot) in nu.iter_mut().enumerate() {
            let working: f64 = (0..m_rows)
                .filter(|&i| row_alive[i])
                .map(|i| costs.get(basis[i]).copied().unwrap_or(0.0) * t[i * width + n_cols + col])
                .sum();
            *slot = flips[col] * working;
        }
        Some(nu)
    };

    Ok(SimplexOutcome { solution, dual, iterations, feasible: true, hit_cap })
}

/// Runs Bland-rule pivots until no reduced cost is negative (returns true)
/// or the iteration cap is hit (returns false). `enter_limit` bounds the
/// highest column index allowed to enter. The reduced-cost row is maintained
/// incrementally like any other tableau row; final residuals and duals are
/// recomputed from scratch by the callers, so drift here cannot silently
/// corrupt a certified answer.
#[allow(clippy::too_many_arguments)]
fn run_phase(
    t: &mut [f64],
    basis: &mut [usize],
    row_alive: &[bool],
    m_rows: usize,
    width: usize,
    rhs_col: usize,
    cost: &dyn Fn(usize) -> f64,
    enter_limit: usize,
    max_iter: usize,
    iterations: &mut usize,
    stop_at_value: Option<f64>,
) -> Result<bool, RecoveryError> {
    // obj_row[j] = c_j - c_B' B^{-1} A_j; obj_row[rhs] = -(current value)
    let mut obj_row = vec![0.0; width];
    for (j, slot) in obj_row.iter_mut().enumerate().take(width - 1) {
        *slot = cost(j);
    }
    for i in 0..m_rows {
        if !row_alive[i] {
            continue;
        }
        let cb = cost(basis[i]);
        if cb != 0.0 {
            for (slot, &tv) in obj_row.iter_mut().zip(&t[i * width..(i + 1) * width]) {
                *slot -= cb * tv;
            }
        }
    }

    loop {
        if let Some(threshold) = stop_at_value {
            if -obj_row[rhs_col] <= threshold {
                return Ok(true);
            }
        }
        if *iterations >= max_iter {
            return Ok(false);
        }
        let Some(q) = obj_row[..enter_limit]
            .iter()
            .position(|&r| r < -REDUCED_COST_TOL)
        else {
            return Ok(true);
        };

        // ratio test, Bland tie-break on the basic variable index
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m_rows {
            if !row_alive[i] {
                continue;
            }
            let piv = t[i * width + q];
            if piv > PIVOT_TOL {
                let ratio = t[i * width + rhs_col] / piv;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((best_i, best_ratio)) => {
                        if ratio < best_ratio - PIVOT_TOL
                            || ((ratio - best_ratio).abs() <= PIVOT_TOL
                                && basis[i] < basis[best_i])
                        {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((r, _)) = leave else {
            return Err(RecoveryError::Unbounded);
        };
        pivot(t, basis, row_alive, m_rows, width, r, q);
        let factor = obj_row[q];
        if factor != 0.0 {
            for (slot, &tv) in obj_row.iter_mut().zip(&t[r * width..(r + 1) * width]) {
                *slot -= factor * tv;
            }
            obj_row[q] = 0.0;
        }
        *iterations += 1;
    }
}

fn pivot(
    t: &mut [f64],
    basis: &mut [usize],
    row_alive: &[bool],
    m_rows: usize,
    width: usize,
    row: usize,
    col: usize,
) {
    let piv = t[row * width + col];
    debug_assert!(piv.abs() > 0.0);
    let inv = 1.0 / piv;
    for j in 0..width {
        t[row * width + j] *= inv;
    }
    for i in 0..m_rows {
        if i == row || !row_alive[i] {
            continue;
        }
        let factor = t[i * width + col];
        if factor == 0.0 {
            continue;
        }
        for j in 0..width {
            t[i * width + j] -= factor * t[row * width + j];
        }
        t[i * width + col] = 0.0; // exact zero against drift
    }
    basis[row] = col;
}

/// Row rank by Gaussian elimination with partial pivoting.
fn matrix_rank(a: &GenMatrix) -> usize {
    let (m, n) = (a.rows(), a.cols());
    let mut w: Vec<f64> = a.entries().to_vec();
    let scale = a.max_abs_entry().max(1e-300);
    let tol = 1e-10 * scale;
    let mut rank = 0;
    let mut row = 0;
    for col in 0..n {
        if row >= m {
            break;
        }
        let (mut best, mut best_val) = (row, w[row * n + col].abs());
        for i in (row + 1)..m {
            if w[i * n + col].abs() > best_val {
                best = i;
                best_val = w[i * n + col].abs();
            }
        }
        if best_val <= tol {
            continue;
        }
        if best != row {
            for j in 0..n {
                w.swap(row * n + j, best * n + j);
            }
        }
        for i in (row + 1)..m {
            let f = w[i * n + col] / w[row * n + col];
            if f != 0.0 {
                for j in col..n {
                    w[i * n + j] -= f * w[row * n + j];
                }
            }
        }
        row += 1;
        rank += 1;
    }
    rank
}

fn feasibility_tol(y: &[f64]) -> f64 {
    1e-8 * (1.0 + norm2(y))
}

/// Solves `min ||x||_1 s.t. A x = y` by the split simplex. Requires `A` to
/// have full row rank.
pub fn basis_pursuit(problem: &RecoveryProblem) -> Result<BpSolution, RecoveryError> {
    let a = &problem.a;
    let (m, n) = (a.rows(), a.cols());
    let rank = matrix_rank(a);
    if rank < m {
        return Err(RecoveryError::RankDeficient { rank, m });
    }

    // split form: M = [A, -A], 2n structural columns
    let mut split = vec![0.0; m * 2 * n];
    for i in 0..m {
        for j in 0..n {
            let v = a.get(i, j);
            split[i * 2 * n + j] = v;
            split[i * 2 * n + n + j] = -v;
        }
    }
    let costs = vec![1.0; 2 * n];
    let max_iter = 50 * (2 * n + m) + 1000;
    let out = simplex_min(m, 2 * n, &split, &problem.y, &costs, max_iter)?;

    if !out.feasible {
        return Ok(BpSolution {
            x_hat: vec![0.0; n],
            objective: 0.0,
            residual: norm2(&problem.y),
            iterations: out.iterations,
            status: SolveStatus::Infeasible,
            dual: None,
            non_unique: false,
        });
    }

    let x_hat: Vec<f64> = (0..n).map(|j| out.solution[j] - out.solution[n + j]).collect();
    let objective: f64 = x_hat.iter().map(|v| v.abs()).sum();
    let image = a.mat_vec(&x_hat);
    let residual = image
        .iter()
        .zip(&problem.y)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();

    let tol_feas = feasibility_tol(&problem.y);
    let tol_obj = 1e-6 * (1.0 + objective);
    let mut status = if out.hit_cap { SolveStatus::MaxIter } else { SolveStatus::Optimal };
    let mut non_unique = false;
    let dual = out.dual;

    if status == SolveStatus::Optimal {
        let certified = match &dual {
            Some(nu) => {
                let at_nu: Vec<f64> = (0..n).map(|j| dot(&a.column(j), nu)).collect();
                let linf = at_nu.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let gap_ok = dot(nu, &problem.y) >= objective - tol_obj;
                if linf <= 1.0 + 1e-8 && gap_ok {
                    non_unique = x_hat
                        .iter()
                        .zip(&at_nu)
                        .any(|(&xj, &aj)| xj == 0.0 && aj.abs() >= 1.0 - 1e-8);
                    true
                } else {
                    false
                }
            }
            None => false,
        };
        if residual > tol_feas || !certified {
            status = SolveStatus::MaxIter;
        }
    }

    Ok(BpSolution {
        x_hat,
        objective,
        residual,
        iterations: out.iterations,
        status,
        dual,
        non_unique,
    })
}

const ORACLE_DIM_LIMIT: usize = 14;

/// Exact l1 minimizer by enumerating candidate supports of size up to
/// min(m, n); every vertex of the feasible polyhedron is supported on a set
/// of linearly independent columns, so the scan is exhaustive.
pub fn lp_oracle_small(problem: &RecoveryProblem) -> Result<BpSolution, RecoveryError> {
    let a = &problem.a;
    let (m, n) = (a.rows(), a.cols());
    if n > ORACLE_DIM_LIMIT {
        return Err(RecoveryError::OracleTooLarge { limit: ORACLE_DIM_LIMIT, got: n });
    }
    let y = &problem.y;
    let tol = feasibility_tol(y);

    let mut best: Option<(f64, Vec<f64>)> = None;
    // empty support
    if norm2(y) <= tol {
        best = Some((0.0, vec![0.0; n]));
    }
    let max_k = m.min(n);
    let mut support = Vec::new();
    for k in 1..=max_k {
        enumerate_supports(n, k, &mut support, &mut |s| {
            if let Some(x_s) = least_squares_on_support(a, y, s, tol) {
                let x_full = {
                    let mut x = vec![0.0; n];
                    for (slot, &j) in s.iter().enumerate() {
                        x[j] = x_s[slot];
                    }
                    x
                };
                let obj: f64 = x_full.iter().map(|v| v.abs()).sum();
                if best.as_ref().is_none_or(|(b, _)| obj < b - 1e-12) {
                    best = Some((obj, x_full));
                }
            }
        });
    }

    match best {
        Some((objective, x_hat)) => {
            let image = a.mat_vec(&x_hat);
            let residual = image
                .iter()
                .zip(y)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            Ok(BpSolution {
                x_hat,
                objective,
                residual,
                iterations: 0,
                status: SolveStatus::Optimal,
                dual: None,
                non_unique: false,
            })
        }
        None => Ok(BpSolution {
            x_hat: vec![0.0; n],
            objective: 0.0,
            residual: norm2(y),
            iterations: 0,
            status: SolveStatus::Infeasible,
            dual: None,
            non_unique: false,
        }),
    }
}

fn enumerate_supports(n: usize, k: usize, scratch: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    let start = scratch.last().map_or(0, |&v| v + 1);
    if scratch.len() == k {
        f(scratch);
        return;
    }
    for j in start..n {
        scratch.push(j);
        enumerate_supports(n, k, scratch, f);
        scratch.pop();
    }
}

/// Least squares on the chosen columns via the normal equations; `None` when
/// the columns are dependent or the residual exceeds `tol`.
fn least_squares_on_support(a: &GenMatrix, y: &[f64], s: &[usize], tol: f64) -> Option<Vec<f64>> {
    let k = s.len();
    let m = a.rows();
    let cols: Vec<Vec<f64>> = s.iter().map(|&j| a.column(j)).collect();
    let mut g = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = dot(&cols[i], &cols[j]);
        }
        rhs[i] = dot(&cols[i], y);
    }
    let x = solve_dense(&mut g, &mut rhs, k)?;
    let mut res = 0.0f64;
    for r in 0..m {
        let mut acc = 0.0;
        for (slot, col) in cols.iter().enumerate() {
            acc += col[r] * x[slot];
        }
        res += (acc - y[r]) * (acc - y[r]);
    }
    (res.sqrt() <= tol).then_some(x)
}

/// In-place Gaussian elimination with partial pivoting; `None` on a
/// numerically singular system.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    for col in 0..n {
        let mut best = col;
        for i in (col + 1)..n {
            if a[i * n + col].abs() > a[best * n + col].abs() {
                best = i;
            }
        }
        if a[best * n + col].abs() <= 1e-12 * scale {
            return None;
        }
        if best != col {
            for j in 0..n {
                a.swap(col * n + j, best * n + j);
            }
            b.swap(col, best);
        }
        for i in (col + 1)..n {
            let f = a[i * n + col] / a[col * n + col];
            if f != 0.0 {
                for j in col..n {
                    a[i * n + j] -= f * a[col * n + j];
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in (i + 1)..n {
            acc -= a[i * n + j] * x[j];
        }
        x[i] = acc / a[i * n + i];
    }
    Some(x)
}

/// Total scale of a (possibly nested) positive multiple of the unit l1 ball.
fn scaled_l1_radius(k: &SetDescriptor) -> Option<f64> {
    match k {
        SetDescriptor::LpBall { p: LpExponent::One, radius, .. } => Some(*radius),
        SetDescriptor::Scaled { inner, alpha } => scaled_l1_radius(inner).map(|r| alpha * r),
        _ => None,
    }
}

/// Minimizes the Minkowski functional of `K` over the affine solution set.
/// `K` must be a positive multiple of the l1 ball, for which the minimizer
/// coincides with basis pursuit (the objective is a positive multiple of the
/// l1 norm).
pub fn minkowski_recovery(problem: &RecoveryProblem) -> Result<BpSolution, RecoveryError> {
    let k = problem
        .k_set
        .as_ref()
        .ok_or_else(|| RecoveryError::UnsupportedSet("no constraint set given".into()))?;
    if scaled_l1_radius(k).is_none() {
        return Err(RecoveryError::UnsupportedSet(
            "only positive multiples of the l1 ball are supported".into(),
        ));
    }
    basis_pursuit(problem)
}

#[derive(Debug, Clone, Serialize)]
pub struct SparseReport {
    pub n: usize,
    pub sparsity: usize,
    pub m_requested: usize,
    pub m_used: usize,
    /// Set when `m` had to be capped at n - 1.
    pub m_capped: bool,
    pub trials: usize,
    pub mean_error: f64,
    /// `C sqrt(s log n / m) ||x||_2`.
    pub theory_curve: f64,
    /// Fraction of trials with `||xhat - x|| <= 1e-6`.
    pub exact_recovery_rate: f64,
    pub per_trial_error: Vec<f64>,
    /// `||x||_0` of the planted signals.
    pub signal_l0: usize,
    /// `||x||_1 <= sqrt(s) ||x||_2` held on every trial.
    pub cauchy_schwarz_ok: bool,
}

pub const EXACT_RECOVERY_TOL: f64 = 1e-6;

/// Plants unit-norm `s`-sparse signals (random support, entries
/// +-1/sqrt(s)), measures with ensemble rows, solves basis pursuit and
/// reports the error against the theory curve.
pub fn sparse_experiment(
    n: usize,
    sparsity: usize,
    m: usize,
    ensemble: &EnsembleSpec,
    trials: usize,
    rng: &RngStream,
    c_const: f64,
) -> Result<SparseReport, RecoveryError> {
    if ensemble.n != n {
        return Err(RecoveryError::InvalidArgument(
            "ensemble dimension must match n".into(),
        ));
    }
    if sparsity > m.min(n) {
        return Err(RecoveryError::InvalidArgument(format!(
            "need s <= m and s <= n, got s={sparsity}, m={m}, n={n}"
        )));
    }
    if trials < 1 {
        return Err(RecoveryError::InvalidArgument("need at least one trial".into()));
    }
    let m_capped = m >= n;
    let m_used = if m_capped { n - 1 } else { m };

    let results: Result<Vec<(f64, bool)>, RecoveryError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut stream = rng.split(trial as u64);
            let x = plant_sparse_signal(n, sparsity, &mut stream);
            let a = sample_matrix(ensemble, m_used, &mut stream);
            let y = a.mat_vec(&x);
            let problem = RecoveryProblem::new(a, y)?;
            let sol = basis_pursuit(&problem)?;
            let err = sol
                .x_hat
                .iter()
                .zip(&x)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            let cs_ok = {
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                l1 <= (sparsity.max(1) as f64).sqrt() * norm2(&x) + 1e-12
            };
            Ok((err, cs_ok))
        })
        .collect();
    let results = results?;

    let mean_error = results.iter().map(|r| r.0).sum::<f64>() / trials as f64;
    let exact = results.iter().filter(|r| r.0 <= EXACT_RECOVERY_TOL).count();
    let signal_norm = if sparsity == 0 { 0.0 } else { 1.0 };
    let theory_curve = c_const
        * ((sparsity as f64 * (n as f64).ln() / m_used as f64).sqrt())
        * signal_norm;

    Ok(SparseReport {
        n,
        sparsity,
        m_requested: m,
        m_used,
        m_capped,
        trials,
        mean_error,
        theory_curve,
        exact_recovery_rate: exact as f64 / trials as f64,
        per_trial_error: results.iter().map(|r| r.0).collect(),
        signal_l0: sparsity,
        cauchy_schwarz_ok: results.iter().all(|r| r.1),
    })
}

/// Unit-norm signal with `s` random support positions carrying +-1/sqrt(s).
pub fn plant_sparse_signal(n: usize, s: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut x = vec![0.0; n];
    if s == 0 {
        return x;
    }
    // partial Fisher-Yates for the support
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = i + rng.below((n - i) as u64) as usize;
        idx.swap(i, j);
    }
    let mag = 1.0 / (s as f64).sqrt();
    for &j in &idx[..s] {
        x[j] = rng.sign() * mag;
    }
    x
}

/// Number of exactly-zero-free coordinates.
pub fn l0_norm(x: &[f64]) -> usize {
    x.iter().filter(|&&v| v != 0.0).count()
}

/// l0 with a magnitude threshold, for inputs that went through inexact
/// arithmetic.
pub fn l0_norm_with_threshold(x: &[f64], threshold: f64) -> usize {
    x.iter().filter(|&&v| v.abs() > threshold).count()
}
