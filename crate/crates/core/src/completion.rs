//! Matrix completion from Bernoulli-sampled entries: low-rank instance
//! generation, selector masks, the rescaled truncated-SVD estimator, and the
//! per-entry error bound.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{truncate_rank, GenMatrix, LinalgError};
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Random n x n matrix of exact rank `r` built from `r` random unit outer
/// products and rescaled so the largest entry magnitude is one.
pub fn low_rank_generator(n: usize, r: usize, rng: &mut RngStream) -> Result<GenMatrix, CompletionError> {
    if r < 1 || r > n {
        return Err(CompletionError::InvalidArgument(format!(
            "rank {r} outside [1, {n}]"
        )));
    }
    let mut x = GenMatrix::zeros(n, n);
    for _ in 0..r {
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        rng.fill_gaussian(&mut u);
        rng.fill_gaussian(&mut v);
        let (nu, nv) = (crate::linalg::norm2(&u), crate::linalg::norm2(&v));
        for i in 0..n {
            for j in 0..n {
                let cur = x.get(i, j);
                x.set(i, j, cur + u[i] / nu * v[j] / nv);
            }
        }
    }
    let max = x.max_abs_entry();
    if max == 0.0 {
        return Err(CompletionError::InvalidArgument("degenerate draw".into()));
    }
    Ok(x.scale(1.0 / max))
}

/// i.i.d. Bernoulli(p) selector mask over the n x n entries, row-major.
pub fn sample_selectors(n: usize, p: f64, rng: &mut RngStream) -> Result<Vec<bool>, CompletionError> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 {
        return Err(CompletionError::InvalidArgument(format!(
            "p = {p} outside (0, 1]"
        )));
    }
    Ok((0..n * n).map(|_| rng.bernoulli(p)).collect())
}

/// True when `p n^2 >= n log n`, the sampling density the analysis needs.
pub fn meets_sampling_condition(n: usize, p: f64) -> bool {
    p * (n * n) as f64 >= n as f64 * (n as f64).ln()
}

/// Best rank-`r` approximation of `Y / p`.
pub fn complete(y: &GenMatrix, p: f64, r: usize) -> Result<GenMatrix, CompletionError> {
    if !(0.0..=1.0).contains(&p) || p == 0.0 {
        return Err(CompletionError::InvalidArgument(format!(
            "p = {p} outside (0, 1]"
        )));
    }
    if r < 1 {
        return Err(CompletionError::InvalidArgument("rank must be >= 1".into()));
    }
    Ok(truncate_rank(&y.scale(1.0 / p), r)?)
}

/// `C log(n) sqrt(r n / m) x_inf`.
pub fn theory_bound(
    n: usize,
    r: usize,
    m: f64,
    x_inf: f64,
    c_const: f64,
) -> Result<f64, CompletionError> {
    if n < 2 {
        return Err(CompletionError::InvalidArgument("need n >= 2".into()));
    }
    if m < 1.0 {
        return Err(CompletionError::InvalidArgument("need m >= 1".into()));
    }
    Ok(c_const * (n as f64).ln() * ((r * n) as f64 / m).sqrt() * x_inf)
}

/// A ground-truth matrix, its selector mask and the derived quantities.
#[derive(Debug, Clone)]
pub struct CompletionInstance {
    pub truth: GenMatrix,
    pub rank_bound: usize,
    pub sample_prob: f64,
    /// Expected observed-entry count m = p n^2.
    pub expected_samples: f64,
    pub selectors: Vec<bool>,
    pub meets_sampling_condition: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompletionResult {
    #[serde(skip)]
    pub estimate: GenMatrix,
    /// (1/n) ||Xhat - X||_F.
    pub per_entry_rmse: f64,
    pub theory_bound: f64,
    pub observed_entries: usize,
}

impl CompletionInstance {
    /// Wraps an explicit truth matrix and draws a fresh mask.
    pub fn sample(
        truth: GenMatrix,
        rank_bound: usize,
        p: f64,
        rng: &mut RngStream,
    ) -> Result<Self, CompletionError> {
        if truth.rows() != truth.cols() {
            return Err(CompletionError::InvalidArgument("matrix must be square".into()));
        }
        let n = truth.rows();
        let selectors = sample_selectors(n, p, rng)?;
        Ok(Self {
            rank_bound,
            sample_prob: p,
            expected_samples: p * (n * n) as f64,
            meets_sampling_condition: meets_sampling_condition(n, p),
            truth,
            selectors,
        })
    }

    /// Random rank-`r` truth with unit max-entry plus a fresh mask.
    pub fn generate(
        n: usize,
        r: usize,
        p: f64,
        rng: &mut RngStream,
    ) -> Result<Self, CompletionError> {
        let truth = low_rank_generator(n, r, rng)?;
        Self::sample(truth, r, p, rng)
    }

    pub fn n(&self) -> usize {
        self.truth.rows()
    }

    /// Y: observed entries kept, hidden entries zeroed.
    pub fn observed(&self) -> GenMatrix {
        let n = self.n();
        let mut y = GenMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if self.selectors[i * n + j] {
                    y.set(i, j, self.truth.get(i, j));
                }
            }
        }
        y
    }

    pub fn observed_count(&self) -> usize {
        self.selectors.iter().filter(|&&b| b).count()
    }

    pub fn solve(&self, c_const: f64) -> Result<CompletionResult, CompletionError> {
        let n = self.n();
        let estimate = complete(&self.observed(), self.sample_prob, self.rank_bound)?;
        let per_entry_rmse = estimate.sub(&self.truth)?.frobenius_norm() / n as f64;
        let bound = theory_bound(
            n,
            self.rank_bound,
            self.expected_samples,
            self.truth.max_abs_entry(),
            c_const,
        )?;
        Ok(CompletionResult {
            estimate,
            per_entry_rmse,
            theory_bound: bound,
            observed_entries: self.observed_count(),
        })
    }

    /// Dense truth matrix and 0/1 mask as two CSV documents.
    pub fn export_csv(&self) -> (String, String) {
        let n = self.n();
        let mut xs = String::new();
        let mut ms = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| format!("{:.17e}", self.truth.get(i, j)))
                .collect();
            xs.push_str(&row.join(","));
            xs.push('\n');
            let mrow: Vec<&str> = (0..n)
                .map(|j| if self.selectors[i * n + j] { "1" } else { "0" })
                .collect();
            ms.push_str(&mrow.join(","));
            ms.push('\n');
        }
        (xs, ms)
    }
}
