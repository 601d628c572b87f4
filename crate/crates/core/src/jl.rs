//! Random-projection dimension reduction: target-dimension selection,
//! the rescaled projection `P = A / sqrt(m)`, and all-pairs distortion
//! certification over a point set.

use serde::Serialize;
use thiserror::Error;

use crate::ensembles::{sample_matrix, EnsembleSpec};
use crate::linalg::GenMatrix;
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum JlError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("point sets disagree: {0} vs {1} points")]
    PointCountMismatch(usize, usize),
    #[error("duplicate original points at indices {i} and {j}")]
    DuplicatePoints { i: usize, j: usize },
}

pub const DEFAULT_C_JL: f64 = 8.0;

#[derive(Debug, Clone, Serialize)]
pub struct JlConfig {
    /// Distortion budget, in (0, 1).
    pub eps: f64,
    /// Ambient dimension.
    pub n: usize,
    /// Number of points.
    pub num_points: usize,
    /// Oversampling constant in the target-dimension rule.
    pub c_jl: f64,
    pub ensemble: EnsembleSpec,
}

impl JlConfig {
    pub fn new(
        eps: f64,
        n: usize,
        num_points: usize,
        c_jl: f64,
        ensemble: EnsembleSpec,
    ) -> Result<Self, JlError> {
        if !(0.0..1.0).contains(&eps) || eps == 0.0 {
            return Err(JlError::InvalidConfig(format!("eps {eps} outside (0,1)")));
        }
        if num_points < 2 {
            return Err(JlError::InvalidConfig("need at least 2 points".into()));
        }
        if c_jl <= 0.0 {
            return Err(JlError::InvalidConfig("c_jl must be positive".into()));
        }
        Ok(Self { eps, n, num_points, c_jl, ensemble })
    }

    pub fn target_dim(&self) -> usize {
        choose_target_dim(self.eps, self.num_points, self.c_jl)
    }
}

/// `ceil(C eps^-2 ln N)`, at least 1. Natural log; the constant absorbs base
/// changes.
pub fn choose_target_dim(eps: f64, num_points: usize, c_jl: f64) -> usize {
    choose_target_dim_raw(eps, (num_points as f64).ln(), c_jl)
}

/// Same rule with the log supplied directly (unit-case tests pass ln N = 1).
pub fn choose_target_dim_raw(eps: f64, log_num_points: f64, c_jl: f64) -> usize {
    let m = (c_jl * log_num_points / (eps * eps)).ceil();
    (m as usize).max(1)
}

/// Projects each row of `points` by `P = A / sqrt(m)` where `A` is a fresh
/// draw from the ensemble.
pub fn project(
    points: &GenMatrix,
    m: usize,
    ensemble: &EnsembleSpec,
    rng: &mut RngStream,
) -> GenMatrix {
    assert!(m >= 1);
    let a = sample_matrix(ensemble, m, rng);
    project_with(points, &a)
}

/// Projection with an explicitly supplied matrix `A`; the identity test hook
/// passes `A = sqrt(m) I`.
pub fn project_with(points: &GenMatrix, a: &GenMatrix) -> GenMatrix {
    let m = a.rows();
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = GenMatrix::zeros(points.rows(), m);
    for i in 0..points.rows() {
        let x = points.row(i);
        for r in 0..m {
            out.set(i, r, scale * crate::linalg::dot(a.row(r), x));
        }
    }
    out
}

/// All-pairs distortion summary. Raw extreme ratios are kept alongside the
/// clipped expansion/contraction values.
#[derive(Debug, Clone, Serialize)]
pub struct DistortionReport {
    /// max(ratio) - 1, clipped at zero.
    pub max_expand: f64,
    /// 1 - min(ratio), clipped at zero.
    pub max_contract: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pairs_checked: usize,
}

impl DistortionReport {
    /// True when every pair distance is preserved within `eps`.
    pub fn within(&self, eps: f64) -> bool {
        self.max_expand <= eps && self.max_contract <= eps
    }
}

/// Compares embedded to original pairwise distances. Duplicate original
/// points are an error (the normalized difference is undefined for them).
pub fn distortion_audit(
    original: &GenMatrix,
    embedded: &GenMatrix,
) -> Result<DistortionReport, JlError> {
    if original.rows() != embedded.rows() {
        return Err(JlError::PointCountMismatch(original.rows(), embedded.rows()));
    }
    let n_pts = original.rows();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    let mut pairs = 0usize;
    for i in 0..n_pts {
        for j in (i + 1)..n_pts {
            let d0 = row_distance(original, i, j);
            if d0 == 0.0 {
                return Err(JlError::DuplicatePoints { i, j });
            }
            let d1 = row_distance(embedded, i, j);
            let ratio = d1 / d0;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            pairs += 1;
        }
    }
    Ok(DistortionReport {
        max_expand: (max_ratio - 1.0).max(0.0),
        max_contract: (1.0 - min_ratio).max(0.0),
        min_ratio,
        max_ratio,
        pairs_checked: pairs,
    })
}

fn row_distance(points: &GenMatrix, i: usize, j: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(points.row(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
