//! Closed-form tail-bound evaluators (Hoeffding, Bernstein, bounded
//! Bernstein, matrix Bernstein and the matrix expectation bound), a
//! Monte-Carlo empirical tail with exact binomial upper confidence, and the
//! audit that certifies `bound >= empirical upper confidence` on a grid.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("t must be non-negative, got {0}")]
    NegativeT(f64),
    #[error("{0} norms must be provided")]
    EmptyNorms(&'static str),
    #[error("matrix dimension must be >= {needed}, got {got}")]
    DimTooSmall { needed: usize, got: usize },
    #[error("need at least {needed} trials, got {got}")]
    TooFewTrials { needed: usize, got: usize },
}

/// Default exponent constant `c` for the Hoeffding/Bernstein families.
pub const DEFAULT_C_EXPONENT: f64 = 0.25;
/// Default prefactor for the bounded Bernstein denominator, matching the
/// matrix inequality's `K t / 3` term in the scalar case.
pub const DEFAULT_BOUNDED_PREFACTOR: f64 = 1.0 / 3.0;
/// Default prefactor for the expectation bound.
pub const DEFAULT_EXPECTATION_PREFACTOR: f64 = 2.0;

/// Parameters shared by the bound evaluators. Constructors fill the fields
/// relevant to one family and set that family's default constants; every
/// constant stays overridable through the builder methods.
#[derive(Debug, Clone, Serialize)]
pub struct BoundParams {
    pub psi2_norms: Vec<f64>,
    pub psi1_norms: Vec<f64>,
    /// Variance proxy sigma^2.
    pub sigma2: f64,
    /// Almost-sure bound (or max psi-norm) K.
    pub k_bound: f64,
    /// Matrix dimension n.
    pub dim_n: usize,
    /// Exponent constant c.
    pub c_exponent: f64,
    /// Prefactor constant C.
    pub c_prefactor: f64,
}

impl BoundParams {
    fn base() -> Self {
        Self {
            psi2_norms: Vec::new(),
            psi1_norms: Vec::new(),
            sigma2: 0.0,
            k_bound: 0.0,
            dim_n: 1,
            c_exponent: DEFAULT_C_EXPONENT,
            c_prefactor: DEFAULT_BOUNDED_PREFACTOR,
        }
    }

    pub fn hoeffding(psi2_norms: Vec<f64>) -> Self {
        Self { psi2_norms, ..Self::base() }
    }

    pub fn bernstein(psi1_norms: Vec<f64>) -> Self {
        Self { psi1_norms, ..Self::base() }
    }

    pub fn bounded(sigma2: f64, k_bound: f64) -> Self {
        Self { sigma2, k_bound, ..Self::base() }
    }

    pub fn matrix_bernstein(dim_n: usize, sigma2: f64, k_bound: f64) -> Self {
        Self { dim_n, sigma2, k_bound, ..Self::base() }
    }

    pub fn expectation(dim_n: usize, sigma2: f64, k_bound: f64) -> Self {
        Self {
            dim_n,
            sigma2,
            k_bound,
            c_prefactor: DEFAULT_EXPECTATION_PREFACTOR,
            ..Self::base()
        }
    }

    pub fn with_c_exponent(mut self, c: f64) -> Self {
        self.c_exponent = c;
        self
    }

    pub fn with_c_prefactor(mut self, c: f64) -> Self {
        self.c_prefactor = c;
        self
    }
}

fn clip_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// `min(1, 2 exp(-c t^2 / sum_i psi2_i^2))`.
pub fn hoeffding_bound(params: &BoundParams, t: f64) -> Result<f64, BoundsError> {
    if t < 0.0 {
        return Err(BoundsError::NegativeT(t));
    }
    if params.psi2_norms.is_empty() {
        return Err(BoundsError::EmptyNorms("psi2"));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let denom: f64 = params.psi2_norms.iter().map(|k| k * k).sum();
    // denom == 0 means all-zero summands: the tail is empty for t > 0
    let expo = params.c_exponent * t * t / denom;
    Ok(clip_probability(2.0 * (-expo).exp()))
}

/// `min(1, 2 exp(-c min(t^2 / sum psi1^2, t / max psi1)))`.
pub fn bernstein_bound(params: &BoundParams, t: f64) -> Result<f64, BoundsError> {
    if t < 0.0 {
        return Err(BoundsError::NegativeT(t));
    }
    if params.psi1_norms.is_empty() {
        return Err(BoundsError::EmptyNorms("psi1"));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let sum_sq: f64 = params.psi1_norms.iter().map(|k| k * k).sum();
    let max_norm = params.psi1_norms.iter().cloned().fold(0.0, f64::max);
    let expo = params.c_exponent * (t * t / sum_sq).min(t / max_norm);
    Ok(clip_probability(2.0 * (-expo).exp()))
}

/// `min(1, 2 exp(-(t^2/2) / (sigma^2 + C K t)))` with C defaulting to 1/3.
pub fn bernstein_bounded_bound(params: &BoundParams, t: f64) -> Result<f64, BoundsError> {
    if t < 0.0 {
        return Err(BoundsError::NegativeT(t));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let denom = params.sigma2 + params.c_prefactor * (params.k_bound * t);
    let expo = 0.5 * t * t / denom;
    Ok(clip_probability(2.0 * (-expo).exp()))
}

/// `min(1, 2 n exp(-(t^2/2) / (sigma^2 + K t / 3)))`; the `t/3` term is part
/// of the inequality itself, not an adjustable constant.
pub fn matrix_bernstein_bound(params: &BoundParams, t: f64) -> Result<f64, BoundsError> {
    if t < 0.0 {
        return Err(BoundsError::NegativeT(t));
    }
    if params.dim_n < 1 {
        return Err(BoundsError::DimTooSmall { needed: 1, got: params.dim_n });
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let denom = params.sigma2 + DEFAULT_BOUNDED_PREFACTOR * (params.k_bound * t);
    let expo = 0.5 * t * t / denom;
    Ok(clip_probability(2.0 * params.dim_n as f64 * (-expo).exp()))
}

/// `C (sqrt(sigma^2 log n) + K log n)`, the expectation bound for the norm
/// of a sum of bounded random matrices.
pub fn matrix_bernstein_expectation(params: &BoundParams) -> Result<f64, BoundsError> {
    if params.dim_n < 2 {
        return Err(BoundsError::DimTooSmall { needed: 2, got: params.dim_n });
    }
    let log_n = (params.dim_n as f64).ln();
    Ok(params.c_prefactor * ((params.sigma2 * log_n).sqrt() + params.k_bound * log_n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    Hoeffding,
    Bernstein,
    BernsteinBounded,
    MatrixBernstein,
}

/// A closed-form tail bound `t -> probability`, clipped to [0, 1] and
/// non-increasing on `t >= 0`.
#[derive(Debug, Clone, Serialize)]
pub struct TailBound {
    pub family: BoundFamily,
    pub params: BoundParams,
}

impl TailBound {
    pub fn new(family: BoundFamily, params: BoundParams) -> Self {
        Self { family, params }
    }

    pub fn eval(&self, t: f64) -> Result<f64, BoundsError> {
        match self.family {
            BoundFamily::Hoeffding => hoeffding_bound(&self.params, t),
            BoundFamily::Bernstein => bernstein_bound(&self.params, t),
            BoundFamily::BernsteinBounded => bernstein_bounded_bound(&self.params, t),
            BoundFamily::MatrixBernstein => matrix_bernstein_bound(&self.params, t),
        }
    }
}

/// One empirical tail point: the fraction of trials with `|statistic| >= t`
/// and its one-sided 99% exact (Clopper-Pearson) upper confidence bound.
#[derive(Debug, Clone, Serialize)]
pub struct TailPoint {
    pub t: f64,
    pub p_hat: f64,
    pub upper_conf: f64,
}

const MIN_TRIALS: usize = 100;
const TAIL_CONFIDENCE: f64 = 0.99;

/// Exact binomial upper confidence via the beta-quantile identity.
pub fn binomial_upper_confidence(successes: u64, trials: u64, confidence: f64) -> f64 {
    if successes >= trials {
        return 1.0;
    }
    let a = successes as f64 + 1.0;
    let b = (trials - successes) as f64;
    Beta::new(a, b).expect("valid shape parameters").inverse_cdf(confidence)
}

/// Monte-Carlo tail of `|sampler()|` on a grid. Trials run in parallel on
/// split streams keyed by the trial index, so counts (and therefore the
/// result) do not depend on scheduling.
pub fn empirical_tail<F>(
    sampler: F,
    t_grid: &[f64],
    trials: usize,
    rng: &RngStream,
) -> Result<Vec<TailPoint>, BoundsError>
where
    F: Fn(&mut RngStream) -> f64 + Sync,
{
    if trials < MIN_TRIALS {
        return Err(BoundsError::TooFewTrials { needed: MIN_TRIALS, got: trials });
    }
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; t_grid.len()],
            |mut acc, trial| {
                let mut stream = rng.split(trial as u64);
                let s = sampler(&mut stream).abs();
                for (slot, &t) in acc.iter_mut().zip(t_grid) {
                    if s >= t {
                        *slot += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; t_grid.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    Ok(t_grid
        .iter()
        .zip(counts)
        .map(|(&t, k)| TailPoint {
            t,
            p_hat: k as f64 / trials as f64,
            upper_conf: binomial_upper_confidence(k, trials as u64, TAIL_CONFIDENCE),
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditPoint {
    pub t: f64,
    pub bound: f64,
    pub p_hat: f64,
    pub upper_conf: f64,
    /// bound - upper_conf; negative means the bound was violated here.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub points: Vec<AuditPoint>,
    pub pass: bool,
    pub worst_margin: f64,
}

/// Certifies `bound(t) >= upper_conf(t)` at every grid point.
pub fn bound_audit<F>(
    bound: &TailBound,
    sampler: F,
    t_grid: &[f64],
    trials: usize,
    rng: &RngStream,
) -> Result<AuditReport, BoundsError>
where
    F: Fn(&mut RngStream) -> f64 + Sync,
{
    let tail = empirical_tail(sampler, t_grid, trials, rng)?;
    let mut points = Vec::with_capacity(tail.len());
    for tp in tail {
        let b = bound.eval(tp.t)?;
        points.push(AuditPoint {
            t: tp.t,
            bound: b,
            p_hat: tp.p_hat,
            upper_conf: tp.upper_conf,
            margin: b - tp.upper_conf,
        });
    }
    let worst_margin = points.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
    Ok(AuditReport { points, pass: worst_margin >= 0.0, worst_margin })
}

/// Evenly spaced grid of `points` values over `[0, t_max]`.
pub fn linear_grid(t_max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| t_max * i as f64 / (points - 1) as f64)
        .collect()
}
