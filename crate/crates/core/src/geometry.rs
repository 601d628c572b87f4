//! Gaussian width and complexity (exact suprema per set variant, Monte-Carlo
//! over the gaussian direction), radii, Minkowski functionals, and the
//! empirical deviation audit for sub-gaussian row matrices.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ensembles::{estimate_psi2, sample_matrix, sample_vector, EnsembleSpec};
use crate::linalg::{dot, norm2, sym_eig, LinalgError, SymMatrix};
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid set: {0}")]
    InvalidSet(String),
    #[error("operation unsupported for this set variant: {0}")]
    Unsupported(&'static str),
    #[error("dimension mismatch: set lives in R^{set}, vector in R^{vec}")]
    DimensionMismatch { set: usize, vec: usize },
    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },
    #[error("csv parse error on line {line}: {msg}")]
    CsvParse { line: usize, msg: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpExponent {
    One,
    Two,
    Inf,
}

/// Bounded sets with computable support functions.
#[derive(Debug, Clone)]
pub enum SetDescriptor {
    /// A finite point cloud.
    Finite { points: Vec<Vec<f64>> },
    /// l_p ball of given radius, p in {1, 2, inf}.
    LpBall { p: LpExponent, radius: f64, n: usize },
    /// The ellipsoid S^{1/2} S^{n-1} for a PSD matrix S, stored via its
    /// square root.
    Ellipsoid { sqrt_sigma: SymMatrix },
    /// alpha T for alpha > 0.
    Scaled { inner: Box<SetDescriptor>, alpha: f64 },
    /// The difference set T - T.
    Diff { inner: Box<SetDescriptor> },
}

impl SetDescriptor {
    pub fn finite(points: Vec<Vec<f64>>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::InvalidSet("finite set must be nonempty".into()));
        }
        let n = points[0].len();
        if n == 0 || points.iter().any(|p| p.len() != n) {
            return Err(GeometryError::InvalidSet(
                "points must share a positive dimension".into(),
            ));
        }
        Ok(SetDescriptor::Finite { points })
    }

    pub fn lp_ball(p: LpExponent, radius: f64, n: usize) -> Result<Self, GeometryError> {
        if radius <= 0.0 {
            return Err(GeometryError::InvalidSet("radius must be positive".into()));
        }
        if n == 0 {
            return Err(GeometryError::InvalidSet("dimension must be >= 1".into()));
        }
        Ok(SetDescriptor::LpBall { p, radius, n })
    }

    /// Builds the ellipsoid from the covariance matrix itself (takes the
    /// PSD square root internally).
    pub fn ellipsoid_from_covariance(sigma: &SymMatrix) -> Result<Self, GeometryError> {
        let spec = sym_eig(sigma)?;
        let tol = 1e-9 * (1.0 + sigma.frobenius_norm());
        if *spec.eigenvalues.last().expect("n >= 1") < -tol {
            return Err(GeometryError::InvalidSet("covariance must be PSD".into()));
        }
        let sqrt_sigma = crate::linalg::matrix_function(sigma, |l| l.max(0.0).sqrt())?;
        Ok(SetDescriptor::Ellipsoid { sqrt_sigma })
    }

    pub fn scaled(self, alpha: f64) -> Result<Self, GeometryError> {
        if alpha <= 0.0 {
            return Err(GeometryError::InvalidSet("scale must be positive".into()));
        }
        Ok(SetDescriptor::Scaled { inner: Box::new(self), alpha })
    }

    pub fn diff(self) -> Self {
        SetDescriptor::Diff { inner: Box::new(self) }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            SetDescriptor::Finite { points } => points[0].len(),
            SetDescriptor::LpBall { n, .. } => *n,
            SetDescriptor::Ellipsoid { sqrt_sigma } => sqrt_sigma.n(),
            SetDescriptor::Scaled { inner, .. } | SetDescriptor::Diff { inner } => {
                inner.ambient_dim()
            }
        }
    }

    /// One point per row, comma-separated.
    pub fn finite_from_csv(text: &str) -> Result<Self, GeometryError> {
        let mut points = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            points.push(row.map_err(|e| GeometryError::CsvParse {
                line: idx + 1,
                msg: e.to_string(),
            })?);
        }
        Self::finite(points)
    }
}

/// Exact `sup_{x in T} <g, x>` via the support function of each variant.
pub fn analytic_sup(t: &SetDescriptor, g: &[f64]) -> Result<f64, GeometryError> {
    let n = t.ambient_dim();
    if g.len() != n {
        return Err(GeometryError::DimensionMismatch { set: n, vec: g.len() });
    }
    Ok(match t {
        SetDescriptor::Finite { points } => points
            .iter()
            .map(|p| dot(p, g))
            .fold(f64::NEG_INFINITY, f64::max),
        SetDescriptor::LpBall { p, radius, .. } => {
            // dual norm of g
            let dual = match p {
                LpExponent::One => g.iter().map(|v| v.abs()).fold(0.0, f64::max),
                LpExponent::Two => norm2(g),
                LpExponent::Inf => g.iter().map(|v| v.abs()).sum(),
            };
            radius * dual
        }
        SetDescriptor::Ellipsoid { sqrt_sigma } => norm2(&sqrt_sigma.mat_vec(g)),
        SetDescriptor::Scaled { inner, alpha } => alpha * analytic_sup(inner, g)?,
        SetDescriptor::Diff { inner } => {
            let neg: Vec<f64> = g.iter().map(|v| -v).collect();
            analytic_sup(inner, g)? + analytic_sup(inner, &neg)?
        }
    })
}

/// `sup_{x in T} ||x||_2`.
pub fn radius(t: &SetDescriptor) -> Result<f64, GeometryError> {
    Ok(match t {
        SetDescriptor::Finite { points } => {
            points.iter().map(|p| norm2(p)).fold(0.0, f64::max)
        }
        SetDescriptor::LpBall { p, radius, n } => match p {
            // for p <= 2 the Euclidean-farthest point is a vertex/unit vector
            LpExponent::One | LpExponent::Two => *radius,
            // the corner of the cube
            LpExponent::Inf => radius * (*n as f64).sqrt(),
        },
        SetDescriptor::Ellipsoid { sqrt_sigma } => sqrt_sigma.operator_norm()?,
        SetDescriptor::Scaled { inner, alpha } => alpha * radius(inner)?,
        SetDescriptor::Diff { inner } => diameter(inner)?,
    })
}

/// `sup_{x,y in T} ||x - y||_2`; equals `2 rad` for symmetric variants and is
/// computed pairwise for finite sets.
fn diameter(t: &SetDescriptor) -> Result<f64, GeometryError> {
    Ok(match t {
        SetDescriptor::Finite { points } => {
            let mut best = 0.0f64;
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    let d: f64 = points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    best = best.max(d.sqrt());
                }
            }
            best
        }
        // balls, ellipsoids and difference sets are symmetric about 0
        SetDescriptor::LpBall { .. } | SetDescriptor::Ellipsoid { .. } | SetDescriptor::Diff { .. } => {
            2.0 * radius(t)?
        }
        SetDescriptor::Scaled { inner, alpha } => alpha * diameter(inner)?,
    })
}

/// Minkowski functional `inf { t > 0 : x/t in K }` for the star-shaped
/// variants. Returns 0 at x = 0 and +inf when x is outside the span of a
/// degenerate ellipsoid.
pub fn minkowski_functional(k: &SetDescriptor, x: &[f64]) -> Result<f64, GeometryError> {
    let n = k.ambient_dim();
    if x.len() != n {
        return Err(GeometryError::DimensionMismatch { set: n, vec: x.len() });
    }
    if x.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    Ok(match k {
        SetDescriptor::LpBall { p, radius, .. } => {
            let norm = match p {
                LpExponent::One => x.iter().map(|v| v.abs()).sum(),
                LpExponent::Two => norm2(x),
                LpExponent::Inf => x.iter().map(|v| v.abs()).fold(0.0, f64::max),
            };
            norm / radius
        }
        SetDescriptor::Ellipsoid { sqrt_sigma } => {
            // solve sqrt_sigma y = x through the spectral decomposition
            let spec = sym_eig(sqrt_sigma)?;
            let lmax = spec.eigenvalues[0].max(0.0);
            let cut = 1e-12 * (1.0 + lmax);
            let mut acc = 0.0;
            for t in 0..sqrt_sigma.n() {
                let l = spec.eigenvalues[t];
                let coef = dot(&spec.eigenvector(t), x);
                if l <= cut {
                    if coef.abs() > 1e-9 * (1.0 + norm2(x)) {
                        return Ok(f64::INFINITY); // outside the span
                    }
                } else {
                    acc += (coef / l) * (coef / l);
                }
            }
            acc.sqrt()
        }
        SetDescriptor::Scaled { inner, alpha } => minkowski_functional(inner, x)? / alpha,
        SetDescriptor::Finite { .. } => return Err(GeometryError::Unsupported("finite set")),
        SetDescriptor::Diff { .. } => return Err(GeometryError::Unsupported("difference set")),
    })
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WidthEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub draws: usize,
}

const MIN_DRAWS: usize = 100;

fn mc_over_gaussians(
    t: &SetDescriptor,
    draws: usize,
    rng: &RngStream,
    stat: impl Fn(&SetDescriptor, &[f64]) -> Result<f64, GeometryError> + Sync,
) -> Result<WidthEstimate, GeometryError> {
    if draws < MIN_DRAWS {
        return Err(GeometryError::TooFewDraws { needed: MIN_DRAWS, got: draws });
    }
    let n = t.ambient_dim();
    let values: Result<Vec<f64>, GeometryError> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.split(i as u64);
            let mut g = vec![0.0; n];
            stream.fill_gaussian(&mut g);
            stat(t, &g)
        })
        .collect();
    let values = values?;
    // serial reduction in index order keeps the result thread-count
    // independent
    let mean = values.iter().sum::<f64>() / draws as f64;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (draws as f64 - 1.0);
    Ok(WidthEstimate {
        mean,
        stderr: (var / draws as f64).sqrt(),
        draws,
    })
}

/// Gaussian width `E sup_{x in T} <g, x>`.
pub fn gaussian_width_mc(
    t: &SetDescriptor,
    draws: usize,
    rng: &RngStream,
) -> Result<WidthEstimate, GeometryError> {
    mc_over_gaussians(t, draws, rng, analytic_sup)
}

/// Gaussian complexity `E sup_{x in T} |<g, x>|`.
pub fn gaussian_complexity_mc(
    t: &SetDescriptor,
    draws: usize,
    rng: &RngStream,
) -> Result<WidthEstimate, GeometryError> {
    mc_over_gaussians(t, draws, rng, |t, g| {
        let pos = analytic_sup(t, g)?;
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        Ok(pos.max(analytic_sup(t, &neg)?))
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationOptions {
    /// Prefactor in the audited bounds.
    pub c_const: f64,
    /// Surface points used to discretize infinite variants.
    pub n_disc: usize,
    /// Scalar draws used to estimate the row sub-gaussian norm.
    pub k_draws: usize,
    /// Draws for the Monte-Carlo complexity estimate.
    pub gamma_draws: usize,
}

impl Default for DeviationOptions {
    fn default() -> Self {
        Self { c_const: 4.0, n_disc: 512, k_draws: 100_000, gamma_draws: 2_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    /// Mean over trials of `sup_x | ||Ax|| - sqrt(m) ||x|| |`.
    pub mean_deviation: f64,
    /// Mean over trials of `sup_x | ||Ax||^2 - m ||x||^2 |`.
    pub mean_sq_deviation: f64,
    /// Monte-Carlo gaussian complexity of T.
    pub gamma: WidthEstimate,
    pub rad: f64,
    /// Estimated sub-gaussian norm of the row marginal.
    pub k_estimate: f64,
    /// C K^2 gamma(T).
    pub bound_deviation: f64,
    /// C K^4 gamma^2 + C K^2 sqrt(m) rad gamma.
    pub bound_sq_deviation: f64,
    /// True when the set had to be discretized (bias toward smaller suprema).
    pub discretized: bool,
    pub trials: usize,
    pub per_trial_deviation: Vec<f64>,
    pub per_trial_sq_deviation: Vec<f64>,
}

/// Points over which the deviation statistic is evaluated: finite sets are
/// exact, infinite variants get `n_disc` random surface points (a documented
/// under-approximation of the supremum).
fn deviation_points(
    t: &SetDescriptor,
    n_disc: usize,
    rng: &mut RngStream,
) -> Result<(Vec<Vec<f64>>, bool), GeometryError> {
    match t {
        SetDescriptor::Finite { points } => Ok((points.clone(), false)),
        SetDescriptor::LpBall { p, radius, n } => {
            let mut pts = Vec::with_capacity(n_disc);
            for _ in 0..n_disc {
                let mut g = vec![0.0; *n];
                rng.fill_gaussian(&mut g);
                let norm = match p {
                    LpExponent::One => g.iter().map(|v| v.abs()).sum::<f64>(),
                    LpExponent::Two => norm2(&g),
                    LpExponent::Inf => g.iter().map(|v| v.abs()).fold(0.0, f64::max),
                };
                if norm > 1e-12 {
                    pts.push(g.iter().map(|v| radius * v / norm).collect());
                }
            }
            Ok((pts, true))
        }
        SetDescriptor::Ellipsoid { sqrt_sigma } => {
            let n = sqrt_sigma.n();
            let mut pts = Vec::with_capacity(n_disc);
            for _ in 0..n_disc {
                let mut g = vec![0.0; n];
                rng.fill_gaussian(&mut g);
                let norm = norm2(&g);
                if norm > 1e-12 {
                    let unit: Vec<f64> = g.iter().map(|v| v / norm).collect();
                    pts.push(sqrt_sigma.mat_vec(&unit));
                }
            }
            Ok((pts, true))
        }
        SetDescriptor::Scaled { inner, alpha } => {
            let (pts, disc) = deviation_points(inner, n_disc, rng)?;
            Ok((
                pts.into_iter()
                    .map(|p| p.into_iter().map(|v| alpha * v).collect())
                    .collect(),
                disc,
            ))
        }
        SetDescriptor::Diff { inner } => {
            let (pts, inner_disc) = deviation_points(inner, n_disc, rng)?;
            if !inner_disc {
                // exact pairwise differences for finite inner sets
                let mut out = Vec::new();
                for a in &pts {
                    for b in &pts {
                        out.push(a.iter().zip(b).map(|(x, y)| x - y).collect());
                    }
                }
                Ok((out, false))
            } else {
                let mut out = Vec::with_capacity(pts.len());
                for pair in pts.chunks(2) {
                    if pair.len() == 2 {
                        out.push(pair[0].iter().zip(&pair[1]).map(|(a, b)| a - b).collect());
                    }
                }
                Ok((out, true))
            }
        }
    }
}

/// Monte-Carlo deviation statistics for `A` with rows from the ensemble,
/// compared against the complexity-based bounds.
pub fn deviation_audit(
    t: &SetDescriptor,
    ensemble: &EnsembleSpec,
    m: usize,
    trials: usize,
    rng: &RngStream,
    opts: &DeviationOptions,
) -> Result<DeviationReport, GeometryError> {
    if ensemble.n != t.ambient_dim() {
        return Err(GeometryError::DimensionMismatch {
            set: t.ambient_dim(),
            vec: ensemble.n,
        });
    }
    let (points, discretized) = deviation_points(t, opts.n_disc, &mut rng.split(u64::MAX))?;
    if points.is_empty() {
        return Err(GeometryError::InvalidSet("no evaluation points".into()));
    }

    let sqrt_m = (m as f64).sqrt();
    let stats: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut stream = rng.split(trial as u64);
            let a = sample_matrix(ensemble, m, &mut stream);
            let mut dev: f64 = 0.0;
            let mut dev_sq: f64 = 0.0;
            for x in &points {
                let ax = a.mat_vec(x);
                let nax = norm2(&ax);
                let nx = norm2(x);
                dev = dev.max((nax - sqrt_m * nx).abs());
                dev_sq = dev_sq.max((nax * nax - m as f64 * nx * nx).abs());
            }
            (dev, dev_sq)
        })
        .collect();
    let mean_deviation = stats.iter().map(|s| s.0).sum::<f64>() / trials as f64;
    let mean_sq_deviation = stats.iter().map(|s| s.1).sum::<f64>() / trials as f64;

    // K from the first-coordinate marginal of the ensemble
    let mut kstream = rng.split(u64::MAX - 1);
    let marginal: Vec<f64> = (0..opts.k_draws)
        .map(|_| sample_vector(ensemble, &mut kstream)[0])
        .collect();
    let k_estimate = estimate_psi2(&marginal).map_err(|_| GeometryError::TooFewDraws {
        needed: 100,
        got: opts.k_draws,
    })?;

    let gamma = gaussian_complexity_mc(t, opts.gamma_draws, &rng.split(u64::MAX - 2))?;
    let rad = radius(t)?;
    let k2 = k_estimate * k_estimate;
    Ok(DeviationReport {
        mean_deviation,
        mean_sq_deviation,
        bound_deviation: opts.c_const * k2 * gamma.mean,
        bound_sq_deviation: opts.c_const * k2 * k2 * gamma.mean * gamma.mean
            + opts.c_const * k2 * sqrt_m * rad * gamma.mean,
        gamma,
        rad,
        k_estimate,
        discretized,
        trials,
        per_trial_deviation: stats.iter().map(|s| s.0).collect(),
        per_trial_sq_deviation: stats.iter().map(|s| s.1).collect(),
    })
}
