//! Sub-gaussian row ensembles (gaussian, rademacher, sphere of radius
//! sqrt(n), sign cube), empirical isotropy checks, and Orlicz norm
//! estimators with the four-parameter equivalence audit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{GenMatrix, LinalgError, SymMatrix};
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("dimension must be >= 1")]
    InvalidDimension,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The built-in isotropic, mean-zero row distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Gaussian,
    Rademacher,
    SphereSqrtN,
    UniformCube,
}

impl EnsembleKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Rademacher => "rademacher",
            EnsembleKind::SphereSqrtN => "sphere_sqrt_n",
            EnsembleKind::UniformCube => "uniform_cube",
        }
    }
}

impl std::str::FromStr for EnsembleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian" => Ok(EnsembleKind::Gaussian),
            "rademacher" => Ok(EnsembleKind::Rademacher),
            "sphere_sqrt_n" | "sphere" => Ok(EnsembleKind::SphereSqrtN),
            "uniform_cube" | "cube" => Ok(EnsembleKind::UniformCube),
            other => Err(format!("unknown ensemble '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize) -> Result<Self, EnsembleError> {
        if n == 0 {
            return Err(EnsembleError::InvalidDimension);
        }
        Ok(Self { kind, n })
    }

    pub fn gaussian(n: usize) -> Self {
        Self { kind: EnsembleKind::Gaussian, n }
    }

    pub fn rademacher(n: usize) -> Self {
        Self { kind: EnsembleKind::Rademacher, n }
    }

    pub fn sphere_sqrt_n(n: usize) -> Self {
        Self { kind: EnsembleKind::SphereSqrtN, n }
    }

    pub fn uniform_cube(n: usize) -> Self {
        Self { kind: EnsembleKind::UniformCube, n }
    }
}

/// One draw from the ensemble.
pub fn sample_vector(spec: &EnsembleSpec, rng: &mut RngStream) -> Vec<f64> {
    let n = spec.n;
    match spec.kind {
        EnsembleKind::Gaussian => {
            let mut x = vec![0.0; n];
            rng.fill_gaussian(&mut x);
            x
        }
        EnsembleKind::Rademacher | EnsembleKind::UniformCube => {
            (0..n).map(|_| rng.sign()).collect()
        }
        EnsembleKind::SphereSqrtN => loop {
            let mut x = vec![0.0; n];
            rng.fill_gaussian(&mut x);
            let norm = crate::linalg::norm2(&x);
            if norm > 1e-12 {
                let scale = (n as f64).sqrt() / norm;
                for v in x.iter_mut() {
                    *v *= scale;
                }
                return x;
            }
        },
    }
}

/// `m` independent rows stacked into a matrix.
pub fn sample_matrix(spec: &EnsembleSpec, m: usize, rng: &mut RngStream) -> GenMatrix {
    assert!(m >= 1, "need at least one row");
    let mut entries = Vec::with_capacity(m * spec.n);
    for _ in 0..m {
        entries.extend(sample_vector(spec, rng));
    }
    GenMatrix::new(m, spec.n, entries).expect("finite samples")
}

/// Operator-norm distance of the empirical second moment from the identity,
/// `|| (1/N) sum x_i x_i^T - I ||`.
pub fn isotropy_check(
    spec: &EnsembleSpec,
    samples: usize,
    rng: &mut RngStream,
) -> Result<f64, EnsembleError> {
    if samples < 1 {
        return Err(EnsembleError::TooFewSamples { needed: 1, got: samples });
    }
    let n = spec.n;
    let mut second = SymMatrix::zeros(n);
    for _ in 0..samples {
        let x = sample_vector(spec, rng);
        for i in 0..n {
            for j in i..n {
                let v = second.get(i, j) + x[i] * x[j];
                second.set_sym(i, j, v);
            }
        }
    }
    let dev = second
        .scale(1.0 / samples as f64)
        .sub(&SymMatrix::identity(n))?;
    Ok(dev.operator_norm()?)
}

const ORLICZ_MIN_SAMPLES: usize = 100;
const ORLICZ_BISECT_ITERS: usize = 60;
const ORLICZ_REL_TOL: f64 = 1e-3;

fn orlicz_fit(
    samples: &[f64],
    mean_le_two: impl Fn(&[f64], f64) -> bool,
) -> Result<f64, EnsembleError> {
    if samples.len() < ORLICZ_MIN_SAMPLES {
        return Err(EnsembleError::TooFewSamples {
            needed: ORLICZ_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let max_abs = samples.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if max_abs == 0.0 {
        // the infimum over all t degenerates to zero for the zero sample
        return Ok(0.0);
    }
    // bracket covering every finite-sample infimum
    let mut lo = 1e-8 * max_abs;
    let mut hi = 10.0 * max_abs;
    for _ in 0..ORLICZ_BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mean_le_two(samples, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) / hi < ORLICZ_REL_TOL {
            break;
        }
    }
    Ok(hi)
}

/// Empirical sub-gaussian norm: the smallest `t` with
/// `mean exp(x_i^2 / t^2) <= 2`, found by bisection.
pub fn estimate_psi2(samples: &[f64]) -> Result<f64, EnsembleError> {
    orlicz_fit(samples, |xs, t| {
        let inv = 1.0 / (t * t);
        let mean: f64 = xs.iter().map(|x| (x * x * inv).min(700.0).exp()).sum::<f64>()
            / xs.len() as f64;
        mean <= 2.0
    })
}

/// Empirical sub-exponential norm: the smallest `t` with
/// `mean exp(|x_i| / t) <= 2`.
pub fn estimate_psi1(samples: &[f64]) -> Result<f64, EnsembleError> {
    orlicz_fit(samples, |xs, t| {
        let inv = 1.0 / t;
        let mean: f64 = xs.iter().map(|x| (x.abs() * inv).min(700.0).exp()).sum::<f64>()
            / xs.len() as f64;
        mean <= 2.0
    })
}

/// Bundle of empirical Orlicz norms and the raw moment profile.
#[derive(Debug, Clone, Serialize)]
pub struct OrliczEstimate {
    pub psi2: f64,
    pub psi1: f64,
    /// (p, ||X||_p) pairs for p in {1, 2, 4, 6, 8}.
    pub moment_params: Vec<(u32, f64)>,
    pub sample_size: usize,
}

pub const MOMENT_ORDERS: [u32; 5] = [1, 2, 4, 6, 8];

fn lp_norm(samples: &[f64], p: u32) -> f64 {
    let mean: f64 = samples
        .iter()
        .map(|x| x.abs().powi(p as i32))
        .sum::<f64>()
        / samples.len() as f64;
    mean.powf(1.0 / p as f64)
}

pub fn estimate_orlicz(samples: &[f64]) -> Result<OrliczEstimate, EnsembleError> {
    Ok(OrliczEstimate {
        psi2: estimate_psi2(samples)?,
        psi1: estimate_psi1(samples)?,
        moment_params: MOMENT_ORDERS.iter().map(|&p| (p, lp_norm(samples, p))).collect(),
        sample_size: samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    Subgaussian,
    Subexponential,
}

/// Result of cross-checking the four equivalent characterizations (tail
/// decay, moment growth, Orlicz norm, MGF) on one sample.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub which: TailClass,
    /// Tail-decay constant fitted at empirical quantiles.
    pub k1_tail: f64,
    /// Moment-growth constant: max_p ||X||_p / p^a with a = 1/2 or 1.
    pub k2_moment: f64,
    /// Orlicz norm (psi2 or psi1).
    pub k3_orlicz: f64,
    /// MGF curvature fitted on centered data over a lambda grid.
    pub k4_mgf: f64,
    /// Normalized moment profile (p, ||X||_p / p^a).
    pub moment_profile: Vec<(u32, f64)>,
    /// Last-over-first entry of the normalized moment profile. Rises above
    /// one when moments grow faster than the audited class allows.
    pub drift_ratio: f64,
    /// Raised when `drift_ratio` exceeds [`MOMENT_DRIFT_LIMIT`].
    pub drift_flag: bool,
    /// Largest pairwise ratio among K1..K4.
    pub max_pairwise_ratio: f64,
    /// True when every pairwise ratio lies in [1/10, 10].
    pub pass: bool,
}

/// Upward-drift threshold for the normalized moment profile. A genuinely
/// sub-gaussian sample drifts down (gaussian ~0.79, rademacher ~0.35);
/// exponential data audited as sub-gaussian drifts to ~1.33.
pub const MOMENT_DRIFT_LIMIT: f64 = 1.2;

const AUDIT_MIN_SAMPLES: usize = 10_000;
const TAIL_QUANTILES: [f64; 5] = [0.5, 0.75, 0.9, 0.99, 0.999];
const MGF_GRID: [f64; 4] = [0.1, 0.25, 0.5, 1.0];

/// Estimates K1 (tails), K2 (moments), K3 (Orlicz), K4 (MGF, on centered
/// data) and checks that all pairwise ratios stay within a factor of ten.
pub fn equivalence_audit(
    samples: &[f64],
    which: TailClass,
) -> Result<EquivalenceReport, EnsembleError> {
    if samples.len() < AUDIT_MIN_SAMPLES {
        return Err(EnsembleError::TooFewSamples {
            needed: AUDIT_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let n = samples.len();
    let exponent = match which {
        TailClass::Subgaussian => 0.5,
        TailClass::Subexponential => 1.0,
    };

    // K1: smallest constant making the fitted tail bound hold at a fixed
    // quantile grid.
    let mut sorted: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut k1: f64 = 0.0;
    for q in TAIL_QUANTILES {
        let idx = ((q * n as f64) as usize).min(n - 1);
        let t = sorted[idx];
        if t <= 0.0 {
            continue;
        }
        let p_hat = sorted.iter().filter(|&&v| v >= t).count() as f64 / n as f64;
        if p_hat <= 0.0 {
            continue;
        }
        // p_hat = 1 is fine: ln(2/1) > 0, and bounded variables hit it at
        // every quantile
        let denom = (2.0 / p_hat).ln();
        let k = match which {
            TailClass::Subgaussian => t / denom.sqrt(),
            TailClass::Subexponential => t / denom,
        };
        k1 = k1.max(k);
    }

    // K2: moment growth
    let moment_profile: Vec<(u32, f64)> = MOMENT_ORDERS
        .iter()
        .map(|&p| (p, lp_norm(samples, p) / (p as f64).powf(exponent)))
        .collect();
    let k2 = moment_profile.iter().map(|&(_, m)| m).fold(0.0, f64::max);
    let drift_ratio = moment_profile.last().expect("nonempty").1
        / moment_profile.first().expect("nonempty").1.max(f64::MIN_POSITIVE);

    // K3: Orlicz norm
    let k3 = match which {
        TailClass::Subgaussian => estimate_psi2(samples)?,
        TailClass::Subexponential => estimate_psi1(samples)?,
    };

    // K4: MGF curvature, log E exp(l X) fitted against l^2 on a grid scaled
    // by 1/K3 (so the grid stays within |l| <= 1/K3 for the sub-exponential
    // audit as well).
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    if k3 > 0.0 {
        for g in MGF_GRID {
            for sign in [1.0, -1.0] {
                let lam = sign * g / k3;
                let mgf = samples
                    .iter()
                    .map(|x| (lam * (x - mean)).min(700.0).exp())
                    .sum::<f64>()
                    / n as f64;
                let y = mgf.ln();
                num += y * lam * lam;
                den += lam.powi(4);
            }
        }
    }
    let k4 = if den > 0.0 { (num / den).max(0.0).sqrt() } else { 0.0 };

    let ks = [k1, k2, k3, k4];
    let mut max_ratio: f64 = 1.0;
    for i in 0..ks.len() {
        for j in (i + 1)..ks.len() {
            let (a, b) = (ks[i].max(f64::MIN_POSITIVE), ks[j].max(f64::MIN_POSITIVE));
            max_ratio = max_ratio.max(a / b).max(b / a);
        }
    }

    Ok(EquivalenceReport {
        which,
        k1_tail: k1,
        k2_moment: k2,
        k3_orlicz: k3,
        k4_mgf: k4,
        moment_profile,
        drift_ratio,
        drift_flag: drift_ratio > MOMENT_DRIFT_LIMIT,
        max_pairwise_ratio: max_ratio,
        pass: max_ratio <= 10.0,
    })
}
