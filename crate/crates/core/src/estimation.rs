//! Sample-covariance estimation: the mean-zero estimator, Monte-Carlo error
//! curves, the general (n log n) and sub-gaussian (n, effective-rank) theory
//! bounds, and norm truncation for enforcing boundedness.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ensembles::{sample_vector, EnsembleKind, EnsembleSpec};
use crate::linalg::{matrix_function, norm2, sym_eig, LinalgError, SymMatrix};
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("covariance matrix must be PSD (eigenvalue {0} found)")]
    NotPsd(f64),
    #[error("zero covariance: effective rank undefined")]
    ZeroCovariance,
    #[error("sample parse error on line {line}: {msg}")]
    CsvParse { line: usize, msg: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A collection of `N` mean-zero samples in fixed dimension.
#[derive(Debug, Clone)]
pub struct SampleSet {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl SampleSet {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, EstimationError> {
        if rows.is_empty() {
            return Err(EstimationError::EmptySampleSet);
        }
        let dim = rows[0].len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(EstimationError::InvalidArgument(
                "samples must share a positive dimension".into(),
            ));
        }
        Ok(Self { dim, rows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// One sample per row, comma-separated.
    pub fn from_csv(text: &str) -> Result<Self, EstimationError> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Result<Vec<f64>, _> = line
                .split(',')
                .map(|tok| tok.trim().parse::<f64>())
                .collect();
            rows.push(row.map_err(|e| EstimationError::CsvParse {
                line: idx + 1,
                msg: e.to_string(),
            })?);
        }
        Self::new(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:.17e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `(1/N) sum_i x_i x_i^T` under the mean-zero convention.
pub fn sample_covariance(samples: &SampleSet) -> Result<SymMatrix, EstimationError> {
    let n = samples.dim;
    let count = samples.len() as f64;
    let mut acc = SymMatrix::zeros(n);
    for x in &samples.rows {
        for i in 0..n {
            for j in i..n {
                let v = acc.get(i, j) + x[i] * x[j];
                acc.set_sym(i, j, v);
            }
        }
    }
    Ok(acc.scale(1.0 / count))
}

/// Convenience wrapper that subtracts the sample mean first. The resulting
/// estimator is biased by a rank-one term of order 1/N (it still divides by
/// N, not N-1).
pub fn sample_covariance_centered(samples: &SampleSet) -> Result<SymMatrix, EstimationError> {
    let n = samples.dim;
    let count = samples.len() as f64;
    let mut mean = vec![0.0; n];
    for x in &samples.rows {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= count;
    }
    let centered: Vec<Vec<f64>> = samples
        .rows
        .iter()
        .map(|x| x.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    sample_covariance(&SampleSet::new(centered)?)
}

/// A population model X = Sigma^{1/2} Z with Z drawn from one of the
/// isotropic ensembles.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    sigma: SymMatrix,
    sqrt_sigma: SymMatrix,
    z_kind: EnsembleKind,
}

impl CovarianceModel {
    pub fn new(sigma: SymMatrix, z_kind: EnsembleKind) -> Result<Self, EstimationError> {
        let spec = sym_eig(&sigma)?;
        let min = *spec.eigenvalues.last().expect("n >= 1");
        let tol = 1e-9 * (1.0 + sigma.frobenius_norm());
        if min < -tol {
            return Err(EstimationError::NotPsd(min));
        }
        // clip tiny negative round-off before the square root
        let sqrt_sigma = matrix_function(&sigma, |l| l.max(0.0).sqrt())?;
        Ok(Self { sigma, sqrt_sigma, z_kind })
    }

    pub fn dim(&self) -> usize {
        self.sigma.n()
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn sqrt_sigma(&self) -> &SymMatrix {
        &self.sqrt_sigma
    }

    pub fn z_kind(&self) -> EnsembleKind {
        self.z_kind
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        let spec = EnsembleSpec { kind: self.z_kind, n: self.dim() };
        let z = sample_vector(&spec, rng);
        self.sqrt_sigma.mat_vec(&z)
    }

    pub fn sample_set(&self, count: usize, rng: &mut RngStream) -> Result<SampleSet, EstimationError> {
        if count == 0 {
            return Err(EstimationError::EmptySampleSet);
        }
        SampleSet::new((0..count).map(|_| self.sample(rng)).collect())
    }

    /// tr(Sigma) / ||Sigma||; errors for the zero matrix.
    pub fn effective_rank(&self) -> Result<f64, EstimationError> {
        effective_rank(&self.sigma)
    }
}

pub fn effective_rank(sigma: &SymMatrix) -> Result<f64, EstimationError> {
    let op = sigma.operator_norm()?;
    if op == 0.0 {
        return Err(EstimationError::ZeroCovariance);
    }
    Ok(sigma.trace() / op)
}

/// Monte-Carlo mean of `||Sigma_N - Sigma||` over independent sample sets.
/// Trials run in parallel on streams split by trial index; the mean is
/// reduced in index order, so the result is thread-count independent.
pub fn estimation_error(
    model: &CovarianceModel,
    n_samples: usize,
    trials: usize,
    rng: &RngStream,
) -> Result<f64, EstimationError> {
    if n_samples < 1 || trials < 1 {
        return Err(EstimationError::InvalidArgument(
            "need n_samples >= 1 and trials >= 1".into(),
        ));
    }
    let errors: Result<Vec<f64>, EstimationError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = rng.split(t as u64);
            let set = model.sample_set(n_samples, &mut stream)?;
            let est = sample_covariance(&set)?;
            Ok(est.sub(model.sigma())?.operator_norm()?)
        })
        .collect();
    Ok(errors?.iter().sum::<f64>() / trials as f64)
}

/// General-distribution bound `C ||Sigma|| (sqrt(n log n / N) + n log n / N)`.
pub fn theory_bound_general(
    model: &CovarianceModel,
    n_samples: usize,
    c_const: f64,
) -> Result<f64, EstimationError> {
    let n = model.dim();
    if n < 2 {
        return Err(EstimationError::InvalidArgument(
            "general bound needs dimension >= 2".into(),
        ));
    }
    let op = model.sigma().operator_norm()?;
    let ratio = n as f64 * (n as f64).ln() / n_samples as f64;
    Ok(c_const * op * (ratio.sqrt() + ratio))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubgaussianBound {
    /// Bound with the ambient dimension n.
    pub n_based: f64,
    /// Bound with the effective rank r = tr(Sigma) / ||Sigma||.
    pub r_based: f64,
    pub effective_rank: f64,
}

/// Sub-gaussian bound `C ||Sigma|| (sqrt(r/N) + r/N)` reported both with
/// r = n and with the effective rank.
pub fn theory_bound_subgaussian(
    model: &CovarianceModel,
    n_samples: usize,
    c_const: f64,
) -> Result<SubgaussianBound, EstimationError> {
    let op = model.sigma().operator_norm()?;
    if op == 0.0 {
        return Err(EstimationError::ZeroCovariance);
    }
    let r = model.effective_rank()?;
    let value = |dof: f64| {
        let ratio = dof / n_samples as f64;
        c_const * op * (ratio.sqrt() + ratio)
    };
    Ok(SubgaussianBound {
        n_based: value(model.dim() as f64),
        r_based: value(r),
        effective_rank: r,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TruncationReport {
    pub removed: usize,
    /// The (1 - fraction) quantile of the squared norms before truncation.
    pub quantile_bound: f64,
    pub max_norm_sq_before: f64,
    pub max_norm_sq_after: f64,
    /// Operator-norm shift of the sample covariance caused by truncation.
    /// Recorded only; nothing is asserted about it.
    pub covariance_shift: f64,
}

/// Removes the `ceil(fraction * N)` samples of largest Euclidean norm.
pub fn truncate_sample(
    samples: &SampleSet,
    fraction: f64,
) -> Result<(SampleSet, TruncationReport), EstimationError> {
    if !(0.0..0.5).contains(&fraction) {
        return Err(EstimationError::InvalidArgument(format!(
            "fraction {fraction} outside [0, 0.5)"
        )));
    }
    let n = samples.len();
    let remove = (fraction * n as f64).ceil() as usize;
    let mut norms: Vec<(usize, f64)> = samples
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, norm2(r)))
        .collect();
    // largest norms last; stable order keeps determinism on ties
    norms.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite norms"));

    let kept_idx: Vec<usize> = norms[..n - remove].iter().map(|&(i, _)| i).collect();
    let mut kept_sorted = kept_idx.clone();
    kept_sorted.sort_unstable();
    let kept_rows: Vec<Vec<f64>> = kept_sorted
        .iter()
        .map(|&i| samples.rows[i].clone())
        .collect();

    let quantile_idx = ((1.0 - fraction) * (n as f64 - 1.0)).floor() as usize;
    let quantile_bound = norms[quantile_idx.min(n - 1)].1.powi(2);
    let max_before = norms.last().expect("nonempty").1.powi(2);
    let max_after = if remove == 0 {
        max_before
    } else {
        norms[n - remove - 1].1.powi(2)
    };

    let after = SampleSet::new(kept_rows)?;
    let covariance_shift = sample_covariance(samples)?
        .sub(&sample_covariance(&after)?)?
        .operator_norm()?;

    Ok((
        after,
        TruncationReport {
            removed: remove,
            quantile_bound,
            max_norm_sq_before: max_before,
            max_norm_sq_after: max_after,
            covariance_shift,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn covariance_of_fixed_vectors() {
        // all samples e1 -> e1 e1^T
        let e1 = vec![1.0, 0.0, 0.0];
        let set = SampleSet::new(vec![e1.clone(); 5]).unwrap();
        let cov = sample_covariance(&set).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert_eq!(cov.get(i, j), want);
            }
        }
        // {+v, -v} -> v v^T
        let v = vec![1.0, 2.0];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let set = SampleSet::new(vec![v.clone(), neg]).unwrap();
        let cov = sample_covariance(&set).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(cov.get(i, j), v[i] * v[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn covariance_is_psd_and_concentrates() {
        let sigma = SymMatrix::from_diag(&[2.0, 1.0]);
        let model = CovarianceModel::new(sigma.clone(), EnsembleKind::Gaussian).unwrap();
        let mut rng = RngStream::new(1);
        let set = model.sample_set(100_000, &mut rng).unwrap();
        let cov = sample_covariance(&set).unwrap();
        let err = cov.sub(&sigma).unwrap().operator_norm().unwrap();
        assert!(err <= 0.1, "err {err}");
        let spec = sym_eig(&cov).unwrap();
        assert!(*spec.eigenvalues.last().unwrap() >= -1e-10);
    }

    #[test]
    fn estimation_error_cases() {
        let rng = RngStream::new(2);
        // zero covariance: error identically zero
        let zero = CovarianceModel::new(SymMatrix::zeros(3), EnsembleKind::Gaussian).unwrap();
        assert_eq!(estimation_error(&zero, 50, 3, &rng).unwrap(), 0.0);

        // identity in dimension 20 at N = 4000
        let model =
            CovarianceModel::new(SymMatrix::identity(20), EnsembleKind::Gaussian).unwrap();
        let err = estimation_error(&model, 4000, 5, &rng).unwrap();
        assert!(err <= 0.25, "err {err}");
    }

    #[test]
    fn estimation_error_sqrt_n_decay() {
        let model =
            CovarianceModel::new(SymMatrix::identity(10), EnsembleKind::Gaussian).unwrap();
        let rng = RngStream::new(3);
        let e1 = estimation_error(&model, 500, 20, &rng).unwrap();
        let e4 = estimation_error(&model, 2000, 20, &rng.split(1)).unwrap();
        assert!(e1 / e4 >= 1.5, "ratio {}", e1 / e4);
    }

    #[test]
    fn rescaled_error_flat_across_sample_sizes() {
        // sqrt(N) * mean error stays within a factor of 2 over N in
        // {n, 4n, 16n} for a gaussian model
        let n = 10usize;
        let model =
            CovarianceModel::new(SymMatrix::identity(n), EnsembleKind::Gaussian).unwrap();
        let mut rescaled = Vec::new();
        for (i, &n_samples) in [n, 4 * n, 16 * n].iter().enumerate() {
            let rng = RngStream::new(40).split(i as u64);
            let err = estimation_error(&model, n_samples, 20, &rng).unwrap();
            rescaled.push((n_samples as f64).sqrt() * err);
        }
        let max = rescaled.iter().cloned().fold(f64::MIN, f64::max);
        let min = rescaled.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min <= 2.0, "rescaled {rescaled:?}");
    }

    #[test]
    fn theory_bound_values() {
        let model =
            CovarianceModel::new(SymMatrix::identity(100), EnsembleKind::Gaussian).unwrap();
        // N chosen so n log n / N = 0.01
        let n_samples = (100.0 * 100f64.ln() * 100.0).round() as usize;
        let b = theory_bound_general(&model, n_samples, 1.0).unwrap();
        assert!((b - 0.11).abs() < 1e-3, "bound {b}");
        // N -> large drives the bound to zero
        let tiny = theory_bound_general(&model, 10_000_000_000, 1.0).unwrap();
        assert!(tiny < 1e-3);
        // doubling ||Sigma|| doubles the bound
        let doubled =
            CovarianceModel::new(SymMatrix::identity(100).scale(2.0), EnsembleKind::Gaussian)
                .unwrap();
        assert_abs_diff_eq!(
            theory_bound_general(&doubled, n_samples, 1.0).unwrap(),
            2.0 * b,
            epsilon = 1e-12
        );
    }

    #[test]
    fn subgaussian_bound_and_effective_rank() {
        let model =
            CovarianceModel::new(SymMatrix::identity(7), EnsembleKind::Gaussian).unwrap();
        let b = theory_bound_subgaussian(&model, 100, 1.0).unwrap();
        assert_abs_diff_eq!(b.effective_rank, 7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b.n_based, b.r_based, epsilon = 1e-9);

        // spiked: r = 1.99, r-based bound ~ sqrt(50) smaller at the same N
        // (in the sqrt-dominated regime, so take N large)
        let mut diag = vec![0.01; 100];
        diag[0] = 1.0;
        let spiked =
            CovarianceModel::new(SymMatrix::from_diag(&diag), EnsembleKind::Gaussian).unwrap();
        let b = theory_bound_subgaussian(&spiked, 1_000_000, 1.0).unwrap();
        assert_abs_diff_eq!(b.effective_rank, 1.99, epsilon = 1e-9);
        let ratio = b.n_based / b.r_based;
        assert!((ratio - (100.0f64 / 1.99).sqrt()).abs() < 0.1, "ratio {ratio}");

        // N = r: bound = 2 C ||Sigma||
        let n_eq_r = theory_bound_subgaussian(&model, 7, 1.0).unwrap();
        assert_abs_diff_eq!(n_eq_r.r_based, 2.0, epsilon = 1e-9);

        assert!(matches!(
            CovarianceModel::new(SymMatrix::zeros(3), EnsembleKind::Gaussian)
                .unwrap()
                .effective_rank(),
            Err(EstimationError::ZeroCovariance)
        ));
    }

    #[test]
    fn effective_rank_bounded_by_rank() {
        let sigma = SymMatrix::from_diag(&[3.0, 1.0, 0.0, 0.0]);
        let r = effective_rank(&sigma).unwrap();
        assert!(r <= 2.0 + 1e-9); // rank is 2
        assert!(r <= 4.0);
    }

    #[test]
    fn bounded_ensembles_hit_trace_exactly() {
        // for Sigma = I and sphere/cube factors, ||X||^2 = n = tr Sigma
        for kind in [EnsembleKind::SphereSqrtN, EnsembleKind::UniformCube] {
            let model = CovarianceModel::new(SymMatrix::identity(6), kind).unwrap();
            let mut rng = RngStream::new(4);
            for _ in 0..20 {
                let x = model.sample(&mut rng);
                let sq: f64 = x.iter().map(|v| v * v).sum();
                assert!((sq - 6.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn truncation_behaviour() {
        let set = SampleSet::new(
            (1..=100)
                .map(|i| vec![i as f64 / 100.0, 0.0])
                .collect(),
        )
        .unwrap();
        // fraction 0 is the identity
        let (same, rep) = truncate_sample(&set, 0.0).unwrap();
        assert_eq!(same.len(), 100);
        assert_eq!(rep.removed, 0);

        // fraction 0.01 removes exactly the single largest-norm point
        let (kept, rep) = truncate_sample(&set, 0.01).unwrap();
        assert_eq!(rep.removed, 1);
        assert_eq!(kept.len(), 99);
        assert!(kept.rows().iter().all(|r| r[0] < 1.0));

        // heavy-tailed mixture: max norm drops by >= 10x
        let mut rng = RngStream::new(5);
        let mut rows = Vec::new();
        for i in 0..1000 {
            let mut x = vec![0.0; 3];
            rng.fill_gaussian(&mut x);
            if i % 100 == 0 {
                for v in x.iter_mut() {
                    *v *= 100.0;
                }
            }
            rows.push(x);
        }
        let set = SampleSet::new(rows).unwrap();
        let before = set
            .rows()
            .iter()
            .map(|r| norm2(r))
            .fold(0.0, f64::max);
        let (_, rep) = truncate_sample(&set, 0.011).unwrap();
        assert!(rep.max_norm_sq_after.sqrt() * 10.0 <= before);
        assert!(rep.max_norm_sq_after <= rep.quantile_bound / (1.0 - 0.011) + 1e-9);

        assert!(truncate_sample(&set, 0.5).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let set = SampleSet::new(vec![vec![1.5, -2.25], vec![0.125, 3.875]]).unwrap();
        let parsed = SampleSet::from_csv(&set.to_csv()).unwrap();
        assert_eq!(parsed.rows(), set.rows());
        assert!(SampleSet::from_csv("1.0,2.0\n1.0\n").is_err());
        assert!(SampleSet::from_csv("a,b\n").is_err());
    }

    #[test]
    fn centered_estimator_removes_mean() {
        let set = SampleSet::new(vec![vec![10.0, 0.0], vec![12.0, 0.0]]).unwrap();
        let cov = sample_covariance_centered(&set).unwrap();
        assert_abs_diff_eq!(cov.get(0, 0), 1.0, epsilon = 1e-12); // var of {10,12} w/ 1/N
        assert_abs_diff_eq!(cov.get(1, 1), 0.0, epsilon = 1e-12);
    }
}
