//! One entry point per experiment. Every experiment draws its randomness
//! from per-trial streams split off the seed, so reports are reproducible
//! and independent of the worker-thread count.

use std::collections::BTreeMap;
use std::fs;

use rayon::prelude::*;
use serde_json::json;

use hdp_core::bounds::{bound_audit, linear_grid, BoundFamily, BoundParams, TailBound};
use hdp_core::completion::{meets_sampling_condition, CompletionInstance};
use hdp_core::ensembles::{estimate_psi1, sample_matrix, EnsembleKind, EnsembleSpec};
use hdp_core::estimation::{
    sample_covariance, theory_bound_general, theory_bound_subgaussian, CovarianceModel,
    SampleSet,
};
use hdp_core::geometry::{
    deviation_audit, gaussian_complexity_mc, gaussian_width_mc, radius, DeviationOptions,
    LpExponent, SetDescriptor,
};
use hdp_core::jl::{choose_target_dim, distortion_audit, project};
use hdp_core::linalg::{norm2, GenMatrix, SymMatrix};
use hdp_core::networks::{
    concentration_diagnostic, expected_adjacency_zero_diag, misclassification_rate, sample_sbm,
    spectral_cluster, Graph, SbmParams,
};
use hdp_core::recovery::{
    basis_pursuit, l0_norm_with_threshold, sparse_experiment, RecoveryProblem, SolveStatus,
    EXACT_RECOVERY_TOL,
};
use hdp_core::rng::RngStream;

use crate::config::ParamSet;
use crate::report::{ReportRecord, TrialRow};

#[derive(Debug)]
pub enum RunError {
    /// Bad parameters: exit code 3.
    Usage(String),
    /// Filesystem trouble: exit code 2.
    Io(String),
    /// The experiment itself failed at runtime: exit code 1 with a partial
    /// report.
    Experiment(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Usage(m) | RunError::Io(m) | RunError::Experiment(m) => write!(f, "{m}"),
        }
    }
}

impl From<crate::config::ConfigError> for RunError {
    fn from(e: crate::config::ConfigError) -> Self {
        RunError::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> RunError {
    RunError::Usage(msg.into())
}

fn experiment_err(e: impl std::fmt::Display) -> RunError {
    RunError::Experiment(e.to_string())
}

fn read_file(path: &str) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|e| RunError::Io(format!("reading {path}: {e}")))
}

fn write_file(path: &str, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|e| RunError::Io(format!("writing {path}: {e}")))
}

fn metrics(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn parse_ensemble(name: &str) -> Result<EnsembleKind, RunError> {
    name.parse::<EnsembleKind>().map_err(usage)
}

pub const JL_PARAMS: &[&str] = &["n", "num_points", "eps", "c_jl", "m"];

pub fn run_jl(ps: &ParamSet, seed: u64, trials: usize) -> Result<ReportRecord, RunError> {
    let n = ps.usize("n", 50)?;
    let num_points = ps.usize("num_points", 100)?;
    let eps = ps.f64("eps", 0.25)?;
    let c_jl = ps.f64("c_jl", 8.0)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(usage(format!("eps must lie in (0,1), got {eps}")));
    }
    if num_points < 2 {
        return Err(usage("num_points must be at least 2"));
    }
    let m = match ps.usize("m", 0)? {
        0 => choose_target_dim(eps, num_points, c_jl),
        explicit => explicit,
    };
    let spec = EnsembleSpec::gaussian(n);
    let rng = RngStream::new(seed);

    let rows: Result<Vec<TrialRow>, RunError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut s = rng.split(trial as u64);
            let pts = sample_matrix(&spec, num_points, &mut s);
            let emb = project(&pts, m, &spec, &mut s);
            let rep = distortion_audit(&pts, &emb).map_err(experiment_err)?;
            Ok(TrialRow {
                trial,
                metrics: metrics(&[
                    ("max_expand", rep.max_expand),
                    ("max_contract", rep.max_contract),
                    ("success", if rep.within(eps) { 1.0 } else { 0.0 }),
                ]),
            })
        })
        .collect();

    let mut record = ReportRecord::new("jl", seed, trials);
    record.parameters = ps.echo();
    record.per_trial = rows?;
    record.aggregate_metric("max_expand");
    record.aggregate_metric("max_contract");
    record.aggregate_metric("success");
    if let Some(&mean) = record.aggregates.get("mean_success") {
        record.aggregates.insert("success_fraction".into(), mean);
    }
    record.bounds.insert("target_dim".into(), m as f64);
    record.bounds.insert("eps".into(), eps);
    Ok(record)
}

pub const SBM_PARAMS: &[&str] = &["n", "p", "q", "conc_c", "graph_out", "graph_in"];

pub fn run_sbm(ps: &ParamSet, seed: u64, trials: usize) -> Result<ReportRecord, RunError> {
    if let Some(path) = ps.opt_string("graph_in")? {
        // cluster one externally supplied graph
        let text = read_file(&path)?;
        let g = Graph::from_edge_list_inferred(&text).map_err(|e| usage(e.to_string()))?;
        let labels = spectral_cluster(&g).map_err(experiment_err)?;
        let positive = labels.labels.iter().filter(|&&l| l > 0).count();
        let mut record = ReportRecord::new("sbm", seed, 1);
        record.parameters = ps.echo();
        record.per_trial = vec![TrialRow {
            trial: 0,
            metrics: metrics(&[
                ("n", g.n() as f64),
                ("edges", g.edge_count() as f64),
                ("positive_fraction", positive as f64 / g.n() as f64),
            ]),
        }];
        return Ok(record);
    }

    let n = ps.usize("n", 200)?;
    let p = ps.f64("p", 0.05)?;
    let q = ps.f64("q", 0.005)?;
    let conc_c = ps.f64("conc_c", 3.0)?;
    let params = SbmParams::new(n, p, q).map_err(|e| usage(e.to_string()))?;
    let ea0 = expected_adjacency_zero_diag(&params);
    let rng = RngStream::new(seed);

    let rows: Result<Vec<TrialRow>, RunError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut s = rng.split(trial as u64);
            let (g, truth) = sample_sbm(&params, &mut s).map_err(experiment_err)?;
            let pred = spectral_cluster(&g).map_err(experiment_err)?;
            let mis = misclassification_rate(&pred, &truth).map_err(experiment_err)?;
            let dev = g
                .adjacency()
                .sub(&ea0)
                .and_then(|d| d.operator_norm())
                .map_err(experiment_err)?;
            Ok(TrialRow {
                trial,
                metrics: metrics(&[
                    ("misclassification", mis),
                    ("deviation", dev),
                    ("recovered", if mis <= 0.15 { 1.0 } else { 0.0 }),
                ]),
            })
        })
        .collect();

    if let Some(path) = ps.opt_string("graph_out")? {
        let mut s = rng.split(0);
        let (g, _) = sample_sbm(&params, &mut s).map_err(experiment_err)?;
        write_file(&path, &g.to_edge_list())?;
    }

    let mut record = ReportRecord::new("sbm", seed, trials);
    record.parameters = ps.echo();
    record.per_trial = rows?;
    record.aggregate_metric("misclassification");
    record.aggregate_metric("deviation");
    record.aggregate_metric("recovered");
    let diag = concentration_diagnostic(&params, 1, &RngStream::new(seed), conc_c)
        .map_err(experiment_err)?;
    record.bounds.insert("concentration_bound".into(), diag.bound);
    record.bounds.insert("expected_degree".into(), params.expected_degree());
    record.bounds.insert("condition_ratio".into(), params.condition_ratio());
    Ok(record)
}

pub const COVARIANCE_PARAMS: &[&str] = &[
    "n",
    "sigma",
    "spike_value",
    "ensemble",
    "n_samples",
    "c_const",
    "data",
];

pub fn run_covariance(ps: &ParamSet, seed: u64, trials: usize) -> Result<ReportRecord, RunError> {
    if let Some(path) = ps.opt_string("data")? {
        // external data: estimate and describe, nothing to compare against
        let set = SampleSet::from_csv(&read_file(&path)?).map_err(|e| usage(e.to_string()))?;
        let cov = sample_covariance(&set).map_err(experiment_err)?;
        let op = cov.operator_norm().map_err(experiment_err)?;
        let mut record = ReportRecord::new("covariance", seed, 1);
        record.parameters = ps.echo();
        record.per_trial = vec![TrialRow {
            trial: 0,
            metrics: metrics(&[
                ("samples", set.len() as f64),
                ("dim", set.dim() as f64),
                ("op_norm", op),
                ("trace", cov.trace()),
                ("effective_rank", if op > 0.0 { cov.trace() / op } else { 0.0 }),
            ]),
        }];
        return Ok(record);
    }

    let n = ps.usize("n", 20)?;
    let sigma_kind = ps.string("sigma", "identity")?;
    let spike = ps.f64("spike_value", 0.01)?;
    let kind = parse_ensemble(&ps.string("ensemble", "gaussian")?)?;
    let n_samples = ps.usize("n_samples", 1000)?;
    let c_const = ps.f64("c_const", 1.0)?;
    if n_samples == 0 {
        return Err(usage("n_samples must be positive"));
    }
    let sigma = match sigma_kind.as_str() {
        "identity" => SymMatrix::identity(n),
        "spike" => {
            let mut diag = vec![spike; n];
            diag[0] = 1.0;
            SymMatrix::from_diag(&diag)
        }
        other => return Err(usage(format!("sigma must be identity|spike, got '{other}'"))),
    };
    let model = CovarianceModel::new(sigma, kind).map_err(|e| usage(e.to_string()))?;
    let rng = RngStream::new(seed);

    let rows: Result<Vec<TrialRow>, RunError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut s = rng.split(trial as u64);
            let set = model.sample_set(n_samples, &mut s).map_err(experiment_err)?;
            let cov = sample_covariance(&set).map_err(experiment_err)?;
            let err = cov
                .sub(model.sigma())
                .and_then(|d| d.operator_norm())
                .map_err(experiment_err)?;
            Ok(TrialRow { trial, metrics: metrics(&[("error", err)]) })
        })
        .collect();

    let mut record = ReportRecord::new("covariance", seed, trials);
    record.parameters = ps.echo();
    record.per_trial = rows?;
    record.aggregate_metric("error");
    if n >= 2 {
        record.bounds.insert(
            "theory_general".into(),
            theory_bound_general(&model, n_samples, c_const).map_err(experiment_err)?,
        );
    }
    let sg = theory_bound_subgaussian(&model, n_samples, c_const).map_err(experiment_err)?;
    record.bounds.insert("theory_subgaussian_n".into(), sg.n_based);
    record.bounds.insert("theory_subgaussian_r".into(), sg.r_based);
    record.bounds.insert("effective_rank".into(), sg.effective_rank);
    Ok(record)
}

pub const COMPLETION_PARAMS: &[&str] = &["n", "r", "m", "c_const", "export_prefix"];

pub fn run_completion(ps: &ParamSet, seed: u64, trials: usize) -> Result<ReportRecord, RunError> {
    let n = ps.usize("n", 100)?;
    let r = ps.usize("r", 2)?;
    let m = ps.f64("m", 5000.0)?;
    let c_const = ps.f64("c_const", 1.0)?;
    if n < 2 {
        return Err(usage("n must be at least 2"));
    }
    let p = m / (n * n) as f64;
    if !(p > 0.0 && p <= 1.0) {
        return Err(usage(format!("m = {m} gives sampling probability {p} outside (0,1]")));
    }
    if !meets_sampling_condition(n, p) {
        eprintln!(
            "warning: m = {m} is below n log n = {:.1}; the analysis regime needs denser sampling",
            n as f64 * (n as f64).ln()
        );
    }
    let rng = RngStream::new(seed);

    let rows: Result<Vec<TrialRow>, RunError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut s = rng.split(trial as u64);
            let inst = CompletionInstance::generate(n, r, p, &mut s).map_err(experiment_err)?;
            let res = inst.solve(c_const).map_err(experiment_err)?;
            Ok(TrialRow {
                trial,
                metrics: metrics(&[
                    ("rmse", res.per_entry_rmse),
                    ("observed", res.observed_entries as f64),
                    ("within_bound", if res.per_entry_rmse <= res.theory_bound { 1.0 } else { 0.0 }),
                ]),
            })
        })
        .collect();

    if let Some(prefix) = ps.opt_string("export_prefix")? {
        let mut s = rng.split(0);
        let inst = CompletionInstance::generate(n, r, p, &mut s).map_err(experiment_err)?;
        let (xs, mask) = inst.export_csv();
        write_file(&format!("{prefix}.x.csv"), &xs)?;
        write_file(&format!("{prefix}.mask.csv"), &mask)?;
    }

    let mut record = ReportRecord::new("completion", seed, trials);
    record.parameters = ps.echo();
    record.per_trial = rows?;
    record.aggregate_metric("rmse");
    record.aggregate_metric("within_bound");
    record.bounds.insert(
        "theory_bound".into(),
        hdp_core::completion::theory_bound(n, r, m, 1.0, c_const).map_err(experiment_err)?,
    );
    record.bounds.insert("sample_prob".into(), p);
    record
        .verdicts
        .insert("sampling_condition_met".into(), meets_sampling_condition(n, p));
    Ok(record)
}

pub const WIDTH_PARAMS: &[&str] = &[
    "set",
    "n",
    "radius",
    "draws",
    "points_csv",
    "ellipsoid_diag",
];

fn build_set(ps: &ParamSet) -> Result<SetDescriptor, RunError> {
    let kind = ps.string("set", "b2")?;
    let n = ps.usize("n", 10)?;
    let rad = ps.f64("radius", 1.0)?;
    let t = match kind.as_str() {
        "b1" => SetDescriptor::lp_ball(LpExponent::One, rad, n),
        "b2" => SetDescriptor::lp_ball(LpExponent::Two, rad, n),
        "binf" => SetDescriptor::lp_ball(LpExponent::Inf, rad, n),
        "singleton" => {
            let mut x = vec![0.0; n.max(1)];
            x[0] = rad;
            SetDescriptor::finite(vec![x])
        }
        "ellipsoid" => {
            let diag_text = ps.string("ellipsoid_diag", "1")?;
            let diag: Result<Vec<f64>, _> =
                diag_text.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let diag = diag.map_err(|e| usage(format!("ellipsoid_diag: {e}")))?;
            SetDescriptor::ellipsoid_from_covariance(&SymMatrix::from_diag(&diag))
        }
        "csv" => {
            let path = ps
                .opt_string("points_csv")?
                .ok_or_else(|| usage("set=csv needs points_csv"))?;
            SetDescriptor::finite_from_csv(&read_file(&path)?)
        }
        other => {
            return Err(usage(format!(
                "set must be one of b1|b2|binf|singleton|ellipsoid|csv, got '{other}'"
            )))
        }
    };
    t.map_err(|e| usage(e.to_string()))
}

pub fn run_width(ps: &ParamSet, seed: u64, trials: usize) -> Result<ReportRecord, RunError> {
    let t = build_set(ps)?;
    let draws = ps.usize("draws", 2000)?;
    let rng = RngStream::new(seed);

    let rows: Result<Vec<TrialRow>, RunError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let s = rng.split(trial as u64);
            let w = gaussian_width_mc(&t, draws, &s.split(0)).map_err(experiment_err)?;
            let c = gaussian_complexity_mc(&t, draws, &s.split(1)).map_err(experiment_err)?;
            Ok(TrialRow {
                trial,
                metrics: metrics(&[
                    ("width", w.mean),
                    ("width_stderr", w.stderr),
                    ("complexity", c.mean),
                    ("complexity_stderr", c.stderr),
                ]),
            })
        })
        .collect();

    let mut record = ReportRecord::new("width", seed, trials);
    record.parameters = ps.echo();
    record.per_trial = rows?;
    record.aggregate_metric("width");
    record.aggregate_metric("complexity");
    record
        .bounds
        .insert("radius".into(), radius(&t).map_err(experiment_err)?);
    record.bounds.insert("ambient_dim".into(), t.ambient_dim() as f64);
    Ok(record)
}

pub const DEVIATION_PARAMS: &[&str] =
    &["n", "num_points", "m", "c_const", "gamma_draws", "k_draws"];

pub fn run_deviation(ps: &ParamSet, seed: u64, trials: usize) -> Result<ReportRecord, RunError> {
    let n = ps.usize("n", 100)?;
    let num_points = ps.usize("num_points", 100)?;
    let m = ps.usize("m", 50)?;
    let opts = DeviationOptions {
        c_const: ps.f64("c_const", 4.0)?,
        gamma_draws: ps.usize("gamma_draws", 2000)?,
        k_draws: ps.usize("k_draws", 20_000)?,
        ..Default::default()
    };
    let rng = RngStream::new(seed);
    // the evaluation set: random unit vectors from a dedicated stream
    let mut pstream = rng.split(u64::MAX - 7);
    let points: Vec<Vec<f64>> = (0..num_points)
        .map(|_| {
            let mut g = vec![0.0; n];
            pstream.fill_gaussian(&mut g);
            let nm = norm2(&g);
            g.iter().map(|v| v / nm).collect()
        })
        .collect();
    let t = SetDescriptor::finite(points).map_err(|e| usage(e.to_string()))?;
    let spec = EnsembleSpec::gaussian(n);

    let rep = deviation_audit(&t, &spec, m, trials, &rng.split(1), &opts)
        .map_err(experiment_err)?;

    let mut record = ReportRecord::new("deviation", seed, trials);
    record.parameters = ps.echo();
    record.per_trial = rep
        .per_trial_deviation
        .iter()
        .zip(&rep.per_trial_sq_deviation)
        .enumerate()
        .map(|(trial, (&dev, &sq))| TrialRow {
            trial,
            metrics: metrics(&[("deviation", dev), ("sq_deviation", sq)]),
        })
        .collect();
    record.aggregate_metric("deviation");
    record.aggregate_metric("sq_deviation");
    record.bounds.insert("gamma".into(), rep.gamma.mean);
    record.bounds.insert("gamma_stderr".into(), rep.gamma.stderr);
    record.bounds.insert("radius".into(), rep.rad);
    record.bounds.insert("k_estimate".into(), rep.k_estimate);
    record.bounds.insert("bound_deviation".into(), rep.bound_deviation);
    record.bounds.insert("bound_sq_deviation".into(), rep.bound_sq_deviation);
    Ok(record)
}

pub const SPARSE_PARAMS: &[&str] = &[
    "n",
    "s",
    "m",
    "ensemble",
    "c_const",
    "a_csv",
    "y_csv",
    "solution_out",
];

fn parse_matrix_csv(text: &str) -> Result<GenMatrix, RunError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| usage(format!("csv line {}: {e}", idx + 1)))?);
    }
    GenMatrix::from_rows(&rows).map_err(|e| usage(e.to_string()))
}

pub fn run_sparse(ps: &ParamSet, seed: u64, trials: usize) -> Result<ReportRecord, RunError> {
    if let (Some(a_path), Some(y_path)) = (ps.opt_string("a_csv")?, ps.opt_string("y_csv")?) {
        // solve one imported problem
        let a = parse_matrix_csv(&read_file(&a_path)?)?;
        let y_mat = parse_matrix_csv(&read_file(&y_path)?)?;
        let y: Vec<f64> = if y_mat.cols() == 1 {
            y_mat.column(0)
        } else if y_mat.rows() == 1 {
            y_mat.row(0).to_vec()
        } else {
            return Err(usage("y csv must be a single row or column"));
        };
        let problem = RecoveryProblem::new(a, y).map_err(|e| usage(e.to_string()))?;
        let sol = basis_pursuit(&problem).map_err(experiment_err)?;
        let status = match sol.status {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::Infeasible => "infeasible",
        };
        if let Some(out) = ps.opt_string("solution_out")? {
            let doc = json!({
                "x_hat": sol.x_hat,
                "objective": sol.objective,
                "residual": sol.residual,
                "status": status,
            });
            write_file(&out, &serde_json::to_string_pretty(&doc).expect("json"))?;
        }
        let mut record = ReportRecord::new("sparse", seed, 1);
        record.parameters = ps.echo();
        record.per_trial = vec![TrialRow {
            trial: 0,
            metrics: metrics(&[
                ("objective", sol.objective),
                ("residual", sol.residual),
                ("iterations", sol.iterations as f64),
                ("solution_l0", l0_norm_with_threshold(&sol.x_hat, 1e-10) as f64),
                ("optimal", if sol.status == SolveStatus::Optimal { 1.0 } else { 0.0 }),
            ]),
        }];
        return Ok(record);
    }

    let n = ps.usize("n", 200)?;
    let s = ps.usize("s", 5)?;
    let m = ps.usize("m", 150)?;
    let kind = parse_ensemble(&ps.string("ensemble", "gaussian")?)?;
    let c_const = ps.f64("c_const", 1.0)?;
    let spec = EnsembleSpec::new(kind, n).map_err(|e| usage(e.to_string()))?;
    let rep = sparse_experiment(n, s, m, &spec, trials, &RngStream::new(seed), c_const)
        .map_err(|e| usage(e.to_string()))?;
    if rep.m_capped {
        eprintln!(
            "warning: m = {} does not satisfy m < n = {n}; capped to {}",
            rep.m_requested, rep.m_used
        );
    }

    let mut record = ReportRecord::new("sparse", seed, trials);
    record.parameters = ps.echo();
    record.per_trial = rep
        .per_trial_error
        .iter()
        .enumerate()
        .map(|(trial, &err)| TrialRow {
            trial,
            metrics: metrics(&[
                ("error", err),
                ("exact", if err <= EXACT_RECOVERY_TOL { 1.0 } else { 0.0 }),
            ]),
        })
        .collect();
    record.aggregate_metric("error");
    record.aggregate_metric("exact");
    record
        .aggregates
        .insert("exact_recovery_rate".into(), rep.exact_recovery_rate);
    record.bounds.insert("theory_curve".into(), rep.theory_curve);
    record.bounds.insert("m_used".into(), rep.m_used as f64);
    record.bounds.insert("signal_l0".into(), rep.signal_l0 as f64);
    Ok(record)
}

pub const BOUNDS_AUDIT_PARAMS: &[&str] = &[
    "family",
    "n_terms",
    "dim",
    "t_max",
    "grid_points",
    "c_exponent",
];

pub fn run_bounds_audit(ps: &ParamSet, seed: u64, trials: usize) -> Result<ReportRecord, RunError> {
    let family = ps.string("family", "hoeffding")?;
    let n_terms = ps.usize("n_terms", 20)?;
    let dim = ps.usize("dim", 10)?;
    let grid_points = ps.usize("grid_points", 20)?;
    let c_exponent = ps.f64("c_exponent", 0.25)?;
    if n_terms == 0 {
        return Err(usage("n_terms must be positive"));
    }
    if grid_points < 2 {
        return Err(usage("grid_points must be at least 2"));
    }
    let rng = RngStream::new(seed);

    // canonical statistic + exact (or pre-estimated) parameters per family
    type Sampler = Box<dyn Fn(&mut RngStream) -> f64 + Sync>;
    let psi2_sign = 1.0 / 2f64.ln().sqrt();
    let (bound, sampler): (TailBound, Sampler) =
        match family.as_str() {
            "hoeffding" => (
                TailBound::new(
                    BoundFamily::Hoeffding,
                    BoundParams::hoeffding(vec![psi2_sign; n_terms]).with_c_exponent(c_exponent),
                ),
                Box::new(move |s: &mut RngStream| (0..n_terms).map(|_| s.sign()).sum()),
            ),
            "bernstein" => {
                // sum of centered squared gaussians; psi1 estimated once
                let mut est_stream = rng.split(u64::MAX - 3);
                let draws: Vec<f64> = (0..200_000)
                    .map(|_| {
                        let g = est_stream.standard_normal();
                        g * g - 1.0
                    })
                    .collect();
                let psi1 = estimate_psi1(&draws).map_err(experiment_err)?;
                (
                    TailBound::new(
                        BoundFamily::Bernstein,
                        BoundParams::bernstein(vec![psi1; n_terms]).with_c_exponent(c_exponent),
                    ),
                    Box::new(move |s: &mut RngStream| {
                        (0..n_terms)
                            .map(|_| {
                                let g = s.standard_normal();
                                g * g - 1.0
                            })
                            .sum()
                    }),
                )
            }
            "bernstein_bounded" => (
                TailBound::new(
                    BoundFamily::BernsteinBounded,
                    BoundParams::bounded(n_terms as f64, 1.0),
                ),
                Box::new(move |s: &mut RngStream| (0..n_terms).map(|_| s.sign()).sum()),
            ),
            "matrix_bernstein" => {
                if dim < 2 {
                    return Err(usage("dim must be at least 2"));
                }
                let sigma2 = 2.0 * n_terms as f64 / dim as f64;
                (
                    TailBound::new(
                        BoundFamily::MatrixBernstein,
                        BoundParams::matrix_bernstein(dim, sigma2, 1.0),
                    ),
                    Box::new(move |s: &mut RngStream| {
                        let mut acc = vec![0.0f64; dim * dim];
                        for _ in 0..n_terms {
                            let j = s.below(dim as u64) as usize;
                            let mut k = s.below((dim - 1) as u64) as usize;
                            if k >= j {
                                k += 1;
                            }
                            let sign = s.sign();
                            acc[j * dim + k] += sign;
                            acc[k * dim + j] += sign;
                        }
                        SymMatrix::new(dim, acc)
                            .expect("finite entries")
                            .operator_norm()
                            .expect("jacobi converges on small matrices")
                    }),
                )
            }
            other => {
                return Err(usage(format!(
                    "family must be hoeffding|bernstein|bernstein_bounded|matrix_bernstein, got '{other}'"
                )))
            }
        };

    let variance_proxy = match family.as_str() {
        "hoeffding" => bound.params.psi2_norms.iter().map(|k| k * k).sum::<f64>(),
        "bernstein" => bound.params.psi1_norms.iter().map(|k| k * k).sum::<f64>(),
        _ => bound.params.sigma2,
    };
    let t_max = match ps.f64("t_max", 0.0)? {
        v if v > 0.0 => v,
        _ => 4.0 * variance_proxy.sqrt(),
    };
    let grid = linear_grid(t_max, grid_points);
    let audit = bound_audit(&bound, sampler, &grid, trials, &rng.split(1))
        .map_err(|e| usage(e.to_string()))?;

    let mut record = ReportRecord::new("bounds_audit", seed, trials);
    record.parameters = ps.echo();
    record.per_trial = audit
        .points
        .iter()
        .enumerate()
        .map(|(idx, pt)| TrialRow {
            trial: idx,
            metrics: metrics(&[
                ("t", pt.t),
                ("bound", pt.bound),
                ("p_hat", pt.p_hat),
                ("upper_conf", pt.upper_conf),
                ("margin", pt.margin),
            ]),
        })
        .collect();
    record.aggregates.insert("worst_margin".into(), audit.worst_margin);
    record.bounds.insert("t_max".into(), t_max);
    record.verdicts.insert("pass_dominates".into(), audit.pass);
    Ok(record)
}
