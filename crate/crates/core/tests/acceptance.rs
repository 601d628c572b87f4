//! Acceptance suite: one test per shipped guarantee, each printing a
//! PASS/FAIL line (run with `--nocapture` to see them). Parameters and
//! thresholds are pinned here, not configurable.

use rayon::prelude::*;

use hdp_core::bounds::{
    bound_audit, linear_grid, BoundFamily, BoundParams, TailBound,
};
use hdp_core::completion::CompletionInstance;
use hdp_core::ensembles::{
    estimate_psi1, estimate_psi2, sample_matrix, EnsembleKind, EnsembleSpec,
};
use hdp_core::estimation::{estimation_error, CovarianceModel};
use hdp_core::geometry::{
    deviation_audit, gaussian_complexity_mc, DeviationOptions, LpExponent, SetDescriptor,
};
use hdp_core::jl::{choose_target_dim, distortion_audit, project};
use hdp_core::linalg::{norm2, SymMatrix};
use hdp_core::networks::{
    concentration_diagnostic, misclassification_rate, sample_sbm, spectral_cluster, SbmParams,
};
use hdp_core::recovery::{
    basis_pursuit, lp_oracle_small, plant_sparse_signal, sparse_experiment, RecoveryProblem,
    SolveStatus, EXACT_RECOVERY_TOL,
};
use hdp_core::rng::RngStream;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_01_hoeffding_dominance() {
    // sum of N=20 rademachers, 1e5 trials, c = 1/4, 20-point grid on
    // [0, 4 sqrt(N)]; the bound must dominate the 99% upper confidence at
    // every grid point
    let n_terms = 20usize;
    let psi2 = 1.0 / 2f64.ln().sqrt();
    let bound = TailBound::new(
        BoundFamily::Hoeffding,
        BoundParams::hoeffding(vec![psi2; n_terms]),
    );
    let grid = linear_grid(4.0 * (n_terms as f64).sqrt(), 20);
    let rep = bound_audit(
        &bound,
        |s: &mut RngStream| (0..n_terms).map(|_| s.sign()).sum::<f64>(),
        &grid,
        100_000,
        &RngStream::new(101),
    )
    .unwrap();
    report(
        "1 (Hoeffding dominance)",
        rep.pass,
        &format!("worst margin {:.4e}", rep.worst_margin),
    );
    assert!(rep.pass, "violations on the grid, worst margin {}", rep.worst_margin);
}

#[test]
fn criterion_02_matrix_bernstein_dominance() {
    // S = sum of N=50 random-sign symmetric pair matrices in dimension 10:
    // X_i = eps (e_j e_k' + e_k e_j'), sigma^2 = 2N/n exactly, K = 1
    let (n_terms, dim) = (50usize, 10usize);
    let sigma2 = 2.0 * n_terms as f64 / dim as f64;
    let bound = TailBound::new(
        BoundFamily::MatrixBernstein,
        BoundParams::matrix_bernstein(dim, sigma2, 1.0),
    );
    let grid = linear_grid(12.0, 20);
    let rep = bound_audit(
        &bound,
        |s: &mut RngStream| {
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
            SymMatrix::new(dim, acc).unwrap().operator_norm().unwrap()
        },
        &grid,
        10_000,
        &RngStream::new(202),
    )
    .unwrap();
    report(
        "2 (matrix Bernstein dominance)",
        rep.pass,
        &format!("worst margin {:.4e}", rep.worst_margin),
    );
    assert!(rep.pass, "violations on the grid, worst margin {}", rep.worst_margin);
}

#[test]
fn criterion_03_jl_distortion() {
    let (n, n_pts, eps, c_jl) = (50usize, 100usize, 0.25f64, 8.0f64);
    let m_full = choose_target_dim(eps, n_pts, c_jl);
    assert_eq!(m_full, 590);
    let m_quarter = m_full / 4;
    let spec = EnsembleSpec::gaussian(n);

    let failures = |m: usize| -> usize {
        (0..100u64)
            .into_par_iter()
            .filter(|&seed| {
                let mut s = RngStream::new(303).split(seed);
                let pts = sample_matrix(&spec, n_pts, &mut s);
                let emb = project(&pts, m, &spec, &mut s);
                !distortion_audit(&pts, &emb).unwrap().within(eps)
            })
            .count()
    };
    let fail_full = failures(m_full);
    let fail_quarter = failures(m_quarter);
    let pass = fail_full <= 1 && fail_quarter >= 5;
    report(
        "3 (JL distortion)",
        pass,
        &format!(
            "m={m_full}: {}/100 seeds failed; m/4={m_quarter}: {}/100 failed",
            fail_full, fail_quarter
        ),
    );
    assert!(fail_full <= 1, "distortion failed in {fail_full}/100 seeds at m={m_full}");
    assert!(
        fail_quarter >= 5,
        "bound looks vacuous: only {fail_quarter}/100 failures at m={m_quarter}"
    );
}

#[test]
fn criterion_04_sbm_clustering_and_concentration() {
    let params = SbmParams::new(200, 1.0 / 20.0, 1.0 / 200.0).unwrap();

    let good = (0..100u64)
        .into_par_iter()
        .filter(|&seed| {
            let mut s = RngStream::new(404).split(seed);
            let (g, truth) = sample_sbm(&params, &mut s).unwrap();
            let pred = spectral_cluster(&g).unwrap();
            misclassification_rate(&pred, &truth).unwrap() <= 0.15
        })
        .count();

    let conc = concentration_diagnostic(&params, 50, &RngStream::new(405), 3.0).unwrap();
    let per_seed_ok = conc
        .deviations
        .iter()
        .all(|&dev| dev <= conc.bound);

    let pass = good >= 90 && per_seed_ok;
    report(
        "4 (SBM recovery + concentration)",
        pass,
        &format!(
            "misclassification <= 0.15 in {good}/100 seeds; max ratio {:.3}",
            conc.deviations.iter().cloned().fold(0.0f64, f64::max) / conc.bound * 3.0
        ),
    );
    assert!(good >= 90, "only {good}/100 seeds under 0.15 misclassification");
    assert!(per_seed_ok, "a seed exceeded 3 (sqrt(d log n) + log n)");
}

#[test]
fn criterion_05_sbm_null_model() {
    let params = SbmParams::new(200, 0.025, 0.025).unwrap();
    let total: f64 = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut s = RngStream::new(505).split(seed);
            let (g, truth) = sample_sbm(&params, &mut s).unwrap();
            let pred = spectral_cluster(&g).unwrap();
            misclassification_rate(&pred, &truth).unwrap()
        })
        .sum();
    let mean = total / 100.0;
    let pass = (0.4..=0.5).contains(&mean);
    report("5 (SBM null model)", pass, &format!("mean misclassification {mean:.4}"));
    assert!(pass, "mean misclassification {mean} outside [0.4, 0.5]");
}

#[test]
fn criterion_06_covariance_scaling_and_effective_rank() {
    // (a) sqrt(N)-rescaled error is flat across N for Sigma = I_20
    let model = CovarianceModel::new(SymMatrix::identity(20), EnsembleKind::Gaussian).unwrap();
    let mut rescaled = Vec::new();
    for (i, &n_samples) in [400usize, 1600, 6400].iter().enumerate() {
        let rng = RngStream::new(606).split(i as u64);
        let err = estimation_error(&model, n_samples, 20, &rng).unwrap();
        rescaled.push((n_samples as f64).sqrt() * err);
    }
    let max = rescaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = rescaled.iter().cloned().fold(f64::MAX, f64::min);
    let flat = max / min <= 2.0;

    // (b) spiked covariance with bounded (sign-cube) factors reaches 10%
    // relative error at N = 200 where r ~ 2 but n log n ~ 460
    let mut diag = vec![0.01; 100];
    diag[0] = 1.0;
    let spiked =
        CovarianceModel::new(SymMatrix::from_diag(&diag), EnsembleKind::UniformCube).unwrap();
    let err = estimation_error(&spiked, 200, 20, &RngStream::new(607)).unwrap();
    let low_dim = err <= 0.1;

    let pass = flat && low_dim;
    report(
        "6 (covariance scaling + effective rank)",
        pass,
        &format!(
            "rescaled errors {rescaled:?} (max/min {:.3}); spiked error {err:.4} at N=200",
            max / min
        ),
    );
    assert!(flat, "rescaled errors not flat: {rescaled:?}");
    assert!(low_dim, "spiked-model error {err} above 0.1 ||Sigma||");
}

#[test]
fn criterion_07_matrix_completion() {
    let (n, r) = (100usize, 2usize);
    let bound_c = 1.0;

    let within = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let mut s = RngStream::new(707).split(seed);
            let inst = CompletionInstance::generate(n, r, 0.5, &mut s).unwrap();
            let res = inst.solve(bound_c).unwrap();
            assert!((res.theory_bound - 0.9210).abs() < 1e-2);
            res.per_entry_rmse <= res.theory_bound
        })
        .count();

    let mean_rmse = |p: f64, base: u64| -> f64 {
        let total: f64 = (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let mut s = RngStream::new(base).split(seed);
                let inst = CompletionInstance::generate(n, r, p, &mut s).unwrap();
                inst.solve(bound_c).unwrap().per_entry_rmse
            })
            .sum();
        total / 20.0
    };
    let coarse = mean_rmse(0.5, 708);
    let fine = mean_rmse(0.8, 708);

    let pass = within >= 45 && coarse >= fine;
    report(
        "7 (matrix completion)",
        pass,
        &format!(
            "rmse <= bound in {within}/50 seeds; mean rmse m=5000: {coarse:.4} vs m=8000: {fine:.4}"
        ),
    );
    assert!(within >= 45, "only {within}/50 seeds under the theory bound");
    assert!(coarse >= fine, "rmse increased with oversampling");
}

#[test]
fn criterion_08_gaussian_width_values() {
    let rng = RngStream::new(808);
    // gamma(B_2^n) / sqrt(n) in [0.9, 1.05]
    let mut b2_ok = true;
    let mut b2_detail = String::new();
    for n in [10usize, 100, 1000] {
        let b2 = SetDescriptor::lp_ball(LpExponent::Two, 1.0, n).unwrap();
        let est = gaussian_complexity_mc(&b2, 4000, &rng.split(n as u64)).unwrap();
        let ratio = est.mean / (n as f64).sqrt();
        b2_detail.push_str(&format!("B2({n}): {ratio:.4} "));
        b2_ok &= (0.9..=1.05).contains(&ratio);
    }
    // gamma(B_1^n) / sqrt(2 ln n) in [0.7, 1.3]
    let mut b1_ok = true;
    let mut b1_detail = String::new();
    for n in [16usize, 256, 4096] {
        let b1 = SetDescriptor::lp_ball(LpExponent::One, 1.0, n).unwrap();
        let est = gaussian_complexity_mc(&b1, 4000, &rng.split(1_000 + n as u64)).unwrap();
        let ratio = est.mean / (2.0 * (n as f64).ln()).sqrt();
        b1_detail.push_str(&format!("B1({n}): {ratio:.4} "));
        b1_ok &= (0.7..=1.3).contains(&ratio);
    }
    // singleton gamma within 3 stderr of sqrt(2/pi) ||x||
    let x = vec![1.0, -2.0, 2.0];
    let singleton = SetDescriptor::finite(vec![x.clone()]).unwrap();
    let est = gaussian_complexity_mc(&singleton, 100_000, &rng.split(77)).unwrap();
    let want = (2.0 / std::f64::consts::PI).sqrt() * norm2(&x);
    let singleton_ok = (est.mean - want).abs() <= 3.0 * est.stderr;

    let pass = b2_ok && b1_ok && singleton_ok;
    report(
        "8 (gaussian width values)",
        pass,
        &format!("{b2_detail}| {b1_detail}| singleton {:.4} vs {want:.4}", est.mean),
    );
    assert!(b2_ok, "{b2_detail}");
    assert!(b1_ok, "{b1_detail}");
    assert!(singleton_ok, "singleton {} want {want} stderr {}", est.mean, est.stderr);
}

#[test]
fn criterion_09_matrix_deviation() {
    // T = 100 random unit vectors in ambient dimension 100, m = 50 rows
    let n = 100usize;
    let mut prng = RngStream::new(909);
    let points: Vec<Vec<f64>> = (0..100)
        .map(|_| {
            let mut g = vec![0.0; n];
            prng.fill_gaussian(&mut g);
            let nm = norm2(&g);
            g.iter().map(|v| v / nm).collect()
        })
        .collect();
    let t = SetDescriptor::finite(points).unwrap();
    let spec = EnsembleSpec::gaussian(n);
    let opts = DeviationOptions { gamma_draws: 4000, k_draws: 50_000, ..Default::default() };
    let rep = deviation_audit(&t, &spec, 50, 200, &RngStream::new(910), &opts).unwrap();
    let dev_ok = rep.mean_deviation <= 4.0 * rep.gamma.mean;

    // single-vector statistic is m-independent within a factor of 3
    let e1 = {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        SetDescriptor::finite(vec![v]).unwrap()
    };
    let mut means = Vec::new();
    for m in [16usize, 64, 256] {
        let small = DeviationOptions { gamma_draws: 500, k_draws: 5_000, ..Default::default() };
        let rep = deviation_audit(&e1, &spec, m, 300, &RngStream::new(911 + m as u64), &small)
            .unwrap();
        means.push(rep.mean_deviation);
    }
    let ratio = means.iter().cloned().fold(f64::MIN, f64::max)
        / means.iter().cloned().fold(f64::MAX, f64::min);
    let single_ok = ratio <= 3.0;

    let pass = dev_ok && single_ok;
    report(
        "9 (matrix deviation)",
        pass,
        &format!(
            "mean deviation {:.3} vs 4*gamma {:.3}; single-vector means {means:?} (ratio {ratio:.2})",
            rep.mean_deviation,
            4.0 * rep.gamma.mean
        ),
    );
    assert!(dev_ok, "deviation {} above 4 gamma {}", rep.mean_deviation, rep.gamma.mean);
    assert!(single_ok, "single-vector means spread by {ratio}: {means:?}");
}

#[test]
fn criterion_10_sparse_recovery_phase_transition() {
    let (n, s) = (200usize, 5usize);
    let spec = EnsembleSpec::gaussian(n);

    // one solve per seed at m = 150, scoring recovery and the duality
    // certificate together (criterion 11 references these certificates)
    let outcomes: Vec<(bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut stream = RngStream::new(1010).split(seed);
            let x = plant_sparse_signal(n, s, &mut stream);
            let a = sample_matrix(&spec, 150, &mut stream);
            let y = a.mat_vec(&x);
            let sol =
                basis_pursuit(&RecoveryProblem::new(a.clone(), y.clone()).unwrap()).unwrap();
            let err = sol
                .x_hat
                .iter()
                .zip(&x)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            let cert = if sol.status != SolveStatus::Optimal {
                true
            } else if let Some(nu) = &sol.dual {
                let linf = (0..n)
                    .map(|j| {
                        a.column(j)
                            .iter()
                            .zip(nu)
                            .map(|(u, v)| u * v)
                            .sum::<f64>()
                            .abs()
                    })
                    .fold(0.0f64, f64::max);
                let nu_y: f64 = nu.iter().zip(&y).map(|(u, v)| u * v).sum();
                linf <= 1.0 + 1e-8 && nu_y >= sol.objective - 1e-6 * (1.0 + sol.objective)
            } else {
                false
            };
            (err <= EXACT_RECOVERY_TOL, cert)
        })
        .collect();
    let hits_150 = outcomes.iter().filter(|o| o.0).count();
    let certs_ok = outcomes.iter().all(|o| o.1);

    let rep_40 = sparse_experiment(n, s, 40, &spec, 100, &RngStream::new(1011), 1.0).unwrap();
    let hits_40 = (rep_40.exact_recovery_rate * 100.0).round() as usize;

    let pass = hits_150 >= 90 && certs_ok && hits_40 < 50;
    report(
        "10 (sparse recovery)",
        pass,
        &format!(
            "exact recovery {hits_150}/100 at m=150 (certificates {}); {hits_40}/100 at m=40 \
             (criterion expects < 50; the empirical l1 phase transition for n=200, s=5 sits \
             near m ~ 25, so m=40 still recovers)",
            if certs_ok { "all valid" } else { "INVALID" }
        ),
    );
    assert!(hits_150 >= 90, "only {hits_150}/100 exact recoveries at m=150");
    assert!(certs_ok, "a duality certificate failed at m=150");
    assert!(
        hits_40 < 50,
        "exact-recovery rate at m=40 is {hits_40}/100, not below 50/100: at n=200, s=5 \
         the phase transition sits near m ~ 25 and m=40 recovers essentially always"
    );
    let _ = rep_40.mean_error;
}

#[test]
fn criterion_11_solver_oracle_agreement() {
    let worst: f64 = (0..500u64)
        .into_par_iter()
        .map(|trial| {
            let mut s = RngStream::new(1111).split(trial);
            let n = 6 + (s.below(7) as usize); // 6..=12
            let m = (2 + s.below(7) as usize).min(8).min(n - 1); // 2..=8, < n
            let a = sample_matrix(&EnsembleSpec::gaussian(n), m, &mut s);
            let x = plant_sparse_signal(n, (m / 2).max(1), &mut s);
            let y = a.mat_vec(&x);
            let problem = RecoveryProblem::new(a, y).unwrap();
            let fast = basis_pursuit(&problem).unwrap();
            let oracle = lp_oracle_small(&problem).unwrap();
            (fast.objective - oracle.objective).abs()
        })
        .reduce(|| 0.0, f64::max);
    let pass = worst <= 1e-6;
    report(
        "11 (solver vs oracle)",
        pass,
        &format!("max objective gap over 500 instances: {worst:.3e}"),
    );
    assert!(pass, "objective gap {worst} above 1e-6");
}

#[test]
fn criterion_12_orlicz_consistency() {
    let mut rng = RngStream::new(1212);
    let mut xs = vec![0.0; 1_000_000];
    rng.fill_gaussian(&mut xs);
    let p2 = estimate_psi2(&xs).unwrap();
    let squares: Vec<f64> = xs.iter().map(|v| v * v).collect();
    let p1 = estimate_psi1(&squares).unwrap();
    let ratio = p1 / (p2 * p2);
    let pass = (0.8..=1.25).contains(&ratio);
    report(
        "12 (Orlicz consistency)",
        pass,
        &format!("psi1(X^2) / psi2(X)^2 = {ratio:.4}"),
    );
    assert!(pass, "ratio {ratio} outside [0.8, 1.25]");
}
