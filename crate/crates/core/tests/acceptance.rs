//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Select criteria by number: `cargo test --test acceptance -- 1 4 9`.

use std::fs;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use jumpdf::design::{build_design, draw_noise, BetaSpec, DesignSpec, DesignType, NoiseKind, NoiseModel};
use jumpdf::experiment::{run_study, verify_df_identity, write_study_outputs, StudyConfig};
use jumpdf::lasso::{check_scaling_property, compute_path, kkt_certificate, GridSpec, SolverOptions};
use jumpdf::risk::{risk_cv, RiskMethod, SigmaSource};
use jumpdf::smoother::{DfMethod, KdeConfig};
use jumpdf::stats::McEstimate;
use jumpdf::subset::check_subset_scaling;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

/// Standard normal upper tail by composite Simpson integration of the
/// density; kept apart from the library's CDF on purpose.
fn upper_tail(x: f64) -> f64 {
    let (a, b, m) = (x, x + 14.0, 40_000);
    let h = (b - a) / m as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(a) + pdf(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(a + i as f64 * h);
    }
    s * h / 3.0
}

fn density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Indices of the central 60% of a grid of length `m`.
fn central(m: usize) -> std::ops::Range<usize> {
    let cut = m / 5;
    cut..m - cut
}

fn orthogonal_config(seed: u64) -> StudyConfig {
    StudyConfig {
        name: "orthogonal".into(),
        design: DesignSpec::orthogonal(100),
        beta: BetaSpec { gamma: 1.0, alpha: 0.0 },
        noise: NoiseModel { kind: NoiseKind::Gaussian, sigma: 1.0 },
        n_reps: 1000,
        truth_reps: Some(1000),
        grid: GridSpec::Auto { n_lambda: 100, ratio: None },
        methods: vec![RiskMethod::Df, RiskMethod::DfS],
        sigma_mode: SigmaSource::Known,
        estimator: DfMethod::LassoOls,
        kde: KdeConfig::default(),
        solver: SolverOptions::default(),
        root_seed: seed,
    }
}

fn orthogonal_df_s(lambda: f64) -> f64 {
    100.0 * 2.0 * upper_tail(lambda)
}

fn orthogonal_df(lambda: f64) -> f64 {
    orthogonal_df_s(lambda) + 2.0 * 100.0 * lambda * density(lambda)
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let rep = match verify_df_identity(&orthogonal_config(101)) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("study failed: {e}")),
    };
    let secs = t.elapsed().as_secs_f64();
    let mut worst: f64 = 0.0;
    for (k, &l) in rep.lambda_grid.iter().enumerate() {
        let d = rep.dim[k];
        let z = (d.mean - orthogonal_df_s(l)).abs() / d.se.max(1e-12);
        worst = worst.max(z);
    }
    let at_one = orthogonal_df_s(1.0);
    let pass = worst <= 3.0 && (at_one - 31.731).abs() < 5e-4 && secs < 60.0;
    Outcome::new(
        pass,
        format!(
            "{} grid points, worst |z| = {worst:.2}; oracle at lambda=1: {at_one:.3}; {secs:.1}s",
            rep.lambda_grid.len()
        ),
    )
}

fn criterion_2() -> Outcome {
    // Covariance df at lambda = 1 on a short explicit grid.
    let mut cfg = orthogonal_config(202);
    cfg.grid = GridSpec::Explicit {
        lambdas: vec![2.0, 1.5, 1.0, 0.5],
    };
    let point = match verify_df_identity(&cfg) {
        Ok(r) => r.cov_df[2],
        Err(e) => return Outcome::new(false, format!("study failed: {e}")),
    };
    let target = orthogonal_df(1.0);
    let z1 = (point.mean - target).abs() / point.se;

    let rep = match verify_df_identity(&orthogonal_config(203)) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("study failed: {e}")),
    };
    let mut worst_rel: f64 = 0.0;
    for k in central(rep.lambda_grid.len()) {
        let truth = orthogonal_df(rep.lambda_grid[k]);
        worst_rel = worst_rel.max((rep.df_hat[k].mean - truth).abs() / truth);
    }
    let pass = (target - 80.126).abs() < 5e-3 && z1 <= 3.0 && worst_rel <= 0.10;
    Outcome::new(
        pass,
        format!(
            "cov df at lambda=1: {:.3} +/- {:.3} vs {target:.3} (|z| = {z1:.2}); \
             worst relative error of mean dim + correction on central grid: {:.1}%",
            point.mean,
            point.se,
            100.0 * worst_rel
        ),
    )
}

fn criterion_3() -> Outcome {
    let cfg = orthogonal_config(303);
    let res = match run_study(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("study failed: {e}")),
    };
    let z = |curve: &[McEstimate], k: usize| {
        let t = res.truth_ols[k];
        (curve[k].mean - t.mean).abs() / curve[k].combined_se(&t)
    };
    let df_curve = &res.risk_curves[0];
    let dfs_curve = &res.risk_curves[1];
    let m = res.lambda_grid.len();
    let worst_df = central(m).map(|k| z(df_curve, k)).fold(0.0, f64::max);
    let worst_dfs = (0..m).map(|k| z(dfs_curve, k)).fold(0.0, f64::max);
    Outcome::new(
        worst_df <= 3.0 && worst_dfs > 3.0,
        format!("worst |z| corrected: {worst_df:.2} (central grid); uncorrected: {worst_dfs:.2}"),
    )
}

fn criterion_4() -> Outcome {
    let x = DMatrix::<f64>::identity(100, 100);
    let mut worst: f64 = 0.0;
    for rep in 0..50u64 {
        let noise = NoiseModel { kind: NoiseKind::Gaussian, sigma: 1.0 };
        let eps = match draw_noise(&noise, 100, 4000 + rep) {
            Ok(e) => e,
            Err(e) => return Outcome::new(false, format!("noise: {e}")),
        };
        let mut y = eps;
        for i in 0..10 {
            y[i] += 3.0;
        }
        let lmax = y.amax();
        let grid = jumpdf::lasso::log_spaced(lmax, lmax * 1e-3, 50).expect("grid");
        let curve = match risk_cv(&x, &y, 5, &grid, 1.0, SigmaSource::Known, rep) {
            Ok(c) => c,
            Err(e) => return Outcome::new(false, format!("cv failed: {e}")),
        };
        let (lo, hi) = curve
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        worst = worst.max((hi - lo) / y.norm_squared());
    }
    Outcome::new(worst < 1e-8, format!("worst (max - min) / ||y||^2 over 50 replications: {worst:.2e}"))
}

fn instance() -> impl Strategy<Value = (usize, usize, u64, f64)> {
    (5usize..30, 2usize..12, any::<u64>(), 0.05f64..20.0)
}

fn gaussian(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let x = build_design(&DesignSpec::simulated(DesignType::SimulatedAR, n, p, 0.3), seed)
        .expect("design")
        .x;
    let noise = NoiseModel { kind: NoiseKind::Gaussian, sigma: 1.0 };
    let mut y = draw_noise(&noise, n, seed ^ 0x9e37_79b9).expect("noise");
    y += x.column(0) * 2.0;
    (x, y)
}

fn criterion_5() -> Outcome {
    let config = Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    };
    let mut detail = Vec::new();
    let mut pass = true;
    for (label, bss) in [("lasso", false), ("best subset", true)] {
        let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
        let mut runner = TestRunner::new_with_rng(config.clone(), rng);
        let result = runner.run(&instance(), |(n, p, seed, lambda)| {
            let (x, y) = gaussian(n, p, seed);
            let check = if bss {
                check_subset_scaling(&x, &y, lambda)
            } else {
                check_scaling_property(&x, &y, lambda)
            }
            .map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert_eq!(&check.active_scaled, &check.active_unit);
            prop_assert!(check.coef_deviation <= 1e-8 * check.coef_scale, "deviation {}", check.coef_deviation);
            Ok(())
        });
        match result {
            Ok(()) => detail.push(format!("{label}: 100/100")),
            Err(e) => {
                pass = false;
                detail.push(format!("{label}: {e}"));
            }
        }
    }
    Outcome::new(pass, detail.join("; "))
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let cfg = StudyConfig {
        name: "best_subset".into(),
        design: DesignSpec::simulated(DesignType::SimulatedConstCorr, 10, 10, 0.1),
        beta: BetaSpec { gamma: 1.0, alpha: 0.1 },
        noise: NoiseModel { kind: NoiseKind::Gaussian, sigma: 0.5 },
        n_reps: 2000,
        truth_reps: Some(0),
        grid: GridSpec::Auto { n_lambda: 60, ratio: None },
        methods: vec![RiskMethod::Df],
        sigma_mode: SigmaSource::Known,
        estimator: DfMethod::BestSubset,
        kde: KdeConfig::default(),
        solver: SolverOptions::default(),
        root_seed: 606,
    };
    let rep = match verify_df_identity(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("study failed: {e}")),
    };
    let mid = central(rep.lambda_grid.len());
    let min_gap = mid
        .clone()
        .map(|k| (rep.cov_df[k].mean - rep.dim[k].mean) / rep.cov_df[k].combined_se(&rep.dim[k]))
        .fold(f64::INFINITY, f64::min);
    let worst_rel = mid
        .map(|k| (rep.df_hat[k].mean - rep.cov_df[k].mean).abs() / rep.cov_df[k].mean)
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    Outcome::new(
        min_gap > 2.0 && worst_rel <= 0.15 && secs < 600.0,
        format!(
            "smallest (cov df - dim) / se on central grid: {min_gap:.1}; \
             worst relative gap of dim + 2 correction: {:.1}%; {secs:.1}s",
            100.0 * worst_rel
        ),
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let cfg = StudyConfig {
        name: "study1_desk".into(),
        design: DesignSpec::simulated(DesignType::SimulatedConstCorr, 200, 2000, 0.1),
        beta: BetaSpec { gamma: 1.0, alpha: 0.1 },
        noise: NoiseModel { kind: NoiseKind::Gaussian, sigma: 0.5 },
        n_reps: 200,
        truth_reps: Some(200),
        grid: GridSpec::Auto { n_lambda: 100, ratio: None },
        methods: RiskMethod::ALL.to_vec(),
        sigma_mode: SigmaSource::Known,
        estimator: DfMethod::LassoOls,
        kde: KdeConfig::default(),
        solver: SolverOptions::default(),
        root_seed: 707,
    };
    let res = match run_study(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("study failed: {e}")),
    };
    let mse = |m| res.mse_row(m).expect("method present").integrated;
    let sel = |m| res.method(m).expect("method present").selected.mean;
    let (df, cv5, cv10) = (mse(RiskMethod::Df), mse(RiskMethod::Cv5), mse(RiskMethod::Cv10));
    let (sel_df, sel_lasso) = (sel(RiskMethod::Df), sel(RiskMethod::Lasso));
    Outcome::new(
        df < cv5 && df < cv10 && sel_df < sel_lasso,
        format!(
            "integrated MSE df {df:.4e}, cv5 {cv5:.4e}, cv10 {cv10:.4e}; \
             selected df {sel_df:.2} vs lasso {sel_lasso:.2}; {:.0}s",
            t.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let specs = [
        DesignSpec::orthogonal(40),
        DesignSpec::simulated(DesignType::SimulatedAR, 50, 30, 0.7),
        DesignSpec::simulated(DesignType::SimulatedConstCorr, 40, 200, 0.3),
        DesignSpec::simulated(DesignType::SimulatedConstCorr, 60, 60, 0.0),
    ];
    let mut solutions = 0;
    let mut projections = 0;
    let mut worst_proj: f64 = 0.0;
    for (s, spec) in specs.iter().enumerate() {
        for rep in 0..5u64 {
            let seed = 800 + 10 * s as u64 + rep;
            let x = build_design(spec, seed).expect("design").x;
            let noise = NoiseModel { kind: NoiseKind::Gaussian, sigma: 1.0 };
            let mut y = draw_noise(&noise, spec.n, seed + 1).expect("noise");
            for j in 0..3 {
                y += x.column(j) * 2.0;
            }
            let path = match compute_path(&x, &y, &GridSpec::Auto { n_lambda: 60, ratio: None }) {
                Ok(p) => p,
                Err(e) => return Outcome::new(false, format!("path failed: {e}")),
            };
            for (k, &l) in path.lambdas.iter().enumerate() {
                if !kkt_certificate(&x, &y, &path.coefs[k], l).satisfied {
                    return Outcome::new(false, format!("KKT violated: design {s}, rep {rep}, lambda {l}"));
                }
                solutions += 1;
            }
            let ny = y.norm_squared();
            for proj in &path.projections {
                let q = proj.basis_matrix();
                let p = &q * q.transpose();
                let idem = (&p * &p - &p).amax();
                let sym = (&p - p.transpose()).amax();
                let py = proj.apply(y.as_slice());
                let pyth = (py.norm_squared() + (&y - &py).norm_squared() - ny).abs() / ny;
                worst_proj = worst_proj.max(idem).max(sym).max(pyth);
                projections += 1;
            }
        }
    }
    Outcome::new(
        worst_proj <= 1e-8,
        format!("{solutions} solutions certified; {projections} projections, worst deviation {worst_proj:.1e}"),
    )
}

fn criterion_9() -> Outcome {
    let cfg = StudyConfig {
        name: "determinism".into(),
        design: DesignSpec::simulated(DesignType::SimulatedConstCorr, 40, 60, 0.2),
        beta: BetaSpec { gamma: 0.9, alpha: 0.1 },
        noise: NoiseModel { kind: NoiseKind::StudentT3, sigma: 0.8 },
        n_reps: 30,
        truth_reps: Some(30),
        grid: GridSpec::Auto { n_lambda: 40, ratio: None },
        methods: RiskMethod::ALL.to_vec(),
        sigma_mode: SigmaSource::GcvEstimated,
        estimator: DfMethod::LassoOls,
        kde: KdeConfig::default(),
        solver: SolverOptions::default(),
        root_seed: 909,
    };
    let tables = ["summary.csv", "curves.csv", "mse.csv", "truth.csv", "df.csv"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().expect("temp dir");
        let res = match run_study(&cfg) {
            Ok(r) => r,
            Err(e) => return Outcome::new(false, format!("study failed: {e}")),
        };
        write_study_outputs(&cfg, &res, dir.path()).expect("outputs");
        let rep = verify_df_identity(&cfg).expect("df report");
        rep.write_csv(fs::File::create(dir.path().join("df.csv")).expect("create")).expect("write");
        let bytes: Vec<Vec<u8>> = tables
            .iter()
            .map(|t| fs::read(dir.path().join(t)).expect("table written"))
            .collect();
        runs.push(bytes);
    }
    let differing: Vec<&str> = tables
        .iter()
        .zip(runs[0].iter().zip(&runs[1]))
        .filter(|(_, (a, b))| a != b)
        .map(|(t, _)| *t)
        .collect();
    Outcome::new(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} tables identical across two runs", tables.len())
        } else {
            format!("tables differ: {}", differing.join(", "))
        },
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "orthogonal selected dimension", criterion_1),
        (2, "orthogonal df identity", criterion_2),
        (3, "unbiased risk estimate", criterion_3),
        (4, "cross-validation constant on orthogonal designs", criterion_4),
        (5, "scaling laws", criterion_5),
        (6, "best subset df gap", criterion_6),
        (7, "desk-scale study ordering", criterion_7),
        (8, "KKT and projection checks", criterion_8),
        (9, "determinism", criterion_9),
    ];
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if !args.is_empty() && selected.is_empty() {
        // A name filter meant for other test targets.
        return;
    }
    let mut failed = 0;
    for (id, title, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let outcome = run();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} ({title}): {status}: {}", outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
