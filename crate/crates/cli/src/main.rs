use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use jumpdf::design::load_csv_matrix;
use jumpdf::experiment::{run_study, verify_df_identity, write_study_outputs, Manifest, StudyConfig};
use jumpdf::lasso::{compute_path, GridSpec};
use jumpdf::projection::lasso_ols_fit;
use jumpdf::risk::{
    estimate_sigma2_gcv, risk_cv, risk_sure_df, risk_sure_dfs, risk_sure_lasso, write_curves_csv, RiskMethod,
    SigmaSource,
};
use jumpdf::smoother::{estimate_df, DfMethod, KdeConfig};
use jumpdf::subset::{angled_design, region_grid, RegionMethod};

#[derive(Parser)]
#[command(name = "jumpdf", version, about = "Degrees of freedom and risk estimation for lasso-OLS")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo study and write relative risks, MSE tables and a manifest.
    Simulate(StudyArgs),
    /// Compare covariance degrees of freedom with the jump-corrected estimate.
    VerifyDf(StudyArgs),
    /// Print the MSE table of the risk estimates for a study.
    MseTable(StudyArgs),
    /// Classify a square grid of responses for a two-column design.
    Regions(RegionArgs),
    /// Tune lambda for one data set given as CSV files.
    Tune(TuneArgs),
}

#[derive(Parser)]
struct StudyArgs {
    /// JSON study configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<usize>,
}

impl StudyArgs {
    fn load(&self) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::from_json_file(&self.config)
            .with_context(|| format!("reading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.root_seed = seed;
        }
        if let Some(reps) = self.reps {
            cfg.n_reps = reps;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RegionKind {
    Lasso,
    BestSubset,
}

#[derive(Parser)]
struct RegionArgs {
    /// Angle between the two unit columns, in degrees.
    #[arg(long, default_value_t = 90.0)]
    angle: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "lasso")]
    method: RegionKind,
    #[arg(long, default_value_t = 3.0)]
    half_width: f64,
    /// Points per axis.
    #[arg(long, default_value_t = 201)]
    side: usize,
    #[arg(long, default_value = "regions.csv")]
    out: PathBuf,
}

#[derive(Parser)]
struct TuneArgs {
    /// Design matrix, one row per observation.
    #[arg(long)]
    x: PathBuf,
    /// Response, a single column.
    #[arg(long)]
    y: PathBuf,
    /// The CSV files start with a header row.
    #[arg(long)]
    header: bool,
    /// Known noise standard deviation; estimated by GCV when absent.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 100)]
    n_lambda: usize,
    /// Seed for the cross-validation folds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write all risk curves to this CSV file.
    #[arg(long)]
    curves: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate(args) => simulate(&args),
        Command::VerifyDf(args) => verify_df(&args),
        Command::MseTable(args) => mse_table(&args),
        Command::Regions(args) => regions(&args),
        Command::Tune(args) => tune(&args),
    }
}

fn simulate(args: &StudyArgs) -> Result<()> {
    let cfg = args.load()?;
    let res = run_study(&cfg)?;
    let files = write_study_outputs(&cfg, &res, &args.out)?;
    println!("{:<8} {:>14} {:>10} {:>10}", "method", "relative risk", "se", "selected");
    for s in &res.methods {
        println!(
            "{:<8} {:>14.5} {:>10.5} {:>10.2}",
            s.method.name(),
            s.relative_risk.mean,
            s.relative_risk.se,
            s.selected.mean
        );
    }
    println!("{:<8} {:>14.5}", "oracle", res.oracle_relative_risk.mean);
    if res.dropped > 0 {
        println!("dropped {} of {} replications", res.dropped, cfg.n_reps);
    }
    report_files(&files);
    Ok(())
}

fn verify_df(args: &StudyArgs) -> Result<()> {
    let cfg = args.load()?;
    let rep = verify_df_identity(&cfg)?;
    fs::create_dir_all(&args.out)?;
    let csv = args.out.join("df.csv");
    rep.write_csv(File::create(&csv)?)?;
    let manifest = args.out.join("manifest.json");
    Manifest::new(&cfg, vec!["df.csv".into()], Vec::new()).write(&manifest)?;
    let flagged = rep.flagged.iter().filter(|f| **f).count();
    println!(
        "{} grid points, {} with |cov df - estimate| above 3 standard errors",
        rep.lambda_grid.len(),
        flagged
    );
    report_files(&[csv, manifest]);
    Ok(())
}

fn mse_table(args: &StudyArgs) -> Result<()> {
    let cfg = args.load()?;
    if cfg.truth_reps() == 0 {
        bail!("the configuration disables the Monte Carlo truth (truth_reps = 0)");
    }
    let res = run_study(&cfg)?;
    let files = write_study_outputs(&cfg, &res, &args.out)?;
    println!("{:<8} {:>16} {:>16} {:>12}", "method", "integrated MSE", "MSE at optimum", "lambda opt");
    for r in &res.mse {
        println!(
            "{:<8} {:>16.6e} {:>16.6e} {:>12.5}{}",
            r.method.name(),
            r.integrated,
            r.at_optimum,
            r.lambda_opt,
            if r.clipped { "  (window clipped)" } else { "" }
        );
    }
    report_files(&files);
    Ok(())
}

fn regions(args: &RegionArgs) -> Result<()> {
    let x = angled_design(args.angle);
    let method = match args.method {
        RegionKind::Lasso => RegionMethod::Lasso,
        RegionKind::BestSubset => RegionMethod::BestSubset,
    };
    let grid = region_grid(&x, args.lambda, method, args.half_width, args.side)?;
    grid.write_csv(File::create(&args.out)?)?;
    for mask in 0..4u8 {
        println!("{:<6} {} component(s)", jumpdf::subset::region_label(mask), grid.components(mask));
    }
    report_files(std::slice::from_ref(&args.out));
    Ok(())
}

fn load_response(path: &Path, header: bool) -> Result<DVector<f64>> {
    let m = load_csv_matrix(path, header)?;
    if m.ncols() != 1 {
        bail!("{} has {} columns, expected one", path.display(), m.ncols());
    }
    Ok(m.column(0).into_owned())
}

fn tune(args: &TuneArgs) -> Result<()> {
    let x = load_csv_matrix(&args.x, args.header)?;
    let y = load_response(&args.y, args.header)?;
    if x.nrows() != y.len() {
        bail!("X has {} rows but y has {}", x.nrows(), y.len());
    }
    let grid = GridSpec::Auto {
        n_lambda: args.n_lambda,
        ratio: None,
    };
    let path = compute_path(&x, &y, &grid)?;
    let lasso = path.lasso_fits(&x);
    let ols = lasso_ols_fit(&y, &path);
    let (sigma2, source, lambda_gcv) = match args.sigma {
        Some(s) => (s * s, SigmaSource::Known, None),
        None => {
            let (s2, l) = estimate_sigma2_gcv(&y, &lasso, &path.lambdas, &path.dims)?;
            (s2, SigmaSource::GcvEstimated, Some(l))
        }
    };
    let df = estimate_df(&path, DfMethod::LassoOls, &KdeConfig::default());
    let mut curves = Vec::new();
    for method in RiskMethod::ALL {
        let curve = match method {
            RiskMethod::Df => risk_sure_df(&y, &ols, &df, sigma2, source)?,
            RiskMethod::DfS => risk_sure_dfs(&y, &ols, &path.lambdas, &path.dims, sigma2, source)?,
            RiskMethod::Lasso => risk_sure_lasso(&y, &lasso, &path.lambdas, &path.dims, sigma2, source)?,
            RiskMethod::Cv5 | RiskMethod::Cv10 => {
                let k = method.folds().expect("cv method");
                if x.nrows() < k {
                    continue;
                }
                risk_cv(&x, &y, k, &path.lambdas, sigma2, source, args.seed)?
            }
        };
        curves.push(curve);
    }
    let methods: serde_json::Map<String, serde_json::Value> = curves
        .iter()
        .map(|c| {
            let k = c.index_hat;
            let selected = if c.method == RiskMethod::Lasso { path.active_sets[k].len() } else { path.dims[k] };
            (
                c.method.name().to_string(),
                serde_json::json!({
                    "lambda_hat": c.lambda_hat,
                    "risk": c.values[k],
                    "selected": selected,
                }),
            )
        })
        .collect();
    let out = serde_json::json!({
        "n": x.nrows(),
        "p": x.ncols(),
        "sigma2": sigma2,
        "sigma_source": source,
        "lambda_gcv": lambda_gcv,
        "methods": methods,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    if let Some(path) = &args.curves {
        write_curves_csv(&curves, File::create(path)?)?;
    }
    Ok(())
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        eprintln!("wrote {}", f.display());
    }
}
