use std::path::Path;

use nalgebra::DVector;

use jumpdf::design::{build_design, draw_noise, DesignSpec, DesignType, NoiseKind, NoiseModel};
use jumpdf::experiment::{study_grid, StudyConfig};
use jumpdf::lasso::{compute_path, GridSpec};
use jumpdf::risk::estimate_sigma2_gcv;

#[test]
fn gcv_recovers_noise_level_under_null_model() {
    let x = build_design(&DesignSpec::simulated(DesignType::SimulatedAR, 400, 50, 0.3), 5)
        .unwrap()
        .x;
    for (seed, sigma) in [(1u64, 0.5), (2, 1.0), (3, 2.0)] {
        let noise = NoiseModel { kind: NoiseKind::Gaussian, sigma };
        let y = draw_noise(&noise, 400, seed).unwrap();
        let path = compute_path(&x, &y, &GridSpec::Auto { n_lambda: 80, ratio: None }).unwrap();
        let fits = path.lasso_fits(&x);
        let (s2, _) = estimate_sigma2_gcv(&y, &fits, &path.lambdas, &path.dims).unwrap();
        let rel = (s2 / (sigma * sigma) - 1.0).abs();
        assert!(rel < 0.1, "sigma {sigma}: estimate {s2}, relative error {rel}");
    }
}

#[test]
fn gcv_with_signal_stays_close() {
    let x = build_design(&DesignSpec::simulated(DesignType::SimulatedConstCorr, 300, 100, 0.1), 9)
        .unwrap()
        .x;
    let noise = NoiseModel { kind: NoiseKind::Gaussian, sigma: 0.5 };
    let mut y = draw_noise(&noise, 300, 10).unwrap();
    let beta = DVector::from_fn(100, |j, _| if j < 5 { 3.0 } else { 0.0 });
    y += &x * &beta;
    let path = compute_path(&x, &y, &GridSpec::Auto { n_lambda: 80, ratio: None }).unwrap();
    let (s2, _) = estimate_sigma2_gcv(&y, &path.lasso_fits(&x), &path.lambdas, &path.dims).unwrap();
    assert!((s2 / 0.25 - 1.0).abs() < 0.2, "estimate {s2}");
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = StudyConfig::from_json_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert_eq!(cfg.hash(), cfg.clone().hash());
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn pilot_grid_is_reproducible() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cfg = StudyConfig::from_json_file(&dir.join("quick.json")).unwrap();
    let a = study_grid(&cfg).unwrap();
    let b = study_grid(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.windows(2).all(|w| w[0] > w[1]));
    let mut other = cfg.clone();
    other.root_seed += 1;
    assert_ne!(study_grid(&other).unwrap(), a);
}
