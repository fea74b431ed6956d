use qdkr::analysis::FitReport;
use qdkr::config::{Engine, RunConfig};
use qdkr::experiment::{
    content_hash, fit, portrait, portrait_csv, read_sweep_results, run, series_file, sweep,
    PointStatus, SweepGrid,
};
use qdkr::pseudoclassical::Sampling;
use qdkr::series::EnergySeries;
use qdkr::Error;

fn classical(tilde: f64) -> RunConfig {
    RunConfig {
        engine: Engine::Pseudoclassical,
        tilde,
        steps: 2400,
        ensemble: 2000,
        sampling: Sampling::Stratified,
        ..Default::default()
    }
}

#[test]
fn run_then_fit_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output: dir.path().to_path_buf(),
        ..classical(1e-2)
    };
    let out = run(&cfg).unwrap();
    let path = dir.path().join(series_file(Engine::Pseudoclassical));
    assert_eq!(out.files, vec![path.clone()]);

    let series = EnergySeries::read_csv(&path).unwrap();
    assert_eq!(&series, out.pseudoclassical.as_ref().unwrap());
    assert_eq!(RunConfig::from_metadata(&series.meta).unwrap().tilde, 1e-2);

    let report = fit(&path).unwrap();
    assert!(report.t_s.is_some());
    let row = report.to_csv_row();
    let back = FitReport::from_csv_row(&FitReport::csv_header(), &row).unwrap();
    assert_eq!(back.to_csv_row(), row);
}

#[test]
fn quantum_run_records_grid_and_fit_adds_column_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        tilde: 1e-2,
        steps: 200,
        output: dir.path().to_path_buf(),
        ..Default::default()
    };
    run(&cfg).unwrap();
    let path = dir.path().join("quantum.csv");
    let series = EnergySeries::read_csv(&path).unwrap();
    assert!(series.meta.get("grid").is_some());
    let report = fit(&path).unwrap();
    let (fit_d, col_d) = (report.d_fit.unwrap(), report.d_column.unwrap());
    assert!((fit_d / col_d - 1.0).abs() < 0.2);
}

#[test]
fn small_grid_trips_the_aliasing_guard() {
    let cfg = RunConfig {
        tilde: 1e-2,
        steps: 500,
        grid: Some(64),
        ..Default::default()
    };
    let err = qdkr::experiment::simulate(&cfg).unwrap_err();
    assert!(err.is_numerical_guard());
    assert!(matches!(err, Error::Aliasing { suggested, .. } if suggested == 128));
}

#[test]
fn sweep_skips_finished_points_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let grid = SweepGrid {
        tilde: vec![1e-2, 2e-2],
        ..Default::default()
    };
    let first = sweep(&classical(1e-2), &grid, dir.path(), 2).unwrap();
    assert_eq!(first.failures(), 0);
    assert!(first.points.iter().all(|p| p.status == PointStatus::Done));
    let before = std::fs::read(&first.results).unwrap();

    let second = sweep(&classical(1e-2), &grid, dir.path(), 2).unwrap();
    assert!(second
        .points
        .iter()
        .all(|p| p.status == PointStatus::Skipped));
    assert_eq!(std::fs::read(&second.results).unwrap(), before);

    let reports = read_sweep_results(&second.results).unwrap();
    assert_eq!(reports.len(), 2);
    let tildes: Vec<f64> = reports.iter().map(|r| r.tilde().unwrap()).collect();
    assert_eq!(tildes, vec![1e-2, 2e-2]);

    let broken = RunConfig {
        engine: Engine::Quantum,
        steps: 300,
        grid: Some(32),
        ..classical(1e-2)
    };
    let third = sweep(&broken, &SweepGrid::default(), dir.path(), 1).unwrap();
    assert_eq!(third.failures(), 1);
    assert!(read_sweep_results(&third.results).unwrap().is_empty());
}

#[test]
fn content_hash_ignores_output_only() {
    let a = classical(1e-2);
    let b = RunConfig {
        output: "elsewhere".into(),
        ..a.clone()
    };
    let c = RunConfig {
        seed: 1,
        ..a.clone()
    };
    assert_eq!(content_hash(&a), content_hash(&b));
    assert_ne!(content_hash(&a), content_hash(&c));
}

#[test]
fn portrait_csv_has_one_row_per_point() {
    let cfg = RunConfig {
        engine: Engine::Pseudoclassical,
        tilde: 1e-2,
        steps: 25,
        ..Default::default()
    };
    let orbits = portrait(&cfg, &[(0.5, 0.0), (1.0, 0.2)]).unwrap();
    let text = portrait_csv(&cfg, &orbits).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 2 * 26);
    assert!(text.lines().any(|l| l == "seed_id,t,theta,p"));
}
