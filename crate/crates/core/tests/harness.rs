use casync::constellation::BetaConvention;
use casync::harness::*;

fn smoke() -> ExperimentConfig {
    ExperimentConfig::parse(
        "symbols = 100\ntrials = 20\nsnr_db = 3, 6\nturbo_iterations = 3\ncrlb_frames = 2\nspan = 16\n",
    )
    .unwrap()
}

#[test]
fn smoke_nmse_rows_are_finite() {
    let out = run_nmse(&smoke()).unwrap();
    let rows = out.rows();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        for v in [
            r.nmse_ca,
            r.nmse_nda,
            r.crlb_ca,
            r.crlb_nda,
            r.crlb_da,
            r.mean_newton_iters,
            r.ber_final,
        ] {
            assert!(v.is_finite(), "{r:?}");
        }
        assert!(r.trials_used <= 20 && r.trials_used >= 19);
        assert!(r.crlb_da <= r.crlb_ca * (1.0 + 1e-9) && r.crlb_ca <= r.crlb_nda);
    }
    let csv = render_csv(&out);
    let header: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(header[0], CSV_COLUMNS.join(","));
    assert_eq!(header.len(), 3);
    assert!(csv.contains("# casync "));
    assert!(csv.contains("# symbols = 100"));
}

#[test]
fn csv_is_identical_across_worker_counts() {
    let mut cfg = smoke();
    cfg.trials = 6;
    cfg.workers = 1;
    let a = render_csv(&run_nmse(&cfg).unwrap());
    cfg.workers = 3;
    let b = render_csv(&run_nmse(&cfg).unwrap());
    assert_eq!(a, b);
    cfg.seed += 1;
    assert_ne!(a, render_csv(&run_nmse(&cfg).unwrap()));
}

#[test]
fn outputs_land_in_out_dir() {
    let dir = std::env::temp_dir().join(format!("casync-out-{}", std::process::id()));
    let mut cfg = smoke();
    cfg.trials = 2;
    cfg.snr_db = vec![5.0];
    cfg.fisher_trials = 50;
    cfg.out_dir = dir.clone();
    let out = run_crlb(&cfg).unwrap();
    assert_eq!(out.fisher.len(), 1);
    assert!(out.rows()[0].nmse_ca.is_nan());
    let a = write_outputs(&out, "20260101-000000", true).unwrap();
    let b = write_outputs(&out, "20260101-000000", false).unwrap();
    assert_eq!(a.csv.file_name().unwrap(), "crlb-20260101-000000.csv");
    assert_eq!(b.csv.file_name().unwrap(), "crlb-20260101-000000-1.csv");
    assert!(a.fisher_csv.as_ref().unwrap().exists());
    let plot = std::fs::read_to_string(a.plot.unwrap()).unwrap();
    assert!(plot.contains("'crlb-20260101-000000.csv' using 1:4"));
    assert!(!plot.contains("using 1:2"));
    assert_eq!(std::fs::read(&a.csv).unwrap(), std::fs::read(&b.csv).unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn validate_passes_and_catches_printed_beta() {
    let cfg = ExperimentConfig::default();
    let good = run_validate(&cfg).unwrap();
    assert!(good.passed(), "{}", good.render());
    assert_eq!(run_validate(&cfg).unwrap().render(), good.render());
    let bad = run_validate_with(&cfg, BetaConvention::MagnitudeBitsOnly).unwrap();
    assert!(!bad.passed());
    assert!(bad.failures().iter().any(|c| c.name == "normalization identity"));
}

#[test]
fn abort_threshold_is_reported() {
    let mut cfg = smoke();
    cfg.trials = 4;
    cfg.snr_db = vec![3.0];
    cfg.max_failure_rate = 0.0;
    cfg.turbo_iterations = 1;
    let out = run_ber(&cfg).unwrap();
    let p = &out.points[0];
    assert_eq!(p.aborted, p.failure_rate > 0.0);
    assert!(p.row.crlb_ca.is_nan());
}
