use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMOKE: &str = "symbols = 100\ntrials = 6\nsnr_db = 3, 6\nturbo_iterations = 3\ncrlb_frames = 2\nspan = 16\n";

fn casync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_casync"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("casync-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn help_and_version_exit_zero() {
    let out = casync(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["crlb", "nmse", "ber", "validate"] {
        assert!(text.contains(sub), "{text}");
    }
    assert_eq!(casync(&["--version"]).status.code(), Some(0));
}

#[test]
fn config_errors_exit_one() {
    let dir = scratch("bad");
    let cfg = write_config(&dir, "symbols = 100\nmystery = 3\n");
    let out = casync(&["nmse", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mystery"));
    assert_eq!(casync(&["nmse", "--snr", "4:-1:0"]).status.code(), Some(1));
    assert_eq!(casync(&["crlb", "--trials", "many"]).status.code(), Some(1));
    assert_eq!(casync(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        casync(&["ber", "--config", "/nonexistent/casync.cfg"]).status.code(),
        Some(1)
    );
    assert!(listing(&dir) == ["run.cfg"]);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn nmse_writes_csv_and_plot() {
    let dir = scratch("nmse");
    let cfg = write_config(&dir, SMOKE);
    let out_dir = dir.join("out");
    let out = casync(&[
        "nmse",
        "--config",
        &cfg,
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--seed",
        "7",
        "--snr",
        "-1,4",
        "--emit-plot",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let names = listing(&out_dir);
    assert_eq!(names.len(), 2, "{names:?}");
    let csv_name = names.iter().find(|n| n.ends_with(".csv")).unwrap();
    assert!(csv_name.starts_with("nmse-") && csv_name.len() == "nmse-20260101-000000.csv".len());
    assert!(names.iter().any(|n| n.ends_with(".gp")));
    let text = fs::read_to_string(out_dir.join(csv_name)).unwrap();
    assert!(text.contains("# seed = 7"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        data[0],
        "snr_db,nmse_ca,nmse_nda,crlb_ca,crlb_nda,crlb_da,trials_used,mean_newton_iters,ber_final"
    );
    assert_eq!(data.len(), 3);
    assert!(data[1].starts_with("-1.000000e0,"));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains(csv_name.as_str()));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn crlb_with_fisher_check_and_ber() {
    let dir = scratch("crlb");
    let cfg = write_config(&dir, &format!("{SMOKE}fisher_trials = 1000\n"));
    let out_dir = dir.join("out");
    let od = out_dir.to_str().unwrap();
    let out = casync(&["crlb", "--config", &cfg, "--out-dir", od, "--snr", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = casync(&["ber", "--config", &cfg, "--out-dir", od, "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let names = listing(&out_dir);
    assert_eq!(names.len(), 3, "{names:?}");
    assert!(names
        .iter()
        .any(|n| n.starts_with("crlb-") && n.ends_with("-fisher.csv")));
    let ber = names.iter().find(|n| n.starts_with("ber-")).unwrap();
    let text = fs::read_to_string(out_dir.join(ber)).unwrap();
    assert!(text.contains("# trials = 3"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn validate_prints_table() {
    let out = casync(&["validate"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("overall: PASS"));
}

#[test]
fn abort_exits_three_and_still_writes() {
    let dir = scratch("abort");
    let cfg = write_config(
        &dir,
        "symbols = 60\ntrials = 30\nspan = 8\noversampling = 4\nturbo_iterations = 2\nmax_failure_rate = 0\n",
    );
    let out_dir = dir.join("out");
    let out = casync(&[
        "ber",
        "--config",
        &cfg,
        "--snr=-5",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let names = listing(&out_dir);
    let text = fs::read_to_string(out_dir.join(&names[0])).unwrap();
    assert!(text.contains("# aborted snr_db = -5"));
    fs::remove_dir_all(dir).unwrap();
}
