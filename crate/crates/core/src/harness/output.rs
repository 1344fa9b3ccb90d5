use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use super::run::{ExperimentOutput, FisherRow, ResultRow};
use crate::error::Result;

/// Column order of every result CSV.
pub const CSV_COLUMNS: [&str; 9] = [
    "snr_db",
    "nmse_ca",
    "nmse_nda",
    "crlb_ca",
    "crlb_nda",
    "crlb_da",
    "trials_used",
    "mean_newton_iters",
    "ber_final",
];

pub const FISHER_COLUMNS: [&str; 6] = ["snr_db", "closed_form", "empirical", "std_error", "rel_error", "trials"];

pub fn version_string() -> String {
    format!("casync {}", env!("CARGO_PKG_VERSION"))
}

fn header(out: &ExperimentOutput, kind: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", version_string());
    let _ = writeln!(s, "# experiment = {kind}");
    for line in out.config.to_text().lines().filter(|l| !l.starts_with("workers ")) {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn row_line(r: &ResultRow) -> String {
    format!(
        "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{:.6e},{:.6e}",
        r.snr_db,
        r.nmse_ca,
        r.nmse_nda,
        r.crlb_ca,
        r.crlb_nda,
        r.crlb_da,
        r.trials_used,
        r.mean_newton_iters,
        r.ber_final
    )
}

/// Config and version as `#` comments, then one row per SNR point. The
/// worker count is left out of the header since it never changes results.
pub fn render_csv(out: &ExperimentOutput) -> String {
    let mut s = header(out, out.experiment.name());
    for p in out.points.iter().filter(|p| p.aborted) {
        let _ = writeln!(
            s,
            "# aborted snr_db = {} failure_rate = {:.6e}",
            p.row.snr_db, p.failure_rate
        );
    }
    let _ = writeln!(s, "{}", CSV_COLUMNS.join(","));
    for p in &out.points {
        let _ = writeln!(s, "{}", row_line(&p.row));
    }
    s
}

fn fisher_line(r: &FisherRow) -> String {
    format!(
        "{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{}",
        r.snr_db, r.closed_form, r.empirical, r.std_error, r.rel_error, r.trials
    )
}

/// The Fisher validation table, when the run produced one.
pub fn render_fisher_csv(out: &ExperimentOutput) -> Option<String> {
    if out.fisher.is_empty() {
        return None;
    }
    let mut s = header(out, &format!("{}-fisher", out.experiment.name()));
    let _ = writeln!(s, "{}", FISHER_COLUMNS.join(","));
    for r in &out.fisher {
        let _ = writeln!(s, "{}", fisher_line(r));
    }
    Some(s)
}

/// A gnuplot script drawing every non-empty curve of `csv_name`, which must
/// sit in the same directory as the script.
pub fn plot_script(out: &ExperimentOutput, csv_name: &str) -> String {
    let stem = csv_name.trim_end_matches(".csv");
    let mut curves = Vec::new();
    let has = |f: fn(&ResultRow) -> f64| out.points.iter().any(|p| f(&p.row).is_finite());
    let candidates: [Curve; 5] = [
        (2, "CA NMSE", |r| r.nmse_ca),
        (3, "NDA NMSE", |r| r.nmse_nda),
        (4, "CA CRLB", |r| r.crlb_ca),
        (5, "NDA CRLB", |r| r.crlb_nda),
        (6, "DA CRLB", |r| r.crlb_da),
    ];
    for (col, title, f) in candidates {
        if has(f) {
            curves.push(format!("'{csv_name}' using 1:{col} with linespoints title '{title}'"));
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# {} {}", version_string(), out.experiment.name());
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set datafile commentschars '#'");
    let _ = writeln!(s, "set datafile missing 'NaN'");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{stem}.png'");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set format y '%.0e'");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set xlabel 'SNR (dB)'");
    let _ = writeln!(s, "set ylabel 'normalized MSE / bound'");
    let _ = writeln!(
        s,
        "set title '{} {} R={}'",
        out.experiment.name(),
        super::config::modulation_name(out.config.modulation),
        out.config.code_rate
    );
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}

/// CSV column, legend title and row accessor of one plotted curve.
type Curve = (usize, &'static str, fn(&ResultRow) -> f64);

fn create_unique(dir: &Path, stem: &str, ext: &str) -> Result<(PathBuf, std::fs::File)> {
    for n in 0.. {
        let name = if n == 0 {
            format!("{stem}.{ext}")
        } else {
            format!("{stem}-{n}.{ext}")
        };
        let path = dir.join(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(f) => return Ok((path, f)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("the name counter is unbounded")
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub csv: PathBuf,
    pub fisher_csv: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

/// Writes `<out_dir>/<experiment>-<stamp>.csv`, the Fisher table beside it
/// and, on request, the plot script.
pub fn write_outputs(out: &ExperimentOutput, stamp: &str, emit_plot: bool) -> Result<WrittenFiles> {
    let dir = &out.config.out_dir;
    std::fs::create_dir_all(dir)?;
    let stem = format!("{}-{stamp}", out.experiment.name());
    let (csv, mut f) = create_unique(dir, &stem, "csv")?;
    f.write_all(render_csv(out).as_bytes())?;
    let fisher_csv = match render_fisher_csv(out) {
        Some(text) => {
            let csv_stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or(&stem).to_owned();
            let (path, mut f) = create_unique(dir, &format!("{csv_stem}-fisher"), "csv")?;
            f.write_all(text.as_bytes())?;
            Some(path)
        }
        None => None,
    };
    let plot = if emit_plot {
        let name = csv.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
        let path = csv.with_extension("gp");
        std::fs::write(&path, plot_script(out, &name))?;
        Some(path)
    } else {
        None
    };
    Ok(WrittenFiles { csv, fisher_csv, plot })
}
