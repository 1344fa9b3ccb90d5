use std::path::PathBuf;
use std::process::ExitCode;

use casync::harness::{
    parse_snr_list, run_ber, run_crlb, run_nmse, run_validate, write_outputs, ExperimentConfig, ExperimentOutput,
};
use casync::Error;
use clap::{Args, Parser, Subcommand};

const EXIT_CONFIG: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_ABORT: u8 = 3;
const EXIT_RUNTIME: u8 = 4;
/// Largest accepted closed-form against empirical Fisher gap.
const FISHER_TOL: f64 = 0.05;

/// Code-aided timing recovery experiments.
#[derive(Debug, Parser)]
#[command(name = "casync", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// CA, NDA and DA bounds per SNR, optionally with the empirical Fisher check.
    Crlb(Common),
    /// Estimator NMSE against the bounds.
    Nmse(Common),
    /// Decoded bit error rate of the synchronized receiver.
    Ber(Common),
    /// Run the invariant battery and print a pass/fail table.
    Validate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Monte-Carlo frames per SNR point.
    #[arg(long)]
    trials: Option<usize>,
    /// SNR grid in dB: `0,2,4` or `start:step:stop`.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// Write a gnuplot script beside the CSV.
    #[arg(long)]
    emit_plot: bool,
}

impl Common {
    fn config(&self) -> casync::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(snr) = &self.snr {
            cfg.snr_db = parse_snr_list(snr)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

type Runner = fn(&ExperimentConfig) -> casync::Result<ExperimentOutput>;

fn fail(code: u8, e: &Error) -> ExitCode {
    eprintln!("casync: {e}");
    ExitCode::from(code)
}

fn finish(out: ExperimentOutput, emit_plot: bool) -> ExitCode {
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S").to_string();
    let written = match write_outputs(&out, &stamp, emit_plot) {
        Ok(w) => w,
        Err(e) => return fail(EXIT_RUNTIME, &e),
    };
    println!("{}", written.csv.display());
    for path in written.fisher_csv.iter().chain(&written.plot) {
        println!("{}", path.display());
    }
    let mut code = ExitCode::SUCCESS;
    for p in out.points.iter().filter(|p| p.aborted) {
        eprintln!(
            "casync: aborted SNR {} dB, {:.2}% of trials did not converge",
            p.row.snr_db,
            100.0 * p.failure_rate
        );
        code = ExitCode::from(EXIT_ABORT);
    }
    for r in &out.fisher {
        if r.rel_error >= FISHER_TOL {
            eprintln!(
                "casync: Fisher check at {} dB off by {:.2}%",
                r.snr_db,
                100.0 * r.rel_error
            );
            code = ExitCode::from(EXIT_VALIDATION);
        }
    }
    code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let (common, run): (&Common, Option<Runner>) = match &cli.command {
        Command::Crlb(c) => (c, Some(run_crlb)),
        Command::Nmse(c) => (c, Some(run_nmse)),
        Command::Ber(c) => (c, Some(run_ber)),
        Command::Validate(c) => (c, None),
    };
    let cfg = match common.config() {
        Ok(cfg) => cfg,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    match run {
        Some(run) => match run(&cfg) {
            Ok(out) => finish(out, common.emit_plot),
            Err(e) => fail(EXIT_RUNTIME, &e),
        },
        None => match run_validate(&cfg) {
            Ok(report) => {
                print!("{}", report.render());
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_VALIDATION)
                }
            }
            Err(e) => fail(EXIT_RUNTIME, &e),
        },
    }
}
