use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::constellation::DemapPriors;
use crate::error::{Error, Result};
use crate::turbo_codec::CodeRate;

/// How the true delay of each trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauPolicy {
    /// The same delay (fraction of `T`) in every trial.
    Fixed(f64),
    /// Drawn per trial, uniform on `[lo, hi)` (fractions of `T`).
    Uniform { lo: f64, hi: f64 },
}

impl TauPolicy {
    pub const DEFAULT_UNIFORM: TauPolicy = TauPolicy::Uniform { lo: 0.1, hi: 0.9 };
}

/// Everything an experiment depends on. Results are a pure function of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Bits per axis `p`; `M = 4^p`.
    pub modulation: usize,
    pub code_rate: CodeRate,
    pub rolloff: f64,
    /// Symbols per frame `K`.
    pub symbols: usize,
    pub snr_db: Vec<f64>,
    /// Monte-Carlo frames per SNR point.
    pub trials: usize,
    pub tau: TauPolicy,
    pub seed: u64,
    pub turbo_iterations: usize,
    pub out_dir: PathBuf,
    pub oversampling: usize,
    /// Pulse half-length in symbol periods.
    pub span: usize,
    /// Frames averaged per SNR point for the bounds.
    pub crlb_frames: usize,
    /// Trials of the empirical Fisher check in `crlb` runs; 0 disables it.
    pub fisher_trials: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub demap_priors: DemapPriors,
    pub decoder_exchanges: usize,
    /// Largest tolerated fraction of non-converged trials per SNR point.
    pub max_failure_rate: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            modulation: 1,
            code_rate: CodeRate::Third,
            rolloff: 0.2,
            symbols: 400,
            snr_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            trials: 1000,
            tau: TauPolicy::DEFAULT_UNIFORM,
            seed: 1,
            turbo_iterations: 10,
            out_dir: PathBuf::from("results"),
            oversampling: 8,
            span: 32,
            crlb_frames: 20,
            fisher_trials: 0,
            workers: 0,
            demap_priors: DemapPriors::Current,
            decoder_exchanges: 1,
            max_failure_rate: 0.01,
        }
    }
}

/// Keys accepted in a config file, in serialization order.
pub const CONFIG_KEYS: [&str; 18] = [
    "modulation",
    "code_rate",
    "rolloff",
    "symbols",
    "snr_db",
    "trials",
    "tau",
    "seed",
    "turbo_iterations",
    "out_dir",
    "oversampling",
    "span",
    "crlb_frames",
    "fisher_trials",
    "workers",
    "demap_priors",
    "decoder_exchanges",
    "max_failure_rate",
];

fn bad(key: &str, value: &str, why: &str) -> Error {
    Error::Config(format!("{key} = {value:?}: {why}"))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, "not a valid number"))
}

pub fn modulation_name(p: usize) -> String {
    if p == 1 {
        "qpsk".into()
    } else {
        format!("{}qam", 1usize << (2 * p))
    }
}

fn parse_modulation(value: &str) -> Result<usize> {
    match value.to_ascii_lowercase().as_str() {
        "qpsk" | "4qam" | "4-qam" => Ok(1),
        "16qam" | "16-qam" => Ok(2),
        "64qam" | "64-qam" => Ok(3),
        "256qam" | "256-qam" => Ok(4),
        _ => Err(bad("modulation", value, "expected qpsk, 16qam, 64qam or 256qam")),
    }
}

/// A comma list (`0, 2.5, 5`) or an inclusive range `start:step:stop`.
pub fn parse_snr_list(value: &str) -> Result<Vec<f64>> {
    let value = value.trim();
    let out: Vec<f64> = if value.contains(':') {
        let parts: Vec<f64> = value
            .split(':')
            .map(|s| number("snr_db", s.trim()))
            .collect::<Result<_>>()?;
        let [start, step, stop] = parts[..] else {
            return Err(bad("snr_db", value, "range must be start:step:stop"));
        };
        if !(step > 0.0) || stop < start {
            return Err(bad("snr_db", value, "range needs step > 0 and stop >= start"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| start + i as f64 * step).collect()
    } else {
        value
            .split(',')
            .map(|s| number("snr_db", s.trim()))
            .collect::<Result<_>>()?
    };
    if out.is_empty() || out.iter().any(|v: &f64| !v.is_finite()) {
        return Err(bad("snr_db", value, "need at least one finite value"));
    }
    Ok(out)
}

fn parse_tau(value: &str) -> Result<TauPolicy> {
    if value.eq_ignore_ascii_case("uniform") {
        return Ok(TauPolicy::DEFAULT_UNIFORM);
    }
    if let Some(inner) = value.strip_prefix("uniform(").and_then(|s| s.strip_suffix(')')) {
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| bad("tau", value, "expected uniform(lo, hi)"))?;
        let (lo, hi) = (number("tau", a.trim())?, number("tau", b.trim())?);
        return Ok(TauPolicy::Uniform { lo, hi });
    }
    Ok(TauPolicy::Fixed(number("tau", value)?))
}

fn parse_priors(value: &str) -> Result<DemapPriors> {
    match value {
        "current" => Ok(DemapPriors::Current),
        "uniform" => Ok(DemapPriors::Uniform),
        _ => Err(bad("demap_priors", value, "expected current or uniform")),
    }
}

impl ExperimentConfig {
    /// Defaults overridden by `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
            }
            if seen.contains(&key) {
                return Err(Error::Config(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
            seen.push(key);
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "modulation" => self.modulation = parse_modulation(value)?,
            "code_rate" => {
                self.code_rate = CodeRate::parse(value).map_err(|_| bad(key, value, "expected 1/2 or 1/3"))?
            }
            "rolloff" => self.rolloff = number(key, value)?,
            "symbols" => self.symbols = number(key, value)?,
            "snr_db" => self.snr_db = parse_snr_list(value)?,
            "trials" => self.trials = number(key, value)?,
            "tau" => self.tau = parse_tau(value)?,
            "seed" => self.seed = number(key, value)?,
            "turbo_iterations" => self.turbo_iterations = number(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "oversampling" => self.oversampling = number(key, value)?,
            "span" => self.span = number(key, value)?,
            "crlb_frames" => self.crlb_frames = number(key, value)?,
            "fisher_trials" => self.fisher_trials = number(key, value)?,
            "workers" => self.workers = number(key, value)?,
            "demap_priors" => self.demap_priors = parse_priors(value)?,
            "decoder_exchanges" => self.decoder_exchanges = number(key, value)?,
            "max_failure_rate" => self.max_failure_rate = number(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(1..=4).contains(&self.modulation) {
            return fail(format!("modulation p = {} is out of range", self.modulation));
        }
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return fail(format!("rolloff {} must be in (0, 1]", self.rolloff));
        }
        if self.symbols < 8 {
            return fail(format!("symbols = {} is too short for a turbo frame", self.symbols));
        }
        if self.trials == 0 {
            return fail("trials must be positive".into());
        }
        if self.oversampling < 4 || self.span == 0 {
            return fail("oversampling must be >= 4 and span positive".into());
        }
        if self.decoder_exchanges == 0 {
            return fail("decoder_exchanges must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return fail("max_failure_rate must be in [0, 1]".into());
        }
        match self.tau {
            TauPolicy::Fixed(t) if !(0.0..1.0).contains(&t) => fail(format!("tau = {t} must be in [0, 1)")),
            TauPolicy::Uniform { lo, hi } if !(0.0 <= lo && lo < hi && hi <= 1.0) => {
                fail(format!("uniform({lo}, {hi}) must satisfy 0 <= lo < hi <= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Round-trips through [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_of(key));
        }
        s
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "modulation" => modulation_name(self.modulation),
            "code_rate" => self.code_rate.to_string(),
            "rolloff" => format!("{}", self.rolloff),
            "symbols" => self.symbols.to_string(),
            "snr_db" => self
                .snr_db
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(", "),
            "trials" => self.trials.to_string(),
            "tau" => match self.tau {
                TauPolicy::Fixed(t) => format!("{t}"),
                TauPolicy::Uniform { lo, hi } => format!("uniform({lo}, {hi})"),
            },
            "seed" => self.seed.to_string(),
            "turbo_iterations" => self.turbo_iterations.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "oversampling" => self.oversampling.to_string(),
            "span" => self.span.to_string(),
            "crlb_frames" => self.crlb_frames.to_string(),
            "fisher_trials" => self.fisher_trials.to_string(),
            "workers" => self.workers.to_string(),
            "demap_priors" => match self.demap_priors {
                DemapPriors::Current => "current".into(),
                DemapPriors::Uniform => "uniform".into(),
            },
            "decoder_exchanges" => self.decoder_exchanges.to_string(),
            "max_failure_rate" => format!("{}", self.max_failure_rate),
            _ => unreachable!("every key in CONFIG_KEYS is serialized"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# smoke\nmodulation = 16qam\ncode_rate = 1/2  # half\nsnr_db = 0:2.5:10\ntau = 0.25\n",
        )
        .unwrap();
        assert_eq!(cfg.modulation, 2);
        assert_eq!(cfg.code_rate, CodeRate::Half);
        assert_eq!(cfg.snr_db, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(cfg.tau, TauPolicy::Fixed(0.25));
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_duplicate_and_invalid() {
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(Error::Config(_))));
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(ExperimentConfig::parse("tau = 1.5").is_err());
        assert!(ExperimentConfig::parse("snr_db = 5:-1:0").is_err());
        assert!(ExperimentConfig::parse("symbols").is_err());
        assert!(ExperimentConfig::parse("modulation = 8psk").is_err());
    }

    #[test]
    fn uniform_bounds() {
        let cfg = ExperimentConfig::parse("tau = uniform(0.2, 0.4)").unwrap();
        assert_eq!(cfg.tau, TauPolicy::Uniform { lo: 0.2, hi: 0.4 });
    }
}
