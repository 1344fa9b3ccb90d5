use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, TauPolicy};
use crate::constellation::{build_constellation, Constellation, LlrFrame};
use crate::crlb::{ca_crlb, da_crlb, empirical_fisher, nda_crlb, sigma2_for_snr, CrlbInputs};
use crate::error::{Error, Result};
use crate::estimator::{ca_sync_loop, genie_priors, SyncConfig};
use crate::numeric::{derive_seed, wrapped_error};
use crate::turbo_codec::{TurboCode, TurboConfig};
use crate::waveform::{add_awgn_in_place, synthesize, PulseBank, SampledSignal};

const CODE_STREAM: u64 = 1;
const TRIAL_STREAM: u64 = 2;
const FISHER_STREAM: u64 = 3;

/// Which experiment produced a result set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Crlb,
    Nmse,
    Ber,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Crlb => "crlb",
            Experiment::Nmse => "nmse",
            Experiment::Ber => "ber",
        }
    }
}

/// One CSV row. Delays and bounds are normalized by `T²`; quantities an
/// experiment does not measure are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    pub nmse_ca: f64,
    pub nmse_nda: f64,
    pub crlb_ca: f64,
    pub crlb_nda: f64,
    pub crlb_da: f64,
    pub trials_used: usize,
    pub mean_newton_iters: f64,
    pub ber_final: f64,
}

/// A row plus the statistics that do not go to the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub row: ResultRow,
    /// Standard errors of the two NMSE estimates.
    pub se_nmse_ca: f64,
    pub se_nmse_nda: f64,
    pub failure_rate: f64,
    /// More than `max_failure_rate` of the trials failed.
    pub aborted: bool,
    /// Mean `|τ̂^{(r)} − τ|/T` for `r = 0..=R` over the used trials.
    pub mean_abs_error_by_iter: Vec<f64>,
}

/// Closed-form against Monte-Carlo Fisher information at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherRow {
    pub snr_db: f64,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub rel_error: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub points: Vec<PointStats>,
    pub fisher: Vec<FisherRow>,
}

impl ExperimentOutput {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.points.iter().map(|p| p.row).collect()
    }

    pub fn any_aborted(&self) -> bool {
        self.points.iter().any(|p| p.aborted)
    }
}

/// A transmitted and received frame.
#[derive(Debug, Clone)]
pub struct Trial {
    pub info: Vec<u8>,
    pub symbols: Vec<Complex64>,
    pub signal: SampledSignal,
    pub tau: f64,
}

/// The fixed objects of an experiment: constellation, pulses and code.
#[derive(Debug, Clone)]
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub spec: Constellation,
    pub pulses: PulseBank,
    pub code: TurboCode,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = build_constellation(cfg.modulation)?;
        let pulses = PulseBank::new(cfg.rolloff, 1.0, cfg.span, cfg.oversampling)?;
        let bits = cfg.symbols * spec.bits_per_symbol();
        let mut tc = TurboConfig::for_frame(cfg.code_rate, bits, derive_seed(cfg.seed, &[CODE_STREAM]))?;
        tc.turbo_iterations = cfg.turbo_iterations;
        let code = TurboCode::new(tc, bits)?;
        Ok(Self {
            cfg: cfg.clone(),
            spec,
            pulses,
            code,
        })
    }

    pub fn sigma2(&self, snr_db: f64) -> f64 {
        sigma2_for_snr(1.0, snr_db)
    }

    pub fn sync_config(&self, snr_db: f64) -> SyncConfig {
        let mut s = SyncConfig::new(1.0, self.sigma2(snr_db));
        s.turbo_iterations = self.cfg.turbo_iterations;
        s.decoder_exchanges = self.cfg.decoder_exchanges;
        s.demap_priors = self.cfg.demap_priors;
        s
    }

    /// Frame `index` at `snr_db`; a pure function of the seed, the SNR and the
    /// index.
    pub fn trial(&self, snr_db: f64, index: usize) -> Result<Trial> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            self.cfg.seed,
            &[TRIAL_STREAM, snr_db.to_bits(), index as u64],
        ));
        let info: Vec<u8> = (0..self.code.info_len()).map(|_| rng.random_range(0..2)).collect();
        let tau = match self.cfg.tau {
            TauPolicy::Fixed(t) => t,
            TauPolicy::Uniform { lo, hi } => rng.random_range(lo..hi),
        };
        let bits = self.code.encode(&info)?.bits;
        let symbols = self.spec.modulate(&bits)?;
        let mut signal = synthesize(&symbols, tau, &self.pulses, 1.0)?;
        add_awgn_in_place(&mut signal, self.sigma2(snr_db), &mut rng)?;
        Ok(Trial {
            info,
            symbols,
            signal,
            tau,
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {} workers: {e}", self.cfg.workers)))
    }

    /// Applies `f` to every index, in parallel, returning results in index
    /// order.
    pub fn map_indexed<T: Send>(&self, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
        Ok(self.pool()?.install(|| (0..n).into_par_iter().map(&f).collect()))
    }
}

struct TrialOutcome {
    err_ca: f64,
    err_nda: f64,
    newton_iters: usize,
    ber: f64,
    abs_error_by_iter: Vec<f64>,
}

fn sync_trial(setup: &Setup, snr_db: f64, index: usize) -> Result<Option<TrialOutcome>> {
    let t = setup.trial(snr_db, index)?;
    let cfg = setup.sync_config(snr_db);
    let out = match ca_sync_loop(&t.signal, &setup.code, &setup.spec, &setup.pulses, &cfg, Some(&t.info)) {
        Ok(o) => o,
        Err(Error::FlatLikelihood) => return Ok(None),
        Err(e) => return Err(e),
    };
    let final_ok = match out.trace.steps.last() {
        Some(s) => s.converged,
        None => out.trace.nda.newton.converged,
    };
    if !final_ok {
        return Ok(None);
    }
    let abs_error_by_iter = (0..=out.trace.steps.len())
        .map(|r| wrapped_error(out.trace.tau_at(r), t.tau, 1.0).abs())
        .collect();
    Ok(Some(TrialOutcome {
        err_ca: wrapped_error(out.tau_hat, t.tau, 1.0),
        err_nda: wrapped_error(out.trace.nda.tau_hat, t.tau, 1.0),
        newton_iters: out.trace.total_newton_iters(),
        ber: out.trace.steps.last().and_then(|s| s.ber).unwrap_or(f64::NAN),
        abs_error_by_iter,
    }))
}

/// Mean and standard error of the mean.
fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, f64::INFINITY);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Bounds of an SNR point from the first `crlb_frames` frames. CA and DA
/// Fisher information is averaged over frames before inverting, so that
/// frame-to-frame spread in the data symbols does not bias the bound upward.
#[derive(Debug, Clone)]
pub struct PointBounds {
    pub crlb_ca: f64,
    pub crlb_nda: f64,
    pub crlb_da: f64,
    pub ber: f64,
    /// Per-frame `(CA, DA)` Fisher information.
    pub frame_fisher: Vec<(f64, f64)>,
    /// Inputs of the first frame, for the Fisher check.
    pub first: Option<CrlbInputs>,
}

/// Priors from decoding at the true delay, then the CA, NDA and DA bounds.
pub fn point_bounds(setup: &Setup, snr_db: f64) -> Result<PointBounds> {
    let frames = setup.cfg.crlb_frames.max(1);
    let sync = setup.sync_config(snr_db);
    let sigma2 = setup.sigma2(snr_db);
    let per_frame = setup.map_indexed(frames, |f| -> Result<(f64, f64, f64, CrlbInputs)> {
        let t = setup.trial(snr_db, f)?;
        let (priors, decided) = genie_priors(&t.signal, t.tau, &setup.code, &setup.spec, &setup.pulses, &sync)?;
        let inputs = CrlbInputs::new(priors, &setup.spec, 1.0, sigma2, &setup.pulses)?;
        let ca = ca_crlb(&inputs)?.fisher_ca;
        let da = 1.0 / da_crlb(&t.symbols, &inputs)?;
        let errors = decided.iter().zip(&t.info).filter(|(a, b)| a != b).count();
        Ok((ca, da, errors as f64 / t.info.len() as f64, inputs))
    })?;
    let per_frame: Vec<_> = per_frame.into_iter().collect::<Result<_>>()?;
    let n = per_frame.len() as f64;
    let zero = CrlbInputs::new(
        LlrFrame::zeros(setup.cfg.symbols, setup.spec.bits_per_symbol()),
        &setup.spec,
        1.0,
        sigma2,
        &setup.pulses,
    )?;
    Ok(PointBounds {
        crlb_ca: n / per_frame.iter().map(|f| f.0).sum::<f64>(),
        crlb_da: n / per_frame.iter().map(|f| f.1).sum::<f64>(),
        ber: per_frame.iter().map(|f| f.2).sum::<f64>() / n,
        crlb_nda: nda_crlb(&zero)?,
        frame_fisher: per_frame.iter().map(|f| (f.0, f.1)).collect(),
        first: per_frame.into_iter().next().map(|f| f.3),
    })
}

fn sync_point(setup: &Setup, snr_db: f64, bounds: Option<&PointBounds>) -> Result<PointStats> {
    let n = setup.cfg.trials;
    let outcomes: Vec<Option<TrialOutcome>> = setup
        .map_indexed(n, |i| sync_trial(setup, snr_db, i))?
        .into_iter()
        .collect::<Result<_>>()?;
    let used: Vec<&TrialOutcome> = outcomes.iter().flatten().collect();
    let failure_rate = (n - used.len()) as f64 / n as f64;
    let aborted = failure_rate > setup.cfg.max_failure_rate;
    let (nmse_ca, se_ca) = mean_se(used.iter().map(|o| o.err_ca * o.err_ca));
    let (nmse_nda, se_nda) = mean_se(used.iter().map(|o| o.err_nda * o.err_nda));
    let iters = mean_se(used.iter().map(|o| o.newton_iters as f64)).0;
    let ber = mean_se(used.iter().map(|o| o.ber)).0;
    let depth = setup.cfg.turbo_iterations + 1;
    let by_iter = (0..depth)
        .map(|r| mean_se(used.iter().map(|o| o.abs_error_by_iter[r])).0)
        .collect();
    let nan = f64::NAN;
    let (crlb_ca, crlb_nda, crlb_da) = bounds.map_or((nan, nan, nan), |b| (b.crlb_ca, b.crlb_nda, b.crlb_da));
    let (nmse_ca, nmse_nda, iters, ber) = if aborted {
        (nan, nan, nan, nan)
    } else {
        (nmse_ca, nmse_nda, iters, ber)
    };
    Ok(PointStats {
        row: ResultRow {
            snr_db,
            nmse_ca,
            nmse_nda,
            crlb_ca,
            crlb_nda,
            crlb_da,
            trials_used: used.len(),
            mean_newton_iters: iters,
            ber_final: ber,
        },
        se_nmse_ca: se_ca,
        se_nmse_nda: se_nda,
        failure_rate,
        aborted,
        mean_abs_error_by_iter: by_iter,
    })
}

/// Full CA synchronization and NDA bootstrap on `trials` frames per SNR,
/// with the bounds averaged over `crlb_frames` frames.
pub fn run_nmse(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let setup = Setup::new(cfg)?;
    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for &snr in &cfg.snr_db {
        let bounds = point_bounds(&setup, snr)?;
        points.push(sync_point(&setup, snr, Some(&bounds))?);
    }
    Ok(ExperimentOutput {
        experiment: Experiment::Nmse,
        config: cfg.clone(),
        points,
        fisher: Vec::new(),
    })
}

/// The synchronization runs of [`run_nmse`] without the bounds; the row's
/// BER is the decoded info-bit error rate after the last iteration.
pub fn run_ber(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let setup = Setup::new(cfg)?;
    let points = cfg
        .snr_db
        .iter()
        .map(|&snr| sync_point(&setup, snr, None))
        .collect::<Result<_>>()?;
    Ok(ExperimentOutput {
        experiment: Experiment::Ber,
        config: cfg.clone(),
        points,
        fisher: Vec::new(),
    })
}

/// Bounds per SNR averaged over `crlb_frames` decoded frames; with
/// `fisher_trials > 0` also the closed-form against empirical Fisher check on
/// the first frame.
pub fn run_crlb(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let setup = Setup::new(cfg)?;
    let mut points = Vec::with_capacity(cfg.snr_db.len());
    let mut fisher = Vec::new();
    for &snr in &cfg.snr_db {
        let b = point_bounds(&setup, snr)?;
        if cfg.fisher_trials > 0 {
            let inputs = b.first.as_ref().expect("at least one bound frame");
            fisher.push(fisher_check(&setup, inputs, snr)?);
        }
        let nan = f64::NAN;
        points.push(PointStats {
            row: ResultRow {
                snr_db: snr,
                nmse_ca: nan,
                nmse_nda: nan,
                crlb_ca: b.crlb_ca,
                crlb_nda: b.crlb_nda,
                crlb_da: b.crlb_da,
                trials_used: cfg.crlb_frames.max(1),
                mean_newton_iters: nan,
                ber_final: b.ber,
            },
            se_nmse_ca: nan,
            se_nmse_nda: nan,
            failure_rate: 0.0,
            aborted: false,
            mean_abs_error_by_iter: Vec::new(),
        });
    }
    Ok(ExperimentOutput {
        experiment: Experiment::Crlb,
        config: cfg.clone(),
        points,
        fisher,
    })
}

/// Closed-form Fisher information of `inputs` against `fisher_trials`
/// Monte-Carlo trials.
pub fn fisher_check(setup: &Setup, inputs: &CrlbInputs, snr_db: f64) -> Result<FisherRow> {
    let closed = ca_crlb(inputs)?.fisher_ca;
    let seed = derive_seed(setup.cfg.seed, &[FISHER_STREAM, snr_db.to_bits()]);
    let trials = setup.cfg.fisher_trials;
    let emp = setup.pool()?.install(|| empirical_fisher(inputs, trials, seed))?;
    Ok(FisherRow {
        snr_db,
        closed_form: closed,
        empirical: emp.mean,
        std_error: emp.std_error,
        rel_error: (closed - emp.mean).abs() / closed,
        trials,
    })
}
