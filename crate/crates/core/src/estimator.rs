//! NDA bootstrap and code-aided ML timing recovery inside the turbo loop.
//!
//! Delays are tracked internally on `[−T/2, 3T/2)` so that a symbol
//! alignment chosen at bootstrap is never silently changed by a wrap; every
//! reported delay is wrapped to `[0, T)`.

use num_complex::Complex64;

use crate::constellation::{soft_demap_into, Constellation, DemapPriors, LlrFrame};
use crate::error::{Error, Result};
use crate::likelihood::{ca_llf_grad_hess, llf_values, LikelihoodContext, LlfDerivatives};
use crate::numeric::wrap_delay;
use crate::turbo_codec::{a_priori_from, turbo_iterate, DecoderState, TurboCode};
use crate::waveform::{matched_filter, matched_filter_values, PulseBank, SampledSignal};

/// Tuning of the line search, Newton iterations and turbo loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncConfig {
    /// Coarse search step, as a fraction of `T`.
    pub grid_step: f64,
    /// Newton stopping threshold on `|τ̂_i − τ̂_{i−1}|`, as a fraction of `T`.
    pub epsilon: f64,
    pub max_newton_iters: usize,
    /// Number of delay refinements `R`.
    pub turbo_iterations: usize,
    /// Decoder exchanges per delay refinement.
    pub decoder_exchanges: usize,
    pub demap_priors: DemapPriors,
    pub es: f64,
    pub sigma2: f64,
}

impl SyncConfig {
    pub fn new(es: f64, sigma2: f64) -> Self {
        Self {
            grid_step: 1.0 / 64.0,
            epsilon: 1e-6,
            max_newton_iters: 50,
            turbo_iterations: 10,
            decoder_exchanges: 1,
            demap_priors: DemapPriors::Current,
            es,
            sigma2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < self.grid_step && self.grid_step <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < epsilon < grid_step <= 1/2, got {} and {}",
                self.epsilon, self.grid_step
            )));
        }
        if self.max_newton_iters == 0 || self.decoder_exchanges == 0 {
            return Err(Error::InvalidParameter(
                "max_newton_iters and decoder_exchanges must be positive".into(),
            ));
        }
        if !(self.es > 0.0 && self.sigma2 > 0.0) {
            return Err(Error::InvalidParameter("Es and sigma2 must be positive".into()));
        }
        Ok(())
    }
}

/// Something that evaluates a log-likelihood function of the delay.
pub trait LlfEngine {
    fn period(&self) -> f64;

    /// Half-open interval the iterates are kept in.
    fn domain(&self) -> (f64, f64) {
        let t = self.period();
        (-0.5 * t, 1.5 * t)
    }

    fn value(&self, tau: f64) -> Result<f64>;

    fn derivatives(&self, tau: f64) -> Result<LlfDerivatives>;
}

/// The LLF of a received frame: re-runs the matched filter at every delay.
#[derive(Debug, Clone, Copy)]
pub struct MatchedLlf<'a> {
    pub signal: &'a SampledSignal,
    pub pulses: &'a PulseBank,
    pub ctx: &'a LikelihoodContext,
}

impl LlfEngine for MatchedLlf<'_> {
    fn period(&self) -> f64 {
        self.pulses.period()
    }

    fn value(&self, tau: f64) -> Result<f64> {
        llf_values(self.ctx, &matched_filter_values(self.signal, tau, self.pulses)?)
    }

    fn derivatives(&self, tau: f64) -> Result<LlfDerivatives> {
        ca_llf_grad_hess(self.ctx, &matched_filter(self.signal, tau, self.pulses)?)
    }
}

/// Result of one Newton–Raphson run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOutcome {
    /// Final iterate, unwrapped.
    pub tau: f64,
    /// Final iterate wrapped to `[0, T)`.
    pub tau_hat: f64,
    pub iters: usize,
    pub converged: bool,
    /// LLF at the final iterate.
    pub value: f64,
}

fn clamp_to(tau: f64, (lo, hi): (f64, f64)) -> f64 {
    tau.clamp(lo, hi - 1e-12 * (hi - lo))
}

/// Safeguarded Newton–Raphson ascent from `tau0`.
///
/// A Newton step is taken when the Hessian is negative and the step is no
/// longer than one grid step; otherwise the step is a gradient-direction move
/// of at most half a grid step. Steps are halved until the LLF does not
/// decrease.
pub fn newton_raphson<E: LlfEngine + ?Sized>(engine: &E, tau0: f64, cfg: &SyncConfig) -> Result<NewtonOutcome> {
    let t = engine.period();
    let domain = engine.domain();
    if !(tau0 >= domain.0 && tau0 < domain.1) {
        return Err(Error::DelayOutOfRange(tau0));
    }
    let grid = cfg.grid_step * t;
    let eps = cfg.epsilon * t;
    let mut tau = tau0;
    let mut d = engine.derivatives(tau)?;
    let mut iters = 0;
    let mut converged = false;
    while iters < cfg.max_newton_iters {
        iters += 1;
        let newton = -d.gradient / d.hessian;
        let mut step = if d.hessian < 0.0 && newton.abs() <= grid {
            newton
        } else if d.hessian < 0.0 {
            newton.signum() * (0.5 * grid).min(newton.abs())
        } else {
            d.gradient.signum() * 0.5 * grid
        };
        if step == 0.0 || !step.is_finite() {
            converged = d.hessian < 0.0 || d.gradient == 0.0;
            break;
        }
        let mut accepted = None;
        loop {
            let cand = clamp_to(tau + step, domain);
            if cand == tau {
                break;
            }
            let v = engine.value(cand)?;
            if v >= d.value {
                accepted = Some(cand);
                break;
            }
            step *= 0.5;
            if step.abs() < 1e-3 * eps {
                break;
            }
        }
        match accepted {
            None => {
                // No ascent at any resolution above ε: τ̂ is a local maximum.
                converged = true;
                break;
            }
            Some(cand) => {
                let moved = (cand - tau).abs();
                tau = cand;
                d = engine.derivatives(tau)?;
                if moved <= eps {
                    converged = true;
                    break;
                }
            }
        }
    }
    Ok(NewtonOutcome {
        tau,
        tau_hat: wrap_delay(tau, t),
        iters,
        converged,
        value: d.value,
    })
}

/// LLF sampled on `[start, start + T)` at the grid step; returns the argmax.
pub fn grid_search<E: LlfEngine + ?Sized>(engine: &E, start: f64, cfg: &SyncConfig) -> Result<(f64, f64)> {
    let t = engine.period();
    let n = (1.0 / cfg.grid_step).round().max(1.0) as usize;
    let mut best = (start, f64::NEG_INFINITY);
    let mut lowest = f64::INFINITY;
    for i in 0..n {
        let tau = start + i as f64 * t / n as f64;
        let v = engine.value(tau)?;
        if v > best.1 {
            best = (tau, v);
        }
        lowest = lowest.min(v);
    }
    if !(best.1 - lowest > 1e-12 * (1.0 + best.1.abs())) {
        return Err(Error::FlatLikelihood);
    }
    Ok(best)
}

/// Bootstrap estimate from the NDA likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdaEstimate {
    /// Estimate wrapped to `[0, T)`.
    pub tau_hat: f64,
    /// Estimate on the symbol alignment with the highest LLF; starting point of
    /// the code-aided iterations.
    pub aligned_tau: f64,
    pub grid_argmax: f64,
    pub newton: NewtonOutcome,
}

/// Grid scan of the NDA LLF over `[0, T)`, Newton refinement from the grid
/// argmax, then a choice between the refined delay and its `±T` images.
pub fn nda_estimate(
    signal: &SampledSignal,
    spec: &Constellation,
    pulses: &PulseBank,
    cfg: &SyncConfig,
) -> Result<NdaEstimate> {
    cfg.validate()?;
    let ctx = LikelihoodContext::nda(spec, signal.num_symbols, cfg.es, cfg.sigma2)?;
    let engine = MatchedLlf {
        signal,
        pulses,
        ctx: &ctx,
    };
    let (grid_argmax, _) = grid_search(&engine, 0.0, cfg)?;
    let newton = newton_raphson(&engine, grid_argmax, cfg)?;
    let t = pulses.period();
    let (lo, hi) = engine.domain();
    let mut aligned = (newton.tau, newton.value);
    // Images differ only in the edge symbols, so they are weighed only when
    // the estimate sits next to the wrap point.
    let edge = cfg.grid_step * t;
    let near_wrap = newton.tau < edge || newton.tau > t - edge;
    for shift in [-t, t] {
        let cand = newton.tau + shift;
        if near_wrap && cand >= lo && cand < hi {
            let v = engine.value(cand)?;
            if v > aligned.1 {
                aligned = (cand, v);
            }
        }
    }
    Ok(NdaEstimate {
        tau_hat: newton.tau_hat,
        aligned_tau: aligned.0,
        grid_argmax,
        newton,
    })
}

/// One code-aided refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    /// `τ̂^{(r)}` in `[0, T)`.
    pub tau_hat: f64,
    pub newton_iters: usize,
    pub converged: bool,
    /// CA LLF at `τ̂^{(r)}`.
    pub llf: f64,
    /// Info-bit error rate of the decisions after this iteration, when the
    /// transmitted bits are known.
    pub ber: Option<f64>,
}

/// History of one synchronization run.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncTrace {
    pub nda: NdaEstimate,
    pub steps: Vec<TraceStep>,
    pub final_tau: f64,
}

impl SyncTrace {
    /// Estimate after `r` refinements (`r = 0` is the NDA bootstrap).
    pub fn tau_at(&self, r: usize) -> f64 {
        if r == 0 {
            self.nda.tau_hat
        } else {
            self.steps[r - 1].tau_hat
        }
    }

    pub fn all_converged(&self) -> bool {
        self.nda.newton.converged && self.steps.iter().all(|s| s.converged)
    }

    pub fn total_newton_iters(&self) -> usize {
        self.nda.newton.iters + self.steps.iter().map(|s| s.newton_iters).sum::<usize>()
    }
}

/// Output of the full loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncOutcome {
    /// `τ̂_ML-CA` in `[0, T)`.
    pub tau_hat: f64,
    pub trace: SyncTrace,
    /// Info-bit decisions from the last decoder exchange; `None` when no
    /// exchange ran.
    pub decoded: Option<Vec<u8>>,
    /// A priori LLRs that defined the last CA likelihood.
    pub priors: LlrFrame,
}

/// Bit likelihoods of every symbol-rate sample, in transmission order.
pub fn demap_frame(
    y: &[Complex64],
    frame: &LlrFrame,
    spec: &Constellation,
    es: f64,
    sigma2: f64,
    priors: DemapPriors,
) -> Result<Vec<f64>> {
    if y.len() != frame.num_symbols() {
        return Err(Error::LengthMismatch {
            what: "symbol-rate samples",
            expected: frame.num_symbols(),
            found: y.len(),
        });
    }
    let bps = spec.bits_per_symbol();
    let mut out = vec![0.0; y.len() * bps];
    for (k, (s, chunk)) in y.iter().zip(out.chunks_exact_mut(bps)).enumerate() {
        soft_demap_into(*s, frame.row(k), spec, es, sigma2, priors, chunk);
    }
    Ok(out)
}

fn bit_error_rate(decided: &[u8], truth: &[u8]) -> f64 {
    let errors = decided.iter().zip(truth).filter(|(a, b)| a != b).count();
    errors as f64 / truth.len().max(1) as f64
}

fn check_frame(signal: &SampledSignal, code: &TurboCode, spec: &Constellation) -> Result<()> {
    let bits = signal.num_symbols * spec.bits_per_symbol();
    if bits != code.frame_len() {
        return Err(Error::LengthMismatch {
            what: "code bits per signal frame",
            expected: code.frame_len(),
            found: bits,
        });
    }
    Ok(())
}

/// One refinement of the priors: demap at `tau`, run the decoder exchanges
/// and return `L = Υ − Λ`.
#[allow(clippy::too_many_arguments)]
fn refresh_priors(
    signal: &SampledSignal,
    tau: f64,
    frame: &LlrFrame,
    state: &mut DecoderState,
    code: &TurboCode,
    spec: &Constellation,
    pulses: &PulseBank,
    cfg: &SyncConfig,
) -> Result<LlrFrame> {
    let y = matched_filter_values(signal, tau, pulses)?;
    let lambda = demap_frame(&y, frame, spec, cfg.es, cfg.sigma2, cfg.demap_priors)?;
    let mut upsilon = Vec::new();
    for _ in 0..cfg.decoder_exchanges {
        upsilon = turbo_iterate(&lambda, state, code)?;
    }
    LlrFrame::new(spec.bits_per_symbol(), a_priori_from(&upsilon, &lambda))
}

/// NDA bootstrap followed by `R` code-aided refinements, each using priors
/// from one more turbo exchange and Newton started at the previous estimate.
pub fn ca_sync_loop(
    signal: &SampledSignal,
    code: &TurboCode,
    spec: &Constellation,
    pulses: &PulseBank,
    cfg: &SyncConfig,
    info_bits: Option<&[u8]>,
) -> Result<SyncOutcome> {
    check_frame(signal, code, spec)?;
    if let Some(b) = info_bits {
        if b.len() != code.info_len() {
            return Err(Error::LengthMismatch {
                what: "info bits",
                expected: code.info_len(),
                found: b.len(),
            });
        }
    }
    let nda = nda_estimate(signal, spec, pulses, cfg)?;
    let mut tau = nda.aligned_tau;
    let mut frame = LlrFrame::zeros(signal.num_symbols, spec.bits_per_symbol());
    let mut state = DecoderState::new(code);
    let mut steps = Vec::with_capacity(cfg.turbo_iterations);
    for _ in 0..cfg.turbo_iterations {
        frame = refresh_priors(signal, tau, &frame, &mut state, code, spec, pulses, cfg)?;
        let ctx = LikelihoodContext::new(&frame, spec, cfg.es, cfg.sigma2)?;
        let engine = MatchedLlf {
            signal,
            pulses,
            ctx: &ctx,
        };
        let out = newton_raphson(&engine, tau, cfg)?;
        tau = out.tau;
        steps.push(TraceStep {
            tau_hat: out.tau_hat,
            newton_iters: out.iters,
            converged: out.converged,
            llf: out.value,
            ber: info_bits.map(|b| bit_error_rate(&state.decisions(), b)),
        });
    }
    let tau_hat = wrap_delay(tau, pulses.period());
    let decoded = (state.iterations() > 0).then(|| state.decisions());
    Ok(SyncOutcome {
        tau_hat,
        trace: SyncTrace {
            nda,
            steps,
            final_tau: tau_hat,
        },
        decoded,
        priors: frame,
    })
}

/// Priors after `cfg.turbo_iterations` refinements at a known delay.
pub fn genie_priors(
    signal: &SampledSignal,
    tau: f64,
    code: &TurboCode,
    spec: &Constellation,
    pulses: &PulseBank,
    cfg: &SyncConfig,
) -> Result<(LlrFrame, Vec<u8>)> {
    check_frame(signal, code, spec)?;
    let mut frame = LlrFrame::zeros(signal.num_symbols, spec.bits_per_symbol());
    let mut state = DecoderState::new(code);
    for _ in 0..cfg.turbo_iterations {
        frame = refresh_priors(signal, tau, &frame, &mut state, code, spec, pulses, cfg)?;
    }
    Ok((frame, state.decisions()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::build_constellation;
    use crate::crlb::sigma2_for_snr;
    use crate::numeric::wrapped_error;
    use crate::turbo_codec::{CodeRate, TurboConfig};
    use crate::waveform::{add_awgn, synthesize};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qpsk_frame(k: usize, tau: f64, seed: u64, pulses: &PulseBank) -> SampledSignal {
        let c = build_constellation(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..2 * k).map(|_| rng.random_range(0..2)).collect();
        synthesize(&c.modulate(&bits).unwrap(), tau, pulses, 1.0).unwrap()
    }

    struct Scaled<'a>(MatchedLlf<'a>, f64);

    impl LlfEngine for Scaled<'_> {
        fn period(&self) -> f64 {
            self.0.period()
        }
        fn value(&self, tau: f64) -> Result<f64> {
            Ok(self.1 * self.0.value(tau)?)
        }
        fn derivatives(&self, tau: f64) -> Result<LlfDerivatives> {
            let d = self.0.derivatives(tau)?;
            Ok(LlfDerivatives {
                value: self.1 * d.value,
                gradient: self.1 * d.gradient,
                hessian: self.1 * d.hessian,
            })
        }
    }

    /// A single Gaussian bump, concave only near its peak.
    struct Bump(f64);

    impl LlfEngine for Bump {
        fn period(&self) -> f64 {
            1.0
        }
        fn value(&self, tau: f64) -> Result<f64> {
            Ok((-(tau - self.0).powi(2) / 0.02).exp())
        }
        fn derivatives(&self, tau: f64) -> Result<LlfDerivatives> {
            let v = self.value(tau)?;
            let x = tau - self.0;
            Ok(LlfDerivatives {
                value: v,
                gradient: -x / 0.01 * v,
                hessian: (x * x / 1e-4 - 1.0 / 0.01) * v,
            })
        }
    }

    #[test]
    fn config_invariants() {
        let mut c = SyncConfig::new(1.0, 0.1);
        assert!(c.validate().is_ok());
        c.epsilon = c.grid_step;
        assert!(c.validate().is_err());
    }

    #[test]
    fn noiseless_nda_recovers_delay() {
        let p = PulseBank::standard(0.2).unwrap();
        let c = build_constellation(1).unwrap();
        let cfg = SyncConfig::new(1.0, 0.05);
        for &tau in &[0.3, 0.0, 0.77, 0.999] {
            let s = qpsk_frame(200, tau, 4, &p);
            let est = nda_estimate(&s, &c, &p, &cfg).unwrap();
            assert!(
                wrapped_error(est.tau_hat, tau, 1.0).abs() < 1e-4,
                "tau={tau} got {}",
                est.tau_hat
            );
            assert!((0.0..1.0).contains(&est.tau_hat));
            assert!((est.aligned_tau - tau).abs() < 1e-3, "alignment {}", est.aligned_tau);
        }
    }

    #[test]
    fn stationary_start_converges_fast() {
        let p = PulseBank::standard(0.2).unwrap();
        let c = build_constellation(1).unwrap();
        let cfg = SyncConfig::new(1.0, 0.05);
        let s = qpsk_frame(150, 0.4, 9, &p);
        let ctx = LikelihoodContext::nda(&c, 150, 1.0, 0.05).unwrap();
        let out = newton_raphson(
            &MatchedLlf {
                signal: &s,
                pulses: &p,
                ctx: &ctx,
            },
            0.4,
            &cfg,
        )
        .unwrap();
        assert!(out.converged && out.iters <= 2);
    }

    #[test]
    fn newton_matches_dense_grid() {
        let p = PulseBank::standard(0.2).unwrap();
        let c = build_constellation(1).unwrap();
        let sigma2 = sigma2_for_snr(1.0, 10.0);
        let cfg = SyncConfig::new(1.0, sigma2);
        let s = add_awgn(&qpsk_frame(100, 0.35, 2, &p), sigma2, 3).unwrap();
        let ctx = LikelihoodContext::nda(&c, 100, 1.0, sigma2).unwrap();
        let engine = MatchedLlf {
            signal: &s,
            pulses: &p,
            ctx: &ctx,
        };
        let (g, _) = grid_search(&engine, 0.0, &cfg).unwrap();
        let out = newton_raphson(&engine, g + cfg.grid_step / 2.0, &cfg).unwrap();
        assert!(out.converged);
        // dense grid around the grid argmax at T/4096, then golden refinement
        let mut best = (g, f64::NEG_INFINITY);
        for i in -128..=128 {
            let t = g + i as f64 / 4096.0;
            let v = engine.value(t).unwrap();
            if v > best.1 {
                best = (t, v);
            }
        }
        let (mut a, mut b) = (best.0 - 1.0 / 4096.0, best.0 + 1.0 / 4096.0);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        while b - a > 1e-9 {
            let (x1, x2) = (b - r * (b - a), a + r * (b - a));
            if engine.value(x1).unwrap() > engine.value(x2).unwrap() {
                b = x2;
            } else {
                a = x1;
            }
        }
        assert!((out.tau - 0.5 * (a + b)).abs() < cfg.epsilon, "{} {}", out.tau, a);
    }

    #[test]
    fn damped_fallback_from_the_tail() {
        let cfg = SyncConfig::new(1.0, 0.1);
        let engine = Bump(0.5);
        // Hessian is positive beyond one standard deviation of the bump.
        assert!(engine.derivatives(0.75).unwrap().hessian > 0.0);
        let out = newton_raphson(&engine, 0.75, &cfg).unwrap();
        assert!(out.converged);
        assert!((out.tau - 0.5).abs() < 1e-6);
        assert!((0.0..1.0).contains(&out.tau_hat));
    }

    #[test]
    fn accepted_steps_never_decrease_the_llf() {
        struct Recording<'a>(Bump, &'a std::cell::RefCell<Vec<(f64, f64)>>);
        impl LlfEngine for Recording<'_> {
            fn period(&self) -> f64 {
                1.0
            }
            fn value(&self, tau: f64) -> Result<f64> {
                self.0.value(tau)
            }
            fn derivatives(&self, tau: f64) -> Result<LlfDerivatives> {
                let d = self.0.derivatives(tau)?;
                self.1.borrow_mut().push((tau, d.value));
                Ok(d)
            }
        }
        let log = std::cell::RefCell::new(Vec::new());
        let cfg = SyncConfig::new(1.0, 0.1);
        newton_raphson(&Recording(Bump(0.2), &log), 0.9, &cfg).unwrap();
        let log = log.into_inner();
        assert!(log.len() > 2);
        for w in log.windows(2) {
            assert!(w[1].1 >= w[0].1);
            assert!(w[1].0 >= -0.5 && w[1].0 < 1.5);
        }
    }

    #[test]
    fn argmax_is_scale_invariant() {
        let p = PulseBank::standard(0.2).unwrap();
        let c = build_constellation(1).unwrap();
        let sigma2 = sigma2_for_snr(1.0, 5.0);
        let cfg = SyncConfig::new(1.0, sigma2);
        let s = add_awgn(&qpsk_frame(80, 0.6, 5, &p), sigma2, 6).unwrap();
        let ctx = LikelihoodContext::nda(&c, 80, 1.0, sigma2).unwrap();
        let base = MatchedLlf {
            signal: &s,
            pulses: &p,
            ctx: &ctx,
        };
        let scaled = Scaled(base, 7.5);
        let (g1, _) = grid_search(&base, 0.0, &cfg).unwrap();
        let (g2, _) = grid_search(&scaled, 0.0, &cfg).unwrap();
        assert_eq!(g1, g2);
        let a = newton_raphson(&base, g1, &cfg).unwrap();
        let b = newton_raphson(&scaled, g1, &cfg).unwrap();
        assert!((a.tau - b.tau).abs() < 1e-9);
    }

    #[test]
    fn silent_frame_is_flat() {
        let p = PulseBank::new(0.2, 1.0, 8, 4).unwrap();
        let c = build_constellation(1).unwrap();
        let mut s = qpsk_frame(30, 0.2, 1, &p);
        s.samples.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        let cfg = SyncConfig::new(1.0, 0.1);
        assert!(matches!(nda_estimate(&s, &c, &p, &cfg), Err(Error::FlatLikelihood)));
    }

    fn coded_frame(k: usize, tau: f64, snr: f64, seed: u64, p: &PulseBank) -> (SampledSignal, TurboCode, Vec<u8>, f64) {
        let c = build_constellation(1).unwrap();
        let code = TurboCode::new(TurboConfig::for_frame(CodeRate::Third, 2 * k, 77).unwrap(), 2 * k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let info: Vec<u8> = (0..code.info_len()).map(|_| rng.random_range(0..2)).collect();
        let bits = code.encode(&info).unwrap().bits;
        let sigma2 = sigma2_for_snr(1.0, snr);
        let s = synthesize(&c.modulate(&bits).unwrap(), tau, p, 1.0).unwrap();
        (add_awgn(&s, sigma2, seed + 1).unwrap(), code, info, sigma2)
    }

    #[test]
    fn zero_iterations_reduce_to_nda() {
        let p = PulseBank::standard(0.2).unwrap();
        let c = build_constellation(1).unwrap();
        let (s, code, _, sigma2) = coded_frame(100, 0.45, 4.0, 3, &p);
        let mut cfg = SyncConfig::new(1.0, sigma2);
        cfg.turbo_iterations = 0;
        let out = ca_sync_loop(&s, &code, &c, &p, &cfg, None).unwrap();
        let nda = nda_estimate(&s, &c, &p, &cfg).unwrap();
        assert_eq!(out.tau_hat, wrap_delay(nda.aligned_tau, 1.0));
        assert!(out.trace.steps.is_empty() && out.decoded.is_none());
    }

    #[test]
    fn high_snr_loop_decodes_and_locks() {
        let p = PulseBank::standard(0.2).unwrap();
        let c = build_constellation(1).unwrap();
        let (s, code, info, sigma2) = coded_frame(200, 0.62, 8.0, 21, &p);
        let mut cfg = SyncConfig::new(1.0, sigma2);
        cfg.turbo_iterations = 6;
        let out = ca_sync_loop(&s, &code, &c, &p, &cfg, Some(&info)).unwrap();
        assert_eq!(out.decoded.as_deref(), Some(&info[..]));
        assert!(wrapped_error(out.tau_hat, 0.62, 1.0).abs() < 0.02);
        assert_eq!(out.trace.steps.len(), 6);
        assert_eq!(out.trace.steps.last().unwrap().ber, Some(0.0));
        assert!(out.trace.all_converged());
        let again = ca_sync_loop(&s, &code, &c, &p, &cfg, Some(&info)).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn mismatched_code_is_rejected() {
        let p = PulseBank::new(0.2, 1.0, 8, 4).unwrap();
        let c = build_constellation(1).unwrap();
        let (s, _, _, sigma2) = coded_frame(40, 0.3, 4.0, 1, &p);
        let other = TurboCode::new(TurboConfig::for_frame(CodeRate::Third, 100, 1).unwrap(), 100).unwrap();
        let cfg = SyncConfig::new(1.0, sigma2);
        assert!(matches!(
            ca_sync_loop(&s, &other, &c, &p, &cfg, None),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
