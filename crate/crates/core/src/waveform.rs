//! Root-raised-cosine signalling: pulse evaluation with two derivatives,
//! oversampled synthesis at a fractional delay, AWGN, and the matched and
//! derivative-matched filters that reduce a frame to symbol-rate statistics.
//!
//! Delays enter the pulse argument analytically, so synthesis and filtering
//! at any delay reduce to FIR filtering with a per-delay tap table.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Distance (in symbol periods) from a removable singularity inside which the
/// closed forms are replaced by frequency-domain quadrature.
const SINGULAR_GUARD: f64 = 0.02;
const SPECTRAL_NODES: usize = 64;
/// Length (in symbol periods) of the smooth taper at each end of the span.
const TAPER: f64 = 4.0;

/// Value and first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    v: f64,
    d1: f64,
    d2: f64,
}

impl Jet {
    fn linear(x: f64, slope: f64) -> Self {
        Jet {
            v: slope * x,
            d1: slope,
            d2: 0.0,
        }
    }

    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    fn div(self, o: Jet) -> Jet {
        let q = self.v / o.v;
        let q1 = (self.d1 - q * o.d1) / o.v;
        let q2 = (self.d2 - 2.0 * q1 * o.d1 - q * o.d2) / o.v;
        Jet { v: q, d1: q1, d2: q2 }
    }

    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }

    fn scale(self, s: f64) -> Jet {
        Jet {
            v: s * self.v,
            d1: s * self.d1,
            d2: s * self.d2,
        }
    }

    /// `f ∘ self` given `(f, f', f'')` at `self.v`.
    fn compose(self, f: (f64, f64, f64)) -> Jet {
        Jet {
            v: f.0,
            d1: f.1 * self.d1,
            d2: f.2 * self.d1 * self.d1 + f.1 * self.d2,
        }
    }
}

/// `sin z / z` with two derivatives.
fn sinc_u(z: f64) -> (f64, f64, f64) {
    if z.abs() < 0.1 {
        let z2 = z * z;
        let v = 1.0 - z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0 * (1.0 - z2 / 72.0)));
        let d1 = z * (-1.0 / 3.0 + z2 * (1.0 / 30.0 + z2 * (-1.0 / 840.0 + z2 / 45360.0)));
        let d2 = -1.0 / 3.0 + z2 * (1.0 / 10.0 + z2 * (-1.0 / 168.0 + z2 / 6480.0));
        (v, d1, d2)
    } else {
        let (s, c) = z.sin_cos();
        let v = s / z;
        let d1 = (c - v) / z;
        let d2 = -v - 2.0 * d1 / z;
        (v, d1, d2)
    }
}

fn cos_jet(z: f64) -> (f64, f64, f64) {
    let (s, c) = z.sin_cos();
    (c, -s, -c)
}

/// Unit-energy RRC pulse `h`, its autocorrelation `g` (raised cosine) and
/// their derivatives, plus the sampling grid.
#[derive(Debug, Clone)]
pub struct PulseBank {
    rolloff: f64,
    period: f64,
    span: usize,
    oversampling: usize,
    rule: GaussLegendre,
}

impl PulseBank {
    pub fn new(rolloff: f64, period: f64, span: usize, oversampling: usize) -> Result<Self> {
        if !(rolloff > 0.0 && rolloff <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rolloff must be in (0, 1], got {rolloff}"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "symbol period must be positive, got {period}"
            )));
        }
        if oversampling < 4 {
            return Err(Error::InvalidParameter(format!(
                "oversampling must be at least 4, got {oversampling}"
            )));
        }
        if span == 0 {
            return Err(Error::InvalidParameter("span must be positive".into()));
        }
        Ok(Self {
            rolloff,
            period,
            span,
            oversampling,
            rule: GaussLegendre::new(SPECTRAL_NODES),
        })
    }

    /// Rolloff 0.2, `T = 1`, span 32, 8 samples per symbol.
    pub fn standard(rolloff: f64) -> Result<Self> {
        Self::new(rolloff, 1.0, 32, 8)
    }

    pub fn rolloff(&self) -> f64 {
        self.rolloff
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn oversampling(&self) -> usize {
        self.oversampling
    }

    pub fn sample_period(&self) -> f64 {
        self.period / self.oversampling as f64
    }

    /// `(h, ḣ, ḧ)` at time `t`.
    pub fn h(&self, t: f64) -> (f64, f64, f64) {
        let b = self.rolloff;
        let x = t / self.period;
        let jet = if (x.abs() - 1.0 / (4.0 * b)).abs() < SINGULAR_GUARD {
            return self.spectral(t, false);
        } else {
            let sinc = Jet::linear(x, PI * (1.0 - b)).compose(sinc_u(PI * (1.0 - b) * x));
            let cos = Jet::linear(x, PI * (1.0 + b)).compose(cos_jet(PI * (1.0 + b) * x));
            let num = sinc.scale(1.0 - b).add(cos.scale(4.0 * b / PI));
            let den = Jet {
                v: 1.0 - 16.0 * b * b * x * x,
                d1: -32.0 * b * b * x,
                d2: -32.0 * b * b,
            };
            num.div(den)
        };
        self.to_time(jet, self.period.sqrt())
    }

    /// `(g, ġ, g̈)` at time `t`.
    pub fn g(&self, t: f64) -> (f64, f64, f64) {
        let b = self.rolloff;
        let x = t / self.period;
        if (x.abs() - 1.0 / (2.0 * b)).abs() < SINGULAR_GUARD {
            return self.spectral(t, true);
        }
        let sinc = Jet::linear(x, PI).compose(sinc_u(PI * x));
        let cos = Jet::linear(x, PI * b).compose(cos_jet(PI * b * x));
        let den = Jet {
            v: 1.0 - 4.0 * b * b * x * x,
            d1: -8.0 * b * b * x,
            d2: -8.0 * b * b,
        };
        self.to_time(sinc.mul(cos).div(den), 1.0)
    }

    fn to_time(&self, j: Jet, norm: f64) -> (f64, f64, f64) {
        let tp = self.period;
        (j.v / norm, j.d1 / (tp * norm), j.d2 / (tp * tp * norm))
    }

    /// `2∫_0^{(1+β)/2T} S(f)·dⁿ/dtⁿ cos(2πft) df` with `S` the RRC amplitude
    /// spectrum (or its square for the raised cosine).
    fn spectral(&self, t: f64, squared: bool) -> (f64, f64, f64) {
        let b = self.rolloff;
        let tp = self.period;
        let f1 = (1.0 - b) / (2.0 * tp);
        let f2 = (1.0 + b) / (2.0 * tp);
        let amp = |f: f64| -> f64 {
            let shape = if f <= f1 {
                1.0
            } else {
                (PI * tp / (2.0 * b) * (f - f1)).cos()
            };
            if squared {
                tp * shape * shape
            } else {
                tp.sqrt() * shape
            }
        };
        let mut acc = [0.0; 3];
        for (lo, hi) in [(0.0, f1), (f1, f2)] {
            if hi <= lo {
                continue;
            }
            for (n, slot) in acc.iter_mut().enumerate() {
                *slot += self.rule.integrate(lo, hi, |f| {
                    let w = 2.0 * PI * f;
                    let (s, c) = (w * t).sin_cos();
                    let kernel = match n {
                        0 => c,
                        1 => -w * s,
                        _ => -w * w * c,
                    };
                    amp(f) * kernel
                });
            }
        }
        (2.0 * acc[0], 2.0 * acc[1], 2.0 * acc[2])
    }

    /// Quintic taper: 1 inside `(span − TAPER)·T`, 0 at `span·T`, with
    /// matching first and second derivatives at both joints.
    fn window(&self, t: f64) -> (f64, f64, f64) {
        let reach = self.span as f64 * self.period;
        let width = TAPER.min(self.span as f64) * self.period;
        let a = t.abs();
        if a <= reach - width {
            return (1.0, 0.0, 0.0);
        }
        if a >= reach {
            return (0.0, 0.0, 0.0);
        }
        let s = (a - (reach - width)) / width;
        let v = 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let d1 = -30.0 * s * s * (1.0 - s) * (1.0 - s) / width;
        let d2 = -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (width * width);
        (v, t.signum() * d1, d2)
    }

    /// The transmitted (and matched) pulse: `h` under the span taper.
    pub fn shaped(&self, t: f64) -> (f64, f64, f64) {
        let w = self.window(t);
        if w.0 == 0.0 && w.1 == 0.0 {
            return (0.0, 0.0, 0.0);
        }
        let h = self.h(t);
        (
            h.0 * w.0,
            h.1 * w.0 + h.0 * w.1,
            h.2 * w.0 + 2.0 * h.1 * w.1 + h.0 * w.2,
        )
    }

    fn tap_range(&self, tau: f64) -> (isize, isize) {
        let ts = self.sample_period();
        let reach = self.span as f64 * self.period;
        (
            ((tau - reach) / ts).ceil() as isize,
            ((tau + reach) / ts).floor() as isize,
        )
    }

    /// Taps `h(mT_s − τ)` and derivatives for every `m` with
    /// `|mT_s − τ| ≤ span·T`.
    pub fn taps(&self, tau: f64) -> Taps {
        let ts = self.sample_period();
        let (lo, hi) = self.tap_range(tau);
        let mut h = Vec::with_capacity((hi - lo + 1) as usize);
        let mut dh = Vec::with_capacity(h.capacity());
        let mut ddh = Vec::with_capacity(h.capacity());
        for m in lo..=hi {
            let (a, b, c) = self.shaped(m as f64 * ts - tau);
            h.push(a);
            dh.push(b);
            ddh.push(c);
        }
        Taps { start: lo, h, dh, ddh }
    }

    /// Taps without derivatives, for value-only filtering.
    pub fn value_taps(&self, tau: f64) -> Taps {
        let ts = self.sample_period();
        let (lo, hi) = self.tap_range(tau);
        let h = (lo..=hi).map(|m| self.shaped(m as f64 * ts - tau).0).collect();
        Taps {
            start: lo,
            h,
            dh: Vec::new(),
            ddh: Vec::new(),
        }
    }
}

/// `(g, ġ, g̈)` of the raised-cosine autocorrelation at `t`.
pub fn pulse_derivatives(pulses: &PulseBank, t: f64) -> (f64, f64, f64) {
    pulses.g(t)
}

/// FIR taps of the (derivative) matched filter at one delay; tap `i`
/// corresponds to sample offset `start + i`.
#[derive(Debug, Clone)]
pub struct Taps {
    pub start: isize,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    pub ddh: Vec<f64>,
}

impl Taps {
    fn end(&self) -> isize {
        self.start + self.h.len() as isize
    }
}

/// Oversampled complex baseband frame. Sample `n` is taken at time
/// `(n − origin)·T_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub samples: Vec<Complex64>,
    pub sample_period: f64,
    pub period: f64,
    pub origin: usize,
    pub es: f64,
    pub true_tau: f64,
    pub num_symbols: usize,
}

impl SampledSignal {
    /// Time of the first sample.
    pub fn t0(&self) -> f64 {
        -(self.origin as f64) * self.sample_period
    }

    fn oversampling(&self) -> usize {
        (self.period / self.sample_period).round() as usize
    }
}

/// Support kept before the first symbol and after the last, in symbol periods
/// beyond the pulse span. Estimators may move the delay in `[−T/2, 3T/2)`.
const LEAD: usize = 2;
const TRAIL: usize = 3;

/// `√Es·Σ_k a(k)·h(t − kT − τ)` sampled on the bank's grid, covering every
/// symbol's full pulse span.
pub fn synthesize(symbols: &[Complex64], tau: f64, pulses: &PulseBank, es: f64) -> Result<SampledSignal> {
    let tp = pulses.period();
    if !(0.0..tp).contains(&tau) {
        return Err(Error::DelayOutOfRange(tau));
    }
    if symbols.is_empty() {
        return Err(Error::InvalidParameter("empty symbol frame".into()));
    }
    let q = pulses.oversampling();
    let span = pulses.span();
    let k = symbols.len();
    let origin = (span + LEAD) * q;
    let len = (k - 1 + 2 * span + LEAD + TRAIL) * q + 1;
    let mut samples = vec![Complex64::new(0.0, 0.0); len];
    let taps = pulses.value_taps(tau);
    let amp = es.sqrt();
    for (idx, &a) in symbols.iter().enumerate() {
        let base = (origin + idx * q) as isize + taps.start;
        let a = amp * a;
        for (i, &h) in taps.h.iter().enumerate() {
            samples[(base + i as isize) as usize] += a * h;
        }
    }
    Ok(SampledSignal {
        samples,
        sample_period: pulses.sample_period(),
        period: tp,
        origin,
        es,
        true_tau: tau,
        num_symbols: k,
    })
}

/// Adds white complex Gaussian noise of per-dimension variance `σ²/T_s` per
/// sample, so each matched-filter output carries variance `σ²` per dimension.
pub fn add_awgn(signal: &SampledSignal, sigma2: f64, seed: u64) -> Result<SampledSignal> {
    let mut out = signal.clone();
    add_awgn_in_place(&mut out, sigma2, &mut ChaCha8Rng::seed_from_u64(seed))?;
    Ok(out)
}

pub fn add_awgn_in_place<R: Rng + ?Sized>(signal: &mut SampledSignal, sigma2: f64, rng: &mut R) -> Result<()> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be positive, got {sigma2}"
        )));
    }
    let sd = (sigma2 / signal.sample_period).sqrt();
    for s in signal.samples.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(sd * re, sd * im);
    }
    Ok(())
}

/// Symbol-rate statistics at one candidate delay.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedOutputs {
    /// `y_k = u_k + j v_k`.
    pub y: Vec<Complex64>,
    /// `du_k/dτ`.
    pub du: Vec<f64>,
    /// `dv_k/dτ`.
    pub dv: Vec<f64>,
    /// `d²u_k/dτ²`.
    pub ddu: Vec<f64>,
    /// `d²v_k/dτ²`.
    pub ddv: Vec<f64>,
    pub at_tau: f64,
}

impl MatchedOutputs {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn u(&self, k: usize) -> f64 {
        self.y[k].re
    }

    pub fn v(&self, k: usize) -> f64 {
        self.y[k].im
    }
}

fn check_support(signal: &SampledSignal, taps: &Taps) -> Result<()> {
    let q = signal.oversampling() as isize;
    let n = signal.samples.len() as isize;
    let origin = signal.origin as isize;
    let missing: Vec<usize> = (0..signal.num_symbols)
        .filter(|&k| {
            let base = origin + k as isize * q;
            base + taps.start < 0 || base + taps.end() > n
        })
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::InsufficientSupport { missing })
    }
}

/// Matched filter and its first two delay derivatives at `tau_hat`.
pub fn matched_filter(signal: &SampledSignal, tau_hat: f64, pulses: &PulseBank) -> Result<MatchedOutputs> {
    let taps = pulses.taps(tau_hat);
    matched_filter_with(signal, &taps, tau_hat)
}

/// Matched filter driven by precomputed taps.
pub fn matched_filter_with(signal: &SampledSignal, taps: &Taps, tau_hat: f64) -> Result<MatchedOutputs> {
    check_support(signal, taps)?;
    let q = signal.oversampling();
    let ts = signal.sample_period;
    let k = signal.num_symbols;
    let mut out = MatchedOutputs {
        y: Vec::with_capacity(k),
        du: Vec::with_capacity(k),
        dv: Vec::with_capacity(k),
        ddu: Vec::with_capacity(k),
        ddv: Vec::with_capacity(k),
        at_tau: tau_hat,
    };
    let with_derivatives = !taps.dh.is_empty();
    for idx in 0..k {
        let base = ((signal.origin + idx * q) as isize + taps.start) as usize;
        let window = &signal.samples[base..base + taps.h.len()];
        let mut y = Complex64::new(0.0, 0.0);
        for (s, &h) in window.iter().zip(&taps.h) {
            y += s * h;
        }
        out.y.push(y * ts);
        if with_derivatives {
            let (mut d1, mut d2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for ((s, &dh), &ddh) in window.iter().zip(&taps.dh).zip(&taps.ddh) {
                d1 += s * dh;
                d2 += s * ddh;
            }
            out.du.push(-ts * d1.re);
            out.dv.push(-ts * d1.im);
            out.ddu.push(ts * d2.re);
            out.ddv.push(ts * d2.im);
        }
    }
    Ok(out)
}

/// Value-only matched filter, for line searches.
pub fn matched_filter_values(signal: &SampledSignal, tau_hat: f64, pulses: &PulseBank) -> Result<Vec<Complex64>> {
    let taps = pulses.value_taps(tau_hat);
    Ok(matched_filter_with(signal, &taps, tau_hat)?.y)
}
