//! Closed-form code-aided Cramér–Rao bound for the delay, its NDA and DA
//! references, and a Monte-Carlo Fisher-information oracle.
//!
//! Per symbol `k` and axis `q` the Fisher contribution is
//!
//! ```text
//! γ = 4ρ²(Ψ − ω)·A_k − 2ρ[Ψ g̈(0) + α_k Σ_{l≠k} α_l g̈((l−k)T)]
//! A_k = Σ_l (ω_l − α_l²) ġ²((l−k)T) + (Σ_l α_l ġ((l−k)T))²
//! ```
//!
//! where `Ψ = (2βd²/√π)∫ λ²(s)/δ(s) e^{−s²} ds` is evaluated by Gauss–Hermite
//! quadrature.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constellation::{
    axis_coefficients, symbol_apps, Axis, AxisCoefficients, BetaConvention, Constellation, LlrFrame,
};
use crate::error::{Error, Result};
use crate::likelihood::{ca_llf_grad_hess, LikelihoodContext};
use crate::numeric::{derive_seed, log_sum_exp};
use crate::quadrature::GaussHermite;
use crate::waveform::{add_awgn_in_place, matched_filter, synthesize, PulseBank};

const PSI_START_ORDER: usize = 120;
const PSI_MAX_ORDER: usize = 960;

/// Everything the closed-form bound depends on.
#[derive(Debug, Clone)]
pub struct CrlbInputs {
    pub frame: LlrFrame,
    pub spec: Constellation,
    pub es: f64,
    pub sigma2: f64,
    pub pulses: PulseBank,
    /// Largest `|l − k|` kept in the `ġ`, `g̈` sums.
    pub lag_window: usize,
}

impl CrlbInputs {
    pub fn new(frame: LlrFrame, spec: &Constellation, es: f64, sigma2: f64, pulses: &PulseBank) -> Result<Self> {
        if !(es > 0.0 && sigma2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Es and sigma2 must be positive, got {es} and {sigma2}"
            )));
        }
        if frame.bits_per_symbol() != spec.bits_per_symbol() {
            return Err(Error::LengthMismatch {
                what: "LLR row",
                expected: spec.bits_per_symbol(),
                found: frame.bits_per_symbol(),
            });
        }
        Ok(Self {
            frame,
            spec: spec.clone(),
            es,
            sigma2,
            lag_window: pulses.span(),
            pulses: pulses.clone(),
        })
    }

    /// Inputs at `Es/N0 = snr_db` with `Es = 1`.
    pub fn at_snr(frame: LlrFrame, spec: &Constellation, snr_db: f64, pulses: &PulseBank) -> Result<Self> {
        Self::new(frame, spec, 1.0, sigma2_for_snr(1.0, snr_db), pulses)
    }

    pub fn rho(&self) -> f64 {
        self.es / (2.0 * self.sigma2)
    }

    pub fn num_symbols(&self) -> usize {
        self.frame.num_symbols()
    }

    fn coefficients(&self, k: usize, axis: Axis) -> AxisCoefficients {
        axis_coefficients(self.frame.row(k), &self.spec, axis, BetaConvention::AllAxisBits)
    }
}

/// `σ²` giving `Es/N0 = Es/(2σ²)` of `snr_db`.
pub fn sigma2_for_snr(es: f64, snr_db: f64) -> f64 {
    es / (2.0 * 10f64.powf(snr_db / 10.0))
}

/// A converged `Ψ` with its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiValue {
    pub value: f64,
    pub order: usize,
    /// `|Ψ_n − Ψ_{n/2}|` at the returned order.
    pub last_change: f64,
}

/// `Ψ` from one axis' coefficients.
pub fn psi_from(coeffs: &AxisCoefficients, d: f64, rho: f64) -> Result<PsiValue> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let n = coeffs.log_theta.len();
    let amps: Vec<f64> = (1..=n).map(|i| (2 * i - 1) as f64).collect();
    let log_w: Vec<f64> = coeffs
        .log_theta
        .iter()
        .zip(&amps)
        .map(|(lt, m)| lt - rho * m * m * d * d)
        .collect();
    let half = coeffs.sign_llr / 2.0;
    let slope = 2.0 * rho.sqrt() * d;
    let mut terms = vec![0.0; n];
    let mut tanhs = vec![0.0; n];
    // ln(λ²/δ) = ln δ + 2 ln|λ/δ|
    let mut log_integrand = |s: f64| -> f64 {
        for i in 0..n {
            let z = slope * amps[i] * s + half;
            terms[i] = log_w[i] + crate::numeric::log_cosh(z);
            tanhs[i] = z.tanh();
        }
        let log_delta = log_sum_exp(&terms);
        let ratio: f64 = (0..n).map(|i| (terms[i] - log_delta).exp() * amps[i] * tanhs[i]).sum();
        log_delta + 2.0 * ratio.abs().ln()
    };
    let prefactor = 2.0 * coeffs.beta * d * d / std::f64::consts::PI.sqrt();
    let mut order = PSI_START_ORDER;
    let mut prev = prefactor * GaussHermite::cached(order).integrate_log(&mut log_integrand);
    loop {
        let next_order = order * 2;
        let next = prefactor * GaussHermite::cached(next_order).integrate_log(&mut log_integrand);
        let change = (next - prev).abs();
        if change <= 1e-10 * next.abs() + 1e-16 * coeffs.omega {
            return Ok(PsiValue {
                value: next,
                order: next_order,
                last_change: change,
            });
        }
        if next_order >= PSI_MAX_ORDER {
            return Err(Error::QuadratureNotConverged {
                order: next_order,
                last_change: change,
            });
        }
        prev = next;
        order = next_order;
    }
}

/// `Ψ_{k,q}`.
pub fn psi(inputs: &CrlbInputs, k: usize, axis: Axis) -> Result<PsiValue> {
    psi_from(&inputs.coefficients(k, axis), inputs.spec.half_distance(), inputs.rho())
}

/// Which assembly of `γ` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaForm {
    /// `4ρ²(Ψ − ω)A − 2ρ[Ψ g̈(0) + α Σ α g̈]` on both axes.
    #[default]
    Derived,
    /// The typeset expression: `4ρ²(ω − Ψ)A`, with `−α Σ` on the in-phase
    /// axis and `+α Σ` on the quadrature axis.
    AsPrinted,
}

/// `ġ(nT)` and `g̈(nT)` for `n = 0..=W`.
#[derive(Debug, Clone)]
struct LagTable {
    gd: Vec<f64>,
    gdd: Vec<f64>,
}

impl LagTable {
    fn new(pulses: &PulseBank, window: usize) -> Self {
        let t = pulses.period();
        let (gd, gdd) = (0..=window)
            .map(|n| {
                let (_, a, b) = pulses.g(n as f64 * t);
                (a, b)
            })
            .unzip();
        Self { gd, gdd }
    }

    /// `ġ((l − k)T)`; odd in the lag.
    fn gd(&self, lag: isize) -> f64 {
        let v = self.gd[lag.unsigned_abs()];
        if lag < 0 {
            -v
        } else {
            v
        }
    }

    fn gdd(&self, lag: isize) -> f64 {
        self.gdd[lag.unsigned_abs()]
    }
}

/// Per-symbol `Ψ`, `ω`, `α` of one axis, with `Ψ` shared between identical rows.
struct AxisColumn {
    psi: Vec<f64>,
    omega: Vec<f64>,
    alpha: Vec<f64>,
    max_order: usize,
}

fn axis_column(inputs: &CrlbInputs, axis: Axis) -> Result<AxisColumn> {
    let d = inputs.spec.half_distance();
    let rho = inputs.rho();
    let positions: Vec<usize> = inputs
        .spec
        .magnitude_positions(axis)
        .into_iter()
        .chain([inputs.spec.sign_position(axis)])
        .collect();
    let mut cache: HashMap<Vec<u64>, PsiValue> = HashMap::new();
    let k = inputs.num_symbols();
    let mut col = AxisColumn {
        psi: Vec::with_capacity(k),
        omega: Vec::with_capacity(k),
        alpha: Vec::with_capacity(k),
        max_order: 0,
    };
    for idx in 0..k {
        let co = inputs.coefficients(idx, axis);
        let key: Vec<u64> = positions.iter().map(|&j| inputs.frame.row(idx)[j].to_bits()).collect();
        let p = match cache.get(&key) {
            Some(p) => *p,
            None => {
                let p = psi_from(&co, d, rho)?;
                cache.insert(key, p);
                p
            }
        };
        col.max_order = col.max_order.max(p.order);
        col.psi.push(p.value);
        col.omega.push(co.omega);
        col.alpha.push(co.alpha);
    }
    Ok(col)
}

fn gamma_column(col: &AxisColumn, lags: &LagTable, window: usize, rho: f64, axis: Axis, form: GammaForm) -> Vec<f64> {
    let k_len = col.psi.len();
    let gdd0 = lags.gdd(0);
    (0..k_len)
        .map(|k| {
            let lo = k.saturating_sub(window);
            let hi = (k + window).min(k_len - 1);
            let mut var_sum = 0.0;
            let mut mean_sum = 0.0;
            let mut cross = 0.0;
            for l in lo..=hi {
                let lag = l as isize - k as isize;
                let gd = lags.gd(lag);
                var_sum += (col.omega[l] - col.alpha[l] * col.alpha[l]) * gd * gd;
                mean_sum += col.alpha[l] * gd;
                if l != k {
                    cross += col.alpha[l] * lags.gdd(lag);
                }
            }
            let a_k = var_sum + mean_sum * mean_sum;
            let (psi, omega, alpha) = (col.psi[k], col.omega[k], col.alpha[k]);
            match form {
                GammaForm::Derived => 4.0 * rho * rho * (psi - omega) * a_k - 2.0 * rho * (psi * gdd0 + alpha * cross),
                GammaForm::AsPrinted => {
                    let sign = match axis {
                        Axis::InPhase => -1.0,
                        Axis::Quadrature => 1.0,
                    };
                    4.0 * rho * rho * (omega - psi) * a_k - 2.0 * rho * (psi * gdd0 + sign * alpha * cross)
                }
            }
        })
        .collect()
}

/// Per-symbol `γ` values and the bound they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct CrlbReport {
    /// CA bound, normalized by `T²`.
    pub crlb_ca: f64,
    /// Fisher information of the CA model, in `1/T²` units.
    pub fisher_ca: f64,
    pub crlb_nda: Option<f64>,
    pub crlb_da: Option<f64>,
    /// `[γ_{k,I}, γ_{k,Q}]` per symbol.
    pub gamma: Vec<[f64; 2]>,
    /// Largest Gauss–Hermite order any `Ψ` needed.
    pub quadrature_order: usize,
}

/// Per-symbol `γ` for both axes.
pub fn gamma_table(inputs: &CrlbInputs, form: GammaForm) -> Result<(Vec<[f64; 2]>, usize)> {
    if inputs.num_symbols() == 0 {
        return Err(Error::InvalidParameter("empty LLR frame".into()));
    }
    let lags = LagTable::new(&inputs.pulses, inputs.lag_window);
    let rho = inputs.rho();
    let i_col = axis_column(inputs, Axis::InPhase)?;
    let q_col = axis_column(inputs, Axis::Quadrature)?;
    let gi = gamma_column(&i_col, &lags, inputs.lag_window, rho, Axis::InPhase, form);
    let gq = gamma_column(&q_col, &lags, inputs.lag_window, rho, Axis::Quadrature, form);
    Ok((
        gi.into_iter().zip(gq).map(|(a, b)| [a, b]).collect(),
        i_col.max_order.max(q_col.max_order),
    ))
}

/// `γ_{k,q}` for a single symbol and axis.
pub fn gamma_term(inputs: &CrlbInputs, k: usize, axis: Axis) -> Result<f64> {
    let (table, _) = gamma_table(inputs, GammaForm::Derived)?;
    Ok(table[k][match axis {
        Axis::InPhase => 0,
        Axis::Quadrature => 1,
    }])
}

/// Closed-form Fisher information under a chosen `γ` assembly.
pub fn closed_form_fisher(inputs: &CrlbInputs, form: GammaForm) -> Result<f64> {
    let (table, _) = gamma_table(inputs, form)?;
    Ok(table.iter().map(|g| g[0] + g[1]).sum())
}

fn normalized(fisher: f64, period: f64) -> Result<f64> {
    if !(fisher > 0.0) || !fisher.is_finite() {
        return Err(Error::NonPositiveFisher(fisher));
    }
    Ok(1.0 / (fisher * period * period))
}

/// The CA bound `1/Σ_k(γ_{k,I} + γ_{k,Q})`, normalized by `T²`.
pub fn ca_crlb(inputs: &CrlbInputs) -> Result<CrlbReport> {
    let (gamma, order) = gamma_table(inputs, GammaForm::Derived)?;
    let fisher: f64 = gamma.iter().map(|g| g[0] + g[1]).sum();
    Ok(CrlbReport {
        crlb_ca: normalized(fisher, inputs.pulses.period())?,
        fisher_ca: fisher,
        crlb_nda: None,
        crlb_da: None,
        gamma,
        quadrature_order: order,
    })
}

/// The bound with every a priori LLR at zero.
pub fn nda_crlb(inputs: &CrlbInputs) -> Result<f64> {
    let zero = CrlbInputs {
        frame: LlrFrame::zeros(inputs.num_symbols(), inputs.spec.bits_per_symbol()),
        ..inputs.clone()
    };
    Ok(ca_crlb(&zero)?.crlb_ca)
}

/// Known-symbol Fisher information `−2ρ Σ_k Σ_{|l−k|≤W} x_k x_l g̈((l−k)T)`
/// summed over both axes.
pub fn da_fisher(symbols: &[Complex64], es: f64, sigma2: f64, pulses: &PulseBank, lag_window: usize) -> f64 {
    let lags = LagTable::new(pulses, lag_window);
    let rho = es / (2.0 * sigma2);
    let k_len = symbols.len();
    let mut total = 0.0;
    for k in 0..k_len {
        let lo = k.saturating_sub(lag_window);
        let hi = (k + lag_window).min(k_len - 1);
        for l in lo..=hi {
            let g = lags.gdd(l as isize - k as isize);
            total += symbols[k].re * symbols[l].re * g + symbols[k].im * symbols[l].im * g;
        }
    }
    -2.0 * rho * total
}

/// The known-symbol bound, normalized by `T²`.
pub fn da_crlb(symbols: &[Complex64], inputs: &CrlbInputs) -> Result<f64> {
    if symbols.len() != inputs.num_symbols() {
        return Err(Error::LengthMismatch {
            what: "symbols",
            expected: inputs.num_symbols(),
            found: symbols.len(),
        });
    }
    let f = da_fisher(symbols, inputs.es, inputs.sigma2, &inputs.pulses, inputs.lag_window);
    normalized(f, inputs.pulses.period())
}

/// CA, NDA and (when symbols are given) DA bounds in one report.
pub fn crlb_report(inputs: &CrlbInputs, symbols: Option<&[Complex64]>) -> Result<CrlbReport> {
    let mut r = ca_crlb(inputs)?;
    r.crlb_nda = Some(nda_crlb(inputs)?);
    if let Some(s) = symbols {
        r.crlb_da = Some(da_crlb(s, inputs)?);
    }
    Ok(r)
}

/// Monte-Carlo estimate of `−E{d²L/dτ²}` at the true delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalFisher {
    pub mean: f64,
    /// Standard error of the mean; infinite for a single trial.
    pub std_error: f64,
    pub trials: usize,
}

impl EmpiricalFisher {
    pub fn has_finite_interval(&self) -> bool {
        self.std_error.is_finite()
    }
}

/// Draws a symbol index from its a priori distribution.
pub fn draw_symbol<R: Rng + ?Sized>(frame: &LlrFrame, k: usize, spec: &Constellation, rng: &mut R) -> usize {
    let apps = symbol_apps(frame, k, spec);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (m, p) in apps.iter().enumerate() {
        acc += p;
        if u < acc {
            return m;
        }
    }
    apps.len() - 1
}

/// Per trial: symbols from the a priori law, a uniform delay in `[0, T)`,
/// synthesis, noise, and the analytic second derivative at the true delay.
pub fn empirical_fisher(inputs: &CrlbInputs, trials: usize, seed: u64) -> Result<EmpiricalFisher> {
    if trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is needed".into()));
    }
    let ctx = LikelihoodContext::new(&inputs.frame, &inputs.spec, inputs.es, inputs.sigma2)?;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[t as u64]));
            let symbols: Vec<Complex64> = (0..inputs.num_symbols())
                .map(|k| inputs.spec.point(draw_symbol(&inputs.frame, k, &inputs.spec, &mut rng)))
                .collect();
            let tau = rng.random::<f64>() * inputs.pulses.period();
            let mut sig = synthesize(&symbols, tau, &inputs.pulses, inputs.es)?;
            add_awgn_in_place(&mut sig, inputs.sigma2, &mut rng)?;
            let mo = matched_filter(&sig, tau, &inputs.pulses)?;
            Ok(-ca_llf_grad_hess(&ctx, &mo)?.hessian)
        })
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let std_error = if trials > 1 {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(EmpiricalFisher {
        mean,
        std_error,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::build_constellation;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_frame(rng: &mut ChaCha8Rng, k: usize, bps: usize, scale: f64) -> LlrFrame {
        LlrFrame::new(bps, (0..k * bps).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    /// Dense trapezoid of the Ψ integrand in the `t` variable on [−40, 40].
    fn psi_trapezoid(co: &AxisCoefficients, d: f64, rho: f64) -> f64 {
        let n = co.log_theta.len();
        let f = |t: f64| -> f64 {
            let (mut lam, mut del) = (0.0, 0.0);
            for i in 0..n {
                let m = (2 * i + 1) as f64;
                let w = co.log_theta[i].exp() * (-rho * m * m * d * d).exp();
                let z = rho.sqrt() * m * d * t + co.sign_llr / 2.0;
                lam += m * w * z.sinh();
                del += w * z.cosh();
            }
            lam * lam / del * (-t * t / 4.0).exp()
        };
        let steps = 400_000;
        let h = 80.0 / steps as f64;
        let mut s = 0.5 * (f(-40.0) + f(40.0));
        for j in 1..steps {
            s += f(-40.0 + j as f64 * h);
        }
        co.beta * d * d / std::f64::consts::PI.sqrt() * s * h
    }

    #[test]
    fn psi_matches_trapezoid() {
        let c = build_constellation(1).unwrap();
        let zero = axis_coefficients(&[0.0, 0.0], &c, Axis::InPhase, BetaConvention::AllAxisBits);
        for &rho in &[0.3, 1.0, 3.0] {
            let got = psi_from(&zero, c.half_distance(), rho).unwrap().value;
            let want = psi_trapezoid(&zero, c.half_distance(), rho);
            assert!((got - want).abs() < 1e-8, "rho={rho} {got} {want}");
        }
        let c2 = build_constellation(2).unwrap();
        let co = axis_coefficients(&[0.3, -1.2, 0.8, 2.1], &c2, Axis::InPhase, BetaConvention::AllAxisBits);
        let got = psi_from(&co, c2.half_distance(), 2.0).unwrap().value;
        assert!((got - psi_trapezoid(&co, c2.half_distance(), 2.0)).abs() < 1e-8);
    }

    #[test]
    fn psi_vanishes_at_low_snr() {
        let c = build_constellation(1).unwrap();
        let zero = axis_coefficients(&[0.0, 0.0], &c, Axis::InPhase, BetaConvention::AllAxisBits);
        let v = psi_from(&zero, c.half_distance(), 1e-6).unwrap().value;
        assert!(v < 1e-5);
        assert!(psi_from(&zero, c.half_distance(), 0.0).is_err());
    }

    #[test]
    fn psi_is_bounded_by_omega() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for p in 1..=2 {
            let c = build_constellation(p).unwrap();
            for _ in 0..500 {
                let row: Vec<f64> = (0..2 * p).map(|_| rng.random_range(-20.0..20.0)).collect();
                let rho = 10f64.powf(rng.random_range(-1.0..2.0));
                let co = axis_coefficients(&row, &c, Axis::InPhase, BetaConvention::AllAxisBits);
                let v = psi_from(&co, c.half_distance(), rho).unwrap().value;
                assert!(v >= 0.0 && v <= co.omega * (1.0 + 1e-9), "{v} {}", co.omega);
            }
        }
    }

    #[test]
    fn equiprobable_gamma_has_no_cross_terms() {
        let c = build_constellation(1).unwrap();
        let p = PulseBank::standard(0.2).unwrap();
        let inputs = CrlbInputs::at_snr(LlrFrame::zeros(200, 2), &c, 5.0, &p).unwrap();
        let (table, _) = gamma_table(&inputs, GammaForm::Derived).unwrap();
        let rho = inputs.rho();
        let ps = psi(&inputs, 100, Axis::InPhase).unwrap().value;
        let omega = 0.5;
        let sum_gd2: f64 = (-32isize..=32).map(|n| p.g(n as f64).1.powi(2)).sum();
        let want = 4.0 * rho * rho * (ps - omega) * omega * sum_gd2 - 2.0 * rho * ps * p.g(0.0).2;
        assert!((table[100][0] - want).abs() < 1e-9 * want.abs());
        // translation invariance away from the frame edges
        for k in 40..160 {
            assert!((table[k][0] - table[100][0]).abs() < 1e-9 * want.abs());
            assert!((table[k][1] - table[100][1]).abs() < 1e-9 * want.abs());
        }
    }

    #[test]
    fn nda_reduction_is_exact() {
        let c = build_constellation(2).unwrap();
        let p = PulseBank::standard(0.2).unwrap();
        let inputs = CrlbInputs::at_snr(LlrFrame::zeros(100, 4), &c, 8.0, &p).unwrap();
        assert_eq!(ca_crlb(&inputs).unwrap().crlb_ca, nda_crlb(&inputs).unwrap());
    }

    #[test]
    fn hard_priors_approach_da() {
        let c = build_constellation(1).unwrap();
        let p = PulseBank::standard(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bits: Vec<u8> = (0..2 * 150).map(|_| rng.random_range(0..2)).collect();
        let symbols = c.modulate(&bits).unwrap();
        let frame = LlrFrame::from_hard_bits(&bits, 2).unwrap();
        let inputs = CrlbInputs::at_snr(frame, &c, 6.0, &p).unwrap();
        let ca = ca_crlb(&inputs).unwrap().crlb_ca;
        let da = da_crlb(&symbols, &inputs).unwrap();
        assert!(((ca - da) / da).abs() < 0.01, "{ca} {da}");
    }

    #[test]
    fn crlb_scales_with_frame_length() {
        let c = build_constellation(1).unwrap();
        let p = PulseBank::standard(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let small = random_frame(&mut rng, 200, 2, 4.0);
        let mut doubled = small.values().to_vec();
        doubled.extend_from_slice(small.values());
        let doubled = LlrFrame::new(2, doubled).unwrap();
        let a = ca_crlb(&CrlbInputs::at_snr(small, &c, 3.0, &p).unwrap())
            .unwrap()
            .crlb_ca;
        let b = ca_crlb(&CrlbInputs::at_snr(doubled, &c, 3.0, &p).unwrap())
            .unwrap()
            .crlb_ca;
        assert!((a / b / 2.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn crlb_decreases_with_snr() {
        let c = build_constellation(1).unwrap();
        let p = PulseBank::standard(0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let frame = random_frame(&mut rng, 100, 2, 3.0);
        let mut last = f64::INFINITY;
        for snr in (-4..=10).map(f64::from) {
            let v = ca_crlb(&CrlbInputs::at_snr(frame.clone(), &c, snr, &p).unwrap())
                .unwrap()
                .crlb_ca;
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn single_trial_flags_infinite_interval() {
        let c = build_constellation(1).unwrap();
        let p = PulseBank::new(0.2, 1.0, 8, 4).unwrap();
        let inputs = CrlbInputs::at_snr(LlrFrame::zeros(20, 2), &c, 5.0, &p).unwrap();
        let e = empirical_fisher(&inputs, 1, 3).unwrap();
        assert!(!e.has_finite_interval());
        assert_eq!(empirical_fisher(&inputs, 1, 3).unwrap(), e);
    }

    #[test]
    fn closed_form_agrees_with_empirical_fisher() {
        // Small frame, modest trial count: a coarse version of the acceptance run.
        let c = build_constellation(1).unwrap();
        let p = PulseBank::new(0.2, 1.0, 16, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frame = random_frame(&mut rng, 64, 2, 4.0);
        let inputs = CrlbInputs::at_snr(frame, &c, 3.0, &p).unwrap();
        let closed = closed_form_fisher(&inputs, GammaForm::Derived).unwrap();
        let printed = closed_form_fisher(&inputs, GammaForm::AsPrinted).unwrap();
        let emp = empirical_fisher(&inputs, 2000, 11).unwrap();
        assert!(
            (emp.mean - closed).abs() < 4.0 * emp.std_error,
            "{closed} {} ± {}",
            emp.mean,
            emp.std_error
        );
        assert!((emp.mean - printed).abs() > 4.0 * emp.std_error);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn fisher_is_positive(seed in any::<u64>(), snr in -4.0f64..15.0) {
            let c = build_constellation(2).unwrap();
            let p = PulseBank::standard(0.2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let frame = random_frame(&mut rng, 40, 4, 12.0);
            let f = closed_form_fisher(&CrlbInputs::at_snr(frame, &c, snr, &p).unwrap(), GammaForm::Derived).unwrap();
            prop_assert!(f > 0.0);
        }
    }
}
