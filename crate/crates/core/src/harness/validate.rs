use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::output::render_csv;
use super::run::run_nmse;
use crate::constellation::{
    axis_coefficients, build_constellation, normalization_lhs, symbol_apps, Axis, BetaConvention, LlrFrame,
};
use crate::crlb::{ca_crlb, closed_form_fisher, empirical_fisher, nda_crlb, psi_from, CrlbInputs, GammaForm};
use crate::error::Result;
use crate::estimator::{nda_estimate, SyncConfig};
use crate::likelihood::{ca_llf, ca_llf_grad_hess, nda_llf, LikelihoodContext};
use crate::numeric::{derive_seed, max_star, wrapped_error};
use crate::quadrature::GaussLegendre;
use crate::turbo_codec::{bcjr_siso, CodeRate, Trellis, TurboConfig};
use crate::waveform::{add_awgn, matched_filter, synthesize, PulseBank};

/// One line of the validation table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, measured: f64, tolerance: f64) -> Self {
        Self {
            name,
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<36} {:>12} {:>12}  result", "check", "measured", "tolerance");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<36} {:>12.3e} {:>12.1e}  {}",
                c.name,
                c.measured,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        let ok = self.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(
            s,
            "overall: {} ({ok}/{})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.len()
        );
        s
    }
}

/// The invariant battery with the correct coefficient convention.
pub fn run_validate(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    run_validate_with(cfg, BetaConvention::AllAxisBits)
}

/// The invariant battery with a chosen `β` convention for the coefficient
/// checks, so that a wrong convention can be shown to fail.
pub fn run_validate_with(cfg: &ExperimentConfig, beta: BetaConvention) -> Result<ValidationReport> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0x7a11]));
    let (norm, moments) = coefficient_checks(&mut rng, beta);
    let density = density_normalization(&mut rng)?;
    let psi = psi_bounds(&mut rng)?;
    let (grad, hess) = derivative_checks(&mut rng, cfg.modulation)?;
    let checks = vec![
        norm,
        moments,
        density,
        psi,
        grad,
        hess,
        nda_reduction(&mut rng)?,
        bcjr_enumeration(&mut rng)?,
        noiseless_consistency(&mut rng)?,
        fisher_agreement(&mut rng)?,
        determinism(cfg)?,
    ];
    Ok(ValidationReport { checks })
}

fn random_row(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Largest deviation from the normalization identity and from the brute-force
/// first and second axis moments.
fn coefficient_checks(rng: &mut ChaCha8Rng, beta: BetaConvention) -> (Check, Check) {
    let mut norm: f64 = 0.0;
    let mut moments: f64 = 0.0;
    for i in 0..1000 {
        let p = 1 + i % 3;
        let c = build_constellation(p).expect("p in 1..=3");
        let row = random_row(rng, 2 * p, 12.0);
        let frame = LlrFrame::new(2 * p, row.clone()).expect("one row");
        let apps = symbol_apps(&frame, 0, &c);
        for axis in Axis::BOTH {
            let co = axis_coefficients(&row, &c, axis, beta);
            norm = norm.max((normalization_lhs(&co) - 1.0).abs());
            let pick = |z: Complex64| match axis {
                Axis::InPhase => z.re,
                Axis::Quadrature => z.im,
            };
            let (m1, m2) = apps.iter().enumerate().fold((0.0, 0.0), |(a, b), (m, &w)| {
                let x = pick(c.point(m));
                (a + w * x, b + w * x * x)
            });
            moments = moments.max((m1 - co.alpha).abs()).max((m2 - co.omega).abs());
        }
    }
    (
        Check::at_most("normalization identity", norm, 1e-12),
        Check::at_most("axis moments vs enumeration", moments, 1e-12),
    )
}

fn density_normalization(rng: &mut ChaCha8Rng) -> Result<Check> {
    let c = build_constellation(2)?;
    let gl = GaussLegendre::new(40);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let frame = LlrFrame::new(4, random_row(rng, 4, 8.0))?;
        let s2 = rng.random_range(0.02..1.0);
        let ctx = LikelihoodContext::new(&frame, &c, 1.0, s2)?;
        for axis in Axis::BOTH {
            let reach = 3.0 * c.half_distance() + 14.0 * f64::sqrt(s2);
            let pieces = 200;
            let w = 2.0 * reach / pieces as f64;
            let total: f64 = (0..pieces)
                .map(|j| {
                    let a = -reach + j as f64 * w;
                    gl.integrate(a, a + w, |u| ctx.log_density(0, axis, u).exp())
                })
                .sum();
            worst = worst.max((total - 1.0).abs());
        }
    }
    Ok(Check::at_most("sample density normalization", worst, 1e-8))
}

fn psi_bounds(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let p = 1 + i % 2;
        let c = build_constellation(p)?;
        let co = axis_coefficients(
            &random_row(rng, 2 * p, 20.0),
            &c,
            Axis::InPhase,
            BetaConvention::AllAxisBits,
        );
        let rho = 10f64.powf(rng.random_range(-1.0..2.0));
        let v = psi_from(&co, c.half_distance(), rho)?.value;
        worst = worst.max(-v / co.omega).max(v / co.omega - 1.0);
    }
    Ok(Check::at_most("0 <= psi <= omega (violation)", worst.max(0.0), 1e-9))
}

/// Largest relative gap between the analytic gradient/Hessian and central
/// differences.
fn derivative_checks(rng: &mut ChaCha8Rng, p: usize) -> Result<(Check, Check)> {
    let c = build_constellation(p)?;
    let pulses = PulseBank::new(0.2, 1.0, 16, 8)?;
    let k = 60;
    let bps = c.bits_per_symbol();
    let syms: Vec<Complex64> = (0..k).map(|_| c.point(rng.random_range(0..c.order()))).collect();
    let s = add_awgn(&synthesize(&syms, 0.4, &pulses, 1.0)?, 0.05, rng.random())?;
    let frame = LlrFrame::new(bps, random_row(rng, k * bps, 3.0))?;
    let ctx = LikelihoodContext::new(&frame, &c, 1.0, 0.05)?;
    let eval = |t: f64| -> Result<_> { ca_llf_grad_hess(&ctx, &matched_filter(&s, t, &pulses)?) };
    let (mut g_err, mut h_err): (f64, f64) = (0.0, 0.0);
    for &t in &[0.3, 0.45, 0.52] {
        let d = eval(t)?;
        let fd1 = (eval(t + 1e-6)?.value - eval(t - 1e-6)?.value) / 2e-6;
        let fd2 = (eval(t + 1e-5)?.gradient - eval(t - 1e-5)?.gradient) / 2e-5;
        g_err = g_err.max(((d.gradient - fd1) / d.gradient).abs());
        h_err = h_err.max(((d.hessian - fd2) / d.hessian).abs());
    }
    Ok((
        Check::at_most("gradient vs central difference", g_err, 1e-4),
        Check::at_most("hessian vs central difference", h_err, 1e-3),
    ))
}

fn nda_reduction(rng: &mut ChaCha8Rng) -> Result<Check> {
    let c = build_constellation(2)?;
    let pulses = PulseBank::new(0.2, 1.0, 12, 4)?;
    let syms: Vec<Complex64> = (0..40).map(|_| c.point(rng.random_range(0..16))).collect();
    let s = add_awgn(&synthesize(&syms, 0.3, &pulses, 1.0)?, 0.1, rng.random())?;
    let mo = matched_filter(&s, 0.25, &pulses)?;
    let zero = LlrFrame::zeros(40, 4);
    let llf_gap = (ca_llf(&LikelihoodContext::new(&zero, &c, 1.0, 0.1)?, &mo)? - nda_llf(&c, 1.0, 0.1, &mo)?).abs();
    let inputs = CrlbInputs::new(zero, &c, 1.0, 0.1, &pulses)?;
    let crlb_gap = (ca_crlb(&inputs)?.crlb_ca - nda_crlb(&inputs)?).abs();
    Ok(Check::at_most("zero-prior CA equals NDA", llf_gap.max(crlb_gap), 1e-12))
}

fn bcjr_enumeration(rng: &mut ChaCha8Rng) -> Result<Check> {
    let tc = TurboConfig::for_frame(CodeRate::Third, 60, 1)?;
    let t = Trellis::new(tc.feedback_poly, tc.feedforward_poly)?;
    let n = 9;
    let memory = 3;
    let len = n + memory;
    let sys = random_row(rng, len, 4.0);
    let par = random_row(rng, len, 4.0);
    let mut apr = random_row(rng, n, 2.0);
    apr.extend([0.0; 3]);
    let o = bcjr_siso(&sys, &apr, &par, &t, true)?;
    let mut num = vec![f64::NEG_INFINITY; len];
    let mut den = vec![f64::NEG_INFINITY; len];
    for word in 0..1u32 << n {
        let bits: Vec<u8> = (0..n).map(|i| ((word >> i) & 1) as u8).collect();
        let (mut c, end) = t.encode(&bits);
        let mut x = bits;
        for (a, b) in t.terminate(end) {
            x.push(a);
            c.push(b);
        }
        let m: f64 = (0..len)
            .map(|i| x[i] as f64 * (sys[i] + apr[i]) + c[i] as f64 * par[i])
            .sum();
        for i in 0..len {
            let slot = if x[i] == 1 { &mut num } else { &mut den };
            slot[i] = max_star(slot[i], m);
        }
    }
    let worst = (0..len)
        .map(|i| (o.app_info[i] - (num[i] - den[i])).abs())
        .fold(0.0, f64::max);
    Ok(Check::at_most("BCJR vs enumeration", worst, 1e-9))
}

fn noiseless_consistency(rng: &mut ChaCha8Rng) -> Result<Check> {
    let c = build_constellation(1)?;
    let pulses = PulseBank::standard(0.2)?;
    let syms: Vec<Complex64> = (0..200).map(|_| c.point(rng.random_range(0..4))).collect();
    let s = synthesize(&syms, 0.3, &pulses, 1.0)?;
    let est = nda_estimate(&s, &c, &pulses, &SyncConfig::new(1.0, 0.05))?;
    Ok(Check::at_most(
        "noiseless NDA delay error / T",
        wrapped_error(est.tau_hat, 0.3, 1.0).abs(),
        1e-4,
    ))
}

/// Distance between closed-form and Monte-Carlo Fisher information, in
/// standard errors of the latter.
fn fisher_agreement(rng: &mut ChaCha8Rng) -> Result<Check> {
    let c = build_constellation(1)?;
    let pulses = PulseBank::new(0.2, 1.0, 16, 8)?;
    let frame = LlrFrame::new(2, random_row(rng, 128, 4.0))?;
    let inputs = CrlbInputs::at_snr(frame, &c, 3.0, &pulses)?;
    let closed = closed_form_fisher(&inputs, GammaForm::Derived)?;
    let emp = empirical_fisher(&inputs, 2000, rng.random())?;
    Ok(Check::at_most(
        "closed vs empirical Fisher (std errs)",
        (closed - emp.mean).abs() / emp.std_error,
        4.0,
    ))
}

fn determinism(cfg: &ExperimentConfig) -> Result<Check> {
    let mut tiny = cfg.clone();
    tiny.modulation = 1;
    tiny.symbols = 60;
    tiny.trials = 3;
    tiny.snr_db = vec![4.0];
    tiny.turbo_iterations = 2;
    tiny.span = 8;
    tiny.oversampling = 4;
    tiny.crlb_frames = 1;
    tiny.workers = 1;
    let a = render_csv(&run_nmse(&tiny)?);
    tiny.workers = 2;
    let b = render_csv(&run_nmse(&tiny)?);
    Ok(Check::at_most(
        "repeat runs differ (1 vs 2 workers)",
        (a != b) as u8 as f64,
        0.0,
    ))
}
