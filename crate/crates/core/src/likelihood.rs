//! The code-aided log-likelihood of the delay and its first two derivatives.
//!
//! Per symbol and axis the likelihood factor is
//! `F(x) = Σ_i θ(i) e^{−ρ(2i−1)²d²} cosh(b_i x + L_q/2)` with
//! `b_i = √Es(2i−1)d/σ²`; everything is evaluated in the log domain.

use num_complex::Complex64;

use crate::constellation::{axis_coefficients, Axis, BetaConvention, Constellation, LlrFrame};
use crate::error::{Error, Result};
use crate::numeric::log_cosh;
use crate::waveform::MatchedOutputs;

#[derive(Debug, Clone)]
struct AxisTable {
    log_weight: Vec<f64>,
    slope: Vec<f64>,
    half_llr: f64,
    log_beta: f64,
}

/// Per-frame precomputation of everything the LLF needs.
#[derive(Debug, Clone)]
pub struct LikelihoodContext {
    spec: Constellation,
    es: f64,
    sigma2: f64,
    rho: f64,
    /// `[in-phase, quadrature]` per symbol.
    tables: Vec<[AxisTable; 2]>,
}

fn axis_slot(axis: Axis) -> usize {
    match axis {
        Axis::InPhase => 0,
        Axis::Quadrature => 1,
    }
}

impl LikelihoodContext {
    pub fn new(frame: &LlrFrame, spec: &Constellation, es: f64, sigma2: f64) -> Result<Self> {
        if !(es > 0.0 && sigma2 > 0.0 && es.is_finite() && sigma2.is_finite()) {
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
        let rho = es / (2.0 * sigma2);
        let d = spec.half_distance();
        let amps: Vec<f64> = (1..=spec.half_levels()).map(|i| (2 * i - 1) as f64 * d).collect();
        let slope: Vec<f64> = amps.iter().map(|a| es.sqrt() * a / sigma2).collect();
        let build = |row: &[f64], axis: Axis| {
            let c = axis_coefficients(row, spec, axis, BetaConvention::AllAxisBits);
            AxisTable {
                log_weight: c.log_theta.iter().zip(&amps).map(|(lt, a)| lt - rho * a * a).collect(),
                slope: slope.clone(),
                half_llr: c.sign_llr / 2.0,
                log_beta: c.beta.ln(),
            }
        };
        let tables = (0..frame.num_symbols())
            .map(|k| {
                let row = frame.row(k);
                [build(row, Axis::InPhase), build(row, Axis::Quadrature)]
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            es,
            sigma2,
            rho,
            tables,
        })
    }

    /// The equiprobable context.
    pub fn nda(spec: &Constellation, num_symbols: usize, es: f64, sigma2: f64) -> Result<Self> {
        Self::new(&LlrFrame::zeros(num_symbols, spec.bits_per_symbol()), spec, es, sigma2)
    }

    pub fn num_symbols(&self) -> usize {
        self.tables.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn es(&self) -> f64 {
        self.es
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn spec(&self) -> &Constellation {
        &self.spec
    }

    /// `(ln F, (ln F)′, (ln F)″)` at `x`.
    pub fn eval(&self, k: usize, axis: Axis, x: f64) -> (f64, f64, f64) {
        let t = &self.tables[k][axis_slot(axis)];
        let n = t.log_weight.len();
        if n == 1 {
            let b = t.slope[0];
            let z = b * x + t.half_llr;
            let th = z.tanh();
            return (t.log_weight[0] + log_cosh(z), b * th, b * b * (1.0 - th * th));
        }
        let mut terms = [0.0f64; 8];
        let mut tanhs = [0.0f64; 8];
        let mut m = f64::NEG_INFINITY;
        for i in 0..n {
            let z = t.slope[i] * x + t.half_llr;
            terms[i] = t.log_weight[i] + log_cosh(z);
            tanhs[i] = z.tanh();
            m = m.max(terms[i]);
        }
        let (mut s, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let w = (terms[i] - m).exp();
            let b = t.slope[i];
            s += w;
            s1 += w * b * tanhs[i];
            s2 += w * b * b;
        }
        let d1 = s1 / s;
        (m + s.ln(), d1, s2 / s - d1 * d1)
    }

    pub fn log_f(&self, k: usize, axis: Axis, x: f64) -> f64 {
        self.eval(k, axis, x).0
    }

    pub fn log_f_d1(&self, k: usize, axis: Axis, x: f64) -> f64 {
        self.eval(k, axis, x).1
    }

    pub fn log_f_d2(&self, k: usize, axis: Axis, x: f64) -> f64 {
        self.eval(k, axis, x).2
    }

    /// Log of the marginal density of the matched-filter output on one axis,
    /// `ln[2β/√(2πσ²)·F(x)·e^{−x²/2σ²}]`.
    pub fn log_density(&self, k: usize, axis: Axis, x: f64) -> f64 {
        let t = &self.tables[k][axis_slot(axis)];
        std::f64::consts::LN_2 + t.log_beta - 0.5 * (2.0 * std::f64::consts::PI * self.sigma2).ln()
            + self.log_f(k, axis, x)
            - x * x / (2.0 * self.sigma2)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.num_symbols() {
            return Err(Error::LengthMismatch {
                what: "matched outputs",
                expected: self.num_symbols(),
                found: n,
            });
        }
        Ok(())
    }
}

/// `Σ_k ln F_{k,I}(u_k) + ln F_{k,Q}(v_k)` on symbol-rate samples.
pub fn llf_values(ctx: &LikelihoodContext, y: &[Complex64]) -> Result<f64> {
    ctx.check_len(y.len())?;
    Ok(y.iter()
        .enumerate()
        .map(|(k, s)| ctx.log_f(k, Axis::InPhase, s.re) + ctx.log_f(k, Axis::Quadrature, s.im))
        .sum())
}

/// The CA log-likelihood at the delay the outputs were computed at.
pub fn ca_llf(ctx: &LikelihoodContext, mo: &MatchedOutputs) -> Result<f64> {
    llf_values(ctx, &mo.y)
}

/// The NDA log-likelihood: the CA one with all a priori LLRs at zero.
pub fn nda_llf(spec: &Constellation, es: f64, sigma2: f64, mo: &MatchedOutputs) -> Result<f64> {
    ca_llf(&LikelihoodContext::nda(spec, mo.len(), es, sigma2)?, mo)
}

/// LLF value and its first two delay derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlfDerivatives {
    pub value: f64,
    pub gradient: f64,
    pub hessian: f64,
}

/// `L`, `dL/dτ` and `d²L/dτ²` by the chain rule through the derivative
/// matched filters.
pub fn ca_llf_grad_hess(ctx: &LikelihoodContext, mo: &MatchedOutputs) -> Result<LlfDerivatives> {
    ctx.check_len(mo.len())?;
    if mo.du.len() != mo.len() || mo.ddu.len() != mo.len() {
        return Err(Error::InvalidParameter(
            "matched outputs lack derivative filters".into(),
        ));
    }
    let mut out = LlfDerivatives {
        value: 0.0,
        gradient: 0.0,
        hessian: 0.0,
    };
    for k in 0..mo.len() {
        for (axis, x, dx, ddx) in [
            (Axis::InPhase, mo.y[k].re, mo.du[k], mo.ddu[k]),
            (Axis::Quadrature, mo.y[k].im, mo.dv[k], mo.ddv[k]),
        ] {
            let (f, f1, f2) = ctx.eval(k, axis, x);
            out.value += f;
            out.gradient += dx * f1;
            out.hessian += dx * dx * f2 + ddx * f1;
        }
    }
    Ok(out)
}
