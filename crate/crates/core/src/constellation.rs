//! Gray-coded square QAM, bit priors parametrized by LLRs, and the per-axis
//! coefficient algebra the likelihood and the bounds are built from.
//!
//! Bit positions are 0-based here: position `j` is the paper-style bit
//! `l = j + 1`. The in-phase axis owns the odd positions `1, 3, …, 2p-1`
//! (the last one being the sign of `Re{c}`), the quadrature axis the even
//! positions `0, 2, …, 2p-2` (the last one the sign of `Im{c}`). Within an
//! axis the `p - 1` magnitude bits are a reflected Gray code of the
//! amplitude index, mirrored about the origin, so every label pair at
//! minimum distance differs in exactly one bit.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{clamp_llr, ln_two_cosh, log_sigmoid, log_sum_exp, LLR_MAX};

/// One of the two constellation axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Real part; carried by the bit `q = 2p`.
    InPhase,
    /// Imaginary part; carried by the bit `q = 2p - 1`.
    Quadrature,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::InPhase, Axis::Quadrature];
}

/// A point of the top-right quadrant, `c = (2i-1)d + j(2n-1)d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadrantPoint {
    pub index: usize,
    pub i: usize,
    pub n: usize,
}

/// Unit-energy Gray-coded `2^{2p}`-QAM.
#[derive(Debug, Clone)]
pub struct Constellation {
    p: usize,
    d: f64,
    points: Vec<Complex64>,
    labels: Vec<u8>,
    quadrant: Vec<QuadrantPoint>,
}

/// Reflected Gray label of amplitude index `i` (1-based) over `bits` bits, MSB first.
fn magnitude_gray(i: usize, bits: usize) -> Vec<u8> {
    let g = (i - 1) ^ ((i - 1) >> 1);
    (0..bits).map(|t| ((g >> (bits - 1 - t)) & 1) as u8).collect()
}

/// Builds the constellation for `1 <= p <= 4` (QPSK through 256-QAM).
pub fn build_constellation(p: usize) -> Result<Constellation> {
    if !(1..=4).contains(&p) {
        return Err(Error::InvalidParameter(format!("p must be in 1..=4, got {p}")));
    }
    let levels = 1usize << p;
    let half = levels / 2;
    let m = levels * levels;
    let d = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();

    // per level s: (signed amplitude factor, sign bit, magnitude index)
    let axis_level = |s: usize| -> (f64, u8, usize) {
        let factor = 2.0 * s as f64 - (levels as f64 - 1.0);
        let positive = s >= half;
        let mag = if positive { s - half + 1 } else { half - s };
        (factor, positive as u8, mag)
    };

    let mut points = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    let mut quadrant = Vec::new();
    for si in 0..levels {
        for sq in 0..levels {
            let (fi, sign_i, mag_i) = axis_level(si);
            let (fq, sign_q, mag_q) = axis_level(sq);
            let mut label = 0u8;
            for (t, b) in magnitude_gray(mag_i, p - 1).into_iter().enumerate() {
                label |= b << (2 * t + 1);
            }
            for (t, b) in magnitude_gray(mag_q, p - 1).into_iter().enumerate() {
                label |= b << (2 * t);
            }
            label |= sign_i << (2 * p - 1);
            label |= sign_q << (2 * p - 2);
            let index = points.len();
            if sign_i == 1 && sign_q == 1 {
                quadrant.push(QuadrantPoint {
                    index,
                    i: mag_i,
                    n: mag_q,
                });
            }
            points.push(Complex64::new(fi * d, fq * d));
            labels.push(label);
        }
    }
    Ok(Constellation {
        p,
        d,
        points,
        labels,
        quadrant,
    })
}

impl Constellation {
    /// Half the number of bits per symbol.
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.p
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    /// Half the minimum inter-symbol distance.
    pub fn half_distance(&self) -> f64 {
        self.d
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, m: usize) -> Complex64 {
        self.points[m]
    }

    /// Label bit at position `j` of point `m`.
    pub fn label_bit(&self, m: usize, j: usize) -> u8 {
        (self.labels[m] >> j) & 1
    }

    pub fn label(&self, m: usize) -> u8 {
        self.labels[m]
    }

    pub fn quadrant(&self) -> &[QuadrantPoint] {
        &self.quadrant
    }

    /// Number of amplitude levels on one half-axis, `2^{p-1}`.
    pub fn half_levels(&self) -> usize {
        1 << (self.p - 1)
    }

    /// Bit position of the sign bit of an axis.
    pub fn sign_position(&self, axis: Axis) -> usize {
        match axis {
            Axis::InPhase => 2 * self.p - 1,
            Axis::Quadrature => 2 * self.p - 2,
        }
    }

    /// Bit positions of the `p - 1` magnitude bits of an axis, MSB first.
    pub fn magnitude_positions(&self, axis: Axis) -> Vec<usize> {
        let offset = match axis {
            Axis::InPhase => 1,
            Axis::Quadrature => 0,
        };
        (0..self.p - 1).map(|t| 2 * t + offset).collect()
    }

    /// Magnitude bits of amplitude index `i` (1-based), aligned with
    /// [`Constellation::magnitude_positions`].
    pub fn magnitude_bits(&self, i: usize) -> Vec<u8> {
        magnitude_gray(i, self.p - 1)
    }

    /// Maps `2p` bits (position `j` at index `j`) to a point index.
    pub fn map_bits(&self, bits: &[u8]) -> usize {
        debug_assert_eq!(bits.len(), self.bits_per_symbol());
        let label = bits.iter().enumerate().fold(0u8, |acc, (j, &b)| acc | ((b & 1) << j));
        self.labels
            .iter()
            .position(|&l| l == label)
            .expect("every label is present in a square constellation")
    }

    /// Maps a bit stream onto symbols, `2p` bits per symbol.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        let bps = self.bits_per_symbol();
        if !bits.len().is_multiple_of(bps) {
            return Err(Error::LengthMismatch {
                what: "bit stream",
                expected: bits.len().div_ceil(bps) * bps,
                found: bits.len(),
            });
        }
        let mut lookup = vec![0usize; self.order()];
        for (m, &l) in self.labels.iter().enumerate() {
            lookup[l as usize] = m;
        }
        Ok(bits
            .chunks(bps)
            .map(|chunk| {
                let label = chunk
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (j, &b)| acc | (((b & 1) as usize) << j));
                self.points[lookup[label]]
            })
            .collect())
    }
}

/// Per-symbol, per-bit a priori LLRs, `ln P[b=1]/P[b=0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    bits_per_symbol: usize,
    values: Vec<f64>,
}

impl LlrFrame {
    /// Builds a frame from row-major values; entries are clamped to `±LLR_MAX`.
    pub fn new(bits_per_symbol: usize, values: Vec<f64>) -> Result<Self> {
        if bits_per_symbol == 0 || !values.len().is_multiple_of(bits_per_symbol) {
            return Err(Error::LengthMismatch {
                what: "LLR frame",
                expected: values.len().div_ceil(bits_per_symbol.max(1)) * bits_per_symbol,
                found: values.len(),
            });
        }
        Ok(Self {
            bits_per_symbol,
            values: values.into_iter().map(clamp_llr).collect(),
        })
    }

    /// The equiprobable (non-data-aided) frame.
    pub fn zeros(num_symbols: usize, bits_per_symbol: usize) -> Self {
        Self {
            bits_per_symbol,
            values: vec![0.0; num_symbols * bits_per_symbol],
        }
    }

    /// Hard priors (`±LLR_MAX`) matching a known bit stream.
    pub fn from_hard_bits(bits: &[u8], bits_per_symbol: usize) -> Result<Self> {
        Self::new(
            bits_per_symbol,
            bits.iter()
                .map(|&b| if b & 1 == 1 { LLR_MAX } else { -LLR_MAX })
                .collect(),
        )
    }

    pub fn num_symbols(&self) -> usize {
        self.values.len() / self.bits_per_symbol
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.bits_per_symbol..(k + 1) * self.bits_per_symbol]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// `P[b = bit]` for a bit with LLR `l`.
pub fn bit_prior(l: f64, bit: u8) -> f64 {
    log_bit_prior(clamp_llr(l), bit).exp()
}

#[inline]
fn log_bit_prior(l: f64, bit: u8) -> f64 {
    if bit & 1 == 1 {
        log_sigmoid(l)
    } else {
        log_sigmoid(-l)
    }
}

/// A priori probabilities of every constellation point for symbol `k`.
pub fn symbol_apps(frame: &LlrFrame, k: usize, spec: &Constellation) -> Vec<f64> {
    log_symbol_apps(frame.row(k), spec).into_iter().map(f64::exp).collect()
}

fn log_symbol_apps(row: &[f64], spec: &Constellation) -> Vec<f64> {
    (0..spec.order())
        .map(|m| {
            row.iter()
                .enumerate()
                .map(|(j, &l)| log_bit_prior(l, spec.label_bit(m, j)))
                .sum()
        })
        .collect()
}

/// How the normalizing constant `β_{k,q}` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaConvention {
    /// Product over all `p` bits of the axis, including its sign bit.
    #[default]
    AllAxisBits,
    /// Product over the `p - 1` magnitude bits only. Breaks the
    /// normalization identity; kept to show that the checks catch it.
    MagnitudeBitsOnly,
}

/// Coefficients of one axis for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisCoefficients {
    /// `β_{k,q}`.
    pub beta: f64,
    /// `ln θ_{k,q}(i)`, `i = 1..2^{p-1}`.
    pub log_theta: Vec<f64>,
    /// `E{x²}` of the axis amplitude.
    pub omega: f64,
    /// `E{x}` of the axis amplitude.
    pub alpha: f64,
    /// `L_q(k)`.
    pub sign_llr: f64,
}

/// Coefficients of both axes for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub in_phase: AxisCoefficients,
    pub quadrature: AxisCoefficients,
}

impl CoefficientSet {
    pub fn axis(&self, axis: Axis) -> &AxisCoefficients {
        match axis {
            Axis::InPhase => &self.in_phase,
            Axis::Quadrature => &self.quadrature,
        }
    }
}

pub fn coefficients(frame: &LlrFrame, k: usize, spec: &Constellation) -> CoefficientSet {
    CoefficientSet {
        in_phase: axis_coefficients(frame.row(k), spec, Axis::InPhase, BetaConvention::default()),
        quadrature: axis_coefficients(frame.row(k), spec, Axis::Quadrature, BetaConvention::default()),
    }
}

/// `θ`, `β`, `ω`, `α` of one axis from an LLR row.
pub fn axis_coefficients(
    row: &[f64],
    spec: &Constellation,
    axis: Axis,
    convention: BetaConvention,
) -> AxisCoefficients {
    let positions = spec.magnitude_positions(axis);
    let sign_llr = row[spec.sign_position(axis)];
    let half_sign = sign_llr / 2.0;
    let d = spec.half_distance();

    let log_theta: Vec<f64> = (1..=spec.half_levels())
        .map(|i| {
            spec.magnitude_bits(i)
                .iter()
                .zip(&positions)
                .map(|(&b, &j)| (2.0 * b as f64 - 1.0) * row[j] / 2.0)
                .sum()
        })
        .collect();

    let magnitude_norm: f64 = positions.iter().map(|&j| ln_two_cosh(row[j] / 2.0)).sum();
    let log_beta = match convention {
        BetaConvention::AllAxisBits => -magnitude_norm - ln_two_cosh(half_sign),
        BetaConvention::MagnitudeBitsOnly => -magnitude_norm,
    };
    // ln(2 β cosh(L_q/2))
    let log_scale = log_beta + ln_two_cosh(half_sign);

    let second: Vec<f64> = log_theta
        .iter()
        .enumerate()
        .map(|(idx, &lt)| lt + 2.0 * (d * (2 * idx + 1) as f64).ln())
        .collect();
    let first: Vec<f64> = log_theta
        .iter()
        .enumerate()
        .map(|(idx, &lt)| lt + (d * (2 * idx + 1) as f64).ln())
        .collect();

    let omega = (log_scale + log_sum_exp(&second)).exp();
    let alpha = half_sign.tanh() * (log_scale + log_sum_exp(&first)).exp();
    AxisCoefficients {
        beta: log_beta.exp(),
        log_theta,
        omega,
        alpha,
        sign_llr,
    }
}

/// Left-hand side of the normalization identity `2β cosh(L_q/2) Σθ = 1`.
pub fn normalization_lhs(c: &AxisCoefficients) -> f64 {
    let lse = log_sum_exp(&c.log_theta);
    (c.beta.ln() + ln_two_cosh(c.sign_llr / 2.0) + lse).exp()
}

/// Priors used for the other bits when marginalizing in the demapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemapPriors {
    /// Current a priori LLRs of the other bits of the symbol.
    #[default]
    Current,
    /// Equiprobable other bits.
    Uniform,
}

/// Bit likelihoods `Λ_l(k)` of symbol-rate sample `y`; never includes the
/// bit's own prior.
pub fn soft_demap(
    y: Complex64,
    frame: &LlrFrame,
    k: usize,
    spec: &Constellation,
    es: f64,
    sigma2: f64,
    priors: DemapPriors,
) -> Vec<f64> {
    let mut out = vec![0.0; spec.bits_per_symbol()];
    soft_demap_into(y, frame.row(k), spec, es, sigma2, priors, &mut out);
    out
}

pub(crate) fn soft_demap_into(
    y: Complex64,
    row: &[f64],
    spec: &Constellation,
    es: f64,
    sigma2: f64,
    priors: DemapPriors,
    out: &mut [f64],
) {
    let amp = es.sqrt();
    let bps = spec.bits_per_symbol();
    let order = spec.order();
    let zero_row;
    let row = match priors {
        DemapPriors::Current => row,
        DemapPriors::Uniform => {
            zero_row = vec![0.0; bps];
            &zero_row[..]
        }
    };
    let log_g: Vec<f64> = spec
        .points()
        .iter()
        .map(|&c| -(y - amp * c).norm_sqr() / (2.0 * sigma2))
        .collect();
    let log_prior = log_symbol_apps(row, spec);
    let mut ones = Vec::with_capacity(order);
    let mut zeros = Vec::with_capacity(order);
    for (j, o) in out.iter_mut().enumerate() {
        ones.clear();
        zeros.clear();
        for m in 0..order {
            let b = spec.label_bit(m, j);
            let v = log_g[m] + log_prior[m] - log_bit_prior(row[j], b);
            if b == 1 {
                ones.push(v);
            } else {
                zeros.push(v);
            }
        }
        let num = log_sum_exp(&ones);
        let den = log_sum_exp(&zeros);
        *o = match (num.is_finite(), den.is_finite()) {
            (true, true) => clamp_llr(num - den),
            (true, false) => LLR_MAX,
            (false, true) => -LLR_MAX,
            (false, false) => 0.0,
        };
    }
}
