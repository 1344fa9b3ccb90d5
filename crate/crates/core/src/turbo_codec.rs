//! Parallel-concatenated RSC turbo code: encoder, puncturing, interleavers and
//! an exact log-MAP BCJR SISO decoder.
//!
//! A frame of `F = K·2p` code bits is laid out, before the outer interleaver,
//! as `info_len` groups `[sys, parity…]`, followed by the three termination
//! steps of RSC-1 as `[sys, par1]` pairs and then zero pad bits. RSC-2 runs on
//! the inner-interleaved info bits and is left unterminated.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{clamp_llr, max_star, LLR_MAX};

const MEMORY: usize = 3;
const STATES: usize = 1 << MEMORY;
/// Code bits spent on terminating RSC-1.
pub const TAIL_BITS: usize = 2 * MEMORY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeRate {
    Half,
    Third,
}

impl CodeRate {
    /// Transmitted code bits per info bit.
    pub fn bits_per_info(self) -> usize {
        match self {
            CodeRate::Half => 2,
            CodeRate::Third => 3,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" => Ok(CodeRate::Half),
            "1/3" => Ok(CodeRate::Third),
            other => Err(Error::InvalidParameter(format!(
                "code rate must be 1/2 or 1/3, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for CodeRate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CodeRate::Half => "1/2",
            CodeRate::Third => "1/3",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboConfig {
    /// Feedback polynomial, MSB (current tap) first.
    pub feedback_poly: [u8; 4],
    /// Feedforward polynomial, MSB first.
    pub feedforward_poly: [u8; 4],
    pub rate: CodeRate,
    pub info_len: usize,
    pub inner_interleaver_seed: u64,
    pub outer_interleaver_seed: u64,
    pub turbo_iterations: usize,
}

impl TurboConfig {
    /// The configuration filling a frame of `frame_bits` code bits.
    pub fn for_frame(rate: CodeRate, frame_bits: usize, seed: u64) -> Result<Self> {
        let n = rate.bits_per_info();
        if frame_bits < TAIL_BITS + n {
            return Err(Error::InvalidParameter(format!(
                "frame of {frame_bits} bits cannot hold a terminated turbo codeword"
            )));
        }
        Ok(Self {
            feedback_poly: [1, 0, 1, 1],
            feedforward_poly: [1, 1, 0, 1],
            rate,
            info_len: (frame_bits - TAIL_BITS) / n,
            inner_interleaver_seed: seed,
            outer_interleaver_seed: seed ^ 0x9e37_79b9_7f4a_7c15,
            turbo_iterations: 10,
        })
    }

    pub fn unpadded_len(&self) -> usize {
        self.rate.bits_per_info() * self.info_len + TAIL_BITS
    }
}

/// A bijective index map; `apply` gathers, `invert` scatters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<usize>,
}

impl Interleaver {
    pub fn random(len: usize, seed: u64) -> Self {
        let mut perm: Vec<usize> = (0..len).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `out[i] = input[perm[i]]`.
    pub fn apply<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| input[p]).collect()
    }

    /// Inverse of [`Interleaver::apply`].
    pub fn invert<T: Copy + Default>(&self, input: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); input.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = input[i];
        }
        out
    }
}

/// Eight-state RSC trellis. State bits are `(w_{n-1}, w_{n-2}, w_{n-3})`
/// packed MSB first.
#[derive(Debug, Clone)]
pub struct Trellis {
    next: [[usize; 2]; STATES],
    parity: [[u8; 2]; STATES],
    /// Input that drives the register input `w_n` to zero.
    tail_input: [u8; STATES],
}

impl Trellis {
    pub fn new(feedback: [u8; 4], feedforward: [u8; 4]) -> Result<Self> {
        if feedback[0] != 1 || feedforward[0] != 1 {
            return Err(Error::InvalidParameter("generator polynomials need a leading 1".into()));
        }
        let mut next = [[0; 2]; STATES];
        let mut parity = [[0; 2]; STATES];
        let mut tail_input = [0; STATES];
        for s in 0..STATES {
            let reg = [(s >> 2) & 1, (s >> 1) & 1, s & 1].map(|b| b as u8);
            let fb = (1..4).fold(0u8, |acc, t| acc ^ (feedback[t] & reg[t - 1]));
            tail_input[s] = fb;
            for x in 0..2u8 {
                let w = x ^ fb;
                let c = (1..4).fold(w & feedforward[0], |acc, t| acc ^ (feedforward[t] & reg[t - 1]));
                next[s][x as usize] = ((w as usize) << 2) | (s >> 1);
                parity[s][x as usize] = c;
            }
        }
        Ok(Self {
            next,
            parity,
            tail_input,
        })
    }

    /// Encodes from the zero state; returns parity bits and the final state.
    pub fn encode(&self, input: &[u8]) -> (Vec<u8>, usize) {
        let mut s = 0;
        let parity = input
            .iter()
            .map(|&x| {
                let x = (x & 1) as usize;
                let c = self.parity[s][x];
                s = self.next[s][x];
                c
            })
            .collect();
        (parity, s)
    }

    /// Termination `(systematic, parity)` bits from `state` back to zero.
    pub fn terminate(&self, mut state: usize) -> Vec<(u8, u8)> {
        (0..MEMORY)
            .map(|_| {
                let x = self.tail_input[state];
                let c = self.parity[state][x as usize];
                state = self.next[state][x as usize];
                (x, c)
            })
            .collect()
    }
}

/// A turbo code instance for a fixed frame: trellis, interleavers and layout.
#[derive(Debug, Clone)]
pub struct TurboCode {
    cfg: TurboConfig,
    trellis: Trellis,
    inner: Interleaver,
    outer: Interleaver,
    frame_len: usize,
}

impl TurboCode {
    pub fn new(cfg: TurboConfig, frame_len: usize) -> Result<Self> {
        if cfg.info_len == 0 || cfg.unpadded_len() > frame_len {
            return Err(Error::LengthMismatch {
                what: "turbo frame",
                expected: cfg.unpadded_len(),
                found: frame_len,
            });
        }
        Ok(Self {
            trellis: Trellis::new(cfg.feedback_poly, cfg.feedforward_poly)?,
            inner: Interleaver::random(cfg.info_len, cfg.inner_interleaver_seed),
            outer: Interleaver::random(frame_len, cfg.outer_interleaver_seed),
            frame_len,
            cfg,
        })
    }

    pub fn config(&self) -> &TurboConfig {
        &self.cfg
    }

    pub fn trellis(&self) -> &Trellis {
        &self.trellis
    }

    pub fn info_len(&self) -> usize {
        self.cfg.info_len
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn pad_len(&self) -> usize {
        self.frame_len - self.cfg.unpadded_len()
    }

    fn keeps(&self, n: usize) -> (bool, bool) {
        match self.cfg.rate {
            CodeRate::Third => (true, true),
            CodeRate::Half => (n.is_multiple_of(2), !n.is_multiple_of(2)),
        }
    }

    fn layout(&self) -> Layout {
        let mut sys = Vec::with_capacity(self.cfg.info_len + MEMORY);
        let mut par1 = vec![None; self.cfg.info_len + MEMORY];
        let mut par2 = vec![None; self.cfg.info_len];
        let mut pos = 0;
        for n in 0..self.cfg.info_len {
            sys.push(pos);
            pos += 1;
            let (k1, k2) = self.keeps(n);
            if k1 {
                par1[n] = Some(pos);
                pos += 1;
            }
            if k2 {
                par2[n] = Some(pos);
                pos += 1;
            }
        }
        for t in 0..MEMORY {
            sys.push(pos);
            par1[self.cfg.info_len + t] = Some(pos + 1);
            pos += 2;
        }
        Layout { sys, par1, par2 }
    }

    /// Encodes `info_len` bits into a frame of `frame_len` code bits.
    pub fn encode(&self, info: &[u8]) -> Result<CodeBitFrame> {
        if info.len() != self.cfg.info_len {
            return Err(Error::LengthMismatch {
                what: "info bits",
                expected: self.cfg.info_len,
                found: info.len(),
            });
        }
        let info: Vec<u8> = info.iter().map(|b| b & 1).collect();
        let (p1, end) = self.trellis.encode(&info);
        let tail = self.trellis.terminate(end);
        let (p2, _) = self.trellis.encode(&self.inner.apply(&info));
        let layout = self.layout();
        let mut stream = vec![0u8; self.frame_len];
        for n in 0..self.cfg.info_len {
            stream[layout.sys[n]] = info[n];
            if let Some(i) = layout.par1[n] {
                stream[i] = p1[n];
            }
            if let Some(i) = layout.par2[n] {
                stream[i] = p2[n];
            }
        }
        for (t, &(x, c)) in tail.iter().enumerate() {
            let n = self.cfg.info_len + t;
            stream[layout.sys[n]] = x;
            stream[layout.par1[n].expect("tail parity is always sent")] = c;
        }
        Ok(CodeBitFrame {
            bits: self.outer.apply(&stream),
        })
    }
}

struct Layout {
    sys: Vec<usize>,
    par1: Vec<Option<usize>>,
    par2: Vec<Option<usize>>,
}

/// Code bits in transmission order; bit `i` sits at symbol `i / 2p`,
/// bit position `i % 2p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBitFrame {
    pub bits: Vec<u8>,
}

impl CodeBitFrame {
    /// `(symbol, bit position)` of code bit `i`.
    pub fn position(&self, i: usize, bits_per_symbol: usize) -> (usize, usize) {
        (i / bits_per_symbol, i % bits_per_symbol)
    }
}

pub fn turbo_encode(info_bits: &[u8], code: &TurboCode) -> Result<CodeBitFrame> {
    code.encode(info_bits)
}

/// Per-step outputs of one SISO pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SisoOutput {
    /// A posteriori LLR of the systematic input of every trellis step.
    pub app_info: Vec<f64>,
    /// `app_info − channel − a priori`.
    pub ext_info: Vec<f64>,
    /// A posteriori LLR of the parity bit of every trellis step.
    pub app_par: Vec<f64>,
}

/// Exact log-MAP BCJR over the RSC trellis. `sys`, `apriori` and `par` have
/// one entry per trellis step; a punctured parity is a zero LLR. With
/// `terminated` the path is forced to end in the zero state.
pub fn bcjr_siso(sys: &[f64], apriori: &[f64], par: &[f64], trellis: &Trellis, terminated: bool) -> Result<SisoOutput> {
    let n = sys.len();
    if apriori.len() != n || par.len() != n {
        return Err(Error::LengthMismatch {
            what: "SISO inputs",
            expected: n,
            found: if apriori.len() != n { apriori.len() } else { par.len() },
        });
    }
    let sys: Vec<f64> = sys.iter().map(|&v| clamp_llr(v)).collect();
    let apriori: Vec<f64> = apriori.iter().map(|&v| clamp_llr(v)).collect();
    let par: Vec<f64> = par.iter().map(|&v| clamp_llr(v)).collect();

    let gamma = |t: usize, s: usize, x: usize| -> f64 {
        let c = trellis.parity[s][x];
        (x as f64) * (sys[t] + apriori[t]) + (c as f64) * par[t]
    };

    let ninf = f64::NEG_INFINITY;
    let mut alpha = vec![[ninf; STATES]; n + 1];
    alpha[0][0] = 0.0;
    for t in 0..n {
        let mut next = [ninf; STATES];
        for s in 0..STATES {
            if alpha[t][s] == ninf {
                continue;
            }
            for x in 0..2 {
                let s2 = trellis.next[s][x];
                next[s2] = max_star(next[s2], alpha[t][s] + gamma(t, s, x));
            }
        }
        normalize(&mut next);
        alpha[t + 1] = next;
    }

    let mut beta = vec![[ninf; STATES]; n + 1];
    if terminated {
        beta[n][0] = 0.0;
    } else {
        beta[n] = [0.0; STATES];
    }
    for t in (0..n).rev() {
        let mut cur = [ninf; STATES];
        for (s, slot) in cur.iter_mut().enumerate() {
            for x in 0..2 {
                let s2 = trellis.next[s][x];
                *slot = max_star(*slot, gamma(t, s, x) + beta[t + 1][s2]);
            }
        }
        normalize(&mut cur);
        beta[t] = cur;
    }

    let mut app_info = Vec::with_capacity(n);
    let mut ext_info = Vec::with_capacity(n);
    let mut app_par = Vec::with_capacity(n);
    for t in 0..n {
        let mut by_input = [ninf; 2];
        let mut by_parity = [ninf; 2];
        for s in 0..STATES {
            if alpha[t][s] == ninf {
                continue;
            }
            for x in 0..2 {
                let s2 = trellis.next[s][x];
                let m = alpha[t][s] + gamma(t, s, x) + beta[t + 1][s2];
                by_input[x] = max_star(by_input[x], m);
                let c = trellis.parity[s][x] as usize;
                by_parity[c] = max_star(by_parity[c], m);
            }
        }
        let app = llr_from(by_input);
        app_info.push(app);
        ext_info.push(clamp_llr(app - sys[t] - apriori[t]));
        app_par.push(llr_from(by_parity));
    }
    Ok(SisoOutput {
        app_info,
        ext_info,
        app_par,
    })
}

fn normalize(v: &mut [f64; STATES]) {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m.is_finite() {
        v.iter_mut().for_each(|x| *x -= m);
    }
}

fn llr_from(m: [f64; 2]) -> f64 {
    match (m[1].is_finite(), m[0].is_finite()) {
        (true, true) => m[1] - m[0],
        (true, false) => LLR_MAX,
        (false, true) => -LLR_MAX,
        (false, false) => 0.0,
    }
}

/// Extrinsic information carried between turbo iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    /// Extrinsic from SISO-2 about the info bits, natural order.
    ext21: Vec<f64>,
    /// A posteriori LLRs of the info bits after the last exchange.
    info_app: Vec<f64>,
    iterations: usize,
}

impl DecoderState {
    pub fn new(code: &TurboCode) -> Self {
        Self {
            ext21: vec![0.0; code.info_len()],
            info_app: vec![0.0; code.info_len()],
            iterations: 0,
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn info_app(&self) -> &[f64] {
        &self.info_app
    }

    /// Hard decisions on the info bits (`app > 0 ⇒ 1`).
    pub fn decisions(&self) -> Vec<u8> {
        self.info_app.iter().map(|&l| (l > 0.0) as u8).collect()
    }
}

/// One SISO-1/SISO-2 exchange. `lambda` holds bit likelihoods in
/// transmission order; the result holds the a posteriori LLR of every
/// transmitted code bit. Pad bits are known zeros: their output is the
/// likelihood minus `L_max`, so that `Υ − Λ` is exactly `−L_max`.
pub fn turbo_iterate(lambda: &[f64], state: &mut DecoderState, code: &TurboCode) -> Result<Vec<f64>> {
    if lambda.len() != code.frame_len() {
        return Err(Error::LengthMismatch {
            what: "bit likelihood frame",
            expected: code.frame_len(),
            found: lambda.len(),
        });
    }
    if state.ext21.len() != code.info_len() {
        return Err(Error::LengthMismatch {
            what: "decoder state",
            expected: code.info_len(),
            found: state.ext21.len(),
        });
    }
    let n = code.info_len();
    let stream: Vec<f64> = code
        .outer
        .invert(&lambda.iter().map(|&v| clamp_llr(v)).collect::<Vec<_>>());
    let layout = code.layout();
    let pick = |idx: Option<usize>| idx.map_or(0.0, |i| stream[i]);

    let sys1: Vec<f64> = layout.sys.iter().map(|&i| stream[i]).collect();
    let par1: Vec<f64> = layout.par1.iter().map(|&i| pick(i)).collect();
    let mut apriori1 = state.ext21.clone();
    apriori1.extend([0.0; MEMORY]);
    let s1 = bcjr_siso(&sys1, &apriori1, &par1, &code.trellis, true)?;

    let ext12 = &s1.ext_info[..n];
    let sys2 = code.inner.apply(&sys1[..n]);
    let apriori2 = code.inner.apply(ext12);
    let par2: Vec<f64> = layout.par2.iter().map(|&i| pick(i)).collect();
    let s2 = bcjr_siso(&sys2, &apriori2, &par2, &code.trellis, false)?;
    state.ext21 = code.inner.invert(&s2.ext_info);

    let mut upsilon = stream.clone();
    for t in 0..n {
        let app = sys1[t] + ext12[t] + state.ext21[t];
        upsilon[layout.sys[t]] = app;
        state.info_app[t] = app;
    }
    for t in n..n + MEMORY {
        upsilon[layout.sys[t]] = s1.app_info[t];
    }
    for (t, idx) in layout.par1.iter().enumerate() {
        if let Some(i) = idx {
            upsilon[*i] = s1.app_par[t];
        }
    }
    for (t, idx) in layout.par2.iter().enumerate() {
        if let Some(i) = idx {
            upsilon[*i] = s2.app_par[t];
        }
    }
    for v in &mut upsilon[code.cfg.unpadded_len()..] {
        *v -= LLR_MAX;
    }
    state.iterations += 1;
    Ok(code.outer.apply(&upsilon))
}

/// A priori LLRs for the next estimation pass: `L = Υ − Λ`, clamped.
pub fn a_priori_from(upsilon: &[f64], lambda: &[f64]) -> Vec<f64> {
    upsilon
        .iter()
        .zip(lambda)
        .map(|(&u, &l)| clamp_llr(u - clamp_llr(l)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn lte() -> Trellis {
        Trellis::new([1, 0, 1, 1], [1, 1, 0, 1]).unwrap()
    }

    #[test]
    fn hand_traced_impulse_response() {
        // w_n = x_n ^ w_{n-2} ^ w_{n-3},  c_n = w_n ^ w_{n-1} ^ w_{n-3}
        let t = lte();
        let (par, end) = t.encode(&[1, 0, 0, 0, 0]);
        assert_eq!(par, vec![1, 1, 1, 1, 0]);
        assert_eq!(end, 0b111);
        assert_eq!(t.terminate(end), vec![(0, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn frame_sizes() {
        let c = TurboConfig::for_frame(CodeRate::Third, 800, 1).unwrap();
        assert_eq!(c.info_len, 264);
        let code = TurboCode::new(c, 800).unwrap();
        assert_eq!(code.pad_len(), 2);
        let c = TurboConfig::for_frame(CodeRate::Half, 800, 1).unwrap();
        assert_eq!(c.info_len, 397);
        assert_eq!(TurboCode::new(c, 800).unwrap().pad_len(), 0);
        let c = TurboConfig::for_frame(CodeRate::Third, 99, 1).unwrap();
        assert_eq!(c.unpadded_len(), 3 * 31 + 6);
    }

    #[test]
    fn zero_info_gives_zero_codeword() {
        let cfg = TurboConfig::for_frame(CodeRate::Half, 200, 4).unwrap();
        let code = TurboCode::new(cfg, 200).unwrap();
        let f = code.encode(&vec![0; code.info_len()]).unwrap();
        assert!(f.bits.iter().all(|&b| b == 0));
        assert!(code.encode(&[0, 1]).is_err());
    }

    #[test]
    fn rate_third_keeps_everything() {
        let cfg = TurboConfig::for_frame(CodeRate::Third, 3 * 20 + 6, 9).unwrap();
        let code = TurboCode::new(cfg, 66).unwrap();
        assert_eq!(code.pad_len(), 0);
        let layout = code.layout();
        assert!(layout.par1.iter().all(Option::is_some));
        assert!(layout.par2.iter().all(Option::is_some));
    }

    #[test]
    fn interleaver_roundtrip() {
        let p = Interleaver::random(257, 42);
        let x: Vec<usize> = (0..257).map(|i| i * 7 % 13).collect();
        assert_eq!(p.invert(&p.apply(&x)), x);
        assert_eq!(p.apply(&p.invert(&x)), x);
        let mut seen = p.perm.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..257).collect::<Vec<_>>());
    }

    #[test]
    fn zero_inputs_give_zero_outputs() {
        let t = lte();
        let z = vec![0.0; 9];
        let o = bcjr_siso(&z, &z, &z, &t, true).unwrap();
        assert!(o.app_info.iter().all(|v| v.abs() < 1e-12));
        let cfg = TurboConfig::for_frame(CodeRate::Third, 120, 2).unwrap();
        let code = TurboCode::new(cfg, 120).unwrap();
        let mut st = DecoderState::new(&code);
        let u = turbo_iterate(&vec![0.0; 120], &mut st, &code).unwrap();
        assert!(u.iter().all(|v| v.abs() < 1e-12));
    }

    fn path_metric(t: &Trellis, bits: &[u8], sys: &[f64], apr: &[f64], par: &[f64]) -> (f64, Vec<u8>, Vec<u8>) {
        let (p, end) = t.encode(bits);
        let tail = t.terminate(end);
        let mut x: Vec<u8> = bits.to_vec();
        let mut c = p;
        for (a, b) in tail {
            x.push(a);
            c.push(b);
        }
        let m = (0..x.len())
            .map(|i| x[i] as f64 * (sys[i] + apr[i]) + c[i] as f64 * par[i])
            .sum();
        (m, x, c)
    }

    #[test]
    fn bcjr_matches_enumeration() {
        let t = lte();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for &n in &[5usize, 9, 12] {
            let len = n + MEMORY;
            let sys: Vec<f64> = (0..len).map(|_| rng.random_range(-4.0..4.0)).collect();
            let par: Vec<f64> = (0..len).map(|_| rng.random_range(-4.0..4.0)).collect();
            let mut apr: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            apr.extend([0.0; MEMORY]);
            let o = bcjr_siso(&sys, &apr, &par, &t, true).unwrap();
            let mut num = vec![f64::NEG_INFINITY; len];
            let mut den = vec![f64::NEG_INFINITY; len];
            let mut pnum = vec![f64::NEG_INFINITY; len];
            let mut pden = vec![f64::NEG_INFINITY; len];
            for word in 0..1u32 << n {
                let bits: Vec<u8> = (0..n).map(|i| ((word >> i) & 1) as u8).collect();
                let (m, x, c) = path_metric(&t, &bits, &sys, &apr, &par);
                for i in 0..len {
                    let slot = if x[i] == 1 { &mut num } else { &mut den };
                    slot[i] = max_star(slot[i], m);
                    let slot = if c[i] == 1 { &mut pnum } else { &mut pden };
                    slot[i] = max_star(slot[i], m);
                }
            }
            for i in 0..len {
                let want = num[i] - den[i];
                assert!((o.app_info[i] - want).abs() < 1e-9, "n={n} i={i}");
                assert!((o.ext_info[i] - (want - sys[i] - apr[i])).abs() < 1e-9);
                assert!((o.app_par[i] - (pnum[i] - pden[i])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_codeword_is_reproduced() {
        let cfg = TurboConfig::for_frame(CodeRate::Half, 300, 8).unwrap();
        let code = TurboCode::new(cfg, 300).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let info: Vec<u8> = (0..code.info_len()).map(|_| rng.random_range(0..2)).collect();
        let frame = code.encode(&info).unwrap();
        let lambda: Vec<f64> = frame.bits.iter().map(|&b| if b == 1 { 2.0 } else { -2.0 }).collect();
        let mut st = DecoderState::new(&code);
        let mut prev = 0.0;
        for _ in 0..4 {
            let u = turbo_iterate(&lambda, &mut st, &code).unwrap();
            for (i, (&v, &b)) in u.iter().zip(&frame.bits).enumerate() {
                assert_eq!(v > 0.0, b == 1, "bit {i}");
            }
            let mean = u.iter().map(|v| v.abs()).sum::<f64>() / u.len() as f64;
            assert!(mean >= prev - 1e-9);
            prev = mean;
        }
        assert_eq!(st.decisions(), info);
        assert_eq!(st.iterations(), 4);
    }

    #[test]
    fn extrinsic_decomposition() {
        let cfg = TurboConfig::for_frame(CodeRate::Third, 150, 3).unwrap();
        let code = TurboCode::new(cfg, 150).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lambda: Vec<f64> = (0..150).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut st = DecoderState::new(&code);
        let u = turbo_iterate(&lambda, &mut st, &code).unwrap();
        let l = a_priori_from(&u, &lambda);
        for i in 0..150 {
            assert!((u[i] - lambda[i] - l[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn pad_bits_are_known_zeros() {
        let cfg = TurboConfig::for_frame(CodeRate::Third, 800, 9).unwrap();
        let code = TurboCode::new(cfg, 800).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let lambda: Vec<f64> = (0..800).map(|_| rng.random_range(-60.0..60.0)).collect();
        let mut st = DecoderState::new(&code);
        let up = turbo_iterate(&lambda, &mut st, &code).unwrap();
        let l = a_priori_from(&up, &lambda);
        let pads = code.outer.apply(
            &(0..800)
                .map(|i| (i >= code.config().unpadded_len()) as u8)
                .collect::<Vec<_>>(),
        );
        assert_eq!(pads.iter().filter(|&&b| b == 1).count(), code.pad_len());
        assert!(code.pad_len() > 0);
        for (i, &is_pad) in pads.iter().enumerate() {
            if is_pad == 1 {
                assert_eq!(l[i], -LLR_MAX);
                assert_eq!(code.encode(&vec![1; code.info_len()]).unwrap().bits[i], 0);
            }
        }
    }

    proptest! {
        #[test]
        fn encoder_is_linear(a in proptest::collection::vec(0u8..2, 31), b in proptest::collection::vec(0u8..2, 31)) {
            let cfg = TurboConfig::for_frame(CodeRate::Third, 99, 5).unwrap();
            let code = TurboCode::new(cfg, 99).unwrap();
            let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
            let fa = code.encode(&a).unwrap().bits;
            let fb = code.encode(&b).unwrap().bits;
            let fx = code.encode(&x).unwrap().bits;
            for i in 0..fx.len() {
                prop_assert_eq!(fx[i], fa[i] ^ fb[i]);
            }
        }

        #[test]
        fn interleaver_is_bijective(len in 1usize..500, seed in any::<u64>()) {
            let p = Interleaver::random(len, seed);
            let x: Vec<usize> = (0..len).collect();
            prop_assert_eq!(p.invert(&p.apply(&x)), x);
        }
    }
}
