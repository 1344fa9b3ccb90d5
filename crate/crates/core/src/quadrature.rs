//! Gauss–Legendre and Gauss–Hermite rules.
//!
//! Hermite weights are kept as logarithms: the outer weights of a high-order
//! rule underflow long before the integrands we pair them with stop growing.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut pp = 1.0;
            for _ in 0..100 {
                let (p1, dp) = legendre(n, z);
                pp = dp;
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            if pp == 1.0 {
                pp = legendre(n, z).1;
            }
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            let w = 2.0 / ((1.0 - z * z) * pp * pp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
    }
    let dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, dp)
}

/// Gauss–Hermite rule for the weight `e^{-s²}` on the real line.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub log_weights: Vec<f64>,
}

const RESCALE: f64 = 1e150;

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut log_weights = vec![0.0; n];
        let nf = n as f64;
        // Positive roots lie below sqrt(2n+1) and are never closer than
        // about pi/sqrt(2n+1); bracket them on a grid much finer than that.
        let top = (2.0 * nf + 1.0).sqrt() + 1.0;
        let step = PI / (2.0 * nf + 1.0).sqrt() / 16.0;
        let mut roots = Vec::with_capacity(n / 2);
        let mut a = if n % 2 == 1 { 0.5 * step } else { 0.0 };
        let mut fa = hermite_scaled(n, a).0;
        while a < top && roots.len() < n / 2 {
            let b = a + step;
            let fb = hermite_scaled(n, b).0;
            if fa.signum() != fb.signum() {
                roots.push(refine_root(n, a, b));
            }
            a = b;
            fa = fb;
        }
        assert_eq!(roots.len(), n / 2, "missed Hermite roots at order {n}");
        for (i, &z) in roots.iter().enumerate() {
            let (_, pn1, log_scale) = hermite_scaled(n, z);
            let lw = -nf.ln() - 2.0 * (pn1.abs().ln() + log_scale);
            let upper = n.div_ceil(2) + i;
            let lower = n / 2 - 1 - i;
            nodes[upper] = z;
            log_weights[upper] = lw;
            nodes[lower] = -z;
            log_weights[lower] = lw;
        }
        if n % 2 == 1 {
            let (_, pn1, log_scale) = hermite_scaled(n, 0.0);
            log_weights[n / 2] = -nf.ln() - 2.0 * (pn1.abs().ln() + log_scale);
        }
        Self { nodes, log_weights }
    }

    /// Shared rule of order `n`, built once per process.
    pub fn cached(n: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussHermite::new(n))).clone()
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `∫ e^{-s²} f(s) ds` for an integrand supplied as `ln f(s)`.
    pub fn integrate_log<F: FnMut(f64) -> f64>(&self, mut log_f: F) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(&s, &lw)| lw + log_f(s))
            .collect();
        crate::numeric::log_sum_exp(&terms).exp()
    }
}

/// Newton from the bracket midpoint, falling back to bisection whenever a
/// step leaves the bracket.
fn refine_root(n: usize, mut a: f64, mut b: f64) -> f64 {
    let fa_sign = hermite_scaled(n, a).0.signum();
    let nf = n as f64;
    let mut z = 0.5 * (a + b);
    for _ in 0..200 {
        let (pn, pn1, _) = hermite_scaled(n, z);
        if pn.signum() == fa_sign {
            a = z;
        } else {
            b = z;
        }
        let newton = z - pn / ((2.0 * nf).sqrt() * pn1);
        let next = if newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - z).abs() <= 1e-15 * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

/// Orthonormal Hermite recurrence at `z`: returns `(p_n, p_{n-1}, ln scale)`
/// with the true values equal to the returned ones times `e^{ln scale}`.
fn hermite_scaled(n: usize, z: f64) -> (f64, f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut log_scale = 0.0;
    for j in 1..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > RESCALE {
            p1 /= RESCALE;
            p2 /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    (p1, p2, log_scale)
}
