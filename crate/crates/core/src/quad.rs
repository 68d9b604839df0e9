//! Quadrature primitives: estimates with error bars, seeded sampling,
//! deterministic summation, Gauss-Legendre nodes.
//!
//! Every integral in this crate is reported as an [`Estimate`], a value paired
//! with a standard error. Monte Carlo errors come from the sample variance of
//! batch means; tensor-rule errors come from the difference between two
//! successive refinements. Reproducibility contract: a fixed `(spec, seed)`
//! pair always produces bit-identical estimates. Sampling uses one ChaCha
//! stream per batch, with batch seeds derived from the root seed, and batch
//! results are combined by pairwise summation so the reduction order is fixed.

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an integral is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadMethod {
    /// Seeded, batched Monte Carlo. `budget` counts samples.
    MonteCarlo,
    /// Product Gauss-Legendre rule in polar coordinates. `budget` counts
    /// total nodes; the per-axis count is derived from it.
    TensorPolar,
}

/// Evaluation request shared by all integral routines.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: QuadMethod,
    pub budget: usize,
    pub seed: u64,
    pub target_rel_err: f64,
}

impl QuadratureSpec {
    pub fn new(method: QuadMethod, budget: usize, seed: u64, target_rel_err: f64) -> Result<Self> {
        let spec = Self { method, budget, seed, target_rel_err };
        spec.validate()?;
        Ok(spec)
    }

    pub fn tensor(budget: usize, seed: u64) -> Self {
        Self { method: QuadMethod::TensorPolar, budget, seed, target_rel_err: 1e-3 }
    }

    pub fn monte_carlo(budget: usize, seed: u64) -> Self {
        Self { method: QuadMethod::MonteCarlo, budget, seed, target_rel_err: 1e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_rel_err.is_finite() && self.target_rel_err > 0.0) {
            return Err(Error::InvalidQuadrature(format!(
                "target relative error must be positive, got {}",
                self.target_rel_err
            )));
        }
        let min = match self.method {
            QuadMethod::MonteCarlo => 1000,
            QuadMethod::TensorPolar => 16,
        };
        if self.budget < min {
            return Err(Error::InvalidQuadrature(format!(
                "budget {} below the minimum {min} for {:?}",
                self.budget, self.method
            )));
        }
        Ok(())
    }

    /// Per-axis node count for a `dims`-dimensional tensor product rule.
    pub(crate) fn nodes_per_axis(&self, dims: usize) -> usize {
        let n = (self.budget as f64).powf(1.0 / dims as f64).round() as usize;
        n.clamp(8, 512)
    }

}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { method: QuadMethod::TensorPolar, budget: 100_000, seed: 42, target_rel_err: 1e-3 }
    }
}

/// An integral value with a standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn new(value: f64, std_err: f64) -> Self {
        Self { value, std_err }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, std_err: 0.0 }
    }

    /// Scale both the value and the error bar.
    pub fn scaled(&self, s: f64) -> Self {
        Self { value: self.value * s, std_err: self.std_err * s.abs() }
    }

    /// Sum with errors combined in quadrature.
    pub fn plus(&self, other: &Estimate) -> Self {
        Self {
            value: self.value + other.value,
            std_err: (self.std_err * self.std_err + other.std_err * other.std_err).sqrt(),
        }
    }

    pub fn minus(&self, other: &Estimate) -> Self {
        self.plus(&other.scaled(-1.0))
    }
}

/// SplitMix64 step; used to derive independent batch seeds from a root seed.
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG for batch `batch` of the stream rooted at `seed`.
pub(crate) fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ batch.wrapping_mul(0xa076_1d64_78bd_642f)))
}

/// Sum by pairwise (tree) reduction. Deterministic for a fixed input order
/// and much better conditioned than a running sum.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Uniform direction on the unit sphere via normalized Gaussians.
pub(crate) fn unit_sphere_dir(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let n = crate::vecops::norm(&v);
        if n > 1e-12 {
            return crate::vecops::scale(&v, 1.0 / n);
        }
    }
}

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one value per call keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Surface measure of the unit sphere in R^dim.
pub fn unit_sphere_area(dim: usize) -> f64 {
    // 2 pi^{dim/2} / Gamma(dim/2), with Gamma on integers and half-integers.
    let half = 0.5 * dim as f64;
    2.0 * std::f64::consts::PI.powf(half) / gamma_half_integer(dim)
}

/// Gamma(dim/2) for integer dim >= 1.
fn gamma_half_integer(dim: usize) -> f64 {
    let mut g = if dim % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    while x < 0.5 * dim as f64 - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Gauss-Legendre nodes and weights on [-1, 1], cached per order.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let computed = compute_gauss_legendre(n);
    cache.lock().unwrap().insert(n, computed.clone());
    computed
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights for integrating over [a, b].
pub(crate) fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| w * half).collect(),
    )
}

/// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}
