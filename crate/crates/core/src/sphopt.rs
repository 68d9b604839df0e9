//! Derivative-free maximization of smooth functions on the unit sphere.
//!
//! The search moves along great circles: at the current point an orthonormal
//! tangent basis is built, each tangent direction is line-searched with
//! bracketing plus golden-section, and sweeps repeat until the value stops
//! improving. This is enough for the quasi-concave objectives used here
//! (support functions and gauge restrictions), where every positive local
//! maximum is global.

use crate::vecops::{axpy, dot, norm, normalized, scale};

const GOLDEN: f64 = 0.618_033_988_749_894_9;
/// Golden-section stops once the bracket is this many radians wide.
const THETA_TOL: f64 = 3e-9;

pub(crate) struct SphereSearch {
    pub omega: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Orthonormal basis of the tangent space at `omega`.
pub(crate) fn tangent_basis(omega: &[f64]) -> Vec<Vec<f64>> {
    let dim = omega.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim - 1);
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        let mut w = axpy(&v, -dot(&v, omega), omega);
        for b in &basis {
            w = axpy(&w, -dot(&w, b), b);
        }
        let n = norm(&w);
        if n > 1e-8 {
            basis.push(scale(&w, 1.0 / n));
            if basis.len() == dim - 1 {
                break;
            }
        }
    }
    basis
}

fn rotate(omega: &[f64], tangent: &[f64], theta: f64) -> Vec<f64> {
    let c = theta.cos();
    let s = theta.sin();
    normalized(&omega.iter().zip(tangent).map(|(o, t)| c * o + s * t).collect::<Vec<_>>())
}

/// Golden-section maximization of `f` over [lo, hi].
fn golden_section(f: &mut dyn FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let mut a = hi - GOLDEN * (hi - lo);
    let mut b = lo + GOLDEN * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > THETA_TOL {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + GOLDEN * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - GOLDEN * (hi - lo);
            fa = f(a);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Bracket a local maximum of `f` around 0, then refine by golden-section.
/// Returns (theta, value) for the best angle found.
fn line_max(f: &mut dyn FnMut(f64) -> f64, f0: f64) -> (f64, f64) {
    let step0 = 0.25;
    let fp = f(step0);
    let fm = f(-step0);
    let (sign, mut best) = if fp >= f0 && fp >= fm {
        (1.0, fp)
    } else if fm >= f0 && fm > fp {
        (-1.0, fm)
    } else {
        // Maximum already inside [-step0, step0].
        return golden_section(f, -step0, step0);
    };
    let mut prev = 0.0;
    let mut cur = sign * step0;
    loop {
        let next = (2.0 * cur).clamp(-std::f64::consts::PI, std::f64::consts::PI);
        let fnext = f(next);
        if fnext <= best || (next - cur).abs() < 1e-12 {
            let (lo, hi) = if sign > 0.0 { (prev, next) } else { (next, prev) };
            return golden_section(f, lo, hi);
        }
        prev = cur;
        cur = next;
        best = fnext;
    }
}

/// Ascend `f` on the sphere starting from `start`.
pub(crate) fn maximize_on_sphere(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    max_sweeps: usize,
) -> SphereSearch {
    let mut omega = normalized(start);
    let mut value = f(&omega);
    let mut evals = 1usize;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let before = value;
        for t in tangent_basis(&omega) {
            let mut probe = |theta: f64| {
                evals += 1;
                f(&rotate(&omega, &t, theta))
            };
            let (theta, v) = line_max(&mut probe, value);
            if v > value {
                omega = rotate(&omega, &t, theta);
                value = v;
            }
        }
        if value - before <= 1e-15 * (1.0 + value.abs()) {
            converged = true;
            break;
        }
    }
    SphereSearch { omega, value, evals, converged }
}
