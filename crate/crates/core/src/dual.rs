//! Dual gauges (support functions of unit gauge balls).
//!
//! For a gauge H the dual gauge is
//!
//! ```text
//! H_0(x) = sup { <x, xi> : H(xi) = 1 },
//! ```
//!
//! itself a gauge, and the reflected dual `x -> H_0(-x)` is the support
//! function of the reflected gauge. The pair (H, H_0) satisfies a tight
//! algebra: `H(grad H_0(x)) = 1`, `H_0(grad H(xi)) = 1`, and each point is
//! reconstructed from its polar via `x = H_0(x) grad H(grad H_0(x))`.
//!
//! Two evaluation routes exist. [`dual_eval`] maximizes the support objective
//! over the unit sphere with a deterministic multi-start search and works for
//! every supported gauge; its maximizer *is* `grad H_0(x)` (envelope
//! theorem), so no numerical differentiation is involved. For four of the
//! five families [`closed_form_dual`] gives the dual in closed form, which is
//! what [`DualGauge`] uses on hot paths; the search then serves as an
//! independent cross-check.
//!
//! # Example
//!
//! ```
//! use finsler_liouville::dual::{closed_form_dual, dual_eval, DualGauge};
//! use finsler_liouville::gauge::Gauge;
//!
//! let g = Gauge::pnorm(2, 3.0).unwrap();
//! let x = [1.1, -0.4];
//!
//! // The 3-norm's polar is the 3/2-norm; the sphere search agrees.
//! let cf = closed_form_dual(&g).unwrap();
//! let found = dual_eval(&g, &x).unwrap();
//! let exact = cf.eval(&x).unwrap();
//! assert!((found.value - exact).abs() <= 1e-8 * exact);
//!
//! // Polar identity: H(grad H0(x)) = 1 away from the origin.
//! let dual = DualGauge::of(&g);
//! let grad = dual.grad(&x).unwrap();
//! assert!((g.eval(&grad).unwrap() - 1.0).abs() < 1e-9);
//! ```

use crate::error::{Error, Result};
use crate::gauge::{Gauge, Kind};
use crate::quad::batch_rng;
use crate::sphopt::maximize_on_sphere;
use crate::vecops::{dist, dot, neg, norm, scale};

/// Fixed seed for the random starts of the support search; the search is a
/// pure function of its arguments.
const START_SEED: u64 = 0x5EED;
/// Candidates whose value is within this relative gap of the best one are
/// compared for maximizer ambiguity.
const AMBIGUITY_VALUE_TOL: f64 = 1e-10;
/// Distinct maximizers further apart than this flag a flat support face.
/// Genuine flat faces put candidates O(1) apart; smooth gauges with locally
/// flat objectives (a q-norm near an axis) scatter them by about the cube
/// root of the small coordinate, so the threshold sits well above that.
const AMBIGUITY_DIST_TOL: f64 = 1e-2;

/// Result of one support maximization.
#[derive(Clone, Debug)]
pub struct DualEvaluation {
    /// The dual gauge value H_0(x).
    pub value: f64,
    /// The maximizing point on { H = 1 }, i.e. grad H_0(x). `None` at x = 0.
    pub maximizer: Option<Vec<f64>>,
    /// Objective evaluations spent.
    pub iterations: usize,
    /// First-order stationarity residual of the best point, scaled by 1+|x|.
    pub residual: f64,
}

struct SearchOutcome {
    omega: Vec<f64>,
    value: f64,
    evals: usize,
    residual: f64,
    converged: bool,
    /// Polished endpoints, for ambiguity detection.
    candidates: Vec<(Vec<f64>, f64)>,
}

/// Maximize `<x, omega> / H(omega)` over the unit sphere.
///
/// Starts: the 2N signed axes plus max(8, 4N) seeded random directions. For
/// a convex gauge the objective is quasi-concave where positive, so only the
/// best six starts are polished; any unpolished start sits below a polished
/// value and cannot hide a better maximum.
fn support_search(g: &Gauge, x: &[f64]) -> SearchOutcome {
    let dim = g.dim();
    let phi = |w: &[f64]| dot(x, w) / g.eval(w).expect("dimension checked");
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut w = vec![0.0; dim];
            w[i] = sign;
            starts.push(w);
        }
    }
    let mut rng = batch_rng(START_SEED, 0);
    for _ in 0..8.max(4 * dim) {
        starts.push(crate::quad::unit_sphere_dir(&mut rng, dim));
    }
    let mut order: Vec<usize> = (0..starts.len()).collect();
    let initial: Vec<f64> = starts.iter().map(|w| phi(w)).collect();
    order.sort_by(|&a, &b| initial[b].partial_cmp(&initial[a]).unwrap().then(a.cmp(&b)));

    let mut evals = starts.len();
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    for &idx in order.iter().take(6) {
        let out = maximize_on_sphere(&phi, &starts[idx], 60);
        evals += out.evals;
        candidates.push((out.omega.clone(), out.value));
        let better = match &best {
            None => true,
            Some((_, v, _)) => out.value > *v,
        };
        if better {
            best = Some((out.omega, out.value, out.converged));
        }
    }
    let (omega, value, converged) = best.expect("at least one start");
    let residual = stationarity_residual(g, x, &omega, value);
    SearchOutcome { omega, value, evals, residual, converged, candidates }
}

/// Norm of the tangential gradient of the support objective at `omega`,
/// scaled by 1 + |x|. Falls back to a bracket-width proxy where the gauge
/// gradient is unavailable.
fn stationarity_residual(g: &Gauge, x: &[f64], omega: &[f64], value: f64) -> f64 {
    let scale_inv = 1.0 / (1.0 + norm(x));
    match (g.eval(omega), g.grad(omega)) {
        (Ok(h), Ok(gh)) => {
            let v: Vec<f64> = (0..x.len()).map(|i| (x[i] - value * gh[i]) / h).collect();
            let tangential: Vec<f64> = {
                let c = dot(&v, omega);
                (0..v.len()).map(|i| v[i] - c * omega[i]).collect()
            };
            norm(&tangential) * scale_inv
        }
        _ => 3e-9 * (1.0 + value.abs()) * scale_inv,
    }
}

/// Evaluate the dual gauge H_0 at `x` by support maximization.
pub fn dual_eval(g: &Gauge, x: &[f64]) -> Result<DualEvaluation> {
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: x.len() });
    }
    if norm(x) == 0.0 {
        return Ok(DualEvaluation { value: 0.0, maximizer: None, iterations: 0, residual: 0.0 });
    }
    let out = support_search(g, x);
    if !out.converged && out.residual > 1e-8 {
        return Err(Error::DualConvergence { value: out.value, residual: out.residual });
    }
    let h = g.eval(&out.omega)?;
    Ok(DualEvaluation {
        value: out.value,
        maximizer: Some(scale(&out.omega, 1.0 / h)),
        iterations: out.evals,
        residual: out.residual,
    })
}

/// Evaluate the reflected dual `x -> H_0(-x)`, the support function of the
/// reflected gauge; this is the radial function generating the balls on
/// which all flux and level-set computations live.
pub fn dual_hat_eval(g: &Gauge, x: &[f64]) -> Result<DualEvaluation> {
    dual_eval(g, &neg(x))
}

/// Gradient of H_0 at `x != 0`: the support maximizer itself. Errors if two
/// polished runs settle on distant maximizers at the same value, which means
/// the unit ball has a flat face touching the supporting hyperplane.
pub fn dual_grad(g: &Gauge, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: x.len() });
    }
    if norm(x) == 0.0 {
        return Err(Error::SingularPoint);
    }
    let out = support_search(g, x);
    if !out.converged && out.residual > 1e-8 {
        return Err(Error::DualConvergence { value: out.value, residual: out.residual });
    }
    let best_xi = scale(&out.omega, 1.0 / g.eval(&out.omega)?);
    for (omega, value) in &out.candidates {
        if (out.value - value).abs() <= AMBIGUITY_VALUE_TOL * (1.0 + out.value.abs()) {
            let xi = scale(omega, 1.0 / g.eval(omega)?);
            let d = dist(&xi, &best_xi);
            if d > AMBIGUITY_DIST_TOL {
                return Err(Error::AmbiguousMaximizer {
                    distance: d,
                    value_gap: (out.value - value).abs(),
                });
            }
        }
    }
    Ok(best_xi)
}

/// The dual gauge in closed form, where the family admits one:
/// Euclidean is self-dual, q-norms dualize to the conjugate exponent,
/// `||M xi||_q` dualizes to `||M^{-T} x||_{q'}`, and ellipsoids invert their
/// matrix. The drifted family has no closed form here and returns `None`.
pub fn closed_form_dual(g: &Gauge) -> Option<Gauge> {
    match g.kind() {
        Kind::Euclidean => Some(Gauge::euclidean(g.dim())),
        Kind::PNorm { q } => Some(Gauge::pnorm(g.dim(), conjugate(*q)).expect("conjugate exponent valid")),
        Kind::LinearImage { matrix, q } => {
            let inv_t = matrix.clone().lu().try_inverse().expect("validated invertible").transpose();
            Some(
                Gauge::linear_image(matrix_rows(&inv_t), conjugate(*q))
                    .expect("inverse transpose stays invertible"),
            )
        }
        Kind::Ellipsoid { matrix } => {
            let inv = matrix.clone().lu().try_inverse().expect("validated SPD");
            let sym = (&inv + inv.transpose()) * 0.5;
            Some(Gauge::ellipsoid(matrix_rows(&sym)).expect("inverse of SPD is SPD"))
        }
        Kind::Drifted { .. } => None,
    }
}

fn conjugate(q: f64) -> f64 {
    q / (q - 1.0)
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Evaluation handle for a dual gauge: closed form where available, support
/// search otherwise. The gradient falls back to the search maximizer at
/// points where a closed-form dual refuses to differentiate.
#[derive(Clone, Debug)]
pub struct DualGauge {
    primal: Gauge,
    closed: Option<Gauge>,
}

impl DualGauge {
    pub fn of(primal: &Gauge) -> Self {
        Self { primal: primal.clone(), closed: closed_form_dual(primal) }
    }

    pub fn primal(&self) -> &Gauge {
        &self.primal
    }

    pub fn closed_form(&self) -> Option<&Gauge> {
        self.closed.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.primal.dim()
    }

    /// H_0(x).
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match &self.closed {
            Some(g) => g.eval(x),
            None => Ok(dual_eval(&self.primal, x)?.value),
        }
    }

    /// grad H_0(x).
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.closed {
            Some(g) => match g.grad(x) {
                Ok(v) => Ok(v),
                Err(Error::NonDifferentiable { .. }) => dual_grad(&self.primal, x),
                Err(e) => Err(e),
            },
            None => dual_grad(&self.primal, x),
        }
    }
}
