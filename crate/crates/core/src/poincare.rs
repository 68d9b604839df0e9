//! Radial Poincaré inequality on star-shaped-by-rays domains.
//!
//! A radial center `P` of a domain is a point from which every ray meets the
//! domain in finitely many enter/exit radii. Collecting the exit radii of
//! all segments gives the *back* contact set; the enter radii give the
//! *front* set. If `f` vanishes on the back set, then
//!
//! ```text
//! ||f||_{L^p} <= d * ||grad f||_{L^p},
//! ```
//!
//! where `d` is the *radial width*: the longest enter-to-exit segment over
//! all rays. The width can be far smaller than the diameter — for a ball of
//! radius 1 probed from a distant center the width is 2, but from its own
//! center it is 1 — which is exactly what makes the inequality useful.
//!
//! This module supports the three domain shapes with analytically known
//! contact sets (cone shells, unions of cone shells, and balls with an
//! arbitrary radial center), builds seeded families of admissible test
//! functions with analytic gradients, and measures the ratio of norms by
//! polar quadrature.
//!
//! # Example
//!
//! ```
//! use finsler_liouville::cone::ConvexCone;
//! use finsler_liouville::poincare::{poincare_ratio, radial_family, RadialDomain};
//! use finsler_liouville::QuadratureSpec;
//!
//! // A fan shell: the part of the annulus 1 < |x| < 2 inside the quadrant.
//! let cone = ConvexCone::orthant(2, 2).unwrap();
//! let dom = RadialDomain::fan_shell(cone, 1.0, 2.0).unwrap();
//! assert_eq!(dom.radial_width(), 1.0);
//!
//! // Every admissible test function obeys ||f||_p <= width * ||grad f||_p.
//! let quad = QuadratureSpec::tensor(8_000, 3);
//! for f in radial_family(&dom, 4, 9) {
//!     let r = poincare_ratio(&dom, &f, 2.0, &quad).unwrap();
//!     assert!(r.pass && r.ratio <= r.bound * (1.0 + 3.0 * r.sigma_rel));
//! }
//! ```

use crate::cone::{wulff_shell_integral, ConvexCone, Region};
use crate::dual::DualGauge;
use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::liouville::interior_directions;
use crate::quad::{batch_rng, unit_sphere_dir, Estimate, QuadratureSpec};
use crate::vecops::{dot, norm};
use rand::Rng;

/// Which contact set along rays from the radial center.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContactSide {
    /// Enter radii (first hits of each segment).
    Front,
    /// Exit radii (last hits of each segment) — where test functions must
    /// vanish.
    Back,
}

/// A domain with a radial center and analytically known contact sets.
#[derive(Clone, Debug)]
pub enum RadialDomain {
    /// `(B_outer \ B_inner) ∩ C`, radial center at the origin.
    FanShell { cone: ConvexCone, inner: f64, outer: f64 },
    /// A disjoint union of concentric fan shells, radial center at the
    /// origin.
    MultiShell { cone: ConvexCone, shells: Vec<(f64, f64)> },
    /// The ball `B_radius(0)` probed from an arbitrary radial center `p`.
    Ball { radius: f64, p: Vec<f64> },
}

impl RadialDomain {
    pub fn fan_shell(cone: ConvexCone, inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && outer > inner) {
            return Err(Error::InvalidDomain(format!(
                "shell radii must satisfy 0 <= {inner} < {outer}"
            )));
        }
        Ok(Self::FanShell { cone, inner, outer })
    }

    pub fn multi_shell(cone: ConvexCone, shells: Vec<(f64, f64)>) -> Result<Self> {
        if shells.is_empty() {
            return Err(Error::InvalidDomain("need at least one shell".into()));
        }
        for (i, &(a, b)) in shells.iter().enumerate() {
            if !(a >= 0.0 && b > a) {
                return Err(Error::InvalidDomain(format!("bad shell ({a}, {b})")));
            }
            if i > 0 && a <= shells[i - 1].1 {
                return Err(Error::InvalidDomain(
                    "shells must be disjoint and sorted outward".into(),
                ));
            }
        }
        Ok(Self::MultiShell { cone, shells })
    }

    pub fn ball(radius: f64, p: Vec<f64>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidDomain(format!("radius must be positive, got {radius}")));
        }
        if p.len() < 2 {
            return Err(Error::InvalidDomain("radial center needs dimension >= 2".into()));
        }
        Ok(Self::Ball { radius, p })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::FanShell { cone, .. } | Self::MultiShell { cone, .. } => cone.dim(),
            Self::Ball { p, .. } => p.len(),
        }
    }

    /// The radial center `P`.
    pub fn radial_center(&self) -> Vec<f64> {
        match self {
            Self::FanShell { cone, .. } | Self::MultiShell { cone, .. } => vec![0.0; cone.dim()],
            Self::Ball { p, .. } => p.clone(),
        }
    }

    /// Radial width: the longest enter-to-exit segment over all rays.
    pub fn radial_width(&self) -> f64 {
        match self {
            Self::FanShell { inner, outer, .. } => outer - inner,
            Self::MultiShell { shells, .. } => shells
                .iter()
                .map(|(a, b)| b - a)
                .fold(0.0, f64::max),
            Self::Ball { radius, p } => radius + norm(p).min(*radius),
        }
    }

    /// Enter/exit radii of the ray `P + t w`, `t > 0`, for a unit direction
    /// `w`. Segments are sorted outward; an enter radius of zero means the
    /// ray starts inside the domain.
    pub fn ray_segments(&self, w: &[f64]) -> Result<Vec<(f64, f64)>> {
        if w.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: w.len() });
        }
        match self {
            Self::FanShell { cone, inner, outer } => {
                if cone.classify(w, 1e-12) == Region::Outside {
                    return Ok(vec![]);
                }
                Ok(vec![(*inner, *outer)])
            }
            Self::MultiShell { cone, shells } => {
                if cone.classify(w, 1e-12) == Region::Outside {
                    return Ok(vec![]);
                }
                Ok(shells.clone())
            }
            Self::Ball { radius, p } => {
                let b = dot(p, w);
                let c = dot(p, p) - radius * radius;
                let disc = b * b - c;
                if disc <= 0.0 {
                    return Ok(vec![]);
                }
                let t_plus = -b + disc.sqrt();
                if t_plus <= 0.0 {
                    return Ok(vec![]);
                }
                let t_minus = (-b - disc.sqrt()).max(0.0);
                Ok(vec![(t_minus, t_plus)])
            }
        }
    }

    /// Sampled points of the requested contact set, certified by the ray
    /// classification that produced them. May return fewer than `n` points
    /// when the set is empty (a front set can be empty, a back set cannot).
    pub fn contact_points(&self, n: usize, side: ContactSide, seed: u64) -> Result<Vec<Vec<f64>>> {
        let dim = self.dim();
        let center = self.radial_center();
        let mut points = Vec::with_capacity(n);
        let mut rng = batch_rng(seed, 0);
        let mut attempts = 0usize;
        while points.len() < n {
            attempts += 1;
            if attempts > 10_000 * n.max(1) {
                break;
            }
            let w = match self {
                Self::FanShell { cone, .. } | Self::MultiShell { cone, .. } => {
                    match interior_directions(cone, 1, 1e-6, seed ^ attempts as u64) {
                        Ok(mut d) => d.pop().unwrap(),
                        Err(e) => return Err(e),
                    }
                }
                Self::Ball { .. } => unit_sphere_dir(&mut rng, dim),
            };
            for &(enter, exit) in &self.ray_segments(&w)? {
                let radius = match side {
                    ContactSide::Back => exit,
                    ContactSide::Front => {
                        if enter <= 0.0 {
                            continue;
                        }
                        enter
                    }
                };
                if points.len() < n {
                    points.push((0..dim).map(|i| center[i] + radius * w[i]).collect());
                }
            }
        }
        Ok(points)
    }

    /// Membership predicate for a contact set, used to confirm that points
    /// sampled with different seeds classify identically.
    pub fn on_contact(&self, x: &[f64], side: ContactSide, tol: f64) -> bool {
        match self {
            Self::FanShell { cone, inner, outer } => {
                if cone.classify(x, tol) == Region::Outside {
                    return false;
                }
                let r = norm(x);
                match side {
                    ContactSide::Back => (r - outer).abs() <= tol,
                    ContactSide::Front => *inner > 0.0 && (r - inner).abs() <= tol,
                }
            }
            Self::MultiShell { cone, shells } => {
                if cone.classify(x, tol) == Region::Outside {
                    return false;
                }
                let r = norm(x);
                shells.iter().any(|&(a, b)| match side {
                    ContactSide::Back => (r - b).abs() <= tol,
                    ContactSide::Front => a > 0.0 && (r - a).abs() <= tol,
                })
            }
            Self::Ball { radius, p } => {
                if (norm(x) - radius).abs() > tol {
                    return false;
                }
                let shifted: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi - pi).collect();
                let outward = dot(&shifted, x);
                match side {
                    ContactSide::Back => outward > -tol,
                    ContactSide::Front => outward < tol,
                }
            }
        }
    }

    /// The Euclidean shell decomposition about the origin, used by the polar
    /// quadrature: (cone, list of radial intervals).
    fn quadrature_shells(&self) -> (ConvexCone, Vec<(f64, f64)>) {
        match self {
            Self::FanShell { cone, inner, outer } => (cone.clone(), vec![(*inner, *outer)]),
            Self::MultiShell { cone, shells } => (cone.clone(), shells.clone()),
            Self::Ball { radius, p } => {
                (ConvexCone::full_space(p.len()), vec![(0.0, *radius)])
            }
        }
    }
}

/// A test function with an analytic gradient and a declared vanishing set.
pub struct TestFunction {
    label: String,
    #[allow(clippy::type_complexity)]
    f: Box<dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync>,
}

impl TestFunction {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), f: Box::new(f) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.f)(x)
    }
}

impl TestFunction {
    fn boxed(
        label: String,
        f: Box<dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync>,
    ) -> Self {
        Self { label, f }
    }
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TestFunction({})", self.label)
    }
}

/// Dense polynomial of total degree <= 3 with analytic gradient.
#[derive(Clone, Debug)]
struct Poly {
    terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    fn random(dim: usize, rng: &mut impl Rng) -> Self {
        let mut terms = Vec::new();
        let mut exps = vec![0u32; dim];
        loop {
            if exps.iter().sum::<u32>() <= 3 {
                terms.push((rng.gen_range(-1.0..1.0), exps.clone()));
            }
            // Odometer over {0,..,3}^dim.
            let mut i = 0;
            loop {
                if i == dim {
                    return Self { terms };
                }
                exps[i] += 1;
                if exps[i] <= 3 {
                    break;
                }
                exps[i] = 0;
                i += 1;
            }
        }
    }

    fn eval_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for (c, exps) in &self.terms {
            let mut monomial = *c;
            for (xi, &e) in x.iter().zip(exps) {
                monomial *= xi.powi(e as i32);
            }
            value += monomial;
            for j in 0..x.len() {
                let e = exps[j];
                if e == 0 {
                    continue;
                }
                let mut d = *c * e as f64;
                for (k, (xi, &ek)) in x.iter().zip(exps).enumerate() {
                    let p = if k == j { ek - 1 } else { ek };
                    d *= xi.powi(p as i32);
                }
                grad[j] += d;
            }
        }
        (value, grad)
    }
}

/// The distance-to-back-contact factor of a domain: a Lipschitz function
/// vanishing exactly on the back contact set, with analytic gradient.
fn vanishing_factor(dom: &RadialDomain) -> Box<dyn Fn(&[f64]) -> (f64, Vec<f64>) + Send + Sync> {
    match dom {
        RadialDomain::FanShell { outer, .. } => {
            let outer = *outer;
            Box::new(move |x| {
                let r = norm(x);
                (outer - r, x.iter().map(|xi| -xi / r).collect())
            })
        }
        RadialDomain::MultiShell { shells, .. } => {
            let shells = shells.clone();
            Box::new(move |x| {
                let r = norm(x);
                for &(a, b) in &shells {
                    if r >= a - 1e-12 && r <= b + 1e-12 {
                        return (b - r, x.iter().map(|xi| -xi / r).collect());
                    }
                }
                (0.0, vec![0.0; x.len()])
            })
        }
        RadialDomain::Ball { radius, .. } => {
            let radius = *radius;
            Box::new(move |x| {
                let r = norm(x);
                if r == 0.0 {
                    return (radius, vec![0.0; x.len()]);
                }
                (radius - r, x.iter().map(|xi| -xi / r).collect())
            })
        }
    }
}

/// Seeded family of admissible test functions on a domain: the vanishing
/// factor alone, its square (a pure radial profile), and products of the
/// factor with random degree-<=3 polynomials.
pub fn radial_family(dom: &RadialDomain, count: usize, seed: u64) -> Vec<TestFunction> {
    let dim = dom.dim();
    let mut rng = batch_rng(seed, 1);
    let mut family = Vec::with_capacity(count);
    for i in 0..count {
        let w = vanishing_factor(dom);
        let tf = match i {
            0 => TestFunction::boxed("factor".into(), Box::new(move |x| w(x))),
            1 => TestFunction::boxed(
                "factor squared".into(),
                Box::new(move |x| {
                    let (v, g) = w(x);
                    (v * v, g.iter().map(|gi| 2.0 * v * gi).collect())
                }),
            ),
            _ => {
                let poly = Poly::random(dim, &mut rng);
                TestFunction::boxed(
                    format!("factor times polynomial {i}"),
                    Box::new(move |x| {
                        let (wv, wg) = w(x);
                        let (qv, qg) = poly.eval_grad(x);
                        let grad = (0..x.len()).map(|j| wg[j] * qv + wv * qg[j]).collect();
                        (wv * qv, grad)
                    }),
                )
            }
        };
        family.push(tf);
    }
    family
}

/// Family vanishing on the boundary zone `{x_N > -eps}` of the unit ball:
/// the quadratic hinge `max(0, -eps - x_N)^2` times random polynomials.
pub fn cap_family(dim: usize, eps: f64, count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = batch_rng(seed, 2);
    let mut family = Vec::with_capacity(count);
    for i in 0..count {
        let hinge = move |x: &[f64]| -> (f64, Vec<f64>) {
            let slack = -eps - x[dim - 1];
            let mut grad = vec![0.0; dim];
            if slack <= 0.0 {
                return (0.0, grad);
            }
            grad[dim - 1] = -2.0 * slack;
            (slack * slack, grad)
        };
        let tf = if i == 0 {
            TestFunction::boxed("hinge".into(), Box::new(hinge))
        } else {
            let poly = Poly::random(dim, &mut rng);
            TestFunction::boxed(
                format!("hinge times polynomial {i}"),
                Box::new(move |x| {
                    let (wv, wg) = hinge(x);
                    let (qv, qg) = poly.eval_grad(x);
                    let grad = (0..x.len()).map(|j| wg[j] * qv + wv * qg[j]).collect();
                    (wv * qv, grad)
                }),
            )
        };
        family.push(tf);
    }
    family
}

/// Result of one ratio measurement.
#[derive(Clone, Copy, Debug)]
pub struct PoincareRatio {
    /// `||f||_p / ||grad f||_p`.
    pub ratio: f64,
    /// The radial width of the domain.
    pub bound: f64,
    /// Relative quadrature noise of the ratio.
    pub sigma_rel: f64,
    /// `ratio <= bound * (1 + 3 sigma_rel)`.
    pub pass: bool,
}

/// Both norms of one function by polar quadrature about the origin.
fn domain_norms(
    dom: &RadialDomain,
    f: &TestFunction,
    p: f64,
    quad: &QuadratureSpec,
) -> Result<(Estimate, Estimate)> {
    let (cone, shells) = dom.quadrature_shells();
    let euclid = DualGauge::of(&Gauge::euclidean(dom.dim()));
    let center = vec![0.0; dom.dim()];
    let mut value_norm = Estimate::exact(0.0);
    let mut grad_norm = Estimate::exact(0.0);
    for &(a, b) in &shells {
        let v = wulff_shell_integral(&euclid, &cone, &center, a, b, quad, &|x| {
            Ok(f.eval(x).0.abs().powf(p))
        })?;
        let g = wulff_shell_integral(&euclid, &cone, &center, a, b, quad, &|x| {
            Ok(norm(&f.eval(x).1).powf(p))
        })?;
        value_norm = value_norm.plus(&v);
        grad_norm = grad_norm.plus(&g);
    }
    Ok((value_norm, grad_norm))
}

/// Measure `||f||_p / ||grad f||_p` and compare against the radial width.
///
/// The vanishing hypothesis is validated first on sampled back-contact
/// points; a function that fails it (for example a nonzero constant) is
/// rejected with a hypothesis error, mirroring the fact that the inequality
/// itself fails without the hypothesis.
pub fn poincare_ratio(
    dom: &RadialDomain,
    f: &TestFunction,
    p: f64,
    quad: &QuadratureSpec,
) -> Result<PoincareRatio> {
    if !(p >= 1.0) {
        return Err(Error::InvalidDomain(format!("exponent p must be >= 1, got {p}")));
    }
    let back = dom.contact_points(64, ContactSide::Back, 0xBACC)?;
    for x in &back {
        let (v, _) = f.eval(x);
        if v.abs() > 1e-12 {
            return Err(Error::Hypothesis(format!(
                "function '{}' does not vanish on the back contact set: |f| = {:.3e} at {x:?}",
                f.label(),
                v.abs()
            )));
        }
    }
    let (value_norm, grad_norm) = domain_norms(dom, f, p, quad)?;
    if grad_norm.value <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "function '{}' has zero gradient norm",
            f.label()
        )));
    }
    let ratio = (value_norm.value / grad_norm.value).powf(1.0 / p);
    let rel_f =
        if value_norm.value > 0.0 { value_norm.std_err / value_norm.value } else { 0.0 };
    let sigma_rel = (rel_f + grad_norm.std_err / grad_norm.value) / p;
    let bound = dom.radial_width();
    Ok(PoincareRatio { ratio, bound, sigma_rel, pass: ratio <= bound * (1.0 + 3.0 * sigma_rel) })
}

/// Constants of the two unit-ball families.
#[derive(Clone, Copy, Debug)]
pub struct BallConstants {
    /// Largest ratio over the family vanishing on the whole boundary.
    pub zero_boundary_max_ratio: f64,
    /// Its bound: the width from the ball's own center, exactly 1.
    pub zero_boundary_bound: f64,
    pub zero_boundary_pass: bool,
    /// Largest ratio over the family vanishing only on `{x_N > -eps}`.
    pub cap_max_ratio: f64,
    /// Its bound: the width from the distant center `(0,..,0,-1/eps)`,
    /// exactly 2.
    pub cap_bound: f64,
    pub cap_pass: bool,
}

/// Reproduce the two unit-ball constants: 1 for functions vanishing on the
/// whole boundary, 2 for functions vanishing only on the boundary zone
/// `{x_N > -eps}`, probed from the radial center `(0,...,0,-1/eps)`.
pub fn corollary_ball_check(
    dim: usize,
    p: f64,
    eps: f64,
    family_size: usize,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<BallConstants> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidDomain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let centered = RadialDomain::ball(1.0, vec![0.0; dim])?;
    let mut zero_boundary_max = 0.0f64;
    let mut zero_pass = true;
    for f in radial_family(&centered, family_size, seed) {
        let r = poincare_ratio(&centered, &f, p, quad)?;
        zero_boundary_max = zero_boundary_max.max(r.ratio);
        zero_pass &= r.pass;
    }

    let mut far_center = vec![0.0; dim];
    far_center[dim - 1] = -1.0 / eps;
    let probed = RadialDomain::ball(1.0, far_center)?;
    let mut cap_max = 0.0f64;
    let mut cap_pass = true;
    for f in cap_family(dim, eps, family_size, seed) {
        let r = poincare_ratio(&probed, &f, p, quad)?;
        cap_max = cap_max.max(r.ratio);
        cap_pass &= r.pass;
    }

    Ok(BallConstants {
        zero_boundary_max_ratio: zero_boundary_max,
        zero_boundary_bound: centered.radial_width(),
        zero_boundary_pass: zero_pass,
        cap_max_ratio: cap_max,
        cap_bound: probed.radial_width(),
        cap_pass,
    })
}
