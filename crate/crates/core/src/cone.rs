//! Convex cones, Wulff balls, and anisotropic perimeter.
//!
//! A cone here is a product `C = R^k x C~` of a line factor and a pointed
//! polyhedral cone `C~ = { y : <n_j, y> <= 0 }` with vertex at the origin,
//! stored by its unit facet normals (H-representation). Membership and facet
//! normals are O(#facets), which covers the full space, half-spaces, and
//! orthants along with arbitrary user normals.
//!
//! On top of the cone sit the integration primitives everything else uses:
//!
//! * [`SphereDomain`]: the trace `C ∩ S^{N-1}` as an exact angular region
//!   (arcs in the plane, a `(cos theta, phi)` box in space for coordinate
//!   cones) or a membership indicator for everything else;
//! * [`wulff_shell_integral`]: volume integrals over `{a <= K(x-x0) <= b} ∩ C`
//!   where `K` is a dual gauge, in the polar form `dx = tau^{N-1}/K(w)^N dtau dsigma`;
//! * [`wulff_sphere_integral`]: surface integrals over `∂{K = R} ∩ C` via the
//!   radial graph `w -> R w / K(w)` and its exact Jacobian;
//! * [`WulffCap`], [`TestBody`], [`anisotropic_perimeter`], and the
//!   isoperimetric comparison against the Wulff quotient.
//!
//! Relative perimeter never counts boundary lying on `∂C`: quadrature runs
//! strictly inside the open cone.
//!
//! # Example
//!
//! ```
//! use finsler_liouville::cone::{ConvexCone, WulffCap};
//! use finsler_liouville::gauge::Gauge;
//! use finsler_liouville::QuadratureSpec;
//!
//! // The first quadrant of the plane: a pointed cone with two facets.
//! let cone = ConvexCone::orthant(2, 2).unwrap();
//! assert_eq!(cone.facet_count(), 2);
//! assert!(cone.contains(&[0.5, 2.0]) && !cone.contains(&[-0.5, 2.0]));
//!
//! // For the Euclidean gauge the unit cap is a quarter disc.
//! let cap = WulffCap::new(&Gauge::euclidean(2), &cone, &[0.0, 0.0], 1.0).unwrap();
//! let quad = QuadratureSpec::tensor(20_000, 7);
//! let measure = cap.measure(&quad).unwrap();
//! assert!((measure.value - std::f64::consts::PI / 4.0).abs() < 1e-6);
//! ```

use rand::Rng;

use crate::dual::DualGauge;
use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::quad::{
    batch_rng, gauss_legendre_on, pairwise_sum, unit_sphere_area, unit_sphere_dir, Estimate,
    QuadMethod, QuadratureSpec,
};
use crate::vecops::{dot, norm, scale};

/// Relative gap below which an isoperimetric quotient counts as the Wulff one.
pub const EQUALITY_REL_TOL: f64 = 1e-3;
/// Admissible centers must sit on the line factor to this relative precision.
const CENTER_TOL: f64 = 1e-12;
const MC_BATCHES: usize = 32;

/// Where a point sits relative to the closed cone.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Inside,
    Boundary,
    Outside,
}

/// `C = R^k x C~` with `C~` a pointed polyhedral cone in the last `dim - k`
/// coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexCone {
    dim: usize,
    k: usize,
    /// Unit facet normals of `C~`, each of length `dim - k`.
    normals: Vec<Vec<f64>>,
}

impl ConvexCone {
    /// Build a cone from the line-factor dimension and the facet normals of
    /// the pointed factor. Normals are normalized; they must span the factor
    /// (otherwise `C~` contains a line and the representation is invalid).
    pub fn new(dim: usize, k: usize, normals: Vec<Vec<f64>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidCone(format!("dimension must be at least 2, got {dim}")));
        }
        if k > dim {
            return Err(Error::InvalidCone(format!("line factor {k} exceeds dimension {dim}")));
        }
        if k == dim {
            if !normals.is_empty() {
                return Err(Error::InvalidCone("full space admits no facet normals".into()));
            }
            return Ok(Self { dim, k, normals });
        }
        let m = dim - k;
        if normals.is_empty() {
            return Err(Error::InvalidCone(format!(
                "a pointed factor of dimension {m} needs at least {m} normals"
            )));
        }
        let mut unit = Vec::with_capacity(normals.len());
        for n in &normals {
            if n.len() != m {
                return Err(Error::InvalidCone(format!(
                    "normal length {} does not match factor dimension {m}",
                    n.len()
                )));
            }
            let len = norm(n);
            if len < 1e-14 {
                return Err(Error::InvalidCone("zero facet normal".into()));
            }
            unit.push(scale(n, 1.0 / len));
        }
        let mat = nalgebra::DMatrix::from_fn(unit.len(), m, |i, j| unit[i][j]);
        if mat.rank(1e-9) < m {
            return Err(Error::InvalidCone(
                "facet normals do not span the pointed factor (cone contains a line)".into(),
            ));
        }
        Ok(Self { dim, k, normals: unit })
    }

    /// All of R^dim.
    pub fn full_space(dim: usize) -> Self {
        Self::new(dim, dim, Vec::new()).expect("full space is always valid")
    }

    /// The half-space where the last coordinate is nonnegative.
    pub fn half_space(dim: usize) -> Self {
        Self::new(dim, dim - 1, vec![vec![-1.0]]).expect("half-space is always valid")
    }

    /// The cone where the last `m` coordinates are nonnegative.
    pub fn orthant(dim: usize, m: usize) -> Result<Self> {
        if m == 0 || m > dim {
            return Err(Error::InvalidCone(format!(
                "orthant constraint count {m} must lie in 1..={dim}"
            )));
        }
        let normals = (0..m)
            .map(|i| {
                let mut n = vec![0.0; m];
                n[i] = -1.0;
                n
            })
            .collect();
        Self::new(dim, dim - m, normals)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the line factor.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn facet_count(&self) -> usize {
        self.normals.len()
    }

    /// Facet normal of `C~` embedded into R^dim (zeros on the line factor).
    pub fn embedded_normal(&self, j: usize) -> Vec<f64> {
        let mut n = vec![0.0; self.dim];
        n[self.k..].copy_from_slice(&self.normals[j]);
        n
    }

    fn facet_values(&self, x: &[f64]) -> Vec<f64> {
        let tail = &x[self.k..];
        self.normals.iter().map(|n| dot(n, tail)).collect()
    }

    /// Classify a point against the facets with an absolute slack `tol`.
    pub fn classify(&self, x: &[f64], tol: f64) -> Region {
        if x.len() != self.dim || self.k == self.dim {
            return if x.len() == self.dim { Region::Inside } else { Region::Outside };
        }
        let worst = self.facet_values(x).into_iter().fold(f64::NEG_INFINITY, f64::max);
        if worst > tol {
            Region::Outside
        } else if worst < -tol {
            Region::Inside
        } else {
            Region::Boundary
        }
    }

    /// Membership in the closed cone (boundary counts).
    pub fn contains(&self, x: &[f64]) -> bool {
        self.classify(x, 1e-12) != Region::Outside
    }

    /// Outward unit normal of the unique facet through a boundary point.
    /// Points on edges or vertices (or not on the boundary at all) report how
    /// many facets were active instead.
    pub fn facet_normal(&self, x: &[f64], tol: f64) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if self.classify(x, tol) == Region::Outside {
            return Err(Error::Placement("point lies outside the closed cone".into()));
        }
        let values = self.facet_values(x);
        let active: Vec<usize> =
            (0..values.len()).filter(|&j| values[j].abs() <= tol).collect();
        if active.len() != 1 {
            return Err(Error::StratumPoint { active: active.len() });
        }
        Ok(self.embedded_normal(active[0]))
    }

    /// Whether `x0` is a valid concentration point for this cone: anywhere
    /// for the full space, on the line factor `R^k x {0}` for intermediate
    /// cones, and at the vertex for a fully pointed cone.
    pub fn is_admissible_center(&self, x0: &[f64]) -> bool {
        if x0.len() != self.dim {
            return false;
        }
        let slack = CENTER_TOL * (1.0 + norm(x0));
        x0[self.k..].iter().all(|v| v.abs() <= slack)
    }

    /// The trace of the cone on the unit sphere, as exact a description as
    /// the facet structure allows.
    pub fn sphere_domain(&self) -> SphereDomain {
        SphereDomain::of(self)
    }

    /// Surface measure of `C ∩ S^{N-1}`.
    pub fn solid_angle(&self, quad: &QuadratureSpec) -> Result<Estimate> {
        self.sphere_domain().integrate(self, quad, &|_| Ok(1.0))
    }
}

/// `C ∩ S^{N-1}` in a form quadrature can consume.
#[derive(Clone, Debug, PartialEq)]
pub enum SphereDomain {
    /// Planar case: disjoint angle intervals within `[0, 2*pi)`.
    Arcs(Vec<(f64, f64)>),
    /// Spatial coordinate cones: a box in `(cos theta, phi)`, whose product
    /// measure is exactly the spherical area element.
    PolarBox { c: (f64, f64), phi: (f64, f64) },
    /// Anything else: integrate over the full sphere against a membership
    /// indicator (Monte Carlo only).
    Indicator(usize),
}

impl SphereDomain {
    pub fn of(cone: &ConvexCone) -> Self {
        match cone.dim() {
            2 => Self::Arcs(plane_arcs(cone)),
            3 => coordinate_box(cone).unwrap_or(Self::Indicator(3)),
            d => Self::Indicator(d),
        }
    }

    /// Exact surface measure, where the description is exact.
    pub fn measure_exact(&self) -> Option<f64> {
        match self {
            Self::Arcs(arcs) => Some(arcs.iter().map(|(s, e)| e - s).sum()),
            Self::PolarBox { c, phi } => Some((c.1 - c.0) * (phi.1 - phi.0)),
            Self::Indicator(_) => None,
        }
    }

    /// Deterministic angular nodes `(direction, weight)` with `n` Gauss
    /// points per axis, for the exact descriptions.
    fn tensor_nodes(&self, n: usize) -> Option<Vec<(Vec<f64>, f64)>> {
        match self {
            Self::Arcs(arcs) => {
                let mut out = Vec::new();
                for &(s, e) in arcs {
                    let (t, w) = gauss_legendre_on(n, s, e);
                    for i in 0..n {
                        out.push((vec![t[i].cos(), t[i].sin()], w[i]));
                    }
                }
                Some(out)
            }
            Self::PolarBox { c, phi } => {
                let (tc, wc) = gauss_legendre_on(n, c.0, c.1);
                let (tp, wp) = gauss_legendre_on(n, phi.0, phi.1);
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    let s = (1.0 - tc[i] * tc[i]).max(0.0).sqrt();
                    for j in 0..n {
                        out.push((
                            vec![s * tp[j].cos(), s * tp[j].sin(), tc[i]],
                            wc[i] * wp[j],
                        ));
                    }
                }
                Some(out)
            }
            Self::Indicator(_) => None,
        }
    }

    /// Draw a direction uniformly w.r.t. surface measure on the domain.
    /// For [`SphereDomain::Indicator`] the draw is over the full sphere and
    /// the caller must weight by the membership indicator.
    fn sample_direction(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        match self {
            Self::Arcs(arcs) => {
                let total: f64 = arcs.iter().map(|(s, e)| e - s).sum();
                let mut u = rng.gen::<f64>() * total;
                for &(s, e) in arcs {
                    if u <= e - s {
                        let t = s + u;
                        return vec![t.cos(), t.sin()];
                    }
                    u -= e - s;
                }
                let t = arcs.last().map(|&(_, e)| e).unwrap_or(0.0);
                vec![t.cos(), t.sin()]
            }
            Self::PolarBox { c, phi } => {
                let ci = rng.gen_range(c.0..c.1);
                let ph = rng.gen_range(phi.0..phi.1);
                let s = (1.0 - ci * ci).max(0.0).sqrt();
                vec![s * ph.cos(), s * ph.sin(), ci]
            }
            Self::Indicator(dim) => unit_sphere_dir(rng, *dim),
        }
    }

    /// Integrate `f` over the domain against surface measure.
    pub fn integrate(
        &self,
        cone: &ConvexCone,
        quad: &QuadratureSpec,
        f: &dyn Fn(&[f64]) -> Result<f64>,
    ) -> Result<Estimate> {
        let angular_axes = if cone.dim() == 2 { 1 } else { cone.dim() - 1 };
        match (quad.method, self) {
            (QuadMethod::TensorPolar, Self::Indicator(_)) | (QuadMethod::MonteCarlo, _) => {
                mc_integrate(quad, &mut |rng| {
                    let w = self.sample_direction(rng);
                    let weight = match self.measure_exact() {
                        Some(m) => m,
                        None => indicator_weight(cone, &w),
                    };
                    if weight == 0.0 {
                        Ok(0.0)
                    } else {
                        Ok(weight * f(&w)?)
                    }
                })
            }
            (QuadMethod::TensorPolar, _) => {
                let n = quad.nodes_per_axis(angular_axes);
                let eval = |nodes: usize| -> Result<f64> {
                    let pts = self.tensor_nodes(nodes).expect("exact domain");
                    let mut terms = Vec::with_capacity(pts.len());
                    for (w, wt) in &pts {
                        terms.push(wt * f(w)?);
                    }
                    Ok(pairwise_sum(&terms))
                };
                let coarse = eval((n / 2).max(4))?;
                let fine = eval(n)?;
                Ok(Estimate::new(fine, refinement_err(fine, coarse)))
            }
        }
    }
}

/// Full-sphere-area weight times the membership indicator, for rejection
/// sampling against an [`SphereDomain::Indicator`].
fn indicator_weight(cone: &ConvexCone, w: &[f64]) -> f64 {
    if cone.classify(w, 1e-12) == Region::Inside {
        unit_sphere_area(cone.dim())
    } else {
        0.0
    }
}

fn refinement_err(fine: f64, coarse: f64) -> f64 {
    ((fine - coarse).abs()).max(1e-15 * fine.abs())
}

/// Batched Monte Carlo driver: fixed per-batch seeds, pairwise reduction,
/// standard error from the batch-mean spread.
pub(crate) fn mc_integrate(
    quad: &QuadratureSpec,
    sample: &mut dyn FnMut(&mut rand_chacha::ChaCha8Rng) -> Result<f64>,
) -> Result<Estimate> {
    let per_batch = (quad.budget / MC_BATCHES).max(8);
    let mut means = Vec::with_capacity(MC_BATCHES);
    for b in 0..MC_BATCHES {
        let mut rng = batch_rng(quad.seed, b as u64);
        let mut vals = Vec::with_capacity(per_batch);
        for _ in 0..per_batch {
            vals.push(sample(&mut rng)?);
        }
        means.push(pairwise_sum(&vals) / per_batch as f64);
    }
    let mean = pairwise_sum(&means) / MC_BATCHES as f64;
    let var_terms: Vec<f64> = means.iter().map(|m| (m - mean) * (m - mean)).collect();
    let var = pairwise_sum(&var_terms) / ((MC_BATCHES - 1) as f64 * MC_BATCHES as f64);
    Ok(Estimate::new(mean, var.max(0.0).sqrt()))
}

/// Angle intervals of `C ∩ S^1`: split the circle at all facet tangency
/// angles and keep the sub-arcs whose midpoints are inside.
fn plane_arcs(cone: &ConvexCone) -> Vec<(f64, f64)> {
    use std::f64::consts::TAU;
    if cone.k() == 2 {
        return vec![(0.0, TAU)];
    }
    let normals: Vec<Vec<f64>> = (0..cone.facet_count()).map(|j| cone.embedded_normal(j)).collect();
    let mut cuts = Vec::new();
    for n in &normals {
        let alpha = n[1].atan2(n[0]);
        for delta in [std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2] {
            cuts.push((alpha + delta).rem_euclid(TAU));
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if cuts.is_empty() {
        return vec![(0.0, TAU)];
    }
    let inside = |t: f64| {
        let w = [t.cos(), t.sin()];
        normals.iter().all(|n| dot(n, &w) < 0.0)
    };
    let mut arcs = Vec::new();
    for i in 0..cuts.len() {
        let s = cuts[i];
        let e = if i + 1 < cuts.len() { cuts[i + 1] } else { cuts[0] + TAU };
        if e - s > 1e-12 && inside(0.5 * (s + e)) {
            arcs.push((s, e));
        }
    }
    // Merge across the wrap and across shared cut points that are not walls.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, e) in arcs {
        match merged.last_mut() {
            Some(last) if (s - last.1).abs() < 1e-12 => last.1 = e,
            _ => merged.push((s, e)),
        }
    }
    if merged.len() > 1 {
        let first = merged[0];
        let last = *merged.last().unwrap();
        if ((last.1 - TAU) - first.0).abs() < 1e-12 {
            merged[0] = (last.0 - TAU, first.1);
            merged.pop();
        }
    }
    merged
}

/// The `(cos theta, phi)` box for spatial cones whose facets are negated
/// coordinate axes, i.e. intersections of `{x_i >= 0}`.
fn coordinate_box(cone: &ConvexCone) -> Option<SphereDomain> {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};
    let mut constrained = [false; 3];
    for j in 0..cone.facet_count() {
        let n = cone.embedded_normal(j);
        let mut axis = None;
        for (i, v) in n.iter().enumerate() {
            if (v + 1.0).abs() <= 1e-12 {
                axis = Some(i);
            } else if v.abs() > 1e-12 {
                return None;
            }
        }
        constrained[axis?] = true;
    }
    let c = if constrained[2] { (0.0, 1.0) } else { (-1.0, 1.0) };
    let phi = match (constrained[0], constrained[1]) {
        (false, false) => (0.0, TAU),
        (true, false) => (-FRAC_PI_2, FRAC_PI_2),
        (false, true) => (0.0, PI),
        (true, true) => (0.0, FRAC_PI_2),
    };
    Some(SphereDomain::PolarBox { c, phi })
}

/// Volume integral of `f` over `{a <= K(x - x0) <= b} ∩ C` for a dual gauge
/// `K`, in polar form about `x0`. Requires an admissible center, for which
/// cone membership depends on the direction alone.
pub fn wulff_shell_integral(
    dual: &DualGauge,
    cone: &ConvexCone,
    center: &[f64],
    a: f64,
    b: f64,
    quad: &QuadratureSpec,
    f: &dyn Fn(&[f64]) -> Result<f64>,
) -> Result<Estimate> {
    let dim = cone.dim();
    if dual.dim() != dim || center.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: dual.dim().min(center.len()) });
    }
    if !cone.is_admissible_center(center) {
        return Err(Error::Placement(
            "shell integrals in polar form need a center on the line factor".into(),
        ));
    }
    if !(a >= 0.0 && b > a) {
        return Err(Error::InvalidQuadrature(format!("bad radial interval [{a}, {b}]")));
    }
    let domain = cone.sphere_domain();
    let nexp = dim as i32;
    match (quad.method, &domain) {
        (QuadMethod::TensorPolar, SphereDomain::Indicator(_)) | (QuadMethod::MonteCarlo, _) => {
            let pow_span = b.powi(nexp) - a.powi(nexp);
            mc_integrate(quad, &mut |rng| {
                let w = domain.sample_direction(rng);
                let weight = match domain.measure_exact() {
                    Some(m) => m,
                    None => indicator_weight(cone, &w),
                };
                if weight == 0.0 {
                    return Ok(0.0);
                }
                let h0 = dual.value(&w)?;
                let tau = (a.powi(nexp) + rng.gen::<f64>() * pow_span).powf(1.0 / dim as f64);
                let x = axpy_point(center, tau / h0, &w);
                Ok(weight * pow_span / (dim as f64 * h0.powi(nexp)) * f(&x)?)
            })
        }
        (QuadMethod::TensorPolar, _) => {
            let n = quad.nodes_per_axis(dim);
            let eval = |nodes: usize| -> Result<f64> {
                let pts = domain.tensor_nodes(nodes).expect("exact domain");
                let (rt, rw) = gauss_legendre_on(nodes, a, b);
                let mut terms = Vec::with_capacity(pts.len());
                for (w, wt) in &pts {
                    let h0 = dual.value(w)?;
                    let scale_inv = h0.powi(nexp);
                    let mut radial = Vec::with_capacity(nodes);
                    for i in 0..nodes {
                        let x = axpy_point(center, rt[i] / h0, w);
                        radial.push(rw[i] * rt[i].powi(nexp - 1) * f(&x)?);
                    }
                    terms.push(wt * pairwise_sum(&radial) / scale_inv);
                }
                Ok(pairwise_sum(&terms))
            };
            let coarse = eval((n / 2).max(4))?;
            let fine = eval(n)?;
            Ok(Estimate::new(fine, refinement_err(fine, coarse)))
        }
    }
}

/// Surface integral of `f(x, nu)` over `{K(x - x0) = R} ∩ C`, with `nu` the
/// Euclidean outward unit normal, via the radial graph `w -> R w / K(w)` and
/// its Jacobian `r^{N-2} sqrt(r^2 + |grad_S r|^2)`.
///
/// Admissible centers integrate over the exact angular domain; any other
/// center falls back to full-sphere Monte Carlo against the strict-interior
/// indicator (boundary portions on `∂C` never count).
pub fn wulff_sphere_integral(
    dual: &DualGauge,
    cone: &ConvexCone,
    center: &[f64],
    radius: f64,
    quad: &QuadratureSpec,
    f: &dyn Fn(&[f64], &[f64]) -> Result<f64>,
) -> Result<Estimate> {
    let dim = cone.dim();
    if dual.dim() != dim || center.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: dual.dim().min(center.len()) });
    }
    if radius <= 0.0 {
        return Err(Error::InvalidQuadrature(format!("radius must be positive, got {radius}")));
    }
    let surf = |w: &[f64]| -> Result<f64> {
        let (x, j, nu) = surface_element(dual, center, radius, w)?;
        Ok(j * f(&x, &nu)?)
    };
    if !cone.is_admissible_center(center) {
        let domain = SphereDomain::Indicator(dim);
        return mc_integrate(quad, &mut |rng| {
            let w = domain.sample_direction(rng);
            let (x, j, nu) = surface_element(dual, center, radius, &w)?;
            if cone.classify(&x, 1e-12) != Region::Inside {
                return Ok(0.0);
            }
            Ok(unit_sphere_area(dim) * j * f(&x, &nu)?)
        });
    }
    let domain = cone.sphere_domain();
    match (quad.method, &domain) {
        (QuadMethod::TensorPolar, SphereDomain::Indicator(_)) | (QuadMethod::MonteCarlo, _) => {
            mc_integrate(quad, &mut |rng| {
                let w = domain.sample_direction(rng);
                let weight = match domain.measure_exact() {
                    Some(m) => m,
                    None => indicator_weight(cone, &w),
                };
                if weight == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(weight * surf(&w)?)
                }
            })
        }
        (QuadMethod::TensorPolar, _) => {
            let n = quad.nodes_per_axis(if dim == 2 { 1 } else { dim - 1 });
            let eval = |nodes: usize| -> Result<f64> {
                let pts = domain.tensor_nodes(nodes).expect("exact domain");
                let mut terms = Vec::with_capacity(pts.len());
                for (w, wt) in &pts {
                    terms.push(wt * surf(w)?);
                }
                Ok(pairwise_sum(&terms))
            };
            let coarse = eval((n / 2).max(4))?;
            let fine = eval(n)?;
            Ok(Estimate::new(fine, refinement_err(fine, coarse)))
        }
    }
}

/// Point, area Jacobian, and Euclidean outward unit normal of the radial
/// graph of a Wulff sphere at direction `w`.
fn surface_element(
    dual: &DualGauge,
    center: &[f64],
    radius: f64,
    w: &[f64],
) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let dim = w.len();
    let h0 = dual.value(w)?;
    let grad = dual.grad(w)?;
    let r = radius / h0;
    let x = axpy_point(center, r, w);
    // Tangential part of grad K at w; K is 1-homogeneous so <grad, w> = K(w).
    let mut tang = vec![0.0; dim];
    for i in 0..dim {
        tang[i] = grad[i] - h0 * w[i];
    }
    let grad_r_sq = (radius / (h0 * h0)).powi(2) * dot(&tang, &tang);
    let j = r.powi(dim as i32 - 2) * (r * r + grad_r_sq).sqrt();
    let nu = scale(&grad, 1.0 / norm(&grad));
    Ok((x, j, nu))
}

fn axpy_point(center: &[f64], s: f64, w: &[f64]) -> Vec<f64> {
    (0..center.len()).map(|i| center[i] + s * w[i]).collect()
}

/// The sublevel body `{x : K(x - x0) < R} ∩ C` of the reflected dual gauge
/// `K = dual of (xi -> H(-xi))`, i.e. the Wulff shape of the reflected gauge
/// scaled by `R` and translated to `x0`.
#[derive(Clone, Debug)]
pub struct WulffCap {
    gauge: Gauge,
    dual: DualGauge,
    cone: ConvexCone,
    center: Vec<f64>,
    radius: f64,
}

impl WulffCap {
    pub fn new(gauge: &Gauge, cone: &ConvexCone, center: &[f64], radius: f64) -> Result<Self> {
        if gauge.dim() != cone.dim() || center.len() != cone.dim() {
            return Err(Error::DimensionMismatch {
                expected: cone.dim(),
                got: gauge.dim().min(center.len()),
            });
        }
        if radius <= 0.0 {
            return Err(Error::InvalidDomain(format!("cap radius must be positive, got {radius}")));
        }
        Ok(Self {
            gauge: gauge.clone(),
            dual: DualGauge::of(&gauge.reflected()),
            cone: cone.clone(),
            center: center.to_vec(),
            radius,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn cone(&self) -> &ConvexCone {
        &self.cone
    }

    /// The radial (reflected dual) gauge generating the cap.
    pub fn dual(&self) -> &DualGauge {
        &self.dual
    }

    /// The perimeter weight naturally attached to this cap: the reflected
    /// primal gauge.
    pub fn weight_gauge(&self) -> Gauge {
        self.gauge.reflected()
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        let z: Vec<f64> = (0..x.len()).map(|i| x[i] - self.center[i]).collect();
        Ok(self.dual.value(&z)? < self.radius && self.cone.contains(x))
    }

    /// Lebesgue measure of the cap. Admissible centers use the exact polar
    /// reduction; others fall back to [`WulffCap::measure_by_rejection`].
    pub fn measure(&self, quad: &QuadratureSpec) -> Result<Estimate> {
        if self.cone.is_admissible_center(&self.center) {
            wulff_shell_integral(
                &self.dual,
                &self.cone,
                &self.center,
                0.0,
                self.radius,
                quad,
                &|_| Ok(1.0),
            )
        } else {
            self.measure_by_rejection(quad)
        }
    }

    /// Center-agnostic Monte Carlo estimator: polar sampling of the full
    /// Wulff ball about the center, weighted by cone membership. Works for
    /// every center and serves as an independent cross-check of
    /// [`WulffCap::measure`].
    pub fn measure_by_rejection(&self, quad: &QuadratureSpec) -> Result<Estimate> {
        let dim = self.cone.dim();
        let nexp = dim as i32;
        let domain = SphereDomain::Indicator(dim);
        let area = unit_sphere_area(dim);
        mc_integrate(quad, &mut |rng| {
            let w = domain.sample_direction(rng);
            let h0 = self.dual.value(&w)?;
            let tau = self.radius * rng.gen::<f64>().powf(1.0 / dim as f64);
            let x = axpy_point(&self.center, tau / h0, &w);
            if !self.cone.contains(&x) {
                return Ok(0.0);
            }
            Ok(area * self.radius.powi(nexp) / (dim as f64 * h0.powi(nexp)))
        })
    }
}

/// Bodies supported by the perimeter and isoperimetric routines.
#[derive(Clone, Debug)]
pub enum TestBody {
    Cap(WulffCap),
    /// Axis-aligned box, required to lie in the closed cone.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Simplex given by dim+1 vertices, required to lie in the closed cone.
    Simplex { vertices: Vec<Vec<f64>> },
}

/// Relative anisotropic perimeter `P(E; C) = ∫_{∂E ∩ C} weight(nu) dH^{N-1}`
/// of a body, weighting the Euclidean normal by the gauge `weight` and
/// discarding all boundary on `∂C`.
pub fn anisotropic_perimeter(
    body: &TestBody,
    cone: &ConvexCone,
    weight: &Gauge,
    quad: &QuadratureSpec,
) -> Result<Estimate> {
    match body {
        TestBody::Cap(cap) => wulff_sphere_integral(
            &cap.dual,
            cone,
            &cap.center,
            cap.radius,
            quad,
            &|_, nu| weight.eval(nu),
        ),
        TestBody::Box { lo, hi } => {
            let dim = validate_box(cone, lo, hi)?;
            let mut total = 0.0;
            for axis in 0..dim {
                let mut face_area = 1.0;
                for j in 0..dim {
                    if j != axis {
                        face_area *= hi[j] - lo[j];
                    }
                }
                for (level, sign) in [(hi[axis], 1.0), (lo[axis], -1.0)] {
                    let mut nu = vec![0.0; dim];
                    nu[axis] = sign;
                    let frac = box_face_interior_fraction(cone, lo, hi, axis, level);
                    total += weight.eval(&nu)? * face_area * frac;
                }
            }
            Ok(Estimate::exact(total))
        }
        TestBody::Simplex { vertices } => {
            let dim = validate_simplex(cone, vertices)?;
            let mut total = 0.0;
            for omit in 0..vertices.len() {
                let facet: Vec<&Vec<f64>> =
                    (0..vertices.len()).filter(|&i| i != omit).map(|i| &vertices[i]).collect();
                let (area, nu) = simplex_facet(&facet, &vertices[omit], dim)?;
                let frac = simplex_facet_interior_fraction(cone, &facet, omit);
                total += weight.eval(&nu)? * area * frac;
            }
            Ok(Estimate::exact(total))
        }
    }
}

/// Lebesgue measure of the body inside the closed cone.
pub fn body_volume(body: &TestBody, cone: &ConvexCone, quad: &QuadratureSpec) -> Result<Estimate> {
    match body {
        TestBody::Cap(cap) => cap.measure(quad),
        TestBody::Box { lo, hi } => {
            let dim = validate_box(cone, lo, hi)?;
            let mut v = 1.0;
            for i in 0..dim {
                v *= hi[i] - lo[i];
            }
            Ok(Estimate::exact(v))
        }
        TestBody::Simplex { vertices } => {
            let dim = validate_simplex(cone, vertices)?;
            let m = nalgebra::DMatrix::from_fn(dim, dim, |i, j| vertices[j + 1][i] - vertices[0][i]);
            let mut fact = 1.0;
            for i in 2..=dim {
                fact *= i as f64;
            }
            Ok(Estimate::exact(m.determinant().abs() / fact))
        }
    }
}

fn validate_box(cone: &ConvexCone, lo: &[f64], hi: &[f64]) -> Result<usize> {
    let dim = cone.dim();
    if lo.len() != dim || hi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: lo.len().min(hi.len()) });
    }
    if lo.iter().zip(hi).any(|(a, b)| a >= b) {
        return Err(Error::InvalidDomain("box needs lo < hi on every axis".into()));
    }
    if dim > 16 {
        return Err(Error::UnsupportedShape("box corners explode beyond dimension 16".into()));
    }
    for mask in 0..(1usize << dim) {
        let corner: Vec<f64> =
            (0..dim).map(|i| if mask & (1 << i) != 0 { hi[i] } else { lo[i] }).collect();
        if cone.classify(&corner, 1e-9) == Region::Outside {
            return Err(Error::InvalidDomain("box must lie inside the closed cone".into()));
        }
    }
    Ok(dim)
}

fn validate_simplex(cone: &ConvexCone, vertices: &[Vec<f64>]) -> Result<usize> {
    let dim = cone.dim();
    if vertices.len() != dim + 1 {
        return Err(Error::UnsupportedShape(format!(
            "a simplex in dimension {dim} needs {} vertices, got {}",
            dim + 1,
            vertices.len()
        )));
    }
    for v in vertices {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
        if cone.classify(v, 1e-9) == Region::Outside {
            return Err(Error::InvalidDomain("simplex must lie inside the closed cone".into()));
        }
    }
    Ok(dim)
}

/// Interior fraction of an axis-aligned box face, by a deterministic
/// midpoint grid. Faces fully on `∂C` report 0, fully interior faces 1.
fn box_face_interior_fraction(
    cone: &ConvexCone,
    lo: &[f64],
    hi: &[f64],
    axis: usize,
    level: f64,
) -> f64 {
    let dim = lo.len();
    let free: Vec<usize> = (0..dim).filter(|&j| j != axis).collect();
    let per_axis: usize = match free.len() {
        0 => 1,
        1 => 512,
        2 => 32,
        _ => 8,
    };
    let total = per_axis.pow(free.len() as u32);
    let mut hits = 0usize;
    for idx in 0..total {
        let mut x = vec![0.0; dim];
        x[axis] = level;
        let mut rest = idx;
        for &j in &free {
            let cell = rest % per_axis;
            rest /= per_axis;
            let t = (cell as f64 + 0.5) / per_axis as f64;
            x[j] = lo[j] + t * (hi[j] - lo[j]);
        }
        if cone.classify(&x, 1e-9) == Region::Inside {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

/// Facet area and outward unit normal of a simplex facet.
fn simplex_facet(facet: &[&Vec<f64>], omitted: &[f64], dim: usize) -> Result<(f64, Vec<f64>)> {
    let span = nalgebra::DMatrix::from_fn(dim, dim - 1, |i, j| facet[j + 1][i] - facet[0][i]);
    let gram = span.transpose() * &span;
    let det = gram.determinant();
    if det <= 0.0 {
        return Err(Error::InvalidDomain("degenerate simplex facet".into()));
    }
    let mut fact = 1.0;
    for i in 2..dim {
        fact *= i as f64;
    }
    let area = det.sqrt() / fact;
    // Orthonormalize the span; the normal is any unit vector left over.
    let qr = span.qr();
    let q = qr.q();
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = 0.0;
    for i in 0..dim {
        let mut w = vec![0.0; dim];
        w[i] = 1.0;
        for col in 0..q.ncols() {
            let proj: f64 = (0..dim).map(|r| q[(r, col)] * w[r]).sum();
            for r in 0..dim {
                w[r] -= proj * q[(r, col)];
            }
        }
        let len = norm(&w);
        if len > best_norm {
            best_norm = len;
            best = Some(w);
        }
    }
    let mut nu = scale(&best.expect("dim >= 1"), 1.0 / best_norm);
    let centroid: Vec<f64> =
        (0..dim).map(|i| facet.iter().map(|v| v[i]).sum::<f64>() / facet.len() as f64).collect();
    let toward_omitted: Vec<f64> = (0..dim).map(|i| omitted[i] - centroid[i]).collect();
    if dot(&nu, &toward_omitted) > 0.0 {
        nu = scale(&nu, -1.0);
    }
    Ok((area, nu))
}

/// Interior fraction of a simplex facet by deterministic uniform barycentric
/// samples (seeded per facet).
fn simplex_facet_interior_fraction(cone: &ConvexCone, facet: &[&Vec<f64>], facet_id: usize) -> f64 {
    let dim = facet[0].len();
    let samples = 512;
    let mut rng = batch_rng(0xFACE7, facet_id as u64);
    let mut hits = 0usize;
    for _ in 0..samples {
        let mut bary: Vec<f64> = (0..facet.len()).map(|_| -rng.gen::<f64>().ln()).collect();
        let s: f64 = bary.iter().sum();
        for b in &mut bary {
            *b /= s;
        }
        let mut x = vec![0.0; dim];
        for (b, v) in bary.iter().zip(facet) {
            for i in 0..dim {
                x[i] += b * v[i];
            }
        }
        if cone.classify(&x, 1e-9) == Region::Inside {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}

/// Isoperimetric comparison of a body against the Wulff cap of the same
/// perimeter weight.
#[derive(Clone, Debug)]
pub struct IsoperimetricReport {
    /// `P(E; C) / |E ∩ C|^{(N-1)/N}`.
    pub quotient: f64,
    /// The same quotient for the unit Wulff cap centered at the vertex.
    pub wulff_quotient: f64,
    /// Whether the body attains the Wulff quotient within [`EQUALITY_REL_TOL`].
    pub is_equality: bool,
    /// Whether `quotient >= wulff_quotient` up to quadrature slack.
    pub inequality_ok: bool,
}

/// Compare a body's isoperimetric quotient to the optimal (Wulff-cap) one
/// for the given perimeter weight.
pub fn isoperimetric_check(
    body: &TestBody,
    cone: &ConvexCone,
    weight: &Gauge,
    quad: &QuadratureSpec,
) -> Result<IsoperimetricReport> {
    let dim = cone.dim() as f64;
    let p = anisotropic_perimeter(body, cone, weight, quad)?;
    let v = body_volume(body, cone, quad)?;
    if v.value <= 0.0 {
        return Err(Error::InvalidDomain("body has nonpositive measure in the cone".into()));
    }
    let quotient = p.value / v.value.powf((dim - 1.0) / dim);
    let q_rel_err = p.std_err / p.value.abs().max(1e-300)
        + (dim - 1.0) / dim * v.std_err / v.value;

    // Reference: the unit ball of the weight's dual, centered at the vertex.
    let reference = WulffCap::new(&weight.reflected(), cone, &vec![0.0; cone.dim()], 1.0)?;
    let ref_body = TestBody::Cap(reference);
    let wp = anisotropic_perimeter(&ref_body, cone, weight, quad)?;
    let wv = body_volume(&ref_body, cone, quad)?;
    let wulff_quotient = wp.value / wv.value.powf((dim - 1.0) / dim);
    let w_rel_err = wp.std_err / wp.value.abs().max(1e-300)
        + (dim - 1.0) / dim * wv.std_err / wv.value;

    let gap = (quotient - wulff_quotient) / wulff_quotient;
    let noise = 3.0 * (q_rel_err + w_rel_err);
    Ok(IsoperimetricReport {
        quotient,
        wulff_quotient,
        is_equality: gap.abs() <= EQUALITY_REL_TOL + noise,
        inequality_ok: gap >= -(EQUALITY_REL_TOL + noise),
    })
}

/// Perimeter-volume identity of the unit Wulff cap: its relative perimeter
/// equals dimension times its measure. Returns both estimates.
pub fn wulff_perimeter_identity(
    cone: &ConvexCone,
    weight: &Gauge,
    quad: &QuadratureSpec,
) -> Result<(Estimate, Estimate)> {
    let cap = WulffCap::new(&weight.reflected(), cone, &vec![0.0; cone.dim()], 1.0)?;
    let body = TestBody::Cap(cap);
    let p = anisotropic_perimeter(&body, cone, weight, quad)?;
    let v = body_volume(&body, cone, quad)?;
    Ok((p, v.scaled(cone.dim() as f64)))
}
