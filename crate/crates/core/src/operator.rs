//! Nested finite differences for the anisotropic N-Laplacian.
//!
//! The operator under test is `div(a(grad u))` with `a(xi) = H^{N-1}(xi)
//! grad H(xi)`. Instead of deriving second derivatives of arbitrary gauges,
//! the divergence is an order-2 central difference of the `a`-field, whose
//! argument is itself a central-difference gradient taken with a smaller
//! inner step. For the explicit solution family the true residual
//! `-div(a(grad u)) - e^u` is identically zero, so everything measured here
//! is discretization error, which must shrink at second order.
//!
//! # Example
//!
//! ```
//! use finsler_liouville::cone::ConvexCone;
//! use finsler_liouville::gauge::Gauge;
//! use finsler_liouville::liouville::LiouvilleSolution;
//! use finsler_liouville::operator::{residual_for_solution, FdScheme};
//!
//! let sol = LiouvilleSolution::new(
//!     Gauge::euclidean(2),
//!     1.0,
//!     vec![0.0, 0.0],
//!     ConvexCone::full_space(2),
//! ).unwrap();
//!
//! // The closed-form solution annihilates the discrete operator to O(h^2).
//! let scheme = FdScheme::nested(1e-3).unwrap();
//! let r = residual_for_solution(&sol, &[0.8, -0.3], &scheme).unwrap();
//! assert!(r.abs() < 1e-4);
//! ```

use crate::cone::{ConvexCone, Region};
use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::liouville::LiouvilleSolution;
use crate::quad::batch_rng;
use crate::vecops::{dot, norm};
use rand::Rng;

/// Gradients smaller than this are treated as the degenerate point of the
/// operator, where `a` is merely continuous and the residual uninformative.
pub const DEGENERACY_GUARD: f64 = 1e-8;

/// Central-difference order for the inner gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdOrder {
    Two,
    Four,
}

/// Step sizes for the nested scheme: `h_outer` displaces the divergence
/// stencil, `h_inner` the gradient stencil evaluated at each displaced point.
#[derive(Clone, Copy, Debug)]
pub struct FdScheme {
    pub h_outer: f64,
    pub h_inner: f64,
    pub order: FdOrder,
}

impl FdScheme {
    pub fn new(h_outer: f64, h_inner: f64, order: FdOrder) -> Result<Self> {
        let floor = 1e3 * f64::EPSILON;
        if !(h_outer > floor && h_inner > floor) {
            return Err(Error::InvalidScheme(format!(
                "steps {h_outer}, {h_inner} must exceed {floor:.2e}"
            )));
        }
        if h_inner > h_outer {
            return Err(Error::InvalidScheme(format!(
                "inner step {h_inner} must not exceed outer step {h_outer}"
            )));
        }
        Ok(Self { h_outer, h_inner, order })
    }

    /// The default nesting: inner step one eighth of the outer step.
    pub fn nested(h: f64) -> Result<Self> {
        Self::new(h, h / 8.0, FdOrder::Two)
    }

    fn scaled(&self, factor: f64) -> Self {
        Self { h_outer: self.h_outer * factor, h_inner: self.h_inner * factor, order: self.order }
    }
}

/// Central-difference gradient of `u` at `x` using the scheme's inner step.
pub fn fd_grad(
    u: &dyn Fn(&[f64]) -> Result<f64>,
    x: &[f64],
    scheme: &FdScheme,
) -> Result<Vec<f64>> {
    let h = scheme.h_inner;
    let mut g = vec![0.0; x.len()];
    let probe = |x: &mut Vec<f64>, i: usize, step: f64| -> Result<f64> {
        x[i] += step;
        let v = u(x);
        x[i] -= step;
        match v {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(v) => Err(Error::StencilEvaluation(format!("non-finite value {v} on stencil"))),
            Err(e) => Err(e),
        }
    };
    let mut y = x.to_vec();
    for i in 0..x.len() {
        g[i] = match scheme.order {
            FdOrder::Two => {
                (probe(&mut y, i, h)? - probe(&mut y, i, -h)?) / (2.0 * h)
            }
            FdOrder::Four => {
                (-probe(&mut y, i, 2.0 * h)? + 8.0 * probe(&mut y, i, h)?
                    - 8.0 * probe(&mut y, i, -h)?
                    + probe(&mut y, i, -2.0 * h)?)
                    / (12.0 * h)
            }
        };
    }
    Ok(g)
}

/// Discrete residual `-div_h(a(grad_h u))(x) - e^{u(x)}`.
///
/// For exact solutions of the equation this tends to zero at the order of
/// the scheme. Gradients below [`DEGENERACY_GUARD`] anywhere on the stencil
/// abort with a degeneracy error rather than reporting noise.
pub fn nlap_residual(
    g: &Gauge,
    n: usize,
    u: &dyn Fn(&[f64]) -> Result<f64>,
    x: &[f64],
    scheme: &FdScheme,
) -> Result<f64> {
    if g.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: x.len() });
    }
    // The operator degenerates where the gradient vanishes; refuse the
    // evaluation point itself before probing the stencil.
    let center_size = norm(&fd_grad(u, x, scheme)?);
    if center_size < DEGENERACY_GUARD {
        return Err(Error::DegenerateGradient { norm: center_size });
    }
    let a_at = |y: &[f64]| -> Result<Vec<f64>> {
        let grad = fd_grad(u, y, scheme)?;
        let size = norm(&grad);
        if size < DEGENERACY_GUARD {
            return Err(Error::DegenerateGradient { norm: size });
        }
        g.a_field(n, &grad)
    };
    let h = scheme.h_outer;
    let mut divergence = 0.0;
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let plus = a_at(&y)?[i];
        y[i] = x[i] - h;
        let minus = a_at(&y)?[i];
        y[i] = x[i];
        divergence += (plus - minus) / (2.0 * h);
    }
    if !divergence.is_finite() {
        return Err(Error::StencilEvaluation("non-finite divergence".into()));
    }
    let value = u(x)?;
    Ok(-divergence - value.exp())
}

/// Residual of one explicit solution at an interior point.
///
/// The scheme is rescaled by `max(1, K(x - x0))` so far-field stencils keep
/// significant digits, and every stencil point must stay inside the cone
/// with margin `2 (h_outer + h_inner)` after that rescaling.
pub fn residual_for_solution(
    sol: &LiouvilleSolution,
    x: &[f64],
    scheme: &FdScheme,
) -> Result<f64> {
    let radius = sol.profile_radius(x)? / sol.lambda();
    let local = scheme.scaled(radius.max(1.0));
    let margin = 2.0 * (local.h_outer + local.h_inner);
    for j in 0..sol.cone().facet_count() {
        let nu = sol.cone().embedded_normal(j);
        if dot(&nu, x) > -margin {
            return Err(Error::Placement(format!(
                "stencil of width {margin:.3e} reaches the cone boundary at {x:?}"
            )));
        }
    }
    let field = |y: &[f64]| sol.eval(y);
    nlap_residual(sol.gauge(), sol.dim(), &field, x, &local)
}

#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub h: f64,
    pub max_residual: f64,
    /// Order estimate between this row and the previous one.
    pub local_order: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of log residual against log step.
    pub order: f64,
}

/// Evaluate the residual on fixed points across a geometric list of steps
/// and fit the convergence order.
pub fn convergence_study(
    sol: &LiouvilleSolution,
    points: &[Vec<f64>],
    h_list: &[f64],
) -> Result<ConvergenceStudy> {
    if h_list.len() < 3 {
        return Err(Error::InvalidScheme("need at least three step sizes".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidScheme("need at least one evaluation point".into()));
    }
    let ratio0 = h_list[1] / h_list[0];
    for w in h_list.windows(2) {
        let r = w[1] / w[0];
        if !(r > 0.0 && r < 1.0 && (r / ratio0 - 1.0).abs() <= 0.05) {
            return Err(Error::InvalidScheme(
                "step sizes must form a decreasing geometric sequence".into(),
            ));
        }
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let scheme = FdScheme::nested(h)?;
        let mut worst = 0.0f64;
        for p in points {
            worst = worst.max(residual_for_solution(sol, p, &scheme)?.abs());
        }
        let local_order = rows.last().map(|prev: &ConvergenceRow| {
            (worst / prev.max_residual).ln() / (h / prev.h).ln()
        });
        rows.push(ConvergenceRow { h, max_residual: worst, local_order });
    }
    let logs_h: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
    let logs_r: Vec<f64> = rows.iter().map(|r| r.max_residual.ln()).collect();
    let n = logs_h.len() as f64;
    let mh = logs_h.iter().sum::<f64>() / n;
    let mr = logs_r.iter().sum::<f64>() / n;
    let sxx: f64 = logs_h.iter().map(|v| (v - mh) * (v - mh)).sum();
    let sxy: f64 = logs_h.iter().zip(&logs_r).map(|(a, b)| (a - mh) * (b - mr)).sum();
    Ok(ConvergenceStudy { order: sxy / sxx, rows })
}

/// Maximum conormal flux `|<a(grad u), nu>|` over random points on the
/// facets of `cone`, using the closed-form gradient.
///
/// The cone is a separate argument precisely so a solution built on one cone
/// can be interrogated against another: a misplaced center then produces a
/// visibly nonzero flux. Samples keep a relative margin of 1e-2 from all
/// other facets and sweep radii in [0.5, 20].
pub fn neumann_flux(
    sol: &LiouvilleSolution,
    cone: &ConvexCone,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if cone.dim() != sol.dim() {
        return Err(Error::DimensionMismatch { expected: sol.dim(), got: cone.dim() });
    }
    let facets = cone.facet_count();
    if facets == 0 || samples == 0 {
        return Ok(0.0);
    }
    let per_facet = samples.div_ceil(facets);
    let dim = sol.dim();
    let mut worst = 0.0f64;
    for j in 0..facets {
        let nu = cone.embedded_normal(j);
        let mut rng = batch_rng(seed, j as u64);
        let mut kept = 0usize;
        let mut attempts = 0usize;
        while kept < per_facet {
            attempts += 1;
            if attempts > 500 * per_facet {
                return Err(Error::InvalidDomain(format!(
                    "could not place samples on facet {j} away from lower strata"
                )));
            }
            // Project a Gaussian draw onto the facet hyperplane, then scale
            // onto a log-uniform radius; cones are scale-invariant so the
            // facet membership survives the scaling.
            let mut x: Vec<f64> = (0..dim).map(|_| crate::quad::standard_normal(&mut rng)).collect();
            let along = dot(&x, &nu);
            for (xi, ni) in x.iter_mut().zip(&nu) {
                *xi -= along * ni;
            }
            let size = norm(&x);
            if size < 1e-9 {
                continue;
            }
            let radius = (rng.gen_range(0.5f64.ln()..20f64.ln())).exp();
            for xi in x.iter_mut() {
                *xi *= radius / size;
            }
            let mut clear = true;
            for other in 0..facets {
                if other != j && dot(&cone.embedded_normal(other), &x) > -1e-2 * radius {
                    clear = false;
                    break;
                }
            }
            if !clear {
                continue;
            }
            kept += 1;
            let grad = sol.grad(&x)?;
            if norm(&grad) < 1e-12 {
                continue;
            }
            let a = match sol.gauge().a_field(dim, &grad) {
                Ok(a) => a,
                Err(Error::NonDifferentiable { .. }) => continue,
                Err(e) => return Err(e),
            };
            worst = worst.max(dot(&a, &nu).abs());
        }
    }
    Ok(worst)
}

/// Seeded interior evaluation points for residual studies: random directions
/// strictly inside the cone at radii in [0.3, `max_radius`], excluding the
/// peak.
pub fn interior_points(
    sol: &LiouvilleSolution,
    count: usize,
    max_radius: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let dirs = crate::liouville::interior_directions(sol.cone(), count, 5e-2, seed)?;
    let mut rng = batch_rng(seed, 1);
    let mut pts = Vec::with_capacity(count);
    for dir in dirs {
        let h0 = sol.hat_dual().value(&dir)?;
        let tau = (rng.gen_range(0.3f64.ln()..max_radius.ln())).exp();
        let x: Vec<f64> =
            (0..sol.dim()).map(|i| sol.center()[i] + tau * dir[i] / h0).collect();
        // Interior check with the stencil margin used at h = 4e-3.
        if sol.cone().classify(&x, 2e-2 * tau.max(1.0)) == Region::Inside {
            pts.push(x);
        }
    }
    if pts.is_empty() {
        return Err(Error::InvalidDomain("no interior points survived the margin".into()));
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn euclid_solution(n: usize) -> LiouvilleSolution {
        LiouvilleSolution::new(
            Gauge::euclidean(n),
            1.0,
            vec![0.0; n],
            ConvexCone::full_space(n),
        )
        .unwrap()
    }

    #[test]
    fn scheme_validation() {
        assert!(FdScheme::new(1e-3, 1e-4, FdOrder::Two).is_ok());
        assert!(FdScheme::new(1e-4, 1e-3, FdOrder::Two).is_err());
        assert!(FdScheme::new(1e-16, 1e-17, FdOrder::Two).is_err());
        let nested = FdScheme::nested(8e-3).unwrap();
        assert_relative_eq!(nested.h_inner, 1e-3);
    }

    #[test]
    fn linear_fields_are_reproduced_exactly() {
        let u = |x: &[f64]| Ok(1.5 * x[0] - 2.0 * x[1] + 3.0);
        let scheme = FdScheme::nested(1e-3).unwrap();
        let g = fd_grad(&u, &[0.4, -0.7], &scheme).unwrap();
        assert_relative_eq!(g[0], 1.5, epsilon = 1e-9);
        assert_relative_eq!(g[1], -2.0, epsilon = 1e-9);

        // A constant coefficient field has zero discrete divergence, so the
        // residual reduces to the reaction term exactly.
        let gauge = Gauge::euclidean(2);
        let x = [0.4, -0.7];
        let r = nlap_residual(&gauge, 2, &u, &x, &scheme).unwrap();
        let expected = -(u(&x).unwrap().exp());
        assert_relative_eq!(r, expected, max_relative = 1e-9);
    }

    #[test]
    fn quadratics_are_exact_under_order_two() {
        let u = |x: &[f64]| Ok(0.5 * (x[0] * x[0] + x[1] * x[1]));
        let scheme = FdScheme::nested(1e-3).unwrap();
        let g = fd_grad(&u, &[1.0, 2.0], &scheme).unwrap();
        assert_relative_eq!(g[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(g[1], 2.0, epsilon = 1e-9);

        let order4 = FdScheme::new(1e-3, 1e-3 / 8.0, FdOrder::Four).unwrap();
        let g4 = fd_grad(&u, &[1.0, 2.0], &order4).unwrap();
        assert_relative_eq!(g4[0], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn fd_gradient_matches_the_closed_form() {
        let sol = euclid_solution(2);
        let scheme = FdScheme::new(1e-3, 1e-5, FdOrder::Two).unwrap();
        let field = |y: &[f64]| sol.eval(y);
        let g = fd_grad(&field, &[1.0, 0.0], &scheme).unwrap();
        assert_relative_eq!(g[0], -2.0, max_relative = 1e-5);
        assert!(g[1].abs() <= 1e-5);

        let pts = interior_points(&sol, 20, 8.0, 0xF0).unwrap();
        for p in pts {
            let exact = sol.grad(&p).unwrap();
            let fd = fd_grad(&field, &p, &scheme).unwrap();
            let scale = norm(&exact).max(1e-3);
            for i in 0..2 {
                assert!(
                    (fd[i] - exact[i]).abs() <= 1e-5 * scale,
                    "at {p:?}: fd {fd:?} vs exact {exact:?}"
                );
            }
        }
    }

    #[test]
    fn interior_residual_is_small() {
        let sol = euclid_solution(2);
        let scheme = FdScheme::nested(1e-3).unwrap();
        let r = residual_for_solution(&sol, &[0.5, 0.0], &scheme).unwrap();
        assert!(r.abs() <= 1e-4, "residual {r}");

        let sol3 = euclid_solution(3);
        let r3 = residual_for_solution(&sol3, &[1.0, 0.0, 0.0], &scheme).unwrap();
        assert!(r3.abs() <= 1e-3, "residual {r3}");
    }

    #[test]
    fn halving_the_step_shrinks_the_residual_at_second_order() {
        let sol = euclid_solution(2);
        let coarse = residual_for_solution(&sol, &[0.7, 0.3], &FdScheme::nested(2e-3).unwrap())
            .unwrap()
            .abs();
        let fine = residual_for_solution(&sol, &[0.7, 0.3], &FdScheme::nested(1e-3).unwrap())
            .unwrap()
            .abs();
        let ratio = coarse / fine;
        assert!((2.5..6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn convergence_orders_sit_near_two() {
        let h_list = [4e-3, 2e-3, 1e-3];
        let configs: Vec<LiouvilleSolution> = vec![
            euclid_solution(2),
            euclid_solution(3),
            LiouvilleSolution::new(
                Gauge::ellipsoid(vec![vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap(),
                1.0,
                vec![0.0, 0.0],
                ConvexCone::full_space(2),
            )
            .unwrap(),
        ];
        for sol in configs {
            let pts = interior_points(&sol, 10, 8.0, 0xF1).unwrap();
            let study = convergence_study(&sol, &pts, &h_list).unwrap();
            assert!(
                (1.5..=2.5).contains(&study.order),
                "order {} rows {:?}",
                study.order,
                study.rows
            );
        }
    }

    #[test]
    fn study_rejects_bad_step_lists() {
        let sol = euclid_solution(2);
        let pts = vec![vec![0.5, 0.0]];
        assert!(matches!(
            convergence_study(&sol, &pts, &[1e-3, 2e-3]),
            Err(Error::InvalidScheme(_))
        ));
        assert!(matches!(
            convergence_study(&sol, &pts, &[5e-3, 2e-3, 1e-3]),
            Err(Error::InvalidScheme(_))
        ));
    }

    #[test]
    fn degenerate_peak_is_guarded() {
        let sol = euclid_solution(2);
        let scheme = FdScheme::nested(1e-3).unwrap();
        assert!(matches!(
            residual_for_solution(&sol, &[0.0, 0.0], &scheme),
            Err(Error::DegenerateGradient { .. })
        ));
    }

    #[test]
    fn placement_margin_is_enforced() {
        let sol = LiouvilleSolution::new(
            Gauge::euclidean(2),
            1.0,
            vec![0.0, 0.0],
            ConvexCone::orthant(2, 2).unwrap(),
        )
        .unwrap();
        let scheme = FdScheme::nested(1e-3).unwrap();
        assert!(matches!(
            residual_for_solution(&sol, &[1e-4, 1.0], &scheme),
            Err(Error::Placement(_))
        ));
        assert!(residual_for_solution(&sol, &[1.0, 1.0], &scheme).is_ok());
    }

    #[test]
    fn conormal_flux_vanishes_for_admissible_centers() {
        let half = ConvexCone::half_space(2);
        let sol = LiouvilleSolution::new(Gauge::euclidean(2), 1.0, vec![0.7, 0.0], half.clone())
            .unwrap();
        assert!(neumann_flux(&sol, &half, 200, 7).unwrap() <= 1e-8);

        let quadrant = ConvexCone::orthant(2, 2).unwrap();
        let sol_q =
            LiouvilleSolution::new(Gauge::euclidean(2), 1.0, vec![0.0, 0.0], quadrant.clone())
                .unwrap();
        assert!(neumann_flux(&sol_q, &quadrant, 200, 7).unwrap() <= 1e-8);

        let tilted = Gauge::ellipsoid(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let sol_e = LiouvilleSolution::new(tilted, 1.0, vec![0.0, 0.0], half.clone()).unwrap();
        assert!(neumann_flux(&sol_e, &half, 200, 7).unwrap() <= 1e-8);

        let free = euclid_solution(2);
        assert_eq!(neumann_flux(&free, &ConvexCone::full_space(2), 100, 7).unwrap(), 0.0);
    }

    #[test]
    fn misplaced_centers_light_up_the_flux() {
        // Admissible for the half-plane, but fed to a quadrant the center
        // (1, 0) violates the vertex placement rule, and the facet x1 = 0
        // sees a conormal flux of order one.
        let sol = LiouvilleSolution::new(
            Gauge::euclidean(2),
            1.0,
            vec![1.0, 0.0],
            ConvexCone::half_space(2),
        )
        .unwrap();
        let quadrant = ConvexCone::orthant(2, 2).unwrap();
        let flux = neumann_flux(&sol, &quadrant, 400, 7).unwrap();
        assert!(flux > 1e-2, "flux {flux}");
    }
}
