//! Integral identities satisfied by the explicit solutions.
//!
//! Five families of checks live here, all phrased as two independently
//! computed sides of an equality:
//!
//! * **mass quantization** — `∫_C e^u = c_N · L^N(C ∩ B_1)` where `B_1` is
//!   the unit ball of the reflected dual gauge, together with the one-sided
//!   lower bound that must hold even when equality is out of tolerance;
//! * **flux–mass balance** — the conormal flux through `C ∩ ∂B_R` equals the
//!   mass of the enclosed cap, for every radius;
//! * **co-area level mass** — the cap mass equals the surface integral of
//!   `H^N(∇u)/|∇u|` over the level surface;
//! * **level geometry** — `H(∇u)` is constant on level sets, and the level
//!   radius and level mass follow their closed-form laws;
//! * **Pohozaev balance** — the rescaling identity that pairs the equation
//!   with `⟨x − x0, ∇u⟩`, reduced to cap and sphere integrals.
//!
//! Every report carries the quadrature noise of both sides; a check passes
//! when the gap is below `max(tolerance, 3σ)`, so a tolerance tighter than
//! the estimator never silently succeeds.
//!
//! # Example
//!
//! ```
//! use finsler_liouville::balance::mass_quantization_check;
//! use finsler_liouville::cone::ConvexCone;
//! use finsler_liouville::gauge::Gauge;
//! use finsler_liouville::liouville::LiouvilleSolution;
//! use finsler_liouville::QuadratureSpec;
//!
//! let sol = LiouvilleSolution::new(
//!     Gauge::euclidean(2),
//!     1.0,
//!     vec![0.0, 0.0],
//!     ConvexCone::full_space(2),
//! ).unwrap();
//!
//! // Total mass of e^u over the plane is quantized: exactly 8 pi here.
//! let quad = QuadratureSpec::tensor(40_000, 42);
//! let q = mass_quantization_check(&sol, &quad, 0.005).unwrap();
//! assert!(q.report.pass && q.cross_report.pass && q.lower_bound_holds);
//! assert!((q.mass.value - 8.0 * std::f64::consts::PI).abs() < 1e-3);
//! ```

use crate::cone::{wulff_shell_integral, wulff_sphere_integral, WulffCap};
use crate::error::{Error, Result};
use crate::liouville::{c_n, least_squares_line, LiouvilleSolution};
use crate::quad::{adaptive_simpson, Estimate, QuadMethod, QuadratureSpec};
use crate::vecops::{dot, norm};

/// Outcome of comparing two estimates of the same quantity.
#[derive(Clone, Copy, Debug)]
pub struct BalanceReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    /// Combined standard error of both sides.
    pub quadrature_err: f64,
    pub pass: bool,
}

impl BalanceReport {
    /// Compare two estimates under a relative tolerance. The absolute
    /// threshold is `tol_rel` times the larger magnitude, or three combined
    /// standard errors, whichever is larger.
    pub fn assess(lhs: Estimate, rhs: Estimate, tol_rel: f64) -> Self {
        let abs_gap = (lhs.value - rhs.value).abs();
        let scale = lhs.value.abs().max(rhs.value.abs());
        let rel_gap = if scale > 0.0 { abs_gap / scale } else { 0.0 };
        let sigma = lhs.std_err + rhs.std_err;
        let pass = abs_gap <= (tol_rel * scale).max(3.0 * sigma);
        Self { lhs: lhs.value, rhs: rhs.value, abs_gap, rel_gap, quadrature_err: sigma, pass }
    }
}

/// Total mass of a solution, computed two independent ways.
#[derive(Clone, Debug)]
pub struct MassEstimate {
    /// Semi-analytic value: polar reduction to the unit cap measure times an
    /// adaptive 1-D radial integral.
    pub value: f64,
    pub std_err: f64,
    /// Stratified Monte Carlo cross-check, truncated at reflected-dual
    /// radius `10^3 / lambda` with the analytic tail bound folded in.
    pub cross_value: f64,
    pub cross_std_err: f64,
    /// Measure of `C ∩ B_1(x0)` in the reflected dual gauge.
    pub unit_cap: Estimate,
    /// Analytic bound on the truncated Monte Carlo tail, in mass units.
    pub tail_bound: f64,
}

impl MassEstimate {
    pub fn as_estimate(&self) -> Estimate {
        Estimate::new(self.value, self.std_err)
    }

    pub fn cross_estimate(&self) -> Estimate {
        Estimate::new(self.cross_value, self.cross_std_err)
    }
}

/// Measure of the unit cap `C ∩ B_1(x0)` of the reflected dual gauge.
pub fn unit_cap_measure(sol: &LiouvilleSolution, quad: &QuadratureSpec) -> Result<Estimate> {
    WulffCap::new(sol.gauge(), sol.cone(), sol.center(), 1.0)?.measure(quad)
}

/// `ln(1 + r^s)` without overflow for huge `r`.
fn ln_one_plus_pow(r: f64, s: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let t = s * r.ln();
    if t > 30.0 {
        t + (-t).exp().ln_1p()
    } else {
        r.powf(s).ln_1p()
    }
}

/// Density as a function of the reflected-dual radius alone.
fn profile_density(sol: &LiouvilleSolution, tau: f64) -> f64 {
    let nf = sol.dim() as f64;
    let s = nf / (nf - 1.0);
    (sol.t0() - nf * ln_one_plus_pow(sol.lambda() * tau, s)).exp()
}

/// Estimate `∫_C e^u dx` by the semi-analytic polar reduction with a
/// stratified Monte Carlo cross-check.
pub fn total_mass(sol: &LiouvilleSolution, quad: &QuadratureSpec) -> Result<MassEstimate> {
    let n = sol.dim();
    let nf = n as f64;
    let s = nf / (nf - 1.0);
    let cn = c_n(n)?;
    let unit_cap = unit_cap_measure(sol, quad)?;

    // Radial factor: mass = V1 * ∫_0^∞ N tau^{N-1} e^{u(tau)} dtau. The
    // integral is cut at scaled radius 10^6 where the integrand has decayed
    // to machine-negligible size; the remainder is bounded analytically by
    // the density decay exponent.
    let radial = |tau: f64| nf * tau.powi(n as i32 - 1) * profile_density(sol, tau);
    let simpson_tol = 1e-11 * cn;
    // Integrate piecewise over dyadic spans of the scaled radius; a single
    // adaptive pass over the whole range would sample only far-field nodes
    // and miss the profile concentrated near the origin.
    let mut breaks = vec![0.0, 1.0];
    let mut w = 1.0f64;
    while w < 1e6 {
        w = (w * 4.0).min(1e6);
        breaks.push(w);
    }
    let piece_tol = simpson_tol / breaks.len() as f64;
    let mut radial_integral = 0.0;
    for pair in breaks.windows(2) {
        radial_integral +=
            adaptive_simpson(&radial, pair[0] / sol.lambda(), pair[1] / sol.lambda(), piece_tol);
    }
    let semi_tail_rel = (nf - 1.0) * 1e6f64.powf(-s);
    radial_integral += cn * semi_tail_rel / 2.0;
    let radial_err = simpson_tol + cn * semi_tail_rel / 2.0;

    let value = unit_cap.value * radial_integral;
    let std_err = unit_cap.std_err * radial_integral + unit_cap.value * radial_err;

    let tail_target = quad.target_rel_err * value;
    let semi_tail_abs = unit_cap.value * cn * semi_tail_rel;
    if semi_tail_abs > tail_target {
        return Err(Error::Truncation { bound: semi_tail_abs, target: tail_target });
    }

    // Cross-check: stratified Monte Carlo over dyadic shells of the scaled
    // radius w = lambda * tau up to 10^3, plus the analytic tail bound.
    let mut bounds = vec![0.0, 1.0];
    let mut w = 1.0;
    while w * 2.0 < 1000.0 {
        w *= 2.0;
        bounds.push(w);
    }
    bounds.push(1000.0);
    let shells = bounds.len() - 1;
    let per_shell = (quad.budget / shells).max(1000);
    let mut cross_value = 0.0;
    let mut cross_var = 0.0;
    for i in 0..shells {
        let a = bounds[i] / sol.lambda();
        let b = bounds[i + 1] / sol.lambda();
        let shell_quad = QuadratureSpec {
            method: QuadMethod::MonteCarlo,
            budget: per_shell,
            seed: quad.seed.wrapping_add(7700 + 13 * i as u64),
            target_rel_err: quad.target_rel_err,
        };
        let est = wulff_shell_integral(
            sol.hat_dual(),
            sol.cone(),
            sol.center(),
            a,
            b,
            &shell_quad,
            &|x| sol.density(x),
        )?;
        cross_value += est.value;
        cross_var += est.std_err * est.std_err;
    }
    let tail_bound = unit_cap.value * cn * (nf - 1.0) * 1000f64.powf(-s);
    cross_value += tail_bound / 2.0;
    let cross_std_err = cross_var.sqrt() + tail_bound / 2.0;

    Ok(MassEstimate { value, std_err, cross_value, cross_std_err, unit_cap, tail_bound })
}

/// Reports produced by the quantization check.
#[derive(Clone, Debug)]
pub struct MassQuantization {
    /// Semi-analytic mass against `c_N` times the unit cap measure.
    pub report: BalanceReport,
    /// Monte Carlo cross-estimator against the semi-analytic value.
    pub cross_report: BalanceReport,
    /// One-sided bound: `mass + 3σ` must reach `c_N` times the unit cap.
    pub lower_bound_holds: bool,
    pub mass: MassEstimate,
    pub expected: Estimate,
}

/// Check `∫_C e^u = c_N · L^N(C ∩ B_1)` and the one-sided lower bound.
pub fn mass_quantization_check(
    sol: &LiouvilleSolution,
    quad: &QuadratureSpec,
    tol_rel: f64,
) -> Result<MassQuantization> {
    let mass = total_mass(sol, quad)?;
    let expected = mass.unit_cap.scaled(c_n(sol.dim())?);
    let report = BalanceReport::assess(mass.as_estimate(), expected, tol_rel);
    let cross_report = BalanceReport::assess(mass.cross_estimate(), mass.as_estimate(), tol_rel);
    let lower_bound_holds = mass.value + 3.0 * mass.std_err >= expected.value
        || mass.cross_value + 3.0 * mass.cross_std_err >= expected.value;
    Ok(MassQuantization { report, cross_report, lower_bound_holds, mass, expected })
}

/// Conormal flux through `C ∩ ∂B_R(x0)` of the reflected dual gauge:
/// `∫ ⟨a(∇u), −ν⟩`, which must equal the mass of the enclosed cap.
pub fn boundary_flux(sol: &LiouvilleSolution, radius: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    let n = sol.dim();
    wulff_sphere_integral(
        sol.hat_dual(),
        sol.cone(),
        sol.center(),
        radius,
        quad,
        &|x, nu| {
            let grad = sol.grad(x)?;
            if norm(&grad) < 1e-300 {
                return Ok(0.0);
            }
            let a = sol.gauge().a_field(n, &grad)?;
            Ok(-dot(&a, nu))
        },
    )
}

/// Mass of the cap `C ∩ B_R(x0)` by volume quadrature.
pub fn cap_mass(sol: &LiouvilleSolution, radius: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    wulff_shell_integral(
        sol.hat_dual(),
        sol.cone(),
        sol.center(),
        0.0,
        radius,
        quad,
        &|x| sol.density(x),
    )
}

/// Flux–mass balance at one radius.
pub fn flux_mass_balance(
    sol: &LiouvilleSolution,
    radius: f64,
    quad: &QuadratureSpec,
    tol_rel: f64,
) -> Result<BalanceReport> {
    if !(radius > 0.0) {
        return Err(Error::InvalidQuadrature(format!("radius must be positive, got {radius}")));
    }
    let lhs = boundary_flux(sol, radius, quad)?;
    let rhs = cap_mass(sol, radius, quad)?;
    Ok(BalanceReport::assess(lhs, rhs, tol_rel))
}

/// Co-area identity at one level: superlevel mass against the surface
/// integral of `H^N(∇u)/|∇u|` over the level set.
pub fn coarea_level_mass(
    sol: &LiouvilleSolution,
    t: f64,
    quad: &QuadratureSpec,
    tol_rel: f64,
) -> Result<BalanceReport> {
    let radius = sol.level_radius(t)?;
    let lhs = cap_mass(sol, radius, quad)?;
    let n = sol.dim();
    let rhs = wulff_sphere_integral(
        sol.hat_dual(),
        sol.cone(),
        sol.center(),
        radius,
        quad,
        &|x, _nu| {
            let grad = sol.grad(x)?;
            let h = sol.gauge().eval(&grad)?;
            Ok(h.powi(n as i32) / norm(&grad))
        },
    )?;
    Ok(BalanceReport::assess(lhs, rhs, tol_rel))
}

/// One row of the level-geometry survey.
#[derive(Clone, Debug)]
pub struct LevelRow {
    pub t: f64,
    /// Level radius from inverting the profile.
    pub radius: f64,
    /// Level radius from the independent closed-form law.
    pub radius_law: f64,
    /// Cap mass by volume quadrature.
    pub mass_quad: Estimate,
    /// Cap mass from the closed-form level-mass law.
    pub mass_law: Estimate,
    /// Cap mass reconstructed from `N H^{N-1}(∇u) V_1 R^{N-1}`.
    pub mass_reconstructed: f64,
    /// Relative spread of `H(∇u)` over the sampled level set.
    pub gauge_grad_spread: f64,
    /// Relative spread of `|∇u|` over the sampled level set.
    pub grad_norm_spread: f64,
}

/// Closed-form level mass `M(t) = [B_N (1 - e^{(t-t0)/N})]^{N-1}` with
/// `B_N = (N/(N-1)) N^{N/(N-1)} V_1^{1/(N-1)}`.
pub fn level_mass_law(sol: &LiouvilleSolution, unit_cap: &Estimate, t: f64) -> Estimate {
    let nf = sol.dim() as f64;
    let b = (nf / (nf - 1.0)) * nf.powf(nf / (nf - 1.0)) * unit_cap.value.powf(1.0 / (nf - 1.0));
    let value = (b * (1.0 - ((t - sol.t0()) / nf).exp())).powf(nf - 1.0);
    // M is proportional to V1, so the relative error carries over directly.
    let rel = if unit_cap.value > 0.0 { unit_cap.std_err / unit_cap.value } else { 0.0 };
    Estimate::new(value, value * rel)
}

/// Closed-form level radius law
/// `R^N(t) = c_N (1 - e^{(t-t0)/N})^{N-1} e^{-((N-1)t + t0)/N}`.
pub fn level_radius_law(sol: &LiouvilleSolution, t: f64) -> Result<f64> {
    let nf = sol.dim() as f64;
    let cn = c_n(sol.dim())?;
    let rn = cn
        * (1.0 - ((t - sol.t0()) / nf).exp()).powf(nf - 1.0)
        * (-((nf - 1.0) * t + sol.t0()) / nf).exp();
    Ok(rn.powf(1.0 / nf))
}

/// Survey level sets: radii against both laws, masses against quadrature,
/// the law, and the gradient reconstruction, and the spread of `H(∇u)`
/// versus `|∇u|` over each level.
pub fn level_geometry_check(
    sol: &LiouvilleSolution,
    t_list: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<LevelRow>> {
    let unit_cap = unit_cap_measure(sol, quad)?;
    let dirs = crate::liouville::interior_directions(sol.cone(), 32, 1e-3, quad.seed ^ 0x1E7E1)?;
    let n = sol.dim();
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let radius = sol.level_radius(t)?;
        let radius_law = level_radius_law(sol, t)?;
        let mass_quad = cap_mass(sol, radius, quad)?;
        let mass_law = level_mass_law(sol, &unit_cap, t);

        let mut h_min = f64::INFINITY;
        let mut h_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        let mut g_max = f64::NEG_INFINITY;
        let mut h_sample = 0.0;
        for dir in &dirs {
            let h0 = sol.hat_dual().value(dir)?;
            let x: Vec<f64> =
                (0..n).map(|i| sol.center()[i] + radius * dir[i] / h0).collect();
            let grad = sol.grad(&x)?;
            let h = sol.gauge().eval(&grad)?;
            let g = norm(&grad);
            h_min = h_min.min(h);
            h_max = h_max.max(h);
            g_min = g_min.min(g);
            g_max = g_max.max(g);
            h_sample = h;
        }
        let mass_reconstructed =
            n as f64 * h_sample.powi(n as i32 - 1) * unit_cap.value * radius.powi(n as i32 - 1);
        rows.push(LevelRow {
            t,
            radius,
            radius_law,
            mass_quad,
            mass_law,
            mass_reconstructed,
            gauge_grad_spread: (h_max - h_min) / (0.5 * (h_max + h_min)),
            grad_norm_spread: (g_max - g_min) / (0.5 * (g_max + g_min)),
        });
    }
    Ok(rows)
}

/// Pohozaev balance over the cap of radius `R`:
/// `N ∫ e^u − ∮ e^u ⟨x−x0, ν⟩` against the gradient boundary terms
/// `∮ [H^{N-1}(∇u) ⟨∇H(∇u), ν⟩ ⟨x−x0, ∇u⟩ − (H^N(∇u)/N) ⟨x−x0, ν⟩]`.
pub fn pohozaev_check(
    sol: &LiouvilleSolution,
    radius: f64,
    quad: &QuadratureSpec,
    tol_rel: f64,
) -> Result<BalanceReport> {
    let n = sol.dim();
    let nf = n as f64;
    let cap = cap_mass(sol, radius, quad)?;
    let density_moment = wulff_sphere_integral(
        sol.hat_dual(),
        sol.cone(),
        sol.center(),
        radius,
        quad,
        &|x, nu| {
            let shifted: Vec<f64> = (0..n).map(|i| x[i] - sol.center()[i]).collect();
            Ok(sol.density(x)? * dot(&shifted, nu))
        },
    )?;
    let lhs = cap.scaled(nf).minus(&density_moment);
    let rhs = wulff_sphere_integral(
        sol.hat_dual(),
        sol.cone(),
        sol.center(),
        radius,
        quad,
        &|x, nu| {
            let shifted: Vec<f64> = (0..n).map(|i| x[i] - sol.center()[i]).collect();
            let grad = sol.grad(x)?;
            let h = sol.gauge().eval(&grad)?;
            let dh = sol.gauge().grad(&grad)?;
            Ok(h.powi(n as i32 - 1) * dot(&dh, nu) * dot(&shifted, &grad)
                - h.powi(n as i32) / nf * dot(&shifted, nu))
        },
    )?;
    Ok(BalanceReport::assess(lhs, rhs, tol_rel))
}

/// Magnitude of the boundary density moment `∮ e^u ⟨x−x0, ν⟩` across radii,
/// with the fitted decay slope (expected near `N − N^2/(N-1)`).
pub fn pohozaev_boundary_decay(
    sol: &LiouvilleSolution,
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<(Vec<(f64, f64)>, f64)> {
    if radii.len() < 2 {
        return Err(Error::InvalidQuadrature("need at least two radii for a slope".into()));
    }
    let n = sol.dim();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let term = wulff_sphere_integral(
            sol.hat_dual(),
            sol.cone(),
            sol.center(),
            r,
            quad,
            &|x, nu| {
                let shifted: Vec<f64> = (0..n).map(|i| x[i] - sol.center()[i]).collect();
                Ok(sol.density(x)? * dot(&shifted, nu))
            },
        )?;
        rows.push((r, term.value.abs()));
    }
    let logs_r: Vec<f64> = rows.iter().map(|(r, _)| r.ln()).collect();
    let logs_v: Vec<f64> = rows.iter().map(|(_, v)| v.ln()).collect();
    let (slope, _) = least_squares_line(&logs_r, &logs_v);
    Ok((rows, slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConvexCone;
    use crate::gauge::Gauge;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn euclid(n: usize, lambda: f64, cone: ConvexCone) -> LiouvilleSolution {
        let x0 = vec![0.0; n];
        LiouvilleSolution::new(Gauge::euclidean(n), lambda, x0, cone).unwrap()
    }

    fn quad_default() -> QuadratureSpec {
        QuadratureSpec::tensor(100_000, 42)
    }

    #[test]
    fn masses_match_quantization() {
        let quad = quad_default();

        let free = euclid(2, 1.0, ConvexCone::full_space(2));
        let q = mass_quantization_check(&free, &quad, 0.005).unwrap();
        assert!(q.report.pass, "{:?}", q.report);
        assert!(q.cross_report.pass, "{:?}", q.cross_report);
        assert!(q.lower_bound_holds);
        assert_relative_eq!(q.report.lhs, 8.0 * PI, max_relative = 5e-3);
        assert_relative_eq!(q.expected.value, 8.0 * PI, max_relative = 1e-3);

        let quadrant = euclid(2, 1.0, ConvexCone::orthant(2, 2).unwrap());
        let qq = mass_quantization_check(&quadrant, &quad, 0.005).unwrap();
        assert!(qq.report.pass);
        assert_relative_eq!(qq.report.lhs, 2.0 * PI, max_relative = 5e-3);

        let free3 = euclid(3, 1.0, ConvexCone::full_space(3));
        let q3 = mass_quantization_check(&free3, &quad, 0.005).unwrap();
        assert!(q3.report.pass, "{:?}", q3.report);
        assert_relative_eq!(q3.report.lhs, 60.75 * 4.0 * PI / 3.0, max_relative = 5e-3);
    }

    #[test]
    fn anisotropic_half_plane_quantization() {
        let quad = quad_default();
        let gauge = Gauge::ellipsoid(vec![vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let sol = LiouvilleSolution::new(gauge, 1.0, vec![0.0, 0.0], ConvexCone::half_space(2))
            .unwrap();
        let q = mass_quantization_check(&sol, &quad, 0.005).unwrap();
        assert!(q.report.pass, "{:?}", q.report);
        assert!(q.cross_report.pass, "{:?}", q.cross_report);
        assert!(q.lower_bound_holds);
    }

    #[test]
    fn mass_is_invariant_under_scaling_and_admissible_translation() {
        let quad = QuadratureSpec::tensor(60_000, 42);
        let base = total_mass(&euclid(2, 1.0, ConvexCone::half_space(2)), &quad).unwrap();
        for lambda in [0.5, 3.0] {
            let other = total_mass(&euclid(2, lambda, ConvexCone::half_space(2)), &quad).unwrap();
            let gap = (other.value - base.value).abs();
            assert!(gap <= 3.0 * (other.std_err + base.std_err) + 1e-9);
            let cross_gap = (other.cross_value - base.cross_value).abs();
            assert!(
                cross_gap <= 3.0 * (other.cross_std_err + base.cross_std_err),
                "cross gap {cross_gap} vs sigma {} {}",
                other.cross_std_err,
                base.cross_std_err
            );
        }
        let shifted = LiouvilleSolution::new(
            Gauge::euclidean(2),
            1.0,
            vec![2.5, 0.0],
            ConvexCone::half_space(2),
        )
        .unwrap();
        let moved = total_mass(&shifted, &quad).unwrap();
        assert!(
            (moved.cross_value - base.cross_value).abs()
                <= 3.0 * (moved.cross_std_err + base.cross_std_err)
        );
    }

    #[test]
    fn truncation_guard_fires_when_the_target_is_unreachable() {
        let mut quad = quad_default();
        quad.target_rel_err = 1e-14;
        let sol = euclid(2, 1.0, ConvexCone::full_space(2));
        assert!(matches!(total_mass(&sol, &quad), Err(Error::Truncation { .. })));
    }

    #[test]
    fn flux_balances_mass_across_radii() {
        let quad = quad_default();
        let sol = euclid(2, 1.0, ConvexCone::full_space(2));
        for r in [0.1, 1.0, 10.0] {
            let rep = flux_mass_balance(&sol, r, &quad, 0.01).unwrap();
            assert!(rep.pass, "radius {r}: {rep:?}");
        }
        let at_one = flux_mass_balance(&sol, 1.0, &quad, 0.01).unwrap();
        assert_relative_eq!(at_one.lhs, 4.0 * PI, max_relative = 1e-2);
        assert_relative_eq!(at_one.rhs, 4.0 * PI, max_relative = 1e-2);
        let small = flux_mass_balance(&sol, 0.1, &quad, 0.01).unwrap();
        assert_relative_eq!(small.rhs, 8.0 * PI * 0.01 / 1.01, max_relative = 1e-2);

        let cone = ConvexCone::orthant(2, 2).unwrap();
        let aniso = LiouvilleSolution::new(
            Gauge::ellipsoid(vec![vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap(),
            0.7,
            vec![0.0, 0.0],
            cone,
        )
        .unwrap();
        for r in [0.1, 1.0, 10.0] {
            let rep = flux_mass_balance(&aniso, r, &quad, 0.01).unwrap();
            assert!(rep.pass, "anisotropic radius {r}: {rep:?}");
        }
    }

    #[test]
    fn coarea_matches_at_seeded_levels() {
        let quad = quad_default();
        let sol = euclid(2, 1.0, ConvexCone::full_space(2));
        let at_log2 = coarea_level_mass(&sol, 2f64.ln(), &quad, 0.01).unwrap();
        assert!(at_log2.pass, "{at_log2:?}");
        assert_relative_eq!(at_log2.lhs, 4.0 * PI, max_relative = 1e-2);
        assert_relative_eq!(at_log2.rhs, 4.0 * PI, max_relative = 1e-2);

        let gauge = Gauge::ellipsoid(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let aniso = LiouvilleSolution::new(gauge, 1.3, vec![0.0, 0.0], ConvexCone::full_space(2))
            .unwrap();
        for dt in [0.5, 2.0, 5.0] {
            let rep = coarea_level_mass(&aniso, aniso.t0() - dt, &quad, 0.01).unwrap();
            assert!(rep.pass, "level t0-{dt}: {rep:?}");
        }
        assert!(matches!(
            coarea_level_mass(&sol, sol.t0() + 0.1, &quad, 0.01),
            Err(Error::EmptyLevel { .. })
        ));
    }

    #[test]
    fn level_geometry_follows_the_laws() {
        let quad = quad_default();
        let sol = euclid(2, 1.0, ConvexCone::full_space(2));
        let ts = vec![2f64.ln(), 0.0, -2.0, -5.0];
        let rows = level_geometry_check(&sol, &ts, &quad).unwrap();
        assert_relative_eq!(rows[0].radius, 1.0, epsilon = 1e-12);
        for row in &rows {
            assert_relative_eq!(row.radius, row.radius_law, max_relative = 1e-10);
            assert!(row.gauge_grad_spread <= 1e-8, "H spread {}", row.gauge_grad_spread);
            let sigma = row.mass_quad.std_err + row.mass_law.std_err;
            let gap = (row.mass_quad.value - row.mass_law.value).abs();
            assert!(
                gap <= (3.0 * sigma).max(1e-3 * row.mass_law.value),
                "mass law gap {gap} at t={}",
                row.t
            );
            assert_relative_eq!(
                row.mass_reconstructed,
                row.mass_law.value,
                max_relative = 2e-3
            );
        }
        // Masses strictly decrease in t, and vanish at the peak level.
        for w in rows.windows(2) {
            assert!(w[1].mass_quad.value > w[0].mass_quad.value);
        }
        let near_peak = level_geometry_check(&sol, &[sol.t0() - 1e-3], &quad).unwrap();
        assert!(near_peak[0].mass_law.value < 0.02);
        assert!(near_peak[0].mass_quad.value < 0.02);
    }

    #[test]
    fn anisotropic_levels_separate_the_two_spreads() {
        let quad = quad_default();
        let gauge = Gauge::ellipsoid(vec![vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let sol = LiouvilleSolution::new(gauge, 1.0, vec![0.0, 0.0], ConvexCone::full_space(2))
            .unwrap();
        let rows = level_geometry_check(&sol, &[0.0, -3.0], &quad).unwrap();
        for row in rows {
            assert!(row.gauge_grad_spread <= 1e-8, "H spread {}", row.gauge_grad_spread);
            assert!(row.grad_norm_spread > 1e-2, "norm spread {}", row.grad_norm_spread);
        }
    }

    #[test]
    fn pohozaev_balances_on_caps() {
        let quad = quad_default();
        let sol = euclid(2, 1.0, ConvexCone::full_space(2));
        // Radial oracle: N ∫ e^u − ∮ e^u ⟨x, ν⟩ = 16 π R^4 / (1+R^2)^2,
        // which is 4π at R = 1.
        let at_one = pohozaev_check(&sol, 1.0, &quad, 0.01).unwrap();
        assert!(at_one.pass, "{at_one:?}");
        assert_relative_eq!(at_one.lhs, 4.0 * PI, max_relative = 1e-2);
        assert_relative_eq!(at_one.rhs, 4.0 * PI, max_relative = 1e-2);
        let at_ten = pohozaev_check(&sol, 10.0, &quad, 0.01).unwrap();
        assert!(at_ten.pass, "{at_ten:?}");
        assert_relative_eq!(
            at_ten.lhs,
            16.0 * PI * 1e4 / (101.0 * 101.0),
            max_relative = 1e-2
        );

        let gauge = Gauge::ellipsoid(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let aniso = LiouvilleSolution::new(gauge, 0.6, vec![0.0, 0.0], ConvexCone::full_space(2))
            .unwrap();
        for r in [1.0, 10.0] {
            let rep = pohozaev_check(&aniso, r, &quad, 0.01).unwrap();
            assert!(rep.pass, "anisotropic radius {r}: {rep:?}");
        }
    }

    #[test]
    fn pohozaev_in_a_cone_with_facets() {
        let quad = quad_default();
        let sol = euclid(2, 1.0, ConvexCone::orthant(2, 2).unwrap());
        for r in [1.0, 10.0] {
            let rep = pohozaev_check(&sol, r, &quad, 0.01).unwrap();
            assert!(rep.pass, "quadrant radius {r}: {rep:?}");
        }
    }

    #[test]
    fn boundary_term_decays_at_the_predicted_slope() {
        let quad = quad_default();
        let sol = euclid(2, 1.0, ConvexCone::full_space(2));
        let (rows, slope) = pohozaev_boundary_decay(&sol, &[10.0, 30.0, 100.0], &quad).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((slope + 2.0).abs() <= 0.3, "slope {slope}");
        // Oracle at R = 10: 16 π R^2 / (1+R^2)^2.
        assert_relative_eq!(rows[0].1, 16.0 * PI * 100.0 / (101.0 * 101.0), max_relative = 1e-2);
    }

    #[test]
    fn beta0_recovers_the_exponent_from_the_mass() {
        let quad = quad_default();
        let sol = euclid(2, 1.0, ConvexCone::orthant(2, 2).unwrap());
        let mass = total_mass(&sol, &quad).unwrap();
        let beta0 =
            crate::liouville::beta0_from_mass(mass.value, 2, mass.unit_cap.value).unwrap();
        assert_relative_eq!(beta0, 4.0, max_relative = 1e-3);
    }
}
