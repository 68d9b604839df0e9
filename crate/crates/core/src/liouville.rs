//! The explicit solution family and its asymptotics.
//!
//! For a gauge H on R^N and the reflected dual K(x) = sup{ <x, xi> : H(-xi) = 1 },
//! the family
//!
//! ```text
//! u(x) = ln( c_N lambda^N / (1 + K(lambda (x - x0))^{N/(N-1)})^N ),
//! c_N  = N (N^2/(N-1))^{N-1},
//! ```
//!
//! solves `-div(H^{N-1}(grad u) grad H(grad u)) = e^u` on a convex cone
//! `C = R^k x C~` with zero conormal flux on `∂C`, provided the center obeys
//! the placement trichotomy: anywhere for `k = N`, on the line factor for
//! `1 <= k <= N-1`, and at the vertex for `k = 0`. The constructor enforces
//! that trichotomy.
//!
//! Everything downstream (level radii, mass laws, decay exponents) is an
//! algebraic consequence of this one formula, so the module also carries the
//! derived quantities: the peak value `t0 = ln(c_N lambda^N)`, the level
//! radius `R(t)`, the decay slope `beta = N^2/(N-1)`, and the far-field
//! diagnostics used to confirm them empirically.
//!
//! # Example
//!
//! ```
//! use finsler_liouville::cone::ConvexCone;
//! use finsler_liouville::gauge::Gauge;
//! use finsler_liouville::liouville::{c_n, LiouvilleSolution};
//!
//! let sol = LiouvilleSolution::new(
//!     Gauge::euclidean(2),
//!     1.0,
//!     vec![0.0, 0.0],
//!     ConvexCone::full_space(2),
//! ).unwrap();
//!
//! // Peak height: u(x0) = ln(c_N lambda^N), with c_2 = 8.
//! assert_eq!(c_n(2).unwrap(), 8.0);
//! assert!((sol.eval(&[0.0, 0.0]).unwrap() - 8f64.ln()).abs() < 1e-15);
//!
//! // Far field: u decays like -beta ln |x| with beta = N^2/(N-1) = 4.
//! assert_eq!(sol.beta(), 4.0);
//! let far = sol.eval(&[100.0, 0.0]).unwrap();
//! assert!(-17.0 < far && far < -16.0);
//! ```

use crate::cone::{ConvexCone, Region};
use crate::dual::DualGauge;
use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::quad::batch_rng;
use crate::vecops::{norm, scale};

/// Angular margin (in units of the facet dot product) kept between far-field
/// sample rays and the cone walls.
const RAY_MARGIN: f64 = 1e-2;

/// The normalization constant `N (N^2/(N-1))^{N-1}`.
pub fn c_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidSolution(format!("dimension must be at least 2, got {n}")));
    }
    let nf = n as f64;
    Ok(nf * (nf * nf / (nf - 1.0)).powi(n as i32 - 1))
}

/// Normalize the mass of a solution into its decay exponent:
/// `(mass / (N * unit_cap))^{1/(N-1)}`.
pub fn beta0_from_mass(mass: f64, n: usize, unit_cap_measure: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidSolution(format!("dimension must be at least 2, got {n}")));
    }
    if mass <= 0.0 || unit_cap_measure <= 0.0 {
        return Err(Error::InvalidSolution(
            "mass and unit cap measure must be positive".into(),
        ));
    }
    Ok((mass / (n as f64 * unit_cap_measure)).powf(1.0 / (n as f64 - 1.0)))
}

/// A member of the explicit family, pinned to a cone with a validated center.
#[derive(Clone, Debug)]
pub struct LiouvilleSolution {
    gauge: Gauge,
    cone: ConvexCone,
    lambda: f64,
    x0: Vec<f64>,
    hat_dual: DualGauge,
    n: usize,
}

impl LiouvilleSolution {
    pub fn new(gauge: Gauge, lambda: f64, x0: Vec<f64>, cone: ConvexCone) -> Result<Self> {
        let n = gauge.dim();
        if cone.dim() != n || x0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: cone.dim().min(x0.len()) });
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidSolution(format!("scale must be positive, got {lambda}")));
        }
        if !cone.is_admissible_center(&x0) {
            return Err(Error::InvalidSolution(format!(
                "center {x0:?} must lie on the line factor R^{} x {{0}} of the cone",
                cone.k()
            )));
        }
        let hat_dual = DualGauge::of(&gauge.reflected());
        Ok(Self { gauge, cone, lambda, x0, hat_dual, n })
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    pub fn cone(&self) -> &ConvexCone {
        &self.cone
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn center(&self) -> &[f64] {
        &self.x0
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The reflected dual gauge whose balls are the level sets.
    pub fn hat_dual(&self) -> &DualGauge {
        &self.hat_dual
    }

    /// Decay exponent `N^2/(N-1)` of the family.
    pub fn beta(&self) -> f64 {
        let nf = self.n as f64;
        nf * nf / (nf - 1.0)
    }

    /// `N/(N-1)`, the radial exponent appearing in the profile.
    fn s(&self) -> f64 {
        let nf = self.n as f64;
        nf / (nf - 1.0)
    }

    /// Peak value `u(x0) = ln(c_N lambda^N)`.
    pub fn t0(&self) -> f64 {
        c_n(self.n).expect("validated dimension").ln() + self.n as f64 * self.lambda.ln()
    }

    fn rescaled(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.lambda * (x[i] - self.x0[i])).collect()
    }

    /// Radial profile coordinate `rho = K(lambda (x - x0))`.
    pub fn profile_radius(&self, x: &[f64]) -> Result<f64> {
        self.hat_dual.value(&self.rescaled(x))
    }

    /// `ln(1 + rho^s)` evaluated without overflow for huge `rho`.
    fn log1p_pow(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let t = self.s() * rho.ln();
        if t > 30.0 {
            t + (-t).exp().ln_1p()
        } else {
            rho.powf(self.s()).ln_1p()
        }
    }

    /// The solution value.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let rho = self.profile_radius(x)?;
        Ok(self.t0() - self.n as f64 * self.log1p_pow(rho))
    }

    /// The closed-form gradient. Vanishes at the peak, where the profile
    /// exponent exceeds one.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let z = self.rescaled(x);
        if norm(&z) == 0.0 {
            return Ok(vec![0.0; self.n]);
        }
        let rho = self.hat_dual.value(&z)?;
        if rho <= 0.0 {
            return Ok(vec![0.0; self.n]);
        }
        let dual_grad = self.hat_dual.grad(&z)?;
        // factor = rho^{1/(N-1)} / (1 + rho^s), kept in log form.
        let factor = ((rho.ln() / (self.n as f64 - 1.0)) - self.log1p_pow(rho)).exp();
        Ok(scale(&dual_grad, -self.beta() * self.lambda * factor))
    }

    /// `e^u`, via the logarithmic form so far-field values underflow to zero
    /// instead of producing spurious infinities.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x)?.exp())
    }

    /// Radius of the level set `{u = t}` in units of the reflected dual
    /// gauge: `R(t) = ((e^{(t0-t)/N} - 1))^{(N-1)/N} / lambda`.
    pub fn level_radius(&self, t: f64) -> Result<f64> {
        let t0 = self.t0();
        if t >= t0 {
            return Err(Error::EmptyLevel { t, t0 });
        }
        let nf = self.n as f64;
        Ok((((t0 - t) / nf).exp_m1()).powf((nf - 1.0) / nf) / self.lambda)
    }
}

/// Far-field diagnostics of one solution.
#[derive(Clone, Debug)]
pub struct AsymptoticsReport {
    /// Least-squares decay slope of `u` against `-ln K(x - x0)`.
    pub beta_est: f64,
    /// The analytic value `N^2/(N-1)`.
    pub beta_ref: f64,
    pub beta_abs_err: f64,
    /// Spread (max minus min) of `u + beta ln K(x - x0)` over all samples.
    pub log_term_variation: f64,
    /// For each probe shell radius, `sup |x| |grad(u + beta ln K(x - x0))|`.
    pub decay_by_shell: Vec<(f64, f64)>,
    pub decay_strictly_decreasing: bool,
    /// Largest sampled value of `u + N ln |x|` (an upper envelope constant).
    pub upper_envelope: f64,
    /// Whether the per-shell envelope maxima are non-increasing outward.
    pub envelope_monotone: bool,
    /// Local two-point slope estimates along the first ray, per mid-radius.
    pub beta_by_radius: Vec<(f64, f64)>,
}

/// Directions strictly inside the cone, kept `margin` away from every facet
/// in the dot-product sense. Deterministic for a fixed seed.
pub(crate) fn interior_directions(
    cone: &ConvexCone,
    count: usize,
    margin: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = batch_rng(seed, 0);
    let mut dirs = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while dirs.len() < count {
        attempts += 1;
        if attempts > 10_000 * count.max(1) {
            return Err(Error::InvalidDomain(
                "could not sample directions strictly inside the cone".into(),
            ));
        }
        let w = crate::quad::unit_sphere_dir(&mut rng, cone.dim());
        if cone.classify(&w, margin) == Region::Inside {
            dirs.push(w);
        }
    }
    Ok(dirs)
}

/// Sample the far field along rays inside the cone and report how well the
/// decay structure holds: the slope `beta`, boundedness of the corrected
/// logarithm, the vanishing gradient correction, and the upper envelope.
pub fn asymptotic_checks(
    sol: &LiouvilleSolution,
    rays: usize,
    radius_range: (f64, f64),
) -> Result<AsymptoticsReport> {
    let (r_lo, r_hi) = radius_range;
    if !(r_lo >= 10.0 && r_hi > r_lo) {
        return Err(Error::InvalidDomain(format!(
            "radius range [{r_lo}, {r_hi}] must start at 10 or beyond"
        )));
    }
    if rays == 0 {
        return Err(Error::InvalidDomain("at least one ray is required".into()));
    }
    let dirs = interior_directions(sol.cone(), rays, RAY_MARGIN, 0xA57)?;
    let per_ray = 64usize;
    let radii: Vec<f64> = (0..per_ray)
        .map(|i| r_lo * (r_hi / r_lo).powf(i as f64 / (per_ray - 1) as f64))
        .collect();
    let beta = sol.beta();

    let mut log_radii = Vec::new();
    let mut values = Vec::new();
    let mut corrected_min = f64::INFINITY;
    let mut corrected_max = f64::NEG_INFINITY;
    let mut envelope_by_group = vec![f64::NEG_INFINITY; 4];
    let mut envelope = f64::NEG_INFINITY;

    let probe_shells = [r_lo, (r_lo * r_hi).sqrt(), r_hi];
    let mut decay_by_shell: Vec<(f64, f64)> = probe_shells.iter().map(|&r| (r, 0.0)).collect();

    for dir in &dirs {
        let h0 = sol.hat_dual().value(dir)?;
        for (i, &tau) in radii.iter().enumerate() {
            let x: Vec<f64> =
                (0..sol.dim()).map(|j| sol.center()[j] + tau * dir[j] / h0).collect();
            let u = sol.eval(&x)?;
            log_radii.push(tau.ln());
            values.push(u);
            let corrected = u + beta * tau.ln();
            corrected_min = corrected_min.min(corrected);
            corrected_max = corrected_max.max(corrected);
            let env = u + sol.dim() as f64 * norm(&x).ln();
            envelope = envelope.max(env);
            let group = i * 4 / per_ray;
            envelope_by_group[group] = envelope_by_group[group].max(env);
        }
        for (shell, worst) in decay_by_shell.iter_mut() {
            let x: Vec<f64> =
                (0..sol.dim()).map(|j| sol.center()[j] + *shell * dir[j] / h0).collect();
            let d = corrected_gradient_size(sol, &x)?;
            *worst = worst.max(d);
        }
    }

    let (slope, _) = least_squares_line(&log_radii, &values);
    let beta_est = -slope;
    let decay_strictly_decreasing =
        decay_by_shell.windows(2).all(|w| w[1].1 < w[0].1);
    let envelope_monotone =
        envelope_by_group.windows(2).all(|w| w[1] <= w[0] + 1e-9);

    // Local slopes along the first ray, for table output.
    let mut beta_by_radius = Vec::new();
    if let Some(dir) = dirs.first() {
        let h0 = sol.hat_dual().value(dir)?;
        let us: Vec<f64> = radii
            .iter()
            .map(|&tau| {
                let x: Vec<f64> =
                    (0..sol.dim()).map(|j| sol.center()[j] + tau * dir[j] / h0).collect();
                sol.eval(&x)
            })
            .collect::<Result<_>>()?;
        for i in 0..radii.len() - 1 {
            let mid = (radii[i] * radii[i + 1]).sqrt();
            let slope = (us[i + 1] - us[i]) / (radii[i + 1].ln() - radii[i].ln());
            beta_by_radius.push((mid, -slope));
        }
    }

    Ok(AsymptoticsReport {
        beta_est,
        beta_ref: beta,
        beta_abs_err: (beta_est - beta).abs(),
        log_term_variation: corrected_max - corrected_min,
        decay_by_shell,
        decay_strictly_decreasing,
        upper_envelope: envelope,
        envelope_monotone,
        beta_by_radius,
    })
}

/// `|x| * |grad(u + beta ln K(x - x0))|`, the correction that must vanish in
/// the far field.
fn corrected_gradient_size(sol: &LiouvilleSolution, x: &[f64]) -> Result<f64> {
    let z: Vec<f64> = (0..sol.dim())
        .map(|i| sol.lambda() * (x[i] - sol.center()[i]))
        .collect();
    let rho = sol.hat_dual().value(&z)?;
    let dg = sol.hat_dual().grad(&z)?;
    let gu = sol.grad(x)?;
    let corr: Vec<f64> = (0..sol.dim())
        .map(|i| gu[i] + sol.beta() * sol.lambda() * dg[i] / rho)
        .collect();
    Ok(norm(x) * norm(&corr))
}

pub(crate) fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::unit_sphere_dir;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn radial_solution(n: usize, lambda: f64) -> LiouvilleSolution {
        LiouvilleSolution::new(
            Gauge::euclidean(n),
            lambda,
            vec![0.0; n],
            ConvexCone::full_space(n),
        )
        .unwrap()
    }

    #[test]
    fn normalization_constants() {
        assert_relative_eq!(c_n(2).unwrap(), 8.0, epsilon = 1e-14);
        assert_relative_eq!(c_n(3).unwrap(), 60.75, epsilon = 1e-12);
        assert_relative_eq!(c_n(4).unwrap(), 16384.0 / 27.0, max_relative = 1e-14);
        assert!(c_n(1).is_err());
    }

    #[test]
    fn peak_and_unit_radius_values() {
        let sol = radial_solution(2, 1.0);
        assert_relative_eq!(sol.eval(&[0.0, 0.0]).unwrap(), 8f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(sol.eval(&[1.0, 0.0]).unwrap(), 2f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(sol.eval(&[0.6, -0.8]).unwrap(), 2f64.ln(), epsilon = 1e-12);

        let sol3 = radial_solution(3, 1.0);
        assert_relative_eq!(
            sol3.eval(&[0.0, 1.0, 0.0]).unwrap(),
            (60.75f64 / 8.0).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn densities_match_the_product_form() {
        let sol = radial_solution(2, 1.0);
        assert_relative_eq!(sol.density(&[0.0, 0.0]).unwrap(), 8.0, epsilon = 1e-12);
        assert_relative_eq!(sol.density(&[0.0, 1.0]).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(
            sol.density(&[100.0, 0.0]).unwrap(),
            8.0 / (10001.0 * 10001.0),
            max_relative = 1e-12
        );
        // Far field underflows gracefully.
        assert_eq!(sol.density(&[1e200, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_hand_values_and_symmetry() {
        let sol = radial_solution(2, 1.0);
        let g = sol.grad(&[1.0, 0.0]).unwrap();
        assert_relative_eq!(g[0], -2.0, epsilon = 1e-12);
        assert_relative_eq!(g[1], 0.0, epsilon = 1e-12);
        assert_eq!(sol.grad(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);

        // Rotation equivariance for the Euclidean gauge.
        let th = 0.731f64;
        let (c, s) = (th.cos(), th.sin());
        let x = [0.8, -0.4];
        let rx = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
        assert_relative_eq!(sol.eval(&x).unwrap(), sol.eval(&rx).unwrap(), epsilon = 1e-12);
        let g = sol.grad(&x).unwrap();
        let grx = sol.grad(&rx).unwrap();
        assert_relative_eq!(grx[0], c * g[0] - s * g[1], epsilon = 1e-12);
        assert_relative_eq!(grx[1], s * g[0] + c * g[1], epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let gauges = vec![
            Gauge::euclidean(2),
            Gauge::ellipsoid(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap(),
            Gauge::drifted(vec![0.3, -0.2]).unwrap(),
        ];
        let mut rng = batch_rng(0x11A, 0);
        for g in gauges {
            let sol = LiouvilleSolution::new(g, 0.8, vec![0.0, 0.0], ConvexCone::full_space(2))
                .unwrap();
            for _ in 0..40 {
                let x = scale(&unit_sphere_dir(&mut rng, 2), 10f64.powf(rng.gen_range(-0.5..1.0)));
                let grad = sol.grad(&x).unwrap();
                let h = 1e-6 * (1.0 + norm(&x));
                for i in 0..2 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let fd = (sol.eval(&xp).unwrap() - sol.eval(&xm).unwrap()) / (2.0 * h);
                    assert!(
                        (fd - grad[i]).abs() <= 2e-5 * (1.0 + grad[i].abs()),
                        "component {i}: fd {fd} vs analytic {}",
                        grad[i]
                    );
                }
            }
        }
    }

    #[test]
    fn level_radius_closed_values_and_round_trip() {
        let sol = radial_solution(2, 1.0);
        assert_relative_eq!(sol.level_radius(2f64.ln()).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            sol.level_radius((8f64 / 81.0).ln()).unwrap(),
            8f64.sqrt(),
            epsilon = 1e-12
        );
        assert!(matches!(
            sol.level_radius(sol.t0()),
            Err(Error::EmptyLevel { .. })
        ));
        assert!(sol.level_radius(sol.t0() - 1e-3).unwrap() < 0.05);

        // Round trip on seeded levels and directions, on a shifted solution.
        let shifted = LiouvilleSolution::new(
            Gauge::euclidean(2),
            1.7,
            vec![0.4, -0.2],
            ConvexCone::full_space(2),
        )
        .unwrap();
        let mut rng = batch_rng(0x11B, 0);
        for _ in 0..20 {
            let t = shifted.t0() - rng.gen_range(0.05..12.0);
            let r = shifted.level_radius(t).unwrap();
            let w = unit_sphere_dir(&mut rng, 2);
            let h0 = shifted.hat_dual().value(&w).unwrap();
            let x = [
                shifted.center()[0] + r * w[0] / h0,
                shifted.center()[1] + r * w[1] / h0,
            ];
            assert!((shifted.eval(&x).unwrap() - t).abs() <= 1e-9);
            assert_relative_eq!(shifted.density(&x).unwrap(), t.exp(), max_relative = 1e-10);
        }
    }

    #[test]
    fn scaling_closure_and_peak_identity() {
        let base = radial_solution(2, 1.0);
        let sol = LiouvilleSolution::new(
            Gauge::euclidean(2),
            2.5,
            vec![1.0, 0.0],
            ConvexCone::half_space(2),
        )
        .unwrap();
        let mut rng = batch_rng(0x11C, 0);
        for _ in 0..50 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(0.0..3.0)];
            let z = [2.5 * (x[0] - 1.0), 2.5 * x[1]];
            let expected = base.eval(&z).unwrap() + 2.0 * 2.5f64.ln();
            assert!((sol.eval(&x).unwrap() - expected).abs() <= 1e-12);
        }
        assert!((sol.eval(sol.center()).unwrap() - sol.t0()).abs() <= 1e-12);
    }

    #[test]
    fn monotone_along_rays() {
        let sol = LiouvilleSolution::new(
            Gauge::ellipsoid(vec![vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap(),
            1.0,
            vec![0.0, 0.0],
            ConvexCone::orthant(2, 2).unwrap(),
        )
        .unwrap();
        let dirs = interior_directions(sol.cone(), 6, 1e-2, 9).unwrap();
        for w in dirs {
            let mut last = f64::INFINITY;
            for i in 1..40 {
                let tau = 0.1 * 1.3f64.powi(i);
                let x = [tau * w[0], tau * w[1]];
                let u = sol.eval(&x).unwrap();
                assert!(u < last, "u must strictly decrease along rays");
                last = u;
            }
        }
    }

    #[test]
    fn constructor_enforces_the_placement_trichotomy() {
        let e = Gauge::euclidean(2);
        assert!(LiouvilleSolution::new(
            e.clone(),
            1.0,
            vec![0.3, -4.0],
            ConvexCone::full_space(2)
        )
        .is_ok());
        assert!(LiouvilleSolution::new(e.clone(), 1.0, vec![3.0, 0.0], ConvexCone::half_space(2))
            .is_ok());
        assert!(matches!(
            LiouvilleSolution::new(e.clone(), 1.0, vec![0.0, 0.5], ConvexCone::half_space(2)),
            Err(Error::InvalidSolution(_))
        ));
        assert!(matches!(
            LiouvilleSolution::new(
                e.clone(),
                1.0,
                vec![1.0, 0.0],
                ConvexCone::orthant(2, 2).unwrap()
            ),
            Err(Error::InvalidSolution(_))
        ));
        assert!(matches!(
            LiouvilleSolution::new(e, 0.0, vec![0.0, 0.0], ConvexCone::full_space(2)),
            Err(Error::InvalidSolution(_))
        ));
    }

    #[test]
    fn beta0_arithmetic() {
        use std::f64::consts::PI;
        assert_relative_eq!(beta0_from_mass(8.0 * PI, 2, PI).unwrap(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(
            beta0_from_mass(2.0 * PI, 2, PI / 4.0).unwrap(),
            4.0,
            epsilon = 1e-14
        );
        let unit = 4.0 * PI / 3.0;
        assert_relative_eq!(
            beta0_from_mass(60.75 * unit, 3, unit).unwrap(),
            4.5,
            epsilon = 1e-13
        );
        assert!(beta0_from_mass(-1.0, 2, 1.0).is_err());
    }

    #[test]
    fn far_field_slope_matches_beta() {
        let sol = radial_solution(2, 1.0);
        let rep = asymptotic_checks(&sol, 8, (1e2, 1e4)).unwrap();
        assert_relative_eq!(rep.beta_ref, 4.0, epsilon = 1e-14);
        assert!(rep.beta_abs_err <= 1e-3, "beta error {}", rep.beta_abs_err);
        assert!(rep.log_term_variation < 0.05);
        assert!(rep.decay_strictly_decreasing, "{:?}", rep.decay_by_shell);
        assert!(rep.envelope_monotone);
        let last = rep.beta_by_radius.last().unwrap();
        assert!((last.1 - 4.0).abs() < 1e-3);

        let sol3 = radial_solution(3, 1.0);
        let rep3 = asymptotic_checks(&sol3, 8, (1e2, 1e4)).unwrap();
        assert_relative_eq!(rep3.beta_ref, 4.5, epsilon = 1e-14);
        assert!(rep3.beta_abs_err <= 1e-2, "beta error {}", rep3.beta_abs_err);
    }

    #[test]
    fn far_field_slope_error_shrinks_with_radius() {
        let sol = LiouvilleSolution::new(
            Gauge::ellipsoid(vec![vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap(),
            1.0,
            vec![0.0, 0.0],
            ConvexCone::half_space(2),
        )
        .unwrap();
        let near = asymptotic_checks(&sol, 8, (1e2, 1e4)).unwrap();
        let far = asymptotic_checks(&sol, 8, (1e3, 1e5)).unwrap();
        assert!(far.beta_abs_err < near.beta_abs_err);
    }

    #[test]
    fn ray_sampling_rejects_bad_inputs() {
        let sol = radial_solution(2, 1.0);
        assert!(asymptotic_checks(&sol, 8, (1.0, 100.0)).is_err());
        assert!(asymptotic_checks(&sol, 0, (1e2, 1e4)).is_err());
    }

    #[test]
    fn drifted_gauge_profile_is_asymmetric() {
        // The reflected dual of the drifted gauge reaches 2 at +e1 and 2/3
        // at -e1, so the solution decays differently along the two rays.
        let sol = LiouvilleSolution::new(
            Gauge::drifted(vec![0.5, 0.0]).unwrap(),
            1.0,
            vec![0.0, 0.0],
            ConvexCone::full_space(2),
        )
        .unwrap();
        let plus = sol.eval(&[1.0, 0.0]).unwrap();
        let minus = sol.eval(&[-1.0, 0.0]).unwrap();
        assert!(plus < minus, "faster decay where the reflected dual is larger");
        assert_relative_eq!(sol.profile_radius(&[1.0, 0.0]).unwrap(), 2.0, max_relative = 1e-8);
        assert_relative_eq!(
            sol.profile_radius(&[-1.0, 0.0]).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-8
        );
    }
}
