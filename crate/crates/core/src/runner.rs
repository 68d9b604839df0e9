//! Suite execution: turn a [`RunConfig`] into a [`RunReport`] plus CSV tables.
//!
//! Each suite runs a fixed set of named checks against the configured gauge,
//! cone, and reference solution, at the configured quadrature budget. Check
//! names are stable (`suite.check`), so tolerance overrides and report diffs
//! key on them. Given the same config and seed, the produced report and
//! tables are byte-identical across runs.

use std::path::Path;

use rand::Rng;

use crate::balance::{
    coarea_level_mass, flux_mass_balance, level_geometry_check, mass_quantization_check,
    pohozaev_boundary_decay, pohozaev_check, total_mass, LevelRow,
};
use crate::cone::{isoperimetric_check, wulff_perimeter_identity, TestBody, WulffCap};
use crate::dual::DualGauge;
use crate::error::{Error, Result};
use crate::liouville::{asymptotic_checks, AsymptoticsReport, LiouvilleSolution};
use crate::operator::{
    convergence_study, fd_grad, interior_points, neumann_flux, residual_for_solution,
    ConvergenceStudy, FdOrder, FdScheme,
};
use crate::poincare::{corollary_ball_check, poincare_ratio, radial_family, RadialDomain};
use crate::quad::{batch_rng, unit_sphere_dir};
use crate::report::{BuiltConfig, CheckRecord, RunConfig, RunReport, Suite};
use crate::vecops::{dot, norm, scale, sub};

/// Everything a run produces: the report plus the raw table data.
pub struct RunOutcome {
    /// The structured check report.
    pub report: RunReport,
    /// Level-set rows (when the `levels` suite ran).
    pub levels: Vec<LevelRow>,
    /// Step-size refinement rows (when the `residual` suite ran).
    pub convergence: Option<ConvergenceStudy>,
    /// Far-field slope rows (when the `levels` suite ran).
    pub asymptotics: Option<AsymptoticsReport>,
}

/// Execute every suite the config requests, in order.
///
/// Configuration and construction failures surface as errors; a check that
/// merely fails its tolerance produces a failing record instead.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    let built = config.build()?;
    let mut checks: Vec<CheckRecord> = Vec::new();
    let mut levels: Vec<LevelRow> = Vec::new();
    let mut convergence: Option<ConvergenceStudy> = None;
    let mut asymptotics: Option<AsymptoticsReport> = None;

    for suite in config.expanded_suites() {
        match suite {
            Suite::Gauge => run_gauge(config, &built, &mut checks)?,
            Suite::Dual => run_dual(config, &built, &mut checks)?,
            Suite::Cone => run_cone(config, &built, &mut checks)?,
            Suite::Residual => run_residual(config, &built, &mut checks, &mut convergence)?,
            Suite::Mass => run_mass(config, &built, &mut checks)?,
            Suite::Levels => {
                run_levels(config, &built, &mut checks, &mut levels, &mut asymptotics)?
            }
            Suite::Pohozaev => run_pohozaev(config, &built, &mut checks)?,
            Suite::Poincare => run_poincare(config, &built, &mut checks)?,
            Suite::All => unreachable!("expanded_suites removes the umbrella entry"),
        }
    }

    let report = RunReport::new(config.config_hash(), checks);
    Ok(RunOutcome { report, levels, convergence, asymptotics })
}

/// Write `report.json` and the CSV tables under `dir`.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    let tables = dir.join("tables");
    std::fs::create_dir_all(&tables)?;
    std::fs::write(dir.join("report.json"), outcome.report.to_json())?;

    if !outcome.levels.is_empty() {
        let mut s = String::from("t,radius,mass_measured,mass_law\n");
        for r in &outcome.levels {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.t, r.radius, r.mass_quad.value, r.mass_law.value
            ));
        }
        std::fs::write(tables.join("levels.csv"), s)?;
    }

    if let Some(study) = &outcome.convergence {
        let mut s = String::from("h,max_residual,order_estimate\n");
        for r in &study.rows {
            s.push_str(&format!(
                "{},{},{}\n",
                r.h,
                r.max_residual,
                r.local_order.unwrap_or(study.order)
            ));
        }
        std::fs::write(tables.join("convergence.csv"), s)?;
    }

    if let Some(ar) = &outcome.asymptotics {
        let mut s = String::from("radius,beta_est\n");
        for (radius, beta) in &ar.beta_by_radius {
            s.push_str(&format!("{radius},{beta}\n"));
        }
        std::fs::write(tables.join("asymptotics.csv"), s)?;
    }

    Ok(())
}

fn run_gauge(cfg: &RunConfig, built: &BuiltConfig, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let g = &built.gauge;
    let dim = g.dim();
    let mut rng = batch_rng(cfg.seed ^ 0x6A06E, 0);
    let scales = [0.25, 1.7, 9.0];
    let mut homogeneity_worst = 0.0f64;
    let mut euler_worst = 0.0f64;
    let mut used = 0usize;
    let mut attempts = 0usize;
    while used < 200 && attempts < 20_000 {
        attempts += 1;
        let xi = unit_sphere_dir(&mut rng, dim);
        let h = g.eval(&xi)?;
        if h <= 0.0 {
            continue;
        }
        for &s in &scales {
            let sxi = scale(&xi, s);
            let hs = g.eval(&sxi)?;
            homogeneity_worst = homogeneity_worst.max(((hs - s * h) / (s * h)).abs());
        }
        match g.grad(&xi) {
            Ok(gr) => {
                euler_worst = euler_worst.max(((dot(&gr, &xi) - h) / h).abs());
                used += 1;
            }
            Err(Error::NonDifferentiable { .. }) | Err(Error::SingularPoint) => continue,
            Err(e) => return Err(e),
        }
    }

    checks.push(CheckRecord::equality(
        "gauge.homogeneity",
        "positive one-homogeneity: H(s x) = s H(x) for every s > 0 \
         (worst relative deviation over sampled rays and scales)",
        homogeneity_worst,
        0.0,
        0.0,
        cfg.tolerance("gauge.homogeneity", 1e-9),
    ));
    checks.push(CheckRecord::equality(
        "gauge.euler_identity",
        "degree-one Euler identity: <grad H(x), x> = H(x) \
         (worst relative deviation over sampled rays)",
        euler_worst,
        0.0,
        0.0,
        cfg.tolerance("gauge.euler_identity", 1e-8),
    ));

    let est = g.check_ellipticity(built.solution.dim(), 400, cfg.seed ^ 0xE111)?;
    checks.push(
        CheckRecord::lower_bound(
            "gauge.ellipticity_floor",
            "uniform convexity floor of H^N/N between sampled directions stays positive",
            est.c1_hat,
            1e-12,
            0.0,
            cfg.tolerance("gauge.ellipticity_floor", 0.0),
        )
        .with_note(&format!(
            "sampled convexity window [{:e}, {:e}] over {} direction pairs",
            est.c1_hat, est.c2_hat, est.pairs
        )),
    );
    Ok(())
}

fn run_dual(cfg: &RunConfig, built: &BuiltConfig, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let g = &built.gauge;
    let dim = g.dim();
    let dual = DualGauge::of(g);
    let mut rng = batch_rng(cfg.seed ^ 0xD0A1, 0);
    let radii = [0.5, 1.0, 2.0, 5.0];

    let mut closed_form_worst = 0.0f64;
    let mut polar_forward_worst = 0.0f64;
    let mut polar_reverse_worst = 0.0f64;
    let mut reconstruction_worst = 0.0f64;
    let mut used = 0usize;
    let mut attempts = 0usize;
    while used < 200 && attempts < 20_000 {
        attempts += 1;
        let w = unit_sphere_dir(&mut rng, dim);
        let x = scale(&w, radii[used % radii.len()]);

        let skip = |e: &Error| {
            matches!(
                e,
                Error::AmbiguousMaximizer { .. }
                    | Error::NonDifferentiable { .. }
                    | Error::SingularPoint
            )
        };

        let h0 = match dual.value(&x) {
            Ok(v) => v,
            Err(ref e) if skip(e) => continue,
            Err(e) => return Err(e),
        };
        if let Some(cf) = dual.closed_form() {
            closed_form_worst = closed_form_worst.max(((cf.eval(&x)? - h0) / h0).abs());
        }
        let dual_grad = match dual.grad(&x) {
            Ok(v) => v,
            Err(ref e) if skip(e) => continue,
            Err(e) => return Err(e),
        };
        polar_forward_worst = polar_forward_worst.max((g.eval(&dual_grad)? - 1.0).abs());

        let primal_grad = match g.grad(&x) {
            Ok(v) => v,
            Err(ref e) if skip(e) => continue,
            Err(e) => return Err(e),
        };
        let h0_of_grad = match dual.value(&primal_grad) {
            Ok(v) => v,
            Err(ref e) if skip(e) => continue,
            Err(e) => return Err(e),
        };
        polar_reverse_worst = polar_reverse_worst.max((h0_of_grad - 1.0).abs());

        let back = match g.grad(&dual_grad) {
            Ok(v) => v,
            Err(ref e) if skip(e) => continue,
            Err(e) => return Err(e),
        };
        let rebuilt = scale(&back, h0);
        reconstruction_worst = reconstruction_worst.max(norm(&sub(&x, &rebuilt)) / norm(&x));
        used += 1;
    }

    let mut closed_record = CheckRecord::equality(
        "dual.closed_form_agreement",
        "support-function search agrees with the closed-form dual gauge \
         (worst relative deviation over sampled points)",
        closed_form_worst,
        0.0,
        0.0,
        cfg.tolerance("dual.closed_form_agreement", 1e-6),
    );
    if dual.closed_form().is_none() {
        closed_record = closed_record
            .with_note("no closed form for this gauge family; search values stand alone");
    }
    checks.push(closed_record);
    checks.push(CheckRecord::equality(
        "dual.polar_forward",
        "gradient of the dual gauge lands on the unit H-sphere: H(grad H0(x)) = 1",
        polar_forward_worst,
        0.0,
        0.0,
        cfg.tolerance("dual.polar_forward", 1e-6),
    ));
    checks.push(CheckRecord::equality(
        "dual.polar_reverse",
        "gradient of the gauge lands on the unit H0-sphere: H0(grad H(x)) = 1",
        polar_reverse_worst,
        0.0,
        0.0,
        cfg.tolerance("dual.polar_reverse", 1e-6),
    ));
    checks.push(CheckRecord::equality(
        "dual.reconstruction",
        "polar reconstruction: x = H0(x) grad H(grad H0(x)) \
         (worst relative deviation over sampled points)",
        reconstruction_worst,
        0.0,
        0.0,
        cfg.tolerance("dual.reconstruction", 1e-6),
    ));
    Ok(())
}

fn run_cone(cfg: &RunConfig, built: &BuiltConfig, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let g = &built.gauge;
    let cone = &built.cone;
    let quad = &built.quad;
    let dim = cone.dim();
    let weight = g.reflected();

    let tol_perimeter = cfg.tolerance("cone.perimeter_identity", 0.01);
    let (perimeter, n_volume) = wulff_perimeter_identity(cone, &weight, quad)?;
    let scale_p = perimeter.value.abs().max(n_volume.value.abs()).max(f64::MIN_POSITIVE);
    checks.push(CheckRecord::equality(
        "cone.perimeter_identity",
        "the unit anisotropic ball's relative perimeter equals dimension times its measure",
        perimeter.value,
        n_volume.value,
        perimeter.std_err + n_volume.std_err,
        tol_perimeter * scale_p,
    ));

    let origin = vec![0.0; dim];
    let scaled_cap = WulffCap::new(g, cone, &origin, 2.5)?;
    let cap_report = isoperimetric_check(&TestBody::Cap(scaled_cap), cone, &weight, quad)?;
    checks.push(CheckRecord::equality(
        "cone.cap_scaling",
        "the isoperimetric quotient of a scaled anisotropic cap matches the unit cap's",
        cap_report.quotient,
        cap_report.wulff_quotient,
        0.0,
        cfg.tolerance("cone.cap_scaling", 0.01) * cap_report.wulff_quotient,
    ));

    let corners_inside = (0..(1usize << dim)).all(|mask| {
        let corner: Vec<f64> =
            (0..dim).map(|i| if mask & (1 << i) != 0 { 1.0 } else { 0.0 }).collect();
        cone.contains(&corner)
    });
    if corners_inside {
        let unit_box = TestBody::Box { lo: vec![0.0; dim], hi: vec![1.0; dim] };
        let box_report = isoperimetric_check(&unit_box, cone, &weight, quad)?;
        checks.push(CheckRecord::lower_bound(
            "cone.isoperimetric_box",
            "a box never beats the anisotropic cap: its isoperimetric quotient \
             stays at or above the cap's",
            box_report.quotient,
            box_report.wulff_quotient,
            0.0,
            cfg.tolerance("cone.isoperimetric_box", 0.02) * box_report.wulff_quotient,
        ));
    }
    Ok(())
}

fn run_residual(
    cfg: &RunConfig,
    built: &BuiltConfig,
    checks: &mut Vec<CheckRecord>,
    convergence: &mut Option<ConvergenceStudy>,
) -> Result<()> {
    let sol = &built.solution;
    let points = interior_points(sol, 50, 10.0, cfg.seed ^ 0x0F0D)?;

    let scheme = FdScheme::nested(1e-3)?;
    let mut worst = 0.0f64;
    for x in &points {
        worst = worst.max(residual_for_solution(sol, x, &scheme)?.abs());
    }
    checks.push(CheckRecord::equality(
        "residual.max_interior",
        "the divergence-form operator applied to the reference solution \
         returns minus its own density (worst interior residual at step 1e-3)",
        worst,
        0.0,
        0.0,
        cfg.tolerance("residual.max_interior", 1e-3),
    ));

    let study_points: Vec<Vec<f64>> = points.iter().take(12).cloned().collect();
    let study = convergence_study(sol, &study_points, &[4e-3, 2e-3, 1e-3])?;
    checks.push(CheckRecord::equality(
        "residual.convergence_order",
        "residuals shrink at second order as the stencil refines",
        study.order,
        2.0,
        0.0,
        cfg.tolerance("residual.convergence_order", 0.5),
    ));
    *convergence = Some(study);

    let grad_scheme = FdScheme::new(1e-3, 1e-5, FdOrder::Four)?;
    let mut grad_worst = 0.0f64;
    for x in points.iter().take(20) {
        let fd = fd_grad(&|y| sol.eval(y), x, &grad_scheme)?;
        let exact = sol.grad(x)?;
        grad_worst = grad_worst.max(norm(&sub(&fd, &exact)) / norm(&exact).max(1e-300));
    }
    checks.push(CheckRecord::equality(
        "residual.gradient_agreement",
        "stencil gradients match the closed-form gradient of the reference solution",
        grad_worst,
        0.0,
        0.0,
        cfg.tolerance("residual.gradient_agreement", 1e-5),
    ));

    let flux = neumann_flux(sol, &built.cone, 600, cfg.seed ^ 0x00F1)?;
    checks.push(CheckRecord::upper_bound(
        "residual.conormal_flux",
        "the conormal field of the reference solution is tangent to every cone facet",
        flux,
        0.0,
        0.0,
        cfg.tolerance("residual.conormal_flux", 1e-8),
    ));
    Ok(())
}

fn run_mass(cfg: &RunConfig, built: &BuiltConfig, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let sol = &built.solution;
    let quad = &built.quad;

    let tol_quant = cfg.tolerance("mass.quantization", 0.005);
    let mq = mass_quantization_check(sol, quad, tol_quant)?;
    checks.push(CheckRecord::from_balance(
        "mass.quantization",
        "total mass of e^u equals the dimensional constant times the unit-ball \
         measure inside the cone",
        &mq.report,
        tol_quant,
    ));
    checks.push(CheckRecord::from_balance(
        "mass.cross_estimator",
        "radial-profile and shell Monte Carlo mass estimators agree",
        &mq.cross_report,
        cfg.tolerance("mass.cross_estimator", 0.02),
    ));

    let semi_high = mq.mass.value + 3.0 * mq.mass.std_err;
    let cross_high = mq.mass.cross_value + 3.0 * mq.mass.cross_std_err;
    checks.push(CheckRecord::lower_bound(
        "mass.lower_bound",
        "measured mass plus three standard errors reaches the quantized value",
        semi_high.max(cross_high),
        mq.expected.value,
        0.0,
        cfg.tolerance("mass.lower_bound", 0.0),
    ));

    let base = mq.mass.value;
    let base_sigma = mq.mass.std_err;
    let mut worst_gap = 0.0f64;
    let mut sigma = 0.0f64;
    for lambda in [0.5, 3.0] {
        let other = LiouvilleSolution::new(
            built.gauge.clone(),
            lambda,
            sol.center().to_vec(),
            built.cone.clone(),
        )?;
        let m = total_mass(&other, quad)?;
        worst_gap = worst_gap.max((m.value - base).abs());
        sigma = sigma.max(m.std_err + base_sigma);
    }
    let invariance_default = (3.0 * sigma).max(1e-9 * base.abs());
    checks.push(CheckRecord::equality(
        "mass.scale_invariance",
        "total mass does not depend on the concentration parameter \
         (worst gap across rescaled solutions)",
        worst_gap,
        0.0,
        sigma,
        cfg.tolerance("mass.scale_invariance", invariance_default),
    ));

    for (tag, radius) in [("inner", 0.1), ("unit", 1.0), ("outer", 10.0)] {
        let name = format!("mass.flux_balance_{tag}");
        let tol = cfg.tolerance(&name, 0.01);
        let balance = flux_mass_balance(sol, radius, quad, tol)?;
        checks.push(CheckRecord::from_balance(
            name,
            format!(
                "divergence theorem at anisotropic radius {radius}: boundary flux of the \
                 conormal field equals the enclosed mass"
            ),
            &balance,
            tol,
        ));
    }
    Ok(())
}

fn run_levels(
    cfg: &RunConfig,
    built: &BuiltConfig,
    checks: &mut Vec<CheckRecord>,
    levels: &mut Vec<LevelRow>,
    asymptotics: &mut Option<AsymptoticsReport>,
) -> Result<()> {
    let sol = &built.solution;
    let quad = &built.quad;

    let mut rng = batch_rng(cfg.seed ^ 0x1EE7, 0);
    let mut offsets: Vec<f64> = (0..5).map(|_| rng.gen_range(0.4..10.0)).collect();
    offsets.sort_by(|a, b| a.partial_cmp(b).expect("finite offsets"));
    let t0 = sol.t0();
    let ts: Vec<f64> = offsets.iter().map(|d| t0 - d).collect();

    let rows = level_geometry_check(sol, &ts, quad)?;

    let mut radius_worst = 0.0f64;
    let mut mass_worst = 0.0f64;
    let mut mass_sigma = 0.0f64;
    let mut reconstruction_worst = 0.0f64;
    let mut spread_worst = 0.0f64;
    let mut grad_norm_spread_min = f64::INFINITY;
    for r in &rows {
        radius_worst = radius_worst.max(((r.radius - r.radius_law) / r.radius_law).abs());
        let scale_m = r.mass_quad.value.abs().max(r.mass_law.value.abs()).max(f64::MIN_POSITIVE);
        mass_worst = mass_worst.max((r.mass_quad.value - r.mass_law.value).abs() / scale_m);
        mass_sigma = mass_sigma.max((r.mass_quad.std_err + r.mass_law.std_err) / scale_m);
        reconstruction_worst = reconstruction_worst
            .max((r.mass_reconstructed - r.mass_quad.value).abs() / scale_m);
        spread_worst = spread_worst.max(r.gauge_grad_spread);
        grad_norm_spread_min = grad_norm_spread_min.min(r.grad_norm_spread);
    }

    checks.push(CheckRecord::equality(
        "levels.radius_law",
        "level-set radius follows the exponential decay law in the level value",
        radius_worst,
        0.0,
        0.0,
        cfg.tolerance("levels.radius_law", 1e-3),
    ));
    let mass_default = (3.0 * mass_sigma).max(1e-3);
    checks.push(CheckRecord::equality(
        "levels.mass_law",
        "superlevel mass follows its closed-form law at every sampled level",
        mass_worst,
        0.0,
        mass_sigma,
        cfg.tolerance("levels.mass_law", mass_default),
    ));
    checks.push(CheckRecord::equality(
        "levels.mass_reconstruction",
        "superlevel mass is recovered from the gauge gradient on the level set",
        reconstruction_worst,
        0.0,
        0.0,
        cfg.tolerance("levels.mass_reconstruction", 5e-3),
    ));
    checks.push(CheckRecord::equality(
        "levels.gauge_constancy",
        "the gauge of the gradient is constant on each level set",
        spread_worst,
        0.0,
        0.0,
        cfg.tolerance("levels.gauge_constancy", 1e-8),
    ));

    for (i, &t) in ts.iter().enumerate() {
        let name = format!("levels.coarea_{}", i + 1);
        let tol = cfg.tolerance(&name, 0.01);
        let balance = coarea_level_mass(sol, t, quad, tol)?;
        checks.push(CheckRecord::from_balance(
            name,
            format!(
                "co-area slicing at level t = {t}: superlevel mass equals the level-set \
                 integral of H^N(grad u)/|grad u|"
            ),
            &balance,
            tol,
        ));
    }
    *levels = rows;

    let (c_min, c_max) = built.gauge.sphere_extrema(4000)?;
    if c_max / c_min - 1.0 > 1e-6 {
        checks.push(CheckRecord::lower_bound(
            "levels.gradient_norm_spread",
            "anisotropy shows: the Euclidean gradient size varies along each level set",
            grad_norm_spread_min,
            1e-2,
            0.0,
            cfg.tolerance("levels.gradient_norm_spread", 0.0),
        ));
    }

    // Scale the fit window by 1/lambda so the dimensionless range, and with
    // it the curvature bias of the slope estimate, is the same for every
    // concentration parameter.
    let far = asymptotic_checks(sol, 24, (1e2 / sol.lambda(), 1e4 / sol.lambda()))?;
    checks.push(CheckRecord::equality(
        "levels.asymptotic_slope",
        "far-field logarithmic slope of the solution matches the mass-determined exponent",
        far.beta_est,
        far.beta_ref,
        0.0,
        cfg.tolerance("levels.asymptotic_slope", 1e-3),
    ));
    let worst_increase = far
        .decay_by_shell
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(CheckRecord::upper_bound(
        "levels.decay_monotone",
        "the corrected gradient decay strictly decreases across far-field shells",
        worst_increase,
        0.0,
        0.0,
        cfg.tolerance("levels.decay_monotone", 0.0),
    ));
    *asymptotics = Some(far);
    Ok(())
}

fn run_pohozaev(cfg: &RunConfig, built: &BuiltConfig, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let sol = &built.solution;
    let quad = &built.quad;

    for (tag, radius) in [("unit", 1.0), ("outer", 10.0)] {
        let name = format!("pohozaev.balance_{tag}");
        let tol = cfg.tolerance(&name, 0.01);
        let balance = pohozaev_check(sol, radius, quad, tol)?;
        checks.push(CheckRecord::from_balance(
            name,
            format!(
                "domain-derivative balance on the anisotropic ball of radius {radius}: \
                 bulk terms equal the boundary terms"
            ),
            &balance,
            tol,
        ));
    }

    let (_rows, slope) = pohozaev_boundary_decay(sol, &[10.0, 30.0, 100.0], quad)?;
    let expected = sol.dim() as f64 - sol.beta();
    checks.push(CheckRecord::equality(
        "pohozaev.boundary_decay",
        "boundary terms decay with the mass-determined exponent as the radius grows",
        slope,
        expected,
        0.0,
        cfg.tolerance("pohozaev.boundary_decay", 0.3),
    ));
    Ok(())
}

fn run_poincare(cfg: &RunConfig, built: &BuiltConfig, checks: &mut Vec<CheckRecord>) -> Result<()> {
    let cone = &built.cone;
    let quad = &built.quad;
    let dim = cone.dim();
    let pcfg = cfg.poincare.clone().unwrap_or_default();

    let mut far_point = vec![0.0; dim];
    far_point[dim - 1] = -10.0;
    let domains = [
        ("fan_shell", RadialDomain::fan_shell(cone.clone(), 1.0, 2.0)?),
        (
            "multi_shell",
            RadialDomain::multi_shell(cone.clone(), vec![(1.0, 2.0), (4.0, 8.0)])?,
        ),
        ("ball", RadialDomain::ball(1.0, far_point)?),
    ];

    let expected_widths = [1.0, 4.0, 2.0];
    let mut width_worst = 0.0f64;
    for (i, (_, dom)) in domains.iter().enumerate() {
        width_worst = width_worst.max((dom.radial_width() - expected_widths[i]).abs());
    }
    checks.push(CheckRecord::equality(
        "poincare.widths",
        "directional widths of the three reference domains take their exact values",
        width_worst,
        0.0,
        0.0,
        cfg.tolerance("poincare.widths", 0.0),
    ));

    for (i, (tag, dom)) in domains.iter().enumerate() {
        let family = radial_family(dom, pcfg.family_size, cfg.seed ^ (0x90 + i as u64));
        for &p in &pcfg.exponents {
            let mut worst = 0.0f64;
            let mut sigma_rel = 0.0f64;
            for f in &family {
                let r = poincare_ratio(dom, f, p, quad)?;
                worst = worst.max(r.ratio);
                sigma_rel = sigma_rel.max(r.sigma_rel);
            }
            let bound = dom.radial_width();
            let name = format!("poincare.{tag}_p{p}");
            let default_tol = 3.0 * sigma_rel * bound;
            checks.push(CheckRecord::upper_bound(
                name.clone(),
                format!(
                    "L^{p} norm of each vanishing test function stays within the \
                     directional width times its gradient norm"
                ),
                worst,
                bound,
                sigma_rel * bound,
                cfg.tolerance(&name, default_tol),
            ));
        }
    }

    let constants =
        corollary_ball_check(dim, 2.0, pcfg.eps, pcfg.family_size, cfg.seed ^ 0x00C0, quad)?;
    checks.push(CheckRecord::upper_bound(
        "poincare.corollary_zero_boundary",
        "functions vanishing on the whole unit sphere obey the width-one bound",
        constants.zero_boundary_max_ratio,
        constants.zero_boundary_bound,
        0.0,
        cfg.tolerance("poincare.corollary_zero_boundary", 0.05),
    ));
    checks.push(CheckRecord::upper_bound(
        "poincare.corollary_cap",
        "functions vanishing on a spherical cap obey the width-two bound",
        constants.cap_max_ratio,
        constants.cap_bound,
        0.0,
        cfg.tolerance("poincare.corollary_cap", 0.1),
    ));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{
        ConeSpec, GaugeSpec, PoincareConfig, QuadConfig, SolutionSpec, Suite,
    };
    use crate::quad::QuadMethod;
    use std::collections::BTreeMap;

    fn base_config(suites: Vec<Suite>, budget: usize) -> RunConfig {
        RunConfig {
            gauge: GaugeSpec { kind: "euclidean".into(), q: None, matrix: None, drift: None },
            cone: ConeSpec {
                kind: "full_space".into(),
                constrained: None,
                line_dims: None,
                normals: None,
            },
            solution: SolutionSpec { n: 2, lambda: 1.0, x0: vec![0.0, 0.0] },
            quadrature: QuadConfig {
                method: QuadMethod::TensorPolar,
                budget,
                target_rel_err: 1e-3,
            },
            suites,
            seed: 42,
            tolerances: BTreeMap::new(),
            output: None,
            poincare: Some(PoincareConfig { family_size: 4, eps: 0.1, exponents: vec![2.0] }),
        }
    }

    #[test]
    fn gauge_and_dual_suites_pass_on_the_euclidean_gauge() {
        let cfg = base_config(vec![Suite::Gauge, Suite::Dual], 20_000);
        let outcome = execute(&cfg).unwrap();
        assert!(outcome.report.overall_pass, "{:#?}", outcome.report.checks);
        let names: Vec<&str> =
            outcome.report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "gauge.homogeneity",
                "gauge.euler_identity",
                "gauge.ellipticity_floor",
                "dual.closed_form_agreement",
                "dual.polar_forward",
                "dual.polar_reverse",
                "dual.reconstruction",
            ]
        );
    }

    #[test]
    fn cone_and_residual_suites_pass_on_a_quadrant() {
        let mut cfg = base_config(vec![Suite::Cone, Suite::Residual], 20_000);
        cfg.cone = ConeSpec {
            kind: "orthant".into(),
            constrained: Some(2),
            line_dims: None,
            normals: None,
        };
        cfg.solution.x0 = vec![0.0, 0.0];
        let outcome = execute(&cfg).unwrap();
        assert!(outcome.report.overall_pass, "{:#?}", outcome.report.checks);
        assert!(outcome.convergence.is_some());
        let study = outcome.convergence.unwrap();
        assert!(study.order > 1.5 && study.order < 2.5);
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let cfg = base_config(vec![Suite::Gauge, Suite::Cone], 16_000);
        let a = execute(&cfg).unwrap();
        let b = execute(&cfg).unwrap();
        assert_eq!(a.report.to_json(), b.report.to_json());
    }

    #[test]
    fn unattainable_tolerance_fails_with_an_explanation() {
        let mut cfg = base_config(vec![Suite::Mass], 40_000);
        cfg.tolerances.insert("mass.cross_estimator".into(), 1e-12);
        let outcome = execute(&cfg).unwrap();
        assert!(!outcome.report.overall_pass);
        let rec = outcome
            .report
            .checks
            .iter()
            .find(|c| c.name == "mass.cross_estimator")
            .unwrap();
        assert!(!rec.pass);
        assert!(rec.note.contains("noise floor"), "note: {}", rec.note);
    }

    #[test]
    fn outputs_land_on_disk() {
        let cfg = base_config(vec![Suite::Residual], 16_000);
        let outcome = execute(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(&outcome, dir.path()).unwrap();
        let report_text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let parsed: RunReport = serde_json::from_str(&report_text).unwrap();
        assert_eq!(parsed.checks.len(), outcome.report.checks.len());
        let conv = std::fs::read_to_string(dir.path().join("tables/convergence.csv")).unwrap();
        assert!(conv.starts_with("h,max_residual,order_estimate\n"));
        assert_eq!(conv.lines().count(), 4);
    }

    #[test]
    fn misplaced_centers_are_construction_errors() {
        let mut cfg = base_config(vec![Suite::Mass], 16_000);
        cfg.cone = ConeSpec {
            kind: "orthant".into(),
            constrained: Some(2),
            line_dims: None,
            normals: None,
        };
        cfg.solution.x0 = vec![1.0, 0.0];
        assert!(matches!(execute(&cfg), Err(Error::InvalidSolution(_))));
    }
}
