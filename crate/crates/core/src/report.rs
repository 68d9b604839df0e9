//! Run configuration schema and the structured check report.
//!
//! A [`RunConfig`] describes one verification run: the gauge and cone under
//! test, the reference solution parameters, the quadrature budget, which
//! check suites to execute, and the seed that makes every stochastic
//! estimate reproducible. Configs are strict JSON: unknown keys are
//! rejected so that typos fail loudly instead of silently running defaults.
//!
//! A [`RunReport`] is the machine-readable outcome: one [`CheckRecord`] per
//! executed check, each carrying both sides of the identity it tested, the
//! gap, the quadrature noise, the tolerance in force, and a pass flag. The
//! report is byte-stable: serializing the same config with the same seed and
//! tool version produces identical bytes, so reports can be diffed directly.
//!
//! # Example
//!
//! ```
//! use finsler_liouville::report::RunConfig;
//! use finsler_liouville::runner::execute;
//!
//! let config = RunConfig::from_json(r#"{
//!     "gauge": { "kind": "euclidean" },
//!     "cone": { "kind": "full_space" },
//!     "solution": { "N": 2, "lambda": 1.0, "x0": [0.0, 0.0] },
//!     "quadrature": { "method": "tensor_polar", "budget": 20000 },
//!     "suites": ["gauge", "dual"],
//!     "seed": 1
//! }"#).unwrap();
//!
//! let outcome = execute(&config).unwrap();
//! assert!(outcome.report.overall_pass);
//! assert_eq!(outcome.report.checks.len(), 7);
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::balance::BalanceReport;
use crate::cone::ConvexCone;
use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::liouville::LiouvilleSolution;
use crate::quad::{QuadMethod, QuadratureSpec};

/// Gauge description as it appears in a config file.
///
/// The `kind` selects the family; the remaining fields supply that family's
/// parameters and must be present exactly when the family needs them.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    /// One of `euclidean`, `pnorm`, `linear_image`, `ellipsoid`, `drifted`.
    pub kind: String,
    /// Norm exponent for `pnorm` and `linear_image`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    /// Row-major matrix for `linear_image` (the map applied before the norm)
    /// or `ellipsoid` (the symmetric positive definite quadratic form).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Drift vector for `drifted` (Euclidean norm plus a linear term).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
}

impl GaugeSpec {
    /// Build the gauge in the given ambient dimension.
    pub fn to_gauge(&self, dim: usize) -> Result<Gauge> {
        let forbid = |field: &Option<()>, name: &str, kind: &str| -> Result<()> {
            if field.is_some() {
                return Err(Error::InvalidConfig(format!(
                    "gauge kind '{kind}' does not take a '{name}' parameter"
                )));
            }
            Ok(())
        };
        let q_tag = self.q.map(|_| ());
        let m_tag = self.matrix.as_ref().map(|_| ());
        let d_tag = self.drift.as_ref().map(|_| ());
        let gauge = match self.kind.as_str() {
            "euclidean" => {
                forbid(&q_tag, "q", "euclidean")?;
                forbid(&m_tag, "matrix", "euclidean")?;
                forbid(&d_tag, "drift", "euclidean")?;
                Gauge::euclidean(dim)
            }
            "pnorm" => {
                forbid(&m_tag, "matrix", "pnorm")?;
                forbid(&d_tag, "drift", "pnorm")?;
                let q = self.q.ok_or_else(|| {
                    Error::InvalidConfig("gauge kind 'pnorm' requires a 'q' parameter".into())
                })?;
                Gauge::pnorm(dim, q)?
            }
            "linear_image" => {
                forbid(&d_tag, "drift", "linear_image")?;
                let q = self.q.ok_or_else(|| {
                    Error::InvalidConfig("gauge kind 'linear_image' requires 'q'".into())
                })?;
                let m = self.matrix.clone().ok_or_else(|| {
                    Error::InvalidConfig("gauge kind 'linear_image' requires 'matrix'".into())
                })?;
                Gauge::linear_image(m, q)?
            }
            "ellipsoid" => {
                forbid(&q_tag, "q", "ellipsoid")?;
                forbid(&d_tag, "drift", "ellipsoid")?;
                let m = self.matrix.clone().ok_or_else(|| {
                    Error::InvalidConfig("gauge kind 'ellipsoid' requires 'matrix'".into())
                })?;
                Gauge::ellipsoid(m)?
            }
            "drifted" => {
                forbid(&q_tag, "q", "drifted")?;
                forbid(&m_tag, "matrix", "drifted")?;
                let b = self.drift.clone().ok_or_else(|| {
                    Error::InvalidConfig("gauge kind 'drifted' requires 'drift'".into())
                })?;
                Gauge::drifted(b)?
            }
            other => {
                return Err(Error::InvalidConfig(format!("unknown gauge kind '{other}'")));
            }
        };
        if gauge.dim() != dim {
            return Err(Error::InvalidConfig(format!(
                "gauge dimension {} does not match solution dimension {dim}",
                gauge.dim()
            )));
        }
        Ok(gauge)
    }
}

/// Cone description as it appears in a config file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    /// One of `full_space`, `half_space`, `orthant`, `custom`.
    pub kind: String,
    /// For `orthant`: how many coordinates are constrained to be nonnegative.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constrained: Option<usize>,
    /// For `custom`: the dimension of the free linear factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_dims: Option<usize>,
    /// For `custom`: outward unit normals of the facets, one per facet,
    /// supported on the constrained coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec<f64>>>,
}

impl ConeSpec {
    /// Build the cone in the given ambient dimension.
    pub fn to_cone(&self, dim: usize) -> Result<ConvexCone> {
        match self.kind.as_str() {
            "full_space" => {
                self.forbid_all()?;
                Ok(ConvexCone::full_space(dim))
            }
            "half_space" => {
                self.forbid_all()?;
                Ok(ConvexCone::half_space(dim))
            }
            "orthant" => {
                if self.line_dims.is_some() || self.normals.is_some() {
                    return Err(Error::InvalidConfig(
                        "cone kind 'orthant' takes only the 'constrained' parameter".into(),
                    ));
                }
                let m = self.constrained.ok_or_else(|| {
                    Error::InvalidConfig("cone kind 'orthant' requires 'constrained'".into())
                })?;
                ConvexCone::orthant(dim, m)
            }
            "custom" => {
                if self.constrained.is_some() {
                    return Err(Error::InvalidConfig(
                        "cone kind 'custom' takes 'line_dims' and 'normals', not 'constrained'"
                            .into(),
                    ));
                }
                let k = self.line_dims.ok_or_else(|| {
                    Error::InvalidConfig("cone kind 'custom' requires 'line_dims'".into())
                })?;
                let normals = self.normals.clone().ok_or_else(|| {
                    Error::InvalidConfig("cone kind 'custom' requires 'normals'".into())
                })?;
                ConvexCone::new(dim, k, normals)
            }
            other => Err(Error::InvalidConfig(format!("unknown cone kind '{other}'"))),
        }
    }

    fn forbid_all(&self) -> Result<()> {
        if self.constrained.is_some() || self.line_dims.is_some() || self.normals.is_some() {
            return Err(Error::InvalidConfig(format!(
                "cone kind '{}' takes no parameters",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Parameters of the reference solution under test.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    /// Ambient dimension; also the homogeneity exponent of the operator.
    #[serde(rename = "N")]
    pub n: usize,
    /// Concentration parameter; larger concentrates the density at the center.
    pub lambda: f64,
    /// Center of the solution. Must satisfy the cone's placement rule.
    pub x0: Vec<f64>,
}

/// Quadrature method and budget. The run seed feeds every stochastic
/// estimate, so the quadrature block carries no seed of its own.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadConfig {
    /// `tensor` (deterministic product rules) or `monte_carlo`.
    pub method: QuadMethod,
    /// Total node budget per integral.
    pub budget: usize,
    /// Relative accuracy the estimates aim for; truncation guards use it.
    #[serde(default = "default_target_rel_err")]
    pub target_rel_err: f64,
}

fn default_target_rel_err() -> f64 {
    1e-3
}

impl QuadConfig {
    /// Materialize a full quadrature specification with the run seed.
    pub fn to_spec(&self, seed: u64) -> Result<QuadratureSpec> {
        QuadratureSpec::new(self.method, self.budget, seed, self.target_rel_err)
    }
}

/// Optional knobs for the inequality-family suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareConfig {
    /// Test functions generated per domain.
    #[serde(default = "default_family_size")]
    pub family_size: usize,
    /// Aperture parameter for the off-center ball family.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Integrability exponents to test.
    #[serde(default = "default_exponents")]
    pub exponents: Vec<f64>,
}

fn default_family_size() -> usize {
    12
}

fn default_eps() -> f64 {
    0.1
}

fn default_exponents() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

impl Default for PoincareConfig {
    fn default() -> Self {
        Self {
            family_size: default_family_size(),
            eps: default_eps(),
            exponents: default_exponents(),
        }
    }
}

/// Named groups of checks that a run can execute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Gauge axioms: homogeneity, the Euler identity, ellipticity bounds.
    Gauge,
    /// Support-function duality: closed forms, polar identities, reconstruction.
    Dual,
    /// Cone geometry: perimeter-volume identity, isoperimetric comparison.
    Cone,
    /// Interior equation residuals, convergence order, boundary flux.
    Residual,
    /// Total-mass quantization and the flux-mass balance.
    Mass,
    /// Level-set geometry: radius and mass laws, gradient constancy.
    Levels,
    /// Domain-derivative balance on balls and boundary-term decay.
    Pohozaev,
    /// Directional-width inequalities on radially convex domains.
    Poincare,
    /// Everything above, in the listed order.
    All,
}

impl Suite {
    /// All concrete suites in canonical execution order.
    pub fn all_concrete() -> [Suite; 8] {
        [
            Suite::Gauge,
            Suite::Dual,
            Suite::Cone,
            Suite::Residual,
            Suite::Mass,
            Suite::Levels,
            Suite::Pohozaev,
            Suite::Poincare,
        ]
    }

    /// Stable lowercase name, matching the config-file spelling.
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Gauge => "gauge",
            Suite::Dual => "dual",
            Suite::Cone => "cone",
            Suite::Residual => "residual",
            Suite::Mass => "mass",
            Suite::Levels => "levels",
            Suite::Pohozaev => "pohozaev",
            Suite::Poincare => "poincare",
            Suite::All => "all",
        }
    }

    /// Parse a config-file spelling.
    pub fn parse(name: &str) -> Result<Suite> {
        match name {
            "gauge" => Ok(Suite::Gauge),
            "dual" => Ok(Suite::Dual),
            "cone" => Ok(Suite::Cone),
            "residual" => Ok(Suite::Residual),
            "mass" => Ok(Suite::Mass),
            "levels" => Ok(Suite::Levels),
            "pohozaev" => Ok(Suite::Pohozaev),
            "poincare" => Ok(Suite::Poincare),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidConfig(format!("unknown suite '{other}'"))),
        }
    }
}

/// One verification run: what to test, how hard, and with which seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// The gauge under test.
    pub gauge: GaugeSpec,
    /// The cone domain.
    pub cone: ConeSpec,
    /// Reference solution parameters.
    pub solution: SolutionSpec,
    /// Quadrature method and budget.
    pub quadrature: QuadConfig,
    /// Which suites to run, in order. `all` expands to every suite.
    pub suites: Vec<Suite>,
    /// Master seed; every stochastic estimate derives from it.
    pub seed: u64,
    /// Per-check tolerance overrides, keyed by check name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    /// Default output directory; the command line can override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Knobs for the inequality-family suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poincare: Option<PoincareConfig>,
}

/// The validated, constructed objects a run operates on.
pub struct BuiltConfig {
    /// The gauge under test.
    pub gauge: Gauge,
    /// The cone domain.
    pub cone: ConvexCone,
    /// The reference solution.
    pub solution: LiouvilleSolution,
    /// The quadrature specification, seeded from the run seed.
    pub quad: QuadratureSpec,
}

impl RunConfig {
    /// Parse a strict-JSON config. Unknown keys and type mismatches are
    /// rejected with a descriptive error.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("config parse error: {e}")))
    }

    /// Serialize back to pretty JSON (stable field order).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Validate and construct every object the run needs.
    pub fn build(&self) -> Result<BuiltConfig> {
        if self.suites.is_empty() {
            return Err(Error::InvalidConfig("'suites' must list at least one suite".into()));
        }
        let dim = self.solution.n;
        let gauge = self.gauge.to_gauge(dim)?;
        let cone = self.cone.to_cone(dim)?;
        let solution = LiouvilleSolution::new(
            gauge.clone(),
            self.solution.lambda,
            self.solution.x0.clone(),
            cone.clone(),
        )?;
        let quad = self.quadrature.to_spec(self.seed)?;
        Ok(BuiltConfig { gauge, cone, solution, quad })
    }

    /// The suites to execute: declared order, `all` expanded, duplicates
    /// dropped while keeping first occurrence.
    pub fn expanded_suites(&self) -> Vec<Suite> {
        let mut out: Vec<Suite> = Vec::new();
        for s in &self.suites {
            match s {
                Suite::All => {
                    for c in Suite::all_concrete() {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
                other => {
                    if !out.contains(other) {
                        out.push(*other);
                    }
                }
            }
        }
        out
    }

    /// Tolerance for a named check: the override if present, else `default`.
    pub fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }

    /// Hash of the effective config (after any command-line overrides), so a
    /// report pins down exactly what produced it.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").expect("hex write");
        }
        hex
    }
}

/// Outcome of one check: both sides of the identity, the gap, the noise,
/// the tolerance in force, and the verdict.
///
/// Pass rule: the check passes when the gap is within tolerance **and** the
/// quadrature noise floor (three standard errors) is at or below the
/// tolerance. A tolerance below the noise floor cannot be certified at the
/// given budget, so the record fails with an explanatory note instead of
/// passing on luck.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    /// Stable identifier, `suite.check` style.
    pub name: String,
    /// Human-readable statement of the identity or bound under test.
    pub law: String,
    /// Left side (measured value).
    pub lhs: f64,
    /// Right side (reference or bound).
    pub rhs: f64,
    /// Absolute gap the pass rule judges: `|lhs - rhs|` for equalities, the
    /// excess over the bound for one-sided checks.
    pub gap: f64,
    /// One-standard-error estimate of quadrature noise on the gap.
    pub sigma: f64,
    /// Absolute tolerance in force.
    pub tolerance: f64,
    /// Verdict under the pass rule.
    pub pass: bool,
    /// Explanation when the verdict needs one; empty otherwise.
    pub note: String,
}

fn apply_noise_rule(gap: f64, sigma: f64, tolerance: f64) -> (bool, String) {
    let floor = 3.0 * sigma;
    if floor > tolerance {
        (
            false,
            format!(
                "tolerance {tolerance:e} is below the quadrature noise floor 3*sigma = \
                 {floor:e}; raise the budget or relax the tolerance"
            ),
        )
    } else if gap <= tolerance {
        (true, String::new())
    } else {
        (false, String::new())
    }
}

impl CheckRecord {
    /// Two-sided check: `lhs` should equal `rhs` within `tol_abs`.
    pub fn equality(
        name: impl Into<String>,
        law: impl Into<String>,
        lhs: f64,
        rhs: f64,
        sigma: f64,
        tol_abs: f64,
    ) -> CheckRecord {
        let gap = (lhs - rhs).abs();
        let (pass, note) = apply_noise_rule(gap, sigma, tol_abs);
        CheckRecord {
            name: name.into(),
            law: law.into(),
            lhs,
            rhs,
            gap,
            sigma,
            tolerance: tol_abs,
            pass,
            note,
        }
    }

    /// One-sided check: `value` should not exceed `bound` by more than
    /// `tol_abs`. The gap is the excess, zero when the bound holds.
    pub fn upper_bound(
        name: impl Into<String>,
        law: impl Into<String>,
        value: f64,
        bound: f64,
        sigma: f64,
        tol_abs: f64,
    ) -> CheckRecord {
        let gap = (value - bound).max(0.0);
        let (pass, note) = apply_noise_rule(gap, sigma, tol_abs);
        CheckRecord {
            name: name.into(),
            law: law.into(),
            lhs: value,
            rhs: bound,
            gap,
            sigma,
            tolerance: tol_abs,
            pass,
            note,
        }
    }

    /// One-sided check: `value` should not fall below `bound` by more than
    /// `tol_abs`.
    pub fn lower_bound(
        name: impl Into<String>,
        law: impl Into<String>,
        value: f64,
        bound: f64,
        sigma: f64,
        tol_abs: f64,
    ) -> CheckRecord {
        let gap = (bound - value).max(0.0);
        let (pass, note) = apply_noise_rule(gap, sigma, tol_abs);
        CheckRecord {
            name: name.into(),
            law: law.into(),
            lhs: value,
            rhs: bound,
            gap,
            sigma,
            tolerance: tol_abs,
            pass,
            note,
        }
    }

    /// Record a two-estimate balance at a relative tolerance. The absolute
    /// tolerance is `tol_rel` times the larger magnitude of the two sides.
    pub fn from_balance(
        name: impl Into<String>,
        law: impl Into<String>,
        report: &BalanceReport,
        tol_rel: f64,
    ) -> CheckRecord {
        let scale = report.lhs.abs().max(report.rhs.abs()).max(f64::MIN_POSITIVE);
        CheckRecord::equality(
            name,
            law,
            report.lhs,
            report.rhs,
            report.quadrature_err,
            tol_rel * scale,
        )
    }

    /// Append a clause to the record's note.
    pub fn with_note(mut self, extra: &str) -> CheckRecord {
        if self.note.is_empty() {
            self.note = extra.to_string();
        } else {
            self.note.push_str("; ");
            self.note.push_str(extra);
        }
        self
    }
}

/// Machine-readable outcome of a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    /// Tool version that produced the report.
    pub version: String,
    /// Hash of the effective config (after command-line overrides).
    pub config_hash: String,
    /// One record per executed check, in execution order.
    pub checks: Vec<CheckRecord>,
    /// True exactly when every record passed.
    pub overall_pass: bool,
}

impl RunReport {
    /// Assemble a report from finished checks.
    pub fn new(config_hash: String, checks: Vec<CheckRecord>) -> RunReport {
        let overall_pass = checks.iter().all(|c| c.pass);
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            checks,
            overall_pass,
        }
    }

    /// Pretty JSON with a trailing newline; byte-stable for a fixed
    /// `(config, seed, version)` triple.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_config_text() -> String {
        r#"{
            "gauge": { "kind": "euclidean" },
            "cone": { "kind": "full_space" },
            "solution": { "N": 2, "lambda": 1.0, "x0": [0.0, 0.0] },
            "quadrature": { "method": "tensor_polar", "budget": 20000 },
            "suites": ["mass"],
            "seed": 42
        }"#
        .to_string()
    }

    #[test]
    fn parses_a_minimal_config() {
        let cfg = RunConfig::from_json(&sample_config_text()).unwrap();
        assert_eq!(cfg.solution.n, 2);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.quadrature.target_rel_err, 1e-3);
        let built = cfg.build().unwrap();
        assert_eq!(built.gauge.dim(), 2);
        assert_eq!(built.cone.k(), 2);
        assert_eq!(built.solution.dim(), 2);
        assert_eq!(built.quad.seed, 42);
    }

    #[test]
    fn rejects_unknown_keys_everywhere() {
        let top = sample_config_text().replace("\"seed\": 42", "\"seed\": 42, \"extra\": 1");
        assert!(matches!(RunConfig::from_json(&top), Err(Error::InvalidConfig(_))));

        let nested = sample_config_text()
            .replace("\"kind\": \"euclidean\"", "\"kind\": \"euclidean\", \"typo\": true");
        assert!(matches!(RunConfig::from_json(&nested), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn rejects_missing_and_extraneous_gauge_parameters() {
        let missing_q = GaugeSpec { kind: "pnorm".into(), q: None, matrix: None, drift: None };
        assert!(missing_q.to_gauge(2).is_err());

        let stray_q = GaugeSpec { kind: "euclidean".into(), q: Some(2.0), matrix: None, drift: None };
        assert!(stray_q.to_gauge(2).is_err());

        let bad_kind = GaugeSpec { kind: "mystery".into(), q: None, matrix: None, drift: None };
        assert!(bad_kind.to_gauge(2).is_err());

        let ellipsoid = GaugeSpec {
            kind: "ellipsoid".into(),
            q: None,
            matrix: Some(vec![vec![2.0, 1.0], vec![1.0, 3.0]]),
            drift: None,
        };
        assert_eq!(ellipsoid.to_gauge(2).unwrap().dim(), 2);

        let wrong_dim = GaugeSpec {
            kind: "ellipsoid".into(),
            q: None,
            matrix: Some(vec![vec![2.0, 1.0], vec![1.0, 3.0]]),
            drift: None,
        };
        assert!(wrong_dim.to_gauge(3).is_err());
    }

    #[test]
    fn cone_specs_cover_the_standard_kinds() {
        let full = ConeSpec { kind: "full_space".into(), constrained: None, line_dims: None, normals: None };
        assert_eq!(full.to_cone(3).unwrap().k(), 3);

        let half = ConeSpec { kind: "half_space".into(), constrained: None, line_dims: None, normals: None };
        assert_eq!(half.to_cone(2).unwrap().k(), 1);

        let quadrant =
            ConeSpec { kind: "orthant".into(), constrained: Some(2), line_dims: None, normals: None };
        assert_eq!(quadrant.to_cone(2).unwrap().k(), 0);

        let custom = ConeSpec {
            kind: "custom".into(),
            constrained: None,
            line_dims: Some(0),
            normals: Some(vec![vec![-1.0, 0.0], vec![0.0, -1.0]]),
        };
        assert_eq!(custom.to_cone(2).unwrap().facet_count(), 2);

        let stray = ConeSpec {
            kind: "full_space".into(),
            constrained: Some(1),
            line_dims: None,
            normals: None,
        };
        assert!(stray.to_cone(2).is_err());
    }

    #[test]
    fn suite_expansion_dedupes_and_keeps_order() {
        let mut cfg = RunConfig::from_json(&sample_config_text()).unwrap();
        cfg.suites = vec![Suite::Mass, Suite::Mass, Suite::Gauge];
        assert_eq!(cfg.expanded_suites(), vec![Suite::Mass, Suite::Gauge]);

        cfg.suites = vec![Suite::Poincare, Suite::All];
        let expanded = cfg.expanded_suites();
        assert_eq!(expanded.len(), 8);
        assert_eq!(expanded[0], Suite::Poincare);
        assert!(!expanded[1..].contains(&Suite::Poincare));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::all_concrete() {
            assert_eq!(Suite::parse(s.name()).unwrap(), s);
        }
        assert_eq!(Suite::parse("all").unwrap(), Suite::All);
        assert!(Suite::parse("bogus").is_err());
    }

    #[test]
    fn tolerance_lookup_prefers_overrides() {
        let mut cfg = RunConfig::from_json(&sample_config_text()).unwrap();
        assert_eq!(cfg.tolerance("mass.quantization", 0.005), 0.005);
        cfg.tolerances.insert("mass.quantization".into(), 1e-6);
        assert_eq!(cfg.tolerance("mass.quantization", 0.005), 1e-6);
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = RunConfig::from_json(&sample_config_text()).unwrap();
        let b = RunConfig::from_json(&sample_config_text()).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 64);

        let mut c = RunConfig::from_json(&sample_config_text()).unwrap();
        c.seed = 43;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn noise_rule_fails_unattainable_tolerances() {
        let rec = CheckRecord::equality("t.a", "x equals y", 1.0, 1.0, 0.5, 1e-6);
        assert!(!rec.pass);
        assert!(rec.note.contains("noise floor"));

        let ok = CheckRecord::equality("t.b", "x equals y", 1.0, 1.0 + 1e-7, 1e-9, 1e-6);
        assert!(ok.pass);
        assert!(ok.note.is_empty());

        let sided = CheckRecord::upper_bound("t.c", "x stays below b", 0.4, 1.0, 1e-9, 1e-6);
        assert!(sided.pass);
        assert_eq!(sided.gap, 0.0);

        let low = CheckRecord::lower_bound("t.d", "x stays above b", 2.0, 1.0, 1e-9, 1e-6);
        assert!(low.pass);
        assert_eq!(low.gap, 0.0);
    }

    #[test]
    fn reports_serialize_deterministically() {
        let rec = CheckRecord::equality("suite.check", "lhs equals rhs", 1.0, 1.0, 0.0, 1e-9);
        let report = RunReport::new("abc".into(), vec![rec.clone()]);
        let report2 = RunReport::new("abc".into(), vec![rec]);
        assert_eq!(report.to_json(), report2.to_json());
        assert!(report.overall_pass);
        assert!(report.to_json().ends_with('\n'));
        assert!(report.to_json().contains("\"note\""));
    }
}
