//! Gauge functions on R^N.
//!
//! A gauge here is a convex, positively 1-homogeneous function H with
//! H(xi) > 0 for xi != 0. Five analytic families are supported:
//!
//! | family        | H(xi)                        | notes                        |
//! |---------------|------------------------------|------------------------------|
//! | `euclidean`   | `|xi|`                       | isotropic reference          |
//! | `pnorm(q)`    | `||xi||_q`, q in (1, inf)    | loses C^2 on axes for q < 2  |
//! | `linear_image`| `||M xi||_q`, M invertible   | sheared/stretched p-norm     |
//! | `ellipsoid`   | `sqrt(xi^T A xi)`, A SPD     | smooth, uniformly elliptic   |
//! | `drifted`     | `|xi| + <b, xi>`, |b| < 1    | asymmetric: H(-xi) != H(xi)  |
//!
//! Beyond evaluation and analytic gradients, the module provides the
//! monotone vector field `a(xi) = H^{N-1}(xi) grad H(xi)` that drives the
//! Finsler N-Laplacian `div a(grad u)`, extrema of H over the unit sphere
//! (the constants sandwiching H between Euclidean norms), and sampled
//! ellipticity constants for `a`.
//!
//! # Example
//!
//! ```
//! use finsler_liouville::gauge::Gauge;
//!
//! let g = Gauge::ellipsoid(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
//! let x = [0.3, -0.7];
//! let h = g.eval(&x).unwrap();
//!
//! // Positive 1-homogeneity: doubling the argument doubles the value.
//! assert!((g.eval(&[0.6, -1.4]).unwrap() - 2.0 * h).abs() < 1e-12);
//!
//! // Euler identity: <grad H(x), x> = H(x).
//! let grad = g.grad(&x).unwrap();
//! assert!((grad[0] * x[0] + grad[1] * x[1] - h).abs() < 1e-10);
//!
//! // Norm-equivalence constants from the sphere scan.
//! let (c_lo, c_hi) = g.sphere_extrema(256).unwrap();
//! assert!(1.0 < c_lo && c_lo < c_hi && c_hi < 2.0);
//! ```

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::quad::{batch_rng, standard_normal, unit_sphere_dir};
use crate::sphopt::maximize_on_sphere;
use crate::vecops::{dot, norm, scale, sub};

/// Relative threshold below which a mapped coordinate counts as lying on a
/// hyperplane where q < 2 families stop being twice differentiable.
const HYPERPLANE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Kind {
    Euclidean,
    PNorm { q: f64 },
    LinearImage { matrix: DMatrix<f64>, q: f64 },
    Ellipsoid { matrix: DMatrix<f64> },
    Drifted { drift: Vec<f64> },
}

/// One gauge from the supported families. Construct through the named
/// constructors, which validate parameters once so evaluation can assume a
/// well-formed gauge.
#[derive(Clone, Debug, PartialEq)]
pub struct Gauge {
    kind: Kind,
    dim: usize,
}

/// Sampled ellipticity constants for the monotone field `a`.
///
/// For unit-scale pairs the field satisfies a coercivity bound from below
/// (`c1_hat` estimates the best constant observed) and a Lipschitz-type bound
/// from above (`c2_hat`), both with the degenerate weight
/// `(|xi_1| + |xi_2|)^{N-2}`. `lambda_ell_hat` bounds the Hessian of H^N on
/// the unit sphere: quadratic form below by `1/lambda`, entry sum above by
/// `lambda`.
#[derive(Clone, Copy, Debug)]
pub struct EllipticityEstimate {
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub lambda_ell_hat: f64,
    pub pairs: usize,
}

impl Gauge {
    /// The Euclidean norm. `dim` must be at least 2.
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 2, "gauges are supported in dimension >= 2");
        Self { kind: Kind::Euclidean, dim }
    }

    /// The q-norm for q in (1, inf).
    pub fn pnorm(dim: usize, q: f64) -> Result<Self> {
        check_dim(dim)?;
        check_exponent(q)?;
        Ok(Self { kind: Kind::PNorm { q }, dim })
    }

    /// `xi -> ||M xi||_q` for an invertible square matrix M (given by rows).
    pub fn linear_image(rows: Vec<Vec<f64>>, q: f64) -> Result<Self> {
        check_exponent(q)?;
        let matrix = square_matrix(rows)?;
        let dim = matrix.nrows();
        check_dim(dim)?;
        if matrix.clone().lu().try_inverse().is_none() {
            return Err(Error::InvalidGauge("matrix is singular".into()));
        }
        Ok(Self { kind: Kind::LinearImage { matrix, q }, dim })
    }

    /// `xi -> sqrt(xi^T A xi)` for a symmetric positive definite A.
    pub fn ellipsoid(rows: Vec<Vec<f64>>) -> Result<Self> {
        let matrix = square_matrix(rows)?;
        let dim = matrix.nrows();
        check_dim(dim)?;
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + matrix.abs().max()) {
            return Err(Error::InvalidGauge("matrix is not symmetric".into()));
        }
        if matrix.clone().cholesky().is_none() {
            return Err(Error::InvalidGauge("matrix is not positive definite".into()));
        }
        Ok(Self { kind: Kind::Ellipsoid { matrix }, dim })
    }

    /// `xi -> |xi| + <b, xi>` for a drift with |b| < 1.
    pub fn drifted(drift: Vec<f64>) -> Result<Self> {
        let dim = drift.len();
        check_dim(dim)?;
        let b = norm(&drift);
        if !(b.is_finite() && b < 1.0) {
            return Err(Error::InvalidGauge(format!("drift norm {b} must be below 1")));
        }
        Ok(Self { kind: Kind::Drifted { drift }, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn kind(&self) -> &Kind {
        &self.kind
    }

    /// The reflected gauge `xi -> H(-xi)`. Identical to `self` for the
    /// symmetric families; flips the drift for the drifted family.
    pub fn reflected(&self) -> Gauge {
        match &self.kind {
            Kind::Drifted { drift } => Gauge {
                kind: Kind::Drifted { drift: drift.iter().map(|b| -b).collect() },
                dim: self.dim,
            },
            _ => self.clone(),
        }
    }

    /// Evaluate H. Zero at the origin, positive elsewhere.
    pub fn eval(&self, xi: &[f64]) -> Result<f64> {
        self.check_point(xi)?;
        Ok(match &self.kind {
            Kind::Euclidean => norm(xi),
            Kind::PNorm { q } => qnorm(xi, *q),
            Kind::LinearImage { matrix, q } => qnorm((matrix * dvec(xi)).as_slice(), *q),
            Kind::Ellipsoid { matrix } => {
                let v = dvec(xi);
                (matrix * &v).dot(&v).max(0.0).sqrt()
            }
            Kind::Drifted { drift } => norm(xi) + dot(drift, xi),
        })
    }

    /// Analytic gradient of H. Undefined at the origin; for q < 2 families
    /// also refused near coordinate hyperplanes of the mapped argument,
    /// where H stops being twice differentiable.
    pub fn grad(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_point(xi)?;
        if norm(xi) == 0.0 {
            return Err(Error::SingularPoint);
        }
        match &self.kind {
            Kind::Euclidean => Ok(scale(xi, 1.0 / norm(xi))),
            Kind::PNorm { q } => qnorm_grad(xi, *q),
            Kind::LinearImage { matrix, q } => {
                let mapped = matrix * dvec(xi);
                let inner = qnorm_grad(mapped.as_slice(), *q)?;
                Ok((matrix.transpose() * dvec(&inner)).as_slice().to_vec())
            }
            Kind::Ellipsoid { matrix } => {
                let h = self.eval(xi)?;
                Ok(((matrix * dvec(xi)) / h).as_slice().to_vec())
            }
            Kind::Drifted { drift } => {
                let r = norm(xi);
                Ok(xi.iter().zip(drift).map(|(x, b)| x / r + b).collect())
            }
        }
    }

    /// The monotone field `a(xi) = H^{n-1}(xi) grad H(xi)`, extended by
    /// `a(0) = 0` (the product vanishes to order n-1 at the origin).
    pub fn a_field(&self, n: usize, xi: &[f64]) -> Result<Vec<f64>> {
        self.check_point(xi)?;
        if xi.iter().all(|&c| c == 0.0) {
            return Ok(vec![0.0; self.dim]);
        }
        let h = self.eval(xi)?;
        let g = self.grad(xi)?;
        Ok(scale(&g, h.powi(n as i32 - 1)))
    }

    /// Minimum and maximum of H over the unit sphere, found by a seeded
    /// direction scan refined with a local sphere search. These are the
    /// constants c_H, C_H with `c_H |xi| <= H(xi) <= C_H |xi|`.
    pub fn sphere_extrema(&self, budget: usize) -> Result<(f64, f64)> {
        if budget < 2 * self.dim {
            return Err(Error::InvalidQuadrature(format!(
                "extrema budget {budget} below 2*dim = {}",
                2 * self.dim
            )));
        }
        let eval = |w: &[f64]| self.eval(w).expect("dimension checked");
        let mut best_min = (f64::INFINITY, vec![0.0; self.dim]);
        let mut best_max = (f64::NEG_INFINITY, vec![0.0; self.dim]);
        let mut consider = |w: Vec<f64>| {
            let v = eval(&w);
            if v < best_min.0 {
                best_min = (v, w.clone());
            }
            if v > best_max.0 {
                best_max = (v, w);
            }
        };
        for i in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut w = vec![0.0; self.dim];
                w[i] = sign;
                consider(w);
            }
        }
        let mut rng = batch_rng(0xC0FFEE, 0);
        for _ in 2 * self.dim..budget {
            consider(unit_sphere_dir(&mut rng, self.dim));
        }
        let lo = maximize_on_sphere(&|w| -eval(w), &best_min.1, 60);
        let hi = maximize_on_sphere(&eval, &best_max.1, 60);
        Ok((-lo.value, hi.value))
    }

    /// Sample ellipticity constants of `a` with homogeneity exponent `n`.
    ///
    /// Draws seeded pairs with radii log-uniform in [0.1, 10], skipping
    /// points the gradient refuses (q < 2 hyperplanes). Also estimates the
    /// Hessian bound of H^n on the unit sphere by finite differences.
    pub fn check_ellipticity(&self, n: usize, samples: usize, seed: u64) -> Result<EllipticityEstimate> {
        if n < 2 {
            return Err(Error::InvalidGauge(format!("homogeneity exponent {n} must be >= 2")));
        }
        let mut rng = batch_rng(seed, 0);
        let mut c1 = f64::INFINITY;
        let mut c2 = f64::NEG_INFINITY;
        let mut kept = 0usize;
        let mut attempts = 0usize;
        let max_attempts = samples.saturating_mul(60);
        while kept < samples && attempts < max_attempts {
            attempts += 1;
            let x1 = self.random_point(&mut rng);
            let x2 = self.random_point(&mut rng);
            let d = sub(&x1, &x2);
            let dn = norm(&d);
            if dn < 1e-8 {
                continue;
            }
            let (a1, a2) = match (self.a_field(n, &x1), self.a_field(n, &x2)) {
                (Ok(a1), Ok(a2)) => (a1, a2),
                _ => continue, // non-smooth locus, resample
            };
            let da = sub(&a1, &a2);
            let weight = (norm(&x1) + norm(&x2)).powi(n as i32 - 2);
            c1 = c1.min(dot(&da, &d) / (weight * dn * dn));
            c2 = c2.max(norm(&da) / (weight * dn));
            kept += 1;
        }
        if kept < samples {
            return Err(Error::NonDifferentiable { component: 0 });
        }
        let lambda = self.hessian_bound(n, samples.min(64).max(8), seed)?;
        Ok(EllipticityEstimate { c1_hat: c1, c2_hat: c2, lambda_ell_hat: lambda, pairs: kept })
    }

    /// Largest of `sum |Hess(H^n)_ij|` and `1 / min eigenvalue(Hess(H^n))`
    /// over sampled unit directions. Both constraints are scale-free there
    /// because the Hessian of H^n is (n-2)-homogeneous.
    fn hessian_bound(&self, n: usize, directions: usize, seed: u64) -> Result<f64> {
        let f = |x: &[f64]| self.eval(x).map(|h| h.powi(n as i32));
        let mut rng = batch_rng(seed, 1);
        let h = 1e-5;
        let mut lambda: f64 = 1.0;
        let mut kept = 0usize;
        let mut attempts = 0usize;
        while kept < directions && attempts < directions * 60 {
            attempts += 1;
            let w = unit_sphere_dir(&mut rng, self.dim);
            if self.grad(&w).is_err() {
                continue;
            }
            let mut hess = DMatrix::<f64>::zeros(self.dim, self.dim);
            let f0 = f(&w)?;
            let mut ok = true;
            'outer: for i in 0..self.dim {
                for j in i..self.dim {
                    let entry = if i == j {
                        let mut wp = w.clone();
                        wp[i] += h;
                        let mut wm = w.clone();
                        wm[i] -= h;
                        (f(&wp)? - 2.0 * f0 + f(&wm)?) / (h * h)
                    } else {
                        let mut wpp = w.clone();
                        wpp[i] += h;
                        wpp[j] += h;
                        let mut wpm = w.clone();
                        wpm[i] += h;
                        wpm[j] -= h;
                        let mut wmp = w.clone();
                        wmp[i] -= h;
                        wmp[j] += h;
                        let mut wmm = w.clone();
                        wmm[i] -= h;
                        wmm[j] -= h;
                        (f(&wpp)? - f(&wpm)? - f(&wmp)? + f(&wmm)?) / (4.0 * h * h)
                    };
                    if !entry.is_finite() {
                        ok = false;
                        break 'outer;
                    }
                    hess[(i, j)] = entry;
                    hess[(j, i)] = entry;
                }
            }
            if !ok {
                continue;
            }
            kept += 1;
            let entry_sum: f64 = hess.iter().map(|e| e.abs()).sum();
            lambda = lambda.max(entry_sum);
            let min_eig = hess
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(f64::INFINITY, |m, &e| m.min(e));
            // FD noise floor; degenerate directions of q > 2 norms can push
            // the smallest eigenvalue to zero.
            lambda = lambda.max(1.0 / min_eig.max(1e-6));
        }
        if kept == 0 {
            return Err(Error::NonDifferentiable { component: 0 });
        }
        Ok(lambda)
    }

    fn random_point(&self, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
        let dir = unit_sphere_dir(rng, self.dim);
        let radius = 10f64.powf(rng.gen_range(-1.0..1.0));
        let _ = standard_normal(rng); // keep the stream layout fixed
        scale(&dir, radius)
    }

    fn check_point(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: xi.len() });
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidGauge(format!("dimension {dim} must be >= 2")));
    }
    Ok(())
}

fn check_exponent(q: f64) -> Result<()> {
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::InvalidGauge(format!("exponent q = {q} must lie in (1, inf)")));
    }
    Ok(())
}

fn square_matrix(rows: Vec<Vec<f64>>) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidGauge("matrix must be square".into()));
    }
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGauge("matrix entries must be finite".into()));
    }
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

fn dvec(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Scale-invariant q-norm evaluation.
fn qnorm(x: &[f64], q: f64) -> f64 {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Gradient of the q-norm: sign(x_i) (|x_i| / H)^{q-1}.
/// For q < 2 the second derivatives blow up on coordinate hyperplanes, so
/// points within a relative 1e-9 of one are refused.
fn qnorm_grad(x: &[f64], q: f64) -> Result<Vec<f64>> {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return Err(Error::SingularPoint);
    }
    if q < 2.0 {
        if let Some(component) = x.iter().position(|v| v.abs() < HYPERPLANE_TOL * m) {
            return Err(Error::NonDifferentiable { component });
        }
    }
    let h = qnorm(x, q);
    Ok(x.iter().map(|v| v.signum() * (v.abs() / h).powf(q - 1.0)).collect())
}
