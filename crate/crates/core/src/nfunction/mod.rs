//! N-infinity functions and the checks that classify them.
//!
//! An [`NFunction`] is an even, convex, superlinear `Phi: R^d -> [0, inf)` with
//! `Phi(0) = 0`. Built-in families carry analytic gradients and Hessians;
//! custom functions fall back to central differences.

mod checks;
mod radial;
mod spec;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::vecops;

pub use checks::{
    check_delta2, check_n_infinity, check_order, Delta2Config, Delta2Verdict, GrowthReport,
    NInfinityConfig, NInfinityReport, OrderConfig, OrderMode, OrderVerdict, PowerBound,
    PropertyCheck,
};
pub use radial::{
    radial_minorant, radial_minorant_covering, radial_minorant_inverse, RadialProfile,
};
pub use spec::{NFunctionSpec, PartSpec};

/// Anything convex that can be evaluated with first and second derivatives.
///
/// Implemented by [`NFunction`] and by [`crate::ConjugateFunction`], so that
/// growth checks and norms apply to either side of a conjugate pair.
pub trait ConvexFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, y: &[f64]) -> f64;
    fn gradient(&self, y: &[f64]) -> Vec<f64>;
    fn hessian(&self, y: &[f64]) -> DMatrix<f64>;
    /// `true` when the function depends on `|y|` only.
    fn is_radial(&self) -> bool {
        false
    }
}

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// One summand `Phi_j(O_j y)` of a composed function.
#[derive(Clone, Debug)]
pub struct Part {
    pub inner: NFunction,
    pub map: DMatrix<f64>,
}

#[derive(Clone)]
pub enum Kind {
    /// `|y|^p / p`
    Power { p: f64 },
    /// `|y1|^p1 / p1 + |y2|^p2 / p2` with `y = (y1, y2)`, `y1` in `R^d1`.
    Aniso { p1: f64, p2: f64, d1: usize, d2: usize },
    /// `exp(|y|^2) - 1`
    Exponential,
    /// `cosh(|y|) - 1`
    Cosh,
    /// `s asinh(s) - sqrt(1 + s^2) + 1` at `s = |y|`; the conjugate of [`Kind::Cosh`].
    CoshConjugate,
    Composed(Vec<Part>),
    Custom { value: ValueFn, gradient: Option<GradFn> },
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Power { p } => write!(f, "Power({p})"),
            Kind::Aniso { p1, p2, d1, d2 } => write!(f, "Aniso({p1}, {p2}; {d1}+{d2})"),
            Kind::Exponential => write!(f, "Exponential"),
            Kind::Cosh => write!(f, "Cosh"),
            Kind::CoshConjugate => write!(f, "CoshConjugate"),
            Kind::Composed(parts) => write!(f, "Composed({} parts)", parts.len()),
            Kind::Custom { gradient, .. } => {
                write!(f, "Custom(analytic gradient: {})", gradient.is_some())
            }
        }
    }
}

/// An N-infinity function on `R^dim`. Immutable after construction.
#[derive(Clone, Debug)]
pub struct NFunction {
    dim: usize,
    kind: Kind,
    radial: bool,
}

/// Default rank tolerance for [`compose_linear`], relative to the largest
/// singular value.
pub const RANK_TOL: f64 = 1e-10;

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} = {p}: exponent must exceed 1 for superlinear growth"
        )));
    }
    Ok(())
}

/// `|y|^p / p` on `R^d`.
pub fn make_power(p: f64, d: usize) -> Result<NFunction> {
    check_exponent("p", p)?;
    check_dim(d)?;
    Ok(NFunction { dim: d, kind: Kind::Power { p }, radial: true })
}

/// `|y1|^p1 / p1 + |y2|^p2 / p2` on `R^(d1 + d2)`.
pub fn make_aniso(p1: f64, p2: f64, d1: usize, d2: usize) -> Result<NFunction> {
    check_exponent("p1", p1)?;
    check_exponent("p2", p2)?;
    check_dim(d1)?;
    check_dim(d2)?;
    Ok(NFunction {
        dim: d1 + d2,
        kind: Kind::Aniso { p1, p2, d1, d2 },
        radial: p1 == 2.0 && p2 == 2.0,
    })
}

/// `exp(|y|^2) - 1` on `R^d`.
pub fn make_exponential(d: usize) -> Result<NFunction> {
    check_dim(d)?;
    Ok(NFunction { dim: d, kind: Kind::Exponential, radial: true })
}

/// `cosh(|y|) - 1` on `R^d`.
pub fn make_cosh(d: usize) -> Result<NFunction> {
    check_dim(d)?;
    Ok(NFunction { dim: d, kind: Kind::Cosh, radial: true })
}

/// The complementary function of `cosh(|y|) - 1`.
pub fn make_cosh_conjugate(d: usize) -> Result<NFunction> {
    check_dim(d)?;
    Ok(NFunction { dim: d, kind: Kind::CoshConjugate, radial: true })
}

/// `Phi(y) = sum_j Phi_j(O_j y)`.
///
/// Every `O_j` must have `d` columns and the stacked matrix must have full
/// column rank, otherwise the sum vanishes along the common kernel.
pub fn compose_linear(parts: Vec<(NFunction, DMatrix<f64>)>) -> Result<NFunction> {
    compose_linear_with_tol(parts, RANK_TOL)
}

pub fn compose_linear_with_tol(
    parts: Vec<(NFunction, DMatrix<f64>)>,
    rank_tol: f64,
) -> Result<NFunction> {
    let Some((_, first)) = parts.first() else {
        return Err(Error::InvalidParameter("composition needs at least one part".into()));
    };
    let d = first.ncols();
    check_dim(d)?;
    let mut rows = 0;
    for (inner, map) in &parts {
        if map.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: map.ncols() });
        }
        if map.nrows() != inner.dim() {
            return Err(Error::DimensionMismatch { expected: inner.dim(), found: map.nrows() });
        }
        rows += map.nrows();
    }
    let mut stacked = DMatrix::zeros(rows, d);
    let mut r0 = 0;
    for (_, map) in &parts {
        stacked.view_mut((r0, 0), (map.nrows(), d)).copy_from(map);
        r0 += map.nrows();
    }
    let sv = stacked.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > rank_tol * smax.max(f64::MIN_POSITIVE)).count();
    if rank < d {
        return Err(Error::KernelIntersectionNonTrivial { rank, dim: d });
    }
    let parts = parts.into_iter().map(|(inner, map)| Part { inner, map }).collect();
    Ok(NFunction { dim: d, kind: Kind::Composed(parts), radial: false })
}

impl NFunction {
    /// A user-supplied function. Without an analytic gradient, central
    /// differences with step `eps^(1/3) max(1, |y|)` are used.
    pub fn custom<F>(dim: usize, value: F, radial: bool) -> NFunction
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        NFunction {
            dim,
            kind: Kind::Custom { value: Arc::new(value), gradient: None },
            radial,
        }
    }

    pub fn custom_with_gradient<F, G>(dim: usize, value: F, gradient: G, radial: bool) -> NFunction
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        NFunction {
            dim,
            kind: Kind::Custom { value: Arc::new(value), gradient: Some(Arc::new(gradient)) },
            radial,
        }
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Profile `r -> Phi(r e)` for radial functions, where `e` is any unit vector.
    pub fn radial_value(&self, r: f64) -> f64 {
        let mut e = vec![0.0; self.dim];
        e[0] = r;
        self.value(&e)
    }

    /// `f(r), f'(r), f''(r)` of the scalar profile for the built-in radial
    /// families.
    fn radial_profile_derivs(&self, r: f64) -> Option<(f64, f64, f64)> {
        match self.kind {
            Kind::Power { p } => {
                Some((r.powf(p) / p, r.powf(p - 1.0), (p - 1.0) * r.powf(p - 2.0)))
            }
            Kind::Exponential => {
                let e = (r * r).exp();
                Some(((r * r).exp_m1(), 2.0 * r * e, (2.0 + 4.0 * r * r) * e))
            }
            Kind::Cosh => {
                let h = (0.5 * r).sinh();
                Some((2.0 * h * h, r.sinh(), r.cosh()))
            }
            Kind::CoshConjugate => {
                let q = (1.0 + r * r).sqrt();
                Some((r * r.asinh() - r * r / (q + 1.0), r.asinh(), 1.0 / q))
            }
            _ => None,
        }
    }

    /// `f'(r) / r` with its limit at the origin.
    fn radial_slope_ratio(&self, r: f64) -> f64 {
        match self.kind {
            Kind::Power { p } => r.powf(p - 2.0),
            Kind::Exponential => 2.0 * (r * r).exp(),
            Kind::Cosh => {
                if r < 1e-8 {
                    1.0
                } else {
                    r.sinh() / r
                }
            }
            Kind::CoshConjugate => {
                if r < 1e-8 {
                    1.0
                } else {
                    r.asinh() / r
                }
            }
            _ => unreachable!("not a built-in radial family"),
        }
    }

    fn builtin_radial_gradient(&self, y: &[f64]) -> Vec<f64> {
        let r = vecops::norm(y);
        if r == 0.0 {
            return vec![0.0; y.len()];
        }
        vecops::scale(y, self.radial_slope_ratio(r))
    }

    fn builtin_radial_hessian(&self, y: &[f64]) -> DMatrix<f64> {
        let d = y.len();
        let r = vecops::norm(y);
        if r == 0.0 {
            let (_, _, f2) = self.radial_profile_derivs(0.0).unwrap();
            let f2 = match self.kind {
                // f'' at the origin for p < 2 is infinite, for p > 2 zero.
                Kind::Power { p } if p < 2.0 => f64::INFINITY,
                Kind::Power { p } if p > 2.0 => 0.0,
                _ => f2,
            };
            return DMatrix::identity(d, d) * f2;
        }
        let (_, _, f2) = self.radial_profile_derivs(r).unwrap();
        let ratio = self.radial_slope_ratio(r);
        let u = DVector::from_iterator(d, y.iter().map(|v| v / r));
        let uut = &u * u.transpose();
        &uut * f2 + (DMatrix::identity(d, d) - &uut) * ratio
    }

    fn central_gradient(&self, y: &[f64]) -> Vec<f64> {
        let h = f64::EPSILON.cbrt() * vecops::norm(y).max(1.0);
        let mut yp = y.to_vec();
        (0..y.len())
            .map(|k| {
                yp[k] = y[k] + h;
                let fp = self.value(&yp);
                yp[k] = y[k] - h;
                let fm = self.value(&yp);
                yp[k] = y[k];
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    fn central_hessian(&self, y: &[f64]) -> DMatrix<f64> {
        let d = y.len();
        let h = f64::EPSILON.cbrt() * vecops::norm(y).max(1.0);
        let mut yp = y.to_vec();
        let mut hess = DMatrix::zeros(d, d);
        for k in 0..d {
            yp[k] = y[k] + h;
            let gp = self.gradient(&yp);
            yp[k] = y[k] - h;
            let gm = self.gradient(&yp);
            yp[k] = y[k];
            for j in 0..d {
                hess[(j, k)] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
        (&hess + hess.transpose()) * 0.5
    }
}

fn power_value(y: &[f64], p: f64) -> f64 {
    let s = vecops::dot(y, y);
    if p == 2.0 {
        0.5 * s
    } else {
        s.powf(0.5 * p) / p
    }
}

fn power_gradient(y: &[f64], p: f64) -> Vec<f64> {
    let s = vecops::dot(y, y);
    if s == 0.0 {
        return vec![0.0; y.len()];
    }
    vecops::scale(y, s.powf(0.5 * p - 1.0))
}

impl ConvexFunction for NFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.dim);
        match &self.kind {
            Kind::Power { p } => power_value(y, *p),
            Kind::Aniso { p1, p2, d1, .. } => {
                power_value(&y[..*d1], *p1) + power_value(&y[*d1..], *p2)
            }
            Kind::Exponential | Kind::Cosh | Kind::CoshConjugate => {
                self.radial_profile_derivs(vecops::norm(y)).unwrap().0
            }
            Kind::Composed(parts) => parts
                .iter()
                .map(|part| {
                    let z = part.map.clone() * DVector::from_column_slice(y);
                    part.inner.value(z.as_slice())
                })
                .sum(),
            Kind::Custom { value, .. } => value(y),
        }
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        match &self.kind {
            Kind::Power { p } => power_gradient(y, *p),
            Kind::Aniso { p1, p2, d1, .. } => {
                let mut g = power_gradient(&y[..*d1], *p1);
                g.extend(power_gradient(&y[*d1..], *p2));
                g
            }
            Kind::Exponential | Kind::Cosh | Kind::CoshConjugate => {
                self.builtin_radial_gradient(y)
            }
            Kind::Composed(parts) => {
                let yv = DVector::from_column_slice(y);
                let mut g = DVector::zeros(self.dim);
                for part in parts {
                    let z = &part.map * &yv;
                    let gz = DVector::from_vec(part.inner.gradient(z.as_slice()));
                    g += part.map.transpose() * gz;
                }
                g.as_slice().to_vec()
            }
            Kind::Custom { gradient: Some(g), .. } => g(y),
            Kind::Custom { gradient: None, .. } => self.central_gradient(y),
        }
    }

    fn hessian(&self, y: &[f64]) -> DMatrix<f64> {
        match &self.kind {
            Kind::Power { .. } | Kind::Exponential | Kind::Cosh | Kind::CoshConjugate => {
                self.builtin_radial_hessian(y)
            }
            Kind::Aniso { p1, p2, d1, d2 } => {
                let h1 = make_power(*p1, *d1).unwrap().hessian(&y[..*d1]);
                let h2 = make_power(*p2, *d2).unwrap().hessian(&y[*d1..]);
                let mut h = DMatrix::zeros(self.dim, self.dim);
                h.view_mut((0, 0), (*d1, *d1)).copy_from(&h1);
                h.view_mut((*d1, *d1), (*d2, *d2)).copy_from(&h2);
                h
            }
            Kind::Composed(parts) => {
                let yv = DVector::from_column_slice(y);
                let mut h = DMatrix::zeros(self.dim, self.dim);
                for part in parts {
                    let z = &part.map * &yv;
                    let hz = part.inner.hessian(z.as_slice());
                    h += part.map.transpose() * hz * &part.map;
                }
                h
            }
            Kind::Custom { .. } => self.central_hessian(y),
        }
    }

    fn is_radial(&self) -> bool {
        self.radial
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn power_values() {
        let phi = make_power(2.0, 2).unwrap();
        assert_eq!(phi.value(&[3.0, 4.0]), 12.5);
        assert_eq!(make_power(2.0, 1).unwrap().value(&[0.0]), 0.0);
        let phi3 = make_power(3.0, 1).unwrap();
        assert!(close(phi3.value(&[-2.0]), 8.0 / 3.0, 1e-15));
        assert_eq!(phi3.gradient(&[-2.0]), vec![-4.0]);
    }

    #[test]
    fn power_rejects_small_exponent() {
        assert!(matches!(make_power(1.0, 2), Err(Error::InvalidParameter(_))));
        assert!(make_power(0.5, 1).is_err());
        assert!(make_power(2.0, 0).is_err());
    }

    #[test]
    fn aniso_values() {
        let phi = make_aniso(2.0, 4.0, 2, 2).unwrap();
        assert!(close(phi.value(&[1.0, 0.0, 1.0, 1.0]), 1.5, 1e-15));
        assert_eq!(phi.value(&[0.0; 4]), 0.0);
        let a = make_aniso(2.0, 2.0, 1, 1).unwrap();
        let p = make_power(2.0, 2).unwrap();
        assert_eq!(a.value(&[1.0, 1.0]), 1.0);
        assert_eq!(a.value(&[1.0, 1.0]), p.value(&[1.0, 1.0]));
        assert!(make_aniso(1.0, 2.0, 1, 1).is_err());
        assert!(make_aniso(2.0, 0.9, 1, 1).is_err());
    }

    #[test]
    fn exponential_values() {
        let e1 = make_exponential(1).unwrap();
        assert_eq!(e1.value(&[0.0]), 0.0);
        assert!(close(e1.value(&[1.0]), std::f64::consts::E - 1.0, 1e-15));
        let e2 = make_exponential(2).unwrap();
        assert!(close(e2.value(&[1.0, 1.0]), (2.0f64).exp() - 1.0, 1e-15));
        assert!(close(e2.gradient(&[1.0, 1.0])[0], 2.0 * (2.0f64).exp(), 1e-14));
    }

    #[test]
    fn composed_kernel_point() {
        let p = 3.0;
        let mut o1 = DMatrix::zeros(2, 4);
        let mut o2 = DMatrix::zeros(2, 4);
        for i in 0..2 {
            o1[(i, i)] = 1.0;
            o1[(i, i + 2)] = -1.0;
            o2[(i, i + 2)] = 1.0;
        }
        let phi = compose_linear(vec![
            (make_power(1.5, 2).unwrap(), o1),
            (make_power(p, 2).unwrap(), o2),
        ])
        .unwrap();
        assert!(close(phi.value(&[1.0, 0.0, 1.0, 0.0]), 1.0 / p, 1e-15));
    }

    #[test]
    fn composed_identity_matches_inner() {
        let inner = make_aniso(2.0, 3.0, 1, 1).unwrap();
        let phi = compose_linear(vec![(inner.clone(), DMatrix::identity(2, 2))]).unwrap();
        for &(a, b) in &[(0.3, -1.2), (2.0, 0.5), (-4.0, 3.0)] {
            assert!(close(phi.value(&[a, b]), inner.value(&[a, b]), 1e-14));
        }
    }

    #[test]
    fn composed_rank_deficient_rejected() {
        let o = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let err = compose_linear(vec![(make_power(2.0, 1).unwrap(), o)]).unwrap_err();
        assert!(matches!(err, Error::KernelIntersectionNonTrivial { rank: 1, dim: 2 }));
    }

    #[test]
    fn composed_dimension_mismatch() {
        let o = DMatrix::identity(2, 2);
        let err = compose_linear(vec![(make_power(2.0, 3).unwrap(), o)]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn analytic_gradients_match_differences() {
        let fams = vec![
            make_power(2.5, 2).unwrap(),
            make_power(1.5, 3).unwrap(),
            make_aniso(2.0, 4.0, 1, 2).unwrap(),
            make_exponential(2).unwrap(),
            make_cosh(2).unwrap(),
            make_cosh_conjugate(2).unwrap(),
        ];
        let y = [0.7, -0.4, 0.3];
        for phi in fams {
            let y = &y[..phi.dim()];
            let probe = NFunction::custom(phi.dim(), { let f = phi.clone(); move |v| f.value(v) }, false);
            let ga = phi.gradient(y);
            let gn = probe.gradient(y);
            for (a, n) in ga.iter().zip(&gn) {
                assert!(close(*a, *n, 1e-7), "{:?}: {a} vs {n}", phi.kind());
            }
            let ha = phi.hessian(y);
            let hn = NFunction::custom_with_gradient(
                phi.dim(),
                |_| 0.0,
                { let f = phi.clone(); move |v| f.gradient(v) },
                false,
            )
            .hessian(y);
            assert!((ha - hn).amax() < 1e-6, "{:?}", phi.kind());
        }
    }

    #[test]
    fn cosh_conjugate_small_argument() {
        let psi = make_cosh_conjugate(1).unwrap();
        let s: f64 = 1e-4;
        assert!(close(psi.value(&[s]), s * s / 2.0 - s.powi(4) / 24.0, 1e-12));
        assert!(close(psi.value(&[1.0]), 1.0f64.asinh() - 2f64.sqrt() + 1.0, 1e-15));
    }
}
