//! Complementary (Fenchel conjugate) functions.
//!
//! `Phi*(zeta) = sup_y y . zeta - Phi(y)`. Power, anisotropic power and cosh
//! functions have closed-form conjugates; everything else is conjugated
//! numerically by maximizing the concave objective `y . zeta - Phi(y)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nfunction::{
    check_delta2, check_order, make_aniso, make_cosh, make_cosh_conjugate, make_power, ConvexFunction,
    Delta2Config, Delta2Verdict, GrowthReport, Kind, NFunction, OrderConfig, OrderMode,
};
use crate::sampling;
use crate::vecops;

const NEWTON_MAX_ITER: usize = 100;
const CACHE_CAPACITY: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugateMode {
    Analytic,
    Numeric,
}

/// `Phi*` together with its maximizer map `zeta -> y*(zeta)`.
///
/// Numeric instances memoize maximizers; the cache takes concurrent readers
/// and a single writer at a time.
pub struct ConjugateFunction {
    base: NFunction,
    closed_form: Option<NFunction>,
    cache: Option<RwLock<HashMap<Vec<u64>, Vec<f64>>>>,
}

impl fmt::Debug for ConjugateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConjugateFunction")
            .field("base", &self.base)
            .field("mode", &self.mode())
            .finish()
    }
}

impl Clone for ConjugateFunction {
    fn clone(&self) -> Self {
        ConjugateFunction {
            base: self.base.clone(),
            closed_form: self.closed_form.clone(),
            cache: self.cache.as_ref().map(|_| RwLock::new(HashMap::new())),
        }
    }
}

fn dual_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

fn closed_form_conjugate(phi: &NFunction) -> Option<NFunction> {
    let d = phi.dim();
    match phi.kind() {
        Kind::Power { p } => make_power(dual_exponent(*p), d).ok(),
        Kind::Aniso { p1, p2, d1, d2 } => {
            make_aniso(dual_exponent(*p1), dual_exponent(*p2), *d1, *d2).ok()
        }
        Kind::Cosh => make_cosh_conjugate(d).ok(),
        Kind::CoshConjugate => make_cosh(d).ok(),
        _ => None,
    }
}

/// The complementary function, analytic when a closed form is registered.
pub fn conjugate(phi: &NFunction) -> ConjugateFunction {
    match closed_form_conjugate(phi) {
        Some(cf) => ConjugateFunction { base: phi.clone(), closed_form: Some(cf), cache: None },
        None => conjugate_numeric(phi),
    }
}

/// The complementary function computed numerically even when a closed form
/// exists.
pub fn conjugate_numeric(phi: &NFunction) -> ConjugateFunction {
    ConjugateFunction {
        base: phi.clone(),
        closed_form: None,
        cache: Some(RwLock::new(HashMap::new())),
    }
}

impl ConjugateFunction {
    pub fn base(&self) -> &NFunction {
        &self.base
    }

    pub fn mode(&self) -> ConjugateMode {
        if self.closed_form.is_some() {
            ConjugateMode::Analytic
        } else {
            ConjugateMode::Numeric
        }
    }

    /// Drops the maximizer cache (numeric mode only).
    pub fn without_cache(mut self) -> Self {
        self.cache = None;
        self
    }

    /// A maximizer `y*` of `y . zeta - Phi(y)`; also the gradient of `Phi*`.
    pub fn argmax(&self, zeta: &[f64]) -> Result<Vec<f64>> {
        if let Some(cf) = &self.closed_form {
            return Ok(cf.gradient(zeta));
        }
        let key: Vec<u64> = zeta.iter().map(|z| z.to_bits()).collect();
        if let Some(cache) = &self.cache {
            if let Some(y) = cache.read().unwrap().get(&key) {
                return Ok(y.clone());
            }
        }
        let (_, y) = numeric_conjugate(&self.base, zeta)?;
        if let Some(cache) = &self.cache {
            let mut w = cache.write().unwrap();
            if w.len() < CACHE_CAPACITY {
                w.insert(key, y.clone());
            }
        }
        Ok(y)
    }

    pub fn try_value(&self, zeta: &[f64]) -> Result<f64> {
        if let Some(cf) = &self.closed_form {
            return Ok(cf.value(zeta));
        }
        let y = self.argmax(zeta)?;
        Ok((vecops::dot(&y, zeta) - self.base.value(&y)).max(0.0))
    }
}

impl ConvexFunction for ConjugateFunction {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `+inf` when the maximizer cannot be bracketed.
    fn value(&self, zeta: &[f64]) -> f64 {
        self.try_value(zeta).unwrap_or(f64::INFINITY)
    }

    fn gradient(&self, zeta: &[f64]) -> Vec<f64> {
        self.argmax(zeta).unwrap_or_else(|_| vec![f64::NAN; zeta.len()])
    }

    /// Inverse of the Hessian of `Phi` at the maximizer.
    fn hessian(&self, zeta: &[f64]) -> DMatrix<f64> {
        if let Some(cf) = &self.closed_form {
            return cf.hessian(zeta);
        }
        let d = self.dim();
        let Ok(y) = self.argmax(zeta) else {
            return DMatrix::from_element(d, d, f64::NAN);
        };
        let h = self.base.hessian(&y);
        h.clone()
            .try_inverse()
            .unwrap_or_else(|| h.pseudo_inverse(1e-14).unwrap_or_else(|_| DMatrix::from_element(d, d, f64::NAN)))
    }

    fn is_radial(&self) -> bool {
        self.base.is_radial()
    }
}

/// Numerical conjugate of any convex superlinear function: returns
/// `(sup_y y . zeta - f(y), argmax)`.
///
/// The maximizer is first located on the ray through `zeta` (exact for radial
/// functions), then polished by damped Newton on `grad f(y) = zeta`, with a
/// coordinate-wise golden-section fallback on a growing box.
pub fn numeric_conjugate<F: ConvexFunction + ?Sized>(f: &F, zeta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let d = f.dim();
    if zeta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: zeta.len() });
    }
    let zn = vecops::norm(zeta);
    if zn == 0.0 {
        return Ok((0.0, vec![0.0; d]));
    }
    let objective = |y: &[f64]| vecops::dot(y, zeta) - f.value(y);
    let e = vecops::scale(zeta, 1.0 / zn);

    // Directional slope minus |zeta|; nondecreasing in s by convexity.
    let slope = |s: f64| {
        let y = vecops::scale(&e, s);
        if !f.value(&y).is_finite() {
            return f64::INFINITY;
        }
        vecops::dot(&f.gradient(&y), &e) - zn
    };
    let mut s_hi = 1.0;
    while !(slope(s_hi) > 0.0) {
        s_hi *= 2.0;
        if s_hi > 1e300 {
            return Err(Error::MaximizerNotBracketed { norm: zn });
        }
    }
    let (mut lo, mut hi) = (0.0, s_hi);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s_star = if objective(&vecops::scale(&e, lo)) >= objective(&vecops::scale(&e, hi)) { lo } else { hi };
    let mut y = vecops::scale(&e, s_star);
    if f.is_radial() {
        return Ok((objective(&y), y));
    }

    let tol = 1e-13 * zn.max(1.0);
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let resid = vecops::sub(&f.gradient(&y), zeta);
        if vecops::norm(&resid) <= tol {
            converged = true;
            break;
        }
        let h = f.hessian(&y);
        if h.iter().any(|v| !v.is_finite()) {
            break;
        }
        let rv = DVector::from_vec(resid);
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&rv),
            None => match h.lu().solve(&rv) {
                Some(s) => s,
                None => break,
            },
        };
        let g0 = objective(&y);
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-12 {
            let trial = vecops::axpy(-alpha, step.as_slice(), &y);
            if objective(&trial) >= g0 {
                y = trial;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    if converged || vecops::norm(&vecops::sub(&f.gradient(&y), zeta)) <= 1e3 * tol {
        return Ok((objective(&y), y));
    }
    golden_fallback(f, zeta, y, s_hi)
}

fn golden_fallback<F: ConvexFunction + ?Sized>(
    f: &F,
    zeta: &[f64],
    start: Vec<f64>,
    s_hi: f64,
) -> Result<(f64, Vec<f64>)> {
    let d = f.dim();
    let zn = vecops::norm(zeta);
    let rays = sampling::ray_set(d, 8, 0xb0c5);
    let mut radius = s_hi.max(1.0);
    loop {
        let escapes = rays.iter().all(|e| {
            let y = vecops::scale(e, radius);
            let g = vecops::dot(&f.gradient(&y), e);
            g.is_nan() || g > zn
        });
        if escapes {
            break;
        }
        radius *= 2.0;
        if radius > 1e300 {
            return Err(Error::MaximizerNotBracketed { norm: zn });
        }
    }
    let objective = |y: &[f64]| vecops::dot(y, zeta) - f.value(y);
    let mut y = start;
    let mut best = objective(&y);
    for _ in 0..500 {
        let before = best;
        for k in 0..d {
            let line = |t: f64| {
                let mut trial = y.clone();
                trial[k] = t;
                objective(&trial)
            };
            let (t, v) = golden_argmax(line, -radius, radius, 120);
            if v > best {
                y[k] = t;
                best = v;
            }
        }
        if best - before <= 1e-15 * (1.0 + best.abs()) {
            break;
        }
    }
    Ok((best, y))
}

fn golden_argmax<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..iters {
        if ga < gb {
            lo = a;
            a = b;
            ga = gb;
            b = lo + r * (hi - lo);
            gb = g(b);
        } else {
            hi = b;
            b = a;
            gb = ga;
            a = hi - r * (hi - lo);
            ga = g(a);
        }
    }
    if ga >= gb {
        (a, ga)
    } else {
        (b, gb)
    }
}

/// `Phi(x) + Phi*(y) - x . y`, nonnegative by Young's inequality.
pub fn young_gap(phi: &NFunction, phistar: &ConjugateFunction, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != phi.dim() || y.len() != phi.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: x.len().max(y.len()) });
    }
    Ok(phi.value(x) + phistar.try_value(y)? - vecops::dot(x, y))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoungIdentityReport {
    pub max_abs_deviation: f64,
    /// Deviation relative to `1 + |x . grad Phi(x)|`.
    pub max_rel_deviation: f64,
    pub worst_sample: Option<Vec<f64>>,
}

impl YoungIdentityReport {
    pub fn passed(&self, rel_tol: f64) -> bool {
        self.max_rel_deviation <= rel_tol
    }
}

pub const YOUNG_IDENTITY_TOL: f64 = 1e-6;

/// Largest deviation of `x . grad Phi(x) = Phi(x) + Phi*(grad Phi(x))` over
/// the samples.
pub fn check_young_identity(
    phi: &NFunction,
    phistar: &ConjugateFunction,
    samples: &[Vec<f64>],
) -> Result<YoungIdentityReport> {
    let mut report = YoungIdentityReport { max_abs_deviation: 0.0, max_rel_deviation: 0.0, worst_sample: None };
    for x in samples {
        let g = phi.gradient(x);
        let lhs = vecops::dot(x, &g);
        let rhs = phi.value(x) + phistar.try_value(&g)?;
        let dev = (lhs - rhs).abs();
        let rel = dev / (1.0 + lhs.abs());
        report.max_abs_deviation = report.max_abs_deviation.max(dev);
        if rel > report.max_rel_deviation {
            report.max_rel_deviation = rel;
            report.worst_sample = Some(x.clone());
        }
    }
    Ok(report)
}

/// `Phi**(x)`, computed numerically from the conjugate.
pub fn biconjugate_value(phistar: &ConjugateFunction, x: &[f64]) -> Result<f64> {
    Ok(numeric_conjugate(phistar, x)?.0)
}

/// `c * f`; used to phrase the nabla_2 display as an ordering.
struct Scaled<'a, F: ?Sized> {
    f: &'a F,
    c: f64,
}

impl<F: ConvexFunction + ?Sized> ConvexFunction for Scaled<'_, F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn value(&self, y: &[f64]) -> f64 {
        self.c * self.f.value(y)
    }
    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        vecops::scale(&self.f.gradient(y), self.c)
    }
    fn hessian(&self, y: &[f64]) -> DMatrix<f64> {
        self.f.hessian(y) * self.c
    }
}

/// `(l, C')` with `Phi(x) <= (r / l) Phi(l x) + C'` on the samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nabla2Witness {
    pub r: f64,
    pub l: Option<f64>,
    pub c_prime: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nabla2Report {
    pub holds: bool,
    /// Delta_2 verdict of the conjugate.
    pub conjugate_delta2: Delta2Verdict,
    pub witnesses: Vec<Nabla2Witness>,
}

/// nabla_2 via Delta_2 of the conjugate, plus explicit `(l, C')` witnesses
/// for `r = 1/4` and `r = 1/2`.
pub fn check_nabla2(phi: &NFunction) -> Result<Nabla2Report> {
    check_nabla2_with(phi, &Delta2Config::default())
}

pub fn check_nabla2_with(phi: &NFunction, cfg: &Delta2Config) -> Result<Nabla2Report> {
    let phistar = conjugate(phi);
    let conjugate_delta2 = check_delta2(&phistar, cfg)?;
    let mut witnesses = Vec::new();
    for r in [0.25, 0.5] {
        let mut found = Nabla2Witness { r, l: None, c_prime: None };
        for e in 0..=10 {
            let l = 2f64.powi(e);
            let scaled = Scaled { f: phi, c: r / l };
            let order_cfg = OrderConfig { k_grid: vec![l], ..OrderConfig::default() };
            let v = check_order(phi, &scaled, OrderMode::Strictif, &order_cfg)?;
            if let Some((_, c)) = v.chosen {
                found.l = Some(l);
                found.c_prime = Some(c);
                break;
            }
        }
        witnesses.push(found);
    }
    Ok(Nabla2Report { holds: conjugate_delta2.holds(), conjugate_delta2, witnesses })
}

/// Delta_2 of `phi` and of its conjugate.
pub fn growth_report(phi: &NFunction, cfg: &Delta2Config) -> Result<GrowthReport> {
    let delta2 = check_delta2(phi, cfg)?;
    let nabla2 = check_delta2(&conjugate(phi), cfg)?;
    Ok(GrowthReport { delta2, nabla2: Some(nabla2) })
}
