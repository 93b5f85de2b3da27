use serde::{Deserialize, Serialize};

use super::checks::golden_max;
use super::ConvexFunction;
use crate::error::{Error, Result};
use crate::sampling;
use crate::vecops;

/// Angular samples per dimension for the sphere infimum.
const ANGULAR_SAMPLES_PER_DIM: usize = 64;
/// Local refinement steps after the angular scan.
const REFINE_STEPS: usize = 20;

/// Piecewise-linear convex nondecreasing profile `A(r)` on `[0, r_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    pub fn r_max(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    fn cell(&self, r: f64) -> usize {
        match self.knots.binary_search_by(|k| k.total_cmp(&r)) {
            Ok(i) => i.min(self.knots.len() - 2),
            Err(i) => i.clamp(1, self.knots.len() - 1) - 1,
        }
    }

    /// Linear interpolation between knots; linear extrapolation of the last
    /// cell beyond `r_max`.
    pub fn value(&self, r: f64) -> f64 {
        let i = self.cell(r);
        let (r0, r1) = (self.knots[i], self.knots[i + 1]);
        let (a0, a1) = (self.values[i], self.values[i + 1]);
        a0 + (a1 - a0) * (r - r0) / (r1 - r0)
    }

    /// Smallest `r` with `A(r) = v` on the interpolant.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        radial_minorant_inverse(self, v)
    }

    /// Upper bound for the inverse of any convex function through the knot
    /// values.
    ///
    /// Inside cell `i` a convex function lies above the extensions of the
    /// secants of the neighbouring cells, so the larger of the two is a lower
    /// envelope and its inverse bounds the true inverse from above.
    pub fn inverse_upper(&self, v: f64) -> Result<f64> {
        let chord = self.inverse(v)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        let m = self.knots.len();
        let i = self.cell(chord);
        let secant = |j: usize| -> Option<(f64, f64)> {
            (j + 1 < m).then(|| {
                let slope = (self.values[j + 1] - self.values[j]) / (self.knots[j + 1] - self.knots[j]);
                (slope, self.values[j] - slope * self.knots[j])
            })
        };
        let (r0, r1) = (self.knots[i], self.knots[i + 1]);
        let lower = |r: f64| {
            let mut best = f64::NEG_INFINITY;
            for j in [i.checked_sub(1), Some(i + 1)].into_iter().flatten() {
                if let Some((s, b)) = secant(j) {
                    best = best.max(s * r + b);
                }
            }
            if best == f64::NEG_INFINITY {
                // Single cell: no neighbour information.
                self.value(r)
            } else {
                best.min(self.value(r))
            }
        };
        if lower(r1) < v {
            return Ok(r1);
        }
        // `lower` is nondecreasing on the cell for nondecreasing profiles.
        let (mut lo, mut hi) = (r0, r1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if lower(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        Ok(hi.max(chord))
    }
}

/// Infimum of `phi` over the sphere of radius `r`.
fn sphere_infimum<F: ConvexFunction + ?Sized>(phi: &F, r: f64, dirs: &[Vec<f64>]) -> Result<f64> {
    let d = phi.dim();
    if phi.is_radial() {
        let mut e = vec![0.0; d];
        e[0] = r;
        return Ok(phi.value(&e));
    }
    if d == 1 {
        return Ok(phi.value(&[r]).min(phi.value(&[-r])));
    }
    let (mut best, mut best_j) = (f64::INFINITY, 0);
    for (j, e) in dirs.iter().enumerate() {
        let v = phi.value(&vecops::scale(e, r));
        if v < best {
            best = v;
            best_j = j;
        }
    }
    if d == 2 {
        let step = 2.0 * std::f64::consts::PI / dirs.len() as f64;
        let th0 = dirs[best_j][1].atan2(dirs[best_j][0]);
        let g = |th: f64| -phi.value(&[r * th.cos(), r * th.sin()]);
        let refined = -golden_max(g, th0 - step, th0 + step, 3 * REFINE_STEPS);
        return Ok(best.min(refined));
    }
    // Riemannian gradient descent on the sphere with backtracking.
    let mut x = vecops::scale(&dirs[best_j], r);
    let mut fx = best;
    let mut last_gain = f64::INFINITY;
    for _ in 0..REFINE_STEPS {
        let g = phi.gradient(&x);
        let xhat = vecops::scale(&x, 1.0 / r);
        let radial = vecops::dot(&g, &xhat);
        let tangent = vecops::axpy(-radial, &xhat, &g);
        let tnorm = vecops::norm(&tangent);
        if tnorm <= 1e-14 * (1.0 + vecops::norm(&g)) {
            last_gain = 0.0;
            break;
        }
        let mut step = r / tnorm;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = vecops::axpy(-step, &tangent, &x);
            let trial = vecops::scale(&trial, r / vecops::norm(&trial));
            let ft = phi.value(&trial);
            if ft <= fx - 1e-4 * step * tnorm * tnorm {
                last_gain = fx - ft;
                x = trial;
                fx = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            last_gain = 0.0;
            break;
        }
    }
    if !fx.is_finite() || last_gain > 1e-3 * (1.0 + fx.abs()) {
        return Err(Error::SphereMinimizationFailed { radius: r });
    }
    Ok(fx)
}

/// Greatest convex nondecreasing piecewise-linear function below the samples
/// `(r_i, m_i)`, evaluated at the same knots. Uses the monotone-chain lower
/// hull.
fn lower_convex_envelope(knots: &[f64], samples: &[f64]) -> Vec<f64> {
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
    for (&r, &m) in knots.iter().zip(samples) {
        let p = (r, m);
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(knots.len());
    let mut seg = 0;
    for &r in knots {
        while seg + 1 < hull.len() - 1 && hull[seg + 1].0 <= r {
            seg += 1;
        }
        let (a, b) = (hull[seg], hull[(seg + 1).min(hull.len() - 1)]);
        let v = if b.0 > a.0 { a.1 + (b.1 - a.1) * (r - a.0) / (b.0 - a.0) } else { a.1 };
        out.push(v);
    }
    // Monotone clamping: a convex function of |x| is nondecreasing in r.
    out[0] = 0.0;
    for i in 1..out.len() {
        out[i] = out[i].max(out[i - 1]).max(0.0);
    }
    out
}

/// Greatest convex radial minorant `A_Phi` sampled on `m + 1` uniform knots
/// over `[0, r_max]`.
pub fn radial_minorant<F: ConvexFunction + ?Sized>(phi: &F, r_max: f64, m: usize) -> Result<RadialProfile> {
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("r_max = {r_max} must be positive")));
    }
    if m < 8 {
        return Err(Error::InvalidParameter(format!("knot count {m} must be at least 8")));
    }
    let d = phi.dim();
    let dirs = sampling::sphere_directions(d, ANGULAR_SAMPLES_PER_DIM * d, 0xa11ce);
    let knots: Vec<f64> = (0..=m).map(|i| r_max * i as f64 / m as f64).collect();
    let mut samples = Vec::with_capacity(knots.len());
    samples.push(0.0);
    for &r in &knots[1..] {
        samples.push(sphere_infimum(phi, r, &dirs)?);
    }
    let values = lower_convex_envelope(&knots, &samples);
    Ok(RadialProfile { knots, values })
}

/// Radial minorant whose range reaches at least `v_max`, doubling `r_max`
/// from 1 as needed.
pub fn radial_minorant_covering<F: ConvexFunction + ?Sized>(
    phi: &F,
    v_max: f64,
    m: usize,
) -> Result<RadialProfile> {
    let d = phi.dim();
    let dirs = sampling::sphere_directions(d, ANGULAR_SAMPLES_PER_DIM * d, 0xa11ce);
    let mut r_max = 1.0;
    for _ in 0..200 {
        if sphere_infimum(phi, r_max, &dirs)? >= v_max {
            let prof = radial_minorant(phi, r_max, m)?;
            if prof.max_value() >= v_max {
                return Ok(prof);
            }
        }
        r_max *= 2.0;
    }
    Err(Error::ProfileRangeExceeded { needed: v_max, available: f64::NAN })
}

/// Smallest `r` with `A(r) = v`, by bisection on the piecewise-linear profile.
pub fn radial_minorant_inverse(a: &RadialProfile, v: f64) -> Result<f64> {
    if v < 0.0 || v.is_nan() {
        return Err(Error::InvalidParameter(format!("inverse argument {v} must be >= 0")));
    }
    if v > a.max_value() {
        return Err(Error::OutOfRange { value: v, max: a.max_value() });
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, a.r_max());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if a.value(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::{make_aniso, make_exponential, make_power, NFunction};

    fn aniso_profile(r: f64) -> f64 {
        if r <= 1.0 {
            r.powi(4) / 4.0
        } else {
            r * r / 2.0 - 0.25
        }
    }

    #[test]
    fn power_is_its_own_minorant() {
        let prof = radial_minorant(&make_power(2.0, 2).unwrap(), 4.0, 64).unwrap();
        for (r, a) in prof.knots.iter().zip(&prof.values) {
            assert!((a - r * r / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_radial_profile() {
        let prof = radial_minorant(&make_exponential(2).unwrap(), 2.0, 32).unwrap();
        for (r, a) in prof.knots.iter().zip(&prof.values) {
            assert!((a - (r * r).exp_m1()).abs() < 1e-12 * (1.0 + a));
        }
    }

    #[test]
    fn aniso_profile_matches_angle_minimization() {
        let prof = radial_minorant(&make_aniso(2.0, 4.0, 1, 1).unwrap(), 4.0, 64).unwrap();
        for (r, a) in prof.knots.iter().zip(&prof.values) {
            assert!((a - aniso_profile(*r)).abs() < 1e-6, "r={r}: {a}");
        }
        let i = prof.knots.iter().position(|&r| (r - 2.0).abs() < 1e-12).unwrap();
        assert!((prof.values[i] - 1.75).abs() < 1e-6);
        let r = prof.inverse(1.75).unwrap();
        assert!((r - 2.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_edge_cases() {
        let prof = radial_minorant(&make_power(2.0, 1).unwrap(), 2.0, 200).unwrap();
        assert_eq!(prof.inverse(0.0).unwrap(), 0.0);
        assert!((prof.inverse(0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(prof.inverse(3.0), Err(Error::OutOfRange { .. })));
        assert!(prof.inverse(-1.0).is_err());
    }

    #[test]
    fn inverse_upper_brackets_true_inverse() {
        let prof = radial_minorant(&make_power(2.0, 1).unwrap(), 4.0, 16).unwrap();
        for v in [0.1, 0.5, 1.0, 3.3, 7.9] {
            let exact = (2.0f64 * v).sqrt();
            let chord = prof.inverse(v).unwrap();
            let upper = prof.inverse_upper(v).unwrap();
            assert!(chord <= exact + 1e-12);
            assert!(upper >= exact - 1e-12, "v={v}: {upper} < {exact}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let phi = make_power(2.0, 1).unwrap();
        assert!(radial_minorant(&phi, 0.0, 16).is_err());
        assert!(radial_minorant(&phi, 1.0, 4).is_err());
    }

    #[test]
    fn nonconvex_sphere_infimum_is_hulled() {
        // m(r) = r^2 on [0,1] then flat-ish growth: hull must stay below.
        let phi = NFunction::custom(1, |y| { let r = y[0].abs(); if r < 1.0 { r * r } else { 1.0 + 0.1 * (r - 1.0) + (r - 1.0).powi(3) } }, true);
        let prof = radial_minorant(&phi, 3.0, 30).unwrap();
        for (r, a) in prof.knots.iter().zip(&prof.values) {
            assert!(*a <= phi.value(&[*r]) + 1e-12);
        }
        let slopes: Vec<f64> = prof.values.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(slopes.windows(2).all(|s| s[1] >= s[0] - 1e-12));
    }

    #[test]
    fn covering_reaches_target() {
        let prof = radial_minorant_covering(&make_power(2.0, 2).unwrap(), 128.0, 64).unwrap();
        assert!(prof.max_value() >= 128.0);
    }
}
