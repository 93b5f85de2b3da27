//! Orlicz-space quantities over sampled periodic trajectories.

mod inequalities;
mod trajectory;

pub use inequalities::{
    dist_to_bounded, inequality_suite, inequality_suite_with_profile, suite_profile, DistCurve, InequalityReport,
    Slack, MORREY_ALL_PAIRS_MAX_N, MORREY_RANDOM_PAIRS,
};
pub use trajectory::{Trajectory, MIN_NODES};

use serde::{Deserialize, Serialize};

use crate::conjugate::ConjugateFunction;
use crate::error::{Error, Result};
use crate::nfunction::ConvexFunction;
use crate::vecops;

/// `rho_Phi(u)` by the rectangle rule; `overflowed` is set when a summand is
/// not finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModularValue {
    pub value: f64,
    pub overflowed: bool,
}

fn check_dim<F: ConvexFunction + ?Sized>(phi: &F, u: &Trajectory) -> Result<()> {
    if phi.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: u.dim() });
    }
    Ok(())
}

fn scaled_modular<F: ConvexFunction + ?Sized>(phi: &F, u: &Trajectory, inv_lambda: f64) -> f64 {
    let mut buf = vec![0.0; u.dim()];
    let mut sum = 0.0;
    for x in u.nodes() {
        for (b, v) in buf.iter_mut().zip(x) {
            *b = v * inv_lambda;
        }
        sum += phi.value(&buf);
    }
    sum * u.step()
}

pub fn modular<F: ConvexFunction + ?Sized>(phi: &F, u: &Trajectory) -> Result<ModularValue> {
    check_dim(phi, u)?;
    let value = scaled_modular(phi, u, 1.0);
    Ok(ModularValue { value, overflowed: !value.is_finite() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LuxemburgConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    pub max_doublings: usize,
}

impl Default for LuxemburgConfig {
    fn default() -> Self {
        LuxemburgConfig { rel_tol: 1e-8, max_iter: 200, max_doublings: 1000 }
    }
}

/// Smallest `lambda` with `rho_Phi(u / lambda) <= 1`.
///
/// The returned value is the upper end of the final bracket, so the modular
/// at the returned scale never exceeds one.
pub fn luxemburg_norm<F: ConvexFunction + ?Sized>(phi: &F, u: &Trajectory) -> Result<f64> {
    luxemburg_norm_with(phi, u, &LuxemburgConfig::default())
}

pub fn luxemburg_norm_with<F: ConvexFunction + ?Sized>(
    phi: &F,
    u: &Trajectory,
    cfg: &LuxemburgConfig,
) -> Result<f64> {
    check_dim(phi, u)?;
    if u.values().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let inside = |lambda: f64| scaled_modular(phi, u, 1.0 / lambda) <= 1.0;
    let (mut lo, mut hi);
    if inside(1.0) {
        hi = 1.0;
        let mut k = 0;
        while inside(hi * 0.5) {
            hi *= 0.5;
            k += 1;
            if k >= cfg.max_doublings {
                return Err(Error::BracketFailure { doublings: k });
            }
        }
        lo = hi * 0.5;
    } else {
        lo = 1.0;
        let mut k = 0;
        while !inside(lo * 2.0) {
            lo *= 2.0;
            k += 1;
            if k >= cfg.max_doublings {
                return Err(Error::BracketFailure { doublings: k });
            }
        }
        hi = lo * 2.0;
    }
    for _ in 0..cfg.max_iter {
        if hi - lo <= cfg.rel_tol * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmemiyaReport {
    pub norm: f64,
    pub modular: f64,
    pub holds: bool,
}

/// `||u|| <= rho(u) + 1`.
pub fn amemiya_check<F: ConvexFunction + ?Sized>(phi: &F, u: &Trajectory) -> Result<AmemiyaReport> {
    let norm = luxemburg_norm(phi, u)?;
    let modular = modular(phi, u)?.value;
    Ok(AmemiyaReport { norm, modular, holds: norm <= modular + 1.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub integral: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `int u . v <= 2 ||u||_Phi ||v||_Phi*`.
pub fn holder_check<F: ConvexFunction + ?Sized>(
    phi: &F,
    phistar: &ConjugateFunction,
    u: &Trajectory,
    v: &Trajectory,
) -> Result<HolderReport> {
    u.check_same_grid(v)?;
    let integral: f64 = u.nodes().zip(v.nodes()).map(|(a, b)| vecops::dot(a, b)).sum::<f64>() * u.step();
    let bound = 2.0 * luxemburg_norm(phi, u)? * luxemburg_norm(phistar, v)?;
    let holds = integral <= bound * (1.0 + 1e-12) + 1e-300;
    Ok(HolderReport { integral, bound, holds })
}

/// `(mean, u - mean)` with the rectangle-rule mean.
pub fn mean_decompose(u: &Trajectory) -> (Vec<f64>, Trajectory) {
    let n = u.len() as f64;
    let mut mean = vec![0.0; u.dim()];
    for x in u.nodes() {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let tilde = u.map(|x| vecops::sub(x, &mean)).expect("same shape");
    (mean, tilde)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::conjugate;
    use crate::nfunction::{make_exponential, make_power};
    use crate::sampling;
    use std::f64::consts::PI;

    fn sine(n: usize) -> Trajectory {
        Trajectory::from_fn(1.0, n, 1, |t, o| o[0] = (2.0 * PI * t).sin()).unwrap()
    }

    #[test]
    fn modular_of_identity_path() {
        let phi = make_power(2.0, 1).unwrap();
        let u = Trajectory::from_fn(1.0, 4096, 1, |t, o| o[0] = t).unwrap();
        assert!((modular(&phi, &u).unwrap().value - 1.0 / 6.0).abs() < 1e-4);
        assert_eq!(modular(&phi, &Trajectory::zeros(1.0, 8, 1).unwrap()).unwrap().value, 0.0);
    }

    #[test]
    fn modular_exponential_sine() {
        // int_0^1 e^{sin^2} - 1 = e^{1/2} I_0(1/2) - 1
        let i0 = (0..30).map(|k| 0.0625f64.powi(k) / (1..=k).map(f64::from).product::<f64>().powi(2)).sum::<f64>();
        let oracle = 0.5f64.exp() * i0 - 1.0;
        let phi = make_exponential(1).unwrap();
        let m = modular(&phi, &sine(1 << 16)).unwrap();
        assert!(!m.overflowed);
        assert!((m.value - oracle).abs() < 1e-12);
    }

    #[test]
    fn modular_flags_overflow() {
        let phi = make_exponential(1).unwrap();
        let u = Trajectory::constant(1.0, 8, &[40.0]).unwrap();
        assert!(modular(&phi, &u).unwrap().overflowed);
    }

    #[test]
    fn luxemburg_of_unit_constant() {
        let phi = make_power(2.0, 1).unwrap();
        let u = Trajectory::constant(1.0, 16, &[1.0]).unwrap();
        let n = luxemburg_norm(&phi, &u).unwrap();
        assert!((n - 0.5f64.sqrt()).abs() < 1e-8);
        assert_eq!(luxemburg_norm(&phi, &Trajectory::zeros(1.0, 16, 1).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn luxemburg_homogeneous() {
        let phi = make_exponential(2).unwrap();
        let u = sampling::random_band_limited(&mut sampling::rng(5), 64, 2, 1.0, 4, 1.0, 1.0);
        let a = luxemburg_norm(&phi, &u).unwrap();
        let b = luxemburg_norm(&phi, &u.scale(2.0)).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-8 * b);
    }

    #[test]
    fn amemiya_and_holder_examples() {
        let phi = make_power(2.0, 1).unwrap();
        let one = Trajectory::constant(1.0, 16, &[1.0]).unwrap();
        let a = amemiya_check(&phi, &one).unwrap();
        assert!(a.holds);
        assert!((a.modular - 0.5).abs() < 1e-15);
        assert!(amemiya_check(&phi, &Trajectory::zeros(1.0, 8, 1).unwrap()).unwrap().holds);

        let star = conjugate(&phi);
        let h = holder_check(&phi, &star, &one, &one).unwrap();
        assert!(h.holds);
        assert!((h.bound - 1.0).abs() < 1e-7);
        let zero = Trajectory::zeros(1.0, 16, 1).unwrap();
        assert_eq!(holder_check(&phi, &star, &one, &zero).unwrap().bound, 0.0);
    }

    #[test]
    fn mean_decomposition() {
        let u = Trajectory::from_fn(1.0, 64, 1, |t, o| o[0] = 1.0 + (2.0 * PI * t).sin()).unwrap();
        let (m, tilde) = mean_decompose(&u);
        assert!((m[0] - 1.0).abs() < 1e-14);
        let (m2, _) = mean_decompose(&tilde);
        assert!(m2[0].abs() < 1e-12);
        for i in 0..64 {
            assert!((tilde.node(i)[0] - (2.0 * PI * u.t(i)).sin()).abs() < 1e-14);
        }
        let (c, z) = mean_decompose(&Trajectory::constant(1.0, 8, &[2.0, -1.0]).unwrap());
        assert_eq!(c, vec![2.0, -1.0]);
        assert!(z.values().iter().all(|&v| v == 0.0));
    }
}
