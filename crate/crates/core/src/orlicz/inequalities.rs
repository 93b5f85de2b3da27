use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{luxemburg_norm, mean_decompose, Trajectory};
use crate::error::{Error, Result};
use crate::nfunction::{radial_minorant_covering, ConvexFunction, RadialProfile};
use crate::sampling;
use crate::vecops;

pub const MORREY_ALL_PAIRS_MAX_N: usize = 128;
pub const MORREY_RANDOM_PAIRS: usize = 10_000;
const PROFILE_KNOTS: usize = 512;

/// Smallest `rhs - lhs` over the evaluated instances of one inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub min_slack: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Slack {
    fn new() -> Slack {
        Slack { min_slack: f64::INFINITY, lhs: 0.0, rhs: 0.0 }
    }

    fn record(&mut self, lhs: f64, rhs: f64) {
        let s = rhs - lhs;
        if s < self.min_slack {
            *self = Slack { min_slack: s, lhs, rhs };
        }
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.min_slack >= -tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub morrey: Slack,
    pub sobolev: Slack,
    pub poincare_wirtinger: Slack,
    pub aniso_poincare_wirtinger: Slack,
    pub derivative_norm: f64,
    pub norm: f64,
}

impl InequalityReport {
    pub fn all_hold(&self, tol: f64) -> bool {
        [self.morrey, self.sobolev, self.poincare_wirtinger, self.aniso_poincare_wirtinger]
            .iter()
            .all(|s| s.holds(tol))
    }
}

/// Radial minorant reaching `A^{-1}(N / T)`, enough for every node pair.
pub fn suite_profile<F: ConvexFunction + ?Sized>(phi: &F, period: f64, n: usize) -> Result<RadialProfile> {
    let v_max = (n as f64 / period).max(1.0 / period);
    radial_minorant_covering(phi, v_max, PROFILE_KNOTS)
}

/// Morrey, Sobolev, Poincare-Wirtinger and anisotropic Poincare-Wirtinger
/// inequalities evaluated on `u` and its piecewise-linear interpolant.
pub fn inequality_suite<F: ConvexFunction + ?Sized>(phi: &F, u: &Trajectory) -> Result<InequalityReport> {
    let profile = suite_profile(phi, u.period(), u.len())?;
    inequality_suite_with_profile(phi, u, &profile)
}

pub fn inequality_suite_with_profile<F: ConvexFunction + ?Sized>(
    phi: &F,
    u: &Trajectory,
    profile: &RadialProfile,
) -> Result<InequalityReport> {
    if phi.dim() != u.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: u.dim() });
    }
    let n = u.len();
    let period = u.period();
    let h = u.step();
    let a_inv = |v: f64| -> Result<f64> {
        if v > profile.max_value() {
            return Err(Error::ProfileRangeExceeded { needed: v, available: profile.max_value() });
        }
        profile.inverse_upper(v)
    };

    let du = u.derivative();
    let norm_du = luxemburg_norm(phi, &du)?;
    let norm_u = luxemburg_norm(phi, u)?;

    // The bound depends on the node offset only.
    let bound = (1..n)
        .map(|k| {
            let dist = k as f64 * h;
            Ok(dist * a_inv(1.0 / dist)? * norm_du)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut morrey = Slack::new();
    let mut pair = |i: usize, j: usize| -> Result<()> {
        let lhs = vecops::norm(&vecops::sub(u.node(i), u.node(j)));
        morrey.record(lhs, bound[j - i - 1]);
        Ok(())
    };
    if n <= MORREY_ALL_PAIRS_MAX_N {
        for i in 0..n {
            for j in i + 1..n {
                pair(i, j)?;
            }
        }
    } else {
        let mut rng = sampling::rng(0x6d6f72);
        for _ in 0..MORREY_RANDOM_PAIRS {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            pair(i.min(j), i.max(j))?;
        }
    }

    let a_inv_t = a_inv(1.0 / period)?;
    let mut sobolev = Slack::new();
    sobolev.record(u.sup_norm(), a_inv_t * period.max(1.0) * (norm_u + norm_du));

    let (_, tilde) = mean_decompose(u);
    let mut pw = Slack::new();
    pw.record(tilde.sup_norm(), period * a_inv_t * norm_du);

    let rhs_aniso = du.nodes().map(|y| phi.value(&vecops::scale(y, period))).sum::<f64>() * h / period;
    let mut aniso = Slack::new();
    for x in tilde.nodes() {
        aniso.record(phi.value(x), rhs_aniso);
    }

    Ok(InequalityReport {
        morrey,
        sobolev,
        poincare_wirtinger: pw,
        aniso_poincare_wirtinger: aniso,
        derivative_norm: norm_du,
        norm: norm_u,
    })
}

/// Truncation decay curve `K -> ||Du - clamp_K(Du)||_Phi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistCurve {
    pub curve: Vec<(f64, f64)>,
    pub best_k: f64,
    pub estimate: f64,
}

/// Distance of `u'` to bounded functions, estimated by radial clamping of the
/// forward differences. Without a grid, uses `K = 0` plus 33 geometric levels
/// up to `max |Du_i|`.
pub fn dist_to_bounded<F: ConvexFunction + ?Sized>(
    phi: &F,
    u: &Trajectory,
    k_grid: Option<&[f64]>,
) -> Result<DistCurve> {
    let du = u.derivative();
    let top = du.sup_norm();
    let mut grid: Vec<f64> = match k_grid {
        Some(g) => g.to_vec(),
        None if top == 0.0 => vec![0.0],
        None => std::iter::once(0.0)
            .chain((0..=32).map(|i| top * 10f64.powf(-4.0 * (32 - i) as f64 / 32.0)))
            .collect(),
    };
    if grid.iter().any(|k| !(*k >= 0.0)) {
        return Err(Error::InvalidParameter("truncation levels must be nonnegative".into()));
    }
    grid.sort_by(f64::total_cmp);
    let mut curve = Vec::with_capacity(grid.len());
    for &k in &grid {
        let excess = du.map(|y| {
            let r = vecops::norm(y);
            if r > k {
                vecops::scale(y, 1.0 - k / r)
            } else {
                vec![0.0; y.len()]
            }
        })?;
        curve.push((k, luxemburg_norm(phi, &excess)?));
    }
    let (best_k, estimate) = curve
        .iter()
        .copied()
        .fold((f64::NAN, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    Ok(DistCurve { curve, best_k, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::make_power;
    use std::f64::consts::PI;

    #[test]
    fn constant_path_all_hold_with_zero_sides() {
        let phi = make_power(2.0, 2).unwrap();
        let u = Trajectory::constant(1.0, 32, &[0.3, -0.2]).unwrap();
        let r = inequality_suite(&phi, &u).unwrap();
        assert!(r.all_hold(1e-12));
        assert_eq!(r.morrey.lhs, 0.0);
        assert!(r.poincare_wirtinger.lhs < 1e-15);
        assert!(r.aniso_poincare_wirtinger.lhs < 1e-30);
    }

    #[test]
    fn sine_power_two() {
        let phi = make_power(2.0, 1).unwrap();
        let u = Trajectory::from_fn(1.0, 256, 1, |t, o| o[0] = (2.0 * PI * t).sin()).unwrap();
        let r = inequality_suite(&phi, &u).unwrap();
        assert!(r.all_hold(0.0), "{r:?}");
        // ||2 pi cos||_{L^Phi_2} = pi
        assert!((r.derivative_norm - PI).abs() < 1e-3);
    }

    #[test]
    fn short_profile_is_reported() {
        let phi = make_power(2.0, 1).unwrap();
        let u = Trajectory::from_fn(1.0, 64, 1, |t, o| o[0] = t.sin()).unwrap();
        let short = crate::nfunction::radial_minorant(&phi, 2.0, 16).unwrap();
        assert!(matches!(
            inequality_suite_with_profile(&phi, &u, &short),
            Err(Error::ProfileRangeExceeded { .. })
        ));
    }

    #[test]
    fn dist_curve_spike() {
        let phi = make_power(2.0, 1).unwrap();
        let n = 64;
        let mut vals = vec![0.0; n];
        vals[10] = 1e3 / n as f64;
        let u = Trajectory::new(1.0, 1, vals).unwrap();
        let grid = [0.0, 1.0, 10.0, 100.0, 500.0, 999.0, 1000.0, 2000.0];
        let c = dist_to_bounded(&phi, &u, Some(&grid)).unwrap();
        let d: Vec<f64> = c.curve.iter().map(|p| p.1).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0]));
        assert!(d[5] > 0.0);
        assert_eq!(d[6], 0.0);
        assert_eq!(c.best_k, 1000.0);
        assert_eq!(c.estimate, 0.0);
    }

    #[test]
    fn dist_of_zero_and_smooth() {
        let phi = make_power(2.0, 1).unwrap();
        let z = dist_to_bounded(&phi, &Trajectory::zeros(1.0, 8, 1).unwrap(), None).unwrap();
        assert_eq!((z.best_k, z.estimate), (0.0, 0.0));
        let u = Trajectory::from_fn(1.0, 64, 1, |t, o| o[0] = (2.0 * PI * t).sin()).unwrap();
        let c = dist_to_bounded(&phi, &u, None).unwrap();
        assert_eq!(c.estimate, 0.0);
        assert!(c.best_k.is_finite());
    }
}
