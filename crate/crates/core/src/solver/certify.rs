use serde::{Deserialize, Serialize};

use super::Problem;
use crate::error::Result;
use crate::nfunction::{ConvexFunction, NFunction};
use crate::orlicz::{dist_to_bounded, DistCurve, Trajectory};
use crate::potential::make_manufactured;
use crate::sampling;
use crate::vecops;

/// Safety factor between the calibration residual and `c_res`.
pub const CALIBRATION_FACTOR: f64 = 50.0;
const CONVEXITY_SEGMENTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CresSource {
    Given,
    Calibrated,
    /// Calibration impossible for this `Phi`; a unit constant is used.
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityCheck {
    pub segments: usize,
    pub skipped: usize,
    /// Smallest `(Phi(a) + Phi(b))/2 - Phi((a + b)/2)` relative to the
    /// endpoint average.
    pub min_relative_gap: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub certified: bool,
    pub el_residual: f64,
    pub worst_node: usize,
    pub threshold: f64,
    pub c_res: f64,
    pub c_res_source: CresSource,
    /// `|u(0) - u(T)|`; zero by construction on the periodic grid.
    pub boundary_residual: f64,
    pub periodicity_residual: f64,
    pub strict_convexity: ConvexityCheck,
    pub dist_curve: DistCurve,
    pub reasons: Vec<String>,
}

/// Largest node residual of the discrete Euler-Lagrange equation at the
/// sampled exact solution `u*_k = (T / 4 pi) sin(2 pi t / T)` of a
/// manufactured problem with the same `Phi` and grid.
pub fn calibration_residual(phi: &NFunction, period: f64, n: usize) -> Result<f64> {
    let amp = 0.25 * period / std::f64::consts::PI;
    let w = 2.0 * std::f64::consts::PI / period;
    let sampler = |t: f64, o: &mut [f64]| o.iter_mut().for_each(|v| *v = amp * (w * t).sin());
    let samples = Trajectory::from_fn(period, 32, phi.dim(), sampler)?;
    let f = make_manufactured(phi, &samples)?;
    let problem = Problem::new(phi.clone(), f, n)?;
    let exact = Trajectory::from_fn(period, n, phi.dim(), sampler)?;
    Ok(problem.residuals_flat(exact.values()).into_iter().fold(0.0, f64::max))
}

/// `c_res` and where it came from.
pub fn resolve_c_res(phi: &NFunction, period: f64, n: usize, given: Option<f64>) -> (f64, CresSource) {
    match given {
        Some(c) => (c, CresSource::Given),
        None => match calibration_residual(phi, period, n) {
            Ok(r) if r > 0.0 && r.is_finite() => (CALIBRATION_FACTOR * r, CresSource::Calibrated),
            _ => (1.0, CresSource::Fallback),
        },
    }
}

/// Midpoint test of strict convexity on random segments inside the ball of
/// radius `radius`.
pub fn strict_convexity_check<F: ConvexFunction + ?Sized>(phi: &F, radius: f64, seed: u64) -> ConvexityCheck {
    let mut rng = sampling::rng(seed);
    let d = phi.dim();
    let (mut skipped, mut min_gap) = (0, f64::INFINITY);
    for _ in 0..CONVEXITY_SEGMENTS {
        let a = sampling::random_point(&mut rng, d, radius);
        let b = sampling::random_point(&mut rng, d, radius);
        let m = vecops::scale(&vecops::add(&a, &b), 0.5);
        let (fa, fb, fm) = (phi.value(&a), phi.value(&b), phi.value(&m));
        let avg = 0.5 * (fa + fb);
        if !(avg.is_finite() && fm.is_finite()) || vecops::norm(&vecops::sub(&a, &b)) < 1e-6 * radius {
            skipped += 1;
            continue;
        }
        min_gap = min_gap.min((avg - fm) / avg.max(f64::MIN_POSITIVE));
    }
    let tested = CONVEXITY_SEGMENTS - skipped;
    ConvexityCheck {
        segments: tested,
        skipped,
        min_relative_gap: min_gap,
        passed: tested > 0 && min_gap > 1e-12,
    }
}

/// Certifies `u` as a discrete solution: the Euler-Lagrange residual must
/// not exceed `c_res / N` and `Phi` must pass the strict-convexity samples.
pub fn certify(problem: &Problem, u: &Trajectory, c_res: Option<f64>, seed: u64) -> Result<Certification> {
    let residuals = super::el_residuals(problem, u)?;
    let (worst_node, el_residual) = residuals
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0f64), |best, (i, r)| if r > best.1 || r.is_nan() { (i, r) } else { best });
    let (c_res, c_res_source) = resolve_c_res(&problem.phi, problem.period, problem.n, c_res);
    let threshold = c_res / problem.n as f64;
    let radius = 2.0 * u.derivative().sup_norm().max(0.5);
    let strict_convexity = strict_convexity_check(&problem.phi, radius, seed);
    let dist_curve = dist_to_bounded(&problem.phi, u, None)?;
    let mut reasons = Vec::new();
    if !(el_residual <= threshold) {
        reasons.push(format!("EL residual {el_residual:.3e} exceeds c_res/N = {threshold:.3e} at node {worst_node}"));
    }
    if !strict_convexity.passed {
        reasons.push("strict convexity samples failed".into());
    }
    Ok(Certification {
        certified: reasons.is_empty(),
        el_residual,
        worst_node,
        threshold,
        c_res,
        c_res_source,
        boundary_residual: 0.0,
        periodicity_residual: problem.periodicity_residual_flat(u.values()),
        strict_convexity,
        dist_curve,
        reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunction::{make_exponential, make_power};
    use crate::potential::{Potential, TimeSeries};
    use std::f64::consts::PI;

    #[test]
    fn calibration_is_second_order_for_quadratic_phi() {
        let phi = make_power(2.0, 1).unwrap();
        let r1 = calibration_residual(&phi, 1.0, 128).unwrap();
        let r2 = calibration_residual(&phi, 1.0, 256).unwrap();
        // central second difference: u'''' h^2 / 12 with u'''' = (2 pi)^4 / (4 pi)
        let h = 1.0 / 256.0;
        let expected = (2.0 * PI).powi(4) / (4.0 * PI) * h * h / 12.0;
        assert!((r2 - expected).abs() < 1e-2 * expected, "{r2} vs {expected}");
        assert!((r1 / r2 - 4.0).abs() < 0.05);
    }

    #[test]
    fn strict_convexity_flags_linear_pieces() {
        assert!(strict_convexity_check(&make_exponential(2).unwrap(), 3.0, 1).passed);
        let flat = NFunction::custom(1, |y| (y[0].abs() - 1.0).max(0.0).powi(2), true);
        assert!(!strict_convexity_check(&flat, 2.0, 1).passed);
    }

    #[test]
    fn random_path_is_uncertified() {
        let f = Potential::quadratic_forcing(vec![TimeSeries { sin: vec![-1.0], ..Default::default() }], 1.0).unwrap();
        let p = Problem::new(make_power(2.0, 1).unwrap(), f, 64).unwrap();
        let mut rng = sampling::rng(3);
        let u = sampling::random_band_limited(&mut rng, 64, 1, 1.0, 4, 0.5, 0.0);
        let c = certify(&p, &u, None, 0).unwrap();
        assert!(!c.certified);
        assert!(c.el_residual > 1.0);
        assert_eq!(c.c_res_source, CresSource::Calibrated);
    }
}
