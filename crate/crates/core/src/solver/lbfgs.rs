use std::collections::VecDeque;

use super::precond::{Identity, Preconditioner};
use crate::vecops;

/// Settings of the limited-memory quasi-Newton iteration.
#[derive(Clone, Copy, Debug)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iter: usize,
    /// Exit once `grad_scale * max |g_i|` drops below this.
    pub gtol: f64,
    pub grad_scale: f64,
    /// Sufficient-decrease parameter of the Armijo test.
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 10,
            max_iter: 20_000,
            gtol: 1e-8,
            grad_scale: 1.0,
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    /// Objective value at every accepted iterate, starting point included.
    pub trace: Vec<f64>,
}

impl LbfgsOutcome {
    pub fn scaled_gradient_norm(&self, scale: f64) -> f64 {
        scale * vecops::max_abs(&self.gradient)
    }
}

/// Two-loop recursion: `-H g` for the inverse Hessian approximation built from
/// the stored `(s, y)` pairs on top of the scaled preconditioner.
fn direction<P: Preconditioner + ?Sized>(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, pre: &P) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * vecops::dot(s, &q);
        vecops::axpy(-a, y, &mut q);
        alphas.push(a);
    }
    q = pre.apply(&q);
    if let Some((s, y, _)) = hist.back() {
        let gamma = vecops::dot(s, y) / vecops::dot(y, &pre.apply(y));
        if gamma.is_finite() && gamma > 0.0 {
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * vecops::dot(y, &q);
        vecops::axpy(a - b, s, &mut q);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizes `f`, which returns the value and gradient, from `x0`.
///
/// Steps satisfy the Armijo condition, or else lie within rounding of the
/// current value without increasing it. A failed line search restarts from
/// steepest descent once before the run is declared stalled.
pub fn lbfgs<F>(f: F, x0: Vec<f64>, cfg: &LbfgsConfig) -> LbfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    lbfgs_preconditioned(f, x0, cfg, &mut Identity)
}

/// [`lbfgs`] with `pre` as the initial inverse Hessian, refreshed as the
/// iterate moves.
pub fn lbfgs_preconditioned<F, P>(mut f: F, x0: Vec<f64>, cfg: &LbfgsConfig, pre: &mut P) -> LbfgsOutcome
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    P: Preconditioner + ?Sized,
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    let mut trace = vec![fx];
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let gnorm = |g: &[f64]| cfg.grad_scale * vecops::max_abs(g);
    let mut iterations = 0;
    let mut stalled = false;
    let mut converged = fx.is_finite() && gnorm(&g) < cfg.gtol;
    while !converged && iterations < cfg.max_iter && fx.is_finite() {
        pre.refresh(&x, iterations);
        let mut d = direction(&g, &hist, &*pre);
        let mut slope = vecops::dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -vecops::dot(&g, &g);
        }
        let mut alpha = 1.0;
        let noise = 1e-13 * fx.abs().max(1e-300);
        let mut accepted = None;
        for _ in 0..cfg.max_backtracks {
            let trial = vecops::add(&x, &vecops::scale(&d, alpha));
            let (ft, gt) = f(&trial);
            if ft.is_finite() {
                let armijo = ft <= fx + cfg.c1 * alpha * slope;
                let flat = ft <= fx && fx - ft <= noise && vecops::dot(&gt, &d).abs() < slope.abs();
                if armijo || flat {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            alpha *= cfg.backtrack;
        }
        let Some((xn, fxn, gn)) = accepted else {
            if hist.is_empty() {
                stalled = true;
                break;
            }
            hist.clear();
            continue;
        };
        let s = vecops::sub(&xn, &x);
        let y = vecops::sub(&gn, &g);
        let sy = vecops::dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == cfg.memory {
                hist.pop_front();
            }
            hist.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fxn;
        g = gn;
        trace.push(fx);
        iterations += 1;
        converged = gnorm(&g) < cfg.gtol;
    }
    LbfgsOutcome { x, value: fx, gradient: g, iterations, converged, stalled, trace }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        (v, g)
    }

    #[test]
    fn solves_rosenbrock() {
        let cfg = LbfgsConfig { gtol: 1e-9, ..Default::default() };
        let out = lbfgs(rosenbrock, vec![-1.2, 1.0], &cfg);
        assert!(out.converged, "{out:?}");
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ill_conditioned_quadratic() {
        let scales: Vec<f64> = (0..50).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let f = |x: &[f64]| {
            let v = x.iter().zip(&scales).map(|(xi, s)| 0.5 * s * xi * xi).sum();
            (v, x.iter().zip(&scales).map(|(xi, s)| s * xi).collect())
        };
        let out = lbfgs(f, vec![1.0; 50], &LbfgsConfig::default());
        assert!(out.converged);
        assert!(out.x.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn nonfinite_start_does_not_iterate() {
        let out = lbfgs(|_| (f64::INFINITY, vec![0.0]), vec![0.0], &LbfgsConfig::default());
        assert_eq!(out.iterations, 0);
        assert!(!out.converged);
    }
}
