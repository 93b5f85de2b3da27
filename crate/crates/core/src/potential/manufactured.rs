use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::DVector;

use super::{Potential, PotentialKind};
use crate::error::{Error, Result};
use crate::fourier::FourierSeries;
use crate::nfunction::{ConvexFunction, NFunction};
use crate::orlicz::Trajectory;
use crate::vecops;

/// Largest admissible share of spectral energy in the upper half band.
const BAND_LIMIT_TOL: f64 = 1e-12;
const SUP_GRID: usize = 4096;
const CACHE_CAPACITY: usize = 1 << 16;

/// `F(t, x) = |x - u*(t)|^2 / 2 + g(t) . x` with `g = d/dt grad Phi(u*'(t))`,
/// so that `u*` solves the Euler-Lagrange equation exactly.
pub struct Manufactured {
    phi: NFunction,
    series: Vec<FourierSeries>,
    velocity: Vec<FourierSeries>,
    acceleration: Vec<FourierSeries>,
    samples: Trajectory,
    u_sup: f64,
    g_sup: f64,
    cache: RwLock<HashMap<u64, (Vec<f64>, Vec<f64>)>>,
}

impl Manufactured {
    pub fn phi(&self) -> &NFunction {
        &self.phi
    }

    /// The samples `u*` was built from.
    pub fn samples(&self) -> &Trajectory {
        &self.samples
    }

    pub fn ustar(&self, t: f64) -> Vec<f64> {
        self.series.iter().map(|s| s.eval(t)).collect()
    }

    pub fn velocity(&self, t: f64) -> Vec<f64> {
        self.velocity.iter().map(|s| s.eval(t)).collect()
    }

    fn compute_forcing(&self, t: f64) -> Vec<f64> {
        let v = self.velocity(t);
        let a: Vec<f64> = self.acceleration.iter().map(|s| s.eval(t)).collect();
        let h = self.phi.hessian(&v);
        (h * DVector::from_vec(a)).as_slice().to_vec()
    }

    /// `(u*(t), g(t))`, memoized per time stamp.
    fn at(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let key = t.to_bits();
        if let Some(hit) = self.cache.read().unwrap().get(&key) {
            return hit.clone();
        }
        let pair = (self.ustar(t), self.compute_forcing(t));
        let mut w = self.cache.write().unwrap();
        if w.len() < CACHE_CAPACITY {
            w.insert(key, pair.clone());
        }
        pair
    }

    /// `g(t) = H_Phi(u*'(t)) u*''(t)`.
    pub fn forcing(&self, t: f64) -> Vec<f64> {
        self.at(t).1
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        let (u, g) = self.at(t);
        let diff = vecops::sub(x, &u);
        0.5 * vecops::dot(&diff, &diff) + vecops::dot(&g, x)
    }

    pub fn gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let (u, g) = self.at(t);
        x.iter().zip(&u).zip(&g).map(|((xi, ui), gi)| xi - ui + gi).collect()
    }

    /// Upper bounds for `sup |u*|` and `sup |g|`.
    pub fn sup_bounds(&self) -> (f64, f64) {
        (self.u_sup, self.g_sup)
    }
}

/// Potential whose Euler-Lagrange equation is solved exactly by the
/// trigonometric interpolant of `ustar`.
pub fn make_manufactured(phi: &NFunction, ustar: &Trajectory) -> Result<Potential> {
    if phi.dim() != ustar.dim() {
        return Err(Error::DimensionMismatch { expected: phi.dim(), found: ustar.dim() });
    }
    if ustar.is_staggered() {
        return Err(Error::InvalidParameter("manufactured solution must live on nodes".into()));
    }
    let period = ustar.period();
    let n = ustar.len();
    let d = ustar.dim();
    let mut series = Vec::with_capacity(d);
    for k in 0..d {
        let comp: Vec<f64> = (0..n).map(|i| ustar.node(i)[k]).collect();
        let s = FourierSeries::from_samples(&comp, period);
        let frac = s.high_band_fraction();
        if frac > BAND_LIMIT_TOL {
            return Err(Error::DifferentiationUnstable(format!(
                "component {k} is not band-limited: {frac:.3e} of its energy sits in the upper half band"
            )));
        }
        series.push(s);
    }
    let mut m = Manufactured {
        phi: phi.clone(),
        velocity: series.iter().map(|s| s.derivative(1)).collect(),
        acceleration: series.iter().map(|s| s.derivative(2)).collect(),
        series,
        samples: ustar.clone(),
        u_sup: 0.0,
        g_sup: 0.0,
        cache: RwLock::new(HashMap::new()),
    };
    let (mut u_sup, mut g_sup) = (0.0f64, 0.0f64);
    let (mut v_sup, mut slowest) = (0.0f64, (f64::INFINITY, 0usize));
    let dt = period / SUP_GRID as f64;
    for i in 0..SUP_GRID {
        let t = i as f64 * dt;
        let g = m.compute_forcing(t);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::DifferentiationUnstable(format!("d/dt grad Phi(u*') is not finite at t = {t}")));
        }
        u_sup = u_sup.max(vecops::norm(&m.ustar(t)));
        g_sup = g_sup.max(vecops::norm(&g));
        let speed = vecops::norm(&m.velocity(t));
        v_sup = v_sup.max(speed);
        if speed < slowest.0 {
            slowest = (speed, i);
        }
    }
    // Where u*' vanishes the chain rule needs the Hessian of Phi at the origin.
    let t0 = slowest.1 as f64 * dt;
    let (_, min_speed) = golden_min(|t| vecops::norm(&m.velocity(t)), t0 - dt, t0 + dt, 100);
    if min_speed <= 1e-9 * v_sup.max(1.0) && phi.hessian(&vec![0.0; d]).iter().any(|h| !h.is_finite()) {
        return Err(Error::DifferentiationUnstable(
            "u*' vanishes where the Hessian of Phi is singular".into(),
        ));
    }
    m.u_sup = 1.01 * u_sup;
    m.g_sup = 1.01 * g_sup;
    Potential::with_kind(d, period, PotentialKind::Manufactured(Arc::new(m)))
}

fn golden_min<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..iters {
        let a = hi - r * (hi - lo);
        let b = lo + r * (hi - lo);
        if g(a) <= g(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, g(t))
}
