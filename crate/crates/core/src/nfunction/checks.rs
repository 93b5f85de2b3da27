use serde::{Deserialize, Serialize};

use super::ConvexFunction;
use crate::error::{Error, Result};
use crate::sampling::{self, log_grid};
use crate::vecops;

/// Outcome of one sampled property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub passed: bool,
    /// Largest observed violation (0 when passed).
    pub violation: f64,
    pub witness: Option<Vec<f64>>,
}

impl PropertyCheck {
    fn pass() -> Self {
        PropertyCheck { passed: true, violation: 0.0, witness: None }
    }

    fn record(&mut self, violation: f64, at: &[f64]) {
        if violation > self.violation || violation.is_nan() {
            self.passed = false;
            self.violation = if violation.is_nan() { f64::INFINITY } else { violation };
            self.witness = Some(at.to_vec());
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NInfinityConfig {
    /// Random points for positivity and evenness, and random segments for
    /// midpoint convexity.
    pub samples: usize,
    /// Radius of the ball the samples are drawn from.
    pub sample_radius: f64,
    /// Increasing radii for the superlinearity trend.
    pub radii: Vec<f64>,
    pub extra_rays: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for NInfinityConfig {
    fn default() -> Self {
        NInfinityConfig {
            samples: 1000,
            sample_radius: 4.0,
            radii: (-1..=5).map(|k| 2f64.powi(k)).collect(),
            extra_rays: 8,
            tol: 1e-9,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NInfinityReport {
    pub zero_at_zero: PropertyCheck,
    pub positivity: PropertyCheck,
    pub evenness: PropertyCheck,
    pub convexity: PropertyCheck,
    pub superlinearity: PropertyCheck,
}

impl NInfinityReport {
    pub fn passed(&self) -> bool {
        self.zero_at_zero.passed
            && self.positivity.passed
            && self.evenness.passed
            && self.convexity.passed
            && self.superlinearity.passed
    }
}

/// Sampled verification of the N-infinity axioms. A failing report is a
/// regular return value; failures carry a witness point.
pub fn check_n_infinity<F: ConvexFunction + ?Sized>(
    phi: &F,
    cfg: &NInfinityConfig,
) -> NInfinityReport {
    let d = phi.dim();
    let mut rng = sampling::rng(cfg.seed);
    let origin = vec![0.0; d];

    let mut zero_at_zero = PropertyCheck::pass();
    let f0 = phi.value(&origin);
    if !(f0.abs() <= cfg.tol) {
        zero_at_zero.record(f0.abs(), &origin);
    }

    let mut positivity = PropertyCheck::pass();
    let mut evenness = PropertyCheck::pass();
    let mut convexity = PropertyCheck::pass();
    for _ in 0..cfg.samples {
        let y = sampling::random_point(&mut rng, d, cfg.sample_radius);
        let fy = phi.value(&y);
        if vecops::norm(&y) > 1e-100 && !(fy > 0.0) {
            positivity.record(-fy + f64::MIN_POSITIVE, &y);
        }
        let fm = phi.value(&vecops::scale(&y, -1.0));
        let dev = (fm - fy).abs();
        if dev > cfg.tol * (1.0 + fy.abs()) {
            evenness.record(dev, &y);
        }

        let x = sampling::random_point(&mut rng, d, cfg.sample_radius);
        let fx = phi.value(&x);
        let mid = vecops::scale(&vecops::add(&x, &y), 0.5);
        let avg = 0.5 * (fx + fy);
        let excess = phi.value(&mid) - avg;
        if excess > cfg.tol * (1.0 + avg.abs()) {
            convexity.record(excess, &mid);
        }
    }

    let mut superlinearity = PropertyCheck::pass();
    for e in sampling::ray_set(d, cfg.extra_rays, cfg.seed ^ 0xa5a5) {
        let mut prev = f64::NEG_INFINITY;
        for &r in &cfg.radii {
            let x = vecops::scale(&e, r);
            let ratio = phi.value(&x) / r;
            if ratio.is_infinite() && ratio > 0.0 {
                break;
            }
            if !(ratio > prev * (1.0 + 1e-12)) {
                let drop = if prev.is_finite() { prev - ratio } else { f64::INFINITY };
                superlinearity.record(drop.max(f64::MIN_POSITIVE), &x);
                break;
            }
            prev = ratio;
        }
    }

    NInfinityReport { zero_at_zero, positivity, evenness, convexity, superlinearity }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Delta2Config {
    pub radii: Vec<f64>,
    pub extra_rays: usize,
    /// Multiplier applied to the sampled supremum for the reported safe constant.
    pub safety: f64,
    /// Growth over the last two decades at or above which the ratio is
    /// declared divergent.
    pub fail_factor: f64,
    /// Largest growth over the last decade still considered bounded.
    pub flat_factor: f64,
    pub seed: u64,
}

impl Default for Delta2Config {
    fn default() -> Self {
        Delta2Config {
            radii: log_grid(1e-2, 1e3, 10),
            extra_rays: 6,
            safety: 1.1,
            fail_factor: 10.0,
            flat_factor: 1.5,
            seed: 0xd2,
        }
    }
}

/// Power-type bound `Phi(x) <= c |x|^p + 1` implied by Delta_2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBound {
    pub p: f64,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Delta2Verdict {
    Holds {
        /// Supremum of `(Phi(2x) - 1) / Phi(x)` over the samples.
        constant: f64,
        /// `safety * constant`.
        safe_constant: f64,
        power_bound: PowerBound,
    },
    Fails {
        ray: Vec<f64>,
        radius: f64,
        ratio: f64,
    },
}

impl Delta2Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Delta2Verdict::Holds { .. })
    }
}

/// Growth classification of a function and (when computed) of its conjugate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    pub delta2: Delta2Verdict,
    /// Delta_2 of the conjugate, i.e. nabla_2 of the function itself.
    pub nabla2: Option<Delta2Verdict>,
}

/// Sampled test of `Phi(2x) <= C Phi(x) + 1`.
pub fn check_delta2<F: ConvexFunction + ?Sized>(phi: &F, cfg: &Delta2Config) -> Result<Delta2Verdict> {
    let radii = &cfg.radii;
    if radii.len() < 3 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("Delta_2 radii must be increasing".into()));
    }
    let rays = sampling::ray_set(phi.dim(), cfg.extra_rays, cfg.seed);
    let mut maxima = Vec::with_capacity(radii.len());
    let mut witnesses = Vec::with_capacity(radii.len());
    let mut samples = Vec::new();
    for &r in radii {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (j, e) in rays.iter().enumerate() {
            let x = vecops::scale(e, r);
            let fx = phi.value(&x);
            if !(fx > 0.0) || fx.is_infinite() {
                continue;
            }
            let f2 = phi.value(&vecops::scale(&x, 2.0));
            let ratio = if f2.is_finite() { (f2 - 1.0) / fx } else { f64::INFINITY };
            samples.push((r, fx));
            if ratio > best.0 {
                best = (ratio, j);
            }
        }
        maxima.push(best.0);
        witnesses.push(best.1);
    }

    let last = radii.len() - 1;
    let r_last = radii[last];
    let nearest = |target: f64| {
        (0..radii.len())
            .min_by(|&a, &b| {
                (radii[a].ln() - target.ln()).abs().total_cmp(&(radii[b].ln() - target.ln()).abs())
            })
            .unwrap()
    };
    let i2 = nearest(r_last / 100.0);
    let i1 = nearest(r_last / 10.0);
    let fails = |k: usize| Delta2Verdict::Fails {
        ray: rays[witnesses[k]].clone(),
        radius: radii[k],
        ratio: maxima[k],
    };

    if let Some(k) = (i2..=last).find(|&k| maxima[k] == f64::INFINITY) {
        return Ok(fails(k));
    }
    let m_last = maxima[last];
    let growth2 = if maxima[i2] > 0.0 { m_last / maxima[i2] } else { f64::INFINITY };
    let monotone = maxima[i2..=last].windows(2).all(|w| w[1] >= w[0]);
    if growth2 >= cfg.fail_factor && monotone && m_last > 0.0 {
        return Ok(fails(last));
    }
    let flat = if maxima[i1] > 0.0 { m_last / maxima[i1] } else { f64::INFINITY };
    if m_last <= 0.0 || (flat <= cfg.flat_factor && growth2 < cfg.fail_factor) {
        let constant = maxima
            .iter()
            .cloned()
            .filter(|m| m.is_finite())
            .fold(f64::MIN_POSITIVE, f64::max);
        let safe_constant = cfg.safety * constant;
        let p = safe_constant.log2().max(1.0 + 1e-9);
        let c = samples
            .iter()
            .filter(|(_, fx)| *fx > 1.0)
            .map(|(r, fx)| (fx - 1.0) / r.powf(p))
            .fold(0.0, f64::max);
        return Ok(Delta2Verdict::Holds { constant, safe_constant, power_bound: PowerBound { p, c } });
    }
    Err(Error::InconclusiveGrowth { tail_factor: growth2 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    /// `Phi1 <= C + Phi2(k x)` for some `k, C`.
    Strictif,
    /// `Phi1 <= C(k) + Phi2(k x)` for every `k > 0`.
    Llcurly,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderConfig {
    pub k_grid: Vec<f64>,
    pub radii: Vec<f64>,
    pub extra_rays: usize,
    pub seed: u64,
}

impl Default for OrderConfig {
    fn default() -> Self {
        OrderConfig {
            k_grid: (-10..=10).map(|e| 2f64.powi(e)).collect(),
            radii: log_grid(1e-3, 1e8, 20),
            extra_rays: 4,
            seed: 0x0d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderFailure {
    pub k: f64,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderVerdict {
    pub mode: OrderMode,
    pub holds: bool,
    /// Every `(k, C(k))` found bounded, in grid order.
    pub witnesses: Vec<(f64, f64)>,
    /// For `Strictif`, the pair with the smallest `C`.
    pub chosen: Option<(f64, f64)>,
    pub failure: Option<OrderFailure>,
}

enum RayDiff {
    Bounded { c: f64 },
    Unbounded { x: Vec<f64> },
}

const RAY_CAP: f64 = 1e150;

fn ray_sup<F1, F2>(phi1: &F1, phi2: &F2, e: &[f64], k: f64, radii: &[f64]) -> RayDiff
where
    F1: ConvexFunction + ?Sized,
    F2: ConvexFunction + ?Sized,
{
    let diff = |r: f64| {
        let x = vecops::scale(e, r);
        let a = phi1.value(&x);
        let b = phi2.value(&vecops::scale(&x, k));
        match (a.is_finite(), b.is_finite()) {
            (true, true) => Some(a - b),
            (true, false) => Some(f64::NEG_INFINITY),
            (false, true) => Some(f64::INFINITY),
            (false, false) => None,
        }
    };
    let mut vals = Vec::with_capacity(radii.len());
    for &r in radii {
        match diff(r) {
            Some(v) => vals.push(v),
            None => break,
        }
    }
    let Some(&last) = vals.last() else {
        return RayDiff::Bounded { c: 0.0 };
    };
    let (jmax, vmax) = vals
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, v)| if v > acc.1 { (j, v) } else { acc });
    let earlier = vals[..vals.len() - 1].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if last == f64::INFINITY {
        return RayDiff::Unbounded { x: vecops::scale(e, radii[vals.len() - 1]) };
    }
    if vals.len() > 1 && last > earlier && last > 0.0 {
        // Still rising at the edge of the grid: follow the ray outwards until
        // the difference turns or the radius leaves any sensible range.
        let mut r = radii[vals.len() - 1];
        let mut prev = last;
        loop {
            let next = r * 10.0;
            if next > RAY_CAP {
                return RayDiff::Unbounded { x: vecops::scale(e, r) };
            }
            match diff(next) {
                Some(v) if v == f64::INFINITY => return RayDiff::Unbounded { x: vecops::scale(e, next) },
                Some(v) if v <= prev => {
                    let refined = golden_max(|s| diff(s).unwrap_or(f64::NEG_INFINITY), r / 10.0, next, 80);
                    return RayDiff::Bounded { c: prev.max(refined) };
                }
                Some(v) => {
                    prev = v;
                    r = next;
                }
                None => return RayDiff::Unbounded { x: vecops::scale(e, r) },
            }
        }
    }
    if vmax <= 0.0 {
        return RayDiff::Bounded { c: 0.0 };
    }
    // Golden-section refinement of the ray maximum between the neighbours of
    // the best grid radius.
    let lo = radii[jmax.saturating_sub(1)];
    let hi = radii[(jmax + 1).min(vals.len() - 1)];
    let g = |r: f64| diff(r).unwrap_or(f64::NEG_INFINITY);
    let refined = golden_max(g, lo, hi, 80);
    RayDiff::Bounded { c: vmax.max(refined) }
}

/// Maximum of a unimodal function on `[lo, hi]` by golden-section search.
pub(crate) fn golden_max<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let (mut ga, mut gb) = (g(a), g(b));
    for _ in 0..iters {
        if ga < gb {
            lo = a;
            a = b;
            ga = gb;
            b = lo + phi * (hi - lo);
            gb = g(b);
        } else {
            hi = b;
            b = a;
            gb = ga;
            a = hi - phi * (hi - lo);
            ga = g(a);
        }
    }
    ga.max(gb)
}

/// Sampled test of the orderings `Phi1 < Phi2` (`Strictif`) and
/// `Phi1 << Phi2` (`Llcurly`) over a logarithmic `k` grid.
pub fn check_order<F1, F2>(phi1: &F1, phi2: &F2, mode: OrderMode, cfg: &OrderConfig) -> Result<OrderVerdict>
where
    F1: ConvexFunction + ?Sized,
    F2: ConvexFunction + ?Sized,
{
    if phi1.dim() != phi2.dim() {
        return Err(Error::DimensionMismatch { expected: phi1.dim(), found: phi2.dim() });
    }
    let rays = sampling::ray_set(phi1.dim(), cfg.extra_rays, cfg.seed);
    let mut witnesses = Vec::new();
    let mut failure = None;
    for &k in &cfg.k_grid {
        let mut c = 0.0f64;
        let mut unbounded = None;
        for e in &rays {
            match ray_sup(phi1, phi2, e, k, &cfg.radii) {
                RayDiff::Bounded { c: ce } => c = c.max(ce),
                RayDiff::Unbounded { x } => {
                    unbounded = Some(x);
                    break;
                }
            }
        }
        match unbounded {
            None => witnesses.push((k, c)),
            Some(x) => {
                if failure.is_none() {
                    failure = Some(OrderFailure { k, x });
                }
                if mode == OrderMode::Llcurly {
                    break;
                }
            }
        }
    }
    let (holds, chosen) = match mode {
        OrderMode::Strictif => {
            let chosen = witnesses
                .iter()
                .cloned()
                .fold(None, |best: Option<(f64, f64)>, w| match best {
                    Some(b) if b.1 <= w.1 => Some(b),
                    _ => Some(w),
                });
            (chosen.is_some(), chosen)
        }
        OrderMode::Llcurly => (failure.is_none(), None),
    };
    if holds && mode == OrderMode::Strictif {
        failure = None;
    }
    Ok(OrderVerdict { mode, holds, witnesses, chosen, failure })
}
