use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{HData, Potential, PotentialKind, SData, SpaceFn, TimeFn};
use crate::conjugate::conjugate;
use crate::error::{Error, Result};
use crate::nfunction::{check_order, ConvexFunction, NFunction, OrderConfig, OrderMode};
use crate::sampling;
use crate::vecops;

const HOLD_TOL: f64 = 1e-9;
const RECIPE_MAX_DOUBLINGS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    A,
    B,
    H,
    S,
    Coercivity,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<f64>>,
}

/// `r -> int F(t, r e) dt / Phi0(2 r e)` along one direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayCurve {
    pub direction: Vec<f64>,
    pub points: Vec<(f64, f64)>,
    pub growth: f64,
}

/// Outcome of one hypothesis check. `statistic` is the largest ratio
/// `lhs / rhs` for (A), the smallest last-decade growth factor for the
/// coercivity condition, and the largest `lhs - rhs` otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub condition: Condition,
    pub holds: bool,
    pub statistic: f64,
    pub witness: Witness,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<RayCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionVerdict {
    fn new(condition: Condition) -> ConditionVerdict {
        ConditionVerdict {
            condition,
            holds: false,
            statistic: f64::NEG_INFINITY,
            witness: Witness::default(),
            params: BTreeMap::new(),
            curves: Vec::new(),
            note: None,
        }
    }

    /// A failed verdict for a check whose precondition could not be met.
    pub fn failed(condition: Condition, note: String) -> ConditionVerdict {
        ConditionVerdict { note: Some(note), statistic: f64::NAN, ..ConditionVerdict::new(condition) }
    }

    fn record(&mut self, stat: f64, t: Option<f64>, x: Option<&[f64]>, y: Option<&[f64]>) {
        if stat > self.statistic || stat.is_nan() {
            self.statistic = stat;
            self.witness = Witness { t, x: x.map(<[f64]>::to_vec), y: y.map(<[f64]>::to_vec) };
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub verdicts: Vec<ConditionVerdict>,
}

impl HypothesisReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    pub fn get(&self, c: Condition) -> Option<&ConditionVerdict> {
        self.verdicts.iter().find(|v| v.condition == c)
    }
}

/// Sample points for the for-all statements: times on a uniform grid and
/// points on a radial x angular grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl SampleGrid {
    pub const DEFAULT_RADIUS: f64 = 10.0;

    pub fn new(dim: usize, period: f64, n_times: usize, radius: f64, n_radii: usize) -> SampleGrid {
        let times = (0..n_times).map(|i| i as f64 * period / n_times as f64).collect();
        let dirs = sampling::sphere_directions(dim, 16 * dim, 0x9e1d);
        let mut points = vec![vec![0.0; dim]];
        for i in 1..=n_radii {
            let r = radius * i as f64 / n_radii as f64;
            points.extend(dirs.iter().map(|e| vecops::scale(e, r)));
        }
        SampleGrid { times, points }
    }

    pub fn default_for(dim: usize, period: f64) -> SampleGrid {
        Self::new(dim, period, 32, Self::DEFAULT_RADIUS, 20)
    }
}

fn check_grid_dim(f: &Potential, grid: &SampleGrid) -> Result<()> {
    if let Some(p) = grid.points.iter().find(|p| p.len() != f.dim()) {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: p.len() });
    }
    Ok(())
}

/// `|F| + |grad F| <= a(x) b(t)`.
pub fn check_condition_a(f: &Potential, grid: &SampleGrid) -> Result<ConditionVerdict> {
    let a = f.hypotheses.a.as_ref().ok_or(Error::MissingHypothesisData("a(x) for condition (A)"))?;
    let b = f.hypotheses.b.as_ref().ok_or(Error::MissingHypothesisData("b(t) for condition (A)"))?;
    check_condition_a_with(f, a, b, grid)
}

pub(crate) fn check_condition_a_with(f: &Potential, a: &SpaceFn, b: &TimeFn, grid: &SampleGrid) -> Result<ConditionVerdict> {
    check_grid_dim(f, grid)?;
    let mut v = ConditionVerdict::new(Condition::A);
    for &t in &grid.times {
        let bt = b(t);
        for x in &grid.points {
            let lhs = f.value(t, x).abs() + vecops::norm(&f.gradient(t, x));
            let rhs = a(x) * bt;
            let ratio = if lhs == 0.0 {
                0.0
            } else if rhs <= 0.0 {
                f64::INFINITY
            } else {
                lhs / rhs
            };
            v.record(ratio, Some(t), Some(x), None);
        }
    }
    v.holds = v.statistic <= 1.0 + HOLD_TOL;
    Ok(v)
}

fn sublinearity_sweep(
    f: &Potential,
    phi: &NFunction,
    phi0: &dyn ConvexFunction,
    d: &dyn Fn(f64) -> f64,
    grid: &SampleGrid,
) -> Result<ConditionVerdict> {
    let phistar = conjugate(phi);
    let mut v = ConditionVerdict::new(Condition::B);
    for &t in &grid.times {
        let dt = d(t);
        if !(dt >= 1.0) {
            return Err(Error::InvalidParameter(format!("d(t) must be >= 1, got {dt} at t = {t}")));
        }
        for x in &grid.points {
            let z = vecops::scale(&f.gradient(t, x), 1.0 / dt);
            let lhs = phistar.try_value(&z)?;
            v.record(lhs - phi0.value(x) - 1.0, Some(t), Some(x), None);
        }
    }
    v.holds = v.statistic <= HOLD_TOL;
    Ok(v)
}

fn require_llcurly(phi0: &dyn ConvexFunction, phi: &NFunction) -> Result<()> {
    let order = check_order(phi0, phi, OrderMode::Llcurly, &OrderConfig::default())?;
    if !order.holds {
        let k = order.failure.map_or(f64::NAN, |f| f.k);
        return Err(Error::OrderingViolation { k });
    }
    Ok(())
}

/// `Phi*(grad F / d(t)) <= Phi0(x) + 1`, after confirming `Phi0 << Phi`.
pub fn check_condition_b(
    f: &Potential,
    phi: &NFunction,
    phi0: &NFunction,
    d: &TimeFn,
    grid: &SampleGrid,
) -> Result<ConditionVerdict> {
    if phi.dim() != f.dim() || phi0.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: phi.dim().min(phi0.dim()) });
    }
    check_grid_dim(f, grid)?;
    require_llcurly(phi0, phi)?;
    sublinearity_sweep(f, phi, phi0, d.as_ref(), grid)
}

/// Constants found by the polynomial recipe: `d(t) = C max{1, |P(t)|}` and
/// `Phi0(x) = |x|^q`.
#[derive(Clone)]
pub struct BRecipe {
    pub c: f64,
    pub q: f64,
    pub phi0: NFunction,
    pub d: TimeFn,
}

impl std::fmt::Debug for BRecipe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BRecipe").field("c", &self.c).field("q", &self.q).field("phi0", &self.phi0).finish()
    }
}

/// `|x|^q` as a radial function on `R^d`.
pub(crate) fn radial_power(dim: usize, q: f64) -> NFunction {
    NFunction::custom_with_gradient(
        dim,
        move |x| vecops::norm(x).powf(q),
        move |x| {
            let r = vecops::norm(x);
            if r == 0.0 {
                vec![0.0; x.len()]
            } else {
                vecops::scale(x, q * r.powf(q - 2.0))
            }
        },
        true,
    )
}

/// Exponent of the recipe's `Phi0`: strictly between `deg Q - 1`, which
/// bounds the growth of `grad F`, and `deg Q`, which keeps the coercivity
/// ratio divergent.
pub fn recipe_exponent(deg_q: u32) -> f64 {
    (deg_q as f64 - 0.5).max(0.5)
}

/// Condition (B) for separable `P(t) Q(x)` with `d(t) = C max{1, |P(t)|}`
/// and `Phi0 = |x|^q`, doubling `C` from 1 until the sampled display holds.
pub fn check_condition_b_recipe(
    f: &Potential,
    phi: &NFunction,
    grid: &SampleGrid,
) -> Result<(ConditionVerdict, BRecipe)> {
    let PotentialKind::Separable { p, q } = f.kind() else {
        return Err(Error::MissingHypothesisData("d(t) and Phi0: the recipe needs a separable P(t) Q(x) potential"));
    };
    if phi.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: phi.dim() });
    }
    check_grid_dim(f, grid)?;
    let qexp = recipe_exponent(q.degree());
    let phi0 = radial_power(f.dim(), qexp);
    require_llcurly(&phi0, phi)?;
    let period = f.period();
    let mut c = 1.0;
    let mut last = None;
    for _ in 0..=RECIPE_MAX_DOUBLINGS {
        let pc = p.clone();
        let d = move |t: f64| c * pc.eval(t, period).abs().max(1.0);
        let mut v = sublinearity_sweep(f, phi, &phi0, &d, grid)?;
        v.params.insert("c".into(), c);
        v.params.insert("q".into(), qexp);
        if v.holds {
            let pc = p.clone();
            let recipe = BRecipe {
                c,
                q: qexp,
                phi0: phi0.clone(),
                d: Arc::new(move |t| c * pc.eval(t, period).abs().max(1.0)),
            };
            return Ok((v, recipe));
        }
        last = Some(v);
        c *= 2.0;
    }
    let v = last.expect("at least one sweep");
    let pc = p.clone();
    let c = v.params["c"];
    let recipe = BRecipe { c, q: qexp, phi0, d: Arc::new(move |t| c * pc.eval(t, period).abs().max(1.0)) };
    Ok((v, recipe))
}

/// Condition (H): exponent windows, then the two gradient bounds on samples.
pub fn check_condition_h(f: &Potential, grid: &SampleGrid) -> Result<ConditionVerdict> {
    let h = f.hypotheses.h.as_ref().ok_or(Error::MissingHypothesisData("exponents and f, g, h for condition (H)"))?;
    check_condition_h_with(f, h, grid)
}

pub(crate) fn check_condition_h_with(f: &Potential, h: &HData, grid: &SampleGrid) -> Result<ConditionVerdict> {
    check_grid_dim(f, grid)?;
    if h.d1 == 0 || h.d1 >= f.dim() {
        return Err(Error::InvalidParameter(format!(
            "split d1 = {} must lie in 1..{}",
            h.d1,
            f.dim()
        )));
    }
    for &p in &h.p {
        if !(p > 1.0) {
            return Err(Error::InvalidParameter(format!("exponent p = {p} must exceed 1")));
        }
    }
    // p / p' = p - 1
    let ratio = |p: f64| p - 1.0;
    let p_dual = |p: f64| p / (p - 1.0);
    let windows = [
        ("alpha_1", h.alpha[0], ratio(h.p[0])),
        ("alpha_2", h.alpha[1], ratio(h.p[1])),
        ("beta_1", h.beta[0], h.p[1] / p_dual(h.p[0])),
        ("beta_2", h.beta[1], h.p[0] / p_dual(h.p[1])),
    ];
    for (name, value, hi) in windows {
        if !(value >= 0.0 && value < hi) {
            return Err(Error::ExponentOutOfWindow { name, value, lo: 0.0, hi });
        }
    }
    let mut v = ConditionVerdict::new(Condition::H);
    for &t in &grid.times {
        for x in &grid.points {
            let g = f.gradient(t, x);
            let (x1, x2) = x.split_at(h.d1);
            let (g1, g2) = g.split_at(h.d1);
            let (r1, r2) = (vecops::norm(x1), vecops::norm(x2));
            let b1 = h.f[0](t) * r1.powf(h.alpha[0]) + h.g[0](t) * r2.powf(h.beta[0]) + h.h[0](t);
            let b2 = h.f[1](t) * r2.powf(h.alpha[1]) + h.g[1](t) * r1.powf(h.beta[1]) + h.h[1](t);
            v.record(vecops::norm(g1) - b1, Some(t), Some(x), None);
            v.record(vecops::norm(g2) - b2, Some(t), Some(x), None);
        }
    }
    v.holds = v.statistic <= HOLD_TOL;
    Ok(v)
}

/// Structure condition (S) for `L = Phi(y) + F(t, x)` on a `(t, x, y)` grid,
/// together with the bound `Phi*(grad Phi(y)) <= Lambda / (1 - Lambda) Phi(y / Lambda)`.
pub fn check_condition_s(phi: &NFunction, f: &Potential, grid: &SampleGrid) -> Result<ConditionVerdict> {
    let s = f.hypotheses.s.as_ref().ok_or(Error::MissingHypothesisData("a, b, Lambda, lambda for condition (S)"))?;
    check_condition_s_with(phi, f, s, grid)
}

pub(crate) fn check_condition_s_with(
    phi: &NFunction,
    f: &Potential,
    s: &SData,
    grid: &SampleGrid,
) -> Result<ConditionVerdict> {
    let big = s.big_lambda;
    if !(big > 0.0 && big < 1.0) {
        return Err(Error::InvalidParameter(format!("Lambda = {big} must lie in (0, 1)")));
    }
    if !(s.small_lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda = {} must be positive", s.small_lambda)));
    }
    if phi.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: phi.dim() });
    }
    check_grid_dim(f, grid)?;
    let phistar = conjugate(phi);
    let ys = &grid.points;
    let mut remark = f64::NEG_INFINITY;
    let mut per_y = Vec::with_capacity(ys.len());
    for y in ys {
        let grad = phi.gradient(y);
        let star = phistar.try_value(&vecops::scale(&grad, 1.0 / s.small_lambda))?;
        let phi_y = phi.value(y);
        let phi_scaled = phi.value(&vecops::scale(y, 1.0 / big));
        let bound = big / (1.0 - big) * phi_scaled;
        let star_grad = phistar.try_value(&grad)?;
        remark = remark.max(star_grad - bound - HOLD_TOL * (1.0 + bound));
        per_y.push((phi_y, star, phi_scaled));
    }
    let mut v = ConditionVerdict::new(Condition::S);
    for &t in &grid.times {
        let bt = (s.b)(t);
        for x in &grid.points {
            let fx = f.value(t, x);
            let gx = vecops::norm(&f.gradient(t, x));
            let ax = (s.a)(x);
            for (y, &(phi_y, star, phi_scaled)) in ys.iter().zip(&per_y) {
                let lhs = (phi_y + fx).abs() + gx + star;
                let rhs = ax * (bt + phi_scaled);
                v.record(lhs - rhs - HOLD_TOL * (1.0 + rhs.abs()), Some(t), Some(x), Some(y));
            }
        }
    }
    v.params.insert("remark_violation".into(), remark.max(0.0));
    v.holds = v.statistic <= 0.0 && remark <= 0.0;
    Ok(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityConfig {
    pub radii: Vec<f64>,
    pub directions: Option<Vec<Vec<f64>>>,
    /// Minimal growth of the ratio over the last decade.
    pub factor: f64,
}

impl Default for CoercivityConfig {
    fn default() -> Self {
        CoercivityConfig { radii: sampling::log_grid(1.0, 1e4, 5), directions: None, factor: 2.0 }
    }
}

/// `int_0^T F(t, x) dt / Phi0(2x) -> +inf`, judged by the growth of the
/// ratio over the last decade of radii along every direction.
pub fn check_coercivity_f<P0: ConvexFunction + ?Sized>(
    f: &Potential,
    phi0: &P0,
    cfg: &CoercivityConfig,
) -> Result<ConditionVerdict> {
    let radii = &cfg.radii;
    if radii.len() < 2 || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radii must be positive and increasing".into()));
    }
    let r_last = *radii.last().unwrap();
    if r_last / radii[0] < 1e3 * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter("radius schedule must span at least three decades".into()));
    }
    if phi0.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: phi0.dim() });
    }
    let dirs = cfg.directions.clone().unwrap_or_else(|| sampling::ray_set(f.dim(), 4, 0xc0e));
    // Radius closest to r_last / 10 in log scale.
    let j = (0..radii.len() - 1)
        .min_by(|&a, &b| {
            let da = (radii[a] / (r_last / 10.0)).ln().abs();
            let db = (radii[b] / (r_last / 10.0)).ln().abs();
            da.total_cmp(&db)
        })
        .unwrap();
    let mut v = ConditionVerdict::new(Condition::Coercivity);
    v.statistic = f64::INFINITY;
    for e in dirs {
        if e.len() != f.dim() {
            return Err(Error::DimensionMismatch { expected: f.dim(), found: e.len() });
        }
        let points: Vec<(f64, f64)> = radii
            .iter()
            .map(|&r| {
                let x = vecops::scale(&e, r);
                (r, f.time_integral(&x) / phi0.value(&vecops::scale(&x, 2.0)))
            })
            .collect();
        let last = points.last().unwrap().1;
        let prev = points[j].1;
        let growth = if !(last > 0.0) || last.is_infinite() && prev.is_infinite() {
            f64::NEG_INFINITY
        } else if prev <= 0.0 {
            f64::INFINITY
        } else {
            last / prev
        };
        if growth < v.statistic {
            v.statistic = growth;
            v.witness = Witness { t: None, x: Some(vecops::scale(&e, r_last)), y: None };
        }
        v.curves.push(RayCurve { direction: e, points, growth });
    }
    v.params.insert("factor".into(), cfg.factor);
    v.holds = v.statistic >= cfg.factor;
    Ok(v)
}
