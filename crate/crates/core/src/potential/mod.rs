//! Potentials `F(t, x)` and validators for the hypotheses placed on them.

mod hypotheses;
mod manufactured;
mod poly;
mod spec;

pub use hypotheses::{
    check_coercivity_f, check_condition_a, check_condition_b, check_condition_b_recipe, check_condition_h,
    check_condition_s, BRecipe, Condition, ConditionVerdict, CoercivityConfig, HypothesisReport, RayCurve,
    SampleGrid, Witness,
};
pub use manufactured::{make_manufactured, Manufactured};
pub use poly::{Monomial, Polynomial, TimeSeries};
pub use spec::{
    run_hypotheses, ConditionASpec, ConditionBSpec, ConditionHSpec, ConditionSSpec, CoercivitySpec,
    HypothesesSpec, PotentialSpec, RadialPolySpec, TimeBoundSpec,
};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nfunction::NFunction;
use crate::vecops;

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ValueFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>;

/// Time quadrature points for `int_0^T F(t, x) dt` when no closed form exists.
const TIME_QUADRATURE_POINTS: usize = 256;

#[derive(Clone)]
pub enum PotentialKind {
    Zero,
    /// `P(t) Q(x)`.
    Separable { p: TimeSeries, q: Polynomial },
    /// `|x|^2 / 2 + f(t) . x`.
    QuadraticForcing { forcing: Vec<TimeSeries> },
    Manufactured(Arc<Manufactured>),
    Custom { value: ValueFn, gradient: Option<GradientFn> },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::Zero => write!(f, "Zero"),
            PotentialKind::Separable { p, q } => f.debug_struct("Separable").field("p", p).field("q", q).finish(),
            PotentialKind::QuadraticForcing { forcing } => {
                f.debug_struct("QuadraticForcing").field("forcing", forcing).finish()
            }
            PotentialKind::Manufactured(_) => write!(f, "Manufactured"),
            PotentialKind::Custom { gradient, .. } => {
                write!(f, "Custom(analytic gradient: {})", gradient.is_some())
            }
        }
    }
}

/// Data for condition (H) on `R^{d1} x R^{d2}`.
#[derive(Clone)]
pub struct HData {
    pub d1: usize,
    pub p: [f64; 2],
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub f: [TimeFn; 2],
    pub g: [TimeFn; 2],
    pub h: [TimeFn; 2],
}

/// Data for the structure condition (S).
#[derive(Clone)]
pub struct SData {
    pub a: SpaceFn,
    pub b: TimeFn,
    /// `Lambda` in `(0, 1)`.
    pub big_lambda: f64,
    /// `lambda > 0`.
    pub small_lambda: f64,
}

/// Optional functions and constants the hypothesis validators need.
#[derive(Clone, Default)]
pub struct HypothesisData {
    pub a: Option<SpaceFn>,
    pub b: Option<TimeFn>,
    pub d: Option<TimeFn>,
    pub phi0: Option<NFunction>,
    pub h: Option<HData>,
    pub s: Option<SData>,
}

impl fmt::Debug for HypothesisData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HypothesisData")
            .field("a", &self.a.is_some())
            .field("b", &self.b.is_some())
            .field("d", &self.d.is_some())
            .field("phi0", &self.phi0)
            .field("h", &self.h.is_some())
            .field("s", &self.s.is_some())
            .finish()
    }
}

/// A potential `F: [0, T] x R^d -> R`, differentiable in `x`.
#[derive(Clone, Debug)]
pub struct Potential {
    dim: usize,
    period: f64,
    kind: PotentialKind,
    pub hypotheses: HypothesisData,
}

fn check_period(period: f64) -> Result<()> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidParameter(format!("period must be positive, got {period}")));
    }
    Ok(())
}

impl Potential {
    pub fn zero(dim: usize, period: f64) -> Result<Potential> {
        Self::with_kind(dim, period, PotentialKind::Zero)
    }

    pub fn separable(p: TimeSeries, q: Polynomial, period: f64) -> Result<Potential> {
        p.validate()?;
        Self::with_kind(q.dim, period, PotentialKind::Separable { p, q })
    }

    pub fn quadratic_forcing(forcing: Vec<TimeSeries>, period: f64) -> Result<Potential> {
        for f in &forcing {
            f.validate()?;
        }
        Self::with_kind(forcing.len(), period, PotentialKind::QuadraticForcing { forcing })
    }

    pub fn custom<F>(dim: usize, period: f64, value: F) -> Result<Potential>
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::with_kind(dim, period, PotentialKind::Custom { value: Arc::new(value), gradient: None })
    }

    pub fn custom_with_gradient<F, G>(dim: usize, period: f64, value: F, gradient: G) -> Result<Potential>
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self::with_kind(
            dim,
            period,
            PotentialKind::Custom { value: Arc::new(value), gradient: Some(Arc::new(gradient)) },
        )
    }

    pub(crate) fn with_kind(dim: usize, period: f64, kind: PotentialKind) -> Result<Potential> {
        if dim == 0 {
            return Err(Error::InvalidParameter("potential dimension must be positive".into()));
        }
        check_period(period)?;
        Ok(Potential { dim, period, kind, hypotheses: HypothesisData::default() })
    }

    pub fn with_hypotheses(mut self, data: HypothesisData) -> Potential {
        self.hypotheses = data;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            PotentialKind::Zero => true,
            PotentialKind::Separable { p, q } => p.is_zero() || q.terms.iter().all(|m| m.coef == 0.0),
            _ => false,
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Separable { p, q } => p.eval(t, self.period) * q.eval(x),
            PotentialKind::QuadraticForcing { forcing } => {
                let mut v = 0.5 * vecops::dot(x, x);
                for (xi, f) in x.iter().zip(forcing) {
                    v += f.eval(t, self.period) * xi;
                }
                v
            }
            PotentialKind::Manufactured(m) => m.value(t, x),
            PotentialKind::Custom { value, .. } => value(t, x),
        }
    }

    /// `grad_x F(t, x)`; central differences for custom potentials without an
    /// analytic gradient.
    pub fn gradient(&self, t: f64, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            PotentialKind::Zero => vec![0.0; self.dim],
            PotentialKind::Separable { p, q } => vecops::scale(&q.gradient(x), p.eval(t, self.period)),
            PotentialKind::QuadraticForcing { forcing } => {
                x.iter().zip(forcing).map(|(xi, f)| xi + f.eval(t, self.period)).collect()
            }
            PotentialKind::Manufactured(m) => m.gradient(t, x),
            PotentialKind::Custom { gradient: Some(g), .. } => g(t, x),
            PotentialKind::Custom { value, gradient: None } => central_gradient(|y| value(t, y), x),
        }
    }

    /// `int_0^T F(t, x) dt`.
    pub fn time_integral(&self, x: &[f64]) -> f64 {
        let period = self.period;
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Separable { p, q } => period * p.mean(period) * q.eval(x),
            PotentialKind::QuadraticForcing { forcing } => {
                let lin: f64 = x.iter().zip(forcing).map(|(xi, f)| xi * f.mean(period)).sum();
                period * (0.5 * vecops::dot(x, x) + lin)
            }
            _ => {
                let m = TIME_QUADRATURE_POINTS;
                let h = period / m as f64;
                (0..m).map(|i| self.value(i as f64 * h, x)).sum::<f64>() * h
            }
        }
    }

    /// Bounds `(a, b)` with `|F| + |grad F| <= a(x) b(t)` derived from the
    /// closed form, when one is known.
    pub fn auto_bounds(&self) -> Option<(SpaceFn, TimeFn)> {
        let period = self.period;
        match &self.kind {
            PotentialKind::Zero => Some((Arc::new(|_: &[f64]| 1.0), Arc::new(|_| 0.0))),
            PotentialKind::Separable { p, q } => {
                let (p, q) = (p.clone(), q.clone());
                Some((
                    Arc::new(move |x: &[f64]| q.eval(x).abs() + vecops::norm(&q.gradient(x)) + 1.0),
                    Arc::new(move |t| p.eval(t, period).abs() + 1.0),
                ))
            }
            PotentialKind::QuadraticForcing { forcing } => {
                let forcing = forcing.clone();
                Some((
                    Arc::new(|x: &[f64]| {
                        let r = vecops::norm(x);
                        0.5 * r * r + r + 1.0
                    }),
                    Arc::new(move |t| {
                        let f: Vec<f64> = forcing.iter().map(|s| s.eval(t, period)).collect();
                        1.0 + vecops::norm(&f)
                    }),
                ))
            }
            PotentialKind::Manufactured(m) => {
                let (u, g) = m.sup_bounds();
                let c = 1.0f64.max(u + g + 1.0).max(0.5 * u * u + u + g);
                Some((
                    Arc::new(|x: &[f64]| {
                        let r = vecops::norm(x);
                        0.5 * r * r + r + 1.0
                    }),
                    Arc::new(move |_| c),
                ))
            }
            PotentialKind::Custom { .. } => None,
        }
    }
}

pub(crate) fn central_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64]) -> Vec<f64> {
    let scale = vecops::norm(x).max(1.0);
    let h = f64::EPSILON.cbrt() * scale;
    let mut y = x.to_vec();
    (0..x.len())
        .map(|k| {
            y[k] = x[k] + h;
            let fp = f(&y);
            y[k] = x[k] - h;
            let fm = f(&y);
            y[k] = x[k];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}
