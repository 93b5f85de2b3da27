use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::hypotheses::{
    check_condition_a_with, check_condition_h_with, check_condition_s_with, radial_power,
};
use super::{
    check_coercivity_f, check_condition_b, check_condition_b_recipe, make_manufactured, Condition, ConditionVerdict,
    CoercivityConfig, HData, HypothesisReport, Polynomial, Potential, SData, SampleGrid, SpaceFn, TimeFn, TimeSeries,
};
use crate::error::{Error, Result};
use crate::nfunction::{ConvexFunction, NFunction, NFunctionSpec};
use crate::orlicz::Trajectory;
use crate::vecops;

/// JSON description of a potential; the period comes from the enclosing
/// problem.
///
/// ```json
/// {"kind": "quadratic_forcing", "forcing": [{"sin": [-1.0]}]}
/// {"kind": "separable", "p": {"poly": [1.0], "cos": [1.0]},
///  "q": {"dim": 2, "terms": [{"coef": 1.0, "powers": [4, 0]}]}}
/// {"kind": "manufactured", "ustar": [{"sin": [0.5]}]}
/// {"kind": "zero", "dim": 1}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero { dim: usize },
    Separable { p: TimeSeries, q: Polynomial },
    QuadraticForcing { forcing: Vec<TimeSeries> },
    /// `u*` given per component as a trigonometric series; only the constant
    /// term of `poly` is allowed.
    Manufactured {
        ustar: Vec<TimeSeries>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
}

impl PotentialSpec {
    pub fn dim(&self) -> usize {
        match self {
            PotentialSpec::Zero { dim } => *dim,
            PotentialSpec::Separable { q, .. } => q.dim,
            PotentialSpec::QuadraticForcing { forcing } => forcing.len(),
            PotentialSpec::Manufactured { ustar, .. } => ustar.len(),
        }
    }

    /// Builds the potential; `phi` is needed by the manufactured kind only.
    pub fn build(&self, period: f64, phi: &NFunction) -> Result<Potential> {
        match self {
            PotentialSpec::Zero { dim } => Potential::zero(*dim, period),
            PotentialSpec::Separable { p, q } => {
                let q = Polynomial::new(q.dim, q.terms.clone())?;
                Potential::separable(p.clone(), q, period)
            }
            PotentialSpec::QuadraticForcing { forcing } => Potential::quadratic_forcing(forcing.clone(), period),
            PotentialSpec::Manufactured { ustar, samples } => {
                let ustar_traj = manufactured_samples(ustar, *samples, period)?;
                make_manufactured(phi, &ustar_traj)
            }
        }
    }
}

/// Samples a trigonometric `u*` densely enough to resolve every mode.
pub fn manufactured_samples(ustar: &[TimeSeries], samples: Option<usize>, period: f64) -> Result<Trajectory> {
    if ustar.is_empty() {
        return Err(Error::InvalidParameter("u* needs at least one component".into()));
    }
    for s in ustar {
        s.validate()?;
        if s.poly.iter().skip(1).any(|&c| c != 0.0) {
            return Err(Error::InvalidParameter("u* must be periodic: only a constant algebraic term".into()));
        }
    }
    let modes = ustar.iter().map(|s| s.cos.len().max(s.sin.len())).max().unwrap_or(0);
    let n = samples.unwrap_or((4 * (modes + 1)).max(32));
    if n < 2 * modes + 2 {
        return Err(Error::InvalidParameter(format!("{n} samples cannot resolve {modes} modes")));
    }
    Trajectory::from_fn(period, n, ustar.len(), |t, out| {
        for (o, s) in out.iter_mut().zip(ustar) {
            *o = s.eval(t, period);
        }
    })
}

/// `a(x) = sum_k coeffs[k] |x|^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialPolySpec {
    pub coeffs: Vec<f64>,
}

impl RadialPolySpec {
    pub fn build(&self) -> SpaceFn {
        let c = self.coeffs.clone();
        Arc::new(move |x: &[f64]| {
            let r = vecops::norm(x);
            c.iter().rev().fold(0.0, |acc, ck| acc * r + ck)
        })
    }
}

/// `b(t) = offset + scale |series(t)|` (or without the absolute value).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeBoundSpec {
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub series: TimeSeries,
    #[serde(default = "yes")]
    pub abs: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl TimeBoundSpec {
    pub fn constant(c: f64) -> TimeBoundSpec {
        TimeBoundSpec { offset: c, scale: 0.0, series: TimeSeries::default(), abs: true }
    }

    pub fn build(&self, period: f64) -> TimeFn {
        let s = self.clone();
        Arc::new(move |t| {
            let v = s.series.eval(t, period);
            s.offset + s.scale * if s.abs { v.abs() } else { v }
        })
    }
}

/// Omitted `a` / `b` are derived from the closed form of the potential.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionASpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<RadialPolySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<TimeBoundSpec>,
}

/// With neither `d` nor a `Phi0` given, the polynomial recipe searches both.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionBSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<TimeBoundSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<NFunctionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionHSpec {
    pub d1: usize,
    pub p: [f64; 2],
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub f: [TimeBoundSpec; 2],
    pub g: [TimeBoundSpec; 2],
    pub h: [TimeBoundSpec; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSSpec {
    pub a: RadialPolySpec,
    pub b: TimeBoundSpec,
    pub big_lambda: f64,
    pub small_lambda: f64,
}

/// `phi0_power` selects `|x|^q`; otherwise the (B) choice of `Phi0` is
/// reused, falling back to `|x|`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoercivitySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<NFunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

/// The hypotheses to validate; only the listed conditions are checked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HypothesesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_times: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_a: Option<ConditionASpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_b: Option<ConditionBSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_h: Option<ConditionHSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_s: Option<ConditionSSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coercivity: Option<CoercivitySpec>,
}

impl HypothesesSpec {
    pub fn is_empty(&self) -> bool {
        self.condition_a.is_none()
            && self.condition_b.is_none()
            && self.condition_h.is_none()
            && self.condition_s.is_none()
            && self.coercivity.is_none()
    }
}

fn precondition_failure(condition: Condition, e: Error) -> Result<ConditionVerdict> {
    match e {
        Error::OrderingViolation { .. }
        | Error::ExponentOutOfWindow { .. }
        | Error::MissingHypothesisData(_)
        | Error::MaximizerNotBracketed { .. } => Ok(ConditionVerdict::failed(condition, e.to_string())),
        other => Err(other),
    }
}

/// Runs every condition listed in `spec`. Unmet preconditions become failed
/// verdicts; other errors propagate.
pub fn run_hypotheses(spec: &HypothesesSpec, f: &Potential, phi: &NFunction) -> Result<HypothesisReport> {
    if phi.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: phi.dim() });
    }
    let period = f.period();
    let grid = SampleGrid::new(
        f.dim(),
        period,
        spec.grid_times.unwrap_or(32),
        spec.grid_radius.unwrap_or(SampleGrid::DEFAULT_RADIUS),
        20,
    );
    let mut report = HypothesisReport::default();

    if let Some(a_spec) = &spec.condition_a {
        let auto = f.auto_bounds();
        let a = a_spec.a.as_ref().map(RadialPolySpec::build).or_else(|| auto.as_ref().map(|p| p.0.clone()));
        let b = a_spec.b.as_ref().map(|b| b.build(period)).or_else(|| auto.as_ref().map(|p| p.1.clone()));
        let v = match (a, b) {
            (Some(a), Some(b)) => check_condition_a_with(f, &a, &b, &grid)?,
            _ => ConditionVerdict::failed(Condition::A, "no a(x), b(t) given or derivable".into()),
        };
        report.verdicts.push(v);
    }

    let mut b_phi0: Option<NFunction> = None;
    if let Some(b_spec) = &spec.condition_b {
        let v = match (&b_spec.d, &b_spec.phi0) {
            (None, None) => match check_condition_b_recipe(f, phi, &grid) {
                Ok((v, recipe)) => {
                    b_phi0 = Some(recipe.phi0);
                    Ok(v)
                }
                Err(e) => precondition_failure(Condition::B, e),
            },
            (Some(d), Some(p0)) => {
                let phi0 = p0.build()?;
                let d = d.build(period);
                b_phi0 = Some(phi0.clone());
                check_condition_b(f, phi, &phi0, &d, &grid).or_else(|e| precondition_failure(Condition::B, e))
            }
            _ => Ok(ConditionVerdict::failed(Condition::B, "give both d(t) and Phi0, or neither".into())),
        }?;
        report.verdicts.push(v);
    }

    if let Some(h) = &spec.condition_h {
        let data = HData {
            d1: h.d1,
            p: h.p,
            alpha: h.alpha,
            beta: h.beta,
            f: [h.f[0].build(period), h.f[1].build(period)],
            g: [h.g[0].build(period), h.g[1].build(period)],
            h: [h.h[0].build(period), h.h[1].build(period)],
        };
        let v = check_condition_h_with(f, &data, &grid).or_else(|e| precondition_failure(Condition::H, e))?;
        report.verdicts.push(v);
    }

    if let Some(s) = &spec.condition_s {
        let data = SData {
            a: s.a.build(),
            b: s.b.build(period),
            big_lambda: s.big_lambda,
            small_lambda: s.small_lambda,
        };
        let v = check_condition_s_with(phi, f, &data, &grid).or_else(|e| precondition_failure(Condition::S, e))?;
        report.verdicts.push(v);
    }

    if let Some(c) = &spec.coercivity {
        let phi0: Box<dyn ConvexFunction> = match (&c.phi0, c.phi0_power) {
            (Some(p0), _) => Box::new(p0.build()?),
            (None, Some(q)) => Box::new(radial_power(f.dim(), q)),
            (None, None) => Box::new(b_phi0.clone().unwrap_or_else(|| radial_power(f.dim(), 1.0))),
        };
        let mut cfg = CoercivityConfig::default();
        if let Some(factor) = c.factor {
            cfg.factor = factor;
        }
        report.verdicts.push(check_coercivity_f(f, phi0.as_ref(), &cfg)?);
    }
    Ok(report)
}
