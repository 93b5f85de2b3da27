//! Discrete action, its minimization and the certification of minimizers.
//!
//! Trajectories live on `N` nodes `t_i = i T / N` of the periodic grid. The
//! action is `(T/N) sum_i [Phi(Du_i) + F(t_i, u_i)]` with forward differences
//! `Du_i`, so the discrete Euler-Lagrange equation is exactly the
//! stationarity condition of the discrete action.

mod action;
mod certify;
mod lbfgs;
mod precond;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use action::{discrete_action, discrete_action_gradient, el_residuals};
pub use certify::{
    calibration_residual, certify, resolve_c_res, strict_convexity_check, Certification, ConvexityCheck, CresSource,
    CALIBRATION_FACTOR,
};
pub use lbfgs::{lbfgs, lbfgs_preconditioned, LbfgsConfig, LbfgsOutcome};
pub use precond::{ActionPreconditioner, Identity, Preconditioner};

use crate::error::{Error, Result};
use crate::nfunction::{ConvexFunction, NFunction, NFunctionSpec};
use crate::orlicz::Trajectory;
use crate::potential::{run_hypotheses, HypothesesSpec, HypothesisReport, Potential, PotentialSpec};
use crate::sampling;
use crate::vecops;

/// Environment variable capping the number of concurrent restarts.
pub const THREADS_ENV: &str = "ORLICZVAR_THREADS";
const PERTURBATION_MODES: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub max_iter: usize,
    /// Exit tolerance on `(N/T) max_i |dI/du_i|`.
    pub gtol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Amplitude of the band-limited perturbation of the constant start.
    pub perturbation: f64,
    pub memory: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { max_iter: 20_000, gtol: 1e-8, restarts: 4, seed: 0, perturbation: 1e-3, memory: 10 }
    }
}

/// A periodic problem as read from JSON.
///
/// ```json
/// {"phi": {"kind": "power", "p": 2.0, "dim": 1},
///  "potential": {"kind": "quadratic_forcing", "forcing": [{"sin": [-1.0]}]},
///  "period": 1.0, "n": 256,
///  "solver": {"restarts": 2, "seed": 7},
///  "hypotheses": {"condition_a": {}, "coercivity": {}}}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub phi: NFunctionSpec,
    pub potential: PotentialSpec,
    pub period: f64,
    pub n: usize,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub hypotheses: HypothesesSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_res: Option<f64>,
    #[serde(default)]
    pub override_hypotheses: bool,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<ProblemSpec> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<Problem> {
        let phi = self.phi.build()?;
        let potential = self.potential.build(self.period, &phi)?;
        Problem::new(phi, potential, self.n)
    }

    pub fn with_n(&self, n: usize) -> ProblemSpec {
        ProblemSpec { n, ..self.clone() }
    }
}

/// `Phi`, `F` and the grid.
#[derive(Clone, Debug)]
pub struct Problem {
    pub(crate) phi: NFunction,
    pub(crate) potential: Potential,
    pub(crate) period: f64,
    pub(crate) n: usize,
    pub(crate) dim: usize,
}

impl Problem {
    pub fn new(phi: NFunction, potential: Potential, n: usize) -> Result<Problem> {
        if phi.dim() != potential.dim() {
            return Err(Error::DimensionMismatch { expected: potential.dim(), found: phi.dim() });
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!("grid size must be even and at least 8, got {n}")));
        }
        Ok(Problem { dim: phi.dim(), period: potential.period(), phi, potential, n })
    }

    pub fn phi(&self) -> &NFunction {
        &self.phi
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let v = self.action_flat(x);
        if v.is_finite() {
            (v, self.gradient_flat(x))
        } else {
            (v, vec![0.0; x.len()])
        }
    }
}

/// Approximate minimizer of `x -> int_0^T F(t, x) dt` by a coarse grid over a
/// growing box followed by a compass search. The flag reports a potential
/// whose time integral is constant, so the mean of a minimizer is free.
pub fn constant_guess(f: &Potential) -> (Vec<f64>, bool) {
    let d = f.dim();
    if f.is_zero() {
        return (vec![0.0; d], true);
    }
    let per_axis: usize = if d <= 2 { 21 } else if d <= 4 { 7 } else { 3 };
    let mut radius = 1.0;
    let mut best = (vec![0.0; d], f.time_integral(&vec![0.0; d]));
    loop {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut on_boundary = false;
        let total = per_axis.pow(d as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut x = vec![0.0; d];
            let mut edge = false;
            for xk in x.iter_mut() {
                let j = rem % per_axis;
                rem /= per_axis;
                edge |= j == 0 || j == per_axis - 1;
                *xk = radius * (2.0 * j as f64 / (per_axis - 1) as f64 - 1.0);
            }
            let v = f.time_integral(&x);
            if !v.is_finite() {
                continue;
            }
            lo = lo.min(v);
            hi = hi.max(v);
            if v < best.1 {
                best = (x, v);
                on_boundary = edge;
            }
        }
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            return (vec![0.0; d], true);
        }
        if !on_boundary || radius >= 1e4 {
            break;
        }
        radius *= 4.0;
    }
    let (mut x, mut fx) = best;
    let mut step = 2.0 * radius / (per_axis - 1) as f64;
    while step > 1e-10 * (1.0 + vecops::norm(&x)) {
        let mut moved = false;
        for k in 0..d {
            for sgn in [-1.0, 1.0] {
                let mut y = x.clone();
                y[k] += sgn * step;
                let v = f.time_integral(&y);
                if v < fx {
                    x = y;
                    fx = v;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (x, false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    pub action: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub best_restart: usize,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    pub restarts: Vec<RestartSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub certified: bool,
    pub n: usize,
    pub period: f64,
    pub dim: usize,
    pub action: f64,
    /// `(N/T) max_i |dI/du_i|` at exit.
    pub gradient_norm: f64,
    pub el_residual: f64,
    pub boundary_residual: f64,
    pub periodicity_residual: f64,
    pub mean_degenerate: bool,
    pub initial_constant: Vec<f64>,
    pub hypotheses: Option<HypothesisReport>,
    pub hypotheses_overridden: bool,
    pub certification: Certification,
    pub reasons: Vec<String>,
    pub solver: SolverSummary,
    pub minimizer: Trajectory,
}

impl SolveReport {
    /// Per-node rows `(t, |u|, residual)` for external plotting.
    pub fn plot_rows(&self, problem: &Problem) -> Vec<(f64, f64, f64)> {
        let res = problem.residuals_flat(self.minimizer.values());
        self.minimizer
            .nodes()
            .enumerate()
            .map(|(i, u)| (problem.node_time(i), vecops::norm(u), res[i]))
            .collect()
    }
}

fn restart_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct RestartRun {
    outcome: LbfgsOutcome,
    seed: u64,
}

fn run_restart(problem: &Problem, params: &SolverParams, x0: &[f64], pin_mean: bool, k: usize) -> Result<RestartRun> {
    let seed = restart_seed(params.seed, k);
    let mut rng = sampling::rng(seed);
    let noise = sampling::random_band_limited(
        &mut rng,
        problem.n,
        problem.dim,
        problem.period,
        PERTURBATION_MODES,
        1.0,
        0.0,
    );
    let base: Vec<f64> = (0..problem.n).flat_map(|_| x0.iter().copied()).collect();
    let mut amp = params.perturbation;
    let mut start = None;
    for _ in 0..30 {
        let x: Vec<f64> = base.iter().zip(noise.values()).map(|(b, e)| b + amp * e).collect();
        if problem.action_flat(&x).is_finite() {
            start = Some(x);
            break;
        }
        amp *= 0.5;
    }
    let start = match start {
        Some(x) => x,
        None if problem.action_flat(&base).is_finite() => base,
        None => return Err(Error::OverflowInPhi),
    };
    let d = problem.dim;
    let n = problem.n;
    let cfg = LbfgsConfig {
        memory: params.memory.max(1),
        max_iter: params.max_iter,
        gtol: params.gtol,
        grad_scale: n as f64 / problem.period,
        ..LbfgsConfig::default()
    };
    let objective = |x: &[f64]| {
        let (v, mut g) = problem.value_and_gradient(x);
        if pin_mean {
            for k in 0..d {
                let mean = (0..n).map(|i| g[i * d + k]).sum::<f64>() / n as f64;
                (0..n).for_each(|i| g[i * d + k] -= mean);
            }
        }
        (v, g)
    };
    let mut pre = ActionPreconditioner::new(problem, pin_mean);
    Ok(RestartRun { outcome: lbfgs_preconditioned(objective, start, &cfg, &mut pre), seed })
}

/// Validates the configured hypotheses; `None` when none are configured.
pub fn check_problem_hypotheses(spec: &ProblemSpec, problem: &Problem) -> Result<Option<HypothesisReport>> {
    if spec.hypotheses.is_empty() {
        return Ok(None);
    }
    run_hypotheses(&spec.hypotheses, &problem.potential, &problem.phi).map(Some)
}

/// Builds the problem, validates the hypotheses and minimizes the action.
pub fn minimize(spec: &ProblemSpec) -> Result<SolveReport> {
    let problem = spec.build()?;
    let hypotheses = check_problem_hypotheses(spec, &problem)?;
    if let Some(h) = &hypotheses {
        if !h.all_hold() && !spec.override_hypotheses {
            let failed = h.verdicts.iter().filter(|v| !v.holds).map(|v| format!("{:?}", v.condition)).collect();
            return Err(Error::HypothesesRejected { failed });
        }
    }
    minimize_problem(&problem, &spec.solver, hypotheses, spec.override_hypotheses, spec.c_res)
}

/// Multi-start L-BFGS from the best constant plus band-limited noise; the
/// restart with the lowest action wins, ties going to the lowest index.
pub fn minimize_problem(
    problem: &Problem,
    params: &SolverParams,
    hypotheses: Option<HypothesisReport>,
    overridden: bool,
    c_res: Option<f64>,
) -> Result<SolveReport> {
    if !(params.gtol > 0.0) || params.restarts == 0 {
        return Err(Error::InvalidParameter("gtol must be positive and restarts at least 1".into()));
    }
    let (x0, mean_degenerate) = constant_guess(&problem.potential);
    let threads = params.restarts.min(thread_cap()).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let runs: Vec<Result<RestartRun>> = pool.install(|| {
        (0..params.restarts)
            .into_par_iter()
            .map(|k| run_restart(problem, params, &x0, mean_degenerate, k))
            .collect()
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let scale = problem.n as f64 / problem.period;
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |b, (k, r)| if r.outcome.value < runs[b].outcome.value { k } else { b });
    let restarts: Vec<RestartSummary> = runs
        .iter()
        .map(|r| RestartSummary {
            seed: r.seed,
            action: r.outcome.value,
            iterations: r.outcome.iterations,
            converged: r.outcome.converged,
            stalled: r.outcome.stalled,
            gradient_norm: r.outcome.scaled_gradient_norm(scale),
        })
        .collect();
    let out = &runs[best].outcome;
    let minimizer = Trajectory::new(problem.period, problem.dim, out.x.clone())?;
    let action = discrete_action(problem, &minimizer)?;
    let certification = certify(problem, &minimizer, c_res, params.seed)?;

    let mut reasons = certification.reasons.clone();
    if out.stalled {
        reasons.push(format!("line search stalled after {} iterations", out.iterations));
    } else if !out.converged {
        reasons.push(format!("iteration cap {} reached", params.max_iter));
    }
    if let Some(h) = &hypotheses {
        for v in h.verdicts.iter().filter(|v| !v.holds) {
            reasons.push(format!("hypothesis {:?} fails", v.condition));
        }
    }
    Ok(SolveReport {
        certified: reasons.is_empty(),
        n: problem.n,
        period: problem.period,
        dim: problem.dim,
        action,
        gradient_norm: out.scaled_gradient_norm(scale),
        el_residual: certification.el_residual,
        boundary_residual: certification.boundary_residual,
        periodicity_residual: certification.periodicity_residual,
        mean_degenerate,
        initial_constant: x0,
        hypotheses,
        hypotheses_overridden: overridden,
        reasons,
        solver: SolverSummary {
            best_restart: best,
            iterations: out.iterations,
            converged: out.converged,
            stalled: out.stalled,
            restarts,
        },
        certification,
        minimizer,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineRow {
    pub n: usize,
    pub action: f64,
    pub el_residual: f64,
    pub threshold: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineStudy {
    pub rows: Vec<RefineRow>,
    /// `|I_{k+1} - I_k|` between consecutive grids.
    pub action_increments: Vec<f64>,
    /// `residual_k / residual_{k+1}` between consecutive grids.
    pub residual_ratios: Vec<f64>,
    pub reports: Vec<SolveReport>,
}

/// Solves on every grid size in `ns`, which must increase.
pub fn refine_study(spec: &ProblemSpec, ns: &[usize]) -> Result<RefineStudy> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid sizes must be nonempty and increasing".into()));
    }
    let reports = ns.iter().map(|&n| minimize(&spec.with_n(n))).collect::<Result<Vec<_>>>()?;
    let rows: Vec<RefineRow> = reports
        .iter()
        .map(|r| RefineRow {
            n: r.n,
            action: r.action,
            el_residual: r.el_residual,
            threshold: r.certification.threshold,
            certified: r.certified,
        })
        .collect();
    let action_increments = rows.windows(2).map(|w| (w[1].action - w[0].action).abs()).collect();
    let residual_ratios = rows.windows(2).map(|w| w[0].el_residual / w[1].el_residual).collect();
    Ok(RefineStudy { rows, action_increments, residual_ratios, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::TimeSeries;
    use std::f64::consts::PI;

    fn harmonic_spec(n: usize) -> ProblemSpec {
        serde_json::from_str(&format!(
            r#"{{"phi": {{"kind": "power", "p": 2.0, "dim": 1}},
                "potential": {{"kind": "quadratic_forcing", "forcing": [{{"sin": [-1.0]}}]}},
                "period": 1.0, "n": {n}, "solver": {{"restarts": 2, "seed": 5}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn harmonic_oracle() {
        let r = minimize(&harmonic_spec(128)).unwrap();
        let a = 1.0 / (1.0 + 4.0 * PI * PI);
        let err = r
            .minimizer
            .nodes()
            .enumerate()
            .map(|(i, u)| (u[0] - a * (2.0 * PI * i as f64 / 128.0).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        assert!(r.certified, "{:?}", r.reasons);
        assert_eq!(r.action, discrete_action(&harmonic_spec(128).build().unwrap(), &r.minimizer).unwrap());
    }

    #[test]
    fn zero_potential_gives_constant() {
        let spec: ProblemSpec = serde_json::from_str(
            r#"{"phi": {"kind": "power", "p": 2.0, "dim": 2}, "potential": {"kind": "zero", "dim": 2},
                "period": 1.0, "n": 32}"#,
        )
        .unwrap();
        let r = minimize(&spec).unwrap();
        assert!(r.mean_degenerate);
        assert!(r.action < 1e-14);
        assert!(r.minimizer.derivative().sup_norm() < 1e-6);
    }

    #[test]
    fn constant_guess_finds_quadratic_minimum() {
        let f = Potential::quadratic_forcing(vec![TimeSeries::constant(-3.0), TimeSeries::constant(40.0)], 1.0).unwrap();
        let (x, degenerate) = constant_guess(&f);
        assert!(!degenerate);
        assert!((x[0] - 3.0).abs() < 1e-5 && (x[1] + 40.0).abs() < 1e-5, "{x:?}");
    }

    #[test]
    fn restarts_are_deterministic_across_thread_counts() {
        let spec = harmonic_spec(64);
        let problem = spec.build().unwrap();
        let a = minimize_problem(&problem, &spec.solver, None, false, None).unwrap();
        let b = minimize_problem(&problem, &spec.solver, None, false, None).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn rejects_failed_hypotheses_without_override() {
        let mut spec = harmonic_spec(32);
        spec.hypotheses = serde_json::from_str(r#"{"condition_b": {}}"#).unwrap();
        assert!(matches!(minimize(&spec), Err(Error::HypothesesRejected { .. })));
        spec.override_hypotheses = true;
        let r = minimize(&spec).unwrap();
        assert!(!r.certified);
        assert!(r.hypotheses_overridden);
    }

    #[test]
    fn invalid_grid() {
        assert!(harmonic_spec(7).build().is_err());
        assert!(harmonic_spec(10).build().is_ok());
    }
}
