//! Batch front end behind the `orliczvar` binary.
//!
//! Exit codes: `0` success or certified, `2` the command ran but a verdict
//! failed (or the solver stopped early, with a partial report), `1` errors.

pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::conjugate::{check_young_identity, check_nabla2, conjugate, ConjugateMode, Nabla2Report, YoungIdentityReport, YOUNG_IDENTITY_TOL};
use crate::error::{Error, Result};
use crate::nfunction::{
    check_delta2, check_n_infinity, radial_minorant, ConvexFunction, Delta2Config, Delta2Verdict, NFunctionSpec,
    NInfinityConfig, NInfinityReport, RadialProfile,
};
use crate::orlicz::{inequality_suite_with_profile, suite_profile, Trajectory};
use crate::potential::{run_hypotheses, ConditionASpec, ConditionBSpec, CoercivitySpec, HypothesesSpec, HypothesisReport};
use crate::sampling;
use crate::solver::{self, Certification, ProblemSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

/// Slack below which an inequality counts as violated.
const SLACK_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "orliczvar", version, about = "Periodic Phi-Laplacian systems by the direct method")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Input JSON file (same as --input).
    #[arg(value_name = "INPUT")]
    pub input_pos: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Directory receiving the artifacts.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Common {
    fn input(&self) -> Result<&Path> {
        match (&self.input, &self.input_pos) {
            (Some(a), Some(b)) if a != b => {
                Err(Error::InvalidParameter("conflicting positional input and --input".into()))
            }
            (Some(p), _) | (None, Some(p)) => Ok(p),
            (None, None) => Err(Error::InvalidParameter("no input file given".into())),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolveOverrides {
    /// Grid size (even, at least 8).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gtol: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Solve even when hypothesis validators fail.
    #[arg(long)]
    pub override_hypotheses: bool,
    /// Also write plot.csv with `t, |u|, residual` per node.
    #[arg(long)]
    pub emit_plot_data: bool,
}

impl SolveOverrides {
    fn apply(&self, spec: &mut ProblemSpec, seed: Option<u64>) {
        if let Some(n) = self.n {
            spec.n = n;
        }
        if let Some(g) = self.gtol {
            spec.solver.gtol = g;
        }
        if let Some(r) = self.restarts {
            spec.solver.restarts = r;
        }
        if let Some(s) = seed {
            spec.solver.seed = s;
        }
        spec.override_hypotheses |= self.override_hypotheses;
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the action of a problem and certify the minimizer.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: SolveOverrides,
    },
    /// Certify a given trajectory against a problem.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV (`t,u1,...,ud`).
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// N-infinity axioms and growth classes of a function.
    VerifyNfunction {
        #[command(flatten)]
        common: Common,
    },
    /// Complementary function values and the Young identity.
    Conjugate {
        #[command(flatten)]
        common: Common,
    },
    /// Structural hypotheses of a problem's potential.
    CheckHypotheses {
        #[command(flatten)]
        common: Common,
    },
    /// Embedding inequalities on random band-limited trajectories.
    Inequalities {
        #[command(flatten)]
        common: Common,
        /// Number of random trajectories.
        #[arg(long, default_value_t = 100)]
        random: usize,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        period: f64,
    },
    /// Solve on a sequence of grids and tabulate convergence.
    Refine {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        overrides: SolveOverrides,
        /// Increasing grid sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        ns: Vec<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Certify { .. } => "certify",
            Command::VerifyNfunction { .. } => "verify-nfunction",
            Command::Conjugate { .. } => "conjugate",
            Command::CheckHypotheses { .. } => "check-hypotheses",
            Command::Inequalities { .. } => "inequalities",
            Command::Refine { .. } => "refine",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Solve { common, .. }
            | Command::Certify { common, .. }
            | Command::VerifyNfunction { common }
            | Command::Conjugate { common }
            | Command::CheckHypotheses { common }
            | Command::Inequalities { common, .. }
            | Command::Refine { common, .. } => common,
        }
    }
}

/// A function given bare or wrapped with evaluation settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PhiInput {
    Wrapped {
        phi: NFunctionSpec,
        #[serde(default)]
        points: Option<Vec<Vec<f64>>>,
    },
    Bare(NFunctionSpec),
}

impl PhiInput {
    fn split(self) -> (NFunctionSpec, Option<Vec<Vec<f64>>>) {
        match self {
            PhiInput::Wrapped { phi, points } => (phi, points),
            PhiInput::Bare(phi) => (phi, None),
        }
    }
}

#[derive(Serialize)]
struct NFunctionReport {
    phi: NFunctionSpec,
    is_n_infinity: bool,
    n_infinity: NInfinityReport,
    delta2: Delta2Verdict,
    nabla2: Nabla2Report,
    radial_minorant: RadialProfile,
}

#[derive(Serialize)]
struct ConjugateReport {
    phi: NFunctionSpec,
    mode: &'static str,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    maximizers: Vec<Vec<f64>>,
    young_identity: YoungIdentityReport,
    passed: bool,
}

#[derive(Default, Serialize)]
struct InequalityTally {
    passed: usize,
    min_slack: f64,
}

#[derive(Serialize)]
struct InequalitySweep {
    phi: NFunctionSpec,
    trajectories: usize,
    n: usize,
    period: f64,
    seed: u64,
    all_passed: usize,
    morrey: InequalityTally,
    sobolev: InequalityTally,
    poincare_wirtinger: InequalityTally,
    aniso_poincare_wirtinger: InequalityTally,
}

#[derive(Serialize)]
struct CertifyReport {
    certified: bool,
    hypotheses: Option<HypothesisReport>,
    certification: Certification,
}

enum Outcome {
    Passed,
    Failed,
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    let start = Instant::now();
    let out = cli.command.common().out.clone();
    let result = dispatch(&cli.command);
    let code = match &result {
        Ok(Outcome::Passed) => EXIT_OK,
        Ok(Outcome::Failed) => EXIT_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    };
    let meta = json!({
        "command": cli.command.name(),
        "exit_code": code,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    if code != EXIT_ERROR {
        if let Err(e) = io::write_json(&io::artifact(&out, "meta.json"), &meta) {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    }
    code
}

fn verdict(ok: bool) -> Outcome {
    if ok {
        Outcome::Passed
    } else {
        Outcome::Failed
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    let common = cmd.common();
    let out = &common.out;
    match cmd {
        Command::Solve { overrides, .. } => {
            let mut spec: ProblemSpec = io::read_json(common.input()?)?;
            overrides.apply(&mut spec, common.seed);
            solve(&spec, out, overrides.emit_plot_data)
        }
        Command::Certify { trajectory, .. } => {
            let mut spec: ProblemSpec = io::read_json(common.input()?)?;
            let file = std::fs::File::open(trajectory)
                .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", trajectory.display())))?;
            let u = Trajectory::read_csv(file)?;
            spec.n = u.len();
            let problem = spec.build()?;
            let hypotheses = solver::check_problem_hypotheses(&spec, &problem)?;
            let certification = solver::certify(&problem, &u, spec.c_res, common.seed.unwrap_or(spec.solver.seed))?;
            let certified = certification.certified && hypotheses.as_ref().map_or(true, HypothesisReport::all_hold);
            io::write_json(&io::artifact(out, "report.json"), &CertifyReport { certified, hypotheses, certification })?;
            Ok(verdict(certified))
        }
        Command::VerifyNfunction { .. } => {
            let (spec, _) = io::read_json::<PhiInput>(common.input()?)?.split();
            let phi = spec.build()?;
            let mut cfg = NInfinityConfig::default();
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let n_infinity = check_n_infinity(&phi, &cfg);
            let report = NFunctionReport {
                is_n_infinity: n_infinity.passed(),
                n_infinity,
                delta2: check_delta2(&phi, &Delta2Config::default())?,
                nabla2: check_nabla2(&phi)?,
                radial_minorant: radial_minorant(&phi, 4.0, 64)?,
                phi: spec,
            };
            io::write_json(&io::artifact(out, "report.json"), &report)?;
            Ok(verdict(report.is_n_infinity))
        }
        Command::Conjugate { .. } => {
            let (spec, points) = io::read_json::<PhiInput>(common.input()?)?.split();
            let phi = spec.build()?;
            let points = match points {
                Some(p) => p,
                None => {
                    let mut rng = sampling::rng(common.seed.unwrap_or(0));
                    (0..32).map(|_| sampling::random_point(&mut rng, phi.dim(), 2.0)).collect()
                }
            };
            if let Some(p) = points.iter().find(|p| p.len() != phi.dim()) {
                return Err(Error::DimensionMismatch { expected: phi.dim(), found: p.len() });
            }
            let phistar = conjugate(&phi);
            let mut values = Vec::with_capacity(points.len());
            let mut maximizers = Vec::with_capacity(points.len());
            for z in &points {
                values.push(phistar.try_value(z)?);
                maximizers.push(phistar.argmax(z)?);
            }
            let young_identity = check_young_identity(&phi, &phistar, &points)?;
            let passed = young_identity.passed(YOUNG_IDENTITY_TOL);
            let mode = match phistar.mode() {
                ConjugateMode::Analytic => "analytic",
                ConjugateMode::Numeric => "numeric",
            };
            let report = ConjugateReport { phi: spec, mode, points, values, maximizers, young_identity, passed };
            io::write_json(&io::artifact(out, "report.json"), &report)?;
            Ok(verdict(passed))
        }
        Command::CheckHypotheses { .. } => {
            let spec: ProblemSpec = io::read_json(common.input()?)?;
            let problem = spec.build()?;
            let hyp = if spec.hypotheses.is_empty() {
                HypothesesSpec {
                    condition_a: Some(ConditionASpec::default()),
                    condition_b: Some(ConditionBSpec::default()),
                    coercivity: Some(CoercivitySpec::default()),
                    ..spec.hypotheses.clone()
                }
            } else {
                spec.hypotheses.clone()
            };
            let report = run_hypotheses(&hyp, problem.potential(), problem.phi())?;
            io::write_json(&io::artifact(out, "report.json"), &report)?;
            Ok(verdict(report.all_hold()))
        }
        Command::Inequalities { random, n, period, .. } => {
            let (spec, _) = io::read_json::<PhiInput>(common.input()?)?.split();
            let sweep = inequality_sweep(spec, *random, *n, *period, common.seed.unwrap_or(0))?;
            io::write_json(&io::artifact(out, "report.json"), &sweep)?;
            Ok(verdict(sweep.all_passed == sweep.trajectories))
        }
        Command::Refine { overrides, ns, .. } => {
            let mut spec: ProblemSpec = io::read_json(common.input()?)?;
            overrides.apply(&mut spec, common.seed);
            spec.build()?;
            match solver::refine_study(&spec, ns) {
                Ok(study) => {
                    let ok = study.rows.iter().all(|r| r.certified);
                    io::write_json(&io::artifact(out, "report.json"), &study)?;
                    Ok(verdict(ok))
                }
                Err(e) => partial_failure(out, &e, None),
            }
        }
    }
}

fn solve(spec: &ProblemSpec, out: &Path, plot: bool) -> Result<Outcome> {
    let problem = spec.build()?;
    let hypotheses = solver::check_problem_hypotheses(spec, &problem)?;
    let report = match solver::minimize(spec) {
        Ok(r) => r,
        Err(e @ (Error::HypothesesRejected { .. } | Error::OverflowInPhi | Error::LineSearchStall { .. })) => {
            return partial_failure(out, &e, hypotheses);
        }
        Err(e) => return Err(e),
    };
    io::write_json(&io::artifact(out, "report.json"), &report)?;
    io::write_atomic(&io::artifact(out, "minimizer.csv"), report.minimizer.to_csv_string().as_bytes())?;
    if plot {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["t", "abs_u", "residual"])?;
        for (t, a, r) in report.plot_rows(&problem) {
            wtr.write_record([format!("{t:?}"), format!("{a:?}"), format!("{r:?}")])?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
        io::write_atomic(&io::artifact(out, "plot.csv"), &bytes)?;
    }
    Ok(verdict(report.certified))
}

/// Report for a run the solver could not finish.
fn partial_failure(out: &Path, e: &Error, hypotheses: Option<HypothesisReport>) -> Result<Outcome> {
    eprintln!("solver stopped: {e}");
    let report = json!({
        "certified": false,
        "error": e.to_string(),
        "hypotheses": hypotheses,
    });
    io::write_json(&io::artifact(out, "report.json"), &report)?;
    Ok(Outcome::Failed)
}

fn inequality_sweep(spec: NFunctionSpec, count: usize, n: usize, period: f64, seed: u64) -> Result<InequalitySweep> {
    let phi = spec.build()?;
    let profile = suite_profile(&phi, period, n)?;
    let mut rng = sampling::rng(seed);
    let fresh = || InequalityTally { passed: 0, min_slack: f64::INFINITY };
    let (mut morrey, mut sobolev, mut pw, mut apw) = (fresh(), fresh(), fresh(), fresh());
    let mut all_passed = 0;
    for _ in 0..count {
        let u = sampling::random_band_limited(&mut rng, n, phi.dim(), period, 8, 0.5, 1.0);
        let r = inequality_suite_with_profile(&phi, &u, &profile)?;
        let mut all = true;
        for (tally, s) in [
            (&mut morrey, r.morrey),
            (&mut sobolev, r.sobolev),
            (&mut pw, r.poincare_wirtinger),
            (&mut apw, r.aniso_poincare_wirtinger),
        ] {
            let ok = s.holds(SLACK_TOL);
            tally.passed += ok as usize;
            tally.min_slack = tally.min_slack.min(s.min_slack);
            all &= ok;
        }
        all_passed += all as usize;
    }
    Ok(InequalitySweep {
        phi: spec,
        trajectories: count,
        n,
        period,
        seed,
        all_passed,
        morrey,
        sobolev,
        poincare_wirtinger: pw,
        aniso_poincare_wirtinger: apw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "orliczvar", "solve", "p.json", "--out", "o", "--n", "64", "--gtol", "1e-9", "--emit-plot-data",
        ])
        .unwrap();
        match cli.command {
            Command::Solve { common, overrides } => {
                assert_eq!(common.input().unwrap(), Path::new("p.json"));
                assert_eq!(overrides.n, Some(64));
                assert!(overrides.emit_plot_data);
            }
            _ => panic!("wrong command"),
        }
        let cli = Cli::try_parse_from(["orliczvar", "refine", "--input", "p.json", "--ns", "32,64"]).unwrap();
        assert!(matches!(cli.command, Command::Refine { ref ns, .. } if ns == &[32, 64]));
    }

    #[test]
    fn phi_input_forms() {
        let a: PhiInput = serde_json::from_str(r#"{"kind": "exp", "dim": 2}"#).unwrap();
        assert!(matches!(a.split(), (NFunctionSpec::Exp { dim: 2 }, None)));
        let b: PhiInput = serde_json::from_str(r#"{"phi": {"kind": "power", "p": 3.0, "dim": 1}, "points": [[0.5]]}"#).unwrap();
        assert_eq!(b.split().1, Some(vec![vec![0.5]]));
    }

    #[test]
    fn missing_input_is_an_error() {
        let common = Common { input_pos: None, input: None, out: PathBuf::from("."), seed: None };
        assert!(common.input().is_err());
    }
}
