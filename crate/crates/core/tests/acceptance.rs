//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILING` are evaluated at full tolerance and
//! reported, but do not fail the run; an unexpected pass of one of them does.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use orliczvar::conjugate::{biconjugate_value, check_nabla2, check_young_identity, conjugate_numeric};
use orliczvar::nfunction::{
    check_delta2, make_aniso, make_cosh, make_exponential, make_power, radial_minorant, Delta2Config,
};
use orliczvar::orlicz::{inequality_suite_with_profile, suite_profile};
use orliczvar::potential::TimeSeries;
use orliczvar::sampling;
use orliczvar::solver::{discrete_action, discrete_action_gradient, minimize, Problem};
use orliczvar::{ConvexFunction, NFunction, Potential, ProblemSpec, SolveReport, Trajectory};
use rand::Rng;

const KNOWN_FAILING: &[usize] = &[8, 9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, secs: f64) -> bool {
    elapsed.as_secs_f64() < secs
}

fn families() -> Vec<(&'static str, NFunction)> {
    vec![
        ("power3", make_power(3.0, 1).unwrap()),
        ("aniso(2,4)", make_aniso(2.0, 4.0, 1, 1).unwrap()),
        ("exp", make_exponential(1).unwrap()),
        ("cosh", make_cosh(1).unwrap()),
    ]
}

fn samples(d: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = sampling::rng(seed);
    (0..count)
        .map(|_| {
            let r = lo * (hi / lo).powf(rng.gen::<f64>());
            sampling::random_unit(&mut rng, d).iter().map(|v| v * r).collect()
        })
        .collect()
}

fn conjugate_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for p in [1.5, 2.0, 3.0, 5.0] {
        let star = conjugate_numeric(&make_power(p, 1).unwrap());
        let oracle = make_power(p / (p - 1.0), 1).unwrap();
        for z in samples(1, 1000, 1e-2, 1e2, p.to_bits()) {
            let exact = oracle.value(&z);
            let err = (star.try_value(&z).unwrap() - exact).abs() / exact;
            worst = worst.max(err);
        }
    }
    let el = start.elapsed();
    outcome(worst <= 1e-6 && within(el, 10.0), format!("max rel err {worst:.2e}, {el:.2?}"))
}

fn young_identity() -> Outcome {
    let mut worst = 0.0f64;
    for (i, (_, phi)) in families().into_iter().enumerate() {
        let xs = samples(phi.dim(), 1000, 1e-2, 3.0, 20 + i as u64);
        let r = check_young_identity(&phi, &conjugate_numeric(&phi), &xs).unwrap();
        worst = worst.max(r.max_rel_deviation);
    }
    outcome(worst <= 1e-6, format!("max rel deviation {worst:.2e}"))
}

fn biconjugation() -> Outcome {
    let mut worst = 0.0f64;
    for (i, (_, phi)) in families().into_iter().enumerate() {
        let star = conjugate_numeric(&phi);
        for x in samples(phi.dim(), 100, 1e-1, 3.0, 30 + i as u64) {
            let exact = phi.value(&x);
            worst = worst.max((biconjugate_value(&star, &x).unwrap() - exact).abs() / exact);
        }
    }
    outcome(worst <= 1e-5, format!("max rel err {worst:.2e}"))
}

fn growth_classification() -> Outcome {
    let start = Instant::now();
    let cfg = Delta2Config::default();
    let power = check_delta2(&make_power(3.0, 1).unwrap(), &cfg).unwrap().holds();
    let aniso = check_delta2(&make_aniso(2.0, 4.0, 1, 1).unwrap(), &cfg).unwrap().holds();
    let exp = make_exponential(1).unwrap();
    let exp_delta2 = check_delta2(&exp, &cfg).unwrap().holds();
    let exp_nabla2 = check_nabla2(&exp).unwrap().holds;
    let el = start.elapsed();
    outcome(
        power && aniso && !exp_delta2 && exp_nabla2 && within(el, 30.0),
        format!("delta2 power={power} aniso={aniso} exp={exp_delta2}; nabla2 exp={exp_nabla2}; {el:.2?}"),
    )
}

fn inequality_suite() -> Outcome {
    let (n, period) = (128, 1.0);
    let fams = [make_power(2.0, 1).unwrap(), make_aniso(2.0, 4.0, 1, 1).unwrap(), make_exponential(1).unwrap()];
    let mut worst = f64::INFINITY;
    let mut failures = 0;
    for (i, phi) in fams.iter().enumerate() {
        let profile = suite_profile(phi, period, n).unwrap();
        let mut rng = sampling::rng(50 + i as u64);
        for _ in 0..1000 {
            let u = sampling::random_band_limited(&mut rng, n, phi.dim(), period, 8, 0.5, 1.0);
            let r = inequality_suite_with_profile(phi, &u, &profile).unwrap();
            for s in [r.morrey, r.sobolev, r.poincare_wirtinger, r.aniso_poincare_wirtinger] {
                worst = worst.min(s.min_slack);
            }
            if !r.all_hold(1e-8) {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("{failures}/3000 violations, min slack {worst:.2e}"))
}

fn gradient_check() -> Outcome {
    let mut rng = sampling::rng(60);
    let fams = [make_power(2.0, 2).unwrap(), make_power(3.0, 2).unwrap(), make_aniso(2.0, 4.0, 1, 1).unwrap(), make_exponential(2).unwrap()];
    let mut worst = 0.0f64;
    for k in 0..100 {
        let phi = fams[k % fams.len()].clone();
        let forcing = (0..2).map(|_| TimeSeries { sin: vec![rng.gen_range(-1.0..1.0)], ..Default::default() }).collect();
        let f = Potential::quadratic_forcing(forcing, 1.0).unwrap();
        let problem = Problem::new(phi, f, 16).unwrap();
        let u = sampling::random_band_limited(&mut rng, 16, 2, 1.0, 3, 0.05, 0.5);
        let g = discrete_action_gradient(&problem, &u).unwrap();
        let scale = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for j in 0..u.values().len() {
            let eps = 1e-6 * (1.0 + u.values()[j].abs());
            let shifted = |s: f64| {
                let mut v = u.values().to_vec();
                v[j] += s;
                discrete_action(&problem, &u.with_values(v).unwrap()).unwrap()
            };
            let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
            worst = worst.max((fd - g.values()[j]).abs() / scale);
        }
    }
    outcome(worst <= 1e-5, format!("max rel err {worst:.2e} over 100 instances"))
}

fn harmonic_oracle() -> Outcome {
    let spec = ProblemSpec::from_json(
        r#"{"phi": {"kind": "power", "p": 2.0, "dim": 1},
            "potential": {"kind": "quadratic_forcing", "forcing": [{"sin": [-1.0]}]},
            "period": 1.0, "n": 256}"#,
    )
    .unwrap();
    let start = Instant::now();
    let r = minimize(&spec).unwrap();
    let el = start.elapsed();
    let a = 1.0 / (1.0 + 4.0 * PI * PI);
    let err = sup_error(&r.minimizer, |t| a * (2.0 * PI * t).sin());
    outcome(
        err <= 1e-4 && r.certified && within(el, 5.0),
        format!("sup err {err:.2e}, certified={}, {el:.2?}", r.certified),
    )
}

fn sup_error(u: &Trajectory, exact: impl Fn(f64) -> f64) -> f64 {
    u.nodes().enumerate().map(|(i, x)| (x[0] - exact(u.t(i))).abs()).fold(0.0, f64::max)
}

fn manufactured_p3() -> Outcome {
    let mut errs = Vec::new();
    for n in [128, 256, 512] {
        let spec = ProblemSpec::from_json(&format!(
            r#"{{"phi": {{"kind": "power", "p": 3.0, "dim": 1}},
                "potential": {{"kind": "manufactured", "ustar": [{{"sin": [0.5]}}]}},
                "period": 1.0, "n": {n}}}"#
        ))
        .unwrap();
        let r = minimize(&spec).unwrap();
        errs.push((n, sup_error(&r.minimizer, |t| 0.5 * (2.0 * PI * t).sin())));
    }
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[0].1 / w[1].1).collect();
    // the O(1/N) bound with the constant fixed at the coarsest grid
    let c = errs[0].1 * errs[0].0 as f64;
    let bounded = errs.iter().all(|&(n, e)| e <= c / n as f64);
    let in_window = ratios.iter().all(|r| (1.7..=2.3).contains(r));
    let shown: Vec<String> = errs.iter().map(|(n, e)| format!("N={n}: {e:.3e}")).collect();
    outcome(bounded && in_window, format!("{}; ratios {ratios:.2?}", shown.join(", ")))
}

fn example_spec(n: usize) -> ProblemSpec {
    ProblemSpec::from_json(&format!(
        r#"{{"phi": {{"kind": "exp", "dim": 2}},
            "potential": {{"kind": "separable", "p": {{"poly": [1.0, -5.0, 5.0]}},
                "q": {{"dim": 2, "terms": [{{"coef": 1.0, "powers": [4, 0]}},
                                           {{"coef": 1.0, "powers": [0, 4]}},
                                           {{"coef": -1.0, "powers": [1, 1]}}]}}}},
            "period": 1.0, "n": {n}, "solver": {{"seed": 11}},
            "hypotheses": {{"condition_a": {{}}, "condition_b": {{}}, "coercivity": {{}}}}}}"#
    ))
    .unwrap()
}

fn example_reports() -> (SolveReport, SolveReport, Duration) {
    let start = Instant::now();
    let coarse = minimize(&example_spec(128)).unwrap();
    let fine = minimize(&example_spec(256)).unwrap();
    (coarse, fine, start.elapsed())
}

fn exponential_example() -> Outcome {
    let (coarse, fine, el) = example_reports();
    let hyp = [&coarse, &fine].iter().all(|r| r.hypotheses.as_ref().is_some_and(|h| h.all_hold() && h.verdicts.len() == 3));
    let ratio = coarse.el_residual / fine.el_residual;
    let pass = hyp && coarse.certified && fine.certified && (1.7..=2.3).contains(&ratio) && within(el, 60.0);
    outcome(
        pass,
        format!(
            "hypotheses hold={hyp}, certified={}/{}, residual {:.3e} -> {:.3e} (ratio {ratio:.2}), {el:.2?}",
            coarse.certified, fine.certified, coarse.el_residual, fine.el_residual
        ),
    )
}

fn radial_oracle() -> Outcome {
    let phi = make_aniso(2.0, 4.0, 1, 1).unwrap();
    let a = radial_minorant(&phi, 3.0, 300).unwrap();
    let exact = |r: f64| if r <= 1.0 { r.powi(4) / 4.0 } else { r * r / 2.0 - 0.25 };
    let worst = a.knots.iter().zip(&a.values).map(|(&r, &v)| (v - exact(r)).abs()).fold(0.0, f64::max);
    outcome(worst <= 1e-3, format!("max abs err {worst:.2e} over {} knots", a.knots.len()))
}

fn determinism() -> Outcome {
    let a = serde_json::to_string_pretty(&minimize(&example_spec(128)).unwrap()).unwrap();
    let b = serde_json::to_string_pretty(&minimize(&example_spec(128)).unwrap()).unwrap();
    outcome(a == b, format!("{} bytes, identical={}", a.len(), a == b))
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, fn() -> Outcome); 11] = [
        (1, "conjugate oracle", conjugate_oracle),
        (2, "Young identity", young_identity),
        (3, "biconjugation", biconjugation),
        (4, "growth classification", growth_classification),
        (5, "inequality suite", inequality_suite),
        (6, "gradient check", gradient_check),
        (7, "harmonic oracle", harmonic_oracle),
        (8, "manufactured p-Laplacian", manufactured_p3),
        (9, "exponential example", exponential_example),
        (10, "radial minorant oracle", radial_oracle),
        (11, "determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || f == &id.to_string()) {
            continue;
        }
        let o = run();
        let known = KNOWN_FAILING.contains(&id);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known)",
            (true, true) => "PASS (unexpected)",
        };
        if o.pass == known {
            unexpected += 1;
        }
        println!("criterion {id:>2} {name}: {tag} - {}", o.detail);
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria deviate from the expected outcome");
        ExitCode::FAILURE
    }
}
