//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria run one after another so the wall-clock budgets are measured
//! without competition from other tests. The process exits nonzero when a
//! criterion fails for a reason other than the documented Hardy-constant
//! counterexamples of criterion 4.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use heisenberg::calculus::{dirichlet_form, lp_norm, quadrature_weights, sublaplacian_form, GridFunction, GridSpec, Measure};
use heisenberg::constants::gross_gamma_limit;
use heisenberg::group::Convention;
use heisenberg::heat::{check_decay_bound, heat_grid, heat_solve, initial_norms, HeatMethod};
use heisenberg::inequalities::{
    ball_battery, ball_grid, check_hardy, check_hardy_sobolev, check_log_sobolev, check_sobolev, run_suite, standard_battery,
    CheckOptions, InequalityReport, Suite, Variant, Verdict,
};
use heisenberg::optimizer::{minimize_sobolev_quotient, OptimizerConfig};
use heisenberg::spectral::{analyze, synthesize, AnalysisConfig, Multiplier};

// Tolerances and budgets, one block per criterion.
const C1_REL: f64 = 1e-12;
const C1_EXACT: f64 = 1e-15;
const C1_BUDGET: Duration = Duration::from_secs(1);
const C2_REL: f64 = 1e-2;
const C2_BUDGET: Duration = Duration::from_secs(1);
const C3_ROUND_TRIP: f64 = 1e-6;
const C3_PLANCHEREL: f64 = 1e-4;
const C3_FORM: f64 = 1e-2;
const C3_BUDGET: Duration = Duration::from_secs(120);
const C4_RATIO_SLACK: f64 = 1e-3;
const C4_CHAIN: f64 = 1e-8;
const C4_MIN_FUNCTIONS: usize = 20;
const C4_BUDGET: Duration = Duration::from_secs(600);
const C5_CONSTANT: f64 = 0.10;
const C5_GRADIENT: f64 = 1e-4;
const C5_REFINEMENT: f64 = 0.05;
const C5_BUDGET: Duration = Duration::from_secs(900);
const C6_MASS: f64 = 1e-4;
const C6_METHODS: f64 = 1e-2;
const C6_BUDGET: Duration = Duration::from_secs(300);
const C7_REL: f64 = 1e-2;
const C7_BUDGET: Duration = Duration::from_secs(120);

/// Checks whose constant is built from `C_{BH,s}` with a positive weight
/// exponent. The Hardy inequality with that constant admits counterexamples
/// at n = 1, so these may fail on the battery.
fn uses_hardy_constant(r: &InequalityReport) -> bool {
    let weighted = r.params.beta.is_some_and(|b| b > 0.0);
    match r.name.as_str() {
        "hardy" => true,
        "hardy_sobolev" | "weighted_log_sobolev" | "log_hardy" | "log_hardy_radial" => weighted,
        _ => false,
    }
}

struct Outcome {
    pass: bool,
    detail: String,
    /// A failure that stems only from the Hardy constant.
    known: bool,
}

fn line(id: usize, name: &str, out: &Outcome, elapsed: Duration, budget: Duration) -> bool {
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    println!(
        "{} [{id}] {name}: {} ({:.1} s of {:.0} s)",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    pass || (out.known && in_time)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn cli_constants(s: &str) -> csv::StringRecord {
    let argv: Vec<String> = ["heis", "constants", "--n", "1", "--s", s].iter().map(|a| a.to_string()).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = heisenberg::cli::run_with(&argv, &mut out, &mut err);
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
    let mut rdr = csv::Reader::from_reader(&out[..]);
    let header = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let mut rec = csv::StringRecord::new();
    for (h, v) in header.iter().zip(row.iter()) {
        rec.push_field(&format!("{h}={v}"));
    }
    rec
}

fn field(rec: &csv::StringRecord, name: &str) -> f64 {
    rec.iter()
        .find_map(|kv| kv.strip_prefix(&format!("{name}=")).map(|v| v.parse().unwrap()))
        .unwrap_or_else(|| panic!("missing field {name}"))
}

fn criterion_1() -> Outcome {
    let one = cli_constants("1");
    let half = cli_constants("0.5");
    let errs = [
        rel(field(&one, "c_sobolev_int"), 1.0 / PI),
        rel(field(&one, "c_sobolev"), 1.0 / PI),
        rel(field(&one, "gross_gamma"), 1.0 / (PI * PI)),
        rel(field(&one, "c_hls"), 4.0),
    ];
    let exact = [rel(field(&half, "u_bound"), 1.5f64.sqrt()), rel(field(&half, "v_bound"), 5.0 / 3.0)];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let worst_exact = exact.iter().cloned().fold(0.0, f64::max);
    Outcome {
        pass: worst <= C1_REL && worst_exact <= C1_EXACT,
        detail: format!("max rel err {worst:.1e} (C_B1, γ, C_HLS), {worst_exact:.1e} (U, V bounds)"),
        known: false,
    }
}

fn criterion_2() -> Outcome {
    let v = gross_gamma_limit(1000).unwrap();
    let e = rel(v, (2.0 * PI).powf(-0.5));
    Outcome { pass: e <= C2_REL, detail: format!("γ(1000)^(1/2000) = {v:.6}, rel err {e:.2e}"), known: false }
}

fn criterion_3() -> Outcome {
    let spec = GridSpec::desk(1).unwrap();
    let labels = ["gauss_1_1", "gauss_2_2", "ring", "cos_tau", "hermite_radial"];
    let (mut rt, mut pl, mut form) = (0.0f64, 0.0f64, 0.0f64);
    for (label, f) in heisenberg::inequalities::standard_profiles() {
        if !labels.contains(&label) {
            continue;
        }
        let g = GridFunction::from_real_fn(&spec, f);
        let c = analyze(&g, &AnalysisConfig::default()).unwrap();
        let back = synthesize(&c, &spec).unwrap();
        let num: f64 = back.values.iter().zip(&g.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = g.values.iter().map(|b| b.norm_sqr()).sum();
        rt = rt.max((num / den).sqrt());
        let l2 = lp_norm(&g, 2.0, &Measure::Haar).unwrap().powi(2);
        pl = pl.max(rel(c.energy(&Multiplier::Identity), l2));
        let stencil = dirichlet_form(&g, Convention::Std);
        form = form.max(rel(c.energy(&Multiplier::SubLaplacian), stencil));
    }
    Outcome {
        pass: rt < C3_ROUND_TRIP && pl < C3_PLANCHEREL && form < C3_FORM,
        detail: format!("round trip {rt:.1e}, Plancherel {pl:.1e}, ⟨ℒf,f⟩ vs stencil {form:.1e} on 5 radial functions"),
        known: false,
    }
}

fn chain_deviation(a: &InequalityReport, b: &InequalityReport) -> f64 {
    rel(a.lhs, b.lhs).max(rel(a.rhs, b.rhs))
}

fn criterion_4() -> Outcome {
    let spec = GridSpec::desk(1).unwrap();
    let subjects = standard_battery(&spec).unwrap();
    let balls = ball_battery(&ball_grid().unwrap()).unwrap();
    let opts = CheckOptions { tol: C4_RATIO_SLACK, ..Default::default() };
    let reports = run_suite(Suite::All, &subjects, &balls, &opts).unwrap();
    let functions = subjects.len() + balls.len();

    let mut chain = 0.0f64;
    for subj in subjects.iter().filter(|s| s.is_radial()) {
        for s in [0.25, 0.5, 0.75] {
            let hs0 = check_hardy_sobolev(subj, s, 0.0, &opts).unwrap();
            let sob = check_sobolev(subj, s, Variant::FracPower, &opts).unwrap();
            let hs2 = check_hardy_sobolev(subj, s, 2.0 * s, &opts).unwrap();
            let hardy = check_hardy(subj, s, &opts).unwrap();
            chain = chain.max(chain_deviation(&hs0, &sob)).max(chain_deviation(&hs2, &hardy));
        }
    }
    for subj in subjects.iter().filter(|s| s.is_radial()) {
        let h = check_log_sobolev(subj, 1.0, Variant::Horizontal, &opts).unwrap();
        let f = check_log_sobolev(subj, 1.0, Variant::FracPower, &opts).unwrap();
        chain = chain.max(chain_deviation(&h, &f));
    }

    let failing: Vec<&InequalityReport> = reports.iter().filter(|r| r.verdict != Verdict::Holds).collect();
    let unexplained: Vec<&&InequalityReport> = failing.iter().filter(|r| !uses_hardy_constant(r)).collect();
    let worst = failing.iter().map(|r| r.ratio).fold(f64::NAN, f64::max);
    let mut families: Vec<String> = failing.iter().map(|r| r.name.clone()).collect();
    families.sort();
    families.dedup();
    let chain_ok = chain <= C4_CHAIN;
    let enough = functions >= C4_MIN_FUNCTIONS;
    Outcome {
        pass: failing.is_empty() && chain_ok && enough,
        detail: format!(
            "{} reports on {functions} functions, {} not holding (families {:?}, worst ratio {worst:.4}), {} outside the Hardy-constant checks; chain deviation {chain:.1e}",
            reports.len(),
            failing.len(),
            families,
            unexplained.len()
        ),
        known: unexplained.is_empty() && chain_ok && enough,
    }
}

fn criterion_5() -> Outcome {
    let reference = 1.0 / PI;
    let multi = minimize_sobolev_quotient(&OptimizerConfig { max_iters: 300, ..Default::default() }).unwrap();
    let const_err = rel(multi.implied_constant, reference);

    let coarse_cfg = OptimizerConfig { max_iters: 300, restart_count: 0, ..Default::default() };
    let fine_grid = GridSpec::new(1, 8.0, 8.0, 96, 96).unwrap();
    let coarse = minimize_sobolev_quotient(&coarse_cfg).unwrap();
    let fine = minimize_sobolev_quotient(&OptimizerConfig { grid: fine_grid, ..coarse_cfg }).unwrap();
    let refine = rel(coarse.best_quotient, fine.best_quotient);
    let grad = multi.gradient_check.max(coarse.gradient_check).max(fine.gradient_check);
    Outcome {
        pass: const_err <= C5_CONSTANT && grad <= C5_GRADIENT && refine <= C5_REFINEMENT,
        detail: format!(
            "implied constant {:.5} vs 1/π ({:.1}% off), gradient check {grad:.1e}, quotient {:.4} → {:.4} under grid doubling ({:.2}%)",
            multi.implied_constant,
            100.0 * const_err,
            coarse.best_quotient,
            fine.best_quotient,
            100.0 * refine
        ),
        known: false,
    }
}

fn criterion_6() -> Outcome {
    let spec = heat_grid().unwrap();
    let f0 = GridFunction::from_real_fn(&spec, |x, t| (-0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.5 * t * t).exp());
    let norms = initial_norms(&f0).unwrap();
    let mut bound_ok = true;
    let mut worst_ratio = 0.0f64;
    let mut drift = 0.0f64;
    for method in [HeatMethod::SpectralExp, HeatMethod::ExplicitEuler] {
        let traj = heat_solve(&f0, 2.0, 8, method).unwrap();
        let rep = check_decay_bound(&traj, norms).unwrap();
        // Every sample must sit below the bound; t = 0 attains it.
        bound_ok &= rep.ratio <= 1.0 + 1e-12;
        worst_ratio = worst_ratio.max(rep.ratio);
        drift = drift.max(traj.mass_drift());
    }
    let a = heat_solve(&f0, 0.5, 1, HeatMethod::SpectralExp).unwrap();
    let b = heat_solve(&f0, 0.5, 1, HeatMethod::ExplicitEuler).unwrap();
    let w = quadrature_weights(&spec, &Measure::Haar).unwrap();
    let diff: f64 = w
        .iter()
        .zip(a.final_state.values.iter().zip(&b.final_state.values))
        .map(|(w, (x, y))| w * (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let methods = diff / a.l2_norms[1];
    Outcome {
        pass: bound_ok && drift <= C6_MASS && methods <= C6_METHODS,
        detail: format!(
            "worst ‖f(t)‖₂/bound {worst_ratio:.6} on t ∈ [0, 2], mass drift {drift:.1e}, spectral vs Euler at t=0.5 {methods:.1e}"
        ),
        known: false,
    }
}

fn criterion_7() -> Outcome {
    // v(ξ, τ) = exp(−|ξ|²/8 − τ²/2) on the desk grid and u(ξ, τ) = v(2ξ, τ)
    // on a box with the desk node count sized to u's narrower ξ-support.
    // The two grids are not related by the substitution, so the check
    // measures the continuum identity rather than a discrete tautology.
    let v = |x: &[f64], t: f64| (-(x[0] * x[0] + x[1] * x[1]) / 8.0 - t * t / 2.0).exp();
    let fv = GridFunction::from_real_fn(&GridSpec::desk(1).unwrap(), v);
    let u_spec = GridSpec::new(1, 5.0, 8.0, 96, 96).unwrap();
    let fu = GridFunction::from_real_fn(&u_spec, |x, t| v(&[2.0 * x[0], 2.0 * x[1]], t));
    let lhs = sublaplacian_form(&fu, Convention::FL);
    let rhs = 0.25 * sublaplacian_form(&fv, Convention::Std);
    let e = rel(lhs, rhs);
    Outcome { pass: e <= C7_REL, detail: format!("⟨ℒ̃u,u⟩ = {lhs:.6}, 2^(-2n)⟨ℒv,v⟩ = {rhs:.6}, rel diff {e:.1e}"), known: false }
}

fn main() {
    // `cargo test -- <filter>` passes arguments; run everything regardless.
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 7] = [
        ("constants reproduction", criterion_1, C1_BUDGET),
        ("Stirling limit", criterion_2, C2_BUDGET),
        ("spectral fidelity", criterion_3, C3_BUDGET),
        ("inequality suite", criterion_4, C4_BUDGET),
        ("sharpness probe", criterion_5, C5_BUDGET),
        ("heat decay", criterion_6, C6_BUDGET),
        ("convention bridge", criterion_7, C7_BUDGET),
    ];
    let mut ok = true;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        ok &= line(i + 1, name, &out, start.elapsed(), *budget);
    }
    if !ok {
        std::process::exit(1);
    }
}
