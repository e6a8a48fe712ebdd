//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::{Command as Proc, ExitCode};
use std::time::{Duration, Instant};

use singular_plap::solve::{solve_full, solve_minimal, uniqueness_radius};
use singular_plap::verify::{
    alpha_seminorms, boundary_slope_fit, check_alpha_membership, check_boundary_exponent,
    check_monotone_ladder, measure_delta0, picone_form, BOUNDARY_WINDOW,
};
use singular_plap::{
    build_grid, derived_exponents, find_roots, nonexistence_bound, shot_profile, sweep_lambda, ScanOptions, first_eigenpair, invert_plap, regularization_ladder,
    solve_pure_singular, BifurcationDiagram, BranchTag, Field, GridSpec, LadderProblem,
    LadderResult, ProblemParams, RegIndex, Status,
};
use singular_plap_cli::commands::verification_suite;
use singular_plap_cli::{NegativeControl, RunConfig};

const TOL: f64 = 1e-10;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

struct Suite {
    failures: usize,
}

impl Suite {
    fn run(&mut self, id: &str, name: &str, budget: Duration, f: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let v = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let ok = v.passed && in_time;
        if !ok {
            self.failures += 1;
        }
        println!(
            "criterion {id:<3} {:<4} {name}: {} [{:.1}s / {}s{}]",
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
    }
}

fn model(lambda: f64, reg: RegIndex) -> ProblemParams {
    ProblemParams::new(3, 2.0, 2.0, 2.0, lambda, reg)
}

fn torsion(p: f64, dim: usize) -> Verdict {
    let g = build_grid(2048, 2.0, dim).unwrap();
    let n = dim as f64;
    let pc = p / (p - 1.0);
    let exact = g.from_fn(|r| (p - 1.0) / p * n.powf(-1.0 / (p - 1.0)) * (1.0 - r.powf(pc)));
    let u = invert_plap(&g.from_fn(|_| 1.0), p, 1e-12).unwrap();
    let err = u.sup_distance(&exact) / exact.sup_norm();
    verdict(err <= 1e-4, format!("(p,N)=({p},{dim}) rel sup error {err:.2e} <= 1e-4"))
}

fn eigenvalues() -> Verdict {
    let g3 = build_grid(2048, 1.0, 3).unwrap();
    let g2 = build_grid(2048, 1.0, 2).unwrap();
    let l3 = first_eigenpair(&g3, 2.0).unwrap().lambda1;
    let l2 = first_eigenpair(&g2, 2.0).unwrap().lambda1;
    let pi2 = std::f64::consts::PI.powi(2);
    // j_{0,1} = 2.404825557695773
    let j01 = 2.404825557695773f64.powi(2);
    let (e3, e2) = ((l3 / pi2 - 1.0).abs(), (l2 / j01 - 1.0).abs());
    verdict(
        e3 <= 1e-3 && e2 <= 1e-2,
        format!("N=3: {l3:.6} (rel {e3:.1e}), N=2: {l2:.6} (rel {e2:.1e})"),
    )
}

fn scaling_law() -> Verdict {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (p, delta) in [(2.0, 3.0), (3.0, 1.0)] {
        let g = build_grid(1024, 3.0, 3).unwrap();
        let params = ProblemParams::new(3, p, p, delta, 1.0, RegIndex::Limit);
        let s = derived_exponents(&params).scaling_exp;
        let u1 = solve_pure_singular(&g, &params, TOL).unwrap().u;
        let u16 = solve_pure_singular(&g, &params.with_lambda(16.0), TOL).unwrap().u;
        let defect = u1.scaled(16f64.powf(s)).sup_distance(&u16) / u16.sup_norm();
        worst = worst.max(defect);
        parts.push(format!("(p,δ)=({p},{delta}) {defect:.1e}"));
    }
    verdict(worst <= 1e-6, format!("{} <= 1e-6", parts.join(", ")))
}

fn ladder() -> (Verdict, LadderResult) {
    let g = build_grid(1024, 3.0, 3).unwrap();
    let ns: Vec<u64> = (0..=10).map(|k| 1u64 << k).collect();
    let lad = regularization_ladder(&g, &model(1.0, RegIndex::Limit), &ns, LadderProblem::PureSingular, TOL)
        .unwrap();
    let tol = 1e-8 * lad.max_sup_norm();
    let first = lad.entries[0].1.at(0.5);
    let floor = lad.entries.iter().map(|(_, u)| u.at(0.5)).fold(f64::INFINITY, f64::min);
    let ok = lad.monotone_violation <= tol && first > 0.0 && floor >= first;
    (
        verdict(
            ok,
            format!(
                "violation {:.1e} <= {tol:.1e}, min u_n(1/2) = {floor:.6} >= u_1(1/2) = {first:.6} > 0",
                lad.monotone_violation
            ),
        ),
        lad,
    )
}

struct Structure {
    diagram: BifurcationDiagram,
    fold: f64,
    bound: f64,
}

fn two_solutions(scan: &ScanOptions) -> (Verdict, Option<Structure>) {
    let params = model(0.0, RegIndex::Finite(100));
    let g = build_grid(2048, 3.0, 3).unwrap();
    let eigen = first_eigenpair(&g, 2.0).unwrap();
    let bound = nonexistence_bound(&params, &eigen);
    let lambdas: Vec<f64> = (1..=64).map(|k| bound * k as f64 / 64.0).collect();
    let diagram = sweep_lambda(&params, &lambdas, scan, bound, 4).unwrap();
    let Some(fold) = diagram.fold_lambda else {
        return (verdict(false, "no fold found up to the nonexistence bound"), None);
    };
    let below: Vec<f64> = (1..=32).map(|k| 0.5 * fold * k as f64 / 32.0).collect();
    let counts: Vec<usize> = below
        .iter()
        .map(|&l| find_roots(&params.with_lambda(l), scan).unwrap().len())
        .collect();
    let min_below = counts.iter().copied().min().unwrap();
    let beyond = find_roots(&params.with_lambda(1.1 * fold), scan).unwrap().len();

    // lower shooting root against the Newton minimal solution on a fine mesh
    let mut worst = 0.0f64;
    for frac in [0.1, 0.25, 0.5] {
        let pl = params.with_lambda(frac * fold);
        let roots = find_roots(&pl, scan).unwrap();
        let shot = shot_profile(&pl, roots[0], &g, scan.ode_tol).unwrap();
        let fem = solve_minimal(&g, &pl, TOL).unwrap().u;
        worst = worst.max(shot.sup_distance(&fem));
    }
    let ok = min_below >= 2 && beyond == 0 && fold > 0.0 && fold <= bound && worst <= 1e-4;
    (
        verdict(
            ok,
            format!(
                "Λ_num = {fold:.4} <= Λ̄ = {bound:.2}; min roots on (0, Λ_num/2] = {min_below}; roots at 1.1Λ_num = {beyond}; shooting vs Newton {worst:.1e} <= 1e-4"
            ),
        ),
        Some(Structure { diagram, fold, bound }),
    )
}

fn small_branch_uniqueness(fold: f64) -> Verdict {
    let params = model(0.25 * fold, RegIndex::Finite(100));
    let g = build_grid(1024, 3.0, 3).unwrap();
    let radius = uniqueness_radius(&params);
    let sols: Vec<Field> = [0.2, 0.5, 0.9]
        .iter()
        .map(|c| {
            let seed = g.from_fn(|r| c * radius * (1.0 - r * r));
            solve_full(&g, &params, &seed, &[], TOL).unwrap().u
        })
        .collect();
    let spread = sols
        .iter()
        .flat_map(|a| sols.iter().map(move |b| a.sup_distance(b)))
        .fold(0.0, f64::max);
    let sup = sols[0].sup_norm();
    let ok = spread <= 10.0 * TOL * sup.max(1.0) && sup < radius;
    verdict(
        ok,
        format!(
            "λ = {:.3}: seeds at 0.2/0.5/0.9 of M_n = {radius:.4}; spread {spread:.1e} <= 10·tol; sup {sup:.4}",
            params.lambda
        ),
    )
}

fn delta0(scan: &ScanOptions) -> Verdict {
    let params = model(0.0, RegIndex::Finite(100));
    let d = measure_delta0(&params, scan).unwrap();
    let polish = |m: usize| {
        let g = build_grid(m, 1.0, 3).unwrap();
        let seed = shot_profile(&params, d.delta0, &g, scan.ode_tol).unwrap();
        solve_full(&g, &params, &seed, &[], TOL).unwrap().u.sup_norm()
    };
    let (a, b) = (polish(512), polish(1024));
    let drift = (a / b - 1.0).abs();
    verdict(
        d.roots_below_half == 0 && drift <= 1e-3,
        format!(
            "δ₀ = {:.6}, roots below δ₀/2 = {}, mesh-doubling drift {drift:.1e} <= 1e-3",
            d.delta0, d.roots_below_half
        ),
    )
}

fn boundary_exponent(delta: f64) -> Verdict {
    let g = build_grid(2048, 3.0, 3).unwrap();
    let params = ProblemParams::new(3, 2.0, 2.0, delta, 1.0, RegIndex::Limit);
    let b = derived_exponents(&params).boundary_exp;
    let u = solve_pure_singular(&g, &params, TOL).unwrap().u;
    let slope = boundary_slope_fit(&u, BOUNDARY_WINDOW).unwrap();
    let c = check_boundary_exponent(&u, b, BOUNDARY_WINDOW).unwrap();
    verdict(
        c.passed(),
        format!("(p,δ)=(2,{delta}): fitted {slope:.4} vs {b:.4}, |diff| {:.3} <= 0.05", c.measured),
    )
}

fn alpha_membership() -> Verdict {
    let params = ProblemParams::new(3, 2.0, 2.0, 4.0, 1.0, RegIndex::Limit);
    let thr = derived_exponents(&params).alpha_threshold;
    let base = GridSpec {
        m: 256,
        grading: 3.0,
        dim: 3,
    };
    let rows = alpha_seminorms(&params, base, &[1.25 * thr, 0.4 * thr], 4, TOL).unwrap();
    let checks = check_alpha_membership(&params, &rows);
    let ok = checks.iter().all(|c| c.passed());
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("α={:.4} {:?} ratios {:?}", r.alpha, r.class, r.ratios.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>()))
        .collect();
    verdict(ok, detail.join("; "))
}

fn picone(structure: &Structure) -> Verdict {
    let g = build_grid(2048, 3.0, 3).unwrap();
    let eigen = first_eigenpair(&g, 2.0).unwrap();
    let eq = picone_form(&eigen.phi1, &eigen.phi1, 2.0).unwrap().abs();
    let params = model(0.0, RegIndex::Finite(100));
    let gs = build_grid(1024, 3.0, 3).unwrap();
    let eigen_s = first_eigenpair(&gs, 2.0).unwrap();
    let mut min_form = f64::INFINITY;
    let mut count = 0;
    for pt in &structure.diagram.points {
        let pl = params.with_lambda(pt.lambda);
        let seed = shot_profile(&pl, pt.m_root, &gs, 1e-10).unwrap();
        let Ok(sol) = solve_full(&gs, &pl, &seed, &[], TOL) else {
            continue;
        };
        min_form = min_form.min(picone_form(&sol.u, &eigen_s.phi1, 2.0).unwrap());
        count += 1;
    }
    let total = structure.diagram.points.len();
    verdict(
        eq <= 1e-6 && min_form >= -1e-6 && count == total,
        format!("|form(φ₁,φ₁)| = {eq:.1e} <= 1e-6; min over {count}/{total} sweep solutions {min_form:.3e} >= -1e-6"),
    )
}

fn negative_controls(lad: &LadderResult) -> Verdict {
    let mut entries = lad.entries.clone();
    entries.reverse();
    let permuted = check_monotone_ladder(&LadderResult::from_entries(entries), 1e-8);
    let g = build_grid(1024, 3.0, 3).unwrap();
    let params = model(1.0, RegIndex::Limit);
    let u = solve_pure_singular(&g, &params, TOL).unwrap().u;
    let wrong = check_boundary_exponent(&u, derived_exponents(&params).boundary_exp + 0.25, BOUNDARY_WINDOW).unwrap();

    let mut exits = Vec::new();
    for control in ["permuted_ladder", "wrong_exponent"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, format!(r#"{{"command": "verify", "negative_control": "{control}"}}"#)).unwrap();
        let out = Proc::new(env!("CARGO_BIN_EXE_singular-plap"))
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(dir.path().join("o"))
            .output()
            .unwrap();
        exits.push(out.status.code());
    }
    // the same suite without a control must pass
    let clean = verification_suite(&RunConfig {
        negative_control: None,
        ..RunConfig::default()
    })
    .unwrap()
    .ok();
    let suite_wrong = verification_suite(&RunConfig {
        negative_control: Some(NegativeControl::WrongExponent),
        ..RunConfig::default()
    })
    .unwrap();
    let ok = permuted.status == Status::Fail
        && wrong.status == Status::Fail
        && !suite_wrong.ok()
        && clean
        && exits.iter().all(|c| *c == Some(1));
    verdict(
        ok,
        format!(
            "permuted ladder {:?} ({:.2e}), wrong exponent {:?} ({:.3}); verify exits {exits:?}; clean suite ok = {clean}",
            permuted.status, permuted.measured, wrong.status, wrong.measured
        ),
    )
}

fn main() -> ExitCode {
    let mut suite = Suite { failures: 0 };
    let scan = ScanOptions::default();
    let secs = Duration::from_secs;

    for (id, p, n) in [("1a", 2.0, 2), ("1b", 2.0, 3), ("1c", 3.0, 3)] {
        suite.run(id, "closed-form inversion", secs(10), || torsion(p, n));
    }
    suite.run("2", "first eigenvalue", secs(30), eigenvalues);
    suite.run("3", "scaling law", secs(60), scaling_law);
    let mut lad = None;
    suite.run("4", "monotone ladder", secs(120), || {
        let (v, l) = ladder();
        lad = Some(l);
        v
    });
    let mut structure = None;
    suite.run("5", "two solutions and nonexistence", secs(600), || {
        let (v, s) = two_solutions(&scan);
        structure = s;
        v
    });
    match &structure {
        Some(s) => {
            let fold = s.fold;
            suite.run("6", "small-branch uniqueness", secs(600), || small_branch_uniqueness(fold));
        }
        None => suite.run("6", "small-branch uniqueness", secs(600), || verdict(false, "needs Λ_num from criterion 5")),
    }
    suite.run("7", "delta0 gap", secs(600), || delta0(&scan));
    suite.run("8a", "boundary exponent", secs(300), || boundary_exponent(1.0));
    suite.run("8b", "boundary exponent", secs(300), || boundary_exponent(3.0));
    suite.run("8c", "alpha membership", secs(300), alpha_membership);
    match &structure {
        Some(s) => suite.run("9", "Picone inequality", secs(600), || picone(s)),
        None => suite.run("9", "Picone inequality", secs(600), || verdict(false, "needs the sweep from criterion 5")),
    }
    if let Some(s) = &structure {
        let lower = s.diagram.branch(BranchTag::Lower).len();
        let upper = s.diagram.branch(BranchTag::Upper).len();
        println!("  sweep: {lower} lower and {upper} upper points, Λ̄ = {:.2}", s.bound);
    }
    match &lad {
        Some(l) => suite.run("10", "negative controls", secs(300), || negative_controls(l)),
        None => suite.run("10", "negative controls", secs(300), || verdict(false, "needs the ladder from criterion 4")),
    }
    println!("acceptance: {} failing", suite.failures);
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
