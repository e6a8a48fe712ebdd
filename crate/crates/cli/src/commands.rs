//! One function per subcommand. Each writes its artifacts into the output
//! directory and returns whether every check it ran passed.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use singular_plap::solve::{calibrate_t, calibration_cache_get, calibration_cache_insert};
use singular_plap::verify::{
    alpha_seminorms, check_alpha_membership, check_boundary_exponent, check_comparison,
    check_delta0, check_interior_floor, check_monotone_ladder, check_picone,
    check_picone_equality, check_scaling_law, check_uniform_hopf, measure_delta0,
    ReportContext, BOUNDARY_WINDOW,
};
use singular_plap::{
    derived_exponents, first_eigenpair, invert_plap, nonexistence_bound, regularization_ladder,
    solve_minimal, solve_pure_singular, solve_upper, sweep_lambda, BifurcationDiagram, Check,
    Field, LadderProblem, LadderResult, RadialGrid, RegIndex, SolveResult, VerificationReport,
};

use crate::artifacts::OutputDir;
use crate::config::{Command, NegativeControl, Problem, RunConfig, Seed};
use crate::error::{CliError, CliResult};
use crate::plot::emit_plot;

/// Environment variable naming the directory of cached calibration constants.
pub const CACHE_ENV: &str = "SINGULAR_PLAP_CACHE";

pub const OPEN_RIGHT: &str = "OPEN_RIGHT";

#[derive(Debug)]
pub struct Outcome {
    pub checks_passed: bool,
    pub files: Vec<PathBuf>,
}

/// Validates `config`, runs its command and writes the artifacts. On a solver
/// failure the files written so far stay, next to a `FAILED` marker.
pub fn run(config: &RunConfig) -> CliResult<Outcome> {
    config.validate()?;
    let out = OutputDir::create(config)?;
    let result = match config.command {
        Command::Solve => solve(config, &out),
        Command::Ladder => ladder(config, &out),
        Command::Branch => branch(config, &out),
        Command::Verify => verify(config, &out),
        Command::Calibrate => calibrate(config, &out),
    };
    if let Err(e) = &result {
        out.mark_failed(e);
    }
    result
}

fn grid(config: &RunConfig) -> CliResult<Arc<RadialGrid>> {
    Ok(RadialGrid::from_spec(config.grid_spec())?)
}

fn field_csv(columns: &[(&str, &Field)]) -> String {
    let g = columns[0].1.grid();
    let mut s = String::from("r");
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (i, r) in g.nodes().iter().enumerate() {
        s.push_str(&format!("{r:e}"));
        for (_, f) in columns {
            s.push_str(&format!(",{:e}", f.values()[i]));
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct SolveSummary {
    problem: Problem,
    branch: Option<Seed>,
    residual_sup: f64,
    iterations: usize,
    sup_norm: f64,
    boundary_slope: f64,
}

fn solve(config: &RunConfig, out: &OutputDir) -> CliResult<Outcome> {
    let g = grid(config)?;
    let params = config.params();
    let (res, branch): (SolveResult, Option<Seed>) = match config.problem {
        Problem::PureSingular => (solve_pure_singular(&g, &params, config.tol)?, None),
        Problem::Full => {
            let lower = solve_minimal(&g, &params, config.tol)?;
            match config.seed {
                Seed::Lower => (lower, Some(Seed::Lower)),
                Seed::Upper => (
                    solve_upper(&g, &params, &lower.u, &config.scan(), config.tol)?,
                    Some(Seed::Upper),
                ),
            }
        }
    };
    let files = vec![
        out.write_csv("solution.csv", &field_csv(&[("u", &res.u)]))?,
        out.write_json(
            "solve.json",
            &SolveSummary {
                problem: config.problem,
                branch,
                residual_sup: res.residual_sup,
                iterations: res.iterations,
                sup_norm: res.u.sup_norm(),
                boundary_slope: res.u.boundary_slope(),
            },
        )?,
    ];
    Ok(Outcome {
        checks_passed: true,
        files,
    })
}

#[derive(Serialize)]
struct LadderRow {
    n: u64,
    sup_norm: f64,
    value_at_half: f64,
    boundary_slope: f64,
}

#[derive(Serialize)]
struct LadderSummary {
    problem: Problem,
    rows: Vec<LadderRow>,
    extrapolated_sup_norm: f64,
    monotone_violation: f64,
    checks: Vec<Check>,
}

fn ladder_checks(lad: &LadderResult) -> Vec<Check> {
    vec![
        check_monotone_ladder(lad, 1e-8),
        check_interior_floor(lad),
        check_uniform_hopf(lad),
    ]
}

fn ladder(config: &RunConfig, out: &OutputDir) -> CliResult<Outcome> {
    let g = grid(config)?;
    let problem = match config.problem {
        Problem::Full => LadderProblem::FullLowerBranch,
        Problem::PureSingular => LadderProblem::PureSingular,
    };
    let lad = regularization_ladder(&g, &config.params(), &config.ladder_n, problem, config.tol)?;
    let names: Vec<String> = lad.entries.iter().map(|(n, _)| format!("u_{n}")).collect();
    let mut cols: Vec<(&str, &Field)> = names
        .iter()
        .zip(&lad.entries)
        .map(|(name, (_, u))| (name.as_str(), u))
        .collect();
    cols.push(("extrapolated", &lad.extrapolated_limit));
    let checks = ladder_checks(&lad);
    let passed = checks.iter().all(Check::passed);
    let summary = LadderSummary {
        problem: config.problem,
        rows: lad
            .entries
            .iter()
            .map(|(n, u)| LadderRow {
                n: *n,
                sup_norm: u.sup_norm(),
                value_at_half: u.at(0.5),
                boundary_slope: u.boundary_slope(),
            })
            .collect(),
        extrapolated_sup_norm: lad.extrapolated_limit.sup_norm(),
        monotone_violation: lad.monotone_violation,
        checks,
    };
    let files = vec![
        out.write_csv("ladder.csv", &field_csv(&cols))?,
        out.write_json("ladder.json", &summary)?,
    ];
    Ok(Outcome {
        checks_passed: passed,
        files,
    })
}

#[derive(Serialize)]
struct BranchSummary {
    fold_lambda: Option<f64>,
    picone_bound: f64,
    lambda1: f64,
    lambdas: Vec<f64>,
    root_counts: Vec<(f64, usize)>,
    flags: Vec<&'static str>,
}

/// `OPEN_RIGHT` when every swept λ still carries two roots.
pub fn diagram_flags(diagram: &BifurcationDiagram) -> Vec<&'static str> {
    if diagram.fold_lambda.is_none() && diagram.root_counts.iter().all(|(_, k)| *k >= 2) {
        vec![OPEN_RIGHT]
    } else {
        Vec::new()
    }
}

fn branch(config: &RunConfig, out: &OutputDir) -> CliResult<Outcome> {
    let g = grid(config)?;
    let params = config.params();
    let eigen = first_eigenpair(&g, params.p)?;
    let bound = nonexistence_bound(&params, &eigen);
    let lambdas = config.lambda_grid(config.lambda_max.unwrap_or(bound));
    let diagram = sweep_lambda(&params, &lambdas, &config.scan(), bound, config.workers)?;
    let mut files = vec![out.write_csv("diagram.csv", &diagram.to_csv())?];
    let fold_ok = diagram.fold_lambda.is_none_or(|f| f <= bound);
    let summary = BranchSummary {
        fold_lambda: diagram.fold_lambda,
        picone_bound: bound,
        lambda1: eigen.lambda1,
        lambdas,
        root_counts: diagram.root_counts.clone(),
        flags: diagram_flags(&diagram),
    };
    files.push(out.write_json("summary.json", &summary)?);
    let svg = out.path("diagram.svg");
    emit_plot(&diagram, &svg)?;
    files.push(svg);
    Ok(Outcome {
        checks_passed: fold_ok,
        files,
    })
}

/// The desk-scale suite for the configured exponents, plus the requested
/// negative control.
pub fn verification_suite(config: &RunConfig) -> CliResult<VerificationReport> {
    let g = grid(config)?;
    let params = config.params();
    let limit = params.with_reg(RegIndex::Limit);
    let ex = derived_exponents(&params);
    let tol = config.tol;
    let mut checks = Vec::new();

    let lambda = if params.lambda > 0.0 { params.lambda } else { 1.0 };
    checks.push(check_scaling_law(&g, &limit.with_lambda(lambda), &[(lambda, 16.0 * lambda)], tol, 1e-6)?);

    let lad = regularization_ladder(&g, &params.with_lambda(lambda), &config.ladder_n, LadderProblem::PureSingular, tol)?;
    checks.extend(ladder_checks(&lad));

    let eigen = first_eigenpair(&g, params.p)?;
    checks.push(check_picone_equality(&eigen, params.p, 1e-6)?);
    let minimal = solve_minimal(&g, &params.with_lambda(lambda), tol)?;
    checks.push(check_picone(&minimal.u, &eigen, params.p, 1e-6)?);

    let singular = solve_pure_singular(&g, &limit.with_lambda(1.0), tol)?.u;
    checks.push(check_boundary_exponent(&singular, ex.boundary_exp, BOUNDARY_WINDOW)?);

    let base = singular_plap::GridSpec {
        m: (config.m / 4).max(64),
        ..config.grid_spec()
    };
    let alphas = [1.25 * ex.alpha_threshold, 0.4 * ex.alpha_threshold];
    let rows = alpha_seminorms(&limit.with_lambda(1.0), base, &alphas, 3, tol)?;
    checks.extend(check_alpha_membership(&params, &rows));

    checks.push(check_delta0(&measure_delta0(&params, &config.scan())?));

    let f_u = g.from_fn(|_| 2.0);
    let f_v = g.from_fn(|_| 1.0);
    let (u, v) = (invert_plap(&f_u, params.p, tol)?, invert_plap(&f_v, params.p, tol)?);
    checks.push(check_comparison(&u, &v, &f_u, &f_v)?);

    match config.negative_control {
        Some(NegativeControl::PermutedLadder) => {
            let mut entries = lad.entries.clone();
            entries.reverse();
            let mut c = check_monotone_ladder(&LadderResult::from_entries(entries), 1e-8);
            c.name = "control_permuted_ladder".into();
            checks.push(c);
        }
        Some(NegativeControl::WrongExponent) => {
            let mut c = check_boundary_exponent(&singular, ex.boundary_exp + 0.25, BOUNDARY_WINDOW)?;
            c.name = "control_wrong_exponent".into();
            checks.push(c);
        }
        None => {}
    }
    Ok(VerificationReport::new(
        checks,
        ReportContext {
            params,
            grid: config.grid_spec(),
        },
    ))
}

fn verify(config: &RunConfig, out: &OutputDir) -> CliResult<Outcome> {
    let report = verification_suite(config)?;
    let files = vec![
        out.write_json("report.json", &report)?,
        out.write_text("report.txt", &report.to_table())?,
    ];
    Ok(Outcome {
        checks_passed: report.ok(),
        files,
    })
}

#[derive(Serialize, serde::Deserialize)]
struct Calibration {
    t: f64,
    p: f64,
    delta: f64,
    grid: singular_plap::GridSpec,
}

fn cache_file(dir: &Path, config: &RunConfig) -> PathBuf {
    dir.join(format!(
        "t_N{}_p{}_delta{}_m{}_g{}.json",
        config.dim, config.p, config.delta, config.m, config.grading
    ))
}

/// Reads `T` from the cache directory when present, otherwise computes it and
/// stores it there. The in-process cache is seeded either way.
pub fn calibrated_t(config: &RunConfig, tol: f64) -> CliResult<f64> {
    let g = grid(config)?;
    if let Some(t) = calibration_cache_get(&g, config.p, config.delta) {
        return Ok(t);
    }
    let dir = std::env::var_os(CACHE_ENV).map(PathBuf::from);
    if let Some(dir) = &dir {
        let path = cache_file(dir, config);
        if let Ok(text) = std::fs::read_to_string(&path) {
            let cal: Calibration = serde_json::from_str(&text)
                .map_err(|e| CliError::config(CACHE_ENV, format!("{}: {e}", path.display())))?;
            if cal.grid == config.grid_spec() {
                return Ok(calibration_cache_insert(&g, config.p, config.delta, cal.t));
            }
        }
    }
    let t = calibrate_t(&g, config.p, config.delta, tol)?;
    if let Some(dir) = &dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = cache_file(dir, config);
        let cal = Calibration {
            t,
            p: config.p,
            delta: config.delta,
            grid: config.grid_spec(),
        };
        let text = serde_json::to_string_pretty(&cal).expect("calibration serializes");
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(t)
}

fn calibrate(config: &RunConfig, out: &OutputDir) -> CliResult<Outcome> {
    let t = calibrated_t(config, config.tol)?;
    let files = vec![out.write_json(
        "calibration.json",
        &Calibration {
            t,
            p: config.p,
            delta: config.delta,
            grid: config.grid_spec(),
        },
    )?];
    Ok(Outcome {
        checks_passed: true,
        files,
    })
}
