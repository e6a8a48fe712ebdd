//! Numerical checks of the qualitative properties of the problem, collected
//! into a [`VerificationReport`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::branch::{find_roots, ScanOptions};
use crate::eigen::EigenPair;
use crate::error::{Error, Result};
use crate::grid::{integrate, seminorm_p, Field, GridSpec, RadialGrid};
use crate::params::{derived_exponents, ProblemParams, RegIndex};
use crate::plap::phi_p;
use crate::solve::{solve_pure_singular, LadderResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured <= tolerance`
    AtMost,
    /// `measured >= tolerance`
    AtLeast,
    /// `measured > tolerance`
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Reported but neither passed nor failed.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// What the check establishes, in words.
    pub claim: String,
    pub measured: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub status: Status,
}

impl Check {
    pub fn new(name: &str, claim: &str, measured: f64, tolerance: f64, comparison: Comparison) -> Self {
        let ok = match comparison {
            Comparison::AtMost => measured <= tolerance,
            Comparison::AtLeast => measured >= tolerance,
            Comparison::Above => measured > tolerance,
        };
        Self {
            name: name.to_string(),
            claim: claim.to_string(),
            measured,
            tolerance,
            comparison,
            status: if ok { Status::Pass } else { Status::Fail },
        }
    }

    pub fn inconclusive(mut self) -> Self {
        self.status = Status::Inconclusive;
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportContext {
    pub params: ProblemParams,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub context: ReportContext,
}

impl VerificationReport {
    /// Checks are kept sorted by name.
    pub fn new(mut checks: Vec<Check>, context: ReportContext) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        Self { checks, context }
    }

    /// True iff no check failed; inconclusive checks do not count.
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(5);
        let mut s = format!("{:<w$}  {:<12}  {:>14}  {:>4}  {:>12}\n", "check", "status", "measured", "", "tolerance");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Inconclusive => "inconclusive",
            };
            let op = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
                Comparison::Above => ">",
            };
            s.push_str(&format!(
                "{:<w$}  {:<12}  {:>14.6e}  {:>4}  {:>12.4e}\n",
                c.name, status, c.measured, op, c.tolerance
            ));
        }
        s
    }
}

/// Relative defect of the exact λ-scaling between independent limit solves.
pub fn check_scaling_law(
    grid: &Arc<RadialGrid>,
    params: &ProblemParams,
    lambda_pairs: &[(f64, f64)],
    solver_tol: f64,
    tol: f64,
) -> Result<Check> {
    let params = params.with_reg(RegIndex::Limit);
    let s = derived_exponents(&params).scaling_exp;
    let mut worst = 0.0f64;
    for &(a, b) in lambda_pairs {
        if a == b {
            continue;
        }
        let ua = solve_pure_singular(grid, &params.with_lambda(a), solver_tol)?.u;
        let ub = solve_pure_singular(grid, &params.with_lambda(b), solver_tol)?.u;
        let pred = ua.scaled((b / a).powf(s));
        worst = worst.max(pred.sup_distance(&ub) / ub.sup_norm());
    }
    Ok(Check::new(
        "scaling_law",
        "limit pure singular solutions scale like lambda^(1/(delta+p-1))",
        worst,
        tol,
        Comparison::AtMost,
    ))
}

/// Monotone violation against `tol · max sup-norm`.
pub fn check_monotone_ladder(ladder: &LadderResult, tol: f64) -> Check {
    Check::new(
        "monotone_ladder",
        "regularized solutions increase with n",
        ladder.monotone_violation,
        tol * ladder.max_sup_norm(),
        Comparison::AtMost,
    )
}

/// Interior floor `min_n u_n(1/2) >= u_1(1/2) > 0`; measured is the margin.
pub fn check_interior_floor(ladder: &LadderResult) -> Check {
    let first = ladder.entries[0].1.at(0.5);
    let min = ladder
        .entries
        .iter()
        .map(|(_, u)| u.at(0.5))
        .fold(f64::INFINITY, f64::min);
    let measured = if first > 0.0 { min - first } else { f64::NEG_INFINITY };
    Check::new(
        "interior_floor",
        "u_n(1/2) stays above u_1(1/2) > 0 along the ladder",
        measured,
        -1e-12 * first.abs(),
        Comparison::AtLeast,
    )
}

/// Smallest one-sided boundary slope along the ladder against half the
/// slope of its first member.
pub fn check_uniform_hopf(ladder: &LadderResult) -> Check {
    let slopes: Vec<f64> = ladder.entries.iter().map(|(_, u)| u.boundary_slope()).collect();
    let c0 = 0.5 * slopes[0];
    let min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let mut c = Check::new(
        "uniform_hopf",
        "boundary slopes stay bounded away from zero uniformly in n",
        min,
        c0,
        Comparison::AtLeast,
    );
    if !(c0 > 0.0) {
        c.status = Status::Fail;
    }
    c
}

/// `∫|∇φ|^p - ∫∇(φ^p/u^(p-1))·|∇u|^(p-2)∇u` by the cell quadrature, with
/// `φ^p/u^(p-1)` taken as 0 at the boundary node.
pub fn picone_form(u: &Field, phi: &Field, p: f64) -> Result<f64> {
    if !u.same_grid(phi) {
        return Err(Error::GridMismatch);
    }
    let g = u.grid();
    let m = g.m();
    if let Some((node, &value)) = u.values()[..m].iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NonpositiveInterior { node, value });
    }
    let psi: Vec<f64> = (0..=m)
        .map(|i| {
            if i == m {
                0.0
            } else {
                phi.values()[i].abs().powf(p) / u.values()[i].powf(p - 1.0)
            }
        })
        .collect();
    let (du, dphi) = (u.slopes(), phi.slopes());
    let geo = g.geometry(p);
    let mut total = 0.0;
    for c in 0..m {
        let h = g.widths()[c];
        let dpsi = (psi[c + 1] - psi[c]) / h;
        total += geo.faces[c] * h * (dphi[c].abs().powf(p) - dpsi * phi_p(du[c], p));
    }
    Ok(total)
}

pub fn check_picone(u: &Field, eigen: &EigenPair, p: f64, tol: f64) -> Result<Check> {
    let measured = picone_form(u, &eigen.phi1, p)?;
    Ok(Check::new(
        "picone",
        "the Picone form of the first eigenfunction against u is nonnegative",
        measured,
        -tol,
        Comparison::AtLeast,
    ))
}

/// `|picone_form(φ₁, φ₁)|`, the equality case.
pub fn check_picone_equality(eigen: &EigenPair, p: f64, tol: f64) -> Result<Check> {
    let measured = picone_form(&eigen.phi1, &eigen.phi1, p)?.abs();
    Ok(Check::new(
        "picone_equality",
        "the Picone form vanishes at the eigenfunction",
        measured,
        tol,
        Comparison::AtMost,
    ))
}

/// Least-squares slope of `log u` against `log(1-r)` over nodes with
/// `1 - r ∈ [window.0, window.1]`.
pub fn boundary_slope_fit(u: &Field, window: (f64, f64)) -> Result<f64> {
    let g = u.grid();
    let pts: Vec<(f64, f64)> = g
        .nodes()
        .iter()
        .zip(u.values())
        .filter(|(r, v)| {
            let d = 1.0 - **r;
            d >= window.0 && d <= window.1 && **v > 0.0
        })
        .map(|(r, v)| ((1.0 - r).ln(), v.ln()))
        .collect();
    const NEED: usize = 5;
    if pts.len() < NEED {
        return Err(Error::WindowTooSmall {
            got: pts.len(),
            need: NEED,
        });
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    Ok(sxy / sxx)
}

pub const BOUNDARY_WINDOW: (f64, f64) = (1e-4, 1e-2);

/// `|fitted slope - expected|` against 0.05.
pub fn check_boundary_exponent(u: &Field, expected: f64, window: (f64, f64)) -> Result<Check> {
    let slope = boundary_slope_fit(u, window)?;
    Ok(Check::new(
        "boundary_exponent",
        "u vanishes at the boundary like (1-r)^(p/(delta+p-1))",
        (slope - expected).abs(),
        0.05,
        Comparison::AtMost,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Bounded,
    Diverging,
    Inconclusive,
}

/// Classifies successive seminorm ratios.
pub fn classify_ratios(ratios: &[f64]) -> Membership {
    if ratios.iter().all(|&r| r <= 1.05) {
        Membership::Bounded
    } else if ratios.iter().all(|&r| r >= 1.2) {
        Membership::Diverging
    } else {
        Membership::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub seminorms: Vec<f64>,
    pub ratios: Vec<f64>,
    pub class: Membership,
}

/// `‖∇(u^α)‖_p^p` on `refinements` successive doublings of `base`, for the
/// limit pure singular solution.
pub fn alpha_seminorms(
    params: &ProblemParams,
    base: GridSpec,
    alphas: &[f64],
    refinements: usize,
    solver_tol: f64,
) -> Result<Vec<AlphaRow>> {
    let params = params.with_reg(RegIndex::Limit);
    let mut sols = Vec::with_capacity(refinements);
    for k in 0..refinements {
        let g = RadialGrid::build(base.m << k, base.grading, base.dim)?;
        sols.push(solve_pure_singular(&g, &params, solver_tol)?.u);
    }
    Ok(alphas
        .iter()
        .map(|&alpha| {
            let seminorms: Vec<f64> = sols
                .iter()
                .map(|u| seminorm_p(&u.map(|v| v.max(0.0).powf(alpha)), params.p))
                .collect();
            let ratios: Vec<f64> = seminorms.windows(2).map(|w| w[1] / w[0]).collect();
            AlphaRow {
                alpha,
                class: classify_ratios(&ratios),
                seminorms,
                ratios,
            }
        })
        .collect())
}

/// One check per α: above the threshold the seminorm must stay bounded,
/// below half of it it must diverge; other α, and gray-zone ratios, are
/// reported as inconclusive.
pub fn check_alpha_membership(params: &ProblemParams, rows: &[AlphaRow]) -> Vec<Check> {
    let thr = derived_exponents(params).alpha_threshold;
    rows.iter()
        .map(|row| {
            let name = format!("alpha_membership[{:.4}]", row.alpha);
            let max_ratio = row.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min_ratio = row.ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let check = if row.alpha > thr {
                Check::new(&name, "u^alpha has bounded energy above the threshold", max_ratio, 1.05, Comparison::AtMost)
            } else if row.alpha < 0.5 * thr {
                Check::new(&name, "u^alpha has unbounded energy well below the threshold", min_ratio, 1.2, Comparison::AtLeast)
            } else {
                Check::new(&name, "u^alpha near the threshold", max_ratio, 1.05, Comparison::AtMost).inconclusive()
            };
            if row.class == Membership::Inconclusive && check.status == Status::Fail {
                check.inconclusive()
            } else {
                check
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta0 {
    pub delta0: f64,
    pub roots: Vec<f64>,
    pub roots_below_half: usize,
}

/// Smallest sup-norm among the `λ = 0` shooting roots, plus a 100-point scan
/// of `(0, δ₀/2)` that must find nothing.
pub fn measure_delta0(params: &ProblemParams, scan: &ScanOptions) -> Result<Delta0> {
    let p0 = params.with_lambda(0.0);
    let roots = find_roots(&p0, scan)?;
    let delta0 = *roots
        .first()
        .ok_or_else(|| Error::InvalidArgument("no ground state in the scan range".into()))?;
    let sub = ScanOptions {
        m_lo: 1e-3 * delta0,
        m_hi: 0.5 * delta0,
        resolution: 100,
        ode_tol: scan.ode_tol,
    };
    let below = find_roots(&p0, &sub)?.len();
    Ok(Delta0 {
        delta0,
        roots,
        roots_below_half: below,
    })
}

pub fn check_delta0(measured: &Delta0) -> Check {
    Check::new(
        "delta0_gap",
        "no solution of the power problem has sup-norm below delta0/2",
        measured.roots_below_half as f64,
        0.0,
        Comparison::AtMost,
    )
}

/// Strong comparison for `u = (-Δp)⁻¹ f_u`, `v = (-Δp)⁻¹ f_v`, `f_u >= f_v >= 0`.
pub fn check_comparison(u: &Field, v: &Field, f_u: &Field, f_v: &Field) -> Result<Check> {
    let m = u.grid().m();
    if !(u.same_grid(v) && u.same_grid(f_u) && u.same_grid(f_v)) {
        return Err(Error::GridMismatch);
    }
    let ordered = f_u.values()[..m]
        .iter()
        .zip(&f_v.values()[..m])
        .all(|(a, b)| a >= b && *b >= 0.0);
    if !ordered {
        return Err(Error::PreconditionNotMet("loads must satisfy f_u >= f_v >= 0"));
    }
    let gap = f_u.zip_map(f_v, |a, b| a - b)?;
    if !(integrate(&gap) > 0.0) {
        return Err(Error::PreconditionNotMet("loads coincide almost everywhere"));
    }
    let interior = (0..m)
        .map(|i| u.values()[i] - v.values()[i])
        .fold(f64::INFINITY, f64::min);
    let slope = u.boundary_slope() - v.boundary_slope();
    Ok(Check::new(
        "strong_comparison",
        "a larger load gives a strictly larger solution and steeper boundary slope",
        interior.min(slope),
        0.0,
        Comparison::Above,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::first_eigenpair;
    use crate::grid::build_grid;
    use crate::solve::invert_plap;

    #[test]
    fn comparison_with_doubled_load() {
        let g = build_grid(256, 1.0, 3).unwrap();
        for (p, factor) in [(2.0, 2.0), (3.0, 2f64.sqrt())] {
            let fu = g.from_fn(|_| 2.0);
            let fv = g.from_fn(|_| 1.0);
            let u = invert_plap(&fu, p, 1e-12).unwrap();
            let v = invert_plap(&fv, p, 1e-12).unwrap();
            assert!(u.sup_distance(&v.scaled(factor)) < 1e-12);
            assert!(check_comparison(&u, &v, &fu, &fv).unwrap().passed());
        }
        let one = g.from_fn(|_| 1.0);
        let v = invert_plap(&one, 2.0, 1e-12).unwrap();
        assert!(matches!(
            check_comparison(&v, &v, &one, &one),
            Err(Error::PreconditionNotMet(_))
        ));
    }

    #[test]
    fn picone_sign_and_equality() {
        let g = build_grid(1024, 1.0, 3).unwrap();
        let e = first_eigenpair(&g, 2.0).unwrap();
        assert!(check_picone_equality(&e, 2.0, 1e-6).unwrap().passed());
        let torsion = invert_plap(&g.from_fn(|_| 1.0), 2.0, 1e-12).unwrap();
        let val = picone_form(&torsion, &e.phi1, 2.0).unwrap();
        assert!(val > 0.0);
    }

    #[test]
    fn exponent_fit_rejects_the_eigenfunction() {
        let g = build_grid(2048, 3.0, 3).unwrap();
        let e = first_eigenpair(&g, 2.0).unwrap();
        let slope = boundary_slope_fit(&e.phi1, BOUNDARY_WINDOW).unwrap();
        assert!((slope - 1.0).abs() < 0.02);
        assert!(!check_boundary_exponent(&e.phi1, 0.5, BOUNDARY_WINDOW).unwrap().passed());
        let coarse = build_grid(16, 1.0, 3).unwrap();
        assert!(matches!(
            boundary_slope_fit(&coarse.from_fn(|r| 1.0 - r), BOUNDARY_WINDOW),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn ratio_classification() {
        assert_eq!(classify_ratios(&[1.01, 1.0]), Membership::Bounded);
        assert_eq!(classify_ratios(&[1.5, 2.0]), Membership::Diverging);
        assert_eq!(classify_ratios(&[1.1, 1.1]), Membership::Inconclusive);
    }

    #[test]
    fn report_is_sorted_and_tabulated() {
        let ctx = ReportContext {
            params: ProblemParams::new(3, 2.0, 2.0, 2.0, 0.1, RegIndex::Limit),
            grid: GridSpec { m: 64, grading: 1.0, dim: 3 },
        };
        let r = VerificationReport::new(
            vec![
                Check::new("b", "second", 1.0, 0.5, Comparison::AtMost),
                Check::new("a", "first", 1.0, 0.5, Comparison::AtLeast),
            ],
            ctx,
        );
        assert_eq!(r.checks[0].name, "a");
        assert!(!r.ok());
        assert!(r.to_table().contains("FAIL"));
        let json = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
