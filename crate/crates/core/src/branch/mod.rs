//! Radial solution enumeration by shooting, λ-sweeps, fold estimation and
//! the closed-form nonexistence bound.

mod ode;
mod shoot;

pub use shoot::{shoot, shot_profile, ShotKind, ShotOutcome, LIMIT_LADDER};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenPair;
use crate::error::{Error, Result};
use crate::params::ProblemParams;

/// Settings shared by every shooting-based search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub m_lo: f64,
    pub m_hi: f64,
    /// Number of geometric samples in `[m_lo, m_hi]`.
    pub resolution: usize,
    pub ode_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            m_lo: 1e-3,
            m_hi: 1e3,
            resolution: 400,
            ode_tol: 1e-10,
        }
    }
}

impl ScanOptions {
    fn samples(&self) -> Vec<f64> {
        let k = self.resolution.max(2);
        let ratio = (self.m_hi / self.m_lo).ln();
        (0..k)
            .map(|i| self.m_lo * (ratio * i as f64 / (k - 1) as f64).exp())
            .collect()
    }
}

fn gauge(params: &ProblemParams, m: f64, tol: f64) -> Result<f64> {
    Ok(shoot(params, m, tol)?.gauge)
}

/// Sign changes of the gauge on a geometric scan, bisected to 1e-10 relative.
pub fn find_roots(params: &ProblemParams, scan: &ScanOptions) -> Result<Vec<f64>> {
    if !(scan.m_lo > 0.0 && scan.m_lo < scan.m_hi) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < M_lo < M_hi, got [{}, {}]",
            scan.m_lo, scan.m_hi
        )));
    }
    let ms = scan.samples();
    let gs = ms
        .iter()
        .map(|&m| gauge(params, m, scan.ode_tol))
        .collect::<Result<Vec<f64>>>()?;
    let mut roots = Vec::new();
    for k in 0..ms.len() - 1 {
        let (g0, g1) = (gs[k], gs[k + 1]);
        if g0 == 0.0 {
            roots.push(ms[k]);
            continue;
        }
        if g0.signum() == g1.signum() || g1 == 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (ms[k], ms[k + 1]);
        let mut glo = g0;
        while (hi - lo) > 1e-10 * hi {
            let mid = 0.5 * (lo + hi);
            let gm = gauge(params, mid, scan.ode_tol)?;
            if gm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if gm.signum() == glo.signum() {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    if let Some(&g) = gs.last() {
        if g == 0.0 {
            roots.push(*ms.last().unwrap());
        }
    }
    Ok(roots)
}

/// Largest gauge value over the scan, refined by golden section in `log M`.
pub fn gauge_peak(params: &ProblemParams, scan: &ScanOptions) -> Result<(f64, f64)> {
    let ms = scan.samples();
    let gs = ms
        .iter()
        .map(|&m| gauge(params, m, scan.ode_tol))
        .collect::<Result<Vec<f64>>>()?;
    let best = gs
        .iter()
        .enumerate()
        .fold(0, |b, (i, g)| if *g > gs[b] { i } else { b });
    let lo = ms[best.saturating_sub(1)].ln();
    let hi = ms[(best + 1).min(ms.len() - 1)].ln();
    let f = |x: f64| gauge(params, x.exp(), scan.ode_tol);
    let (x, v) = golden_max(f, lo, hi, 1e-10)?;
    if v >= gs[best] {
        Ok((x.exp(), v))
    } else {
        Ok((ms[best], gs[best]))
    }
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchTag {
    Lower,
    Upper,
}

impl std::fmt::Display for BranchTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BranchTag::Lower => "lower",
            BranchTag::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m_root: f64,
    pub sup_norm: f64,
    pub branch: BranchTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub points: Vec<DiagramPoint>,
    /// `None` when every swept λ still carries two roots.
    pub fold_lambda: Option<f64>,
    pub picone_bound: f64,
    /// Number of roots found at each swept λ, in sweep order.
    pub root_counts: Vec<(f64, usize)>,
}

impl BifurcationDiagram {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn branch(&self, tag: BranchTag) -> Vec<DiagramPoint> {
        self.points.iter().filter(|p| p.branch == tag).copied().collect()
    }

    /// Diagram CSV with columns `lambda,branch,M,sup_norm`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,branch,M,sup_norm\n");
        for p in &self.points {
            s.push_str(&format!("{:e},{},{:e},{:e}\n", p.lambda, p.branch, p.m_root, p.sup_norm));
        }
        s
    }
}

/// Tags roots by nearest match (in `log M`) to the previous λ's tagged roots.
fn tag_roots(roots: &[f64], previous: &[(f64, BranchTag)]) -> Vec<(f64, BranchTag)> {
    if previous.is_empty() {
        return roots
            .iter()
            .enumerate()
            .map(|(i, &m)| (m, if i == 0 { BranchTag::Lower } else { BranchTag::Upper }))
            .collect();
    }
    roots
        .iter()
        .map(|&m| {
            let nearest = previous
                .iter()
                .min_by(|a, b| {
                    let da = (a.0.ln() - m.ln()).abs();
                    let db = (b.0.ln() - m.ln()).abs();
                    da.total_cmp(&db)
                })
                .expect("nonempty");
            (m, nearest.1)
        })
        .collect()
}

/// Two roots exist iff the gauge hump rises above zero.
fn has_two_roots(params: &ProblemParams, lambda: f64, scan: &ScanOptions) -> Result<bool> {
    Ok(gauge_peak(&params.with_lambda(lambda), scan)?.1 > 0.0)
}

/// Bisects "two roots" between `lo` (true) and `hi` (false) to `rel` relative.
pub fn refine_fold(params: &ProblemParams, mut lo: f64, mut hi: f64, scan: &ScanOptions, rel: f64) -> Result<f64> {
    while hi - lo > rel * hi {
        let mid = 0.5 * (lo + hi);
        if has_two_roots(params, mid, scan)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Root sets at every λ, computed on `workers` threads, in grid order.
pub fn roots_on_grid(
    params: &ProblemParams,
    lambdas: &[f64],
    scan: &ScanOptions,
    workers: usize,
) -> Result<Vec<Vec<f64>>> {
    pool(workers)?.install(|| {
        lambdas
            .par_iter()
            .map(|&l| find_roots(&params.with_lambda(l), scan))
            .collect()
    })
}

pub fn sweep_lambda(
    params: &ProblemParams,
    lambdas: &[f64],
    scan: &ScanOptions,
    picone_bound: f64,
    workers: usize,
) -> Result<BifurcationDiagram> {
    if lambdas.windows(2).any(|w| w[0] >= w[1]) || lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidArgument("lambda grid must be ascending and nonnegative".into()));
    }
    let roots = roots_on_grid(params, lambdas, scan, workers)?;
    let mut points = Vec::new();
    let mut previous: Vec<(f64, BranchTag)> = Vec::new();
    for (&lambda, rs) in lambdas.iter().zip(&roots) {
        let tagged = tag_roots(rs, &previous);
        for &(m, branch) in &tagged {
            points.push(DiagramPoint {
                lambda,
                m_root: m,
                // u is radially decreasing, so the sup is the centre value
                sup_norm: m,
                branch,
            });
        }
        if !tagged.is_empty() {
            previous = tagged;
        }
    }
    let fold_lambda = match roots.iter().position(|r| r.len() < 2) {
        Some(0) | None => None,
        Some(k) => Some(refine_fold(params, lambdas[k - 1], lambdas[k], scan, 1e-4)?),
    };
    Ok(BifurcationDiagram {
        points,
        fold_lambda,
        picone_bound,
        root_counts: lambdas.iter().copied().zip(roots.iter().map(Vec::len)).collect(),
    })
}

/// `Λ̄ = max_s (λ₁ s^(p-1) - s^q)(s+1)^δ` over `s ∈ [0, λ₁^(1/(q-p+1))]`.
pub fn nonexistence_bound(params: &ProblemParams, eigen: &EigenPair) -> f64 {
    let (p, q, d) = (params.p, params.q, params.delta);
    let l1 = eigen.lambda1;
    let g = |s: f64| (l1 * s.powf(p - 1.0) - s.powf(q)) * (s + 1.0).powf(d);
    let s_max = l1.powf(1.0 / (q - p + 1.0));
    let k = 256;
    let best = (0..=k)
        .map(|i| s_max * i as f64 / k as f64)
        .fold(0.0f64, |b, s| if g(s) > g(b) { s } else { b });
    let h = s_max / k as f64;
    let (lo, hi) = ((best - h).max(0.0), (best + h).min(s_max));
    golden_max(|s| Ok(g(s)), lo, hi, 1e-13)
        .map(|(_, v)| v.max(g(best)))
        .unwrap_or_else(|_: Error| g(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::first_eigenpair;
    use crate::grid::build_grid;
    use crate::params::RegIndex;

    fn model(lambda: f64) -> ProblemParams {
        ProblemParams::new(3, 2.0, 2.0, 2.0, lambda, RegIndex::Finite(100))
    }

    fn coarse() -> ScanOptions {
        ScanOptions {
            resolution: 120,
            ..ScanOptions::default()
        }
    }

    #[test]
    fn ground_state_is_the_only_root_at_zero_lambda() {
        let roots = find_roots(&model(0.0), &coarse()).unwrap();
        assert_eq!(roots.len(), 1);
        // oracle: Lane–Emden index 2, M = ξ₁² with ξ₁ = 4.352874595945
        assert!((roots[0] / 18.947517248031 - 1.0).abs() < 1e-6, "{roots:?}");
    }

    #[test]
    fn two_roots_at_small_lambda() {
        let roots = find_roots(&model(1.0), &coarse()).unwrap();
        assert_eq!(roots.len(), 2, "{roots:?}");
        assert!(roots[0] < roots[1]);
    }

    #[test]
    fn closed_form_bound_without_singularity() {
        let g = build_grid(512, 1.0, 3).unwrap();
        let e = first_eigenpair(&g, 2.0).unwrap();
        let params = ProblemParams::new(3, 2.0, 2.0, 1e-300, 1.0, RegIndex::Limit);
        let bar = nonexistence_bound(&params, &e);
        let expect = e.lambda1 * e.lambda1 / 4.0;
        assert!((bar - expect).abs() < 1e-9 * expect);
        assert!(nonexistence_bound(&model(1.0), &e) > 0.0);
    }

    #[test]
    fn empty_grid_gives_empty_diagram() {
        let d = sweep_lambda(&model(0.0), &[], &coarse(), 1.0, 1).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.fold_lambda, None);
    }

    #[test]
    fn tagging_follows_continuity() {
        let prev = vec![(0.5, BranchTag::Lower), (15.0, BranchTag::Upper)];
        let tagged = tag_roots(&[0.7, 14.0], &prev);
        assert_eq!(tagged[0].1, BranchTag::Lower);
        assert_eq!(tagged[1].1, BranchTag::Upper);
        let fresh = tag_roots(&[1.0, 2.0], &[]);
        assert_eq!(fresh[0].1, BranchTag::Lower);
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, v) = golden_max(|x| Ok(-(x - 0.3) * (x - 0.3) + 2.0), -1.0, 1.0, 1e-12).unwrap();
        assert!((x - 0.3).abs() < 1e-6 && (v - 2.0).abs() < 1e-12);
    }
}
