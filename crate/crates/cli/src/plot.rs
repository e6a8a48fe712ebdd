//! Hand-written SVG of the bifurcation diagram.

use std::fmt::Write as _;
use std::path::Path;

use singular_plap::{BifurcationDiagram, BranchTag};

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 48.0;

struct Frame {
    x_max: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, lambda: f64) -> f64 {
        MARGIN + (WIDTH - 2.0 * MARGIN) * lambda / self.x_max
    }
    fn y(&self, sup: f64) -> f64 {
        HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * sup / self.y_max
    }
}

/// `(λ, sup-norm)` per branch as two polylines, plus the fold and the
/// nonexistence bound as vertical lines.
pub fn render_svg(diagram: &BifurcationDiagram) -> CliResult<String> {
    if diagram.is_empty() {
        return Err(CliError::EmptyDiagram);
    }
    let lam_max = diagram.points.iter().map(|p| p.lambda).fold(diagram.picone_bound, f64::max);
    let sup_max = diagram.points.iter().map(|p| p.sup_norm).fold(0.0, f64::max);
    let frame = Frame {
        x_max: if lam_max > 0.0 { 1.05 * lam_max } else { 1.0 },
        y_max: if sup_max > 0.0 { 1.1 * sup_max } else { 1.0 },
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let (x0, y0) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M {x0} {top} L {x0} {y0} L {right} {y0}" fill="none" stroke="black"/>"#,
        top = MARGIN,
        right = WIDTH - MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12">lambda</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(s, r#"<text x="8" y="{}" font-size="12">sup u</text>"#, MARGIN - 12.0);
    for (tag, colour) in [(BranchTag::Lower, "#1f77b4"), (BranchTag::Upper, "#d62728")] {
        let pts = diagram.branch(tag);
        let coords: Vec<String> = pts
            .iter()
            .map(|p| format!("{:.3},{:.3}", frame.x(p.lambda), frame.y(p.sup_norm)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="{tag}" points="{}" fill="none" stroke="{colour}"/>"#,
            coords.join(" ")
        );
        for p in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.3}" cy="{:.3}" r="2" fill="{colour}"/>"#,
                frame.x(p.lambda),
                frame.y(p.sup_norm)
            );
        }
    }
    if let Some(fold) = diagram.fold_lambda {
        let x = frame.x(fold);
        let _ = writeln!(
            s,
            r#"<line class="fold" x1="{x:.3}" y1="{MARGIN}" x2="{x:.3}" y2="{y0}" stroke="gray" stroke-dasharray="4 3"/>"#
        );
    }
    let x = frame.x(diagram.picone_bound);
    let _ = writeln!(
        s,
        r#"<line class="picone" x1="{x:.3}" y1="{MARGIN}" x2="{x:.3}" y2="{y0}" stroke="black"/>"#
    );
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(diagram: &BifurcationDiagram, path: &Path) -> CliResult<()> {
    let svg = render_svg(diagram)?;
    std::fs::write(path, svg).map_err(|e| CliError::io(path, e))
}
