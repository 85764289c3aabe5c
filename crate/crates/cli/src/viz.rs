//! Plot files: SVG projections of layers and toolpaths, PLY of waypoints.

use std::fmt::Write as _;

use waam_core::planner::MotionProgram;
use waam_core::slicer::SlicePlan;

const PANEL: f64 = 400.0;
const MARGIN: f64 = 20.0;

/// Polylines drawn into one square panel, scaled to fit together.
struct Panel {
    title: String,
    lines: Vec<(Vec<(f64, f64)>, &'static str)>,
}

impl Panel {
    fn render(&self, out: &mut String, x0: f64) {
        let pts = self.lines.iter().flat_map(|(l, _)| l.iter());
        let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        for &(x, y) in pts {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        let span = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-9);
        let scale = (PANEL - 2.0 * MARGIN) / span;
        let _ = writeln!(out, r#"<text x="{:.1}" y="14" font-size="12">{}</text>"#, x0 + MARGIN, self.title);
        for (line, color) in &self.lines {
            if line.is_empty() {
                continue;
            }
            let coords: Vec<String> = line
                .iter()
                .map(|&(x, y)| {
                    // SVG y grows downward
                    format!("{:.2},{:.2}", x0 + MARGIN + (x - lo.0) * scale, PANEL - MARGIN - (y - lo.1) * scale)
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="0.6" points="{}"/>"#,
                coords.join(" ")
            );
        }
    }
}

fn document(panels: &[Panel]) -> String {
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{PANEL:.0}" viewBox="0 0 {:.0} {PANEL:.0}">"#,
        PANEL * panels.len() as f64,
        PANEL * panels.len() as f64
    );
    out.push('\n');
    for (i, p) in panels.iter().enumerate() {
        p.render(&mut out, i as f64 * PANEL);
    }
    out.push_str("</svg>\n");
    out
}

/// Front (x–z) and top (x–y) views of every layer segment.
pub fn plan_svg(plan: &SlicePlan) -> String {
    let mut front = Panel { title: "layers, front (x-z)".into(), lines: Vec::new() };
    let mut top = Panel { title: "layers, top (x-y)".into(), lines: Vec::new() };
    for layer in &plan.layers {
        let color = if layer.index % 2 == 0 { "#1f5fa8" } else { "#c0392b" };
        for seg in &layer.segments {
            let mut xz: Vec<(f64, f64)> = seg.iter().map(|p| (p.p.x, p.p.z)).collect();
            let mut xy: Vec<(f64, f64)> = seg.iter().map(|p| (p.p.x, p.p.y)).collect();
            if layer.closed {
                if let (Some(&a), Some(&b)) = (xz.first(), xy.first()) {
                    xz.push(a);
                    xy.push(b);
                }
            }
            front.lines.push((xz, color));
            top.lines.push((xy, color));
        }
    }
    document(&[front, top])
}

/// Torch path in the plate frame (deposition vs travel) and the two
/// positioner joints against waypoint index.
pub fn program_svg(program: &MotionProgram) -> String {
    let mut path = Panel { title: "torch path, plate frame (x-z)".into(), lines: Vec::new() };
    let mut run: Vec<(f64, f64)> = Vec::new();
    let mut run_on = None;
    let mut last = None;
    for s in &program.segments {
        let p = s.target.torch.position;
        let on = s.target.arc_on;
        if run_on != Some(on) {
            if !run.is_empty() {
                path.lines.push((std::mem::take(&mut run), if run_on == Some(true) { "#c0392b" } else { "#999999" }));
            }
            if let Some(prev) = last {
                run.push(prev);
            }
            run_on = Some(on);
        }
        run.push((p.x, p.z));
        last = Some((p.x, p.z));
    }
    if !run.is_empty() {
        path.lines.push((run, if run_on == Some(true) { "#c0392b" } else { "#999999" }));
    }
    let n = program.segments.len().max(1) as f64;
    // joints in degrees against index scaled to the same span
    let q1: Vec<(f64, f64)> = program
        .segments
        .iter()
        .enumerate()
        .map(|(k, s)| (k as f64 / n * 360.0, s.target.positioner.q1.to_degrees()))
        .collect();
    let q2: Vec<(f64, f64)> = program
        .segments
        .iter()
        .enumerate()
        .map(|(k, s)| (k as f64 / n * 360.0, s.target.positioner.q2.to_degrees()))
        .collect();
    let joints = Panel {
        title: "positioner q1 (blue), q2 (red) in degrees".into(),
        lines: vec![(q1, "#1f5fa8"), (q2, "#c0392b")],
    };
    document(&[path, joints])
}

/// Torch targets in the world frame with the arc state.
pub fn program_ply(program: &MotionProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ply\nformat ascii 1.0\nelement vertex {}", program.segments.len());
    for prop in ["float x", "float y", "float z", "uchar arc_on"] {
        let _ = writeln!(out, "property {prop}");
    }
    let _ = writeln!(out, "end_header");
    for s in &program.segments {
        let p = s.target.world_position();
        let _ = writeln!(out, "{} {} {} {}", p.x, p.y, p.z, u8::from(s.target.arc_on));
    }
    out
}
