//! Cost-map heatmaps as SVG or binary PPM.
//!
//! Boundary cells of pushable objects are tinted by push safety, red for
//! unsafe through green for safe. Other cells shade from white (cost 0) to
//! black (cost 10); target cells are blue.

use std::fmt::Write as _;

use crate::costmap::AnisotropicCostMap;
use crate::planner::{Primitive, Trajectory};
use crate::scene::Scene;

pub type Rgb = [u8; 3];

const TARGET: Rgb = [40, 90, 220];

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    let mix = |x: u8, y: u8| (f64::from(x) + (f64::from(y) - f64::from(x)) * t).round() as u8;
    [mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])]
}

/// Red-to-green by safety score in `[0, 1]`.
pub fn safety_color(safety: f64) -> Rgb {
    lerp([220, 30, 30], [30, 190, 60], safety)
}

/// Grayscale by cost in `[0, 10]`.
pub fn cost_color(cost: f64) -> Rgb {
    lerp([255, 255, 255], [20, 20, 20], cost / 10.0)
}

/// Color of grid cell `(i, j)`.
pub fn cell_color(map: &AnisotropicCostMap, i: usize, j: usize) -> Rgb {
    let v = map.value(i, j);
    if v < 0.0 {
        return TARGET;
    }
    match map.record_at(i, j) {
        Some(r) => safety_color(r.safety.unwrap_or(1.0 - r.value / 10.0)),
        None => cost_color(v),
    }
}

fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Pixels per meter used by the SVG.
const SVG_SCALE: f64 = 1000.0;

pub fn render_svg(scene: &Scene, map: &AnisotropicCostMap, trajectory: Option<&Trajectory>) -> String {
    let g = map.grid;
    let (w, h) = (g.nx as f64 * g.resolution * SVG_SCALE, g.ny as f64 * g.resolution * SVG_SCALE);
    let cell = g.resolution * SVG_SCALE;
    // y grows upwards in the workspace, downwards in SVG
    let px = |x: f64| x * SVG_SCALE;
    let py = |y: f64| h - y * SVG_SCALE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let _ = writeln!(s, r#"<g id="cells" shape-rendering="crispEdges">"#);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = cell_color(map, i, j);
            if c == [255, 255, 255] {
                continue;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.3}" y="{:.3}" width="{cell:.3}" height="{cell:.3}" fill="{}"/>"#,
                i as f64 * cell,
                h - (j + 1) as f64 * cell,
                hex(c)
            );
        }
    }
    s.push_str("</g>\n<g id=\"objects\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\">\n");
    for o in &scene.objects {
        let pts: Vec<String> = o
            .footprint
            .vertices()
            .iter()
            .map(|v| format!("{:.3},{:.3}", px(v.x), py(v.y)))
            .collect();
        let _ = writeln!(s, r#"<polygon points="{}"><title>{}</title></polygon>"#, pts.join(" "), o.name);
    }
    s.push_str("</g>\n");
    if let Some(t) = trajectory {
        let pts: Vec<String> = t
            .waypoints
            .iter()
            .map(|w| format!("{:.3},{:.3}", px(w.x), py(w.y)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline id="trajectory" points="{}" fill="none" stroke="#f0a000" stroke-width="2"/>"##,
            pts.join(" ")
        );
        for w in t.waypoints.iter().filter(|w| w.primitive == Primitive::Push && w.pushed_object.is_some()) {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.3}" cy="{:.3}" r="4" fill="#f0a000"/>"##,
                px(w.x),
                py(w.y)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Binary PPM with `scale` pixels per cell.
pub fn render_ppm(map: &AnisotropicCostMap, scale: usize) -> Vec<u8> {
    let g = map.grid;
    let scale = scale.max(1);
    let (w, h) = (g.nx * scale, g.ny * scale);
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for row in 0..h {
        let j = g.ny - 1 - row / scale;
        for col in 0..w {
            out.extend_from_slice(&cell_color(map, col / scale, j));
        }
    }
    out
}

/// Cost grid as CSV, top row first.
pub fn grid_csv(nx: usize, ny: usize, value: impl Fn(usize, usize) -> f64) -> String {
    let mut s = String::new();
    for j in (0..ny).rev() {
        let row: Vec<String> = (0..nx).map(|i| format!("{:.6}", value(i, j))).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}
