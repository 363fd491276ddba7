//! Number formatting, evaluation grids and SVG rendering.

use std::f64::consts::TAU;
use std::fmt::Write;

use earthquake_core::earthquake::{EarthquakeField, EdgePolicy, QuakeSide};
use earthquake_core::envelope::{EnvelopeError, EnvelopePair};
use earthquake_core::mink::KleinPoint;

/// Outermost radius of the evaluation grid.
const GRID_MAX_RADIUS: f64 = 0.999;
/// Points per side of the arrow lattice.
const ARROW_LATTICE: usize = 17;
/// Length of the longest arrow.
const ARROW_MAX_LEN: f64 = 0.1;
/// Stroke width of the heaviest leaf.
const CHORD_MAX_STROKE: f64 = 0.02;

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn policy_name(p: EdgePolicy) -> String {
    match p {
        EdgePolicy::Medial => "medial".into(),
        EdgePolicy::ExtremeFirst => "first".into(),
        EdgePolicy::ExtremeSecond => "second".into(),
        EdgePolicy::Blend(s) => format!("blend={}", num(s)),
    }
}

/// The origin, then `grid_n` angles on each of `max(1, grid_n / 8)` circles
/// with radii evenly spaced up to [`GRID_MAX_RADIUS`].
pub fn polar_grid(grid_n: usize) -> Vec<KleinPoint> {
    let rings = (grid_n / 8).max(1);
    let mut pts = vec![KleinPoint { e1: 0.0, e2: 0.0 }];
    for j in 1..=rings {
        let r = GRID_MAX_RADIUS * j as f64 / rings as f64;
        for i in 0..grid_n {
            let (s, c) = (TAU * i as f64 / grid_n as f64).sin_cos();
            pts.push(KleinPoint { e1: r * c, e2: r * s });
        }
    }
    pts
}

fn side_color(side: QuakeSide) -> &'static str {
    match side {
        QuakeSide::Left => "#c0392b",
        QuakeSide::Right => "#2471a3",
    }
}

pub fn side_name(side: QuakeSide) -> &'static str {
    match side {
        QuakeSide::Left => "left",
        QuakeSide::Right => "right",
    }
}

/// Disk picture with y pointing up: unit circle, the bending leaves of each
/// side (stroke width proportional to weight), earthquake arrows on a
/// lattice, and the width maximizer.
pub fn render_svg(
    e: &EnvelopePair,
    sides: &[QuakeSide],
    policy: EdgePolicy,
    argmax: Option<KleinPoint>,
) -> Result<String, EnvelopeError> {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"640\" viewBox=\"-1.1 -1.1 2.2 2.2\">\n",
    );
    s.push_str("<defs>\n");
    for &side in sides {
        let _ = writeln!(
            s,
            "<marker id=\"head-{}\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"5\" markerHeight=\"5\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"{}\"/></marker>",
            side_name(side),
            side_color(side)
        );
    }
    s.push_str("</defs>\n<g transform=\"scale(1,-1)\">\n");
    s.push_str("<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"#000000\" stroke-width=\"0.006\"/>\n");

    for &side in sides {
        let edges = e.bending_edges(side.envelope_side());
        let max_w = edges.iter().map(|b| b.weight).fold(0.0, f64::max);
        let _ = writeln!(s, "<g id=\"lamination-{}\" stroke=\"{}\" stroke-opacity=\"0.8\">", side_name(side), side_color(side));
        for b in edges {
            let (ax, ay) = b.a.coords();
            let (bx, by) = b.b.coords();
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke-width=\"{}\"/>",
                num(ax),
                num(ay),
                num(bx),
                num(by),
                num(CHORD_MAX_STROKE * b.weight / max_w)
            );
        }
        s.push_str("</g>\n");
    }

    for &side in sides {
        let quake = EarthquakeField::new(e, side, policy);
        let mut arrows = Vec::new();
        for i in 0..ARROW_LATTICE {
            for j in 0..ARROW_LATTICE {
                let step = 1.8 / (ARROW_LATTICE - 1) as f64;
                let p = KleinPoint { e1: -0.9 + step * i as f64, e2: -0.9 + step * j as f64 };
                if p.norm_sq() > 0.95 * 0.95 {
                    continue;
                }
                arrows.push((p, quake.eval(p)?));
            }
        }
        let max_len = arrows.iter().map(|(_, v)| v[0].hypot(v[1])).fold(0.0, f64::max);
        let _ = writeln!(
            s,
            "<g id=\"earthquake-{}\" stroke=\"{}\" stroke-width=\"0.005\" marker-end=\"url(#head-{})\">",
            side_name(side),
            side_color(side),
            side_name(side)
        );
        for (p, v) in arrows {
            let len = v[0].hypot(v[1]);
            if len <= 1e-12 * max_len.max(1.0) {
                continue;
            }
            let k = ARROW_MAX_LEN / max_len;
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>",
                num(p.e1),
                num(p.e2),
                num(p.e1 + k * v[0]),
                num(p.e2 + k * v[1])
            );
        }
        s.push_str("</g>\n");
    }

    if let Some(p) = argmax {
        let _ = writeln!(
            s,
            "<g id=\"width-argmax\"><circle cx=\"{}\" cy=\"{}\" r=\"0.02\" fill=\"none\" stroke=\"#27ae60\" stroke-width=\"0.008\"/></g>",
            num(p.e1),
            num(p.e2)
        );
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}
