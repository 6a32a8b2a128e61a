// Copyright 2026 The cmerw Authors
// SPDX-License-Identifier: Apache-2.0

//! SVG rendering of a planar walk: the path in blue, its center of mass in
//! black and the convex hull of the path in red.

use std::fmt::Write as _;

use cmerw_core::geometry::{convex_hull_2d, Hull2D, Point};
use cmerw_core::{ModelParams, Tracking, WalkState};

use crate::error::{CliError, CliResult};
use crate::provenance::RunConfig;

/// Polylines longer than this are decimated uniformly before rendering.
pub const MAX_RENDERED_POINTS: usize = 100_000;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;

pub struct PlanarPath {
    /// `S_0 = 0, S_1, …, S_n`.
    pub walk: Vec<Point>,
    /// `G_1, …, G_n`.
    pub center: Vec<[f64; 2]>,
    pub hull: Hull2D,
}

pub fn simulate_planar(params: &ModelParams, steps: u64, seed: u64) -> CliResult<PlanarPath> {
    if params.dim() != 2 {
        return Err(CliError::Usage(format!("figures need d = 2, got d = {}", params.dim())));
    }
    let mut state = WalkState::new(*params, seed, Tracking::Position)?;
    let mut walk = Vec::with_capacity(steps as usize + 1);
    let mut center = Vec::with_capacity(steps as usize);
    walk.push([0, 0]);
    for _ in 0..steps {
        state.step();
        let s = state.position();
        walk.push([s[0], s[1]]);
        let g = state.center_of_mass();
        center.push([g[0], g[1]]);
    }
    let hull = convex_hull_2d(&walk)?;
    Ok(PlanarPath { walk, center, hull })
}

/// Every `k`-th element plus the last, keeping at most `max` elements.
pub fn decimate<T: Copy>(points: &[T], max: usize) -> Vec<T> {
    if points.len() <= max {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(max - 1);
    let mut out: Vec<T> = points.iter().step_by(stride).copied().collect();
    if (points.len() - 1) % stride != 0 {
        out.push(points[points.len() - 1]);
    }
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(params: &ModelParams, path: &PlanarPath, run: &RunConfig) -> CliResult<String> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    let mut include = |x: f64, y: f64| {
        lo = [lo[0].min(x), lo[1].min(y)];
        hi = [hi[0].max(x), hi[1].max(y)];
    };
    path.walk.iter().for_each(|p| include(p[0] as f64, p[1] as f64));
    path.center.iter().for_each(|g| include(g[0], g[1]));
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let map = |x: f64, y: f64| (MARGIN + (x - lo[0]) * scale, SIZE - MARGIN - (y - lo[1]) * scale);
    let coords = |pts: &mut dyn Iterator<Item = (f64, f64)>| {
        let mut s = String::new();
        for (x, y) in pts {
            let (u, v) = map(x, y);
            let _ = write!(s, "{u:.2},{v:.2} ");
        }
        s.pop();
        s
    };

    let walk = decimate(&path.walk, MAX_RENDERED_POINTS);
    let center = decimate(&path.center, MAX_RENDERED_POINTS);
    let caption = format!(
        "d=2, p={}, n={}, regime {}: walk in blue, center of mass in black, convex hull in red",
        params.p(),
        path.walk.len() - 1,
        params.regime()
    );
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(&caption));
    let _ = writeln!(svg, "<metadata>{}</metadata>", escape(&serde_json::to_string(run)?));
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="blue" stroke-width="0.5" points="{}"/>"#,
        coords(&mut walk.iter().map(|p| (p[0] as f64, p[1] as f64)))
    );
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="black" stroke-width="1" points="{}"/>"#,
        coords(&mut center.iter().map(|g| (g[0], g[1])))
    );
    let _ = writeln!(
        svg,
        r#"<polygon fill="none" stroke="red" stroke-width="1" points="{}"/>"#,
        coords(&mut path.hull.vertices.iter().map(|p| (p[0] as f64, p[1] as f64)))
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_keeps_endpoints_and_bound() {
        let pts: Vec<u32> = (0..1_000_001).collect();
        let d = decimate(&pts, MAX_RENDERED_POINTS);
        assert!(d.len() <= MAX_RENDERED_POINTS);
        assert_eq!(d[0], 0);
        assert_eq!(*d.last().unwrap(), 1_000_000);
        assert_eq!(decimate(&pts[..10], 100), pts[..10].to_vec());
    }

    #[test]
    fn rejects_non_planar_walks() {
        let params = ModelParams::new(3, 0.5).unwrap();
        assert!(simulate_planar(&params, 10, 0).is_err());
    }
}
