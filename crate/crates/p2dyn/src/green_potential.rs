//! Truncated Green function `G_N = d⁻ᴺ log‖Fᴺ‖` and local potential grids.

use serde::Serialize;

use crate::current_slices::{LocalGrid, PotentialGrid};
use crate::error::{Error, Result};
use crate::oseledec_frames::NormalFormCoordinates;
use crate::projective_core::{disk_points, ChartPoint, HomogeneousMap, HomogeneousPoint, C64};

pub const DEFAULT_DEPTH: usize = 40;

/// Value of the truncated Green function with its truncation bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub bound: f64,
}

/// Evaluates `G_N(v) = Σ_{k=1}^{N} d⁻ᵏ log‖F(v_{k−1})‖_∞` with the iterates
/// renormalised at every step, so no overflow occurs for any `N`.
#[derive(Clone, Debug)]
pub struct GreenEvaluator {
    map: HomogeneousMap,
    depth: usize,
    log_distortion: f64,
}

impl GreenEvaluator {
    pub fn new(map: &HomogeneousMap, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArgument("Green depth must be at least 1".into()));
        }
        let log_distortion = log_distortion(map)?;
        Ok(Self { map: map.clone(), depth, log_distortion })
    }

    pub fn map(&self) -> &HomogeneousMap {
        &self.map
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `C` with `|log‖F(v)‖_∞| ≤ C` on the unit sup-norm sphere.
    pub fn log_distortion(&self) -> f64 {
        self.log_distortion
    }

    /// Truncation bound `|G − G_N| ≤ C d⁻ᴺ / (d − 1)`.
    pub fn bound(&self, n: usize) -> f64 {
        let d = self.map.degree() as f64;
        if d <= 1.0 {
            return f64::INFINITY;
        }
        self.log_distortion * d.powi(-(n as i32)) / (d - 1.0)
    }

    /// `G_N` on an arbitrary lift; `G_N(cv) = G_N(v) + log|c|`.
    pub fn lifted(&self, v: &[C64; 3]) -> f64 {
        lifted_with_depth(&self.map, v, self.depth)
    }

    /// Potential of the Green current in the chart of `p`: `G_N` of the
    /// lift whose chart coordinate is 1.
    pub fn value(&self, p: &ChartPoint) -> GreenValue {
        GreenValue { value: self.lifted(&p.lift()), bound: self.bound(self.depth) }
    }

    /// `G_N(p̂) − log‖p̂‖_∞`, independent of the lift.
    pub fn lift_invariant(&self, p: &HomogeneousPoint) -> GreenValue {
        GreenValue { value: self.lifted(p.coords()), bound: self.bound(self.depth) }
    }
}

/// `G_N` at every node of `grid`, read through the `(Z, W)` chart.
pub fn local_potential(ev: &GreenEvaluator, coords: &NormalFormCoordinates, grid: &LocalGrid) -> Result<PotentialGrid> {
    if grid.max_node_norm() > coords.domain_radius * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "grid nodes reach {:e}, beyond the coordinate domain {:e}",
            grid.max_node_norm(),
            coords.domain_radius
        )));
    }
    let mut g = *grid;
    g.coords = Some(*coords);
    Ok(PotentialGrid::sample(g, |x| {
        let p = coords.from_local([C64::new(x[0], x[1]), C64::new(x[2], x[3])]);
        ev.lifted(&p.lift())
    }))
}

/// `G_N` at depth `n` for a lift `v`.
pub fn lifted_with_depth(map: &HomogeneousMap, v: &[C64; 3], n: usize) -> f64 {
    let inv_d = 1.0 / map.degree() as f64;
    let mut x = *v;
    let mut weight = 1.0;
    let mut acc = 0.0;
    for _ in 0..n {
        let f = map.eval_raw(&x);
        let s2 = f[0].norm_sqr().max(f[1].norm_sqr()).max(f[2].norm_sqr());
        weight *= inv_d;
        acc += weight * 0.5 * s2.ln();
        let s = s2.sqrt();
        x = [f[0] / s, f[1] / s, f[2] / s];
    }
    acc
}

fn log_distortion(map: &HomogeneousMap) -> Result<f64> {
    let upper = map
        .components()
        .iter()
        .map(|c| c.coeffs().iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let disk = disk_points(32);
    let mut lower = f64::INFINITY;
    for chart in 0..3 {
        for a in &disk {
            for b in &disk {
                let v = ChartPoint { chart, coords: [*a, *b] }.lift();
                let f = map.eval_raw(&v);
                let s = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
                lower = lower.min(s);
            }
        }
    }
    if !(lower > 0.0) {
        return Err(Error::DegenerateMap("F vanishes on the unit sphere".into()));
    }
    let lower = 0.5 * lower;
    Ok(upper.ln().abs().max(lower.ln().abs()))
}
