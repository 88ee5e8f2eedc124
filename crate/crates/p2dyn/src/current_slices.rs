//! Slice measures of the Green current on bidisk grids in `(Z, W)`
//! coordinates, ball masses, and the global mass certificate.
//!
//! With `dd^c = (i/π)∂∂̄`, the slice of `dd^c G` along a complex line has
//! density `ΔG/(2π)` against area. A cell of side `h` in the sliced plane and
//! in the transverse plane receives `L·h²/(2π)`, where `L` is the undivided
//! five-point second-difference sum.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green_potential::lifted_with_depth;
use crate::oseledec_frames::NormalFormCoordinates;
use crate::projective_core::{chart_axes, ChartPoint, HomogeneousMap, C64};

pub const MIN_RESOLUTION: usize = 32;
pub const DEFAULT_RESOLUTION: usize = 32;
/// Grid half-width as a fraction of the coordinate domain radius.
pub const GRID_FRACTION: f64 = 0.2;
/// Radii below this many cell widths are not resolved.
pub const RESOLUTION_FLOOR: f64 = 3.0;
pub const CLAMP_BUDGET: f64 = 0.01;

/// Cubical grid `[−ρ, ρ]⁴` in `(Re Z, Im Z, Re W, Im W)`, `m` cells per
/// axis, nodes at cell centres plus one ghost layer.
#[derive(Clone, Copy, Debug)]
pub struct LocalGrid {
    pub coords: Option<NormalFormCoordinates>,
    pub m: usize,
    pub rho: f64,
}

impl LocalGrid {
    /// Grid with no attached chart, for potentials given in closed form.
    pub fn new(m: usize, rho: f64) -> Result<Self> {
        if m < MIN_RESOLUTION {
            return Err(Error::InvalidArgument(format!("grid resolution {m} below {MIN_RESOLUTION}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument("grid radius must be positive".into()));
        }
        Ok(Self { coords: None, m, rho })
    }

    /// Grid of half-width `0.2·domain_radius` in the given chart.
    pub fn on(coords: NormalFormCoordinates, m: usize) -> Result<Self> {
        Self::with_radius(coords, m, GRID_FRACTION * coords.domain_radius)
    }

    pub fn with_radius(coords: NormalFormCoordinates, m: usize, rho: f64) -> Result<Self> {
        let mut g = Self::new(m, rho)?;
        if g.max_node_norm() > coords.domain_radius {
            return Err(Error::Domain(format!(
                "grid of radius {rho:e} leaves the coordinate domain {:e}",
                coords.domain_radius
            )));
        }
        g.coords = Some(coords);
        Ok(g)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.rho / self.m as f64
    }

    /// Nodes per axis including ghosts.
    pub fn nodes(&self) -> usize {
        self.m + 2
    }

    /// Coordinate of node `i ∈ 0..m+2`; `1..=m` are cell centres.
    pub fn node(&self, i: usize) -> f64 {
        -self.rho + (i as f64 - 0.5) * self.h()
    }

    pub fn max_node_norm(&self) -> f64 {
        2.0 * (self.rho + 0.5 * self.h())
    }

    pub fn same_shape(&self, other: &LocalGrid) -> bool {
        self.m == other.m && self.rho == other.rho
    }
}

/// Potential sampled at every node of a [`LocalGrid`].
#[derive(Clone, Debug)]
pub struct PotentialGrid {
    pub grid: LocalGrid,
    pub values: Vec<f64>,
}

impl PotentialGrid {
    /// Samples `f(Re Z, Im Z, Re W, Im W)` at every node.
    pub fn sample<F>(grid: LocalGrid, f: F) -> Self
    where
        F: Fn([f64; 4]) -> f64 + Sync,
    {
        let n = grid.nodes();
        let axis: Vec<f64> = (0..n).map(|i| grid.node(i)).collect();
        let values = (0..n)
            .into_par_iter()
            .flat_map_iter(|a| {
                let axis = &axis;
                let f = &f;
                (0..n * n * n).map(move |r| {
                    let (b, c, e) = (r / (n * n), (r / n) % n, r % n);
                    f([axis[a], axis[b], axis[c], axis[e]])
                })
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_values(grid: LocalGrid, values: Vec<f64>) -> Result<Self> {
        let n = grid.nodes();
        if values.len() != n * n * n * n {
            return Err(Error::InvalidArgument(format!(
                "potential grid has {} values, expected {}",
                values.len(),
                n * n * n * n
            )));
        }
        Ok(Self { grid, values })
    }

    fn idx(&self, i: [usize; 4]) -> usize {
        let n = self.grid.nodes();
        ((i[0] * n + i[1]) * n + i[2]) * n + i[3]
    }

    pub fn at(&self, i: [usize; 4]) -> f64 {
        self.values[self.idx(i)]
    }

    /// Undivided five-point Laplacian in the plane of axes `(p, p+1)` at node `i`.
    fn plane_laplacian(&self, i: [usize; 4], p: usize) -> f64 {
        let n = self.grid.nodes();
        let s = [n * n * n, n * n, n, 1];
        let k = self.idx(i);
        let v = &self.values;
        v[k + s[p]] + v[k - s[p]] + v[k + s[p + 1]] + v[k - s[p + 1]] - 4.0 * v[k]
    }

    /// Adds a constant to every node.
    pub fn shifted(&self, c: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v + c).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceDirection {
    /// `T ∧ (i/2) dZ∧dZ̄`: Laplacian of `w ↦ G(z, w)` on each line `Z = z`.
    Z,
    /// `T ∧ (i/2) dW∧dW̄`: Laplacian of `z ↦ G(z, w)` on each line `W = w`.
    W,
    /// `σ_Z + σ_W`.
    Trace,
}

impl SliceDirection {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Z => "Z",
            Self::W => "W",
            Self::Trace => "trace",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "Z" | "z" => Ok(Self::Z),
            "W" | "w" => Ok(Self::W),
            "trace" => Ok(Self::Trace),
            _ => Err(Error::InvalidArgument(format!("unknown slice direction {s:?}"))),
        }
    }

    /// First axis of the plane in which the Laplacian is taken.
    fn plane(&self) -> Option<usize> {
        match self {
            Self::Z => Some(2),
            Self::W => Some(0),
            Self::Trace => None,
        }
    }
}

/// Nonnegative cell masses over the `m⁴` cells of a grid.
#[derive(Clone, Debug)]
pub struct SliceMeasure {
    pub m: usize,
    pub rho: f64,
    pub direction: SliceDirection,
    pub cells: Vec<f64>,
    pub total_mass: f64,
    pub clamped_mass: f64,
}

impl SliceMeasure {
    pub fn h(&self) -> f64 {
        2.0 * self.rho / self.m as f64
    }

    pub fn cell_index(&self, i: [usize; 4]) -> usize {
        let m = self.m;
        ((i[0] * m + i[1]) * m + i[2]) * m + i[3]
    }

    pub fn cell(&self, i: [usize; 4]) -> f64 {
        self.cells[self.cell_index(i)]
    }

    /// Centre of cell `i ∈ 0..m` on one axis.
    pub fn center(&self, i: usize) -> f64 {
        -self.rho + (i as f64 + 0.5) * self.h()
    }

    pub fn max_cell(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }

    pub fn summary(&self) -> SliceSummary {
        SliceSummary {
            direction: self.direction,
            m: self.m,
            rho: self.rho,
            h: self.h(),
            total_mass: self.total_mass,
            clamped_mass: self.clamped_mass,
            max_cell: self.max_cell(),
        }
    }

    /// Nonzero cells as `i0,i1,i2,i3,mass`, after a metadata comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# direction={} m={} rho={:e}", self.direction.as_str(), self.m, self.rho)?;
        writeln!(out, "i0,i1,i2,i3,mass")?;
        let m = self.m;
        for (k, &v) in self.cells.iter().enumerate() {
            if v != 0.0 {
                writeln!(out, "{},{},{},{},{:e}", k / (m * m * m), (k / (m * m)) % m, (k / m) % m, k % m, v)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let perr = |line: usize, msg: &str| Error::Parse { line, msg: msg.into() };
        let meta = lines.next().ok_or_else(|| perr(1, "empty slice file"))??;
        let mut direction = None;
        let mut m = None;
        let mut rho = None;
        for tok in meta.trim_start_matches('#').split_whitespace() {
            match tok.split_once('=') {
                Some(("direction", v)) => direction = Some(SliceDirection::parse(v)?),
                Some(("m", v)) => m = v.parse::<usize>().ok(),
                Some(("rho", v)) => rho = v.parse::<f64>().ok(),
                _ => return Err(perr(1, "bad metadata token")),
            }
        }
        let (direction, m, rho) = match (direction, m, rho) {
            (Some(d), Some(m), Some(r)) if m > 0 && r > 0.0 => (d, m, r),
            _ => return Err(perr(1, "incomplete slice metadata")),
        };
        let header = lines.next().ok_or_else(|| perr(2, "missing header"))??;
        if header.trim() != "i0,i1,i2,i3,mass" {
            return Err(perr(2, "unexpected slice header"));
        }
        let mut cells = vec![0.0; m * m * m * m];
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || perr(n + 3, "malformed slice row");
            if f.len() != 5 {
                return Err(bad());
            }
            let mut ix = [0usize; 4];
            for a in 0..4 {
                ix[a] = f[a].parse().map_err(|_| bad())?;
                if ix[a] >= m {
                    return Err(bad());
                }
            }
            let v: f64 = f[4].parse().map_err(|_| bad())?;
            if !(v >= 0.0) {
                return Err(bad());
            }
            cells[((ix[0] * m + ix[1]) * m + ix[2]) * m + ix[3]] = v;
        }
        let total_mass = cells.iter().sum();
        Ok(Self { m, rho, direction, cells, total_mass, clamped_mass: 0.0 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceSummary {
    pub direction: SliceDirection,
    pub m: usize,
    pub rho: f64,
    pub h: f64,
    pub total_mass: f64,
    pub clamped_mass: f64,
    pub max_cell: f64,
}

/// Slice measure of the potential in the given direction. Negative cells
/// are clamped to zero; a clamped mass above 1% of the total is an error.
pub fn slice_measure(g: &PotentialGrid, direction: SliceDirection) -> Result<SliceMeasure> {
    let grid = g.grid;
    let n = grid.nodes();
    if g.values.len() != n * n * n * n {
        return Err(Error::InvalidArgument("potential grid does not match its geometry".into()));
    }
    let Some(p) = direction.plane() else {
        let z = slice_measure(g, SliceDirection::Z)?;
        let w = slice_measure(g, SliceDirection::W)?;
        return trace_measure(&z, &w);
    };
    let m = grid.m;
    let scale = grid.h() * grid.h() / (2.0 * std::f64::consts::PI);
    let mut cells: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|a| {
            (0..m * m * m).map(move |r| {
                let (b, c, e) = (r / (m * m), (r / m) % m, r % m);
                g.plane_laplacian([a + 1, b + 1, c + 1, e + 1], p) * scale
            })
        })
        .collect();
    // Negative values within rounding of the stencil, or within 1e-9 of the
    // largest cell, are clamped silently; the rest count against the budget.
    let gmax = g.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let maxpos = cells.iter().copied().fold(0.0, f64::max);
    let floor = 16.0 * f64::EPSILON * gmax * scale + 1e-9 * maxpos;
    let mut clamped_mass = 0.0;
    for v in cells.iter_mut() {
        if *v < 0.0 {
            if *v < -floor {
                clamped_mass -= *v;
            }
            *v = 0.0;
        }
    }
    let total_mass: f64 = cells.iter().sum();
    if clamped_mass > CLAMP_BUDGET * total_mass {
        return Err(Error::NegativeMass(clamped_mass / total_mass.max(f64::MIN_POSITIVE)));
    }
    Ok(SliceMeasure { m, rho: grid.rho, direction, cells, total_mass, clamped_mass })
}

/// Cellwise sum of the two directional measures.
pub fn trace_measure(z: &SliceMeasure, w: &SliceMeasure) -> Result<SliceMeasure> {
    if z.m != w.m || z.rho != w.rho || z.cells.len() != w.cells.len() {
        return Err(Error::InvalidArgument("slice measures live on different grids".into()));
    }
    let cells: Vec<f64> = z.cells.iter().zip(&w.cells).map(|(a, b)| a + b).collect();
    let total_mass = cells.iter().sum();
    Ok(SliceMeasure {
        m: z.m,
        rho: z.rho,
        direction: SliceDirection::Trace,
        cells,
        total_mass,
        clamped_mass: z.clamped_mass + w.clamped_mass,
    })
}

/// Mass of the Euclidean ball `B(center, r)`. Boundary cells are weighted by
/// the fraction of a 2⁴ subsample inside the ball. The ball must lie in the
/// grid or contain it.
pub fn ball_mass(sm: &SliceMeasure, center: [f64; 4], r: f64) -> Result<f64> {
    let h = sm.h();
    if !(r >= RESOLUTION_FLOOR * h * (1.0 - 1e-12)) {
        return Err(Error::Resolution(format!("radius {r:e} below {RESOLUTION_FLOOR}h = {:e}", RESOLUTION_FLOOR * h)));
    }
    let rho = sm.rho;
    let tol = 1e-12 * rho;
    let inside = center.iter().all(|c| c.abs() + r <= rho + tol);
    let far: f64 = center.iter().map(|c| (c.abs() + rho).powi(2)).sum::<f64>().sqrt();
    if !inside && r < far {
        return Err(Error::Domain(format!("ball of radius {r:e} leaves the grid of radius {rho:e}")));
    }
    if !inside {
        return Ok(sm.total_mass);
    }
    let m = sm.m;
    let range = |c: f64| {
        let lo = (((c - r + rho) / h).floor().max(0.0)) as usize;
        let hi = ((((c + r + rho) / h).ceil()) as usize).min(m);
        lo..hi
    };
    let r2 = r * r;
    let mut total = 0.0;
    for a in range(center[0]) {
        let da = sm.center(a) - center[0];
        for b in range(center[1]) {
            let db = sm.center(b) - center[1];
            for c in range(center[2]) {
                let dc = sm.center(c) - center[2];
                for e in range(center[3]) {
                    let v = sm.cell([a, b, c, e]);
                    if v == 0.0 {
                        continue;
                    }
                    let de = sm.center(e) - center[3];
                    let d = (da * da + db * db + dc * dc + de * de).sqrt();
                    if d + h <= r {
                        total += v;
                    } else if d - h < r {
                        let mut hits = 0;
                        for s in 0..16 {
                            let off = |bit: usize| if s >> bit & 1 == 1 { 0.25 * h } else { -0.25 * h };
                            let q = (da + off(0)).powi(2) + (db + off(1)).powi(2) + (dc + off(2)).powi(2) + (de + off(3)).powi(2);
                            if q <= r2 {
                                hits += 1;
                            }
                        }
                        total += v * hits as f64 / 16.0;
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Total mass of the calibration potential `|W|²` on a grid of radius `ρ`.
pub fn calibration_mass(rho: f64) -> f64 {
    2.0 / std::f64::consts::PI * (2.0 * rho).powi(4)
}

/// Fraction of slice measures (one per sampled basepoint) whose total mass
/// exceeds `10⁻⁸` of the calibration mass of their grid.
pub fn positivity_check(slices: &[SliceMeasure]) -> f64 {
    if slices.is_empty() {
        return 0.0;
    }
    let pos = slices.iter().filter(|s| s.total_mass > 1e-8 * calibration_mass(s.rho)).count();
    pos as f64 / slices.len() as f64
}

/// `∫ |ΔG|` over each slice: one value per transverse cell, in row-major
/// order of the transverse indices.
pub fn harmonicity_defect(g: &PotentialGrid, direction: SliceDirection) -> Result<Vec<f64>> {
    let p = direction
        .plane()
        .ok_or_else(|| Error::InvalidArgument("harmonicity defect needs the Z or W direction".into()))?;
    let m = g.grid.m;
    let t = if p == 2 { 0 } else { 2 };
    Ok((0..m * m)
        .into_par_iter()
        .map(|s| {
            let (x, y) = (s / m + 1, s % m + 1);
            let mut acc = 0.0;
            for u in 1..=m {
                for v in 1..=m {
                    let mut i = [0usize; 4];
                    i[t] = x;
                    i[t + 1] = y;
                    i[p] = u;
                    i[p + 1] = v;
                    acc += g.plane_laplacian(i, p).abs();
                }
            }
            acc
        })
        .collect())
}

/// Result of [`mass_certificate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassCertificate {
    pub n: u32,
    pub integral: f64,
    pub expected: f64,
    /// `|I_h − I_{2h}|` against the stride-2 estimate.
    pub residual: f64,
    pub inconclusive: bool,
}

/// Parameters of the three-chart quadrature.
#[derive(Clone, Copy, Debug)]
pub struct QuadratureParams {
    /// Cells per axis on each chart box.
    pub m: usize,
    /// Half-width of each chart box.
    pub radius: f64,
    /// Exponent of the partition `χ_k = |X_k|^{2p} / Σ|X_j|^{2p}`.
    pub power: i32,
    pub green_depth: usize,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self { m: 24, radius: 2.5, power: 3, green_depth: 24 }
    }
}

/// `∫_{P²} S ∧ (fⁿ)*ω` for `S = dd^c u`, where `u` is a potential on lifts
/// (`u(cv) = u(v) + log|c|`). `(fⁿ)*ω` enters through its smooth potential
/// `½ log‖Fⁿ‖²`; `u` enters through discrete second differences.
pub fn mass_integral<U>(map: &HomogeneousMap, n: u32, u: U, params: &QuadratureParams) -> Result<MassCertificate>
where
    U: Fn(&[C64; 3]) -> f64 + Sync,
{
    if n > 1 {
        return Err(Error::InvalidArgument("mass certificate supports n ∈ {0, 1}".into()));
    }
    if params.m < 8 || !(params.radius > 0.0) {
        return Err(Error::InvalidArgument("quadrature needs m ≥ 8 and a positive box radius".into()));
    }
    let grid = LocalGrid { coords: None, m: params.m, rho: params.radius };
    let mut fine = 0.0;
    let mut coarse = 0.0;
    for chart in 0..3 {
        let lift = |x: [f64; 4]| ChartPoint { chart, coords: [C64::new(x[0], x[1]), C64::new(x[2], x[3])] }.lift();
        let pot = PotentialGrid::sample(grid, |x| u(&lift(x)));
        let (f, c) = chart_quadrature(map, n, &pot, chart, params.power)?;
        fine += f;
        coarse += c;
    }
    let expected = (map.degree() as f64).powi(n as i32);
    let residual = (fine - coarse).abs();
    Ok(MassCertificate { n, integral: fine, expected, residual, inconclusive: residual > 0.1 * fine.abs() })
}

/// Mass of the Green current against `(fⁿ)*ω`, expected `dⁿ`.
pub fn mass_certificate(map: &HomogeneousMap, n: u32, params: &QuadratureParams) -> Result<MassCertificate> {
    let depth = params.green_depth;
    mass_integral(map, n, |v| lifted_with_depth(map, v, depth), params)
}

/// Hermitian matrix `∂²v/∂a_j∂ā_k` of `v = ½ log‖Fⁿ(lift(a))‖²`.
fn smooth_hessian(map: &HomogeneousMap, n: u32, chart: usize, a: [C64; 2]) -> [[C64; 2]; 2] {
    let x = ChartPoint { chart, coords: a }.lift();
    let ax = chart_axes(chart);
    let (f, df): ([C64; 3], [[C64; 3]; 2]) = if n == 0 {
        let mut d = [[C64::new(0.0, 0.0); 3]; 2];
        d[0][ax[0]] = C64::new(1.0, 0.0);
        d[1][ax[1]] = C64::new(1.0, 0.0);
        (x, d)
    } else {
        let (f, j) = map.eval_with_jacobian(&x);
        let col = |q: usize| [j[0][q], j[1][q], j[2][q]];
        (f, [col(ax[0]), col(ax[1])])
    };
    let ip = |p: &[C64; 3], q: &[C64; 3]| p.iter().zip(q).map(|(s, t)| s * t.conj()).sum::<C64>();
    let nf = ip(&f, &f).re;
    let mut h = [[C64::new(0.0, 0.0); 2]; 2];
    for j in 0..2 {
        for k in 0..2 {
            h[j][k] = 0.5 * (ip(&df[j], &df[k]) * nf - ip(&df[j], &f) * ip(&f, &df[k])) / (nf * nf);
        }
    }
    h
}

/// Chart contribution at spacing `h` and at the stride-2 spacing `2h`.
fn chart_quadrature(map: &HomogeneousMap, n: u32, pot: &PotentialGrid, chart: usize, power: i32) -> Result<(f64, f64)> {
    let grid = pot.grid;
    let m = grid.m;
    let h = grid.h();
    let second = |i: [usize; 4], s: usize| -> [[C64; 2]; 2] {
        // Discrete ∂²u/∂a_j∂ā_k at node i with step s·h.
        let hh = s as f64 * h;
        let at = |d: [isize; 4]| {
            let mut k = i;
            for t in 0..4 {
                k[t] = (i[t] as isize + d[t] * s as isize) as usize;
            }
            pot.at(k)
        };
        let e = |t: usize, v: isize| {
            let mut d = [0isize; 4];
            d[t] = v;
            d
        };
        let u0 = pot.at(i);
        let dd = |t: usize| (at(e(t, 1)) + at(e(t, -1)) - 2.0 * u0) / (hh * hh);
        let mixed = |p: usize, q: usize| {
            let mut d = [0isize; 4];
            let mut val = 0.0;
            for (sp, sq, w) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                d[p] = sp;
                d[q] = sq;
                val += w * at(d);
                d = [0; 4];
            }
            val / (4.0 * hh * hh)
        };
        let u11 = 0.25 * (dd(0) + dd(1));
        let u22 = 0.25 * (dd(2) + dd(3));
        let u12 = C64::new(0.25 * (mixed(0, 2) + mixed(1, 3)), 0.25 * (mixed(0, 3) - mixed(1, 2)));
        [[C64::new(u11, 0.0), u12], [u12.conj(), C64::new(u22, 0.0)]]
    };
    let part = (1..=m)
        .into_par_iter()
        .map(|a| {
            let mut fine = 0.0;
            let mut coarse = 0.0;
            for b in 1..=m {
                for c in 1..=m {
                    for e in 1..=m {
                        let i = [a, b, c, e];
                        let z = [C64::new(grid.node(a), grid.node(b)), C64::new(grid.node(c), grid.node(e))];
                        let chi = 1.0 / (1.0 + z[0].norm_sqr().powi(power) + z[1].norm_sqr().powi(power));
                        let v = smooth_hessian(map, n, chart, z);
                        let wedge = |u: [[C64; 2]; 2]| {
                            4.0 / (std::f64::consts::PI * std::f64::consts::PI)
                                * (u[0][0].re * v[1][1].re + u[1][1].re * v[0][0].re - 2.0 * (u[0][1] * v[0][1].conj()).re)
                        };
                        fine += chi * wedge(second(i, 1));
                        let odd = |t: usize| t % 2 == 1 && (3..m).contains(&t);
                        if odd(a) && odd(b) && odd(c) && odd(e) {
                            coarse += 16.0 * chi * wedge(second(i, 2));
                        }
                    }
                }
            }
            (fine, coarse)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |x, y| (x.0 + y.0, x.1 + y.1));
    let vol = h.powi(4);
    Ok((part.0 * vol, part.1 * vol))
}
