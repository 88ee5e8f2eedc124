//! Log-log regression estimates of pointwise and directional dimensions.

use std::io::Write;

use serde::Serialize;

use crate::current_slices::{
    ball_mass, slice_measure, trace_measure, LocalGrid, SliceDirection, SliceMeasure,
    DEFAULT_RESOLUTION, RESOLUTION_FLOOR,
};
use crate::error::{Error, Result};
use crate::ergodic_sampler::{seeded_backward_orbit, MeasureSample};
use crate::green_potential::{local_potential, GreenEvaluator, DEFAULT_DEPTH};
use crate::oseledec_frames::{compute_frame, forward_transport, NormalFormCoordinates, OseledecFrame};
use crate::preimage_solver::PreimageSolver;
use crate::projective_core::{fs_distance, HomogeneousPoint};

pub const MIN_RADII: usize = 4;
pub const MIN_BALL_POINTS: usize = 10;
pub const MIN_LOCAL_POINTS: usize = 50;
pub const RESIDUAL_FLAG: f64 = 0.2;

/// Geometric radii from `r_max` down to `r_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusSchedule {
    pub r_max: f64,
    pub r_min: f64,
    pub count: usize,
}

impl RadiusSchedule {
    pub fn new(r_max: f64, r_min: f64, count: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_min > 0.0 && r_min <= r_max) || count < 2 {
            return Err(Error::InvalidArgument(format!("bad radius schedule {r_max} {r_min} {count}")));
        }
        Ok(Self { r_max, r_min, count })
    }

    /// `r_k = r_max 2⁻ᵏ`, `k < count`.
    pub fn dyadic(r_max: f64, count: usize) -> Result<Self> {
        Self::new(r_max, r_max * 0.5f64.powi(count as i32 - 1), count)
    }

    /// Decreasing radii.
    pub fn radii(&self) -> Vec<f64> {
        let q = (self.r_min / self.r_max).ln() / (self.count - 1) as f64;
        (0..self.count).map(|k| self.r_max * (q * k as f64).exp()).collect()
    }

    /// Ratio between consecutive radii.
    pub fn ratio(&self) -> f64 {
        (self.r_max / self.r_min).powf(1.0 / (self.count - 1) as f64)
    }

    /// Schedule spanning the distances to the `k_min`-th nearest sample point
    /// and to the point holding a fraction `frac_max` of the sample.
    pub fn adaptive(distances: &[f64], k_min: usize, frac_max: f64, count: usize) -> Result<Self> {
        let mut d: Vec<f64> = distances.iter().copied().filter(|x| *x > 0.0).collect();
        d.sort_by(f64::total_cmp);
        let hi = ((frac_max * distances.len() as f64) as usize).min(d.len().saturating_sub(1));
        if d.len() <= k_min || hi <= k_min {
            return Err(Error::InsufficientSample(format!("{} points too few for adaptive radii", d.len())));
        }
        Self::new(d[hi], d[k_min], count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DimensionKind {
    #[serde(rename = "pointwise")]
    Pointwise,
    #[serde(rename = "directional-Z")]
    DirectionalZ,
    #[serde(rename = "directional-W")]
    DirectionalW,
    #[serde(rename = "trace")]
    Trace,
}

impl DimensionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pointwise => "pointwise",
            Self::DirectionalZ => "directional-Z",
            Self::DirectionalW => "directional-W",
            Self::Trace => "trace",
        }
    }

    pub fn of_slice(direction: SliceDirection) -> Self {
        match direction {
            SliceDirection::Z => Self::DirectionalZ,
            SliceDirection::W => Self::DirectionalW,
            SliceDirection::Trace => Self::Trace,
        }
    }
}

/// Regression of `log mass` on `log r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub kind: DimensionKind,
    pub basepoint: usize,
    pub slope: f64,
    pub stderr: f64,
    /// RMS residual of the fit in log-mass units.
    pub residual: f64,
    /// Largest deviation of a secant slope between consecutive radii.
    pub deviation: f64,
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    pub sample_count: usize,
}

impl DimensionEstimate {
    pub fn flagged(&self) -> bool {
        self.residual > RESIDUAL_FLAG || !self.stderr.is_finite()
    }

    /// Value compared with lower-bound statements.
    pub fn upper_reading(&self) -> f64 {
        self.slope + self.deviation
    }

    /// Value compared with upper-bound statements.
    pub fn lower_reading(&self) -> f64 {
        self.slope - self.deviation
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub residual: f64,
}

/// Ordinary least squares `y ≈ a x + b`. Returns `(a, b, stderr(a), rms)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let f = fit(xs, ys);
    (f.slope, f.intercept, f.stderr, f.residual)
}

pub fn fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return LinearFit { slope: 0.0, intercept: my, stderr: f64::INFINITY, residual: 0.0 };
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let stderr = if xs.len() > 2 { (ss / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    LinearFit { slope, intercept, stderr, residual: (ss / n).sqrt() }
}

/// Fits `log mass` against `log r` over the radii with positive mass.
pub fn estimate_from_masses(
    kind: DimensionKind,
    basepoint: usize,
    radii: &[f64],
    masses: &[f64],
    sample_count: usize,
) -> Result<DimensionEstimate> {
    let (r, m): (Vec<f64>, Vec<f64>) = radii.iter().zip(masses).filter(|(_, m)| **m > 0.0).map(|(r, m)| (*r, *m)).unzip();
    if r.len() < MIN_RADII {
        return Err(Error::InsufficientSample(format!("only {} radii with positive mass", r.len())));
    }
    if m.iter().all(|x| *x == m[0]) {
        return Ok(DimensionEstimate {
            kind,
            basepoint,
            slope: 0.0,
            stderr: f64::INFINITY,
            residual: 0.0,
            deviation: 0.0,
            radii: r,
            masses: m,
            sample_count,
        });
    }
    let xs: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = m.iter().map(|x| x.ln()).collect();
    let f = fit(&xs, &ys);
    let deviation = xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0]) - f.slope).abs())
        .fold(0.0, f64::max);
    Ok(DimensionEstimate {
        kind,
        basepoint,
        slope: f.slope,
        stderr: f.stderr,
        residual: f.residual,
        deviation,
        radii: r,
        masses: m,
        sample_count,
    })
}

/// Empirical `ν(B_x(r)) ≈ N(r)/N` in the Fubini–Study distance, fitted over
/// the schedule. Radii holding fewer than ten points are dropped.
pub fn pointwise_dimension(
    sample: &MeasureSample,
    x: &HomogeneousPoint,
    schedule: &RadiusSchedule,
) -> Result<DimensionEstimate> {
    let dist: Vec<f64> = sample.points.iter().map(|p| fs_distance(p, x)).collect();
    pointwise_from_distances(&dist, schedule, 0)
}

/// Pointwise estimate from precomputed distances to the basepoint; a zero
/// distance (the basepoint itself) is not counted.
pub fn pointwise_from_distances(dist: &[f64], schedule: &RadiusSchedule, basepoint: usize) -> Result<DimensionEstimate> {
    let local = dist.iter().filter(|d| **d > 0.0 && **d <= schedule.r_max).count();
    if local < MIN_LOCAL_POINTS {
        return Err(Error::InsufficientSample(format!("{local} sample points within r_max, need {MIN_LOCAL_POINTS}")));
    }
    let n = dist.len() as f64;
    let mut radii = Vec::new();
    let mut masses = Vec::new();
    for r in schedule.radii() {
        let c = dist.iter().filter(|d| **d > 0.0 && **d <= r).count();
        if c >= MIN_BALL_POINTS {
            radii.push(r);
            masses.push(c as f64 / n);
        }
    }
    estimate_from_masses(DimensionKind::Pointwise, basepoint, &radii, &masses, dist.len())
}

/// `count` geometric radii from `ρ` down to the resolution floor `3h`.
pub fn grid_schedule(grid: &LocalGrid, count: usize) -> Result<RadiusSchedule> {
    RadiusSchedule::new(grid.rho, RESOLUTION_FLOOR * grid.h(), count)
}

/// Slope of `log ball_mass(0, r)` against `log r` at the grid centre.
pub fn directional_dimension(sm: &SliceMeasure, center: [f64; 4], schedule: &RadiusSchedule) -> Result<DimensionEstimate> {
    let radii = schedule.radii();
    let masses = radii.iter().map(|&r| ball_mass(sm, center, r)).collect::<Result<Vec<f64>>>()?;
    estimate_from_masses(DimensionKind::of_slice(sm.direction), 0, &radii, &masses, 0)
}

/// Summary of estimates at independent basepoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileReport {
    pub kind: DimensionKind,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation of the slopes across basepoints.
    pub spread: f64,
    pub mean_stderr: f64,
    pub mean_deviation: f64,
    pub constant: bool,
    pub flagged: usize,
}

/// Sorts by basepoint so that the report does not depend on input order.
pub fn profile_report(kind: DimensionKind, estimates: &[DimensionEstimate]) -> Result<ProfileReport> {
    let mut e: Vec<&DimensionEstimate> = estimates.iter().filter(|e| e.kind == kind).collect();
    if e.is_empty() {
        return Err(Error::InsufficientSample(format!("no {} estimates", kind.as_str())));
    }
    e.sort_by_key(|x| x.basepoint);
    let n = e.len() as f64;
    let mean = e.iter().map(|x| x.slope).sum::<f64>() / n;
    let spread = if e.len() > 1 {
        (e.iter().map(|x| (x.slope - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mean_stderr = e.iter().map(|x| x.stderr).sum::<f64>() / n;
    let mean_deviation = e.iter().map(|x| x.deviation).sum::<f64>() / n;
    let flagged = e.iter().filter(|x| x.flagged()).count();
    Ok(ProfileReport {
        kind,
        count: e.len(),
        mean,
        spread,
        mean_stderr,
        mean_deviation,
        constant: spread <= 3.0 * mean_stderr,
        flagged,
    })
}

/// CSV with columns `basepoint,kind,slope,stderr,residual`.
pub fn write_estimates_csv<W: Write>(estimates: &[DimensionEstimate], mut out: W) -> Result<()> {
    writeln!(out, "basepoint,kind,slope,stderr,residual")?;
    for e in estimates {
        writeln!(out, "{},{},{},{},{}", e.basepoint, e.kind.as_str(), e.slope, e.stderr, e.residual)?;
    }
    Ok(())
}

/// Z, W and trace estimates at one basepoint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionalSite {
    pub basepoint: usize,
    pub z: DimensionEstimate,
    pub w: DimensionEstimate,
    pub trace: DimensionEstimate,
}

impl DirectionalSite {
    /// `|trace − min(Z, W)|` against the combined regression error.
    pub fn min_rule_gap(&self) -> (f64, f64) {
        let m = if self.z.slope <= self.w.slope { &self.z } else { &self.w };
        ((self.trace.slope - m.slope).abs(), self.trace.stderr.hypot(m.stderr))
    }
}

/// Directional slopes of the Green current at the centre of a grid in the
/// given coordinates.
pub fn directional_site(
    ev: &GreenEvaluator,
    coords: &NormalFormCoordinates,
    m: usize,
    radii: usize,
    basepoint: usize,
) -> Result<DirectionalSite> {
    let grid = LocalGrid::on(*coords, m)?;
    let pot = local_potential(ev, coords, &grid)?;
    let schedule = grid_schedule(&grid, radii)?;
    let z = slice_measure(&pot, SliceDirection::Z)?;
    let w = slice_measure(&pot, SliceDirection::W)?;
    let t = trace_measure(&z, &w)?;
    let est = |sm: &SliceMeasure| -> Result<DimensionEstimate> {
        let mut e = directional_dimension(sm, [0.0; 4], &schedule)?;
        e.basepoint = basepoint;
        Ok(e)
    };
    Ok(DirectionalSite { basepoint, z: est(&z)?, w: est(&w)?, trace: est(&t)? })
}

#[derive(Clone, Debug)]
pub struct ProfileParams {
    pub basepoints: usize,
    pub frame_depth: usize,
    pub grid_m: usize,
    pub green_depth: usize,
    pub radii: usize,
    pub seed: u64,
}

impl Default for ProfileParams {
    fn default() -> Self {
        Self { basepoints: 20, frame_depth: 40, grid_m: DEFAULT_RESOLUTION, green_depth: DEFAULT_DEPTH, radii: 6, seed: 0 }
    }
}

/// Frames, slices and estimates at one basepoint, kept for reuse.
#[derive(Clone, Debug)]
pub struct ProfileSite {
    pub frame: OseledecFrame,
    pub coords: NormalFormCoordinates,
    pub site: DirectionalSite,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionProfile {
    pub estimates: Vec<DimensionEstimate>,
    pub reports: Vec<ProfileReport>,
    /// Basepoints whose pipeline failed, with the error.
    pub failures: Vec<(usize, String)>,
    #[serde(skip)]
    pub sites: Vec<ProfileSite>,
    #[serde(skip)]
    pub orbits: Vec<crate::ergodic_sampler::BackwardOrbit>,
}

impl DimensionProfile {
    pub fn report(&self, kind: DimensionKind) -> Option<&ProfileReport> {
        self.reports.iter().find(|r| r.kind == kind)
    }
}

/// Directional profile over the first `basepoints` points of a μ-sample:
/// backward orbit of depth `frame_depth` (walker stream `i` of `seed`),
/// frame, normal-form chart, Green potential on an `m⁴` grid and Z, W and
/// trace slopes at the centre. Basepoints that fail are listed, not
/// dropped silently.
pub fn dimension_profile(solver: &PreimageSolver, sample: &MeasureSample, params: &ProfileParams) -> Result<DimensionProfile> {
    if params.basepoints == 0 || sample.len() < params.basepoints {
        return Err(Error::InsufficientSample(format!(
            "{} basepoints requested from a sample of {}",
            params.basepoints,
            sample.len()
        )));
    }
    let ev = GreenEvaluator::new(solver.map(), params.green_depth)?;
    let mut sites = Vec::new();
    let mut orbits = Vec::new();
    let mut failures = Vec::new();
    for (i, x) in sample.points.iter().take(params.basepoints).enumerate() {
        let run = || -> Result<(ProfileSite, crate::ergodic_sampler::BackwardOrbit)> {
            let orbit = seeded_backward_orbit(solver, x, params.frame_depth, params.seed, i)?;
            let frame = compute_frame(solver.map(), &orbit)?;
            let coords = NormalFormCoordinates::from_frame(solver.map(), frame)?;
            let site = directional_site(&ev, &coords, params.grid_m, params.radii, i)?;
            Ok((ProfileSite { frame, coords, site }, orbit))
        };
        match run() {
            Ok((s, o)) => {
                sites.push(s);
                orbits.push(o);
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    let estimates: Vec<DimensionEstimate> =
        sites.iter().flat_map(|s| [s.site.z.clone(), s.site.w.clone(), s.site.trace.clone()]).collect();
    let reports = [DimensionKind::DirectionalZ, DimensionKind::DirectionalW, DimensionKind::Trace]
        .iter()
        .filter_map(|k| profile_report(*k, &estimates).ok())
        .collect();
    Ok(DimensionProfile { estimates, reports, failures, sites, orbits })
}

/// Estimates at `x` and at `f(x)` with the frame transported by `Df(x)`.
#[derive(Clone, Debug, Serialize)]
pub struct TransportCheck {
    pub basepoint: usize,
    pub at_x: DirectionalSite,
    pub at_fx: DirectionalSite,
}

impl TransportCheck {
    /// Largest `|Δslope| / combined stderr` over Z, W and trace.
    pub fn worst_ratio(&self) -> f64 {
        [(&self.at_x.z, &self.at_fx.z), (&self.at_x.w, &self.at_fx.w), (&self.at_x.trace, &self.at_fx.trace)]
            .iter()
            .map(|(a, b)| (a.slope - b.slope).abs() / a.stderr.hypot(b.stderr))
            .fold(0.0, f64::max)
    }
}

pub fn transport_check(
    map: &crate::projective_core::HomogeneousMap,
    ev: &GreenEvaluator,
    site: &ProfileSite,
    m: usize,
    radii: usize,
) -> Result<TransportCheck> {
    let moved = forward_transport(map, &site.frame)?;
    let coords = NormalFormCoordinates::from_frame(map, moved)?;
    let at_fx = directional_site(ev, &coords, m, radii, site.site.basepoint)?;
    Ok(TransportCheck { basepoint: site.site.basepoint, at_x: site.site.clone(), at_fx })
}

/// Pointwise estimates at the first `basepoints` sample points against the
/// rest of the sample, with radii adapted to each point.
pub fn pointwise_profile(
    sample: &MeasureSample,
    basepoints: usize,
    k_min: usize,
    frac_max: f64,
    radii: usize,
) -> Result<(Vec<DimensionEstimate>, Vec<(usize, String)>)> {
    use rayon::prelude::*;
    if sample.len() < basepoints || basepoints == 0 {
        return Err(Error::InsufficientSample(format!("{basepoints} basepoints from a sample of {}", sample.len())));
    }
    let results: Vec<Result<DimensionEstimate>> = (0..basepoints)
        .into_par_iter()
        .map(|i| {
            let x = sample.points[i];
            let dist: Vec<f64> = sample.points.iter().map(|p| fs_distance(p, &x)).collect();
            let schedule = RadiusSchedule::adaptive(&dist, k_min, frac_max, radii)?;
            pointwise_from_distances(&dist, &schedule, i)
        })
        .collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => ok.push(e),
            Err(e) => failed.push((i, e.to_string())),
        }
    }
    Ok((ok, failed))
}
