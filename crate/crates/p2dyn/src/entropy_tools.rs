//! Dynamical distances, separated sets and Brin–Katok entropy estimates.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dimension_estimators::fit;
use crate::error::{Error, Result};
use crate::ergodic_sampler::{mean_stderr, MeasureSample};
use crate::projective_core::{fs_distance, HomogeneousMap, HomogeneousPoint};

pub const MIN_ENTROPY_SAMPLE: usize = 2000;

/// `B_n(x, r)`.
#[derive(Clone, Copy, Debug)]
pub struct DynamicalBallQuery {
    pub center: HomogeneousPoint,
    pub n: usize,
    pub r: f64,
}

impl DynamicalBallQuery {
    pub fn new(center: HomogeneousPoint, n: usize, r: f64) -> Result<Self> {
        if n < 1 || !(r > 0.0) {
            return Err(Error::InvalidArgument("dynamical ball needs n ≥ 1 and r > 0".into()));
        }
        Ok(Self { center, n, r })
    }

    /// Whether `y ∈ B_n(x, r)`.
    pub fn contains(&self, map: &HomogeneousMap, y: &HomogeneousPoint) -> Result<bool> {
        let a = forward_orbit(map, &self.center, self.n)?;
        let b = forward_orbit(map, y, self.n)?;
        Ok(orbit_distance(&a, &b, self.n, self.r) < self.r)
    }
}

/// `x, f(x), …, fⁿ(x)`.
pub fn forward_orbit(map: &HomogeneousMap, x: &HomogeneousPoint, n: usize) -> Result<Vec<HomogeneousPoint>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(*x);
    for _ in 0..n {
        let next = map.evaluate(out.last().expect("nonempty"))?;
        out.push(next);
    }
    Ok(out)
}

/// `d_n(x, y) = max_{0≤k≤n} d(fᵏx, fᵏy)`.
pub fn dynamical_distance(map: &HomogeneousMap, x: &HomogeneousPoint, y: &HomogeneousPoint, n: usize) -> Result<f64> {
    let a = forward_orbit(map, x, n)?;
    let b = forward_orbit(map, y, n)?;
    Ok(orbit_distance(&a, &b, n, f64::INFINITY))
}

/// `d_n` from precomputed orbits; stops as soon as the running maximum
/// reaches `threshold`.
pub fn orbit_distance(a: &[HomogeneousPoint], b: &[HomogeneousPoint], n: usize, threshold: f64) -> f64 {
    let mut best: f64 = 0.0;
    for k in 0..=n {
        best = best.max(fs_distance(&a[k], &b[k]));
        if best >= threshold {
            break;
        }
    }
    best
}

/// Forward orbits of every point up to `n`.
pub fn orbits(map: &HomogeneousMap, points: &[HomogeneousPoint], n: usize) -> Result<Vec<Vec<HomogeneousPoint>>> {
    points.par_iter().map(|p| forward_orbit(map, p, n)).collect()
}

/// Greedy maximal `(n, r)`-separated subset in input order, as indices.
pub fn separated_set(points: &[HomogeneousPoint], map: &HomogeneousMap, n: usize, r: f64) -> Result<Vec<usize>> {
    let orb = orbits(map, points, n)?;
    Ok(separated_from_orbits(&orb, n, r))
}

pub fn separated_from_orbits(orb: &[Vec<HomogeneousPoint>], n: usize, r: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, o) in orb.iter().enumerate() {
        if kept.iter().all(|&j| orbit_distance(o, &orb[j], n, r) >= r) {
            kept.push(i);
        }
    }
    kept
}

/// Centres of a separated set whose `B_n(x, r/2)` carries empirical mass
/// at least `mass_threshold`.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentratedSet {
    pub indices: Vec<usize>,
    pub masses: Vec<f64>,
    pub separated: usize,
    /// Nothing passed the threshold.
    pub empty: bool,
}

pub fn concentrated_separated_set(
    sample: &MeasureSample,
    map: &HomogeneousMap,
    n: usize,
    r: f64,
    mass_threshold: f64,
) -> Result<ConcentratedSet> {
    let orb = orbits(map, &sample.points, n)?;
    let sep = separated_from_orbits(&orb, n, r);
    let total = orb.len() as f64;
    let masses: Vec<f64> = sep
        .iter()
        .map(|&i| orb.iter().filter(|o| orbit_distance(&orb[i], o, n, 0.5 * r) < 0.5 * r).count() as f64 / total)
        .collect();
    let (indices, masses): (Vec<usize>, Vec<f64>) =
        sep.iter().zip(&masses).filter(|(_, m)| **m >= mass_threshold).map(|(i, m)| (*i, *m)).unzip();
    Ok(ConcentratedSet { empty: indices.is_empty(), indices, masses, separated: sep.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    /// Size of the maximal `(n, r)`-separated subset of the whole sample.
    pub separated_count: usize,
    /// Mean of `−log ν(B_n(x, r))` over basepoints.
    pub mean_neg_log_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyEstimate {
    pub brin_katok: f64,
    pub brin_katok_stderr: f64,
    pub separated: f64,
    pub separated_stderr: f64,
    pub n_list: Vec<usize>,
    pub r: f64,
    pub basepoints: usize,
    pub rows: Vec<EntropyRow>,
}

impl EntropyEstimate {
    pub fn combined_stderr(&self) -> f64 {
        self.brin_katok_stderr.hypot(self.separated_stderr)
    }

    /// CSV with columns `n,N_n,neg_log_mass,brin_katok,separated`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "n,N_n,neg_log_mass,brin_katok,separated")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.n, row.separated_count, row.mean_neg_log_mass, self.brin_katok, self.separated
            )?;
        }
        Ok(())
    }
}

/// Parameters of [`brin_katok_entropy`].
#[derive(Clone, Debug)]
pub struct EntropyParams {
    pub n_list: Vec<usize>,
    pub r: f64,
    /// Sample points used as Brin–Katok basepoints.
    pub basepoints: usize,
    /// Jackknife groups for the separated-set error bar.
    pub splits: usize,
}

impl Default for EntropyParams {
    fn default() -> Self {
        Self { n_list: vec![1, 2, 3, 4], r: 0.8, basepoints: 400, splits: 10 }
    }
}

/// Two estimators of `h_ν`:
///
/// * Brin–Katok: for each basepoint, the slope over `n_list` of
///   `−log ν(B_n(x, r))`, with `ν` the other sample points (leave-one-out).
///   Mean and standard error over basepoints.
/// * Separated sets: slope of `log N_n` against `n` on the whole sample,
///   with a delete-a-group jackknife error over `splits` groups.
///
/// When some ball is empty at the largest `n`, that `n` is dropped.
pub fn brin_katok_entropy(map: &HomogeneousMap, sample: &MeasureSample, params: &EntropyParams) -> Result<EntropyEstimate> {
    if sample.len() < MIN_ENTROPY_SAMPLE {
        return Err(Error::InsufficientSample(format!("entropy needs ≥ {MIN_ENTROPY_SAMPLE} points, got {}", sample.len())));
    }
    let mut n_list = params.n_list.clone();
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::InvalidArgument("n_list must be increasing, positive, with at least two entries".into()));
    }
    if !(params.r > 0.0) || params.basepoints < 2 || params.splits < 2 {
        return Err(Error::InvalidArgument("entropy needs r > 0, ≥ 2 basepoints and ≥ 2 splits".into()));
    }
    let n_max = *n_list.last().expect("nonempty");
    let orb = orbits(map, &sample.points, n_max)?;
    let r = params.r;
    let b = params.basepoints.min(orb.len());
    // counts[i][k]: other points in B_{n_list[k]}(x_i, r).
    let counts: Vec<Vec<usize>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut c = vec![0usize; n_list.len()];
            for (j, o) in orb.iter().enumerate() {
                if j == i {
                    continue;
                }
                let mut best: f64 = 0.0;
                let mut k = 0;
                for step in 0..=n_max {
                    best = best.max(fs_distance(&orb[i][step], &o[step]));
                    if best >= r {
                        break;
                    }
                    while k < n_list.len() && n_list[k] == step {
                        c[k] += 1;
                        k += 1;
                    }
                }
            }
            c
        })
        .collect();
    while n_list.len() > 2 && counts.iter().any(|c| c[n_list.len() - 1] == 0) {
        n_list.pop();
    }
    let kk = n_list.len();
    if counts.iter().any(|c| c[kk - 1] == 0) {
        return Err(Error::InsufficientSample("empty dynamical balls even at the smallest horizons".into()));
    }
    let others = (orb.len() - 1) as f64;
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let slopes: Vec<f64> = counts
        .iter()
        .map(|c| {
            let ys: Vec<f64> = (0..kk).map(|k| -(c[k] as f64 / others).ln()).collect();
            fit(&xs, &ys).slope
        })
        .collect();
    let (bk, bk_se) = mean_stderr(slopes.into_iter());

    let separated_slope = |part: &[Vec<HomogeneousPoint>]| {
        let ys: Vec<f64> = n_list.iter().map(|&n| (separated_from_orbits(part, n, r).len() as f64).ln()).collect();
        fit(&xs, &ys).slope
    };
    let sep = separated_slope(&orb);
    let splits = params.splits;
    let leave_out: Vec<f64> = (0..splits)
        .into_par_iter()
        .map(|s| {
            let part: Vec<Vec<HomogeneousPoint>> =
                orb.iter().enumerate().filter(|(i, _)| i % splits != s).map(|(_, o)| o.clone()).collect();
            separated_slope(&part)
        })
        .collect();
    let jm = leave_out.iter().sum::<f64>() / splits as f64;
    let k = splits as f64;
    let sep_se = ((k - 1.0) / k * leave_out.iter().map(|x| (x - jm).powi(2)).sum::<f64>()).sqrt();

    let rows = n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| EntropyRow {
            n,
            separated_count: separated_from_orbits(&orb, n, r).len(),
            mean_neg_log_mass: counts.iter().map(|c| -(c[k] as f64 / others).ln()).sum::<f64>() / b as f64,
        })
        .collect();
    Ok(EntropyEstimate {
        brin_katok: bk,
        brin_katok_stderr: bk_se,
        separated: sep,
        separated_stderr: sep_se,
        n_list,
        r,
        basepoints: b,
        rows,
    })
}
