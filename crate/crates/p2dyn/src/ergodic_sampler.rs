//! Equilibrium-measure sampling by random backward iteration, and Lyapunov
//! exponents of the derivative cocycle along backward orbits.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, M2};
use crate::preimage_solver::PreimageSolver;
use crate::projective_core::{fs_distance, ChartPoint, HomogeneousMap, HomogeneousPoint, C64};

pub const MIN_JACOBIAN: f64 = 1e-10;
pub const MAX_RETRIES: usize = 5;
pub const CONSISTENCY_TOL: f64 = 1e-9;
pub const MIN_LYAPUNOV_ITER: usize = 100;

const STREAM_SAMPLE: u64 = 0;
const STREAM_LYAPUNOV: u64 = 1 << 32;
const STREAM_ORBIT: u64 = 2 << 32;

/// Generic starting point of every walk.
#[allow(clippy::approx_constant)]
pub fn start_point() -> HomogeneousPoint {
    HomogeneousPoint::new([C64::new(0.318_309, 0.159_155), C64::new(-0.414_214, 0.271_828), C64::new(1.0, 0.0)])
        .expect("nonzero")
}

/// Random stream of walker `index`: ChaCha8 seeded with the master seed,
/// stream number `tag + index`. Streams never overlap.
pub fn walker_rng(seed: u64, tag: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag + index as u64);
    rng
}

/// `points[0] = x₀` and `f(points[k+1]) = points[k]`.
#[derive(Clone, Debug)]
pub struct BackwardOrbit {
    pub points: Vec<HomogeneousPoint>,
    pub branch_choices: Vec<usize>,
}

impl BackwardOrbit {
    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    /// Largest `fs(f(x₋ₖ₋₁), x₋ₖ)` along the orbit.
    pub fn consistency(&self, map: &HomogeneousMap) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for k in 0..self.depth() {
            let img = map.evaluate(&self.points[k + 1])?;
            worst = worst.max(fs_distance(&img, &self.points[k]));
        }
        Ok(worst)
    }
}

/// One backward step avoiding near-critical preimages (`|Jac| < 1e-10`),
/// redrawing at most five times.
pub fn backward_step<R: rand::Rng>(
    solver: &PreimageSolver,
    target: &HomogeneousPoint,
    rng: &mut R,
) -> Result<(HomogeneousPoint, usize)> {
    let set = solver.preimages(target)?;
    let all = set.expanded();
    for _ in 0..=MAX_RETRIES {
        let ix = rng.random_range(0..all.len());
        let p = all[ix];
        if solver.map().jacobian_modulus(&p)? >= MIN_JACOBIAN {
            return Ok((p, ix));
        }
    }
    Err(Error::CriticalPoint(MIN_JACOBIAN))
}

pub fn backward_orbit<R: rand::Rng>(
    solver: &PreimageSolver,
    x0: &HomogeneousPoint,
    depth: usize,
    rng: &mut R,
) -> Result<BackwardOrbit> {
    let mut points = Vec::with_capacity(depth + 1);
    let mut branch_choices = Vec::with_capacity(depth);
    points.push(*x0);
    for _ in 0..depth {
        let (p, ix) = backward_step(solver, points.last().expect("nonempty"), rng)?;
        points.push(p);
        branch_choices.push(ix);
    }
    Ok(BackwardOrbit { points, branch_choices })
}

/// Backward orbit of depth `depth` from `x0` on stream `index` of `seed`.
pub fn seeded_backward_orbit(
    solver: &PreimageSolver,
    x0: &HomogeneousPoint,
    depth: usize,
    seed: u64,
    index: usize,
) -> Result<BackwardOrbit> {
    let mut rng = walker_rng(seed, STREAM_ORBIT, index);
    backward_orbit(solver, x0, depth, &mut rng)
}

/// Endpoints of independent random backward walks.
#[derive(Clone, Debug)]
pub struct MeasureSample {
    pub points: Vec<HomogeneousPoint>,
    pub depth: usize,
    pub seed: u64,
    pub failures: usize,
}

impl MeasureSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with columns `chart,re_z,im_z,re_w,im_w` (max-modulus chart).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "chart,re_z,im_z,re_w,im_w")?;
        for p in &self.points {
            let c = ChartPoint::from_homogeneous(p);
            writeln!(
                out,
                "{},{},{},{},{}",
                c.chart, c.coords[0].re, c.coords[0].im, c.coords[1].re, c.coords[1].im
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if n == 0 {
                if line.trim() != "chart,re_z,im_z,re_w,im_w" {
                    return Err(Error::Parse { line: 1, msg: "unexpected sample header".into() });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let err = || Error::Parse { line: n + 1, msg: "malformed sample row".into() };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(err());
            }
            let chart: usize = f[0].trim().parse().map_err(|_| err())?;
            let v: Vec<f64> = f[1..]
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err())?;
            let cp = ChartPoint::new(chart, [C64::new(v[0], v[1]), C64::new(v[2], v[3])])?;
            points.push(cp.to_homogeneous()?);
        }
        Ok(Self { points, depth: 0, seed: 0, failures: 0 })
    }
}

/// `count` independent walks of depth `depth` from [`start_point`]. Walker
/// `i` uses [`walker_rng`]`(seed, 0, i)`. More than 1% failed walkers is
/// an error; failed walkers are otherwise dropped and counted.
pub fn sample_equilibrium(solver: &PreimageSolver, depth: usize, count: usize, seed: u64) -> Result<MeasureSample> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let x0 = start_point();
    let results: Vec<Result<HomogeneousPoint>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = walker_rng(seed, STREAM_SAMPLE, i);
            let mut p = x0;
            for _ in 0..depth {
                p = backward_step(solver, &p, &mut rng)?.0;
            }
            Ok(p)
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let rate = failures as f64 / count as f64;
    if rate > 0.01 {
        return Err(Error::WalkerFailures(rate));
    }
    let points = results.into_iter().filter_map(|r| r.ok()).collect();
    Ok(MeasureSample { points, depth, seed, failures })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    pub lambda1: f64,
    pub lambda2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub walkers: usize,
    pub iterations: usize,
}

impl LyapunovEstimate {
    pub fn max_stderr(&self) -> f64 {
        self.stderr1.max(self.stderr2)
    }
}

/// Differential of `f` at `p` from the chart of `p` to the chart of `image`.
pub fn cocycle(map: &HomogeneousMap, p: &ChartPoint, image: &ChartPoint) -> Result<M2> {
    Ok(map.differential_to(p, image.chart)?.matrix)
}

/// Exponents of one backward walk of length `n_iter` from `x0`: QR
/// re-orthonormalisation at every step of the adjoint cocycle
/// `Df(x₋ₙ)*⋯Df(x₋₁)*`, whose singular values are those of
/// `Df(x₋₁)⋯Df(x₋ₙ) = Dfⁿ(x₋ₙ)`.
pub fn walker_exponents<R: rand::Rng>(
    solver: &PreimageSolver,
    x0: &HomogeneousPoint,
    n_iter: usize,
    rng: &mut R,
) -> Result<[f64; 2]> {
    let map = solver.map();
    let mut q = M2::identity();
    let mut sums = [0.0; 2];
    let mut cur = ChartPoint::from_homogeneous(x0);
    let mut cur_h = *x0;
    for _ in 0..n_iter {
        let (prev_h, _) = backward_step(solver, &cur_h, rng)?;
        let prev = ChartPoint::from_homogeneous(&prev_h);
        let dfm = cocycle(map, &prev, &cur)?;
        let (nq, r) = linalg::qr(&(dfm.adjoint() * q));
        sums[0] += r[0].ln();
        sums[1] += r[1].ln();
        q = nq;
        cur = prev;
        cur_h = prev_h;
    }
    Ok([sums[0] / n_iter as f64, sums[1] / n_iter as f64])
}

/// Mean exponents over walkers started at the sample points, with standard
/// errors across walkers. Walker `i` uses stream `2³² + i` of `seed`.
pub fn lyapunov_exponents(
    solver: &PreimageSolver,
    sample: &MeasureSample,
    n_iter: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if n_iter < MIN_LYAPUNOV_ITER {
        return Err(Error::InvalidArgument(format!("n_iter must be at least {MIN_LYAPUNOV_ITER}")));
    }
    if sample.len() < 2 {
        return Err(Error::InsufficientSample("need at least two walkers".into()));
    }
    let results: Vec<Result<[f64; 2]>> = sample
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = walker_rng(seed, STREAM_LYAPUNOV, i);
            walker_exponents(solver, p, n_iter, &mut rng)
        })
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    let rate = failures as f64 / results.len() as f64;
    if rate > 0.01 {
        return Err(Error::WalkerFailures(rate));
    }
    let vals: Vec<[f64; 2]> = results.into_iter().filter_map(|r| r.ok()).collect();
    let (m1, s1) = mean_stderr(vals.iter().map(|v| v[0]));
    let (m2, s2) = mean_stderr(vals.iter().map(|v| v[1]));
    let ((m1, s1), (m2, s2)) = if m1 >= m2 { ((m1, s1), (m2, s2)) } else { ((m2, s2), (m1, s1)) };
    Ok(LyapunovEstimate { lambda1: m1, lambda2: m2, stderr1: s1, stderr2: s2, walkers: vals.len(), iterations: n_iter })
}

pub fn mean_stderr<I: Iterator<Item = f64>>(it: I) -> (f64, f64) {
    let v: Vec<f64> = it.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `(1/n) log Lip(f⁻ⁿ)` along backward orbits, with `Lip(f⁻ⁿ) = ‖Dfⁿ(x₋ₙ)⁻¹‖`.
#[derive(Clone, Debug, Serialize)]
pub struct ContractionDiagnostic {
    pub ns: Vec<usize>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Least-squares slope of `log Lip(f⁻ⁿ)` against `n`; tends to `−λ₂`.
    pub slope: f64,
}

/// Log singular values `(log σ₁, log σ₂)` of `Dfⁿ(x₋ₙ)` for every prefix
/// `n = 1..=depth` of the orbit.
pub fn orbit_log_singular_values(map: &HomogeneousMap, orbit: &BackwardOrbit) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(orbit.depth());
    let mut a = M2::identity();
    let mut log_scale = 0.0;
    let mut log_det = 0.0;
    let c0 = ChartPoint::from_homogeneous(&orbit.points[0]);
    let mut charts = vec![c0];
    for k in 1..=orbit.depth() {
        let pk = ChartPoint::from_homogeneous(&orbit.points[k]);
        let m = cocycle(map, &pk, &charts[k - 1])?;
        charts.push(pk);
        a *= m;
        log_det += linalg::det(&m).norm().ln();
        let (s1, _) = linalg::singular_values(&a);
        a /= C64::new(s1, 0.0);
        log_scale += s1.ln();
        let l1 = log_scale;
        out.push((l1, log_det - l1));
    }
    Ok(out)
}

pub fn contraction_diagnostic(map: &HomogeneousMap, orbits: &[BackwardOrbit], ns: &[usize]) -> Result<ContractionDiagnostic> {
    if orbits.is_empty() || ns.is_empty() {
        return Err(Error::InsufficientSample("no orbits or depths".into()));
    }
    let max_n = *ns.iter().max().expect("nonempty");
    let logs: Vec<Vec<(f64, f64)>> = orbits
        .iter()
        .map(|o| {
            if o.depth() < max_n {
                return Err(Error::InvalidArgument(format!("orbit depth {} below {max_n}", o.depth())));
            }
            orbit_log_singular_values(map, o)
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    let mut stderrs = Vec::new();
    let mut means_log = Vec::new();
    for &n in ns {
        let (m, s) = mean_stderr(logs.iter().map(|l| -l[n - 1].1 / n as f64));
        values.push(m);
        stderrs.push(s);
        means_log.push(m * n as f64);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slope = crate::dimension_estimators::linear_fit(&xs, &means_log).0;
    Ok(ContractionDiagnostic { ns: ns.to_vec(), values, stderrs, slope })
}
