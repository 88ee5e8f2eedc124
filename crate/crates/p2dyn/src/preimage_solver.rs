//! All preimages of a point: resultant elimination, Aberth–Ehrlich on the
//! eliminant, back-substitution and Newton refinement.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, M2, V2};
use crate::projective_core::{
    chart_axes, chart_coords, exponents, fs_distance_raw, ChartPoint, HomogeneousMap,
    HomogeneousPoint, C64,
};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub const ABERTH_TOL: f64 = 1e-13;
pub const ABERTH_MAX_ITER: usize = 200;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const CLUSTER_TOL: f64 = 1e-8;
pub const LEADING_TOL: f64 = 1e-12;
pub const MAX_ROTATIONS: usize = 3;

/// Outcome of [`aberth_roots`].
#[derive(Clone, Debug)]
pub struct AberthResult {
    pub roots: Vec<C64>,
    pub iterations: usize,
    pub converged: bool,
}

fn horner_with_derivative(c: &[C64], x: C64) -> (C64, C64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

/// Simultaneous roots of `Σ cⱼ xʲ`. Starts from a perturbed circle scaled
/// by the geometric mean root modulus; stops when the largest relative
/// correction drops below 1e-13 or after 200 sweeps.
pub fn aberth_roots(c: &[C64]) -> Result<AberthResult> {
    let mut c: Vec<C64> = c.to_vec();
    while c.last().is_some_and(|z| *z == ZERO) {
        c.pop();
    }
    if c.len() < 2 {
        return Err(Error::InvalidArgument("polynomial of degree < 1".into()));
    }
    let mut zeros_at_origin = 0;
    while c[0] == ZERO {
        c.remove(0);
        zeros_at_origin += 1;
    }
    let n = c.len() - 1;
    let mut roots = vec![ZERO; zeros_at_origin];
    if n == 0 {
        return Ok(AberthResult { roots, iterations: 0, converged: true });
    }
    let lead = c[n];
    let scale = (c[0].norm() / lead.norm()).powf(1.0 / n as f64);
    let r0 = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            C64::from_polar(r0 * (1.0 + 0.03 * k as f64 / n as f64), theta)
        })
        .collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < ABERTH_MAX_ITER {
        iterations += 1;
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let (p, dp) = horner_with_derivative(&c, z[k]);
            if p == ZERO {
                continue;
            }
            let ratio = p / dp;
            let mut s = ZERO;
            for j in 0..n {
                if j != k {
                    s += ONE / (z[k] - z[j]);
                }
            }
            let w = ratio / (ONE - ratio * s);
            if !w.is_finite() {
                continue;
            }
            z[k] -= w;
            max_step = max_step.max(w.norm() / z[k].norm().max(1e-300));
        }
        if max_step < ABERTH_TOL {
            converged = true;
            break;
        }
    }
    roots.extend(z);
    Ok(AberthResult { roots, iterations, converged })
}

/// Preimages grouped by coincidence; multiplicities sum to `d²`.
#[derive(Clone, Debug)]
pub struct PreimageSet {
    pub points: Vec<HomogeneousPoint>,
    pub multiplicities: Vec<usize>,
    pub max_residual: f64,
    pub rotation: usize,
}

impl PreimageSet {
    pub fn total_multiplicity(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// Each preimage repeated by its multiplicity.
    pub fn expanded(&self) -> Vec<HomogeneousPoint> {
        self.points
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(p, m)| std::iter::repeat_n(*p, *m))
            .collect()
    }
}

fn unitary(seed: u64) -> [[C64; 3]; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<[C64; 3]> = Vec::new();
    while cols.len() < 3 {
        let mut v = [ZERO; 3];
        for z in v.iter_mut() {
            *z = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        for _ in 0..2 {
            for q in &cols {
                let dot: C64 = (0..3).map(|i| q[i].conj() * v[i]).sum();
                for i in 0..3 {
                    v[i] -= dot * q[i];
                }
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-3 {
            cols.push([v[0] / n, v[1] / n, v[2] / n]);
        }
    }
    let mut u = [[ZERO; 3]; 3];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..3 {
            u[i][j] = col[i];
        }
    }
    u
}

/// Solver bound to one map, caching the rotated copies used for elimination.
#[derive(Clone, Debug)]
pub struct PreimageSolver {
    map: HomogeneousMap,
    rotations: Vec<([[C64; 3]; 3], HomogeneousMap)>,
}

impl PreimageSolver {
    pub fn new(map: &HomogeneousMap) -> Result<Self> {
        let rotations = (0..MAX_ROTATIONS)
            .map(|r| {
                let u = unitary(0x51ed_2701 + 7919 * r as u64);
                map.precompose_linear(&u).map(|m| (u, m))
            })
            .collect::<Result<_>>()?;
        Ok(Self { map: map.clone(), rotations })
    }

    pub fn map(&self) -> &HomogeneousMap {
        &self.map
    }

    pub fn preimages(&self, target: &HomogeneousPoint) -> Result<PreimageSet> {
        let mut last = Error::SolverIncomplete("no rotation attempted".into());
        for r in 0..self.rotations.len() {
            match self.solve_rotated(target, r) {
                Ok(set) => return Ok(set),
                Err(e) => last = e,
            }
        }
        Err(match last {
            Error::RotationRequired => {
                Error::SolverIncomplete("resultant degenerate in every rotation".into())
            }
            e => e,
        })
    }

    /// The rotated system `Fᵢ − aᵢF_k`, `Fⱼ − aⱼF_k` as polynomials in `y`
    /// whose coefficients are polynomials in `x` (chart `Y₂ = 1`).
    fn eliminant_inputs(&self, a: &[C64; 3], r: usize) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
        let k = max_index(a);
        let [i, j] = chart_axes(k);
        let rot = &self.rotations[r].1;
        let d = rot.degree() as usize;
        let comps = rot.components();
        let mut p = vec![vec![ZERO; d + 1]; d + 1];
        let mut q = vec![vec![ZERO; d + 1]; d + 1];
        for (idx, e) in exponents(d as u32).iter().enumerate() {
            let fk = comps[k].coeffs()[idx];
            let pc = comps[i].coeffs()[idx] * a[k] - fk * a[i];
            let qc = comps[j].coeffs()[idx] * a[k] - fk * a[j];
            let m = e[1] as usize;
            p[m][e[0] as usize] += pc;
            q[m][e[0] as usize] += qc;
        }
        (p, q)
    }

    fn solve_rotated(&self, target: &HomogeneousPoint, r: usize) -> Result<PreimageSet> {
        let a = *target.coords();
        let d = self.map.degree() as usize;
        let n = d * d;
        let (p, q) = self.eliminant_inputs(&a, r);
        let lead_p = p[d][0];
        let lead_q = q[d][0];
        let resultant = resultant_coefficients(&p, &q, d);
        let max_c = resultant.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(max_c > 0.0) || resultant[n].norm() < LEADING_TOL * max_c {
            return Err(Error::RotationRequired);
        }
        let xs = aberth_roots(&resultant)?.roots;
        let u = &self.rotations[r].0;
        let mut found: Vec<([C64; 3], f64)> = Vec::with_capacity(n);
        for x in xs {
            let pc: Vec<C64> = p.iter().map(|pm| eval_poly(pm, x)).collect();
            let qc: Vec<C64> = q.iter().map(|qm| eval_poly(qm, x)).collect();
            let (base, other) = if lead_p.norm() >= lead_q.norm() { (&pc, &qc) } else { (&qc, &pc) };
            let ys = univariate_roots(base)?;
            let y = ys
                .into_iter()
                .min_by(|s, t| eval_poly(other, *s).norm().total_cmp(&eval_poly(other, *t).norm()))
                .ok_or_else(|| Error::SolverIncomplete("no back-substitution root".into()))?;
            let yv = [x, y, ONE];
            let mut xv = [ZERO; 3];
            for (ii, row) in u.iter().enumerate() {
                xv[ii] = row[0] * yv[0] + row[1] * yv[1] + row[2] * yv[2];
            }
            let (root, res) = self.newton(&a, xv);
            if !(res < RESIDUAL_TOL) {
                return Err(Error::SolverIncomplete(format!("residual {res:e} after refinement")));
            }
            found.push((root, res));
        }
        let mut points: Vec<HomogeneousPoint> = Vec::new();
        let mut mult: Vec<usize> = Vec::new();
        let mut max_residual: f64 = 0.0;
        for (root, res) in found {
            max_residual = max_residual.max(res);
            let hp = HomogeneousPoint::new(root)?;
            match points.iter().position(|q| fs_distance_raw(q.coords(), hp.coords()) < CLUSTER_TOL) {
                Some(ix) => mult[ix] += 1,
                None => {
                    points.push(hp);
                    mult.push(1);
                }
            }
        }
        for (pt, m) in points.iter().zip(&mult) {
            if *m > 1 && !self.is_singular(&a, pt) {
                return Err(Error::SolverIncomplete("coincident roots at a regular point".into()));
            }
        }
        Ok(PreimageSet { points, multiplicities: mult, max_residual, rotation: r })
    }

    fn is_singular(&self, a: &[C64; 3], p: &HomogeneousPoint) -> bool {
        let cp = ChartPoint::from_homogeneous(p);
        let (_, jm) = self.system(a, &cp);
        let (s1, s2) = linalg::singular_values(&jm);
        let scale = self.map.degree() as f64
            * self.map.components().iter().flat_map(|c| c.coeffs().iter()).map(|z| z.norm()).fold(0.0, f64::max);
        s2 < 1e-5 * s1.max(scale)
    }

    /// Residual and Jacobian of `Fᵢ − aᵢF_k = Fⱼ − aⱼF_k = 0` in the chart of `p`.
    fn system(&self, a: &[C64; 3], p: &ChartPoint) -> (V2, M2) {
        let k = max_index(a);
        let [i, j] = chart_axes(k);
        let x = p.lift();
        let (f, jac) = self.map.eval_with_jacobian(&x);
        let res = V2::new(f[i] * a[k] - a[i] * f[k], f[j] * a[k] - a[j] * f[k]);
        let ax = chart_axes(p.chart);
        let mut m = M2::zeros();
        for (s, &qi) in ax.iter().enumerate() {
            m[(0, s)] = jac[i][qi] * a[k] - a[i] * jac[k][qi];
            m[(1, s)] = jac[j][qi] * a[k] - a[j] * jac[k][qi];
        }
        (res, m)
    }

    fn newton(&self, a: &[C64; 3], start: [C64; 3]) -> ([C64; 3], f64) {
        let mut p = match HomogeneousPoint::new(start) {
            Ok(hp) => ChartPoint::from_homogeneous(&hp),
            Err(_) => return (start, f64::INFINITY),
        };
        for _ in 0..60 {
            let (res, jm) = self.system(a, &p);
            let Some(inv) = linalg::inverse(&jm) else { break };
            let step = inv * res;
            if !step[0].is_finite() || !step[1].is_finite() {
                break;
            }
            p.coords[0] -= step[0];
            p.coords[1] -= step[1];
            let size = 1.0 + p.coords[0].norm().max(p.coords[1].norm());
            if p.coords[0].norm() > 1.5 || p.coords[1].norm() > 1.5 {
                if let Ok(hp) = HomogeneousPoint::new(p.lift()) {
                    p = ChartPoint::from_homogeneous(&hp);
                }
            }
            if step.norm() <= 1e-15 * size {
                break;
            }
        }
        let x = p.lift();
        let fx = self.map.eval_raw(&x);
        (x, fs_distance_raw(&fx, a))
    }

    /// Newton from `guess` towards a preimage of `target`; follows the
    /// inverse branch through `guess`.
    pub fn refine(&self, target: &HomogeneousPoint, guess: &HomogeneousPoint) -> Result<HomogeneousPoint> {
        let (x, res) = self.newton(target.coords(), *guess.coords());
        if !(res < RESIDUAL_TOL) {
            return Err(Error::SolverIncomplete(format!("branch refinement residual {res:e}")));
        }
        HomogeneousPoint::new(x)
    }

    /// A preimage drawn uniformly from the `d²` preimages counted with
    /// multiplicity, with its index in [`PreimageSet::expanded`] order.
    pub fn random_inverse_branch<R: Rng>(
        &self,
        target: &HomogeneousPoint,
        rng: &mut R,
    ) -> Result<(HomogeneousPoint, usize)> {
        let set = self.preimages(target)?;
        let all = set.expanded();
        let ix = rng.random_range(0..all.len());
        Ok((all[ix], ix))
    }
}

/// Coefficients of `Res_y(p, q)(x)` where `p = Σ_m p[m](x) yᵐ` (and
/// likewise `q`), each of degree `d` in `y`. Values of the Sylvester
/// determinant at `d² + 1` roots of unity are interpolated by inverse DFT.
pub fn resultant_coefficients(p: &[Vec<C64>], q: &[Vec<C64>], d: usize) -> Vec<C64> {
    let k = d * d + 1;
    let roots: Vec<C64> =
        (0..k).map(|s| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * s as f64 / k as f64)).collect();
    let mut pc = vec![ZERO; d + 1];
    let mut qc = vec![ZERO; d + 1];
    let values: Vec<C64> = roots
        .iter()
        .map(|&x| {
            for (c, pm) in pc.iter_mut().zip(p) {
                *c = eval_poly(pm, x);
            }
            for (c, qm) in qc.iter_mut().zip(q) {
                *c = eval_poly(qm, x);
            }
            sylvester_determinant(&pc, &qc)
        })
        .collect();
    (0..k)
        .map(|j| {
            let s: C64 = values.iter().enumerate().map(|(s, v)| v * roots[(j * s) % k].conj()).sum();
            s / k as f64
        })
        .collect()
}

/// Determinant of the Sylvester matrix by Gaussian elimination with
/// partial pivoting on a stack buffer.
fn sylvester_determinant(p: &[C64], q: &[C64]) -> C64 {
    const MAX: usize = 16;
    let dp = p.len() - 1;
    let dq = q.len() - 1;
    let n = dp + dq;
    if n > MAX {
        return sylvester(p, q, n).determinant();
    }
    let mut a = [[ZERO; MAX]; MAX];
    for r in 0..dq {
        for (m, c) in p.iter().enumerate() {
            a[r][r + dp - m] = *c;
        }
    }
    for r in 0..dp {
        for (m, c) in q.iter().enumerate() {
            a[dq + r][r + dq - m] = *c;
        }
    }
    let mut det = ONE;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm_sqr().total_cmp(&a[j][col].norm_sqr())).unwrap_or(col);
        if a[piv][col] == ZERO {
            return ZERO;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        let pv = a[col][col];
        det *= pv;
        for r in col + 1..n {
            let f = a[r][col] / pv;
            if f != ZERO {
                for c in col..n {
                    let v = a[col][c];
                    a[r][c] -= f * v;
                }
            }
        }
    }
    det
}

/// Sylvester matrix of two univariate polynomials given low-to-high.
pub fn sylvester(p: &[C64], q: &[C64], size: usize) -> DMatrix<C64> {
    let dp = p.len() - 1;
    let dq = q.len() - 1;
    let mut s = DMatrix::from_element(size, size, ZERO);
    for r in 0..dq {
        for (m, c) in p.iter().enumerate() {
            s[(r, r + dp - m)] = *c;
        }
    }
    for r in 0..dp {
        for (m, c) in q.iter().enumerate() {
            s[(dq + r, r + dq - m)] = *c;
        }
    }
    s
}

fn eval_poly(c: &[C64], x: C64) -> C64 {
    c.iter().rev().fold(ZERO, |acc, a| acc * x + a)
}

fn univariate_roots(c: &[C64]) -> Result<Vec<C64>> {
    let mut c = c.to_vec();
    while c.len() > 1 && c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    match c.len() {
        0 | 1 => Err(Error::SolverIncomplete("back-substitution polynomial is constant".into())),
        2 => Ok(vec![-c[0] / c[1]]),
        3 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = (b * b - 4.0 * a * cc).sqrt();
            let qv = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
            if qv == ZERO {
                Ok(vec![ZERO, ZERO])
            } else {
                Ok(vec![qv / a, cc / qv])
            }
        }
        _ => Ok(aberth_roots(&c)?.roots),
    }
}

fn max_index(v: &[C64; 3]) -> usize {
    let mut k = 0;
    for i in 1..3 {
        if v[i].norm_sqr() > v[k].norm_sqr() {
            k = i;
        }
    }
    k
}

/// Preimages of a point for a map without a cached solver.
pub fn preimages(map: &HomogeneousMap, target: &HomogeneousPoint) -> Result<PreimageSet> {
    PreimageSolver::new(map)?.preimages(target)
}

/// Chart coordinates of `p` in `chart`, or its own max-modulus chart when
/// the requested chart is too far out.
pub fn chart_point_near(p: &HomogeneousPoint, chart: usize, limit: f64) -> ChartPoint {
    if let Ok(c) = chart_coords(p.coords(), chart) {
        if c[0].norm() <= limit && c[1].norm() <= limit {
            return ChartPoint { chart, coords: c };
        }
    }
    ChartPoint::from_homogeneous(p)
}
