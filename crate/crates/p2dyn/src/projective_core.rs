//! Points, charts and homogeneous polynomial maps of P².

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, M2};

pub use num_complex::Complex64 as C64;

pub const MAX_DEGREE: u32 = 8;
const DEGENERATE_EVAL: f64 = 1e-14;
const CRITICAL_JACOBIAN: f64 = 1e-12;
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// The two homogeneous indices used as affine coordinates in chart `c`.
pub fn chart_axes(c: usize) -> [usize; 2] {
    match c {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

fn max_modulus_index(v: &[C64; 3]) -> usize {
    let mut k = 0;
    let mut best = v[0].norm_sqr();
    for (i, z) in v.iter().enumerate().skip(1) {
        let n = z.norm_sqr();
        if n > best {
            best = n;
            k = i;
        }
    }
    k
}

/// A point of P² stored with its largest coordinate equal to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPoint {
    coords: [C64; 3],
}

impl HomogeneousPoint {
    pub fn new(v: [C64; 3]) -> Result<Self> {
        if v.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument("non-finite homogeneous coordinates".into()));
        }
        let k = max_modulus_index(&v);
        if v[k].norm_sqr() == 0.0 {
            return Err(Error::InvalidArgument("zero vector is not a point of P²".into()));
        }
        let s = v[k];
        let mut coords = [v[0] / s, v[1] / s, v[2] / s];
        coords[k] = ONE;
        Ok(Self { coords })
    }

    /// Affine point `(z, w)` in the chart `t = 1`.
    pub fn affine(z: C64, w: C64) -> Self {
        Self::new([z, w, ONE]).expect("chart lift is nonzero")
    }

    pub fn coords(&self) -> &[C64; 3] {
        &self.coords
    }

    pub fn max_index(&self) -> usize {
        max_modulus_index(&self.coords)
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Fubini–Study chordal distance `|p ∧ q| / (|p| |q|)`, in `[0, 1]`.
pub fn fs_distance(p: &HomogeneousPoint, q: &HomogeneousPoint) -> f64 {
    fs_distance_raw(p.coords(), q.coords())
}

pub fn fs_distance_raw(p: &[C64; 3], q: &[C64; 3]) -> f64 {
    let w01 = p[0] * q[1] - p[1] * q[0];
    let w02 = p[0] * q[2] - p[2] * q[0];
    let w12 = p[1] * q[2] - p[2] * q[1];
    let wedge = w01.norm_sqr() + w02.norm_sqr() + w12.norm_sqr();
    let np: f64 = p.iter().map(|z| z.norm_sqr()).sum();
    let nq: f64 = q.iter().map(|z| z.norm_sqr()).sum();
    (wedge / (np * nq)).sqrt().min(1.0)
}

/// Affine coordinates of a point in one of the three standard charts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart: usize,
    pub coords: [C64; 2],
}

impl ChartPoint {
    pub fn new(chart: usize, coords: [C64; 2]) -> Result<Self> {
        if chart > 2 {
            return Err(Error::InvalidArgument(format!("chart index {chart} out of range")));
        }
        Ok(Self { chart, coords })
    }

    /// Max-modulus chart, ties going to the lowest index.
    pub fn from_homogeneous(p: &HomogeneousPoint) -> Self {
        let c = p.max_index();
        Self::in_chart(p, c).expect("max-modulus coordinate is nonzero")
    }

    pub fn in_chart(p: &HomogeneousPoint, chart: usize) -> Result<Self> {
        chart_coords(p.coords(), chart).map(|coords| Self { chart, coords })
    }

    pub fn lift(&self) -> [C64; 3] {
        let mut v = [ONE; 3];
        let ax = chart_axes(self.chart);
        v[ax[0]] = self.coords[0];
        v[ax[1]] = self.coords[1];
        v
    }

    pub fn to_homogeneous(&self) -> Result<HomogeneousPoint> {
        HomogeneousPoint::new(self.lift())
    }
}

pub fn chart_coords(v: &[C64; 3], chart: usize) -> Result<[C64; 2]> {
    let s = v[chart];
    if s.norm() < 1e-300 {
        return Err(Error::Domain(format!("point lies on the line at infinity of chart {chart}")));
    }
    let ax = chart_axes(chart);
    Ok([v[ax[0]] / s, v[ax[1]] / s])
}

/// Index of exponent triple `e` (with `|e| = d`) in a dense coefficient table.
pub fn monomial_index(d: u32, e: [u32; 3]) -> usize {
    let r = (d - e[0]) as usize;
    r * (r + 1) / 2 + (d - e[0] - e[1]) as usize
}

pub fn monomial_count(d: u32) -> usize {
    ((d + 1) * (d + 2) / 2) as usize
}

/// Exponent triples in table order.
pub fn exponents(d: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity(monomial_count(d));
    for a in (0..=d).rev() {
        for b in (0..=d - a).rev() {
            out.push([a, b, d - a - b]);
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Term {
    e: [usize; 3],
    c: C64,
}

/// Homogeneous polynomial in three variables, dense by exponent triple.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPolynomial {
    degree: u32,
    coeffs: Vec<C64>,
}

impl HomogeneousPolynomial {
    pub fn new(degree: u32, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != monomial_count(degree) {
            return Err(Error::InvalidMap(format!(
                "degree {degree} needs {} coefficients, got {}",
                monomial_count(degree),
                coeffs.len()
            )));
        }
        Ok(Self { degree, coeffs })
    }

    pub fn zero(degree: u32) -> Self {
        Self { degree, coeffs: vec![ZERO; monomial_count(degree)] }
    }

    pub fn monomial(degree: u32, e: [u32; 3], c: C64) -> Self {
        let mut p = Self::zero(degree);
        p.coeffs[monomial_index(degree, e)] = c;
        p
    }

    /// The linear form `Σ lᵢ Xᵢ`.
    pub fn linear(l: [C64; 3]) -> Self {
        let mut p = Self::zero(1);
        for (i, c) in l.iter().enumerate() {
            let mut e = [0; 3];
            e[i] = 1;
            p.coeffs[monomial_index(1, e)] = *c;
        }
        p
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, e: [u32; 3]) -> C64 {
        self.coeffs[monomial_index(self.degree, e)]
    }

    pub fn eval(&self, v: &[C64; 3]) -> C64 {
        let d = self.degree;
        exponents(d)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != ZERO)
            .map(|(e, c)| c * v[0].powu(e[0]) * v[1].powu(e[1]) * v[2].powu(e[2]))
            .sum()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch(self.degree, other.degree));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Self { degree: self.degree, coeffs })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.degree + other.degree;
        let mut out = Self::zero(d);
        let ea = exponents(self.degree);
        let eb = exponents(other.degree);
        for (x, cx) in ea.iter().zip(&self.coeffs) {
            if *cx == ZERO {
                continue;
            }
            for (y, cy) in eb.iter().zip(&other.coeffs) {
                if *cy == ZERO {
                    continue;
                }
                let e = [x[0] + y[0], x[1] + y[1], x[2] + y[2]];
                out.coeffs[monomial_index(d, e)] += cx * cy;
            }
        }
        out
    }

    fn powers(&self, n: u32) -> Vec<Self> {
        let mut out = vec![Self::monomial(0, [0, 0, 0], ONE)];
        for k in 1..=n as usize {
            let next = out[k - 1].mul(self);
            out.push(next);
        }
        out
    }

    /// `self(g₀, g₁, g₂)` for homogeneous `gᵢ` of a common degree.
    pub fn compose(&self, g: &[Self; 3]) -> Result<Self> {
        let dg = g[0].degree;
        if g[1].degree != dg || g[2].degree != dg {
            return Err(Error::DegreeMismatch(g[1].degree, dg));
        }
        let pw: Vec<Vec<Self>> = g.iter().map(|gi| gi.powers(self.degree)).collect();
        let mut out = Self::zero(self.degree * dg);
        for (e, c) in exponents(self.degree).iter().zip(&self.coeffs) {
            if *c == ZERO {
                continue;
            }
            let t = pw[0][e[0] as usize]
                .mul(&pw[1][e[1] as usize])
                .mul(&pw[2][e[2] as usize])
                .scale(*c);
            out = out.add(&t)?;
        }
        Ok(out)
    }

    fn terms(&self) -> Vec<Term> {
        exponents(self.degree)
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| **c != ZERO)
            .map(|(e, c)| Term { e: [e[0] as usize, e[1] as usize, e[2] as usize], c: *c })
            .collect()
    }
}

/// Jacobian of chart representation: maps tangent vectors in `source_chart`
/// coordinates at the point to `target_chart` coordinates at its image.
#[derive(Clone, Copy, Debug)]
pub struct ChartDifferential {
    pub matrix: M2,
    pub source_chart: usize,
    pub target_chart: usize,
}

/// A holomorphic endomorphism of P² of degree `d ≤ 8`, given by three
/// homogeneous polynomials without common zero.
#[derive(Clone, Debug)]
pub struct HomogeneousMap {
    comps: [HomogeneousPolynomial; 3],
    terms: [Vec<Term>; 3],
    c2_norm: OnceLock<f64>,
}

impl PartialEq for HomogeneousMap {
    fn eq(&self, other: &Self) -> bool {
        self.comps == other.comps
    }
}

type Powers = [[C64; MAX_DEGREE as usize + 2]; 3];

impl HomogeneousMap {
    pub fn new(comps: [HomogeneousPolynomial; 3]) -> Result<Self> {
        let d = comps[0].degree;
        if d == 0 || d > MAX_DEGREE {
            return Err(Error::InvalidMap(format!("degree {d} outside 1..={MAX_DEGREE}")));
        }
        for c in &comps[1..] {
            if c.degree != d {
                return Err(Error::DegreeMismatch(d, c.degree));
            }
        }
        if comps.iter().any(|c| c.coeffs.iter().any(|z| !z.is_finite())) {
            return Err(Error::InvalidMap("non-finite coefficient".into()));
        }
        let terms = [comps[0].terms(), comps[1].terms(), comps[2].terms()];
        Ok(Self { comps, terms, c2_norm: OnceLock::new() })
    }

    /// From three dense coefficient tables in [`exponents`] order.
    pub fn from_tables(degree: u32, tables: [Vec<C64>; 3]) -> Result<Self> {
        let [a, b, c] = tables;
        Self::new([
            HomogeneousPolynomial::new(degree, a)?,
            HomogeneousPolynomial::new(degree, b)?,
            HomogeneousPolynomial::new(degree, c)?,
        ])
    }

    pub fn degree(&self) -> u32 {
        self.comps[0].degree
    }

    pub fn components(&self) -> &[HomogeneousPolynomial; 3] {
        &self.comps
    }

    fn powers(&self, v: &[C64; 3]) -> Powers {
        let d = self.degree() as usize;
        let mut p = [[ONE; MAX_DEGREE as usize + 2]; 3];
        for i in 0..3 {
            for k in 1..=d {
                p[i][k] = p[i][k - 1] * v[i];
            }
        }
        p
    }

    /// `F(v)` on a lift, without normalisation.
    #[inline]
    pub fn eval_raw(&self, v: &[C64; 3]) -> [C64; 3] {
        let p = self.powers(v);
        let mut out = [ZERO; 3];
        for (o, terms) in out.iter_mut().zip(&self.terms) {
            let mut s = ZERO;
            for t in terms {
                s += t.c * p[0][t.e[0]] * p[1][t.e[1]] * p[2][t.e[2]];
            }
            *o = s;
        }
        out
    }

    /// `F(v)` and the 3×3 Jacobian `J[i][j] = ∂Fᵢ/∂Xⱼ`.
    pub fn eval_with_jacobian(&self, v: &[C64; 3]) -> ([C64; 3], [[C64; 3]; 3]) {
        let p = self.powers(v);
        let mut f = [ZERO; 3];
        let mut jac = [[ZERO; 3]; 3];
        for i in 0..3 {
            for t in &self.terms[i] {
                let [a, b, c] = t.e;
                f[i] += t.c * p[0][a] * p[1][b] * p[2][c];
                if a > 0 {
                    jac[i][0] += t.c * (a as f64) * p[0][a - 1] * p[1][b] * p[2][c];
                }
                if b > 0 {
                    jac[i][1] += t.c * (b as f64) * p[0][a] * p[1][b - 1] * p[2][c];
                }
                if c > 0 {
                    jac[i][2] += t.c * (c as f64) * p[0][a] * p[1][b] * p[2][c - 1];
                }
            }
        }
        (f, jac)
    }

    /// Second derivatives `H[i][j][k] = ∂²Fᵢ/∂Xⱼ∂Xₖ`.
    pub fn hessians(&self, v: &[C64; 3]) -> [[[C64; 3]; 3]; 3] {
        let p = self.powers(v);
        let mut h = [[[ZERO; 3]; 3]; 3];
        for i in 0..3 {
            for t in &self.terms[i] {
                for j in 0..3 {
                    for k in 0..3 {
                        let mut e = t.e;
                        let mut fac = e[j] as f64;
                        if e[j] == 0 {
                            continue;
                        }
                        e[j] -= 1;
                        fac *= e[k] as f64;
                        if e[k] == 0 {
                            continue;
                        }
                        e[k] -= 1;
                        h[i][j][k] += t.c * fac * p[0][e[0]] * p[1][e[1]] * p[2][e[2]];
                    }
                }
            }
        }
        h
    }

    pub fn evaluate(&self, p: &HomogeneousPoint) -> Result<HomogeneousPoint> {
        let f = self.eval_raw(p.coords());
        if f.iter().all(|z| z.norm() < DEGENERATE_EVAL) {
            return Err(Error::DegenerateEvaluation);
        }
        HomogeneousPoint::new(f)
    }

    pub fn iterate(&self, p: &HomogeneousPoint, n: usize) -> Result<HomogeneousPoint> {
        let mut q = *p;
        for _ in 0..n {
            q = self.evaluate(&q)?;
        }
        Ok(q)
    }

    /// `self ∘ other` as a map of degree `deg(self)·deg(other)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let g = other.components();
        Self::new([
            self.comps[0].compose(g)?,
            self.comps[1].compose(g)?,
            self.comps[2].compose(g)?,
        ])
    }

    /// `F ∘ U` for a 3×3 matrix `U` acting on homogeneous coordinates.
    pub fn precompose_linear(&self, u: &[[C64; 3]; 3]) -> Result<Self> {
        let g = [
            HomogeneousPolynomial::linear(u[0]),
            HomogeneousPolynomial::linear(u[1]),
            HomogeneousPolynomial::linear(u[2]),
        ];
        Self::new([
            self.comps[0].compose(&g)?,
            self.comps[1].compose(&g)?,
            self.comps[2].compose(&g)?,
        ])
    }

    /// `F + ε G` for a map of the same degree.
    pub fn add_scaled(&self, g: &Self, eps: C64) -> Result<Self> {
        if g.degree() != self.degree() {
            return Err(Error::DegreeMismatch(self.degree(), g.degree()));
        }
        Self::new([
            self.comps[0].add(&g.comps[0].scale(eps))?,
            self.comps[1].add(&g.comps[1].scale(eps))?,
            self.comps[2].add(&g.comps[2].scale(eps))?,
        ])
    }

    /// Chart differential at `p`, landing in the max-modulus chart of `f(p)`.
    pub fn differential(&self, p: &ChartPoint) -> Result<ChartDifferential> {
        let f = self.eval_raw(&p.lift());
        if f.iter().all(|z| z.norm() < DEGENERATE_EVAL) {
            return Err(Error::DegenerateEvaluation);
        }
        self.differential_to(p, max_modulus_index(&f))
    }

    /// Chart differential at `p` expressed in the given target chart.
    pub fn differential_to(&self, p: &ChartPoint, target_chart: usize) -> Result<ChartDifferential> {
        let x = p.lift();
        let (f, jac) = self.eval_with_jacobian(&x);
        let k = target_chart;
        let fk = f[k];
        if fk.norm() < DEGENERATE_EVAL {
            return Err(Error::Domain(format!("image lies at infinity of chart {k}")));
        }
        let out = chart_axes(k);
        let inp = chart_axes(p.chart);
        let mut m = M2::zeros();
        for (r, &j) in out.iter().enumerate() {
            for (s, &q) in inp.iter().enumerate() {
                m[(r, s)] = (jac[j][q] * fk - f[j] * jac[k][q]) / (fk * fk);
            }
        }
        Ok(ChartDifferential { matrix: m, source_chart: p.chart, target_chart: k })
    }

    /// `|det Df|` in the max-modulus charts of `p` and `f(p)`.
    pub fn jacobian_modulus(&self, p: &HomogeneousPoint) -> Result<f64> {
        let cp = ChartPoint::from_homogeneous(p);
        Ok(linalg::det(&self.differential(&cp)?.matrix).norm())
    }

    /// Global C² bound: twice the largest second-derivative norm of the
    /// chart representation over the three unit bidisks (64×64 points each).
    pub fn c2_norm(&self) -> f64 {
        *self.c2_norm.get_or_init(|| 2.0 * self.max_second_derivative())
    }

    fn max_second_derivative(&self) -> f64 {
        let disk = disk_points(64);
        let mut best: f64 = 0.0;
        for chart in 0..3 {
            let inp = chart_axes(chart);
            for a in &disk {
                for b in &disk {
                    let cp = ChartPoint { chart, coords: [*a, *b] };
                    let x = cp.lift();
                    let (f, jac) = self.eval_with_jacobian(&x);
                    let k = max_modulus_index(&f);
                    let v = f[k];
                    if v.norm() < DEGENERATE_EVAL {
                        continue;
                    }
                    let h = self.hessians(&x);
                    for &j in &chart_axes(k) {
                        let u = f[j];
                        let mut fro = 0.0;
                        for &m in &inp {
                            for &n in &inp {
                                let umn = h[j][m][n];
                                let vmn = h[k][m][n];
                                let val = umn / v
                                    - (jac[j][m] * jac[k][n] + jac[j][n] * jac[k][m]) / (v * v)
                                    - u * vmn / (v * v)
                                    + 2.0 * u * jac[k][m] * jac[k][n] / (v * v * v);
                                fro += val.norm_sqr();
                            }
                        }
                        best = best.max(fro.sqrt());
                    }
                }
            }
        }
        best
    }

    /// Radius `γ = min(a / ‖f‖_{C²}, 1)` with `a = ½ ‖Df(p)⁻¹‖⁻¹`.
    pub fn injectivity_radius(&self, p: &ChartPoint) -> Result<f64> {
        let d = self.differential(p)?;
        let jac = linalg::det(&d.matrix).norm();
        if jac < CRITICAL_JACOBIAN {
            return Err(Error::CriticalPoint(jac));
        }
        let (_, smin) = linalg::singular_values(&d.matrix);
        let a = 0.5 * smin;
        let c2 = self.c2_norm();
        Ok(if c2 > 0.0 { (a / c2).min(1.0) } else { 1.0 })
    }
}

/// Deterministic near-uniform points of the closed unit disk.
pub fn disk_points(n: usize) -> Vec<C64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|j| {
            let r = ((j as f64 + 0.5) / n as f64).sqrt();
            C64::from_polar(r, golden * j as f64)
        })
        .collect()
}
