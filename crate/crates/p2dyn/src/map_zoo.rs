//! Families of endomorphisms with reference values, and a text format for
//! user-defined maps.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::preimage_solver::PreimageSolver;
use crate::projective_core::{
    exponents, monomial_count, monomial_index, HomogeneousMap, HomogeneousPoint,
    HomogeneousPolynomial, C64, MAX_DEGREE,
};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Polynomial `Σ cⱼ xʲ` in one variable with nonzero leading coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariatePolynomial {
    coeffs: Vec<C64>,
}

impl UnivariatePolynomial {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        match coeffs.last() {
            Some(c) if *c != ZERO => {}
            _ => return Err(Error::InvalidMap("leading coefficient must be nonzero".into())),
        }
        if coeffs.len() < 2 {
            return Err(Error::InvalidMap("univariate factor must have degree ≥ 1".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * x + c)
    }

    /// `z² − 2`.
    pub fn chebyshev2() -> Self {
        Self::from_real(&[-2.0, 0.0, 1.0]).expect("valid")
    }

    /// `z³ − 3z`.
    pub fn chebyshev3() -> Self {
        Self::from_real(&[0.0, -3.0, 0.0, 1.0]).expect("valid")
    }

    pub fn monomial(d: u32) -> Self {
        let mut c = vec![ZERO; d as usize + 1];
        c[d as usize] = ONE;
        Self { coeffs: c }
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            "chebyshev2" => Ok(Self::chebyshev2()),
            "chebyshev3" => Ok(Self::chebyshev3()),
            "square" => Ok(Self::monomial(2)),
            "cube" => Ok(Self::monomial(3)),
            "lattes2" => Err(Error::Config(
                "lattes2 is rational, not polynomial; use family=suspension with g=lattes2".into(),
            )),
            other => Err(Error::Config(format!("unknown univariate factor `{other}`"))),
        }
    }
}

/// Binary form `Σ cⱼ xʲ s^{d−j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryForm {
    pub coeffs: Vec<C64>,
}

impl BinaryForm {
    pub fn degree(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }

    pub fn eval(&self, x: C64, s: C64) -> C64 {
        let d = self.coeffs.len() - 1;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * x.powu(j as u32) * s.powu((d - j) as u32))
            .sum()
    }
}

/// Rational map of P¹ written as a pair of binary forms `[P(x,s) : Q(x,s)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMap1D {
    pub num: BinaryForm,
    pub den: BinaryForm,
}

impl RationalMap1D {
    pub fn degree(&self) -> u32 {
        self.num.degree()
    }

    /// Degree-2 Lattès map `x ↦ (x² − 1)/(2ix)` of the square lattice,
    /// induced by multiplication by `1 + i`. Its second iterate is
    /// `x ↦ −(x² + 1)² / (4x(x² − 1))`.
    pub fn lattes2() -> Self {
        Self {
            num: BinaryForm { coeffs: vec![C64::new(-1.0, 0.0), ZERO, ONE] },
            den: BinaryForm { coeffs: vec![ZERO, C64::new(0.0, 2.0), ZERO] },
        }
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            "lattes2" => Ok(Self::lattes2()),
            other => Err(Error::Config(format!("unknown rational factor `{other}`"))),
        }
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.num.eval(x, ONE) / self.den.eval(x, ONE)
    }
}

pub fn power_map(d: u32) -> Result<HomogeneousMap> {
    if d == 0 || d > MAX_DEGREE {
        return Err(Error::InvalidMap(format!("degree {d} outside 1..={MAX_DEGREE}")));
    }
    HomogeneousMap::new([
        HomogeneousPolynomial::monomial(d, [d, 0, 0], ONE),
        HomogeneousPolynomial::monomial(d, [0, d, 0], ONE),
        HomogeneousPolynomial::monomial(d, [0, 0, d], ONE),
    ])
}

/// Homogenisation of `(z, w) ↦ (p(z), q(w))`: `[P(z,t) : Q(w,t) : tᵈ]`.
pub fn product_map(p: &UnivariatePolynomial, q: &UnivariatePolynomial) -> Result<HomogeneousMap> {
    let d = p.degree();
    if q.degree() != d {
        return Err(Error::DegreeMismatch(d, q.degree()));
    }
    if d > MAX_DEGREE {
        return Err(Error::InvalidMap(format!("degree {d} above {MAX_DEGREE}")));
    }
    let mut a = HomogeneousPolynomial::zero(d);
    let mut b = HomogeneousPolynomial::zero(d);
    for j in 0..=d {
        a = a.add(&HomogeneousPolynomial::monomial(d, [j, 0, d - j], p.coeffs[j as usize]))?;
        b = b.add(&HomogeneousPolynomial::monomial(d, [0, j, d - j], q.coeffs[j as usize]))?;
    }
    HomogeneousMap::new([a, b, HomogeneousPolynomial::monomial(d, [0, 0, d], ONE)])
}

/// Suspension `[z : w : t] ↦ [P(z,w) : Q(z,w) : tᵈ]` of a rational map of P¹.
pub fn suspension(g: &RationalMap1D) -> Result<HomogeneousMap> {
    let d = g.degree();
    if g.den.degree() != d {
        return Err(Error::DegreeMismatch(d, g.den.degree()));
    }
    let lift = |f: &BinaryForm| -> Result<HomogeneousPolynomial> {
        let mut out = HomogeneousPolynomial::zero(d);
        for (j, c) in f.coeffs.iter().enumerate() {
            let j = j as u32;
            out = out.add(&HomogeneousPolynomial::monomial(d, [j, d - j, 0], *c))?;
        }
        Ok(out)
    };
    HomogeneousMap::new([
        lift(&g.num)?,
        lift(&g.den)?,
        HomogeneousPolynomial::monomial(d, [0, 0, d], ONE),
    ])
}

/// Map of degree `d` with independent Gaussian-like coefficients.
pub fn random_map(d: u32, seed: u64) -> Result<HomogeneousMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = monomial_count(d);
    let mut table = || -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0))
            .collect()
    };
    let tables = [table(), table(), table()];
    HomogeneousMap::from_tables(d, tables)
}

const PROBE_TARGETS: [[C64; 3]; 2] = [
    [C64::new(0.383, -0.127), C64::new(-0.291, 0.444), ONE],
    [ONE, C64::new(0.172, 0.611), C64::new(-0.538, -0.205)],
];

/// `F + ε G`, rejected when a probe target has fewer than `d²` preimages.
pub fn perturb(map: &HomogeneousMap, g: &HomogeneousMap, eps: f64) -> Result<HomogeneousMap> {
    let out = map.add_scaled(g, C64::new(eps, 0.0))?;
    check_nondegenerate(&out)?;
    Ok(out)
}

pub fn check_nondegenerate(map: &HomogeneousMap) -> Result<()> {
    let d2 = (map.degree() * map.degree()) as usize;
    let solver = PreimageSolver::new(map)?;
    for t in PROBE_TARGETS {
        let target = HomogeneousPoint::new(t)?;
        let count = match solver.preimages(&target) {
            Ok(set) => set.total_multiplicity(),
            Err(_) => 0,
        };
        if count < d2 {
            return Err(Error::DegenerateMap(format!("probe target has {count} preimages, expected {d2}")));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Exact values known in closed form.
    ClosedForm,
    /// Values checked against a one-dimensional Birkhoff average.
    OneDimensionalOracle,
    /// No reference values.
    Unspecified,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ReferenceValues {
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub entropy: Option<f64>,
    pub dim_mu: Option<f64>,
    pub semi_extremal: bool,
}

#[derive(Clone, Debug)]
pub struct MapFamily {
    pub name: String,
    pub map: HomogeneousMap,
    pub reference: ReferenceValues,
    pub provenance: Provenance,
}

impl MapFamily {
    pub fn power(d: u32) -> Result<Self> {
        let l = (d as f64).ln();
        Ok(Self {
            name: format!("power{d}"),
            map: power_map(d)?,
            reference: ReferenceValues {
                lambda1: Some(l),
                lambda2: Some(l),
                entropy: Some(2.0 * l),
                dim_mu: Some(2.0),
                semi_extremal: false,
            },
            provenance: Provenance::ClosedForm,
        })
    }

    pub fn chebyshev_product() -> Result<Self> {
        let p = UnivariatePolynomial::chebyshev2();
        Ok(Self {
            name: "product_chebyshev2_chebyshev2".into(),
            map: product_map(&p, &p)?,
            reference: ReferenceValues {
                lambda1: Some(LN_2),
                lambda2: Some(LN_2),
                entropy: Some(2.0 * LN_2),
                dim_mu: Some(2.0),
                semi_extremal: false,
            },
            provenance: Provenance::ClosedForm,
        })
    }

    /// Semi-extremal example: suspension of the degree-2 Lattès map.
    pub fn lattes_suspension() -> Result<Self> {
        Ok(Self {
            name: "suspension_lattes2".into(),
            map: suspension(&RationalMap1D::lattes2())?,
            reference: ReferenceValues {
                lambda1: Some(LN_2),
                lambda2: Some(0.5 * LN_2),
                entropy: Some(2.0 * LN_2),
                dim_mu: Some(3.0),
                semi_extremal: true,
            },
            provenance: Provenance::OneDimensionalOracle,
        })
    }

    pub fn product(p: &UnivariatePolynomial, q: &UnivariatePolynomial, name: &str) -> Result<Self> {
        let d = p.degree();
        let l = (d as f64).ln();
        Ok(Self {
            name: name.into(),
            map: product_map(p, q)?,
            reference: ReferenceValues { entropy: Some(2.0 * l), ..Default::default() },
            provenance: Provenance::Unspecified,
        })
    }

    pub fn custom(name: &str, map: HomogeneousMap) -> Self {
        let l = (map.degree() as f64).ln();
        Self {
            name: name.into(),
            map,
            reference: ReferenceValues { entropy: Some(2.0 * l), ..Default::default() },
            provenance: Provenance::Unspecified,
        }
    }
}

/// Plain-text form: a `degree N` line, then one `F<i> a b c re im` line per
/// nonzero coefficient of `z^a w^b t^c` in component `i`. `#` starts a comment.
pub fn format_map(map: &HomogeneousMap) -> String {
    let d = map.degree();
    let mut s = String::new();
    let _ = writeln!(s, "degree {d}");
    for (i, comp) in map.components().iter().enumerate() {
        for e in exponents(d) {
            let c = comp.coeff(e);
            if c != ZERO {
                let _ = writeln!(s, "F{i} {} {} {} {} {}", e[0], e[1], e[2], c.re, c.im);
            }
        }
    }
    s
}

pub fn parse_map(text: &str) -> Result<HomogeneousMap> {
    let mut degree: Option<u32> = None;
    let mut tables: Option<[Vec<C64>; 3]> = None;
    let mut seen = std::collections::HashSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse { line: line_no, msg: msg.to_string() };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "degree" {
            if degree.is_some() {
                return Err(err("duplicate degree line"));
            }
            let d: u32 = fields
                .get(1)
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| err("expected `degree <integer>`"))?;
            if d == 0 || d > MAX_DEGREE {
                return Err(err(&format!("degree must lie in 1..={MAX_DEGREE}")));
            }
            degree = Some(d);
            let n = monomial_count(d);
            tables = Some([vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]]);
            continue;
        }
        let d = degree.ok_or_else(|| err("coefficient before degree line"))?;
        let comp = match fields[0] {
            "F0" => 0,
            "F1" => 1,
            "F2" => 2,
            _ => return Err(err("expected `degree` or `F0`/`F1`/`F2`")),
        };
        if fields.len() != 6 {
            return Err(err("coefficient line needs `F<i> a b c re im`"));
        }
        let e: Vec<u32> = fields[1..4]
            .iter()
            .map(|f| f.parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err("exponents must be non-negative integers"))?;
        if e.iter().sum::<u32>() != d {
            return Err(err("exponents must sum to the degree"));
        }
        let re: f64 = fields[4].parse().map_err(|_| err("bad real part"))?;
        let im: f64 = fields[5].parse().map_err(|_| err("bad imaginary part"))?;
        if !seen.insert((comp, e[0], e[1])) {
            return Err(err("duplicate monomial"));
        }
        let t = tables.as_mut().expect("set with degree");
        t[comp][monomial_index(d, [e[0], e[1], e[2]])] = C64::new(re, im);
    }
    let d = degree.ok_or(Error::Parse { line: 0, msg: "missing degree line".into() })?;
    let tables = tables.expect("set with degree");
    if tables.iter().any(|t| t.iter().all(|c| *c == ZERO)) {
        return Err(Error::DegenerateMap("a component is identically zero".into()));
    }
    HomogeneousMap::from_tables(d, tables)
}
