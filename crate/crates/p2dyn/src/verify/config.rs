//! Flat `key=value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_zoo::{parse_map, perturb, random_map, MapFamily, RationalMap1D, UnivariatePolynomial};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Power { degree: u32 },
    Product { p: String, q: String },
    Suspension { g: String },
    /// `base + eps · random_map(seed)`.
    Perturbed { base: Box<FamilySpec>, eps: f64, seed: u64 },
    File { path: PathBuf },
}

impl FamilySpec {
    pub fn build(&self) -> Result<MapFamily> {
        match self {
            Self::Power { degree } => MapFamily::power(*degree),
            Self::Product { p, q } => {
                let (pp, qq) = (UnivariatePolynomial::named(p)?, UnivariatePolynomial::named(q)?);
                if p == "chebyshev2" && q == "chebyshev2" {
                    return MapFamily::chebyshev_product();
                }
                MapFamily::product(&pp, &qq, &format!("product_{p}_{q}"))
            }
            Self::Suspension { g } => {
                if g == "lattes2" {
                    MapFamily::lattes_suspension()
                } else {
                    Err(RationalMap1D::named(g).err().unwrap_or_else(|| Error::Config(format!("unknown g `{g}`"))))
                }
            }
            Self::Perturbed { base, eps, seed } => {
                let b = base.build()?;
                let g = random_map(b.map.degree(), *seed)?;
                let map = perturb(&b.map, &g, *eps)?;
                Ok(MapFamily::custom(&format!("{}_perturbed", b.name), map))
            }
            Self::File { path } => {
                let text = std::fs::read_to_string(path)?;
                let map = parse_map(&text)?;
                let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("file").to_string();
                Ok(MapFamily::custom(&name, map))
            }
        }
    }
}

/// All knobs of a run. Counts of zero disable the corresponding stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub family: FamilySpec,
    pub seed: u64,
    pub sample_depth: usize,
    pub lyapunov_walkers: usize,
    pub lyapunov_iterations: usize,
    pub entropy_count: usize,
    pub entropy_r: f64,
    pub entropy_n: Vec<usize>,
    pub entropy_basepoints: usize,
    pub entropy_splits: usize,
    pub pointwise_count: usize,
    pub pointwise_basepoints: usize,
    pub pointwise_k_min: usize,
    pub pointwise_frac_max: f64,
    pub radii: usize,
    pub directional_basepoints: usize,
    pub frame_depth: usize,
    pub grid_m: usize,
    pub green_depth: usize,
    pub transport_basepoints: usize,
    pub pullback_orbits: usize,
    pub pullback_n: usize,
    pub resonance_tol: f64,
    /// Replaces `3·(max exponent stderr + 0.02)` when set.
    pub epsilon: Option<f64>,
    /// Margins below `−fail_sigma · stderr` fail.
    pub fail_sigma: f64,
    pub slice_basepoint: usize,
    pub slice_direction: String,
    pub slice_input: Option<PathBuf>,
    #[serde(skip)]
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Defaults for a family; the seed is still required.
    pub fn with_family(family: FamilySpec, seed: u64) -> Self {
        Self {
            family,
            seed,
            sample_depth: 25,
            lyapunov_walkers: 500,
            lyapunov_iterations: 2000,
            entropy_count: 60_000,
            entropy_r: 0.8,
            entropy_n: vec![1, 2, 3, 4],
            entropy_basepoints: 400,
            entropy_splits: 10,
            pointwise_count: 20_000,
            pointwise_basepoints: 20,
            pointwise_k_min: 30,
            pointwise_frac_max: 0.1,
            radii: 6,
            directional_basepoints: 20,
            frame_depth: 40,
            grid_m: 32,
            green_depth: 40,
            transport_basepoints: 5,
            pullback_orbits: 20,
            pullback_n: 20,
            resonance_tol: 0.05,
            epsilon: None,
            fail_sigma: 3.0,
            slice_basepoint: 0,
            slice_direction: "W".into(),
            slice_input: None,
            out: PathBuf::from("p2dyn-out"),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, None)
    }

    /// Parses `key=value` lines; `#` starts a comment. `seed_override`
    /// stands in for a missing or different `seed` line.
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: n + 1, msg: format!("expected key=value, got `{line}`") })?;
            let k = k.trim().to_string();
            if kv.insert(k.clone(), (n + 1, v.trim().to_string())).is_some() {
                return Err(Error::Parse { line: n + 1, msg: format!("duplicate key `{k}`") });
            }
        }
        let mut r = Reader { kv };
        let seed = match (r.take::<u64>("seed")?, seed_override) {
            (_, Some(s)) => s,
            (Some(s), None) => s,
            (None, None) => return Err(Error::Config("seed is mandatory".into())),
        };
        let family = r.family()?;
        let mut c = Self::with_family(family, seed);
        macro_rules! opt {
            ($($field:ident),*) => {$(
                if let Some(v) = r.take(stringify!($field))? {
                    c.$field = v;
                }
            )*};
        }
        opt!(
            sample_depth,
            lyapunov_walkers,
            lyapunov_iterations,
            entropy_count,
            entropy_r,
            entropy_basepoints,
            entropy_splits,
            pointwise_count,
            pointwise_basepoints,
            pointwise_k_min,
            pointwise_frac_max,
            radii,
            directional_basepoints,
            frame_depth,
            grid_m,
            green_depth,
            transport_basepoints,
            pullback_orbits,
            pullback_n,
            resonance_tol,
            fail_sigma,
            slice_basepoint,
            slice_direction
        );
        if let Some(v) = r.take_raw("entropy_n") {
            c.entropy_n = v
                .1
                .split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: v.0, msg: format!("entropy_n: {e}") })?;
        }
        c.epsilon = r.take("epsilon")?;
        c.slice_input = r.take_raw("slice_input").map(|v| PathBuf::from(v.1));
        if let Some(v) = r.take_raw("out") {
            c.out = PathBuf::from(v.1);
        }
        if let Some((k, (line, _))) = r.kv.into_iter().next() {
            return Err(Error::Parse { line, msg: format!("unknown key `{k}`") });
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.sample_depth == 0 {
            return bad("sample_depth must be ≥ 1");
        }
        if self.lyapunov_walkers == 1 || (self.lyapunov_walkers > 0 && self.lyapunov_iterations < 100) {
            return bad("exponents need ≥ 2 walkers and ≥ 100 iterations");
        }
        if !(self.entropy_r > 0.0) || self.entropy_n.len() < 2 || self.entropy_splits < 2 {
            return bad("entropy needs r > 0, two horizons and two jackknife groups");
        }
        if !(self.pointwise_frac_max > 0.0 && self.pointwise_frac_max < 1.0) {
            return bad("pointwise_frac_max must lie in (0, 1)");
        }
        if self.pointwise_basepoints > self.pointwise_count || self.directional_basepoints > self.pointwise_count {
            return bad("basepoints are drawn from the pointwise sample and cannot exceed pointwise_count");
        }
        if self.radii < 4 {
            return bad("radii must be ≥ 4");
        }
        if self.frame_depth < 20 {
            return bad("frame_depth must be ≥ 20");
        }
        if self.grid_m < 32 || self.grid_m % 2 != 0 {
            return bad("grid_m must be even and ≥ 32");
        }
        if self.green_depth == 0 {
            return bad("green_depth must be ≥ 1");
        }
        if self.transport_basepoints > self.directional_basepoints || self.pullback_orbits > self.directional_basepoints {
            return bad("transport and pullback reuse directional basepoints");
        }
        if self.pullback_n > self.frame_depth || (self.pullback_orbits > 0 && self.pullback_n == 0) {
            return bad("pullback_n must lie in 1..=frame_depth");
        }
        if !(self.resonance_tol > 0.0) || !(self.fail_sigma > 0.0) {
            return bad("resonance_tol and fail_sigma must be positive");
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) {
                return bad("epsilon must be positive");
            }
        }
        Ok(())
    }
}

struct Reader {
    kv: BTreeMap<String, (usize, String)>,
}

impl Reader {
    fn take_raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.kv.remove(key)
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.kv.remove(key) {
            None => Ok(None),
            Some((line, v)) => {
                v.parse::<T>().map(Some).map_err(|e| Error::Parse { line, msg: format!("{key}={v}: {e}") })
            }
        }
    }

    fn family(&mut self) -> Result<FamilySpec> {
        let (_, name) = self.take_raw("family").ok_or_else(|| Error::Config("family is mandatory".into()))?;
        self.family_named(&name)
    }

    fn family_named(&mut self, name: &str) -> Result<FamilySpec> {
        match name {
            "power" => Ok(FamilySpec::Power { degree: self.take("degree")?.unwrap_or(2) }),
            "product" => Ok(FamilySpec::Product {
                p: self.take("p")?.unwrap_or_else(|| "chebyshev2".into()),
                q: self.take("q")?.unwrap_or_else(|| "chebyshev2".into()),
            }),
            "suspension" => Ok(FamilySpec::Suspension { g: self.take("g")?.unwrap_or_else(|| "lattes2".into()) }),
            "perturbed" => {
                let (_, base) =
                    self.take_raw("base").ok_or_else(|| Error::Config("family=perturbed needs base=".into()))?;
                if base == "perturbed" {
                    return Err(Error::Config("perturbed base cannot itself be perturbed".into()));
                }
                let b = self.family_named(&base)?;
                Ok(FamilySpec::Perturbed {
                    base: Box::new(b),
                    eps: self.take("eps")?.unwrap_or(1e-2),
                    seed: self.take("perturb_seed")?.unwrap_or(1),
                })
            }
            "file" => {
                let (_, p) = self.take_raw("map_file").ok_or_else(|| Error::Config("family=file needs map_file=".into()))?;
                Ok(FamilySpec::File { path: PathBuf::from(p) })
            }
            other => Err(Error::Config(format!("unknown family `{other}`"))),
        }
    }
}
