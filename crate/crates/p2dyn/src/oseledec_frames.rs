//! Oseledec frames along backward orbits, the affine normal-form charts
//! `(Z, W)` they induce, and numerical checks of the diagonal pullback law.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ergodic_sampler::BackwardOrbit;
use crate::linalg::{self, M2, V2};
use crate::preimage_solver::{chart_point_near, PreimageSolver};
use crate::projective_core::{ChartPoint, HomogeneousMap, HomogeneousPoint, C64};

pub const MIN_FRAME_DEPTH: usize = 20;
pub const MIN_CONDITIONING: f64 = 1e-6;
pub const ISOTROPY_RATIO: f64 = 1.05;
pub const FORWARD_DEPTH: usize = 32;
/// Orbit points stay in the chart of the basepoint while their affine
/// coordinates are at most this large.
pub const PREFERRED_CHART_LIMIT: f64 = 4.0;
pub const DOMAIN_FRACTION: f64 = 0.05;

#[derive(Clone, Copy, Debug)]
pub struct OseledecFrame {
    pub base: ChartPoint,
    /// Fast direction, contracted at rate `e^{−nλ₁}` by `f⁻ⁿ`.
    pub e1: V2,
    /// Slow direction, contracted at rate `e^{−nλ₂}`.
    pub e2: V2,
    pub conditioning: f64,
    pub isotropic: bool,
    /// `σ₁/σ₂` of the normalised backward product.
    pub singular_ratio: f64,
    /// Largest angle in degrees between the fast directions of the last
    /// five depths.
    pub stability: f64,
}

impl OseledecFrame {
    pub fn from_directions(base: ChartPoint, e1: V2, e2: V2) -> Result<Self> {
        let e1 = linalg::normalize(&e1);
        let e2 = linalg::normalize(&e2);
        let conditioning = linalg::det(&M2::from_columns(&[e1, e2])).norm();
        if !(conditioning > MIN_CONDITIONING) {
            return Err(Error::IllConditionedFrame(conditioning));
        }
        Ok(Self { base, e1, e2, conditioning, isotropic: false, singular_ratio: f64::NAN, stability: 0.0 })
    }

    pub fn matrix(&self) -> M2 {
        M2::from_columns(&[self.e1, self.e2])
    }
}

fn axis(i: usize) -> V2 {
    if i == 0 {
        V2::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    } else {
        V2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }
}

/// Angle in degrees between two complex lines.
pub fn line_angle(u: &V2, v: &V2) -> f64 {
    let c = (u.dotc(v).norm() / (u.norm() * v.norm())).min(1.0);
    c.acos().to_degrees()
}

/// Chart points of the orbit, in the basepoint chart where possible.
pub fn orbit_charts(orbit: &BackwardOrbit) -> Vec<ChartPoint> {
    let base = ChartPoint::from_homogeneous(&orbit.points[0]);
    orbit.points.iter().map(|p| chart_point_near(p, base.chart, PREFERRED_CHART_LIMIT)).collect()
}

/// Frame at `x₀` from a backward orbit of depth `n ≥ 20`.
///
/// `e₁` is the leading left singular vector of
/// `Aₙ = Df(x₋₁)⋯Df(x₋ₙ) = Dfⁿ(x₋ₙ)`. `e₂` is the forward slow direction:
/// a generic vector at `f^M(x₀)` pulled back by `Df^M(x₀)⁻¹`,
/// `M = min(n, 32)`. When `σ₁/σ₂ ≤ 1.05` the chart axes are used.
pub fn compute_frame(map: &HomogeneousMap, orbit: &BackwardOrbit) -> Result<OseledecFrame> {
    let n = orbit.depth();
    if n < MIN_FRAME_DEPTH {
        return Err(Error::InvalidArgument(format!("frame needs orbit depth ≥ {MIN_FRAME_DEPTH}, got {n}")));
    }
    let charts = orbit_charts(orbit);
    let base = charts[0];
    let mut a = M2::identity();
    let mut recent: Vec<V2> = Vec::new();
    for k in 1..=n {
        let m = map.differential_to(&charts[k], charts[k - 1].chart)?.matrix;
        a *= m;
        let (s1, _) = linalg::singular_values(&a);
        if !(s1 > 0.0) || !s1.is_finite() {
            return Err(Error::CriticalPoint(0.0));
        }
        a /= C64::new(s1, 0.0);
        if k + 5 > n {
            recent.push(linalg::leading_left_singular_vector(&a));
        }
    }
    let (s1, s2) = linalg::singular_values(&a);
    let singular_ratio = if s2 > 0.0 { s1 / s2 } else { f64::INFINITY };
    let stability = recent.windows(2).map(|w| line_angle(&w[0], &w[1])).fold(0.0, f64::max);
    let isotropic = singular_ratio <= ISOTROPY_RATIO;
    let (e1, e2) = if isotropic {
        (axis(0), axis(1))
    } else {
        (*recent.last().expect("n ≥ 20"), forward_slow_direction(map, &orbit.points[0], n.min(FORWARD_DEPTH))?)
    };
    let mut frame = OseledecFrame::from_directions(base, e1, e2)?;
    frame.isotropic = isotropic;
    frame.singular_ratio = singular_ratio;
    frame.stability = stability;
    Ok(frame)
}

/// Direction at `x₀` least expanded by `Df^m(x₀)`, in the chart of `x₀`.
pub fn forward_slow_direction(map: &HomogeneousMap, x0: &HomogeneousPoint, m: usize) -> Result<V2> {
    let base = ChartPoint::from_homogeneous(x0);
    let mut pts = vec![base];
    let mut h = *x0;
    for _ in 0..m {
        h = map.evaluate(&h)?;
        pts.push(chart_point_near(&h, base.chart, PREFERRED_CHART_LIMIT));
    }
    let mut v = linalg::normalize(&V2::new(C64::new(0.6, 0.1), C64::new(-0.3, 0.7)));
    for k in (1..=m).rev() {
        let d = map.differential_to(&pts[k - 1], pts[k].chart)?.matrix;
        let inv = linalg::inverse(&d).ok_or(Error::CriticalPoint(0.0))?;
        v = linalg::normalize(&(inv * v));
    }
    Ok(v)
}

/// Frame at `f(x)` spanned by `Df(x)e₁` and `Df(x)e₂`.
pub fn forward_transport(map: &HomogeneousMap, frame: &OseledecFrame) -> Result<OseledecFrame> {
    let d = map.differential(&frame.base)?;
    let img = map.evaluate(&frame.base.to_homogeneous()?)?;
    let base = ChartPoint::in_chart(&img, d.target_chart)?;
    let mut out = OseledecFrame::from_directions(base, d.matrix * frame.e1, d.matrix * frame.e2)?;
    out.isotropic = frame.isotropic;
    out.singular_ratio = frame.singular_ratio;
    Ok(out)
}

/// Affine chart `p ↦ (Z, W) = E⁻¹ (chart(p) − chart(base))`, `E = [e₁ e₂]`.
#[derive(Clone, Copy, Debug)]
pub struct NormalFormCoordinates {
    pub frame: OseledecFrame,
    pub domain_radius: f64,
    matrix: M2,
    inverse: M2,
}

impl NormalFormCoordinates {
    pub fn new(frame: OseledecFrame, domain_radius: f64) -> Result<Self> {
        if !(domain_radius > 0.0) {
            return Err(Error::InvalidArgument("domain radius must be positive".into()));
        }
        let matrix = frame.matrix();
        let inverse = linalg::inverse(&matrix).ok_or(Error::IllConditionedFrame(frame.conditioning))?;
        Ok(Self { frame, domain_radius, matrix, inverse })
    }

    /// Domain radius `0.05 γ(base)`.
    pub fn from_frame(map: &HomogeneousMap, frame: OseledecFrame) -> Result<Self> {
        let gamma = map.injectivity_radius(&frame.base)?;
        Self::new(frame, DOMAIN_FRACTION * gamma)
    }

    pub fn matrix(&self) -> &M2 {
        &self.matrix
    }

    pub fn chart(&self) -> usize {
        self.frame.base.chart
    }

    /// Upper bi-Lipschitz constant `‖E⁻¹‖` against the chart metric.
    pub fn beta(&self) -> f64 {
        linalg::singular_values(&self.inverse).0
    }

    pub fn to_local(&self, p: &HomogeneousPoint) -> Result<[C64; 2]> {
        let c = ChartPoint::in_chart(p, self.chart())?;
        Ok(self.chart_to_local(&c.coords))
    }

    pub fn chart_to_local(&self, c: &[C64; 2]) -> [C64; 2] {
        let b = self.frame.base.coords;
        let v = self.inverse * V2::new(c[0] - b[0], c[1] - b[1]);
        [v[0], v[1]]
    }

    /// Chart point with local coordinates `zw`.
    pub fn from_local(&self, zw: [C64; 2]) -> ChartPoint {
        let b = self.frame.base.coords;
        let v = self.matrix * V2::new(zw[0], zw[1]);
        ChartPoint { chart: self.chart(), coords: [b[0] + v[0], b[1] + v[1]] }
    }

    pub fn to_homogeneous(&self, zw: [C64; 2]) -> Result<HomogeneousPoint> {
        self.from_local(zw).to_homogeneous()
    }
}

/// One depth of [`pullback_scaling_check`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PullbackScaling {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Median `|W|/|Z|` of the images of pure-`Z` test points.
    pub leakage_z: f64,
    /// Median `|Z|/|W|` of the images of pure-`W` test points.
    pub leakage_w: f64,
}

impl PullbackScaling {
    pub fn alpha_rate(&self) -> f64 {
        self.alpha.ln() / self.n as f64
    }

    pub fn beta_rate(&self) -> f64 {
        self.beta.ln() / self.n as f64
    }
}

const TEST_DIRECTIONS: usize = 8;
const TEST_FRACTION: f64 = 1e-3;

/// `|αₙ|`, `|βₙ|` for `n = 1..=n_max`: test points at distance
/// `δ = 10⁻³·domain_radius` along `e₁` or `e₂` are pulled back along the
/// branch of the orbit and read in the frame at `x₋ₙ` spanned by
/// `Df⁻ⁿ e₁`, `Df⁻ⁿ e₂`. Ratios are medians over eight test points,
/// extrapolated to `δ → 0` from `δ` and `δ/2`.
pub fn pullback_scaling_check(
    solver: &PreimageSolver,
    orbit: &BackwardOrbit,
    coords: &NormalFormCoordinates,
    n_max: usize,
) -> Result<Vec<PullbackScaling>> {
    if n_max == 0 || n_max > orbit.depth() {
        return Err(Error::InvalidArgument(format!("n_max must lie in 1..={}", orbit.depth())));
    }
    let map = solver.map();
    let charts = orbit_charts(orbit);
    let mut base_path = vec![orbit.points[0]];
    for k in 1..=n_max {
        let p = solver.refine(&base_path[k - 1], &orbit.points[k])?;
        base_path.push(p);
    }
    let path_charts: Vec<ChartPoint> = base_path
        .iter()
        .zip(&charts)
        .map(|(p, c)| ChartPoint::in_chart(p, c.chart))
        .collect::<Result<_>>()?;
    let mut frames = vec![coords.matrix];
    for k in 1..=n_max {
        let d = map.differential_to(&path_charts[k], path_charts[k - 1].chart)?.matrix;
        let inv = linalg::inverse(&d).ok_or(Error::CriticalPoint(0.0))?;
        let m = inv * frames[k - 1];
        let c0 = linalg::normalize(&m.column(0).into_owned());
        let c1 = linalg::normalize(&m.column(1).into_owned());
        frames.push(M2::from_columns(&[c0, c1]));
    }
    let inverses: Vec<M2> =
        frames.iter().map(|f| linalg::inverse(f).ok_or(Error::IllConditionedFrame(0.0))).collect::<Result<_>>()?;

    let mut delta = TEST_FRACTION * coords.domain_radius;
    for _ in 0..4 {
        let run = |dl: f64| -> Result<Vec<[[f64; 2]; 2]>> {
            // ratios[k] = [[|Z|/δ, |W|/|Z|] for Z tests, [|W|/δ, |Z|/|W|] for W tests]
            let mut per_dir: Vec<Vec<[[f64; 2]; 2]>> = Vec::new();
            for j in 0..TEST_DIRECTIONS {
                let u = C64::from_polar(dl, 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / TEST_DIRECTIONS as f64);
                let mut rows = vec![[[0.0; 2]; 2]; n_max];
                for (t, zw) in [[u, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), u]].into_iter().enumerate() {
                    let mut q = coords.to_homogeneous(zw)?;
                    for k in 1..=n_max {
                        q = solver.refine(&q, &base_path[k])?;
                        let c = ChartPoint::in_chart(&q, path_charts[k].chart)?;
                        let b = path_charts[k].coords;
                        let xi = inverses[k] * V2::new(c.coords[0] - b[0], c.coords[1] - b[1]);
                        let (own, other) = if t == 0 { (xi[0].norm(), xi[1].norm()) } else { (xi[1].norm(), xi[0].norm()) };
                        rows[k - 1][t] = [own / dl, other / own];
                    }
                }
                per_dir.push(rows);
            }
            Ok((0..n_max)
                .map(|k| {
                    let mut out = [[0.0; 2]; 2];
                    for t in 0..2 {
                        for s in 0..2 {
                            out[t][s] = median(per_dir.iter().map(|r| r[k][t][s]).collect());
                        }
                    }
                    out
                })
                .collect())
        };
        match (run(delta), run(0.5 * delta)) {
            (Ok(a), Ok(b)) => {
                return Ok((0..n_max)
                    .map(|k| PullbackScaling {
                        n: k + 1,
                        alpha: 2.0 * b[k][0][0] - a[k][0][0],
                        beta: 2.0 * b[k][1][0] - a[k][1][0],
                        leakage_z: b[k][0][1],
                        leakage_w: b[k][1][1],
                    })
                    .collect())
            }
            (Err(e), _) | (_, Err(e)) => {
                if !matches!(e, Error::SolverIncomplete(_) | Error::Domain(_)) {
                    return Err(e);
                }
                delta *= 0.25;
            }
        }
    }
    Err(Error::Domain("pullback test points keep escaping the branch".into()))
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `Some(k)` when `|λ₁ − kλ₂| < tolerance·λ₂` for an integer `k ≥ 2`.
pub fn resonance_detect(lambda1: f64, lambda2: f64, tolerance: f64) -> Option<u32> {
    if !(lambda2 > 0.0) || lambda1 < lambda2 {
        return None;
    }
    let k = (lambda1 / lambda2).round();
    if k >= 2.0 && (lambda1 - k * lambda2).abs() < tolerance * lambda2 {
        Some(k as u32)
    } else {
        None
    }
}
