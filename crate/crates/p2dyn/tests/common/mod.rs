//! Independent one-dimensional oracles shared by the integration tests.
#![allow(dead_code)]

use p2dyn::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mean and standard error of a slice.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Birkhoff average of `log |g'|ₛₚₕ` for `g(x) = (x² − 1)/(2ix)` along a
/// backward random orbit, which equidistributes towards the measure of
/// maximal entropy of `g`. Batch means give the error bar.
pub fn lattes_exponent_oracle(steps: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i = C64::new(0.0, 1.0);
    let mut y = C64::new(0.31, 0.17);
    let spherical = |x: C64| {
        let gx = (x * x - 1.0) / (2.0 * i * x);
        let dg = (x * x + 1.0) / (2.0 * i * x * x);
        (dg.norm() * (1.0 + x.norm_sqr()) / (1.0 + gx.norm_sqr())).ln()
    };
    let mut logs = Vec::with_capacity(steps);
    for k in 0..steps + 200 {
        // x² − 2iy·x − 1 = 0
        let disc = (-(y * y) + 1.0).sqrt();
        let x = if rng.random::<bool>() { i * y + disc } else { i * y - disc };
        if k >= 200 {
            logs.push(spherical(x));
        }
        y = x;
    }
    batch_means(&logs, 100)
}

/// Birkhoff average of `log |p'|` for `p(z) = z² − 2` on its Julia set
/// `[−2, 2]`, sampled by backward iteration `z ↦ ±√(z + 2)`.
pub fn chebyshev_exponent_oracle(steps: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = 0.3f64;
    let mut logs = Vec::with_capacity(steps);
    for k in 0..steps + 200 {
        let r = (z + 2.0).sqrt();
        z = if rng.random::<bool>() { r } else { -r };
        if k >= 200 {
            logs.push((2.0 * z).abs().ln());
        }
    }
    batch_means(&logs, 100)
}

/// Exponent of `t ↦ t²` on the unit circle: Birkhoff average of `log |2t|`.
pub fn monomial_exponent_oracle(steps: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logs: Vec<f64> =
        (0..steps).map(|_| (2.0 * C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU)).norm().ln()).collect();
    batch_means(&logs, 100)
}

fn batch_means(v: &[f64], batches: usize) -> (f64, f64) {
    let size = v.len() / batches;
    let means: Vec<f64> = v.chunks(size).take(batches).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    mean_se(&means)
}

/// Roots of `z³ − 3z = a` via `z = u + 1/u`, `u³ = (a + √(a² − 4))/2`.
pub fn chebyshev3_roots(a: C64) -> [C64; 3] {
    let s = (a + (a * a - 4.0).sqrt()) / 2.0;
    let u0 = s.powf(1.0 / 3.0);
    let w = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut out = [C64::new(0.0, 0.0); 3];
    let mut u = u0;
    for o in out.iter_mut() {
        *o = u + 1.0 / u;
        u *= w;
    }
    out
}

/// Roots of `z² + c₁ z + c₀ = 0`.
pub fn quadratic_roots(c1: C64, c0: C64) -> [C64; 2] {
    let d = (c1 * c1 - 4.0 * c0).sqrt();
    [(-c1 + d) / 2.0, (-c1 - d) / 2.0]
}
