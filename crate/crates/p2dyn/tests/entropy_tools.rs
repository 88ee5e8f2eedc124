use std::f64::consts::{LN_2, PI};

use p2dyn::entropy_tools::{
    brin_katok_entropy, concentrated_separated_set, dynamical_distance, orbits, separated_from_orbits, separated_set,
    DynamicalBallQuery, EntropyParams,
};
use p2dyn::ergodic_sampler::{sample_equilibrium, MeasureSample};
use p2dyn::map_zoo::{power_map, random_map};
use p2dyn::preimage_solver::PreimageSolver;
use p2dyn::projective_core::fs_distance;
use p2dyn::{Error, HomogeneousMap, HomogeneousPoint, C64};
use proptest::prelude::*;

fn torus(a: f64, b: f64) -> HomogeneousPoint {
    HomogeneousPoint::affine(C64::from_polar(1.0, a), C64::from_polar(1.0, b))
}

fn sample(f: &HomogeneousMap, count: usize, seed: u64) -> MeasureSample {
    sample_equilibrium(&PreimageSolver::new(f).unwrap(), 25, count, seed).unwrap()
}

#[test]
fn zero_horizon_is_the_fubini_study_distance() {
    let f = random_map(2, 1).unwrap();
    let x = torus(0.3, 1.0);
    let y = torus(0.5, -0.2);
    assert_eq!(dynamical_distance(&f, &x, &y, 0).unwrap(), fs_distance(&x, &y));
}

#[test]
fn dynamical_distance_is_monotone_in_n() {
    let f = random_map(2, 2).unwrap();
    let s = sample(&f, 20, 1);
    for w in s.points.windows(2) {
        let mut last = 0.0;
        for n in 0..8 {
            let d = dynamical_distance(&f, &w[0], &w[1], n).unwrap();
            assert!(d >= last);
            last = d;
        }
    }
}

/// Fubini–Study distance between `[e^{ia} : 1 : 1]` and `[e^{ib} : 1 : 1]`.
fn torus_line_distance(gap: f64) -> f64 {
    (1.0 - (5.0 + 4.0 * gap.cos()) / 9.0).max(0.0).sqrt()
}

#[test]
fn power_map_doubles_angular_gaps() {
    let f = power_map(2).unwrap();
    let (a, theta) = (0.7, 1e-4);
    let x = torus(a, 0.0);
    let y = torus(a + theta, 0.0);
    for n in 0..14 {
        let oracle = (0..=n).map(|k| torus_line_distance((2f64.powi(k) * theta) % (2.0 * PI))).fold(0.0, f64::max);
        let d = dynamical_distance(&f, &x, &y, n as usize).unwrap();
        assert!((d - oracle).abs() < 1e-9, "n = {n}: {d} vs {oracle}");
    }
}

#[test]
fn dynamical_ball_membership() {
    let f = power_map(2).unwrap();
    let q = DynamicalBallQuery::new(torus(0.0, 0.0), 4, 0.1).unwrap();
    assert!(q.contains(&f, &torus(1e-3, 0.0)).unwrap());
    assert!(!q.contains(&f, &torus(0.1, 0.0)).unwrap());
    assert!(DynamicalBallQuery::new(torus(0.0, 0.0), 0, 0.1).is_err());
    assert!(DynamicalBallQuery::new(torus(0.0, 0.0), 1, 0.0).is_err());
}

#[test]
fn separated_set_extremes() {
    let f = power_map(2).unwrap();
    let s = sample(&f, 100, 2);
    assert_eq!(separated_set(&s.points, &f, 3, 1e-12).unwrap().len(), 100);
    assert_eq!(separated_set(&s.points, &f, 3, 1.01).unwrap(), vec![0]);
}

/// Greedy maximal separated subset from the full distance matrix.
fn brute_greedy(d: &[Vec<f64>], r: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in 0..d.len() {
        if kept.iter().all(|&j| d[i][j] >= r) {
            kept.push(i);
        }
    }
    kept
}

#[test]
fn unit_grid_matches_brute_force_greedy() {
    let f = power_map(2).unwrap();
    let spacing = 1e-3;
    let pts: Vec<HomogeneousPoint> = (0..100)
        .map(|k| HomogeneousPoint::affine(C64::new((k % 10) as f64 * spacing, 0.0), C64::new((k / 10) as f64 * spacing, 0.0)))
        .collect();
    let d: Vec<Vec<f64>> = pts.iter().map(|p| pts.iter().map(|q| fs_distance(p, q)).collect()).collect();
    let r = 1.5 * spacing;
    let got = separated_set(&pts, &f, 0, r).unwrap();
    assert_eq!(got, brute_greedy(&d, r));
    // Near the origin the chart is almost isometric: every other row and column.
    assert_eq!(got.len(), 25);
}

#[test]
fn separated_sets_are_disjoint_and_covering() {
    let f = power_map(2).unwrap();
    let s = sample(&f, 200, 3);
    let n = 3;
    let orb = orbits(&f, &s.points, n).unwrap();
    let dist = |i: usize, j: usize| (0..=n).map(|k| fs_distance(&orb[i][k], &orb[j][k])).fold(0.0, f64::max);
    for r in [0.05, 0.2, 0.5] {
        let kept = separated_from_orbits(&orb, n, r);
        for (a, &i) in kept.iter().enumerate() {
            for &j in &kept[a + 1..] {
                assert!(dist(i, j) >= r);
            }
        }
        for i in 0..orb.len() {
            assert!(kept.iter().any(|&j| dist(i, j) < r), "point {i} uncovered at r = {r}");
        }
    }
}

#[test]
fn separated_count_is_nonincreasing_in_r() {
    let f = power_map(2).unwrap();
    let s = sample(&f, 300, 4);
    let orb = orbits(&f, &s.points, 4).unwrap();
    let mut last = usize::MAX;
    for k in 1..12 {
        let r = 0.05 * k as f64;
        let nn = separated_from_orbits(&orb, 4, r).len();
        assert!(nn <= last, "r = {r}");
        last = nn;
    }
}

#[test]
fn concentrated_set_thresholds() {
    let f = power_map(2).unwrap();
    let s = sample(&f, 2000, 5);
    let all = concentrated_separated_set(&s, &f, 3, 0.3, 0.0).unwrap();
    assert_eq!(all.indices.len(), all.separated);
    assert!(!all.empty);
    let none = concentrated_separated_set(&s, &f, 3, 0.3, 1.0).unwrap();
    assert!(none.empty && none.indices.is_empty());
    // Proof threshold e^{−n h − 2nε} at n = 8, ε = 0.1.
    let n = 8;
    let thr = (-(n as f64) * 2.0 * LN_2 - 2.0 * n as f64 * 0.1).exp();
    let c = concentrated_separated_set(&s, &f, n, 0.1, thr).unwrap();
    assert!(c.indices.len() as f64 >= 0.5 * c.separated as f64);
}

#[test]
fn small_samples_are_rejected() {
    let f = power_map(2).unwrap();
    let s = sample(&f, 500, 6);
    assert!(matches!(brin_katok_entropy(&f, &s, &EntropyParams::default()), Err(Error::InsufficientSample(_))));
}

#[test]
fn bad_horizons_are_rejected() {
    let f = power_map(2).unwrap();
    let s = sample(&f, 2000, 6);
    let p = EntropyParams { n_list: vec![3, 2], ..Default::default() };
    assert!(matches!(brin_katok_entropy(&f, &s, &p), Err(Error::InvalidArgument(_))));
}

#[test]
fn power_map_entropy_is_log_d_squared() {
    let f = power_map(2).unwrap();
    let e = brin_katok_entropy(&f, &sample(&f, 2000, 7), &EntropyParams::default()).unwrap();
    let h = 2.0 * LN_2;
    assert!((e.brin_katok / h - 1.0).abs() < 0.15, "{e:?}");
    assert!((e.separated / h - 1.0).abs() < 0.15, "{e:?}");
}

#[test]
fn entropy_is_stable_under_reseeding() {
    let f = power_map(2).unwrap();
    let p = EntropyParams::default();
    let a = brin_katok_entropy(&f, &sample(&f, 2000, 10), &p).unwrap();
    let b = brin_katok_entropy(&f, &sample(&f, 2000, 20), &p).unwrap();
    let tol = a.brin_katok_stderr.hypot(b.brin_katok_stderr);
    assert!((a.brin_katok - b.brin_katok).abs() < 3.0 * tol, "{} vs {}", a.brin_katok, b.brin_katok);
    let tol = a.separated_stderr.hypot(b.separated_stderr);
    assert!((a.separated - b.separated).abs() < 3.0 * tol, "{} vs {}", a.separated, b.separated);
}

#[test]
#[ignore = "log N_n / n carries a log C / n offset that exceeds 0.3 at every horizon a 2000-point sample resolves"]
fn separated_growth_stays_near_the_entropy() {
    let f = power_map(2).unwrap();
    let e = brin_katok_entropy(&f, &sample(&f, 2000, 11), &EntropyParams::default()).unwrap();
    let h = 2.0 * LN_2;
    let half = e.rows.len() / 2;
    for row in &e.rows[half..] {
        let g = (row.separated_count as f64).ln() / row.n as f64;
        assert!((g - h).abs() <= 0.3, "n = {}: {g}", row.n);
    }
}

#[test]
fn separated_growth_increments_match_the_entropy() {
    let f = power_map(2).unwrap();
    let e = brin_katok_entropy(&f, &sample(&f, 2000, 11), &EntropyParams::default()).unwrap();
    let h = 2.0 * LN_2;
    for w in e.rows.windows(2) {
        let g = (w[1].separated_count as f64 / w[0].separated_count as f64).ln() / (w[1].n - w[0].n) as f64;
        assert!((g - h).abs() <= 0.3, "n = {}: {g}", w[1].n);
    }
}

#[test]
fn entropy_csv_has_one_row_per_horizon() {
    let f = power_map(2).unwrap();
    let e = brin_katok_entropy(&f, &sample(&f, 2000, 12), &EntropyParams::default()).unwrap();
    let mut buf = Vec::new();
    e.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("n,N_n,neg_log_mass,brin_katok,separated"));
    assert_eq!(text.lines().count(), e.rows.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dynamical_distance_is_symmetric(a in 0.0..std::f64::consts::TAU, b in 0.0..std::f64::consts::TAU, c in 0.0..std::f64::consts::TAU, n in 0usize..6) {
        let f = random_map(2, 3).unwrap();
        let x = torus(a, b);
        let y = torus(c, a);
        prop_assert_eq!(dynamical_distance(&f, &x, &y, n).unwrap(), dynamical_distance(&f, &y, &x, n).unwrap());
    }
}
