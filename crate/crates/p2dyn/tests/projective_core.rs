use p2dyn::map_zoo::{power_map, product_map, random_map, UnivariatePolynomial};
use p2dyn::projective_core::{chart_coords, exponents, fs_distance, monomial_count, monomial_index, HomogeneousPolynomial};
use p2dyn::{ChartPoint, Error, HomogeneousMap, HomogeneousPoint, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn pt(v: [(f64, f64); 3]) -> HomogeneousPoint {
    HomogeneousPoint::new([c(v[0].0, v[0].1), c(v[1].0, v[1].1), c(v[2].0, v[2].1)]).unwrap()
}

fn coord() -> impl Strategy<Value = (f64, f64)> {
    (-2.0..2.0f64, -2.0..2.0f64)
}

fn point() -> impl Strategy<Value = HomogeneousPoint> {
    (coord(), coord(), coord())
        .prop_filter("nonzero", |(a, b, d)| a.0.abs() + a.1.abs() + b.0.abs() + b.1.abs() + d.0.abs() + d.1.abs() > 0.1)
        .prop_map(|(a, b, d)| pt([a, b, d]))
}

/// Chart representation of `f` from the chart of `p` into `target`.
fn chart_eval(map: &HomogeneousMap, chart: usize, z: [C64; 2], target: usize) -> [C64; 2] {
    let lift = ChartPoint { chart, coords: z }.lift();
    chart_coords(&map.eval_raw(&lift), target).unwrap()
}

fn fd_differential(map: &HomogeneousMap, p: &ChartPoint, target: usize) -> [[C64; 2]; 2] {
    let h = 1e-5;
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for s in 0..2 {
        let mut plus = p.coords;
        let mut minus = p.coords;
        plus[s] += h;
        minus[s] -= h;
        let fp = chart_eval(map, p.chart, plus, target);
        let fm = chart_eval(map, p.chart, minus, target);
        for r in 0..2 {
            out[r][s] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    out
}

#[test]
fn power_map_squares_coordinates() {
    let f = power_map(2).unwrap();
    let img = f.evaluate(&pt([(1.0, 0.0), (2.0, 0.0), (1.0, 0.0)])).unwrap();
    assert!(fs_distance(&img, &pt([(1.0, 0.0), (4.0, 0.0), (1.0, 0.0)])) < 1e-15);
}

#[test]
fn chebyshev_product_fixes_two_two() {
    let p = UnivariatePolynomial::chebyshev2();
    let f = product_map(&p, &p).unwrap();
    let x = HomogeneousPoint::affine(c(2.0, 0.0), c(2.0, 0.0));
    assert!(fs_distance(&f.evaluate(&x).unwrap(), &x) < 1e-15);
}

#[test]
fn normalisation_puts_max_coordinate_at_one() {
    let p = pt([(0.3, 0.1), (-3.0, 4.0), (1.0, 0.0)]);
    assert_eq!(p.max_index(), 1);
    assert_eq!(p.coords()[1], c(1.0, 0.0));
    assert!(p.coords().iter().all(|z| z.norm() <= 1.0 + 1e-15));
}

#[test]
fn zero_and_non_finite_vectors_are_rejected() {
    let z = c(0.0, 0.0);
    assert!(matches!(HomogeneousPoint::new([z, z, z]), Err(Error::InvalidArgument(_))));
    assert!(HomogeneousPoint::new([c(f64::NAN, 0.0), z, c(1.0, 0.0)]).is_err());
    assert!(ChartPoint::new(3, [z, z]).is_err());
}

#[test]
fn fs_distance_reference_values() {
    let e0 = pt([(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
    let e1 = pt([(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
    assert_eq!(fs_distance(&e0, &e0), 0.0);
    assert!((fs_distance(&e0, &e1) - 1.0).abs() < 1e-15);
    // [1:1:0] against [1:0:0]: sine of 45 degrees.
    let d = pt([(1.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
    assert!((fs_distance(&e0, &d) - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn ties_go_to_lowest_chart_index() {
    let p = pt([(1.0, 0.0), (0.0, 1.0), (0.5, 0.0)]);
    assert_eq!(ChartPoint::from_homogeneous(&p).chart, 0);
}

#[test]
fn monomial_table_indexing_is_a_bijection() {
    for d in 1..=8 {
        let ex = exponents(d);
        assert_eq!(ex.len(), monomial_count(d));
        for (i, e) in ex.iter().enumerate() {
            assert_eq!(e.iter().sum::<u32>(), d);
            assert_eq!(monomial_index(d, *e), i);
        }
    }
}

#[test]
fn polynomial_degree_mismatch_is_rejected() {
    let a = HomogeneousPolynomial::monomial(2, [2, 0, 0], c(1.0, 0.0));
    let b = HomogeneousPolynomial::monomial(3, [3, 0, 0], c(1.0, 0.0));
    assert!(HomogeneousMap::new([a.clone(), b, a.clone()]).is_err());
    assert!(a.add(&HomogeneousPolynomial::zero(3)).is_err());
}

#[test]
fn differential_of_power_map_is_diagonal() {
    let f = power_map(2).unwrap();
    let p = ChartPoint::new(2, [c(0.5, 0.0), c(0.5, 0.0)]).unwrap();
    let d = f.differential(&p).unwrap();
    assert_eq!(d.target_chart, 2);
    let m = d.matrix;
    assert!((m[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    assert!((m[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    assert!(m[(0, 1)].norm() < 1e-15 && m[(1, 0)].norm() < 1e-15);
}

#[test]
fn differential_matches_finite_differences_on_random_maps() {
    for seed in 0..5u64 {
        let f = random_map(2, seed).unwrap();
        for k in 0..20 {
            let t = k as f64;
            let p = ChartPoint::new(k % 3, [c((t * 0.37).sin() * 0.9, (t * 0.71).cos() * 0.8), c((t * 1.3).cos() * 0.7, (t * 0.2).sin())]).unwrap();
            let d = f.differential(&p).unwrap();
            let fd = fd_differential(&f, &p, d.target_chart);
            let scale = 1.0 + d.matrix.norm();
            for r in 0..2 {
                for s in 0..2 {
                    assert!((d.matrix[(r, s)] - fd[r][s]).norm() < 1e-6 * scale, "seed {seed} point {k}");
                }
            }
        }
    }
}

#[test]
fn chain_rule_for_the_second_iterate() {
    let f = random_map(2, 9).unwrap();
    let ff = f.compose(&f).unwrap();
    for k in 0..10 {
        let t = k as f64 + 0.5;
        let p = ChartPoint::new(2, [c(t.sin() * 0.6, t.cos() * 0.3), c((2.0 * t).cos() * 0.5, 0.2)]).unwrap();
        let d1 = f.differential(&p).unwrap();
        let q = ChartPoint::in_chart(&p.to_homogeneous().unwrap(), 2).unwrap();
        let fq = f.evaluate(&q.to_homogeneous().unwrap()).unwrap();
        let fq_chart = ChartPoint::in_chart(&fq, d1.target_chart).unwrap();
        let d2 = f.differential(&fq_chart).unwrap();
        let dd = ff.differential_to(&p, d2.target_chart).unwrap();
        let prod = d2.matrix * d1.matrix;
        let rel = (dd.matrix - prod).norm() / prod.norm();
        assert!(rel < 1e-9, "relative chain-rule error {rel}");
    }
}

#[test]
fn composition_agrees_with_iteration() {
    let f = random_map(2, 4).unwrap();
    let ff = f.compose(&f).unwrap();
    assert_eq!(ff.degree(), 4);
    for k in 0..20 {
        let t = k as f64;
        let p = pt([((0.3 * t).sin(), 0.1), (0.2, (0.7 * t).cos()), (1.0, 0.0)]);
        let a = f.iterate(&p, 2).unwrap();
        let b = ff.evaluate(&p).unwrap();
        assert!(fs_distance(&a, &b) < 1e-10);
    }
}

#[test]
fn injectivity_radius_of_power_map() {
    let f = power_map(2).unwrap();
    // At (0.9, 0.9) the image stays in chart t = 1 and Df = diag(1.8, 1.8),
    // so a(p) = ½‖Df⁻¹‖⁻¹ = 0.9.
    let p = ChartPoint::new(2, [c(0.9, 0.0), c(0.9, 0.0)]).unwrap();
    let expected = (0.9 / f.c2_norm()).min(1.0);
    assert!((f.injectivity_radius(&p).unwrap() - expected).abs() < 1e-12);
    assert!(f.c2_norm() > 0.0);
}

#[test]
fn critical_point_has_no_injectivity_radius() {
    let f = power_map(2).unwrap();
    let p = ChartPoint::new(2, [c(0.0, 0.0), c(0.7, 0.2)]).unwrap();
    assert!(matches!(f.injectivity_radius(&p), Err(Error::CriticalPoint(_))));
}

#[test]
fn injectivity_radius_positive_off_the_critical_set() {
    let f = random_map(2, 3).unwrap();
    let mut n = 0;
    for k in 0..1000 {
        let t = k as f64 * 0.618;
        let p = ChartPoint::new(k % 3, [c(t.sin(), (1.7 * t).cos() * 0.5), c((0.3 * t).cos(), (2.9 * t).sin() * 0.4)]).unwrap();
        match f.injectivity_radius(&p) {
            Ok(g) => {
                assert!(g > 0.0 && g <= 1.0);
                n += 1;
            }
            Err(Error::CriticalPoint(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(n > 990);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fs_distance_is_symmetric_and_bounded(p in point(), q in point()) {
        let a = fs_distance(&p, &q);
        prop_assert!((a - fs_distance(&q, &p)).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(fs_distance(&p, &p) < 1e-7);
    }

    #[test]
    fn fs_distance_triangle_inequality_up_to_factor_two(p in point(), q in point(), r in point()) {
        prop_assert!(fs_distance(&p, &r) <= 2.0 * (fs_distance(&p, &q) + fs_distance(&q, &r)) + 1e-12);
    }

    #[test]
    fn evaluation_is_homogeneous(p in point(), s in (0.1..3.0f64), arg in (0.0..std::f64::consts::TAU), seed in 0..20u64) {
        let f = random_map(2, seed).unwrap();
        let k = C64::from_polar(s, arg);
        let scaled = HomogeneousPoint::new([p.coords()[0] * k, p.coords()[1] * k, p.coords()[2] * k]).unwrap();
        prop_assert!(fs_distance(&scaled, &p) < 1e-12);
        prop_assert!(fs_distance(&f.evaluate(&scaled).unwrap(), &f.evaluate(&p).unwrap()) < 1e-12);
    }

    #[test]
    fn chart_choice_does_not_change_the_point(p in point()) {
        for chart in 0..3 {
            if p.coords()[chart].norm() > 1e-3 {
                let q = ChartPoint::in_chart(&p, chart).unwrap().to_homogeneous().unwrap();
                prop_assert!(fs_distance(&p, &q) < 1e-12);
            }
        }
        let cp = ChartPoint::from_homogeneous(&p);
        prop_assert!(cp.coords.iter().all(|z| z.norm() <= 1.0 + 1e-15));
    }
}
