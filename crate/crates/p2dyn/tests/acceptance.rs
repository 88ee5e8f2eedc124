//! One line per acceptance criterion, then a single verdict.

mod common;

use std::f64::consts::LN_2;
use std::time::Instant;

use p2dyn::current_slices::{
    ball_mass, mass_certificate, slice_measure, trace_measure, LocalGrid, PotentialGrid, QuadratureParams,
    SliceDirection,
};
use p2dyn::dimension_estimators::{directional_dimension, grid_schedule, DimensionKind, RadiusSchedule};
use p2dyn::ergodic_sampler::{lyapunov_exponents, sample_equilibrium, seeded_backward_orbit};
use p2dyn::green_potential::{lifted_with_depth, GreenEvaluator, DEFAULT_DEPTH};
use p2dyn::map_zoo::{perturb, power_map, product_map, random_map, MapFamily, UnivariatePolynomial};
use p2dyn::oseledec_frames::{compute_frame, pullback_scaling_check, NormalFormCoordinates};
use p2dyn::preimage_solver::{preimages, PreimageSolver};
use p2dyn::projective_core::fs_distance;
use p2dyn::verify::{run_subcommand, run_verify, ExperimentConfig, FamilySpec, Status, VerifyReport};
use p2dyn::{ChartPoint, Error, HomogeneousMap, HomogeneousPoint, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = (bool, String);

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn power_config() -> ExperimentConfig {
    ExperimentConfig::with_family(FamilySpec::Power { degree: 2 }, 1)
}

fn suspension_config() -> ExperimentConfig {
    ExperimentConfig::with_family(FamilySpec::Suspension { g: "lattes2".into() }, 1)
}

fn status_of(r: &VerifyReport, name: &str) -> Option<Status> {
    r.record(name).map(|x| x.status)
}

fn c1_power_exponents() -> Verdict {
    let f = power_map(2).unwrap();
    let solver = PreimageSolver::new(&f).unwrap();
    let t = Instant::now();
    let sample = sample_equilibrium(&solver, 25, 500, 11).unwrap();
    let e = lyapunov_exponents(&solver, &sample, 2000, 11).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = (e.lambda1 / LN_2 - 1.0).abs() < 0.01
        && (e.lambda2 / LN_2 - 1.0).abs() < 0.01
        && e.stderr1.is_finite()
        && e.stderr2.is_finite()
        && secs < 30.0;
    (ok, format!("l1 = {:.5} ± {:.1e}, l2 = {:.5} ± {:.1e}, {secs:.1} s", e.lambda1, e.stderr1, e.lambda2, e.stderr2))
}

fn c2_suspension_exponents(s: &VerifyReport) -> Verdict {
    let Some(e) = &s.exponents else { return (false, "exponent stage missing".into()) };
    let (o1, se1) = common::monomial_exponent_oracle(100_000, 21);
    let (o2, se2) = common::lattes_exponent_oracle(100_000, 22);
    let within = |x: f64, t: f64| (x / t - 1.0).abs() < 0.02;
    let ok = within(e.lambda1, LN_2)
        && within(e.lambda2, 0.5 * LN_2)
        && within(o1, LN_2)
        && within(o2, 0.5 * LN_2)
        && (e.lambda1 - o1).abs() < 0.02 * LN_2
        && (e.lambda2 - o2).abs() < 0.02 * 0.5 * LN_2;
    (
        ok,
        format!(
            "l1 = {:.5} (oracle {o1:.5} ± {se1:.1e}), l2 = {:.5} (oracle {o2:.5} ± {se2:.1e})",
            e.lambda1, e.lambda2
        ),
    )
}

fn c3_entropy(p: &VerifyReport) -> Verdict {
    let Some(e) = &p.entropy else { return (false, "entropy stage missing".into()) };
    let h = 2.0 * LN_2;
    let band = |x: f64| (0.85 * h..=1.15 * h).contains(&x);
    let gap = (e.brin_katok - e.separated).abs();
    let cs = e.combined_stderr();
    let ok = band(e.brin_katok) && band(e.separated) && gap <= cs;
    (
        ok,
        format!(
            "BK {:.4} ± {:.4}, separated {:.4} ± {:.4}, |gap| {gap:.4} vs combined stderr {cs:.4}",
            e.brin_katok, e.brin_katok_stderr, e.separated, e.separated_stderr
        ),
    )
}

fn random_targets(n: usize, seed: u64) -> Vec<HomogeneousPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut v = [c(0.0, 0.0); 3];
            for z in v.iter_mut() {
                *z = c(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0);
            }
            HomogeneousPoint::new(v).unwrap()
        })
        .collect()
}

/// Largest distance from a point of `want` to its matched point of `got`.
fn matching_error(got: &[HomogeneousPoint], want: &[HomogeneousPoint]) -> f64 {
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; got.len()];
    let mut worst: f64 = 0.0;
    for w in want {
        let (i, d) = (0..got.len())
            .filter(|&i| !used[i])
            .map(|i| (i, fs_distance(&got[i], w)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[i] = true;
        worst = worst.max(d);
    }
    worst
}

fn c4_preimages() -> Verdict {
    let maps = [
        power_map(2).unwrap(),
        product_map(&UnivariatePolynomial::chebyshev2(), &UnivariatePolynomial::chebyshev2()).unwrap(),
        MapFamily::lattes_suspension().unwrap().map,
        product_map(&UnivariatePolynomial::chebyshev3(), &UnivariatePolynomial::monomial(3)).unwrap(),
        random_map(3, 5).unwrap(),
    ];
    let mut counts_ok = true;
    let mut max_res: f64 = 0.0;
    for f in &maps {
        let d2 = (f.degree() * f.degree()) as usize;
        let solver = PreimageSolver::new(f).unwrap();
        for t in random_targets(20, 99) {
            let set = solver.preimages(&t).unwrap();
            counts_ok &= set.total_multiplicity() == d2;
            for p in &set.points {
                max_res = max_res.max(fs_distance(&f.evaluate(p).unwrap(), &t));
            }
        }
    }
    let cheb2 = UnivariatePolynomial::chebyshev2();
    let cheb3 = UnivariatePolynomial::chebyshev3();
    let f2 = product_map(&cheb2, &cheb2).unwrap();
    let f3 = product_map(&cheb3, &cheb3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut match_err: f64 = 0.0;
    for _ in 0..20 {
        let a = c(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 2.0 - 1.0);
        let b = c(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 2.0 - 1.0);
        let t = HomogeneousPoint::affine(a, b);
        let zs = common::quadratic_roots(c(0.0, 0.0), -(a + 2.0));
        let ws = common::quadratic_roots(c(0.0, 0.0), -(b + 2.0));
        let want: Vec<_> = zs.iter().flat_map(|z| ws.iter().map(|w| HomogeneousPoint::affine(*z, *w))).collect();
        match_err = match_err.max(matching_error(&preimages(&f2, &t).unwrap().expanded(), &want));
        let zs = common::chebyshev3_roots(a);
        let ws = common::chebyshev3_roots(b);
        let want: Vec<_> = zs.iter().flat_map(|z| ws.iter().map(|w| HomogeneousPoint::affine(*z, *w))).collect();
        match_err = match_err.max(matching_error(&preimages(&f3, &t).unwrap().expanded(), &want));
    }
    let ok = counts_ok && max_res < 1e-10 && match_err < 1e-9;
    (ok, format!("multiplicities {}, max residual {max_res:.1e}, root match {match_err:.1e}", if counts_ok { "d² everywhere" } else { "WRONG" }))
}

fn c5_green() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for seed in 0..3 {
        let f = random_map(2, seed).unwrap();
        for _ in 0..100 {
            let mut v = [c(0.0, 0.0); 3];
            for z in v.iter_mut() {
                *z = c(rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>() * 4.0 - 2.0);
            }
            let s = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let v = [v[0] / s, v[1] / s, v[2] / s];
            let fv = f.eval_raw(&v);
            let n = fv.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let fv = [fv[0] / n, fv[1] / n, fv[2] / n];
            let lhs = lifted_with_depth(&f, &v, 40);
            let rhs = (lifted_with_depth(&f, &fv, 39) + n.ln()) / 2.0;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    let ev = GreenEvaluator::new(&power_map(2).unwrap(), DEFAULT_DEPTH).unwrap();
    let g = ev.value(&ChartPoint::new(2, [c(2.0, 0.0), c(0.0, 0.0)]).unwrap());
    let err = (g.value - LN_2).abs();
    (worst < 1e-9 && err <= g.bound, format!("telescoping {worst:.1e}; G(2,0) − log 2 = {err:.1e} ≤ bound {:.1e}", g.bound))
}

fn slope_at(sm: &p2dyn::current_slices::SliceMeasure, center: [f64; 4], schedule: &RadiusSchedule) -> f64 {
    directional_dimension(sm, center, schedule).map(|e| e.slope).unwrap_or(f64::NAN)
}

fn c6_slicing(p: &VerifyReport, s: &VerifyReport) -> Verdict {
    let g = LocalGrid::new(32, 1.0).unwrap();
    let cal = slice_measure(&PotentialGrid::sample(g, |x| x[2] * x[2] + x[3] * x[3]), SliceDirection::Z).unwrap();
    let s4 = slope_at(&cal, [0.0; 4], &grid_schedule(&g, 8).unwrap());
    let delta = 0.5 * g.h();
    let line = PotentialGrid::sample(g, |x| 0.5 * (x[2] * x[2] + x[3] * x[3] + delta * delta).ln());
    let z = slice_measure(&line, SliceDirection::Z).unwrap();
    let w = slice_measure(&line, SliceDirection::W).unwrap();
    let tr = trace_measure(&z, &w).unwrap();
    // Basepoints on the line W = 0; the off-centre ones need a shorter schedule.
    let short = RadiusSchedule::new(0.75, 3.0 * g.h(), 6).unwrap();
    let mut line_slopes = vec![slope_at(&z, [0.0; 4], &grid_schedule(&g, 8).unwrap())];
    for center in [[0.2, 0.0, 0.0, 0.0], [0.0, -0.2, 0.0, 0.0], [-0.15, 0.15, 0.0, 0.0]] {
        line_slopes.push(slope_at(&z, center, &short));
        line_slopes.push(slope_at(&tr, center, &short));
    }
    let line_ok = line_slopes.iter().all(|s| (s - 2.0).abs() <= 0.1);
    let mut min_ok = true;
    let mut min_msg = String::new();
    for r in [p, s] {
        match &r.min_rule {
            Some(m) => {
                min_ok &= m.within_two_sigma == m.basepoints && status_of(r, "min_rule") == Some(Status::Pass);
                min_msg += &format!(" {}: {}/{}", r.family, m.within_two_sigma, m.basepoints);
            }
            None => min_ok = false,
        }
    }
    let worst_line = line_slopes.iter().map(|s| (s - 2.0).abs()).fold(0.0, f64::max);
    (
        (s4 - 4.0).abs() <= 0.05 && line_ok && min_ok,
        format!("|W|² slope {s4:.3}; line slopes within {worst_line:.3} of 2; min rule{min_msg}"),
    )
}

fn c7_mass() -> Verdict {
    let f = power_map(2).unwrap();
    let q = QuadratureParams::default();
    let (Ok(a), Ok(b)) = (mass_certificate(&f, 0, &q), mass_certificate(&f, 1, &q)) else {
        return (false, "certificate error".into());
    };
    let ok = (a.integral - 1.0).abs() <= 0.1 && (b.integral - 2.0).abs() <= 0.2;
    (ok, format!("n=0: {:.4}, n=1: {:.4}", a.integral, b.integral))
}

fn c8_power_dimension(p: &VerifyReport) -> Verdict {
    let pw: Vec<f64> = p.estimates.iter().filter(|e| e.kind == DimensionKind::Pointwise).map(|e| e.slope).collect();
    let good = pw.iter().filter(|s| (*s - 2.0).abs() <= 0.25).count();
    let dir: Vec<f64> = p.estimates.iter().filter(|e| e.kind != DimensionKind::Pointwise).map(|e| e.slope).collect();
    let min_dir = dir.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = pw.len() == 20 && good >= 15 && !dir.is_empty() && min_dir >= 1.85;
    (ok, format!("pointwise within 0.25 of 2 at {good}/{}; min directional/trace slope {min_dir:.3} over {}", pw.len(), dir.len()))
}

fn c9_suspension_dimension(s: &VerifyReport) -> Verdict {
    let Some(pw) = &s.pointwise else { return (false, "pointwise profile missing".into()) };
    let Some(tw) = s.directional.iter().find(|r| r.kind == DimensionKind::DirectionalW) else {
        return (false, "W profile missing".into());
    };
    let band = status_of(s, "semi_extremal_tw_upper") == Some(Status::Pass);
    let z: Vec<_> = s.records.iter().filter(|r| r.z_claim).collect();
    let z_warn = s.resonance == Some(2) && !z.is_empty() && z.iter().all(|r| r.status == Status::Warning);
    let ok = (pw.mean - 3.0).abs() <= 0.3 && (tw.mean - 3.0).abs() <= 0.3 && band && z_warn;
    (
        ok,
        format!(
            "pointwise mean {:.3}, d_TW mean {:.3}, upper band {}, {} Z claims as warnings (k = {:?})",
            pw.mean,
            tw.mean,
            if band { "respected" } else { "VIOLATED" },
            z.iter().filter(|r| r.status == Status::Warning).count(),
            s.resonance
        ),
    )
}

fn c10_pullback(s: &VerifyReport) -> Verdict {
    let f = power_map(2).unwrap();
    let solver = PreimageSolver::new(&f).unwrap();
    let sample = sample_equilibrium(&solver, 60, 5, 31).unwrap();
    let mut worst: f64 = 0.0;
    for (i, x) in sample.points.iter().enumerate() {
        let o = seeded_backward_orbit(&solver, x, 20, 31, i).unwrap();
        let coords = NormalFormCoordinates::from_frame(&f, compute_frame(&f, &o).unwrap()).unwrap();
        for r in pullback_scaling_check(&solver, &o, &coords, 20).unwrap() {
            let exact = 2f64.powi(-(r.n as i32));
            worst = worst.max((r.alpha - exact).abs()).max((r.beta - exact).abs());
        }
    }
    let (Some(pb), Some(eps)) = (&s.pullback, s.epsilon) else { return (false, "suspension pullback missing".into()) };
    let gap = (pb.beta_rate + 0.5 * LN_2).abs();
    let ok = worst < 1e-9 && pb.n == 20 && gap <= eps;
    (ok, format!("power |α−2⁻ⁿ|, |β−2⁻ⁿ| ≤ {worst:.1e}; suspension rate {:.4} at n = {}, |gap| {gap:.4} ≤ ε {eps:.4}", pb.beta_rate, pb.n))
}

fn c11_inequalities(p: &VerifyReport, s: &VerifyReport) -> Verdict {
    let mut ok = true;
    let mut msg = String::new();
    for r in [p, s] {
        let fails = r.records.iter().filter(|x| x.status == Status::Fail).count();
        let margin_ok = ["dim_upper_polynomial", "dim_lower"].iter().all(|n| {
            r.record(n).and_then(|x| Some(x.margin? >= -3.0 * x.stderr?)).unwrap_or(false)
        });
        let reported = status_of(r, "conjecture_dim") == Some(Status::Reported);
        ok &= fails == 0 && margin_ok && reported && r.stage_errors.is_empty();
        msg += &format!("{}: {fails} fails, dim_upper_polynomial/dim_lower {}, conjecture {}; ", r.family, if margin_ok { "hold" } else { "VIOLATED" }, if reported { "reported" } else { "JUDGED" });
    }
    (ok, msg.trim_end_matches("; ").to_string())
}

fn c12_invariance(p: &VerifyReport, s: &VerifyReport) -> Verdict {
    let mut ok = true;
    let mut msg = String::new();
    for r in [p, s] {
        for pr in &r.directional {
            ok &= pr.count == 20 && pr.spread <= 3.0 * pr.mean_stderr;
        }
        let t = r.transport.as_ref();
        ok &= t.is_some_and(|t| t.max_difference <= 3.0 * t.stderr_at_max);
        msg += &format!(
            "{}: spread/stderr ≤ {:.2}, transport {:.4} vs {:.4}; ",
            r.family,
            r.directional.iter().map(|pr| pr.spread / pr.mean_stderr).fold(0.0, f64::max),
            t.map(|t| t.max_difference).unwrap_or(f64::NAN),
            t.map(|t| 3.0 * t.stderr_at_max).unwrap_or(f64::NAN)
        );
    }
    (ok, msg.trim_end_matches("; ").to_string())
}

fn c13_determinism(p: &VerifyReport) -> Verdict {
    let again = run_verify(&power_config()).unwrap();
    let (a, b) = (p.to_json(), again.to_json());
    let ok = a == b && p.to_csv() == again.to_csv();
    (ok, format!("power report JSON {} bytes, reruns {}", a.len(), if ok { "identical" } else { "DIFFER" }))
}

fn negated(f: &HomogeneousMap) -> HomogeneousMap {
    let [a, b, c] = f.components().clone();
    HomogeneousMap::new([a.scale(C64::new(-1.0, 0.0)), b.scale(C64::new(-1.0, 0.0)), c.scale(C64::new(-1.0, 0.0))]).unwrap()
}

fn c14_degenerate_inputs() -> Verdict {
    let f = power_map(2).unwrap();
    let zero = matches!(perturb(&f, &negated(&f), 1.0), Err(Error::DegenerateMap(_)));
    let critical = matches!(f.injectivity_radius(&ChartPoint::new(2, [c(0.0, 0.0), c(0.5, 0.0)]).unwrap()), Err(Error::CriticalPoint(_)));
    let g = LocalGrid::new(32, 1.0).unwrap();
    let sm = slice_measure(&PotentialGrid::sample(g, |x| x[2] * x[2] + x[3] * x[3]), SliceDirection::Z).unwrap();
    let resolution = matches!(ball_mass(&sm, [0.0; 4], 2.0 * g.h()), Err(Error::Resolution(_)));
    let usage = matches!(run_subcommand("bogus", &power_config()), Err(Error::Usage(_)));
    let cli = std::process::Command::new(env!("CARGO_BIN_EXE_p2dyn"))
        .args(["bogus", "--config", "none.cfg"])
        .output()
        .is_ok_and(|o| o.status.code() == Some(2));
    let ok = zero && critical && resolution && usage && cli;
    let yn = |b: bool| if b { "ok" } else { "MISSING" };
    (ok, format!("zero map {}, critical point {}, sub-resolution {}, unknown subcommand {} (cli {})", yn(zero), yn(critical), yn(resolution), yn(usage), yn(cli)))
}

#[test]
fn acceptance() {
    let t = Instant::now();
    let power = run_verify(&power_config()).unwrap();
    let susp = run_verify(&suspension_config()).unwrap();
    eprintln!("full pipelines: {:.0} s", t.elapsed().as_secs_f64());
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("exponents, power map", Box::new(c1_power_exponents)),
        ("exponents, semi-extremal", Box::new(|| c2_suspension_exponents(&susp))),
        ("entropy, power map", Box::new(|| c3_entropy(&power))),
        ("preimage solver", Box::new(c4_preimages)),
        ("green function", Box::new(c5_green)),
        ("slicing calibration", Box::new(|| c6_slicing(&power, &susp))),
        ("mass certificate", Box::new(c7_mass)),
        ("dimension, power map", Box::new(|| c8_power_dimension(&power))),
        ("dimension, semi-extremal", Box::new(|| c9_suspension_dimension(&susp))),
        ("pullback scaling", Box::new(|| c10_pullback(&susp))),
        ("inequality suite", Box::new(|| c11_inequalities(&power, &susp))),
        ("invariance", Box::new(|| c12_invariance(&power, &susp))),
        ("determinism", Box::new(|| c13_determinism(&power))),
        ("degenerate inputs", Box::new(c14_degenerate_inputs)),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run();
        println!("criterion {:>2} {} {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
