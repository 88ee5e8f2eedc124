use std::f64::consts::LN_2;
use std::sync::OnceLock;

use p2dyn::verify::{
    epsilon_corrections, epsilon_policy, exit_code, run_subcommand, run_verify, ExperimentConfig, FamilySpec,
    InequalityRecord, Reading, Relation, Status, VerifyReport,
};
use p2dyn::Error;
use proptest::prelude::*;

const SMALL: &str = "
lyapunov_walkers=40
lyapunov_iterations=300
entropy_count=2000
entropy_basepoints=100
pointwise_count=3000
pointwise_basepoints=4
pointwise_k_min=20
directional_basepoints=3
transport_basepoints=1
pullback_orbits=2
";

fn small(family: &str, seed: u64) -> ExperimentConfig {
    ExperimentConfig::parse(&format!("family={family}\nseed={seed}\n{SMALL}"), None).unwrap()
}

fn suspension_report() -> &'static VerifyReport {
    static R: OnceLock<VerifyReport> = OnceLock::new();
    R.get_or_init(|| run_verify(&small("suspension", 3)).unwrap())
}

/// `O₅` rewritten from the display: the exact bound minus the `ε` bound.
fn o5_by_hand(eps: f64, l1: f64, h: f64, d: f64) -> f64 {
    let exact = 2.0 + (h - d.ln()) / l1;
    let perturbed = 2.0 + (h - d.ln() - 13.0 * eps) / (l1 + 4.0 * eps) - eps;
    exact - perturbed
}

#[test]
fn o5_matches_an_independent_transcription() {
    let o = epsilon_corrections(0.01, LN_2, LN_2, 2.0 * LN_2, 2).unwrap();
    // (h − log d)/λ₁ = 1 here, so the bound simplifies by hand as well.
    let simplified = 1.0 - (LN_2 - 0.13) / (LN_2 + 0.04) + 0.01;
    assert!((o.o5 - o5_by_hand(0.01, LN_2, 2.0 * LN_2, 2.0)).abs() < 1e-12);
    assert!((o.o5 - simplified).abs() < 1e-12);
}

#[test]
fn o3_matches_its_closed_form() {
    let (l1, l2, eps) = (LN_2, 0.5 * LN_2, 0.01);
    let o = epsilon_corrections(eps, l1, l2, 2.0 * LN_2, 2).unwrap();
    let want = (LN_2 + 2.0 * l1 + 3.0 * eps) / (l2 - 4.0 * eps) - (LN_2 + 2.0 * l1) / l2;
    assert!((o.o3 - want).abs() < 1e-12);
}

#[test]
fn corrections_vanish_with_epsilon() {
    for (l1, l2, d) in [(LN_2, LN_2, 2), (LN_2, 0.5 * LN_2, 2), (1.5, 0.8, 3)] {
        let h = 2.0 * (d as f64).ln();
        let mut last = f64::INFINITY;
        for k in 2..10 {
            let eps = 10f64.powi(-k);
            let o = epsilon_corrections(eps, l1, l2, h, d).unwrap();
            let all = [o.o1, o.o2, o.o3, o.o4, o.o5, o.o6];
            assert!(all.iter().all(|x| *x > 0.0), "{all:?} at ε = {eps}");
            let worst = all.iter().copied().fold(0.0, f64::max);
            assert!(worst < last);
            last = worst;
        }
        assert!(last < 1e-7);
    }
}

#[test]
fn large_epsilon_is_a_domain_error() {
    let r = epsilon_corrections(0.1, LN_2, 0.4, 2.0 * LN_2, 2);
    assert!(matches!(r, Err(Error::Domain(_))));
    assert!(epsilon_corrections(0.0, LN_2, LN_2, 1.0, 2).is_err());
    assert!(epsilon_corrections(0.01, 0.3, 0.6, 1.0, 2).is_err());
}

#[test]
fn epsilon_policy_is_three_times_stderr_plus_two_hundredths() {
    assert!((epsilon_policy(0.0) - 0.06).abs() < 1e-15);
    assert!((epsilon_policy(0.01) - 0.09).abs() < 1e-15);
}

#[test]
fn config_parsing() {
    let c = ExperimentConfig::parse("# comment\nfamily = power\ndegree=3\nseed=9 # trailing\n", None).unwrap();
    assert_eq!(c.family, FamilySpec::Power { degree: 3 });
    assert_eq!(c.seed, 9);
    assert_eq!(ExperimentConfig::parse("family=power\nseed=9\n", Some(4)).unwrap().seed, 4);
    assert_eq!(ExperimentConfig::parse("family=power\n", Some(4)).unwrap().seed, 4);
    let c = ExperimentConfig::parse("family=perturbed\nbase=power\neps=0.5\nseed=1\n", None).unwrap();
    assert!(matches!(c.family, FamilySpec::Perturbed { eps, .. } if eps == 0.5));
    let c = ExperimentConfig::parse("family=power\nseed=1\nentropy_n=2,3,5\n", None).unwrap();
    assert_eq!(c.entropy_n, vec![2, 3, 5]);
}

#[test]
fn config_errors() {
    let parse = |s: &str| ExperimentConfig::parse(s, None);
    assert!(matches!(parse("family=power\n"), Err(Error::Config(_))));
    assert!(matches!(parse("seed=1\n"), Err(Error::Config(_))));
    assert!(matches!(parse("family=power\nseed=1\nbogus=3\n"), Err(Error::Parse { line: 3, .. })));
    assert!(matches!(parse("family=power\nseed=1\nseed=2\n"), Err(Error::Parse { line: 3, .. })));
    assert!(matches!(parse("family=power\nseed=x\n"), Err(Error::Parse { line: 2, .. })));
    assert!(matches!(parse("family=power\nseed=1\nno equals sign\n"), Err(Error::Parse { line: 3, .. })));
    assert!(matches!(parse("family=power\nseed=1\nsample_depth=-4\n"), Err(Error::Parse { line: 3, .. })));
    assert!(matches!(parse("family=power\nseed=1\nsample_depth=0\n"), Err(Error::Config(_))));
    assert!(matches!(parse("family=power\nseed=1\nframe_depth=10\n"), Err(Error::Config(_))));
    assert!(matches!(parse("family=klein\nseed=1\n"), Err(Error::Config(_))));
    assert!(matches!(parse("family=perturbed\nbase=perturbed\nseed=1\n"), Err(Error::Config(_))));
}

fn rec(relation: Relation, left: f64, right: f64, stderr: f64) -> InequalityRecord {
    InequalityRecord::evaluate("x", "x", relation, Reading::with_stderr(left, stderr), Reading::exact(right), 0.05, 3.0, false)
}

#[test]
fn status_rules() {
    assert_eq!(rec(Relation::AtLeast, 2.1, 2.0, 0.01).status, Status::Pass);
    assert_eq!(rec(Relation::AtLeast, 1.98, 2.0, 0.01).status, Status::Inconclusive);
    assert_eq!(rec(Relation::AtLeast, 1.9, 2.0, 0.01).status, Status::Fail);
    assert_eq!(rec(Relation::AtMost, 1.9, 2.0, 0.01).status, Status::Pass);
    assert_eq!(rec(Relation::AtMost, 2.1, 2.0, 0.01).status, Status::Fail);
    assert_eq!(rec(Relation::Near { window: 0.2 }, 2.1, 2.0, 0.01).status, Status::Pass);
    assert_eq!(rec(Relation::Compare, 9.0, 2.0, 0.01).status, Status::Reported);
    assert_eq!(rec(Relation::AtLeast, f64::NAN, 2.0, 0.01).status, Status::Inconclusive);
    // Deviation widens the reading in the direction of the claim.
    let r = InequalityRecord::evaluate(
        "x",
        "x",
        Relation::AtLeast,
        Reading { value: 1.9, stderr: 0.01, deviation: 0.2 },
        Reading::exact(2.0),
        0.05,
        3.0,
        false,
    );
    assert_eq!(r.status, Status::Pass);
    assert!((r.left.unwrap() - 2.1).abs() < 1e-12);
}

#[test]
fn downgrade_caps_at_warning() {
    for left in [2.5, 1.0] {
        let mut r = rec(Relation::AtLeast, left, 2.0, 0.01);
        r.downgrade("resonance");
        assert_eq!(r.status, Status::Warning);
        assert!(r.note.contains("measured outcome"));
    }
    let mut r = rec(Relation::AtLeast, 1.98, 2.0, 0.01);
    r.downgrade("resonance");
    assert_eq!(r.status, Status::Inconclusive);
}

#[test]
fn exit_code_rules() {
    let pass = rec(Relation::AtLeast, 3.0, 2.0, 0.01);
    let fail = rec(Relation::AtLeast, 1.0, 2.0, 0.01);
    let inc = rec(Relation::AtLeast, 1.99, 2.0, 0.01);
    let rep = rec(Relation::Compare, 1.0, 2.0, 0.01);
    assert_eq!(exit_code(&[pass.clone(), rep.clone()]), 0);
    assert_eq!(exit_code(&[pass.clone(), inc.clone()]), 0);
    assert_eq!(exit_code(&[pass, fail.clone()]), 1);
    assert_eq!(exit_code(&[inc.clone(), fail]), 1);
    assert_eq!(exit_code(&[inc, rep.clone()]), 3);
    assert_eq!(exit_code(&[rep]), 0);
}

#[test]
fn resonance_caps_every_z_claim() {
    let r = suspension_report();
    assert_eq!(r.resonance, Some(2));
    let z: Vec<_> = r.records.iter().filter(|x| x.z_claim).collect();
    assert!(!z.is_empty());
    for x in z {
        assert!(matches!(x.status, Status::Warning | Status::Inconclusive), "{} is {:?}", x.name, x.status);
    }
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn one_epsilon_per_report() {
    let r = suspension_report();
    let eps = r.epsilon.unwrap();
    assert_eq!(r.corrections.unwrap().epsilon, eps);
    assert!(r.records.iter().all(|x| x.epsilon == eps));
}

#[test]
fn conjecture_is_reported_not_judged() {
    let r = suspension_report();
    assert_eq!(r.record("conjecture_dim").unwrap().status, Status::Reported);
    assert!(r.record("semi_extremal_dim").is_some());
    assert!(r.assumptions.iter().any(|a| a.contains("nu = mu")));
}

#[test]
fn missing_stages_make_records_inconclusive() {
    let mut c = small("power", 1);
    c.lyapunov_walkers = 0;
    c.directional_basepoints = 0;
    c.transport_basepoints = 0;
    c.pullback_orbits = 0;
    c.entropy_count = 0;
    let r = run_verify(&c).unwrap();
    assert!(r.records.iter().all(|x| matches!(x.status, Status::Inconclusive | Status::Reported)));
    assert_eq!(r.exit_code(), 3);
}

#[test]
fn failed_stage_is_recorded() {
    let mut c = small("power", 1);
    c.entropy_count = 100;
    c.directional_basepoints = 0;
    c.transport_basepoints = 0;
    c.pullback_orbits = 0;
    let r = run_verify(&c).unwrap();
    assert!(r.stage_errors.get("entropy").unwrap().contains("insufficient sample"));
    assert!(r.record("entropy_brin_katok").is_none());
}

#[test]
fn reports_are_deterministic() {
    let mut c = small("power", 5);
    c.directional_basepoints = 2;
    c.pullback_orbits = 2;
    let a = run_verify(&c).unwrap();
    let b = run_verify(&c).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.to_csv().starts_with("# p2dyn inequality report v1\nname,status,"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let c = small("power", 1);
    assert!(matches!(run_subcommand("bogus", &c), Err(Error::Usage(_))));
}

#[test]
fn exponents_subcommand_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small("power", 2);
    c.out = dir.path().to_path_buf();
    let o = run_subcommand("exponents", &c).unwrap();
    assert_eq!(o.exit_code, 0);
    let text = std::fs::read_to_string(dir.path().join("exponents.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda1,lambda2,stderr1,stderr2,walkers,iterations"));
    let v: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((v[0] - LN_2).abs() < 0.01 && (v[1] - LN_2).abs() < 0.01, "{v:?}");
}

#[test]
fn slice_output_feeds_the_dimension_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small("power", 4);
    c.out = dir.path().join("slice");
    run_subcommand("slice", &c).unwrap();
    let csv = dir.path().join("slice").join("slice.csv");
    assert!(csv.exists());
    c.slice_input = Some(csv);
    c.out = dir.path().join("dim");
    run_subcommand("dimension", &c).unwrap();
    let text = std::fs::read_to_string(dir.path().join("dim").join("dimension.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "directional-W");
    let slope: f64 = row[2].parse().unwrap();
    assert!(slope >= 2.0 - 0.15, "{slope}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fail_only_beyond_three_sigma(left in -5.0..5.0f64, right in -5.0..5.0f64, s in 0.001..1.0f64) {
        let r = rec(Relation::AtLeast, left, right, s);
        prop_assert_eq!(r.status == Status::Fail, left - right < -3.0 * s);
        prop_assert_eq!(r.status == Status::Pass, left >= right);
    }
}
