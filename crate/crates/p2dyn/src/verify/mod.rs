//! Experiment runner: composes the estimators, evaluates the dimension
//! inequalities with explicit `ε`-corrections and writes reports.

pub mod config;
pub mod corrections;
pub mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::current_slices::{slice_measure, trace_measure, LocalGrid, SliceDirection, SliceMeasure};
use crate::dimension_estimators::{
    dimension_profile, directional_dimension, grid_schedule, pointwise_profile, profile_report, transport_check,
    write_estimates_csv, DimensionEstimate, DimensionKind, DimensionProfile, ProfileParams, ProfileReport,
};
use crate::entropy_tools::{brin_katok_entropy, EntropyEstimate, EntropyParams};
use crate::ergodic_sampler::{lyapunov_exponents, mean_stderr, sample_equilibrium, seeded_backward_orbit, LyapunovEstimate, MeasureSample};
use crate::error::{Error, Result};
use crate::green_potential::{local_potential, GreenEvaluator};
use crate::map_zoo::MapFamily;
use crate::oseledec_frames::{compute_frame, pullback_scaling_check, resonance_detect, NormalFormCoordinates};
use crate::preimage_solver::PreimageSolver;

pub use config::{ExperimentConfig, FamilySpec};
pub use corrections::{epsilon_corrections, epsilon_policy, Corrections};
pub use report::{exit_code, InequalityRecord, Reading, Relation, Status};

pub const SUBCOMMANDS: [&str; 5] = ["exponents", "dimension", "slice", "entropy", "verify"];

/// Independent seed for stage `k` of a run.
pub fn stage_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const STAGE_EXPONENTS: u64 = 1;
const STAGE_ENTROPY: u64 = 2;
const STAGE_DIMENSION: u64 = 3;
const STAGE_ORBITS: u64 = 4;

#[derive(Clone, Debug, Serialize)]
pub struct PullbackSummary {
    pub n: usize,
    pub orbits: usize,
    pub alpha_rate: f64,
    pub alpha_rate_stderr: f64,
    pub beta_rate: f64,
    pub beta_rate_stderr: f64,
    pub leakage_z: f64,
    pub leakage_w: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportSummary {
    pub basepoints: usize,
    /// Largest `|Δslope|` over basepoints and slice kinds.
    pub max_difference: f64,
    /// Combined regression error at the worst basepoint.
    pub stderr_at_max: f64,
    pub worst_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MinRuleSummary {
    pub basepoints: usize,
    pub mean_gap: f64,
    pub mean_stderr: f64,
    /// Basepoints where `|trace − min(Z, W)| ≤ 2 ×` combined stderr.
    pub within_two_sigma: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub family: String,
    pub degree: u32,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub exponents: Option<LyapunovEstimate>,
    pub entropy: Option<EntropyEstimate>,
    /// Entropy substituted into the inequalities: `h_μ = log d²`.
    pub entropy_used: f64,
    pub pointwise: Option<ProfileReport>,
    pub directional: Vec<ProfileReport>,
    /// Per-basepoint pointwise and directional estimates.
    pub estimates: Vec<DimensionEstimate>,
    pub transport: Option<TransportSummary>,
    pub pullback: Option<PullbackSummary>,
    pub min_rule: Option<MinRuleSummary>,
    pub resonance: Option<u32>,
    pub epsilon: Option<f64>,
    pub corrections: Option<Corrections>,
    pub assumptions: Vec<String>,
    pub stage_errors: BTreeMap<String, String>,
    pub records: Vec<InequalityRecord>,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        exit_code(&self.records)
    }

    pub fn record(&self, name: &str) -> Option<&InequalityRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn to_csv(&self) -> String {
        report::records_csv(&self.records)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("family {} (d = {}), seed {}\n", self.family, self.degree, self.seed);
        if let Some(e) = &self.exponents {
            s += &format!(
                "lambda1 = {:.5} ± {:.5}, lambda2 = {:.5} ± {:.5}\n",
                e.lambda1, e.stderr1, e.lambda2, e.stderr2
            );
        }
        if let Some(eps) = self.epsilon {
            s += &format!("epsilon = {eps:.4}, resonance = {:?}\n", self.resonance);
        }
        s += &report::records_table(&self.records);
        for (k, v) in &self.stage_errors {
            s += &format!("stage {k} failed: {v}\n");
        }
        s
    }
}

/// Everything computed by the stages, before inequalities are formed.
#[derive(Default)]
struct Measurements {
    exponents: Option<LyapunovEstimate>,
    entropy: Option<EntropyEstimate>,
    pointwise: Option<ProfileReport>,
    pointwise_estimates: Vec<DimensionEstimate>,
    profile: Option<DimensionProfile>,
    transport: Option<TransportSummary>,
    pullback: Option<PullbackSummary>,
    min_rule: Option<MinRuleSummary>,
    errors: BTreeMap<String, String>,
}

fn stage<T>(errors: &mut BTreeMap<String, String>, name: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.insert(name.into(), e.to_string());
            None
        }
    }
}

pub fn run_exponents(solver: &PreimageSolver, c: &ExperimentConfig) -> Result<LyapunovEstimate> {
    let s = stage_seed(c.seed, STAGE_EXPONENTS);
    let sample = sample_equilibrium(solver, c.sample_depth, c.lyapunov_walkers, s)?;
    lyapunov_exponents(solver, &sample, c.lyapunov_iterations, s)
}

pub fn run_entropy(solver: &PreimageSolver, c: &ExperimentConfig) -> Result<EntropyEstimate> {
    let sample = sample_equilibrium(solver, c.sample_depth, c.entropy_count, stage_seed(c.seed, STAGE_ENTROPY))?;
    let params = EntropyParams {
        n_list: c.entropy_n.clone(),
        r: c.entropy_r,
        basepoints: c.entropy_basepoints,
        splits: c.entropy_splits,
    };
    brin_katok_entropy(solver.map(), &sample, &params)
}

pub fn dimension_sample(solver: &PreimageSolver, c: &ExperimentConfig) -> Result<MeasureSample> {
    sample_equilibrium(solver, c.sample_depth, c.pointwise_count, stage_seed(c.seed, STAGE_DIMENSION))
}

pub fn profile_params(c: &ExperimentConfig) -> ProfileParams {
    ProfileParams {
        basepoints: c.directional_basepoints,
        frame_depth: c.frame_depth,
        grid_m: c.grid_m,
        green_depth: c.green_depth,
        radii: c.radii,
        seed: stage_seed(c.seed, STAGE_ORBITS),
    }
}

fn measure(family: &MapFamily, c: &ExperimentConfig) -> Result<Measurements> {
    let solver = PreimageSolver::new(&family.map)?;
    let mut m = Measurements::default();
    if c.lyapunov_walkers > 0 {
        m.exponents = stage(&mut m.errors, "exponents", run_exponents(&solver, c));
    }
    if c.entropy_count > 0 {
        m.entropy = stage(&mut m.errors, "entropy", run_entropy(&solver, c));
    }
    if c.pointwise_count == 0 {
        return Ok(m);
    }
    let Some(sample) = stage(&mut m.errors, "sample", dimension_sample(&solver, c)) else {
        return Ok(m);
    };
    if c.pointwise_basepoints > 0 {
        let r = pointwise_profile(&sample, c.pointwise_basepoints, c.pointwise_k_min, c.pointwise_frac_max, c.radii)
            .and_then(|(est, failed)| {
                if !failed.is_empty() {
                    m.errors.insert("pointwise_basepoints".into(), format!("{} basepoints failed: {:?}", failed.len(), failed));
                }
                let r = profile_report(DimensionKind::Pointwise, &est);
                m.pointwise_estimates = est;
                r
            });
        m.pointwise = stage(&mut m.errors, "pointwise", r);
    }
    if c.directional_basepoints == 0 {
        return Ok(m);
    }
    let Some(profile) = stage(&mut m.errors, "directional", dimension_profile(&solver, &sample, &profile_params(c))) else {
        return Ok(m);
    };
    if !profile.failures.is_empty() {
        m.errors.insert("directional_basepoints".into(), format!("{:?}", profile.failures));
    }
    if !profile.sites.is_empty() {
        let gaps: Vec<(f64, f64)> = profile.sites.iter().map(|s| s.site.min_rule_gap()).collect();
        m.min_rule = Some(MinRuleSummary {
            basepoints: gaps.len(),
            mean_gap: gaps.iter().map(|g| g.0).sum::<f64>() / gaps.len() as f64,
            mean_stderr: gaps.iter().map(|g| g.1).sum::<f64>() / gaps.len() as f64,
            within_two_sigma: gaps.iter().filter(|g| g.0 <= 2.0 * g.1).count(),
        });
    }
    if c.transport_basepoints > 0 {
        let ev = GreenEvaluator::new(&family.map, c.green_depth)?;
        let r = profile
            .sites
            .iter()
            .take(c.transport_basepoints)
            .map(|s| transport_check(&family.map, &ev, s, c.grid_m, c.radii))
            .collect::<Result<Vec<_>>>()
            .and_then(|checks| {
                if checks.is_empty() {
                    return Err(Error::InsufficientSample("no transport basepoints".into()));
                }
                let mut best = (0.0, 0.0);
                let mut worst_ratio: f64 = 0.0;
                for ch in &checks {
                    for (a, b) in [(&ch.at_x.z, &ch.at_fx.z), (&ch.at_x.w, &ch.at_fx.w), (&ch.at_x.trace, &ch.at_fx.trace)] {
                        let d = (a.slope - b.slope).abs();
                        if d > best.0 {
                            best = (d, a.stderr.hypot(b.stderr));
                        }
                    }
                    worst_ratio = worst_ratio.max(ch.worst_ratio());
                }
                Ok(TransportSummary { basepoints: checks.len(), max_difference: best.0, stderr_at_max: best.1, worst_ratio })
            });
        m.transport = stage(&mut m.errors, "transport", r);
    }
    if c.pullback_orbits > 0 {
        let r = profile
            .sites
            .iter()
            .zip(&profile.orbits)
            .take(c.pullback_orbits)
            .map(|(s, o)| {
                let rows = pullback_scaling_check(&solver, o, &s.coords, c.pullback_n)?;
                rows.last().copied().ok_or_else(|| Error::InsufficientSample("empty pullback".into()))
            })
            .collect::<Result<Vec<_>>>()
            .and_then(|rows| {
                if rows.len() < 2 {
                    return Err(Error::InsufficientSample("pullback needs two orbits".into()));
                }
                let (a, sa) = mean_stderr(rows.iter().map(|r| r.alpha_rate()));
                let (b, sb) = mean_stderr(rows.iter().map(|r| r.beta_rate()));
                Ok(PullbackSummary {
                    n: c.pullback_n,
                    orbits: rows.len(),
                    alpha_rate: a,
                    alpha_rate_stderr: sa,
                    beta_rate: b,
                    beta_rate_stderr: sb,
                    leakage_z: crate::oseledec_frames::median(rows.iter().map(|r| r.leakage_z).collect()),
                    leakage_w: crate::oseledec_frames::median(rows.iter().map(|r| r.leakage_w).collect()),
                })
            });
        m.pullback = stage(&mut m.errors, "pullback", r);
    }
    m.profile = Some(profile);
    Ok(m)
}

/// Exponents, entropy, corrections and flags shared by the right-hand sides.
#[derive(Clone, Copy, Debug)]
struct Env {
    l1: f64,
    l2: f64,
    h: f64,
    ld: f64,
    o: Corrections,
}

type Bound = fn(&Env) -> f64;

struct Builder<'a> {
    c: &'a ExperimentConfig,
    env: Option<Env>,
    sigma: (f64, f64),
    d: u32,
    eps: f64,
    resonance: Option<u32>,
    strict_order: bool,
    records: Vec<InequalityRecord>,
}

impl Builder<'_> {
    fn env_at(&self, l1: f64, l2: f64) -> Option<Env> {
        let e = self.env?;
        let o = epsilon_corrections(self.eps, l1.max(l2), l2.min(l1), e.h, self.d).ok()?;
        Some(Env { l1, l2, o, ..e })
    }

    /// Right side with its error propagated from the exponent errors.
    fn right(&self, f: Bound) -> Option<Reading> {
        let e = self.env?;
        let v = f(&e);
        let mut var = 0.0;
        for (k, s) in [self.sigma.0, self.sigma.1].into_iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            let dx = 1e-6;
            let (p, q) = if k == 0 {
                (self.env_at(e.l1 + dx, e.l2)?, self.env_at(e.l1 - dx, e.l2)?)
            } else {
                (self.env_at(e.l1, e.l2 + dx)?, self.env_at(e.l1, e.l2 - dx)?)
            };
            let g = (f(&p) - f(&q)) / (2.0 * dx);
            var += (g * s).powi(2);
        }
        Some(Reading::with_stderr(v, var.sqrt()))
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: &str,
        statement: &str,
        relation: Relation,
        left: Option<Reading>,
        right: Bound,
        z_claim: bool,
        needs_order: bool,
        needs_nonresonant: bool,
    ) {
        let r = self.right(right);
        let mut rec = match (left, r) {
            (Some(l), Some(r)) => InequalityRecord::evaluate(name, statement, relation, l, r, self.eps, self.c.fail_sigma, z_claim),
            (None, _) => InequalityRecord::unavailable(name, statement, relation, self.eps, z_claim, "left side unavailable"),
            (_, None) => InequalityRecord::unavailable(name, statement, relation, self.eps, z_claim, "exponents or corrections unavailable"),
        };
        if needs_order && !self.strict_order {
            rec.add_note("λ₁ > λ₂ not established; evaluated as the limiting case λ₁ = λ₂");
        }
        if let Some(k) = self.resonance {
            if z_claim {
                rec.downgrade(&format!("resonance λ₁ = {k}λ₂ detected: Z-coordinate claim"));
            } else if needs_nonresonant {
                rec.downgrade(&format!("resonance λ₁ = {k}λ₂ detected: non-resonance hypothesis not met"));
            }
        }
        self.records.push(rec);
    }
}

fn reading_of(reports: &[ProfileReport], kind: DimensionKind) -> Option<Reading> {
    reports.iter().find(|r| r.kind == kind).map(Reading::of_profile)
}

/// Full pipeline: exponents, entropy, pointwise and directional profiles,
/// transport and pullback checks, then every inequality.
pub fn run_verify(c: &ExperimentConfig) -> Result<VerifyReport> {
    c.validate()?;
    let family = c.family.build()?;
    let d = family.map.degree();
    let ld = (d as f64).ln();
    let h = 2.0 * ld;
    let m = measure(&family, c)?;
    let mut stage_errors = m.errors.clone();

    let (eps, env, resonance, sigma, strict_order) = match &m.exponents {
        Some(e) => {
            let eps = c.epsilon.unwrap_or_else(|| epsilon_policy(e.max_stderr()));
            let res = resonance_detect(e.lambda1, e.lambda2, c.resonance_tol);
            let strict = e.lambda1 - e.lambda2 > 3.0 * e.stderr1.hypot(e.stderr2);
            let env = match epsilon_corrections(eps, e.lambda1, e.lambda2, h, d) {
                Ok(o) => Some(Env { l1: e.lambda1, l2: e.lambda2, h, ld, o }),
                Err(err) => {
                    stage_errors.insert("corrections".into(), err.to_string());
                    None
                }
            };
            (Some(eps), env, res, (e.stderr1, e.stderr2), strict)
        }
        None => (c.epsilon, None, None, (0.0, 0.0), false),
    };
    let mut b = Builder {
        c,
        env,
        sigma,
        d,
        eps: eps.unwrap_or(f64::NAN),
        resonance,
        strict_order,
        records: Vec::new(),
    };
    let directional: Vec<ProfileReport> = m.profile.as_ref().map(|p| p.reports.clone()).unwrap_or_default();
    let dz = reading_of(&directional, DimensionKind::DirectionalZ);
    let dw = reading_of(&directional, DimensionKind::DirectionalW);
    let dt = reading_of(&directional, DimensionKind::Trace);
    let dnu = m.pointwise.as_ref().map(Reading::of_profile);
    let lam2 = m.exponents.as_ref().map(|e| Reading::with_stderr(e.lambda2, e.stderr2));
    use Relation::{AtLeast, AtMost, Compare};

    b.push("tz_lower", "bar d_{T,Z} >= 2 + (h - log d)/l2 - O1", AtLeast, dz, |e| 2.0 + (e.h - e.ld) / e.l2 - e.o.o1, true, true, true);
    b.push("tw_lower", "bar d_{T,W} >= 2 l2/l1 + (h - log d)/l2 - O2", AtLeast, dw, |e| 2.0 * e.l2 / e.l1 + (e.h - e.ld) / e.l2 - e.o.o2, false, true, false);
    b.push("tz_upper", "d_{T,Z} <= log d/l2 + 2 l1/l2 + O3", AtMost, dz, |e| e.ld / e.l2 + 2.0 * e.l1 / e.l2 + e.o.o3, true, true, true);
    b.push("tw_upper", "d_{T,W} <= log d/l2 + 2 + O4", AtMost, dw, |e| e.ld / e.l2 + 2.0 + e.o.o4, false, true, false);
    b.push("separation_w", "d_{T,W} <= log d/l2 + 2 + O4", AtMost, dw, |e| e.ld / e.l2 + 2.0 + e.o.o4, false, true, false);
    b.push("separation_z", "bar d_{T,Z} >= log d/l2 + 2 - O1", AtLeast, dz, |e| e.ld / e.l2 + 2.0 - e.o.o1, true, true, true);
    b.push("sz_lower", "bar d_{S,Z} >= 2 + (h - log d)/l2 - O1 (S = T)", AtLeast, dz, |e| 2.0 + (e.h - e.ld) / e.l2 - e.o.o1, true, true, true);
    b.push("sz_lower_fast", "bar d_{S,Z} >= 2 + (h - log d)/l1 - O5 (S = T)", AtLeast, dz, |e| 2.0 + (e.h - e.ld) / e.l1 - e.o.o5, true, true, true);
    b.push("sw_lower_fast", "bar d_{S,W} >= 2 l2/l1 + (h - log d)/l1 - O6 (S = T)", AtLeast, dw, |e| 2.0 * e.l2 / e.l1 + (e.h - e.ld) / e.l1 - e.o.o6, false, true, false);
    b.push("sz_above_two", "bar d_{S,Z} > 2 (S = T)", AtLeast, dz, |_| 2.0, true, true, true);
    b.push("trace_lower", "bar d_S >= 2 l2/l1 + (h - log d)/l2 (S = T)", AtLeast, dt, |e| 2.0 * e.l2 / e.l1 + (e.h - e.ld) / e.l2, false, false, false);
    b.push("dim_upper_polynomial", "dim mu <= 4 - (2(l1 + l2) - log d^2)/l1", AtMost, dnu, |e| 4.0 - (2.0 * (e.l1 + e.l2) - 2.0 * e.ld) / e.l1, false, false, false);
    b.push("dim_lower", "d_nu >= log d/l1 + (h - log d)/l2", AtLeast, dnu, |e| e.ld / e.l1 + (e.h - e.ld) / e.l2, false, false, false);
    b.push("conjecture_dim", "dim mu = log d/l1 + log d/l2 (signed discrepancy)", Compare, dnu, |e| e.ld / e.l1 + e.ld / e.l2, false, false, false);
    b.push("dim_upper", "d_nu <= log d/l1 + log d/l2 + 2(1 - l2/l1)", AtMost, dnu, |e| e.ld / e.l1 + e.ld / e.l2 + 2.0 * (1.0 - e.l2 / e.l1), false, true, false);
    b.push("dim_upper_nonresonant", "d_nu <= log d/l1 + log d/l2 + 2 min(1 - l2/l1, l1/l2 - 1)", AtMost, dnu, |e| e.ld / e.l1 + e.ld / e.l2 + 2.0 * (1.0 - e.l2 / e.l1).min(e.l1 / e.l2 - 1.0), false, true, true);
    b.push("pointwise_classical_lower", "d_nu >= h/l1", AtLeast, dnu, |e| e.h / e.l1, false, false, false);
    b.push("pointwise_classical_upper", "d_nu <= h/l2", AtMost, dnu, |e| e.h / e.l2, false, false, false);
    b.push("lambda2_lower", "l2 >= 1/2 log d", AtLeast, lam2, |e| 0.5 * e.ld, false, false, false);
    b.push("directional_z_universal", "d_{T,Z} >= 2", AtLeast, dz, |_| 2.0, true, false, false);
    b.push("directional_w_universal", "d_{T,W} >= 2", AtLeast, dw, |_| 2.0, false, false, false);
    b.push("trace_universal", "d_T >= 2", AtLeast, dt, |_| 2.0, false, false, false);
    if family.reference.semi_extremal {
        let win = dnu.map(|r| r.deviation).unwrap_or(0.0);
        b.push("semi_extremal_dim", "dim mu = 2 + log d/l1", Relation::Near { window: win }, dnu, |e| 2.0 + e.ld / e.l1, false, true, false);
        b.push("semi_extremal_tz", "bar d_{T,Z} >= 4 - O1", AtLeast, dz, |e| 4.0 - e.o.o1, true, true, true);
        b.push("semi_extremal_tw_lower", "bar d_{T,W} >= 2 + log d/l1 - O2", AtLeast, dw, |e| 2.0 + e.ld / e.l1 - e.o.o2, false, true, false);
        b.push("semi_extremal_tw_upper", "bar d_{T,W} <= 2 + log d/l1", AtMost, dw, |e| 2.0 + e.ld / e.l1, false, true, false);
        let w = b.eps;
        b.push("semi_extremal_lambda2", "l2 = 1/2 log d", Relation::Near { window: w }, lam2, |e| 0.5 * e.ld, false, false, false);
    }
    if let Some(p) = &m.pullback {
        let w = b.eps;
        b.push("pullback_w_rate", "(1/n) log|beta_n| = -l2", Relation::Near { window: w }, Some(Reading::with_stderr(p.beta_rate, p.beta_rate_stderr)), |e| -e.l2, false, false, false);
        b.push("pullback_z_rate", "(1/n) log|alpha_n| = -l1", Relation::Near { window: w }, Some(Reading::with_stderr(p.alpha_rate, p.alpha_rate_stderr)), |e| -e.l1, true, false, false);
    }
    let fs = c.fail_sigma;
    let eps_v = b.eps;
    if let Some(mr) = &m.min_rule {
        let mut rec = InequalityRecord::evaluate(
            "min_rule",
            "d_S = min(d_{S,Z}, d_{S,W}) within 2 combined stderr",
            Relation::Near { window: 2.0 * mr.mean_stderr },
            Reading::with_stderr(mr.mean_gap, mr.mean_stderr),
            Reading::exact(0.0),
            eps_v,
            fs,
            false,
        );
        rec.add_note(&format!("{}/{} basepoints within 2 sigma", mr.within_two_sigma, mr.basepoints));
        b.records.push(rec);
    }
    if let Some(t) = &m.transport {
        b.records.push(InequalityRecord::evaluate(
            "invariance_transport",
            "|d(x) - d(f x)| <= 3 combined stderr",
            AtMost,
            Reading::with_stderr(t.max_difference, t.stderr_at_max),
            Reading::exact(3.0 * t.stderr_at_max),
            eps_v,
            fs,
            false,
        ));
    }
    for r in &directional {
        let mut rec = InequalityRecord::evaluate(
            &format!("constancy_{}", r.kind.as_str()),
            "profile spread <= 3 mean stderr",
            AtMost,
            Reading::with_stderr(r.spread, r.mean_stderr),
            Reading::exact(3.0 * r.mean_stderr),
            eps_v,
            fs,
            r.kind == DimensionKind::DirectionalZ,
        );
        if r.kind == DimensionKind::DirectionalZ {
            if let Some(k) = resonance {
                rec.downgrade(&format!("resonance λ₁ = {k}λ₂ detected: Z-coordinate claim"));
            }
        }
        b.records.push(rec);
    }
    if let Some(e) = &m.entropy {
        let cs = e.combined_stderr();
        let mut r1 = InequalityRecord::evaluate("entropy_brin_katok", "h_BK - log d^2", Relation::Compare, Reading::with_stderr(e.brin_katok, e.brin_katok_stderr), Reading::exact(h), eps_v, fs, false);
        let mut r2 = InequalityRecord::evaluate("entropy_separated", "h_sep - log d^2", Relation::Compare, Reading::with_stderr(e.separated, e.separated_stderr), Reading::exact(h), eps_v, fs, false);
        let mut r3 = InequalityRecord::evaluate("entropy_agreement", "h_BK - h_sep", Relation::Compare, Reading::with_stderr(e.brin_katok - e.separated, cs), Reading::exact(0.0), eps_v, fs, false);
        for r in [&mut r1, &mut r2, &mut r3] {
            r.add_note(&format!("diagnostic at scale r = {}; the inequalities use h = log d^2", c.entropy_r));
        }
        b.records.extend([r1, r2, r3]);
    }
    let mut assumptions = vec![
        "nu = mu: supp nu ⊂ supp mu holds trivially".to_string(),
        "h_mu = log d^2 substituted for h".to_string(),
        "S = T for statements about general closed positive currents".to_string(),
    ];
    if family.reference.semi_extremal {
        assumptions.push("family declared semi-extremal".into());
    }
    let records = b.records;
    Ok(VerifyReport {
        family: family.name.clone(),
        degree: d,
        seed: c.seed,
        config: c.clone(),
        exponents: m.exponents,
        entropy: m.entropy,
        entropy_used: h,
        pointwise: m.pointwise,
        directional,
        estimates: {
            let mut e = m.pointwise_estimates;
            e.extend(m.profile.map(|p| p.estimates).unwrap_or_default());
            e
        },
        transport: m.transport,
        pullback: m.pullback,
        min_rule: m.min_rule,
        resonance,
        epsilon: eps,
        corrections: env.map(|e| e.o),
        assumptions: {
            assumptions.sort();
            assumptions
        },
        stage_errors,
        records,
    })
}

/// Files written by a subcommand and its exit code.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub exit_code: i32,
    pub summary: String,
}

fn write(out: &std::path::Path, name: &str, text: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let p = out.join(name);
    std::fs::write(&p, text)?;
    files.push(p);
    Ok(())
}

/// Runs one of [`SUBCOMMANDS`] and writes its artifacts under `config.out`.
pub fn run_subcommand(name: &str, c: &ExperimentConfig) -> Result<Outcome> {
    if !SUBCOMMANDS.contains(&name) {
        return Err(Error::Usage(format!("unknown subcommand `{name}`; expected one of {}", SUBCOMMANDS.join(", "))));
    }
    c.validate()?;
    let mut files = Vec::new();
    let out = &c.out;
    let summary = match name {
        "exponents" => {
            let family = c.family.build()?;
            let solver = PreimageSolver::new(&family.map)?;
            let e = run_exponents(&solver, c)?;
            let csv = format!(
                "lambda1,lambda2,stderr1,stderr2,walkers,iterations\n{},{},{},{},{},{}\n",
                e.lambda1, e.lambda2, e.stderr1, e.stderr2, e.walkers, e.iterations
            );
            write(out, "exponents.csv", &csv, &mut files)?;
            write(out, "exponents.json", &(serde_json::to_string_pretty(&e).expect("serialise") + "\n"), &mut files)?;
            format!("lambda1 = {:.6} ± {:.6}\nlambda2 = {:.6} ± {:.6}\n", e.lambda1, e.stderr1, e.lambda2, e.stderr2)
        }
        "entropy" => {
            let family = c.family.build()?;
            let solver = PreimageSolver::new(&family.map)?;
            let e = run_entropy(&solver, c)?;
            let mut csv = Vec::new();
            e.write_csv(&mut csv)?;
            write(out, "entropy.csv", &String::from_utf8(csv).expect("utf8"), &mut files)?;
            write(out, "entropy.json", &(serde_json::to_string_pretty(&e).expect("serialise") + "\n"), &mut files)?;
            format!(
                "brin-katok = {:.5} ± {:.5}\nseparated = {:.5} ± {:.5}\n",
                e.brin_katok, e.brin_katok_stderr, e.separated, e.separated_stderr
            )
        }
        "slice" => {
            let family = c.family.build()?;
            let sm = run_slice(&family, c)?;
            let mut csv = Vec::new();
            sm.write_csv(&mut csv)?;
            write(out, "slice.csv", &String::from_utf8(csv).expect("utf8"), &mut files)?;
            let s = sm.summary();
            write(out, "slice.json", &(serde_json::to_string_pretty(&s).expect("serialise") + "\n"), &mut files)?;
            format!("{} slice: m = {}, total mass {:e}\n", s.direction.as_str(), s.m, s.total_mass)
        }
        "dimension" => {
            let estimates = run_dimension(c)?;
            let mut csv = Vec::new();
            write_estimates_csv(&estimates, &mut csv)?;
            write(out, "dimension.csv", &String::from_utf8(csv).expect("utf8"), &mut files)?;
            let reports: Vec<ProfileReport> = [DimensionKind::Pointwise, DimensionKind::DirectionalZ, DimensionKind::DirectionalW, DimensionKind::Trace]
                .iter()
                .filter_map(|k| profile_report(*k, &estimates).ok())
                .collect();
            write(out, "dimension.json", &(serde_json::to_string_pretty(&reports).expect("serialise") + "\n"), &mut files)?;
            reports.iter().map(|r| format!("{}: mean {:.4}, spread {:.4}, n = {}\n", r.kind.as_str(), r.mean, r.spread, r.count)).collect()
        }
        _ => {
            let r = run_verify(c)?;
            write(out, "report.json", &r.to_json(), &mut files)?;
            write(out, "report.csv", &r.to_csv(), &mut files)?;
            let table = r.to_table();
            write(out, "report.txt", &table, &mut files)?;
            return Ok(Outcome { files, exit_code: r.exit_code(), summary: table });
        }
    };
    Ok(Outcome { files, exit_code: 0, summary })
}

/// Slice of the Green current at directional basepoint `slice_basepoint`.
pub fn run_slice(family: &MapFamily, c: &ExperimentConfig) -> Result<SliceMeasure> {
    let direction = SliceDirection::parse(&c.slice_direction)?;
    let solver = PreimageSolver::new(&family.map)?;
    let i = c.slice_basepoint;
    let sample = sample_equilibrium(&solver, c.sample_depth, i + 1, stage_seed(c.seed, STAGE_DIMENSION))?;
    let orbit = seeded_backward_orbit(&solver, &sample.points[i], c.frame_depth, stage_seed(c.seed, STAGE_ORBITS), i)?;
    let frame = compute_frame(&family.map, &orbit)?;
    let coords = NormalFormCoordinates::from_frame(&family.map, frame)?;
    let grid = LocalGrid::on(coords, c.grid_m)?;
    let ev = GreenEvaluator::new(&family.map, c.green_depth)?;
    let pot = local_potential(&ev, &coords, &grid)?;
    match direction {
        SliceDirection::Trace => {
            let z = slice_measure(&pot, SliceDirection::Z)?;
            let w = slice_measure(&pot, SliceDirection::W)?;
            trace_measure(&z, &w)
        }
        d => slice_measure(&pot, d),
    }
}

/// Directional estimate of a saved slice when `slice_input` is set,
/// otherwise the pointwise and directional profiles.
pub fn run_dimension(c: &ExperimentConfig) -> Result<Vec<DimensionEstimate>> {
    if let Some(path) = &c.slice_input {
        let f = std::fs::File::open(path)?;
        let sm = SliceMeasure::read_csv(std::io::BufReader::new(f))?;
        let grid = LocalGrid { coords: None, m: sm.m, rho: sm.rho };
        let schedule = grid_schedule(&grid, c.radii)?;
        return Ok(vec![directional_dimension(&sm, [0.0; 4], &schedule)?]);
    }
    let family = c.family.build()?;
    let solver = PreimageSolver::new(&family.map)?;
    let sample = dimension_sample(&solver, c)?;
    let mut out = Vec::new();
    if c.pointwise_basepoints > 0 {
        out.extend(pointwise_profile(&sample, c.pointwise_basepoints, c.pointwise_k_min, c.pointwise_frac_max, c.radii)?.0);
    }
    if c.directional_basepoints > 0 {
        out.extend(dimension_profile(&solver, &sample, &profile_params(c))?.estimates);
    }
    Ok(out)
}
