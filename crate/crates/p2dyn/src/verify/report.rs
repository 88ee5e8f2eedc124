//! Inequality records, status rules and report serialisation.

use std::fmt::Write as _;

use serde::Serialize;

use crate::dimension_estimators::ProfileReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Downgraded claim: resonant exponents for a Z-coordinate statement,
    /// or a hypothesis that the measured exponents do not meet.
    Warning,
    /// Within error bars of the bound, or an upstream stage failed.
    Inconclusive,
    /// Comparison only, never judged.
    Reported,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Warning => "warning",
            Self::Inconclusive => "inconclusive",
            Self::Reported => "reported",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `left ≥ right`, read with `slope + deviation`.
    AtLeast,
    /// `left ≤ right`, read with `slope − deviation`.
    AtMost,
    /// `|left − right| ≤ window`.
    Near { window: f64 },
    /// Signed discrepancy `left − right`.
    Compare,
}

/// A measured quantity: value, standard error and the secant deviation used
/// to bracket liminf and limsup.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Reading {
    pub value: f64,
    pub stderr: f64,
    pub deviation: f64,
}

impl Reading {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0, deviation: 0.0 }
    }

    pub fn with_stderr(value: f64, stderr: f64) -> Self {
        Self { value, stderr, deviation: 0.0 }
    }

    /// Profile mean, with the error of the mean folded into the mean
    /// regression error.
    pub fn of_profile(p: &ProfileReport) -> Self {
        let sem = if p.count > 1 { p.spread / (p.count as f64).sqrt() } else { 0.0 };
        Self { value: p.mean, stderr: p.mean_stderr.hypot(sem), deviation: p.mean_deviation }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityRecord {
    pub name: String,
    pub statement: String,
    pub relation: Relation,
    /// Left side as compared (bracketed reading).
    pub left: Option<f64>,
    pub right: Option<f64>,
    pub epsilon: f64,
    pub margin: Option<f64>,
    /// Combined standard error of both sides.
    pub stderr: Option<f64>,
    pub status: Status,
    pub z_claim: bool,
    pub note: String,
}

impl InequalityRecord {
    /// Compares `left` with `right ± right_stderr`. Fails only when the
    /// margin is below `−fail_sigma` combined standard errors.
    #[allow(clippy::too_many_arguments)]
    pub fn evaluate(
        name: &str,
        statement: &str,
        relation: Relation,
        left: Reading,
        right: Reading,
        epsilon: f64,
        fail_sigma: f64,
        z_claim: bool,
    ) -> Self {
        let sigma = left.stderr.hypot(right.stderr);
        let (l, margin) = match relation {
            Relation::AtLeast => {
                let l = left.value + left.deviation;
                (l, l - right.value)
            }
            Relation::AtMost => {
                let l = left.value - left.deviation;
                (l, right.value - l)
            }
            Relation::Near { window } => (left.value, window - (left.value - right.value).abs()),
            Relation::Compare => (left.value, left.value - right.value),
        };
        let status = if matches!(relation, Relation::Compare) {
            Status::Reported
        } else if !margin.is_finite() || !sigma.is_finite() {
            Status::Inconclusive
        } else if margin >= 0.0 {
            Status::Pass
        } else if margin >= -fail_sigma * sigma {
            Status::Inconclusive
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            statement: statement.into(),
            relation,
            left: Some(l),
            right: Some(right.value),
            epsilon,
            margin: Some(margin),
            stderr: Some(sigma),
            status,
            z_claim,
            note: String::new(),
        }
    }

    /// Record for a statement whose inputs are unavailable.
    pub fn unavailable(name: &str, statement: &str, relation: Relation, epsilon: f64, z_claim: bool, why: &str) -> Self {
        Self {
            name: name.into(),
            statement: statement.into(),
            relation,
            left: None,
            right: None,
            epsilon,
            margin: None,
            stderr: None,
            status: if matches!(relation, Relation::Compare) { Status::Reported } else { Status::Inconclusive },
            z_claim,
            note: why.into(),
        }
    }

    /// Caps the status at warning, keeping fail/pass information in the note.
    pub fn downgrade(&mut self, why: &str) {
        if matches!(self.status, Status::Pass | Status::Fail) {
            let was = self.status.as_str();
            self.status = Status::Warning;
            self.add_note(&format!("{why}; measured outcome {was}"));
        } else {
            self.add_note(why);
        }
    }

    pub fn add_note(&mut self, s: &str) {
        if !self.note.is_empty() {
            self.note.push_str("; ");
        }
        self.note.push_str(s);
    }
}

/// Exit code of a verify run: 1 on any fail, 3 when nothing passed but
/// something was inconclusive, 0 otherwise.
pub fn exit_code(records: &[InequalityRecord]) -> i32 {
    if records.iter().any(|r| r.status == Status::Fail) {
        1
    } else if !records.iter().any(|r| r.status == Status::Pass) && records.iter().any(|r| r.status == Status::Inconclusive)
    {
        3
    } else {
        0
    }
}

pub const CSV_VERSION: &str = "# p2dyn inequality report v1";

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v}")).unwrap_or_default()
}

pub fn records_csv(records: &[InequalityRecord]) -> String {
    let mut s = String::new();
    s.push_str(CSV_VERSION);
    s.push('\n');
    s.push_str("name,status,left,right,epsilon,margin,stderr,z_claim\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.name,
            r.status.as_str(),
            opt(r.left),
            opt(r.right),
            r.epsilon,
            opt(r.margin),
            opt(r.stderr),
            r.z_claim
        );
    }
    s
}

pub fn records_table(records: &[InequalityRecord]) -> String {
    let f = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    let mut s = String::new();
    let _ = writeln!(s, "{:<28} {:<12} {:>10} {:>10} {:>10} {:>9}", "inequality", "status", "left", "right", "margin", "stderr");
    for r in records {
        let _ = writeln!(
            s,
            "{:<28} {:<12} {:>10} {:>10} {:>10} {:>9}",
            r.name,
            r.status.as_str(),
            f(r.left),
            f(r.right),
            f(r.margin),
            f(r.stderr)
        );
    }
    s
}
