use std::fmt;

use serde::{Deserialize, Serialize};

/// Structural checks hold for every feasible schedule; analytic checks are the
/// growth inequalities that only large moduli satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Structural,
    Analytic,
}

/// One verified comparison, recorded with both sides so reports show the
/// computed quantity next to the bound it is checked against.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub stage: String,
    pub kind: CheckKind,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

impl Check {
    pub fn structural(
        name: impl Into<String>,
        stage: impl Into<String>,
        lhs: impl fmt::Display,
        rhs: impl fmt::Display,
        pass: bool,
    ) -> Self {
        Check {
            name: name.into(),
            stage: stage.into(),
            kind: CheckKind::Structural,
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            pass,
        }
    }

    pub fn analytic(
        name: impl Into<String>,
        stage: impl Into<String>,
        lhs: impl fmt::Display,
        rhs: impl fmt::Display,
        pass: bool,
    ) -> Self {
        Check {
            kind: CheckKind::Analytic,
            ..Check::structural(name, stage, lhs, rhs, pass)
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<22} {:<12} {} vs {}",
            if self.pass { "pass" } else { "FAIL" },
            self.name,
            self.stage,
            self.lhs,
            self.rhs
        )
    }
}

pub fn stage_label(n: usize, m: usize) -> String {
    format!("({n},{m})")
}

pub fn all_pass(checks: &[Check], kind: CheckKind) -> bool {
    checks.iter().filter(|c| c.kind == kind).all(|c| c.pass)
}

pub fn failures(checks: &[Check]) -> impl Iterator<Item = &Check> {
    checks.iter().filter(|c| !c.pass)
}

/// Shortest round-trip rendering, stable across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}
