//! Pass/fail records and output files.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use heatdeform::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIPPED",
        })
    }
}

/// One invariant check. `value` is compared as `value < threshold`.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<[f64; 2]>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn below(name: &str, t: Option<C64>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            t: t.map(|t| [t.re, t.im]),
            status: if value < threshold { Status::Pass } else { Status::Fail },
            value: Some(value),
            threshold: Some(threshold),
            detail: None,
        }
    }

    pub fn flag(name: &str, t: Option<C64>, ok: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            t: t.map(|t| [t.re, t.im]),
            status: if ok { Status::Pass } else { Status::Fail },
            value: None,
            threshold: None,
            detail: Some(detail),
        }
    }

    pub fn skipped(name: &str, t: Option<C64>, reason: &str) -> Self {
        Check {
            name: name.into(),
            t: t.map(|t| [t.re, t.im]),
            status: Status::Skipped,
            value: None,
            threshold: None,
            detail: Some(reason.into()),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<7} {}", self.status.to_string(), self.name)?;
        if let Some([re, im]) = self.t {
            write!(f, " t={}", C64::new(re, im))?;
        }
        if let (Some(v), Some(th)) = (self.value, self.threshold) {
            write!(f, " {v:.3e} < {th:.0e}")?;
        }
        if let Some(d) = &self.detail {
            write!(f, " ({d})")?;
        }
        Ok(())
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.status != Status::Fail)
}

pub fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
}
