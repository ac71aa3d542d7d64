//! Analysis reports and their JSON form.
//!
//! ```json
//! {"verdict": "reachable", "target": "s4",
//!  "witness": ["s1 -> s2 : push(a)", "..."],
//!  "stats": {"regions": 0, "rules": 5, "ms": 0},
//!  "oracle": {"states": ["s1", "s2"]}}
//! ```
//!
//! `verdict` and `target` are left out by `simulate`, `witness` unless asked
//! for, and `oracle` unless a concrete exploration ran.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Reachable,
    Unreachable,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Reachable => "reachable",
            VerdictKind::Unreachable => "unreachable",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    /// Distinct regions used as stack symbols.
    pub regions: usize,
    pub rules: usize,
    pub ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mid_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<usize>,
}

/// A concrete configuration with exact fractions such as `3/2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigText {
    pub clocks: BTreeMap<String, String>,
    /// Topmost entry first, as `symbol@age`.
    pub stack: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub states: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explored: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub samples: BTreeMap<String, ConfigText>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
    pub stats: Stats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(v), Some(t)) = (&self.verdict, &self.target) {
            writeln!(f, "{t}: {v}")?;
        }
        if let Some(w) = &self.witness {
            writeln!(f, "witness ({} steps):", w.len())?;
            for (i, step) in w.iter().enumerate() {
                writeln!(f, "  {:>3}. {step}", i + 1)?;
            }
        }
        if let Some(o) = &self.oracle {
            writeln!(f, "states: {}", o.states.join(" "))?;
            if let Some(n) = o.explored {
                let cut = if o.truncated == Some(true) {
                    " (budget reached)"
                } else {
                    ""
                };
                writeln!(f, "configurations: {n}{cut}")?;
            }
            for (s, c) in &o.samples {
                let clocks: Vec<String> = c.clocks.iter().map(|(k, v)| format!("{k}={v}")).collect();
                writeln!(f, "  {s}: [{}] stack [{}]", clocks.join(", "), c.stack.join(", "))?;
            }
        }
        let s = &self.stats;
        write!(f, "regions {}, rules {}", s.regions, s.rules)?;
        if let Some(n) = s.mid_states {
            write!(f, ", mid states {n}")?;
        }
        if let Some(n) = s.control_states {
            write!(f, ", control states {n}")?;
        }
        if let Some(n) = s.transitions {
            write!(f, ", transitions {n}")?;
        }
        writeln!(f, ", {} ms", s.ms)
    }
}
