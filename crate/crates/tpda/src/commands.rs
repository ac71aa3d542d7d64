//! The work behind each subcommand, independent of argument parsing.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use num_rational::Ratio;
use thiserror::Error;
use tpda_core::pda::{bounded_bfs, Saturation, StackOp};
use tpda_core::tpda::{grid_oracle_with, OracleOptions, TpdaConfig};
use tpda_core::translation::{Analysis, CheckError, SymbolicRule, SymbolicState, Via};
use tpda_core::{PdaError, Region, StateId, Tpda};

use crate::dsl::{parse_model, pda_rule_text, Model, NamedPda, ParseError};
use crate::region_text::{parse_region, RegionTextError};
use crate::report::{ConfigText, OracleSummary, Report, Stats, VerdictKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    Region(#[from] RegionTextError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 2 for bad input, 3 for a violated internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 3,
            _ => 2,
        }
    }
}

impl From<CheckError> for CliError {
    fn from(e: CheckError) -> Self {
        match e {
            CheckError::Model(_) | CheckError::UnknownTarget(_) => CliError::Model(e.to_string()),
            CheckError::Pda(e) => CliError::Internal(e.to_string()),
        }
    }
}

pub fn load(path: &Path) -> Result<Model, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_model(&text)?)
}

fn tpda_state(t: &Tpda, name: &str) -> Result<StateId, CliError> {
    t.state_by_name(name)
        .ok_or_else(|| CliError::Model(format!("unknown state `{name}`")))
}

fn pda_state(p: &NamedPda, name: &str) -> Result<String, CliError> {
    p.states()
        .get(name)
        .cloned()
        .ok_or_else(|| CliError::Model(format!("unknown state `{name}`")))
}

fn verdict(reachable: bool) -> VerdictKind {
    if reachable {
        VerdictKind::Reachable
    } else {
        VerdictKind::Unreachable
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn pda_error(e: PdaError) -> CliError {
    match e {
        PdaError::Generator(m) => CliError::Internal(m),
        other => CliError::Model(other.to_string()),
    }
}

/// Decides reachability of `target`; the witness is kept when asked for.
pub fn check(model: &Model, target: &str, witness: bool) -> Result<Report, CliError> {
    analyse(model, target, witness, false)
}

/// Like [`check`] with every generation counter filled in.
pub fn translate_stats(model: &Model, target: &str) -> Result<Report, CliError> {
    analyse(model, target, false, true)
}

fn analyse(model: &Model, target: &str, witness: bool, detailed: bool) -> Result<Report, CliError> {
    let start = Instant::now();
    let (reachable, steps, stats) = match model {
        Model::Tpda(t) => {
            let s = tpda_state(t, target)?;
            let analysis = Analysis::run(t)?;
            let v = analysis.verdict(s)?;
            let steps = v.witness().map(|w| render_symbolic(t, &w.steps));
            let st = analysis.stats();
            let stats = Stats {
                regions: st.regions,
                rules: st.rules,
                ms: 0,
                mid_states: detailed.then_some(st.mid_states),
                control_states: detailed.then_some(st.control_states),
                transitions: detailed.then_some(st.transitions),
            };
            (v.is_reachable(), steps, stats)
        }
        Model::Pda(p) => {
            let s = pda_state(p, target)?;
            let sat = Saturation::run(p).map_err(pda_error)?;
            let w = sat.witness(&s);
            let steps = w.map(|w| w.steps.iter().map(pda_rule_text).collect());
            let st = sat.stats();
            let stats = Stats {
                regions: 0,
                rules: st.rules,
                ms: 0,
                mid_states: detailed.then_some(0),
                control_states: detailed.then_some(st.control_states),
                transitions: detailed.then_some(st.transitions),
            };
            (sat.is_reachable(&s), steps, stats)
        }
    };
    Ok(Report {
        verdict: Some(verdict(reachable)),
        target: Some(target.to_string()),
        witness: if witness { steps } else { None },
        stats: Stats {
            ms: elapsed_ms(start),
            ..stats
        },
        oracle: None,
    })
}

fn state_label(t: &Tpda, s: &SymbolicState) -> String {
    match s {
        SymbolicState::Plain(p) => t.state_name(*p).to_string(),
        SymbolicState::Replace {
            target,
            via: Via::Time,
            ..
        } => format!("{}~time", t.state_name(*target)),
        SymbolicState::Replace {
            target,
            via: Via::Rule(i),
            ..
        } => format!("{}~rule{i}", t.state_name(*target)),
        SymbolicState::Popping { rule, .. } => format!("pop~rule{rule}"),
    }
}

/// One line per symbolic step with the top region after it.
fn render_symbolic(t: &Tpda, steps: &[SymbolicRule]) -> Vec<String> {
    let mut stack: Vec<&Region> = Vec::new();
    steps
        .iter()
        .map(|r| {
            let op = match &r.op {
                StackOp::Push(g) => {
                    stack.push(g);
                    "push"
                }
                StackOp::Pop(_) => {
                    stack.pop();
                    "pop"
                }
                StackOp::Nop => "nop",
            };
            let top = stack
                .last()
                .map_or_else(|| "empty".to_string(), |g| g.display(t).to_string());
            format!(
                "{} --{op}--> {} | top {top}",
                state_label(t, &r.src),
                state_label(t, &r.dst)
            )
        })
        .collect()
}

fn fraction(q: &Ratio<u64>) -> String {
    q.to_string()
}

fn config_text(t: &Tpda, c: &TpdaConfig) -> ConfigText {
    ConfigText {
        clocks: t
            .clocks
            .iter()
            .cloned()
            .zip(c.clocks.iter().map(fraction))
            .collect(),
        stack: c
            .stack
            .iter()
            .map(|(a, age)| format!("{}@{}", t.symbols[a.0 as usize], fraction(age)))
            .collect(),
    }
}

/// States met by bounded concrete exploration.
pub fn simulate(
    model: &Model,
    max_steps: usize,
    denominator: u64,
    max_configs: Option<usize>,
) -> Result<Report, CliError> {
    if denominator == 0 {
        return Err(CliError::Model("the denominator must be at least 1".into()));
    }
    let start = Instant::now();
    let oracle = match model {
        Model::Tpda(t) => {
            t.validate()
                .map_err(|e| CliError::Model(format!("invalid model: {e:?}")))?;
            let r = grid_oracle_with(
                t,
                &OracleOptions {
                    max_steps,
                    denominator,
                    max_configs,
                },
            );
            OracleSummary {
                states: r.states.iter().map(|s| t.state_name(*s).to_string()).collect(),
                explored: Some(r.explored),
                truncated: Some(r.truncated),
                samples: r
                    .samples
                    .iter()
                    .map(|(s, c)| (t.state_name(*s).to_string(), config_text(t, c)))
                    .collect(),
            }
        }
        Model::Pda(p) => {
            let configs = bounded_bfs(p, max_steps).map_err(pda_error)?;
            let states: BTreeSet<String> = configs.iter().map(|c| c.state.clone()).collect();
            OracleSummary {
                states: states.into_iter().collect(),
                explored: Some(configs.len()),
                ..OracleSummary::default()
            }
        }
    };
    Ok(Report {
        stats: Stats {
            ms: elapsed_ms(start),
            ..Stats::default()
        },
        oracle: Some(oracle),
        ..Report::default()
    })
}

/// `k` rotations of a region given in text form, one line each.
pub fn regions(
    items: &str,
    rotate: usize,
    pin_ref: bool,
    cmax: Option<u32>,
    symbols: &[String],
) -> Result<Vec<String>, CliError> {
    let symbols: BTreeSet<String> = symbols.iter().cloned().collect();
    let (mut r, names) = parse_region(items, &symbols, cmax)?;
    let mut out = vec![format!("0: {}", r.display(&names))];
    for k in 1..=rotate {
        r = r.rotate(!pin_ref).map_err(|e| CliError::Model(e.to_string()))?;
        out.push(format!("{k}: {}", r.display(&names)));
    }
    Ok(out)
}
