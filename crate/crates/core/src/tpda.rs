//! Timed pushdown automata and their concrete semantics.
//!
//! Clocks and stack ages are exact rationals. Nondeterministic choices over
//! dense intervals are only ever explored on a rational grid `k / den`, which
//! makes [`grid_oracle`] a sound under-approximation of reachability.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::HashSet;
use num_rational::Ratio;
use thiserror::Error;

use crate::interval::Interval;
use crate::region::Names;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Nop,
    Test(ClockId, Interval),
    Reset(ClockId, Interval),
    Push(SymbolId, Interval),
    Pop(SymbolId, Interval),
}

impl Op {
    pub fn interval(&self) -> Option<&Interval> {
        match self {
            Op::Nop => None,
            Op::Test(_, iv) | Op::Reset(_, iv) | Op::Push(_, iv) | Op::Pop(_, iv) => Some(iv),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TpdaRule {
    pub src: StateId,
    pub op: Op,
    pub dst: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("initial state {0:?} is not declared")]
    BadInit(StateId),
    #[error("rule {rule} uses undeclared state {state:?}")]
    UndeclaredState { rule: usize, state: StateId },
    #[error("rule {rule} uses undeclared clock {clock:?}")]
    UndeclaredClock { rule: usize, clock: ClockId },
    #[error("rule {rule} uses undeclared stack symbol {symbol:?}")]
    UndeclaredSymbol { rule: usize, symbol: SymbolId },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TpdaError {
    #[error("time delays must be positive")]
    NonPositiveDelay,
    #[error("grid denominator must be at least 1")]
    ZeroDenominator,
    #[error("state {0:?} is not declared")]
    UnknownState(StateId),
}

/// A timed pushdown automaton. Names are kept for rendering only; everything
/// else refers to states, clocks and symbols by index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tpda {
    pub states: Vec<String>,
    pub init: StateId,
    pub clocks: Vec<String>,
    pub symbols: Vec<String>,
    pub rules: Vec<TpdaRule>,
}

impl Tpda {
    /// Checks that every index refers to a declared entity.
    pub fn validate(&self) -> Result<(), Vec<ModelError>> {
        let mut errors = Vec::new();
        let ns = self.states.len() as u32;
        if self.init.0 >= ns {
            errors.push(ModelError::BadInit(self.init));
        }
        for (i, r) in self.rules.iter().enumerate() {
            for s in [r.src, r.dst] {
                if s.0 >= ns {
                    errors.push(ModelError::UndeclaredState { rule: i, state: s });
                }
            }
            match r.op {
                Op::Test(c, _) | Op::Reset(c, _) if c.0 as usize >= self.clocks.len() => {
                    errors.push(ModelError::UndeclaredClock { rule: i, clock: c })
                }
                Op::Push(a, _) | Op::Pop(a, _) if a.0 as usize >= self.symbols.len() => {
                    errors.push(ModelError::UndeclaredSymbol { rule: i, symbol: a })
                }
                _ => {}
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Largest finite interval endpoint, or 0.
    pub fn cmax(&self) -> u32 {
        self.rules
            .iter()
            .filter_map(|r| r.op.interval())
            .map(Interval::max_constant)
            .max()
            .unwrap_or(0)
    }

    pub fn num_clocks(&self) -> u32 {
        self.clocks.len() as u32
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0 as usize]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u32))
    }

    pub fn rules_from(&self, s: StateId) -> impl Iterator<Item = (usize, &TpdaRule)> + '_ {
        self.rules.iter().enumerate().filter(move |(_, r)| r.src == s)
    }

    /// A rule rendered in the concrete syntax, e.g. `s1 -> s2 : push(a, [1:3))`.
    pub fn rule_text(&self, r: &TpdaRule) -> RuleText<'_> {
        RuleText { tpda: self, rule: *r }
    }
}

impl Names for Tpda {
    fn clock_name(&self, c: ClockId) -> &str {
        self.clocks.get(c.0 as usize).map_or("?", String::as_str)
    }

    fn symbol_name(&self, a: SymbolId) -> &str {
        self.symbols.get(a.0 as usize).map_or("?", String::as_str)
    }
}

pub struct RuleText<'a> {
    tpda: &'a Tpda,
    rule: TpdaRule,
}

impl fmt::Display for RuleText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.tpda;
        let r = &self.rule;
        write!(f, "{} -> {} : ", t.state_name(r.src), t.state_name(r.dst))?;
        match r.op {
            Op::Nop => f.write_str("nop"),
            Op::Test(c, iv) => write!(f, "test({}, {iv})", t.clock_name(c)),
            Op::Reset(c, iv) => write!(f, "reset({}, {iv})", t.clock_name(c)),
            Op::Push(a, iv) => write!(f, "push({}, {iv})", t.symbol_name(a)),
            Op::Pop(a, iv) => write!(f, "pop({}, {iv})", t.symbol_name(a)),
        }
    }
}

/// Incremental construction by name.
#[derive(Default)]
pub struct TpdaBuilder {
    states: Vec<String>,
    clocks: Vec<String>,
    symbols: Vec<String>,
    rules: Vec<TpdaRule>,
}

fn intern(names: &mut Vec<String>, name: &str) -> u32 {
    match names.iter().position(|n| n == name) {
        Some(i) => i as u32,
        None => {
            names.push(name.into());
            names.len() as u32 - 1
        }
    }
}

impl TpdaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(&mut self, name: &str) -> StateId {
        StateId(intern(&mut self.states, name))
    }

    pub fn clock(&mut self, name: &str) -> ClockId {
        ClockId(intern(&mut self.clocks, name))
    }

    pub fn symbol(&mut self, name: &str) -> SymbolId {
        SymbolId(intern(&mut self.symbols, name))
    }

    pub fn rule(&mut self, src: StateId, op: Op, dst: StateId) -> &mut Self {
        self.rules.push(TpdaRule { src, op, dst });
        self
    }

    pub fn build(self, init: StateId) -> Result<Tpda, Vec<ModelError>> {
        let t = Tpda {
            states: self.states,
            init,
            clocks: self.clocks,
            symbols: self.symbols,
            rules: self.rules,
        };
        t.validate()?;
        Ok(t)
    }
}

/// A concrete configuration; the stack lists the topmost entry first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TpdaConfig {
    pub state: StateId,
    pub clocks: Vec<Ratio<u64>>,
    pub stack: Vec<(SymbolId, Ratio<u64>)>,
}

impl TpdaConfig {
    /// Initial state, every clock at zero, empty stack.
    pub fn initial(t: &Tpda) -> TpdaConfig {
        TpdaConfig {
            state: t.init,
            clocks: vec![Ratio::from_integer(0); t.clocks.len()],
            stack: Vec::new(),
        }
    }
}

/// Lets `d` time units pass.
pub fn timed_step(c: &TpdaConfig, d: Ratio<u64>) -> Result<TpdaConfig, TpdaError> {
    if d == Ratio::from_integer(0) {
        return Err(TpdaError::NonPositiveDelay);
    }
    Ok(TpdaConfig {
        state: c.state,
        clocks: c.clocks.iter().map(|v| v + d).collect(),
        stack: c.stack.iter().map(|&(a, age)| (a, age + d)).collect(),
    })
}

/// Grid values `k / den` in `iv`, up to `cmax + 1`.
fn grid_choices(iv: &Interval, cmax: u32, den: u64) -> impl Iterator<Item = u64> + '_ {
    (0..=(cmax as u64 + 1) * den).filter(move |&k| iv.contains_frac(k, den))
}

/// Successors by one rule application; values chosen by resets and pushes
/// range over `k / den` up to `cmax + 1`.
pub fn discrete_step(t: &Tpda, c: &TpdaConfig, den: u64) -> Result<BTreeSet<TpdaConfig>, TpdaError> {
    if den == 0 {
        return Err(TpdaError::ZeroDenominator);
    }
    if c.state.0 as usize >= t.states.len() {
        return Err(TpdaError::UnknownState(c.state));
    }
    let cmax = t.cmax();
    let mut out = BTreeSet::new();
    for (_, r) in t.rules_from(c.state) {
        let moved = |clocks: Vec<Ratio<u64>>, stack: Vec<(SymbolId, Ratio<u64>)>| TpdaConfig {
            state: r.dst,
            clocks,
            stack,
        };
        match r.op {
            Op::Nop => {
                out.insert(moved(c.clocks.clone(), c.stack.clone()));
            }
            Op::Test(x, iv) => {
                if iv.contains(&c.clocks[x.0 as usize]) {
                    out.insert(moved(c.clocks.clone(), c.stack.clone()));
                }
            }
            Op::Pop(a, iv) => {
                if let Some(&(top, age)) = c.stack.first() {
                    if top == a && iv.contains(&age) {
                        out.insert(moved(c.clocks.clone(), c.stack[1..].to_vec()));
                    }
                }
            }
            Op::Reset(x, iv) => {
                for k in grid_choices(&iv, cmax, den) {
                    let mut clocks = c.clocks.clone();
                    clocks[x.0 as usize] = Ratio::new(k, den);
                    out.insert(moved(clocks, c.stack.clone()));
                }
            }
            Op::Push(a, iv) => {
                for k in grid_choices(&iv, cmax, den) {
                    let mut stack = Vec::with_capacity(c.stack.len() + 1);
                    stack.push((a, Ratio::new(k, den)));
                    stack.extend_from_slice(&c.stack);
                    out.insert(moved(c.clocks.clone(), stack));
                }
            }
        }
    }
    Ok(out)
}

/// Bounds for [`grid_oracle_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    /// Number of combined steps; each is an optional delay followed by one
    /// rule application.
    pub max_steps: usize,
    pub denominator: u64,
    /// Stop exploring once this many distinct configurations were visited.
    pub max_configs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub states: BTreeSet<StateId>,
    /// First configuration found in each state. Values above `cmax` are
    /// lowered to the first grid point above `cmax`. Values no guard of the
    /// model ever compares stay at zero.
    pub samples: BTreeMap<StateId, TpdaConfig>,
    pub explored: usize,
    /// Whether `max_configs` cut the search short.
    pub truncated: bool,
}

// Flattened grid configuration: clock numerators, then (symbol, age) pairs
// with the topmost entry last.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct GridConfig {
    state: u32,
    vals: Vec<u32>,
}

struct Grid<'a> {
    t: &'a Tpda,
    den: u64,
    /// First grid value above `cmax`; larger values behave the same.
    cap: u32,
    nclocks: usize,
    // Values nothing ever compares are kept at zero.
    clock_observed: Vec<bool>,
    age_observed: Vec<bool>,
}

impl<'a> Grid<'a> {
    fn new(t: &'a Tpda, den: u64) -> Self {
        let mut clock_observed = vec![false; t.clocks.len()];
        let mut age_observed = vec![false; t.symbols.len()];
        for r in &t.rules {
            match r.op {
                Op::Test(x, _) => clock_observed[x.0 as usize] = true,
                Op::Pop(a, iv) if iv != Interval::any() => age_observed[a.0 as usize] = true,
                _ => {}
            }
        }
        Grid {
            t,
            den,
            cap: (t.cmax() as u64 * den + 1) as u32,
            nclocks: t.clocks.len(),
            clock_observed,
            age_observed,
        }
    }

    fn initial(&self) -> GridConfig {
        GridConfig {
            state: self.t.init.0,
            vals: vec![0; self.nclocks],
        }
    }

    fn delay(&self, c: &GridConfig, d: u32) -> GridConfig {
        let mut vals = c.vals.clone();
        for (i, v) in vals.iter_mut().enumerate().take(self.nclocks) {
            if self.clock_observed[i] {
                *v = (*v + d).min(self.cap);
            }
        }
        for entry in vals[self.nclocks..].chunks_mut(2) {
            if self.age_observed[entry[0] as usize] {
                entry[1] = (entry[1] + d).min(self.cap);
            }
        }
        GridConfig { state: c.state, vals }
    }

    fn holds(&self, iv: &Interval, num: u32) -> bool {
        iv.contains_frac(num as u64, self.den)
    }

    fn choices(&self, iv: &Interval) -> impl Iterator<Item = u32> + '_ {
        let iv = *iv;
        (0..=self.cap).filter(move |&k| self.holds(&iv, k))
    }

    fn apply(&self, c: &GridConfig, r: &TpdaRule, out: &mut Vec<GridConfig>) {
        let moved = |vals: Vec<u32>| GridConfig { state: r.dst.0, vals };
        match r.op {
            Op::Nop => out.push(moved(c.vals.clone())),
            Op::Test(x, iv) => {
                if self.holds(&iv, c.vals[x.0 as usize]) {
                    out.push(moved(c.vals.clone()));
                }
            }
            Op::Pop(a, iv) => {
                let n = c.vals.len();
                if n > self.nclocks && c.vals[n - 2] == a.0 && self.holds(&iv, c.vals[n - 1]) {
                    out.push(moved(c.vals[..n - 2].to_vec()));
                }
            }
            Op::Reset(x, iv) => {
                if !self.clock_observed[x.0 as usize] {
                    let mut vals = c.vals.clone();
                    vals[x.0 as usize] = 0;
                    out.push(moved(vals));
                    return;
                }
                for k in self.choices(&iv) {
                    let mut vals = c.vals.clone();
                    vals[x.0 as usize] = k;
                    out.push(moved(vals));
                }
            }
            Op::Push(a, iv) => {
                if !self.age_observed[a.0 as usize] {
                    let mut vals = c.vals.clone();
                    vals.extend([a.0, 0]);
                    out.push(moved(vals));
                    return;
                }
                for k in self.choices(&iv) {
                    let mut vals = c.vals.clone();
                    vals.push(a.0);
                    vals.push(k);
                    out.push(moved(vals));
                }
            }
        }
    }

    /// Every delay option: zero, then each positive grid delay up to the cap.
    fn delays(&self) -> impl Iterator<Item = u32> {
        0..=self.cap
    }

    /// Drops all but the topmost `n` stack entries.
    fn keep_top(&self, c: &GridConfig, n: usize) -> GridConfig {
        let keep = self.nclocks + (c.vals.len() - self.nclocks).min(2 * n);
        let cut = c.vals.len() - (keep - self.nclocks);
        let mut vals = c.vals[..self.nclocks].to_vec();
        vals.extend_from_slice(&c.vals[cut..]);
        GridConfig { state: c.state, vals }
    }

    fn to_config(&self, c: &GridConfig) -> TpdaConfig {
        let q = |v: u32| Ratio::new(v as u64, self.den);
        let stack = c.vals[self.nclocks..]
            .chunks(2)
            .rev()
            .map(|p| (SymbolId(p[0]), q(p[1])))
            .collect();
        TpdaConfig {
            state: StateId(c.state),
            clocks: c.vals[..self.nclocks].iter().map(|&v| q(v)).collect(),
            stack,
        }
    }

    /// Configurations after an optional delay then one application of a rule
    /// from `rules`; all delayed variants are deduplicated first.
    fn successors(&self, c: &GridConfig, rules: &[&TpdaRule], out: &mut Vec<GridConfig>) {
        let mut delayed: Vec<GridConfig> = Vec::new();
        let mut seen = HashSet::new();
        for d in self.delays() {
            let dc = if d == 0 { c.clone() } else { self.delay(c, d) };
            if seen.insert(dc.clone()) {
                delayed.push(dc);
            }
        }
        for dc in &delayed {
            for r in rules.iter().filter(|r| r.src.0 == dc.state) {
                self.apply(dc, r, out);
            }
        }
    }
}

/// States visited by breadth-first exploration of the concrete semantics on
/// the grid `k / den`.
///
/// Configurations are stored with only as many stack entries as the remaining
/// steps could pop, which leaves the set of visited states unchanged.
pub fn grid_oracle(t: &Tpda, max_steps: usize, denominator: u64) -> OracleResult {
    grid_oracle_with(
        t,
        &OracleOptions {
            max_steps,
            denominator,
            max_configs: None,
        },
    )
}

pub fn grid_oracle_with(t: &Tpda, opts: &OracleOptions) -> OracleResult {
    let den = opts.denominator.max(1);
    let grid = Grid::new(t, den);
    let rules: Vec<&TpdaRule> = t.rules.iter().collect();
    let start = grid.initial();
    let mut states = BTreeSet::new();
    let mut samples = BTreeMap::new();
    states.insert(t.init);
    samples.insert(t.init, grid.to_config(&start));
    let mut seen = HashSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start];
    let mut truncated = false;
    let mut buf = Vec::new();
    for depth in 1..=opts.max_steps {
        // entries more than `left` deep can no longer be popped
        let left = opts.max_steps - depth;
        let mut next = Vec::new();
        'layer: for c in &frontier {
            buf.clear();
            grid.successors(c, &rules, &mut buf);
            for full in buf.drain(..) {
                let succ = grid.keep_top(&full, left);
                if seen.contains(&succ) {
                    continue;
                }
                if opts.max_configs.is_some_and(|m| seen.len() >= m) {
                    truncated = true;
                    break 'layer;
                }
                let s = StateId(succ.state);
                if states.insert(s) {
                    samples.insert(s, grid.to_config(&full));
                }
                seen.insert(succ.clone());
                next.push(succ);
            }
        }
        if next.is_empty() || truncated {
            break;
        }
        frontier = next;
    }
    OracleResult {
        states,
        samples,
        explored: seen.len(),
        truncated,
    }
}

/// Concrete search restricted to a fixed sequence of rule applications.
///
/// Step `i` lets some grid delay pass and then applies one of the rules whose
/// indices are listed in `steps[i]`. Returns whether some configuration
/// survives the whole sequence. Layers larger than `max_layer` are cut
/// (keeping the search an under-approximation).
pub fn guided_search(
    t: &Tpda,
    steps: &[Vec<usize>],
    denominator: u64,
    max_layer: usize,
) -> Option<TpdaConfig> {
    let grid = Grid::new(t, denominator.max(1));
    let mut layer = vec![grid.initial()];
    let mut buf = Vec::new();
    for candidates in steps {
        let rules: Vec<&TpdaRule> = candidates.iter().map(|&i| &t.rules[i]).collect();
        let mut next = Vec::new();
        let mut seen = HashSet::new();
        'layer: for c in &layer {
            buf.clear();
            grid.successors(c, &rules, &mut buf);
            for succ in buf.drain(..) {
                if seen.insert(succ.clone()) {
                    next.push(succ);
                    if next.len() >= max_layer {
                        break 'layer;
                    }
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        layer = next;
    }
    layer.first().map(|c| grid.to_config(c))
}
