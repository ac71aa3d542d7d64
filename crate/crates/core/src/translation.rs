//! The symbolic pushdown system simulating a timed pushdown automaton.
//!
//! Every entry of the timed stack is represented by a region relating the
//! entry's age to all clocks and, through shadow items, to the plain items of
//! the region below as they were when the entry was pushed. The bottom of the
//! symbolic stack is a region over the clocks alone.
//!
//! Time only ever rotates the topmost region (with the reference clock held at
//! zero). A timed pop is simulated by popping the top region, popping the
//! region below it, rotating that one (reference clock included) until its
//! plain items line up with the shadows of the popped region, merging the two,
//! and pushing the result.
//!
//! Each generated rule carries a single stack operation, so replacing the top
//! region goes through an intermediate [`SymbolicState::Replace`] state.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use core::cell::RefCell;

use hashbrown::HashMap;
use thiserror::Error;

use crate::interval::Interval;
use crate::pda::{PdaError, PdaRule, PushdownSystem, Saturation, StackOp, Verdict, Witness};
use crate::region::{Entry, Item, ItemBase, Region, RegionError, Shape, Val};
use crate::tpda::{ModelError, Op, StateId, Tpda};

/// What a pending region replacement simulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Via {
    Time,
    Rule(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolicState {
    Plain(StateId),
    /// The next rule pushes `region` and moves to `target`.
    Replace {
        target: StateId,
        region: Region,
        via: Via,
    },
    /// `upper`, stripped of its stack symbol, was popped by pop rule `rule`;
    /// the region below is next.
    Popping {
        rule: u32,
        upper: Region,
    },
}

/// Rotations of one region grouped by their plain part.
type OrbitIndex = HashMap<Region, Vec<Region>>;

pub type SymbolicRule = PdaRule<SymbolicState, Region>;
pub type SymbolicWitness = Witness<SymbolicState, Region>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("invalid model: {0:?}")]
    Model(Vec<ModelError>),
    #[error("target state {0:?} is not declared")]
    UnknownTarget(StateId),
    #[error(transparent)]
    Pda(#[from] PdaError),
}

/// The region-based pushdown system of a timed automaton. Rules are produced
/// on demand.
///
/// With item pruning enabled, items whose exact value can never be observed
/// are pinned to ω: clocks no rule tests, and ages of symbols only popped with
/// the guard `[0:inf)`. A push whose symbol no reachable rule pops seals the
/// stack below it, so it pushes a bottom region instead.
#[derive(Clone)]
pub struct SymbolicPda<'a> {
    tpda: &'a Tpda,
    cmax: u32,
    tested: Vec<bool>,
    timed_pop: Vec<bool>,
    /// Per rule: a push that never gets popped again.
    sealed: Vec<bool>,
    /// Rotations of each lower region met so far, keyed by their plain part.
    orbits: RefCell<HashMap<Region, Rc<OrbitIndex>>>,
}

/// Region with a plain reference clock and every plain clock at zero.
pub fn initial_region(t: &Tpda) -> Region {
    let mut set = vec![(Item::REF, Val::Int(0))];
    set.extend((0..t.num_clocks()).map(|c| (Item::clock(crate::tpda::ClockId(c)), Val::Int(0))));
    Region::normalized(vec![set], t.cmax())
}

/// Regions pushed for `push(a, iv)` on top of `top`.
///
/// Shadows copy every plain item of `top` at its exact position; the new
/// symbol is placed anywhere its guard allows.
pub fn push_regions(top: &Region, a: crate::tpda::SymbolId, iv: &Interval) -> Vec<Region> {
    let sets = top
        .sets()
        .iter()
        .map(|set| {
            let mut out = Vec::with_capacity(set.len() * 2);
            for &(it, v) in set.iter().filter(|(it, _)| !it.shadow) {
                if !matches!(it.base, ItemBase::Sym(_)) {
                    out.push((it, v));
                }
                out.push((it.shadowed(), v));
            }
            out
        })
        .collect();
    Region::normalized(sets, top.cmax()).insert_all(Item::sym(a), iv)
}

fn shadow_target(upper: &Region) -> Region {
    upper.project(|it| it.shadow.then(|| it.plain()))
}

fn plain_part(r: &Region) -> Region {
    r.project(|it| (!it.shadow).then_some(it))
}

/// Rotations of `lower` (reference clock included) whose plain items line up
/// with the shadows of `upper`, with their rotation counts.
pub fn refresh(lower: &Region, upper: &Region) -> Result<Vec<(usize, Region)>, RegionError> {
    let target = shadow_target(upper);
    Ok(lower
        .orbit(true)?
        .into_iter()
        .enumerate()
        .filter(|(_, r)| plain_part(r) == target)
        .collect())
}

/// Kept items arranged around skeleton points: `points[j]` holds the kept
/// items at skeleton point `j` (point 0 is fraction zero) and `gaps[j]` the
/// sets strictly between points `j` and `j + 1`.
struct Layout {
    points: Vec<Vec<Entry>>,
    gaps: Vec<Vec<Vec<Entry>>>,
}

fn layout(r: &Region, skeleton: impl Fn(Item) -> bool, kept: impl Fn(Item) -> bool) -> Layout {
    let keep = |set: &[Entry]| -> Vec<Entry> { set.iter().copied().filter(|(it, _)| kept(*it)).collect() };
    let mut points = vec![keep(&r.sets()[0])];
    let mut gaps = vec![Vec::new()];
    for set in &r.sets()[1..] {
        if set.iter().any(|(it, _)| skeleton(*it)) {
            points.push(keep(set));
            gaps.push(Vec::new());
        } else {
            let k = keep(set);
            if !k.is_empty() {
                gaps.last_mut().expect("at least one gap").push(k);
            }
        }
    }
    Layout { points, gaps }
}

/// All merges of two ordered set sequences that keep each one's order; a set
/// from each side may also share a fractional part.
fn interleavings(a: &[Vec<Entry>], b: &[Vec<Entry>]) -> Vec<Vec<Vec<Entry>>> {
    match (a.split_first(), b.split_first()) {
        (None, _) => vec![b.to_vec()],
        (_, None) => vec![a.to_vec()],
        (Some((ha, ta)), Some((hb, tb))) => {
            let mut out = Vec::new();
            for mut rest in interleavings(ta, b) {
                rest.insert(0, ha.clone());
                out.push(rest);
            }
            for mut rest in interleavings(a, tb) {
                rest.insert(0, hb.clone());
                out.push(rest);
            }
            for mut rest in interleavings(ta, tb) {
                let mut both = ha.clone();
                both.extend_from_slice(hb);
                rest.insert(0, both);
                out.push(rest);
            }
            out
        }
    }
}

/// Combines a refreshed lower region with the popped upper one: stack symbol
/// and shadows come from below, plain clocks and the reference clock from
/// above.
pub fn merge(lower_rot: &Region, upper: &Region) -> Result<Vec<Region>, RegionError> {
    if plain_part(lower_rot) != shadow_target(upper) {
        return Err(RegionError::Misaligned);
    }
    let up = layout(
        upper,
        |it| it.shadow,
        |it| !it.shadow && !matches!(it.base, ItemBase::Sym(_)),
    );
    let low = layout(
        lower_rot,
        |it| !it.shadow,
        |it| it.shadow || matches!(it.base, ItemBase::Sym(_)),
    );
    if up.points.len() != low.points.len() {
        return Err(RegionError::Misaligned);
    }
    // one choice of interleaving per gap
    let mut partial: Vec<Vec<Vec<Entry>>> = vec![Vec::new()];
    for j in 0..up.points.len() {
        let mut point = up.points[j].clone();
        point.extend_from_slice(&low.points[j]);
        let options = interleavings(&up.gaps[j], &low.gaps[j]);
        let mut next = Vec::with_capacity(partial.len() * options.len());
        for prefix in &partial {
            for opt in &options {
                let mut sets = prefix.clone();
                sets.push(point.clone());
                sets.extend(opt.iter().cloned());
                next.push(sets);
            }
        }
        partial = next;
    }
    let mut out: Vec<Region> = partial
        .into_iter()
        .map(|sets| Region::normalized(sets, upper.cmax()))
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// `r` without its plain stack symbol, which a merge ignores.
fn without_symbol(r: &Region) -> Region {
    r.project(|it| (it.shadow || !matches!(it.base, ItemBase::Sym(_))).then_some(it))
}

/// `r` with `item` moved to ω.
fn with_omega(r: &Region, item: Item) -> Region {
    let mut sets: Vec<Vec<Entry>> = r
        .sets()
        .iter()
        .map(|s| s.iter().copied().filter(|(it, _)| *it != item).collect())
        .collect();
    sets[0].push((item, Val::Omega));
    Region::normalized(sets, r.cmax())
}

fn region_err(e: RegionError) -> PdaError {
    PdaError::Generator(e.to_string())
}

impl<'a> SymbolicPda<'a> {
    /// The system with item pruning enabled.
    pub fn new(tpda: &'a Tpda) -> Result<Self, CheckError> {
        Self::with_pruning(tpda, true)
    }

    pub fn with_pruning(tpda: &'a Tpda, prune: bool) -> Result<Self, CheckError> {
        tpda.validate().map_err(CheckError::Model)?;
        let nclocks = tpda.clocks.len();
        let nsyms = tpda.symbols.len();
        let (mut tested, mut timed_pop) = (vec![!prune; nclocks], vec![!prune; nsyms]);
        for r in &tpda.rules {
            match r.op {
                Op::Test(x, _) => tested[x.0 as usize] = true,
                Op::Pop(a, iv) if iv != Interval::any() => timed_pop[a.0 as usize] = true,
                _ => {}
            }
        }
        let sealed = tpda
            .rules
            .iter()
            .map(|r| match r.op {
                Op::Push(a, _) if prune => !pop_ahead(tpda, r.dst, a),
                _ => false,
            })
            .collect();
        Ok(SymbolicPda {
            tpda,
            cmax: tpda.cmax(),
            tested,
            timed_pop,
            sealed,
            orbits: RefCell::default(),
        })
    }

    /// Whether push rule `rule` pushes a bottom region.
    pub fn seals(&self, rule: usize) -> bool {
        self.sealed.get(rule).copied().unwrap_or(false)
    }

    pub fn tpda(&self) -> &Tpda {
        self.tpda
    }

    pub fn cmax(&self) -> u32 {
        self.cmax
    }

    /// The bottom region the analysis starts from; untested clocks are ω.
    pub fn initial_region(&self) -> Region {
        let mut r = initial_region(self.tpda);
        for (c, &t) in self.tested.iter().enumerate() {
            if !t {
                r = with_omega(&r, Item::clock(crate::tpda::ClockId(c as u32)));
            }
        }
        r
    }

    fn resets(&self, top: &Region, x: crate::tpda::ClockId, iv: &Interval) -> Result<Vec<Region>, PdaError> {
        if self.tested[x.0 as usize] {
            top.reset_insert(Item::clock(x), iv).map_err(region_err)
        } else {
            Ok(vec![with_omega(top, Item::clock(x))])
        }
    }

    fn pushes(&self, rule: usize, top: &Region, a: crate::tpda::SymbolId, iv: &Interval) -> Vec<Region> {
        if self.sealed[rule] {
            vec![top.project(|it| (!it.shadow && !matches!(it.base, ItemBase::Sym(_))).then_some(it))]
        } else if !self.timed_pop[a.0 as usize] {
            push_regions(top, a, &Interval::greater_than(self.cmax))
                .into_iter()
                .filter(|r| r.locate(Item::sym(a)).is_some_and(|(_, v)| v == Val::Omega))
                .collect()
        } else {
            push_regions(top, a, iv)
        }
    }

    /// Every region placed on the stack must have a legal shape and keep the
    /// plain reference clock at zero in the first set.
    fn checked(&self, r: Region) -> Result<Region, PdaError> {
        r.shape(self.tpda.num_clocks()).map_err(region_err)?;
        match r.sets()[0].iter().find(|(it, _)| *it == Item::REF) {
            Some((_, Val::Int(0))) => Ok(r),
            _ => Err(PdaError::Generator(format!(
                "invariant violated: reference clock displaced in {r:?}"
            ))),
        }
    }

    fn plain_rules(&self, s: StateId, top: &Region, out: &mut Vec<SymbolicRule>) -> Result<(), PdaError> {
        let src = SymbolicState::Plain(s);
        let replace = |target, region, via| PdaRule {
            src: src.clone(),
            op: StackOp::Pop(top.clone()),
            dst: SymbolicState::Replace { target, region, via },
        };
        let rotated = top.rotate(false).map_err(region_err)?;
        out.push(replace(s, self.checked(rotated)?, Via::Time));
        for (i, rule) in self.tpda.rules_from(s) {
            let via = Via::Rule(i as u32);
            let t = rule.dst;
            match rule.op {
                Op::Nop => out.push(PdaRule::new(src.clone(), StackOp::Nop, SymbolicState::Plain(t))),
                Op::Test(x, iv) => {
                    if top.satisfies(Item::clock(x), &iv).map_err(region_err)? {
                        out.push(replace(t, top.clone(), via));
                    }
                }
                Op::Reset(x, iv) => {
                    for r in self.resets(top, x, &iv)? {
                        out.push(replace(t, self.checked(r)?, via));
                    }
                }
                Op::Push(a, iv) => {
                    for r in self.pushes(i, top, a, &iv) {
                        out.push(PdaRule::new(
                            src.clone(),
                            StackOp::Push(self.checked(r)?),
                            SymbolicState::Plain(t),
                        ));
                    }
                }
                Op::Pop(a, iv) => {
                    if top.symbol() == Some(a) && top.satisfies(Item::sym(a), &iv).map_err(region_err)? {
                        out.push(PdaRule::new(
                            src.clone(),
                            StackOp::Pop(top.clone()),
                            SymbolicState::Popping {
                                rule: i as u32,
                                upper: without_symbol(top),
                            },
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn orbit_index(&self, lower: &Region) -> Result<Rc<OrbitIndex>, PdaError> {
        if let Some(ix) = self.orbits.borrow().get(lower) {
            return Ok(ix.clone());
        }
        let mut ix = OrbitIndex::new();
        for r in lower.orbit(true).map_err(region_err)? {
            ix.entry(plain_part(&r)).or_default().push(r);
        }
        let ix = Rc::new(ix);
        self.orbits.borrow_mut().insert(lower.clone(), ix.clone());
        Ok(ix)
    }

    fn popping_rules(
        &self,
        rule: u32,
        upper: &Region,
        lower: &Region,
        out: &mut Vec<SymbolicRule>,
    ) -> Result<(), PdaError> {
        let target = self.tpda.rules[rule as usize].dst;
        let expected = match lower.shape(self.tpda.num_clocks()).map_err(region_err)? {
            Shape::Bottom => None,
            Shape::Stack { symbol, .. } => Some(symbol),
        };
        let mut merged = BTreeSet::new();
        if let Some(rots) = self.orbit_index(lower)?.get(&shadow_target(upper)) {
            for lower_rot in rots {
                merged.extend(merge(lower_rot, upper).map_err(region_err)?);
            }
        }
        for m in merged {
            let m = self.checked(m)?;
            if m.symbol() != expected {
                return Err(PdaError::Generator(
                    "invariant violated: merge changed the stack symbol".into(),
                ));
            }
            out.push(PdaRule::new(
                SymbolicState::Popping {
                    rule,
                    upper: upper.clone(),
                },
                StackOp::Pop(lower.clone()),
                SymbolicState::Replace {
                    target,
                    region: m,
                    via: Via::Rule(rule),
                },
            ));
        }
        Ok(())
    }
}

impl PushdownSystem for SymbolicPda<'_> {
    type State = SymbolicState;
    type Symbol = Region;

    fn initial(&self) -> SymbolicState {
        SymbolicState::Plain(self.tpda.init)
    }

    fn contains_state(&self, state: &SymbolicState) -> bool {
        let n = self.tpda.states.len() as u32;
        match state {
            SymbolicState::Plain(s) => s.0 < n,
            SymbolicState::Replace { target, .. } => target.0 < n,
            SymbolicState::Popping { rule, .. } => matches!(
                self.tpda.rules.get(*rule as usize),
                Some(r) if matches!(r.op, Op::Pop(..))
            ),
        }
    }

    fn rules(
        &self,
        state: &SymbolicState,
        top: Option<&Region>,
        out: &mut Vec<SymbolicRule>,
    ) -> Result<(), PdaError> {
        match (state, top) {
            (SymbolicState::Plain(s), Some(top)) => self.plain_rules(*s, top, out),
            (SymbolicState::Plain(_), None) => Ok(()),
            (SymbolicState::Replace { target, region, .. }, _) => {
                out.push(PdaRule::new(
                    state.clone(),
                    StackOp::Push(region.clone()),
                    SymbolicState::Plain(*target),
                ));
                Ok(())
            }
            (SymbolicState::Popping { rule, upper }, Some(lower)) => {
                self.popping_rules(*rule, upper, lower, out)
            }
            (SymbolicState::Popping { .. }, None) => Ok(()),
        }
    }

    fn ignores_top(&self, state: &SymbolicState) -> bool {
        matches!(state, SymbolicState::Replace { .. })
    }
}

/// Whether some rule popping `a` is reachable from `from` in the control graph.
fn pop_ahead(t: &Tpda, from: StateId, a: crate::tpda::SymbolId) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut todo = Vec::from([from]);
    while let Some(s) = todo.pop() {
        for (_, r) in t.rules_from(s) {
            if matches!(r.op, Op::Pop(b, _) if b == a) {
                return true;
            }
            if seen.insert(r.dst) {
                todo.push(r.dst);
            }
        }
    }
    false
}

/// Control state that pushes the bottom region before anything else happens.
fn start_state(pda: &SymbolicPda<'_>) -> SymbolicState {
    SymbolicState::Replace {
        target: pda.tpda.init,
        region: pda.initial_region(),
        via: Via::Time,
    }
}

/// Generation statistics of one saturation run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TranslateStats {
    /// Distinct regions used as stack symbols.
    pub regions: usize,
    /// Control states other than the automaton's own.
    pub mid_states: usize,
    pub control_states: usize,
    pub rules: usize,
    pub transitions: usize,
}

/// A finished symbolic analysis of one automaton.
pub struct Analysis<'a> {
    pda: SymbolicPda<'a>,
    saturation: Saturation<RootedOwned<'a>>,
}

/// The symbolic system rooted in a control state that pushes the initial
/// region before anything else happens.
pub struct RootedOwned<'a> {
    inner: SymbolicPda<'a>,
}

impl PushdownSystem for RootedOwned<'_> {
    type State = SymbolicState;
    type Symbol = Region;

    fn initial(&self) -> SymbolicState {
        start_state(&self.inner)
    }

    fn contains_state(&self, state: &SymbolicState) -> bool {
        self.inner.contains_state(state)
    }

    fn rules(
        &self,
        state: &SymbolicState,
        top: Option<&Region>,
        out: &mut Vec<SymbolicRule>,
    ) -> Result<(), PdaError> {
        self.inner.rules(state, top, out)
    }

    fn ignores_top(&self, state: &SymbolicState) -> bool {
        self.inner.ignores_top(state)
    }
}

impl<'a> Analysis<'a> {
    /// Saturates the symbolic system of `t`.
    pub fn run(t: &'a Tpda) -> Result<Analysis<'a>, CheckError> {
        Self::run_with(t, true)
    }

    /// Saturates with item pruning switched on or off.
    pub fn run_with(t: &'a Tpda, prune: bool) -> Result<Analysis<'a>, CheckError> {
        let pda = SymbolicPda::with_pruning(t, prune)?;
        let rooted = RootedOwned { inner: pda.clone() };
        let saturation = Saturation::run(&rooted)?;
        Ok(Analysis { pda, saturation })
    }

    pub fn symbolic(&self) -> &SymbolicPda<'a> {
        &self.pda
    }

    /// The rooted system the witnesses replay in: it starts in a control
    /// state that pushes the initial region.
    pub fn rooted(&self) -> RootedOwned<'a> {
        RootedOwned {
            inner: self.pda.clone(),
        }
    }

    pub fn reachable(&self) -> BTreeSet<StateId> {
        self.saturation
            .reachable_states()
            .into_iter()
            .filter_map(|s| match s {
                SymbolicState::Plain(p) => Some(p),
                _ => None,
            })
            .collect()
    }

    pub fn verdict(&self, target: StateId) -> Result<Verdict<SymbolicState, Region>, CheckError> {
        if target.0 as usize >= self.pda.tpda.states.len() {
            return Err(CheckError::UnknownTarget(target));
        }
        Ok(match self.saturation.witness(&SymbolicState::Plain(target)) {
            Some(w) => Verdict::Reachable(w),
            None => Verdict::Unreachable,
        })
    }

    pub fn stats(&self) -> TranslateStats {
        let s = self.saturation.stats();
        let plain = self
            .saturation
            .states()
            .iter()
            .filter(|s| matches!(s, SymbolicState::Plain(_)))
            .count();
        TranslateStats {
            regions: s.symbols,
            mid_states: s.control_states - plain,
            control_states: s.control_states,
            rules: s.rules,
            transitions: s.transitions,
        }
    }
}

/// Decides whether `target` is reachable in `t`.
pub fn check_reachability(
    t: &Tpda,
    target: StateId,
) -> Result<(Verdict<SymbolicState, Region>, TranslateStats), CheckError> {
    if target.0 as usize >= t.states.len() {
        return Err(CheckError::UnknownTarget(target));
    }
    let analysis = Analysis::run(t)?;
    Ok((analysis.verdict(target)?, analysis.stats()))
}

/// Rule indices of `t` behind each discrete step of a symbolic witness.
///
/// Steps simulating time passage are skipped; a step that several rules could
/// have produced lists all of them. Push guards are not checked.
pub fn witness_rule_steps(t: &Tpda, w: &SymbolicWitness) -> Vec<Vec<usize>> {
    let sealed: Vec<bool> = match SymbolicPda::new(t) {
        Ok(p) => (0..t.rules.len()).map(|i| p.seals(i)).collect(),
        Err(_) => vec![false; t.rules.len()],
    };
    let mut steps = Vec::new();
    for rule in &w.steps {
        match (&rule.src, &rule.op, &rule.dst) {
            (SymbolicState::Plain(s), StackOp::Nop, SymbolicState::Plain(d)) => steps.push(
                t.rules_from(*s)
                    .filter(|(_, r)| r.dst == *d && r.op == Op::Nop)
                    .map(|(i, _)| i)
                    .collect(),
            ),
            (SymbolicState::Plain(s), StackOp::Push(region), SymbolicState::Plain(d)) => steps.push(
                t.rules_from(*s)
                    .filter(|(i, r)| match r.op {
                        Op::Push(a, _) => {
                            r.dst == *d
                                && match region.symbol() {
                                    Some(b) => a == b,
                                    None => sealed[*i],
                                }
                        }
                        _ => false,
                    })
                    .map(|(i, _)| i)
                    .collect(),
            ),
            (
                SymbolicState::Replace {
                    via: Via::Rule(i), ..
                },
                StackOp::Push(_),
                SymbolicState::Plain(_),
            ) => steps.push(vec![*i as usize]),
            _ => {}
        }
    }
    // the very first step pushes the initial region
    steps
}
