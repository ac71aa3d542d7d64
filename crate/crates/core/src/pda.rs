//! Untimed pushdown systems.
//!
//! Rules carry exactly one stack operation (`push a`, `pop a` or `nop`). A
//! system exposes its rules through [`PushdownSystem::rules`], keyed on the
//! control state and the topmost symbol, so that very large alphabets can be
//! generated lazily while saturation discovers them.
//!
//! State reachability is computed with post* saturation over a P-automaton
//! that starts out accepting the single initial configuration. Each saturated
//! transition keeps one back-pointer, which is enough to rebuild a rule
//! sequence leading to any reachable control state.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::hash::Hash;

use core::hash::BuildHasher;
use hashbrown::{DefaultHashBuilder, HashMap, HashTable};
use thiserror::Error;

/// Stack operation of a single rule.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StackOp<A> {
    Push(A),
    Pop(A),
    Nop,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PdaRule<S, A> {
    pub src: S,
    pub op: StackOp<A>,
    pub dst: S,
}

impl<S, A> PdaRule<S, A> {
    pub fn new(src: S, op: StackOp<A>, dst: S) -> Self {
        PdaRule { src, op, dst }
    }
}

/// A configuration: control state plus stack, topmost symbol first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PdaConfig<S, A> {
    pub state: S,
    pub stack: Vec<A>,
}

impl<S, A> PdaConfig<S, A> {
    pub fn new(state: S, stack: Vec<A>) -> Self {
        PdaConfig { state, stack }
    }

    pub fn top(&self) -> Option<&A> {
        self.stack.first()
    }
}

/// Sequence of rules applied in order from the initial configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness<S, A> {
    pub steps: Vec<PdaRule<S, A>>,
}

impl<S, A> Witness<S, A> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict<S, A> {
    Reachable(Witness<S, A>),
    Unreachable,
}

impl<S, A> Verdict<S, A> {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Verdict::Reachable(_))
    }

    pub fn witness(&self) -> Option<&Witness<S, A>> {
        match self {
            Verdict::Reachable(w) => Some(w),
            Verdict::Unreachable => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PdaError {
    #[error("undeclared state {0}")]
    UndeclaredState(String),
    #[error("undeclared stack symbol {0}")]
    UndeclaredSymbol(String),
    /// The rule source failed for a reason of its own.
    #[error("rule generation failed: {0}")]
    Generator(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReplayFailure {
    #[error("rule source {0} does not match the current state")]
    StateMismatch(String),
    #[error("pop on an empty stack")]
    EmptyStack,
    #[error("pop of {expected} but the top is {found}")]
    PopMismatch { expected: String, found: String },
    #[error("rule is not offered by the system in this configuration")]
    NotARule,
    #[error(transparent)]
    Model(#[from] PdaError),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("witness replay failed at step {step}: {reason}")]
pub struct ReplayError {
    pub step: usize,
    pub reason: ReplayFailure,
}

/// A pushdown system whose rules are looked up by control state and top symbol.
///
/// Implementations must be pure: the same query always yields the same rules
/// in the same order.
pub trait PushdownSystem {
    type State: Clone + Eq + Hash + Ord + Debug;
    type Symbol: Clone + Eq + Hash + Ord + Debug;

    fn initial(&self) -> Self::State;

    fn contains_state(&self, state: &Self::State) -> bool;

    /// Appends to `out` every rule leaving `state` that is enabled when `top`
    /// is the topmost symbol (`None` for the empty stack). `Pop(a)` rules are
    /// only reported when `top == Some(a)`.
    fn rules(
        &self,
        state: &Self::State,
        top: Option<&Self::Symbol>,
        out: &mut Vec<PdaRule<Self::State, Self::Symbol>>,
    ) -> Result<(), PdaError>;

    /// Whether `state` offers the same rules, none of them a pop, whatever
    /// the top. Saturation then applies them below ε-transitions directly.
    fn ignores_top(&self, _state: &Self::State) -> bool {
        false
    }
}

/// A pushdown automaton with an explicit finite rule set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pda<S, A> {
    states: BTreeSet<S>,
    init: S,
    alphabet: BTreeSet<A>,
    rules: Vec<PdaRule<S, A>>,
}

impl<S, A> Pda<S, A>
where
    S: Clone + Ord + Debug,
    A: Clone + Ord + Debug,
{
    pub fn new(
        states: impl IntoIterator<Item = S>,
        init: S,
        alphabet: impl IntoIterator<Item = A>,
        rules: Vec<PdaRule<S, A>>,
    ) -> Result<Self, PdaError> {
        let states: BTreeSet<S> = states.into_iter().collect();
        let alphabet: BTreeSet<A> = alphabet.into_iter().collect();
        if !states.contains(&init) {
            return Err(PdaError::UndeclaredState(format!("{init:?}")));
        }
        for rule in &rules {
            for s in [&rule.src, &rule.dst] {
                if !states.contains(s) {
                    return Err(PdaError::UndeclaredState(format!("{s:?}")));
                }
            }
            match &rule.op {
                StackOp::Push(a) | StackOp::Pop(a) if !alphabet.contains(a) => {
                    return Err(PdaError::UndeclaredSymbol(format!("{a:?}")));
                }
                _ => {}
            }
        }
        Ok(Pda {
            states,
            init,
            alphabet,
            rules,
        })
    }

    pub fn states(&self) -> &BTreeSet<S> {
        &self.states
    }

    pub fn init(&self) -> &S {
        &self.init
    }

    pub fn alphabet(&self) -> &BTreeSet<A> {
        &self.alphabet
    }

    pub fn rule_list(&self) -> &[PdaRule<S, A>] {
        &self.rules
    }
}

impl<S, A> PushdownSystem for Pda<S, A>
where
    S: Clone + Eq + Hash + Ord + Debug,
    A: Clone + Eq + Hash + Ord + Debug,
{
    type State = S;
    type Symbol = A;

    fn initial(&self) -> S {
        self.init.clone()
    }

    fn contains_state(&self, state: &S) -> bool {
        self.states.contains(state)
    }

    fn rules(&self, state: &S, top: Option<&A>, out: &mut Vec<PdaRule<S, A>>) -> Result<(), PdaError> {
        for rule in self.rules.iter().filter(|r| &r.src == state) {
            let enabled = match &rule.op {
                StackOp::Pop(a) => top == Some(a),
                StackOp::Push(_) | StackOp::Nop => true,
            };
            if enabled {
                out.push(rule.clone());
            }
        }
        Ok(())
    }
}

fn apply_rule<S: Clone, A: Clone + PartialEq + Debug>(
    c: &PdaConfig<S, A>,
    rule: &PdaRule<S, A>,
) -> Result<PdaConfig<S, A>, ReplayFailure> {
    let mut stack = c.stack.clone();
    match &rule.op {
        StackOp::Push(a) => stack.insert(0, a.clone()),
        StackOp::Pop(a) => match stack.first() {
            None => return Err(ReplayFailure::EmptyStack),
            Some(top) if top != a => {
                return Err(ReplayFailure::PopMismatch {
                    expected: format!("{a:?}"),
                    found: format!("{top:?}"),
                })
            }
            Some(_) => {
                stack.remove(0);
            }
        },
        StackOp::Nop => {}
    }
    Ok(PdaConfig {
        state: rule.dst.clone(),
        stack,
    })
}

/// A set of configurations of `P`.
pub type Configs<P> = BTreeSet<PdaConfig<<P as PushdownSystem>::State, <P as PushdownSystem>::Symbol>>;

/// All configurations reachable from `c` in one rule application.
pub fn step<P: PushdownSystem>(pda: &P, c: &PdaConfig<P::State, P::Symbol>) -> Result<Configs<P>, PdaError> {
    if !pda.contains_state(&c.state) {
        return Err(PdaError::UndeclaredState(format!("{:?}", c.state)));
    }
    let mut rules = Vec::new();
    pda.rules(&c.state, c.top(), &mut rules)?;
    let mut next = BTreeSet::new();
    for rule in &rules {
        // rules() only offers enabled rules
        if let Ok(succ) = apply_rule(c, rule) {
            next.insert(succ);
        }
    }
    Ok(next)
}

/// Every configuration reachable in at most `max_steps` rule applications.
pub fn bounded_bfs<P: PushdownSystem>(pda: &P, max_steps: usize) -> Result<Configs<P>, PdaError> {
    let start = PdaConfig::new(pda.initial(), Vec::new());
    let mut seen = BTreeSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start];
    for _ in 0..max_steps {
        let mut next = Vec::new();
        for c in &frontier {
            for succ in step(pda, c)? {
                if seen.insert(succ.clone()) {
                    next.push(succ);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(seen)
}

/// Replays `witness` from the initial configuration.
///
/// Every step must be a rule the system offers in the current configuration.
pub fn replay<P: PushdownSystem>(
    pda: &P,
    witness: &Witness<P::State, P::Symbol>,
) -> Result<PdaConfig<P::State, P::Symbol>, ReplayError> {
    let mut c = PdaConfig::new(pda.initial(), Vec::new());
    let mut offered = Vec::new();
    for (i, rule) in witness.steps.iter().enumerate() {
        let fail = |reason| ReplayError { step: i, reason };
        if rule.src != c.state {
            return Err(fail(ReplayFailure::StateMismatch(format!("{:?}", rule.src))));
        }
        let next = apply_rule(&c, rule).map_err(fail)?;
        offered.clear();
        pda.rules(&c.state, c.top(), &mut offered)
            .map_err(|e| fail(e.into()))?;
        if !offered.contains(rule) {
            return Err(fail(ReplayFailure::NotARule));
        }
        c = next;
    }
    Ok(c)
}

/// Control states reachable from the initial configuration.
pub fn reachable_states<P: PushdownSystem>(pda: &P) -> Result<BTreeSet<P::State>, PdaError> {
    Ok(Saturation::run(pda)?.reachable_states())
}

/// Decides whether `target` is reachable, with a replayable witness if so.
pub fn is_state_reachable<P: PushdownSystem>(
    pda: &P,
    target: &P::State,
) -> Result<Verdict<P::State, P::Symbol>, PdaError> {
    if !pda.contains_state(target) {
        return Err(PdaError::UndeclaredState(format!("{target:?}")));
    }
    let sat = Saturation::run(pda)?;
    Ok(match sat.witness(target) {
        Some(w) => Verdict::Reachable(w),
        None => Verdict::Unreachable,
    })
}

// P-automaton transition labels: 0 = ε, 1 = bottom marker, 2 + i = symbol i.
const EPS: u32 = 0;
const BOTTOM: u32 = 1;
const FINAL: u32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RuleKind {
    Nop,
    Push(u32),
    Pop,
}

const OP_NOP: u32 = u32::MAX;
const OP_POP: u32 = u32::MAX - 1;

// Rule with interned ids. Source state and popped symbol are those of the
// transition the rule is applied to, so they are not stored.
#[derive(Clone, Copy, Debug)]
struct StoredRule {
    // OP_NOP, OP_POP or the pushed symbol
    op: u32,
    dst: u32,
}

impl StoredRule {
    fn kind(self) -> RuleKind {
        match self.op {
            OP_NOP => RuleKind::Nop,
            OP_POP => RuleKind::Pop,
            a => RuleKind::Push(a),
        }
    }
}

const CHUNK: usize = 1 << 16;

/// Append-only storage in fixed-size chunks; growing never moves elements.
struct Chunks<T> {
    chunks: Vec<Vec<T>>,
    len: usize,
}

impl<T: Copy> Chunks<T> {
    fn new() -> Self {
        Chunks {
            chunks: Vec::new(),
            len: 0,
        }
    }

    fn len(&self) -> usize {
        self.len
    }

    fn push(&mut self, t: T) {
        if self.len.is_multiple_of(CHUNK) {
            self.chunks.push(Vec::with_capacity(CHUNK));
        }
        self.chunks.last_mut().expect("a chunk with room").push(t);
        self.len += 1;
    }

    fn get(&self, i: u32) -> T {
        let i = i as usize;
        self.chunks[i / CHUNK][i % CHUNK]
    }
}

/// How a saturated transition was first derived.
#[derive(Clone, Copy, Debug)]
enum Origin {
    Initial,
    /// A rule applied on top of `prev`; pushes only when `prev` is an ε-transition.
    Step {
        prev: u32,
        rule: u32,
    },
    /// Top transition created by a push; its run is empty.
    PushTop,
    /// Transition leaving a mid node, created by pushing on top of `prev`.
    Push {
        prev: u32,
        rule: u32,
    },
    /// ε-transition `eps` followed by the mid-node transition `step`.
    Combine {
        eps: u32,
        step: u32,
    },
}

#[derive(Clone, Copy, Debug)]
struct Trans {
    from: u32,
    label: u32,
    to: u32,
    origin: Origin,
}

/// Sizes of a finished saturation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SaturationStats {
    pub control_states: usize,
    pub symbols: usize,
    pub rules: usize,
    pub transitions: usize,
}

/// Result of post* saturation from the initial configuration.
pub struct Saturation<P: PushdownSystem> {
    states: Vec<P::State>,
    symbols: Vec<P::Symbol>,
    rules: Chunks<StoredRule>,
    // node of each control state; nodes also cover FINAL and mid nodes
    ctrl_node: Vec<u32>,
    trans: Chunks<Trans>,
    node_ctrl: Vec<Option<u32>>,
    first_out: Vec<Option<u32>>,
}

struct Builder<'a, P: PushdownSystem> {
    pda: &'a P,
    state_ids: HashMap<P::State, u32>,
    symbol_ids: HashMap<P::Symbol, u32>,
    states: Vec<P::State>,
    symbols: Vec<P::Symbol>,
    rules: Chunks<StoredRule>,
    // rules of each (state, label) query, a contiguous range of `rules`
    cache: HashMap<(u32, u32), (u32, u32)>,
    ctrl_node: Vec<u32>,
    node_ctrl: Vec<Option<u32>>,
    blind: Vec<bool>,
    mid_nodes: HashMap<(u32, u32), u32>,
    // indices into `trans`, hashed by (from, label, to)
    rel: HashTable<u32>,
    hasher: DefaultHashBuilder,
    trans: Chunks<Trans>,
    out: Vec<Vec<u32>>,
    eps_in: Vec<Vec<u32>>,
    first_out: Vec<Option<u32>>,
    worklist: VecDeque<u32>,
    scratch: Vec<PdaRule<P::State, P::Symbol>>,
}

impl<'a, P: PushdownSystem> Builder<'a, P> {
    fn new_node(&mut self, ctrl: Option<u32>) -> u32 {
        let id = self.node_ctrl.len() as u32;
        self.node_ctrl.push(ctrl);
        self.out.push(Vec::new());
        self.eps_in.push(Vec::new());
        self.first_out.push(None);
        id
    }

    fn state_id(&mut self, s: &P::State) -> Result<u32, PdaError> {
        if let Some(&id) = self.state_ids.get(s) {
            return Ok(id);
        }
        if !self.pda.contains_state(s) {
            return Err(PdaError::UndeclaredState(format!("{s:?}")));
        }
        let id = self.states.len() as u32;
        self.states.push(s.clone());
        self.blind.push(self.pda.ignores_top(s));
        self.state_ids.insert(s.clone(), id);
        let node = self.new_node(Some(id));
        self.ctrl_node.push(node);
        Ok(id)
    }

    fn symbol_id(&mut self, a: &P::Symbol) -> u32 {
        if let Some(&id) = self.symbol_ids.get(a) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(a.clone());
        self.symbol_ids.insert(a.clone(), id);
        id
    }

    fn rules_for(&mut self, state: u32, label: u32) -> Result<core::ops::Range<u32>, PdaError> {
        if let Some(&(start, end)) = self.cache.get(&(state, label)) {
            return Ok(start..end);
        }
        let start = self.rules.len() as u32;
        let mut scratch = core::mem::take(&mut self.scratch);
        scratch.clear();
        {
            let s = &self.states[state as usize];
            let top = if label == BOTTOM {
                None
            } else {
                Some(&self.symbols[(label - 2) as usize])
            };
            self.pda.rules(s, top, &mut scratch)?;
        }
        for rule in scratch.drain(..) {
            let dst = self.state_id(&rule.dst)?;
            let op = match &rule.op {
                StackOp::Nop => OP_NOP,
                StackOp::Push(a) => self.symbol_id(a),
                StackOp::Pop(a) => {
                    // generators must only offer pops that match the top
                    if label == BOTTOM || self.symbols[(label - 2) as usize] != *a {
                        return Err(PdaError::Generator(format!(
                            "pop of {a:?} offered for a different top"
                        )));
                    }
                    OP_POP
                }
            };
            self.rules.push(StoredRule { op, dst });
        }
        self.scratch = scratch;
        let end = self.rules.len() as u32;
        self.cache.insert((state, label), (start, end));
        Ok(start..end)
    }

    fn mid_node(&mut self, state: u32, sym: u32) -> u32 {
        if let Some(&n) = self.mid_nodes.get(&(state, sym)) {
            return n;
        }
        let n = self.new_node(None);
        self.mid_nodes.insert((state, sym), n);
        n
    }

    fn insert(&mut self, t: Trans) -> Option<u32> {
        let key = (t.from, t.label, t.to);
        let hash = self.hasher.hash_one(key);
        let trans = &self.trans;
        if self
            .rel
            .find(hash, |&i| {
                let u = trans.get(i);
                (u.from, u.label, u.to) == key
            })
            .is_some()
        {
            return None;
        }
        let idx = self.trans.len() as u32;
        self.trans.push(t);
        let (trans, hasher) = (&self.trans, &self.hasher);
        self.rel.insert_unique(hash, idx, |&i| {
            let u = trans.get(i);
            hasher.hash_one((u.from, u.label, u.to))
        });
        self.out[t.from as usize].push(idx);
        if self.first_out[t.from as usize].is_none() {
            self.first_out[t.from as usize] = Some(idx);
        }
        if t.label == EPS && !self.node_ctrl[t.from as usize].is_some_and(|c| self.blind[c as usize]) {
            self.eps_in[t.to as usize].push(idx);
        }
        Some(idx)
    }

    /// Records `t` and queues it unless it is already known.
    fn enqueue(&mut self, t: Trans) {
        if let Some(idx) = self.insert(t) {
            self.worklist.push_back(idx);
        }
    }

    fn run(mut self) -> Result<Saturation<P>, PdaError> {
        let init = self.pda.initial();
        let init_id = self.state_id(&init)?;
        let init_node = self.ctrl_node[init_id as usize];
        self.enqueue(Trans {
            from: init_node,
            label: BOTTOM,
            to: FINAL,
            origin: Origin::Initial,
        });

        while let Some(idx) = self.worklist.pop_front() {
            let t = self.trans.get(idx);
            let state = self.node_ctrl[t.from as usize].expect("worklist holds control transitions");
            if t.label != EPS {
                for r_id in self.rules_for(state, t.label)? {
                    let r = self.rules.get(r_id);
                    let dst_node = self.ctrl_node[r.dst as usize];
                    let origin = Origin::Step {
                        prev: idx,
                        rule: r_id,
                    };
                    match r.kind() {
                        RuleKind::Nop => self.enqueue(Trans {
                            from: dst_node,
                            label: t.label,
                            to: t.to,
                            origin,
                        }),
                        RuleKind::Pop => self.enqueue(Trans {
                            from: dst_node,
                            label: EPS,
                            to: t.to,
                            origin,
                        }),
                        RuleKind::Push(sym) => {
                            let mid = self.mid_node(r.dst, sym);
                            self.enqueue(Trans {
                                from: dst_node,
                                label: sym + 2,
                                to: mid,
                                origin: Origin::PushTop,
                            });
                            let below = Trans {
                                from: mid,
                                label: t.label,
                                to: t.to,
                                origin: Origin::Push {
                                    prev: idx,
                                    rule: r_id,
                                },
                            };
                            if let Some(step) = self.insert(below) {
                                for k in 0..self.eps_in[mid as usize].len() {
                                    let eps = self.eps_in[mid as usize][k];
                                    self.enqueue(Trans {
                                        from: self.trans.get(eps).from,
                                        label: t.label,
                                        to: t.to,
                                        origin: Origin::Combine { eps, step },
                                    });
                                }
                            }
                        }
                    }
                }
            } else if self.blind[state as usize] {
                // the rules act on the whole stack below the ε-transition
                for r_id in self.rules_for(state, BOTTOM)? {
                    let r = self.rules.get(r_id);
                    let label = match r.kind() {
                        RuleKind::Nop => EPS,
                        RuleKind::Push(sym) => sym + 2,
                        RuleKind::Pop => {
                            return Err(PdaError::Generator(format!(
                                "pop offered by {:?}, which ignores the top",
                                self.states[state as usize]
                            )))
                        }
                    };
                    self.enqueue(Trans {
                        from: self.ctrl_node[r.dst as usize],
                        label,
                        to: t.to,
                        origin: Origin::Step {
                            prev: idx,
                            rule: r_id,
                        },
                    });
                }
            } else {
                // targets of ε-transitions are never control nodes, so their
                // outgoing list does not grow here
                for k in 0..self.out[t.to as usize].len() {
                    let step = self.out[t.to as usize][k];
                    let next = self.trans.get(step);
                    if next.label == EPS {
                        continue;
                    }
                    self.enqueue(Trans {
                        from: t.from,
                        label: next.label,
                        to: next.to,
                        origin: Origin::Combine { eps: idx, step },
                    });
                }
            }
        }

        Ok(Saturation {
            states: self.states,
            symbols: self.symbols,
            rules: self.rules,
            ctrl_node: self.ctrl_node,
            trans: self.trans,
            node_ctrl: self.node_ctrl,
            first_out: self.first_out,
        })
    }
}

impl<P: PushdownSystem> Saturation<P> {
    pub fn run(pda: &P) -> Result<Self, PdaError> {
        let mut b = Builder {
            pda,
            state_ids: HashMap::new(),
            symbol_ids: HashMap::new(),
            states: Vec::new(),
            symbols: Vec::new(),
            rules: Chunks::new(),
            cache: HashMap::new(),
            ctrl_node: Vec::new(),
            node_ctrl: Vec::new(),
            blind: Vec::new(),
            mid_nodes: HashMap::new(),
            rel: HashTable::new(),
            hasher: DefaultHashBuilder::default(),
            trans: Chunks::new(),
            out: Vec::new(),
            eps_in: Vec::new(),
            first_out: Vec::new(),
            worklist: VecDeque::new(),
            scratch: Vec::new(),
        };
        let fin = b.new_node(None);
        debug_assert_eq!(fin, FINAL);
        b.run()
    }

    /// Every control state met during saturation that has a reachable configuration.
    pub fn reachable_states(&self) -> BTreeSet<P::State> {
        self.states
            .iter()
            .enumerate()
            .filter(|(i, _)| self.first_out[self.ctrl_node[*i] as usize].is_some())
            .map(|(_, s)| s.clone())
            .collect()
    }

    pub fn is_reachable(&self, target: &P::State) -> bool {
        self.state_index(target)
            .map(|i| self.first_out[self.ctrl_node[i] as usize].is_some())
            .unwrap_or(false)
    }

    fn state_index(&self, s: &P::State) -> Option<usize> {
        self.states.iter().position(|x| x == s)
    }

    /// Rule `r` as applied to transition `prev`.
    fn rule(&self, r: u32, prev: u32) -> PdaRule<P::State, P::Symbol> {
        let r = self.rules.get(r);
        let prev = self.trans.get(prev);
        let src = self.node_ctrl[prev.from as usize].expect("rules apply to control transitions");
        let op = match r.kind() {
            RuleKind::Nop => StackOp::Nop,
            RuleKind::Push(a) => StackOp::Push(self.symbols[a as usize].clone()),
            RuleKind::Pop => StackOp::Pop(self.symbols[(prev.label - 2) as usize].clone()),
        };
        PdaRule::new(
            self.states[src as usize].clone(),
            op,
            self.states[r.dst as usize].clone(),
        )
    }

    /// Symbols discovered during saturation.
    pub fn symbols(&self) -> &[P::Symbol] {
        &self.symbols
    }

    /// Control states discovered during saturation.
    pub fn states(&self) -> &[P::State] {
        &self.states
    }

    pub fn stats(&self) -> SaturationStats {
        SaturationStats {
            control_states: self.states.len(),
            symbols: self.symbols.len(),
            rules: self.rules.len(),
            transitions: self.trans.len(),
        }
    }

    /// A rule sequence from the initial configuration to a configuration in
    /// state `target`, if one exists.
    pub fn witness(&self, target: &P::State) -> Option<Witness<P::State, P::Symbol>> {
        let i = self.state_index(target)?;
        let t = self.first_out[self.ctrl_node[i] as usize]?;
        // chain of mid-node entries from the target transition down to FINAL
        let mut chain = vec![t];
        let mut node = self.trans.get(t).to;
        while node != FINAL {
            let entry = self.first_out[node as usize].expect("mid nodes have an outgoing transition");
            chain.push(entry);
            node = self.trans.get(entry).to;
        }
        let mut steps = Vec::new();
        for &t in chain.iter().rev() {
            self.expand(t, &mut steps);
        }
        Some(Witness { steps })
    }

    fn expand(&self, t: u32, steps: &mut Vec<PdaRule<P::State, P::Symbol>>) {
        enum Work {
            Trans(u32),
            Rule(u32, u32),
        }
        let mut work = vec![Work::Trans(t)];
        while let Some(w) = work.pop() {
            match w {
                Work::Rule(r, prev) => steps.push(self.rule(r, prev)),
                Work::Trans(t) => match self.trans.get(t).origin {
                    Origin::Initial | Origin::PushTop => {}
                    Origin::Step { prev, rule } | Origin::Push { prev, rule } => {
                        work.push(Work::Rule(rule, prev));
                        work.push(Work::Trans(prev));
                    }
                    Origin::Combine { eps, step } => {
                        work.push(Work::Trans(eps));
                        work.push(Work::Trans(step));
                    }
                },
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prose_pda() -> Pda<&'static str, char> {
        Pda::new(
            ["s1", "s2", "s3", "s4", "s5", "s6"],
            "s1",
            ['a', 'b'],
            vec![
                PdaRule::new("s1", StackOp::Push('a'), "s2"),
                PdaRule::new("s2", StackOp::Push('b'), "s3"),
                PdaRule::new("s3", StackOp::Pop('b'), "s4"),
                PdaRule::new("s3", StackOp::Nop, "s5"),
                PdaRule::new("s5", StackOp::Pop('a'), "s6"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn step_push_and_pop() {
        let p = prose_pda();
        let succ = step(&p, &PdaConfig::new("s1", vec![])).unwrap();
        assert_eq!(
            succ.into_iter().collect::<Vec<_>>(),
            vec![PdaConfig::new("s2", vec!['a'])]
        );
        let succ = step(&p, &PdaConfig::new("s3", vec!['b', 'a'])).unwrap();
        assert!(succ.contains(&PdaConfig::new("s4", vec!['a'])));
        assert!(succ.contains(&PdaConfig::new("s5", vec!['b', 'a'])));
        assert_eq!(succ.len(), 2);
    }

    #[test]
    fn pop_disabled_on_empty_stack() {
        let p = Pda::new(
            ["s", "t"],
            "s",
            ['a'],
            vec![PdaRule::new("s", StackOp::Pop('a'), "t")],
        )
        .unwrap();
        assert!(step(&p, &PdaConfig::new("s", vec![])).unwrap().is_empty());
    }

    #[test]
    fn step_on_unknown_state() {
        let p = prose_pda();
        assert!(matches!(
            step(&p, &PdaConfig::new("s9", vec![])),
            Err(PdaError::UndeclaredState(_))
        ));
    }

    #[test]
    fn undeclared_rule_endpoint_rejected() {
        let err = Pda::new(["s"], "s", ['a'], vec![PdaRule::new("s", StackOp::Nop, "t")]);
        assert!(matches!(err, Err(PdaError::UndeclaredState(_))));
        let err = Pda::new(
            ["s"],
            "s",
            ['a'],
            vec![PdaRule::new("s", StackOp::Push('z'), "s")],
        );
        assert!(matches!(err, Err(PdaError::UndeclaredSymbol(_))));
    }

    #[test]
    fn prose_pda_reachability() {
        let p = prose_pda();
        let reach = reachable_states(&p).unwrap();
        assert!(reach.contains("s4"));
        assert!(!reach.contains("s6"));
        assert_eq!(reach.len(), 5);
        let v = is_state_reachable(&p, &"s4").unwrap();
        let w = v.witness().unwrap();
        assert_eq!(w.len(), 3);
        let end = replay(&p, w).unwrap();
        assert_eq!(end, PdaConfig::new("s4", vec!['a']));
        assert_eq!(is_state_reachable(&p, &"s6").unwrap(), Verdict::Unreachable);
    }

    #[test]
    fn init_has_empty_witness() {
        let p = prose_pda();
        let v = is_state_reachable(&p, &"s1").unwrap();
        assert!(v.witness().unwrap().is_empty());
    }

    #[test]
    fn no_rules_only_init() {
        let p: Pda<u8, u8> = Pda::new([0, 1], 0, [], vec![]).unwrap();
        assert_eq!(
            reachable_states(&p).unwrap().into_iter().collect::<Vec<_>>(),
            vec![0]
        );
    }

    #[test]
    fn target_must_be_declared() {
        let p = prose_pda();
        assert!(is_state_reachable(&p, &"nope").is_err());
    }

    #[test]
    fn bounded_bfs_depths() {
        let p = prose_pda();
        let zero = bounded_bfs(&p, 0).unwrap();
        assert_eq!(
            zero.into_iter().collect::<Vec<_>>(),
            vec![PdaConfig::new("s1", vec![])]
        );
        let two = bounded_bfs(&p, 2).unwrap();
        assert!(two.contains(&PdaConfig::new("s3", vec!['b', 'a'])));
    }

    #[test]
    fn replay_failures() {
        let p = prose_pda();
        assert_eq!(
            replay(&p, &Witness { steps: vec![] }).unwrap(),
            PdaConfig::new("s1", vec![])
        );
        let w = Witness {
            steps: vec![
                PdaRule::new("s1", StackOp::Push('a'), "s2"),
                PdaRule::new("s2", StackOp::Push('b'), "s3"),
                PdaRule::new("s3", StackOp::Pop('b'), "s4"),
            ],
        };
        assert_eq!(replay(&p, &w).unwrap(), PdaConfig::new("s4", vec!['a']));

        let bad = Witness {
            steps: vec![PdaRule::new("s1", StackOp::Pop('a'), "s6")],
        };
        let err = replay(&p, &bad).unwrap_err();
        assert_eq!(err.step, 0);
        assert_eq!(err.reason, ReplayFailure::EmptyStack);

        let wrong_state = Witness {
            steps: vec![PdaRule::new("s5", StackOp::Pop('a'), "s6")],
        };
        assert_eq!(replay(&p, &wrong_state).unwrap_err().step, 0);

        let mismatch = Witness {
            steps: vec![
                PdaRule::new("s1", StackOp::Push('a'), "s2"),
                PdaRule::new("s2", StackOp::Push('b'), "s3"),
                PdaRule::new("s3", StackOp::Nop, "s5"),
                PdaRule::new("s5", StackOp::Pop('a'), "s6"),
            ],
        };
        let err = replay(&p, &mismatch).unwrap_err();
        assert_eq!(err.step, 3);
        assert!(matches!(err.reason, ReplayFailure::PopMismatch { .. }));
    }

    /// Counter gadget: state 1 swaps the top for the next letter through the
    /// top-ignoring state 2, state 3 pops back down.
    struct Swapper {
        blind: bool,
    }

    impl PushdownSystem for Swapper {
        type State = u8;
        type Symbol = u8;

        fn initial(&self) -> u8 {
            0
        }

        fn contains_state(&self, s: &u8) -> bool {
            *s < 5
        }

        fn rules(&self, s: &u8, top: Option<&u8>, out: &mut Vec<PdaRule<u8, u8>>) -> Result<(), PdaError> {
            match (*s, top) {
                (0, _) => out.push(PdaRule::new(0, StackOp::Push(0), 1)),
                (1, Some(&a)) if a < 3 => {
                    out.push(PdaRule::new(1, StackOp::Pop(a), 2));
                    out.push(PdaRule::new(1, StackOp::Push(a), 1));
                    out.push(PdaRule::new(1, StackOp::Nop, 3));
                }
                (2, _) => {
                    out.push(PdaRule::new(2, StackOp::Push(1), 1));
                    out.push(PdaRule::new(2, StackOp::Push(2), 1));
                }
                (3, Some(&2)) => out.push(PdaRule::new(3, StackOp::Pop(2), 4)),
                (3, Some(&a)) => out.push(PdaRule::new(3, StackOp::Pop(a), 3)),
                _ => {}
            }
            Ok(())
        }

        fn ignores_top(&self, s: &u8) -> bool {
            self.blind && *s == 2
        }
    }

    #[test]
    fn top_ignoring_states_keep_reachability_and_witnesses() {
        let plain = Saturation::run(&Swapper { blind: false }).unwrap();
        let blind = Saturation::run(&Swapper { blind: true }).unwrap();
        assert_eq!(plain.reachable_states(), blind.reachable_states());
        assert!(blind.is_reachable(&4));
        let sys = Swapper { blind: true };
        for s in blind.reachable_states() {
            let w = blind.witness(&s).unwrap();
            assert_eq!(replay(&sys, &w).unwrap().state, s);
        }
    }
}
