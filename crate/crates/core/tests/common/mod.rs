#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_rational::Ratio;
use rand::Rng;
use tpda_core::interval::{Interval, Upper};
use tpda_core::pda::Pda;
use tpda_core::tpda::TpdaBuilder;
use tpda_core::{ClockId, Item, ItemValuation, Op, PdaRule, Region, StackOp, StateId, SymbolId, Tpda, Val};

pub type Q = Ratio<u64>;

pub fn q(n: u64, d: u64) -> Q {
    Ratio::new(n, d)
}

/// Upper bounds for randomly generated models.
#[derive(Clone, Copy, Debug)]
pub struct ModelShape {
    pub states: u32,
    pub clocks: u32,
    pub symbols: u32,
    pub max_endpoint: u32,
    pub max_rules: usize,
    /// Every guard is `[0:inf)`.
    pub untimed: bool,
    /// No push or pop rules.
    pub stack_free: bool,
}

impl ModelShape {
    pub const SMALL: ModelShape = ModelShape {
        states: 4,
        clocks: 2,
        symbols: 2,
        max_endpoint: 2,
        max_rules: 6,
        untimed: false,
        stack_free: false,
    };
}

pub fn random_interval(rng: &mut impl Rng, max: u32) -> Interval {
    loop {
        let lo = rng.gen_range(0..=max);
        let lo_closed = rng.gen_bool(0.6);
        let (hi, hi_closed) = if rng.gen_bool(0.3) {
            (Upper::Infinite, false)
        } else {
            (Upper::Finite(rng.gen_range(lo..=max)), rng.gen_bool(0.6))
        };
        if let Ok(iv) = Interval::new(lo, lo_closed, hi, hi_closed) {
            return iv;
        }
    }
}

/// A random model within `shape`; state `s0` is initial.
pub fn random_tpda(rng: &mut impl Rng, shape: ModelShape) -> Tpda {
    let mut b = TpdaBuilder::new();
    let nstates = rng.gen_range(1..=shape.states);
    let nclocks = rng.gen_range(0..=shape.clocks);
    let nsyms = rng.gen_range(1..=shape.symbols.max(1));
    let states: Vec<StateId> = (0..nstates).map(|i| b.state(&format!("s{i}"))).collect();
    let clocks: Vec<ClockId> = (0..nclocks).map(|i| b.clock(&format!("x{i}"))).collect();
    let symbols: Vec<SymbolId> = (0..nsyms).map(|i| b.symbol(&format!("a{i}"))).collect();
    let nrules = rng.gen_range(1..=shape.max_rules);
    let guard = |rng: &mut _| {
        if shape.untimed {
            Interval::any()
        } else {
            random_interval(rng, shape.max_endpoint)
        }
    };
    for _ in 0..nrules {
        let src = states[rng.gen_range(0..states.len())];
        let dst = states[rng.gen_range(0..states.len())];
        let op = loop {
            let op = match rng.gen_range(0..5) {
                0 => Some(Op::Nop),
                1 if !clocks.is_empty() => Some(Op::Test(clocks[rng.gen_range(0..clocks.len())], guard(rng))),
                2 if !clocks.is_empty() => {
                    Some(Op::Reset(clocks[rng.gen_range(0..clocks.len())], guard(rng)))
                }
                3 if !shape.stack_free => {
                    Some(Op::Push(symbols[rng.gen_range(0..symbols.len())], guard(rng)))
                }
                4 if !shape.stack_free => Some(Op::Pop(symbols[rng.gen_range(0..symbols.len())], guard(rng))),
                _ => None,
            };
            if let Some(op) = op {
                break op;
            }
        };
        b.rule(src, op, dst);
    }
    b.build(states[0]).expect("generated model is valid")
}

pub fn describe(t: &Tpda) -> String {
    t.rules
        .iter()
        .map(|r| t.rule_text(r).to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// The untimed automaton underneath `t`: tests and resets become nops.
pub fn untimed_pda(t: &Tpda) -> Pda<StateId, SymbolId> {
    let rules = t
        .rules
        .iter()
        .map(|r| {
            let op = match r.op {
                Op::Push(a, _) => StackOp::Push(a),
                Op::Pop(a, _) => StackOp::Pop(a),
                _ => StackOp::Nop,
            };
            PdaRule::new(r.src, op, r.dst)
        })
        .collect();
    Pda::new(
        t.state_ids(),
        t.init,
        (0..t.symbols.len() as u32).map(SymbolId),
        rules,
    )
    .unwrap()
}

/// Region key of a concrete clock valuation: capped integral parts, which
/// clocks sit on an integer, and the rank of every positive fractional part.
fn region_key(vals: &[Q], cmax: u32) -> Vec<(Option<u64>, bool, usize)> {
    let capped = |v: &Q| {
        let n = v.to_integer();
        (n <= cmax as u64).then_some(n)
    };
    let fracs: BTreeSet<Q> = vals
        .iter()
        .filter(|v| capped(v).is_some())
        .map(|v| v.fract())
        .filter(|f| *f != q(0, 1))
        .collect();
    vals.iter()
        .map(|v| match capped(v) {
            None => (None, false, 0),
            Some(n) => {
                let f = v.fract();
                let rank = fracs.iter().position(|g| *g == f).map_or(0, |p| p + 1);
                (Some(n), f == q(0, 1), rank)
            }
        })
        .collect()
}

/// Values splitting `(0, 1)` around the given fractional parts: the parts
/// themselves and the midpoints between neighbours.
fn fraction_samples(fracs: &BTreeSet<Q>) -> Vec<Q> {
    let mut cuts = vec![q(0, 1)];
    cuts.extend(fracs.iter().copied());
    cuts.push(q(1, 1));
    let mut out: Vec<Q> = fracs.iter().copied().collect();
    for w in cuts.windows(2) {
        out.push((w[0] + w[1]) / q(2, 1));
    }
    out
}

/// States of a stack-free model reachable in its classical region graph,
/// explored through one concrete representative per region.
pub fn region_graph_reachable(t: &Tpda) -> BTreeSet<StateId> {
    assert!(t
        .rules
        .iter()
        .all(|r| !matches!(r.op, Op::Push(..) | Op::Pop(..))));
    let cmax = t.cmax();
    let n = t.clocks.len();
    let start = (t.init, vec![q(0, 1); n]);
    let mut seen = BTreeSet::new();
    seen.insert((start.0, region_key(&start.1, cmax)));
    let mut queue = VecDeque::from([start]);
    let mut reached = BTreeSet::from([t.init]);
    while let Some((s, vals)) = queue.pop_front() {
        let mut succ: Vec<(StateId, Vec<Q>)> = Vec::new();
        // delays up to the next integer of every clock, and the gaps between
        let live: BTreeSet<Q> = vals
            .iter()
            .filter(|v| v.to_integer() <= cmax as u64)
            .map(|v| q(1, 1) - v.fract())
            .collect();
        for d in fraction_samples(&live).into_iter().chain(live.iter().copied()) {
            if d > q(0, 1) {
                succ.push((s, vals.iter().map(|v| v + d).collect()));
            }
        }
        for (_, r) in t.rules_from(s) {
            match r.op {
                Op::Nop => succ.push((r.dst, vals.clone())),
                Op::Test(x, iv) => {
                    if iv.contains(&vals[x.0 as usize]) {
                        succ.push((r.dst, vals.clone()));
                    }
                }
                Op::Reset(x, iv) => {
                    let others: BTreeSet<Q> = vals
                        .iter()
                        .enumerate()
                        .filter(|(i, v)| *i != x.0 as usize && v.to_integer() <= cmax as u64)
                        .map(|(_, v)| v.fract())
                        .filter(|f| *f != q(0, 1))
                        .collect();
                    let samples = fraction_samples(&others);
                    for int in 0..=cmax as u64 + 1 {
                        let base = q(int, 1);
                        for v in std::iter::once(base).chain(samples.iter().map(|f| base + f)) {
                            if iv.contains(&v) {
                                let mut next = vals.clone();
                                next[x.0 as usize] = v;
                                succ.push((r.dst, next));
                            }
                        }
                    }
                }
                Op::Push(..) | Op::Pop(..) => unreachable!(),
            }
        }
        for (d, v) in succ {
            if seen.insert((d, region_key(&v, cmax))) {
                reached.insert(d);
                queue.push_back((d, v));
            }
        }
    }
    reached
}

/// A concrete valuation inside `r`: set `i > 0` of `k` positive sets gets the
/// fractional part `i / (k + 1)`; ω items get `cmax + 1`.
pub fn representative(r: &Region) -> ItemValuation {
    let k = r.sets().len() as u64 - 1;
    let mut v = BTreeMap::new();
    for (i, set) in r.sets().iter().enumerate() {
        for &(it, val) in set {
            let value = match val {
                Val::Omega => q(r.cmax() as u64 + 1, 1),
                Val::Int(n) => q(n as u64, 1) + q(i as u64, k + 1),
            };
            v.insert(it, value);
        }
    }
    v
}

/// Every region over `items` with constant `cmax`.
pub fn all_regions(items: &[Item], cmax: u32) -> Vec<Region> {
    let vals: Vec<Val> = (0..=cmax).map(Val::Int).chain([Val::Omega]).collect();
    let n = items.len();
    let mut out = BTreeSet::new();
    // class 0 is the zero-fraction set; classes 1..=k must all be used
    for k in 0..=n {
        let mut class = vec![0usize; n];
        loop {
            let used: BTreeSet<usize> = class.iter().copied().filter(|&c| c > 0).collect();
            if used.len() == k {
                let mut val_idx = vec![0usize; n];
                loop {
                    let mut sets = vec![Vec::new(); k + 1];
                    for i in 0..n {
                        sets[class[i]].push((items[i], vals[val_idx[i]]));
                    }
                    if let Ok(r) = Region::new(sets, cmax) {
                        out.insert(r);
                    }
                    if !bump(&mut val_idx, vals.len()) {
                        break;
                    }
                }
            }
            if !bump(&mut class, k + 1) {
                break;
            }
        }
    }
    out.into_iter().collect()
}

fn bump(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Regions obtained by giving `item` every grid value in `iv`, fine enough to
/// fall on and between all fractional parts of a representative of `r`.
pub fn placement_oracle(r: &Region, item: Item, iv: &Interval) -> BTreeSet<Region> {
    let mut v = representative(r);
    v.remove(&item);
    let den = 2 * r.sets().len() as u64;
    let top = (r.cmax() as u64 + 2) * den;
    (0..=top)
        .map(|k| q(k, den))
        .filter(|x| iv.contains(x))
        .map(|x| {
            let mut w = v.clone();
            w.insert(item, x);
            Region::of_valuation(&w, r.cmax())
        })
        .collect()
}

pub fn prose_pda() -> Pda<&'static str, char> {
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

/// `s1 -push a[0:0]-> s2 -test x[2:inf)-> s3 -pop a[0:0]-> s4`
pub fn blocked() -> Tpda {
    let mut b = TpdaBuilder::new();
    let [s1, s2, s3, s4] = ["s1", "s2", "s3", "s4"].map(|n| b.state(n));
    let x = b.clock("x");
    let a = b.symbol("a");
    b.rule(s1, Op::Push(a, Interval::point(0)), s2)
        .rule(s2, Op::Test(x, Interval::at_least(2)), s3)
        .rule(s3, Op::Pop(a, Interval::point(0)), s4);
    b.build(s1).unwrap()
}

/// Push `a` with age 1, let exactly one time unit pass, pop it at age 2.
pub fn one_push() -> Tpda {
    let mut b = TpdaBuilder::new();
    let [s0, s1, s2, s3] = ["s0", "s1", "s2", "s3"].map(|n| b.state(n));
    let x = b.clock("x");
    let a = b.symbol("a");
    b.rule(s0, Op::Push(a, Interval::point(1)), s1)
        .rule(s1, Op::Test(x, Interval::point(1)), s2)
        .rule(s2, Op::Pop(a, Interval::point(2)), s3);
    b.build(s0).unwrap()
}
