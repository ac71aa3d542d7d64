use proptest::prelude::*;
use tpda::dsl::{parse_model, render, Model};
use tpda_core::interval::{Interval, Upper};
use tpda_core::pda::{Pda, PdaRule, StackOp};
use tpda_core::{ClockId, Op, StateId, SymbolId, Tpda, TpdaRule};

fn interval() -> impl Strategy<Value = Interval> {
    (0u32..6, any::<bool>(), prop::option::of(0u32..6), any::<bool>()).prop_filter_map(
        "empty interval",
        |(lo, lc, hi, hc)| match hi {
            None => Interval::new(lo, lc, Upper::Infinite, false).ok(),
            Some(h) => Interval::new(lo, lc, Upper::Finite(h), hc).ok(),
        },
    )
}

fn names(prefix: &'static str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn tpda_model() -> impl Strategy<Value = Tpda> {
    (1usize..5, 0usize..3, 0usize..3).prop_flat_map(|(ns, nc, na)| {
        let op = prop_oneof![
            Just(None),
            (0..nc.max(1) as u32, interval(), 0..4u8).prop_map(move |(i, iv, k)| {
                match k {
                    0 if nc > 0 => Some(Op::Test(ClockId(i), iv)),
                    1 if nc > 0 => Some(Op::Reset(ClockId(i), iv)),
                    2 if na > 0 => Some(Op::Push(SymbolId(i.min(na as u32 - 1)), iv)),
                    3 if na > 0 => Some(Op::Pop(SymbolId(i.min(na as u32 - 1)), iv)),
                    _ => None,
                }
            }),
        ];
        let rule = (0..ns as u32, op, 0..ns as u32).prop_map(|(s, op, d)| TpdaRule {
            src: StateId(s),
            op: op.unwrap_or(Op::Nop),
            dst: StateId(d),
        });
        (prop::collection::vec(rule, 0..8), 0..ns as u32).prop_map(move |(rules, init)| Tpda {
            states: names("s", ns),
            init: StateId(init),
            clocks: names("x", nc),
            symbols: names("a", na),
            rules,
        })
    })
}

fn pda_model() -> impl Strategy<Value = Pda<String, String>> {
    let op = (0u8..3, 0usize..2).prop_map(|(k, a)| match k {
        0 => StackOp::Push(format!("a{a}")),
        1 => StackOp::Pop(format!("a{a}")),
        _ => StackOp::Nop,
    });
    let rule =
        (0usize..3, op, 0usize..3).prop_map(|(s, op, d)| PdaRule::new(format!("p{s}"), op, format!("p{d}")));
    prop::collection::vec(rule, 0..6)
        .prop_map(|rules| Pda::new(names("p", 3), "p0".to_string(), names("a", 2), rules).unwrap())
}

proptest! {
    #[test]
    fn tpda_round_trip(t in tpda_model()) {
        let m = Model::Tpda(t);
        prop_assert_eq!(parse_model(&render(&m)).unwrap(), m);
    }

    #[test]
    fn pda_round_trip(p in pda_model()) {
        let m = Model::Pda(p);
        prop_assert_eq!(parse_model(&render(&m)).unwrap(), m);
    }
}
