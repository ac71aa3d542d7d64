//! Reachability analysis for timed pushdown automata.
//!
//! A timed pushdown automaton is a pushdown automaton whose control carries a
//! finite set of real-valued clocks and whose stack symbols carry ages. Time
//! elapse increases every clock and every age. This crate decides control-state
//! reachability by building, on demand, an untimed pushdown system whose stack
//! alphabet is a finite set of regions, and running post* saturation on it.
//!
//! The crate is `no_std` and only needs `alloc`. Parsing, reporting and the CLI
//! live in the `tpda` crate.
//!
//! Module map:
//!
//! * [`pda`]: untimed pushdown systems, saturation, bounded BFS, witness replay.
//! * [`region`]: items, bounded values with ω, regions, rotation, guard checks.
//! * [`tpda`]: the timed model, concrete semantics and the grid oracle.
//! * [`translation`]: the symbolic pushdown system and the end-to-end check.

#![no_std]

extern crate alloc;

pub mod interval;
pub mod pda;
pub mod region;
pub mod tpda;
pub mod translation;

pub use interval::{Interval, IntervalError, Upper};
pub use pda::{
    PdaConfig, PdaError, PdaRule, PushdownSystem, ReplayError, Saturation, StackOp, Verdict, Witness,
};
pub use region::{Item, ItemBase, ItemValuation, Region, RegionError, Shape, Val};
pub use tpda::{ClockId, Op, StateId, SymbolId, Tpda, TpdaConfig, TpdaRule};
pub use translation::{check_reachability, SymbolicPda, SymbolicState, TranslateStats};
