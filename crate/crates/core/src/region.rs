//! The region calculus.
//!
//! A region is a sequence of sets of `(item, value)` pairs. The first set holds
//! the items whose fractional part is zero (it may be empty); the remaining sets
//! are ordered by strictly increasing fractional part, and items sharing a set
//! share their fractional part. Values are integral parts capped at `cmax`:
//! anything beyond becomes [`Val::Omega`].
//!
//! Items past `cmax` have no observable fractional part. They are always
//! stored in the first set and take no part in the fractional ordering.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::interval::Interval;
use crate::tpda::{ClockId, SymbolId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItemBase {
    /// The reference clock.
    Ref,
    Clock(ClockId),
    Sym(SymbolId),
}

/// A plain item tracks a current value; a shadow item tracks the value its
/// plain counterpart has in the region below.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item {
    pub base: ItemBase,
    pub shadow: bool,
}

impl Item {
    pub const REF: Item = Item {
        base: ItemBase::Ref,
        shadow: false,
    };
    pub const REF_SHADOW: Item = Item {
        base: ItemBase::Ref,
        shadow: true,
    };

    pub fn clock(c: ClockId) -> Item {
        Item {
            base: ItemBase::Clock(c),
            shadow: false,
        }
    }

    pub fn sym(a: SymbolId) -> Item {
        Item {
            base: ItemBase::Sym(a),
            shadow: false,
        }
    }

    pub fn shadowed(self) -> Item {
        Item { shadow: true, ..self }
    }

    pub fn plain(self) -> Item {
        Item {
            shadow: false,
            ..self
        }
    }
}

/// Integral part, or ω for anything above `cmax`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Val {
    Int(u32),
    Omega,
}

impl Val {
    fn succ(self, cmax: u32) -> Val {
        match self {
            Val::Int(n) if n < cmax => Val::Int(n + 1),
            _ => Val::Omega,
        }
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Int(n) => write!(f, "{n}"),
            Val::Omega => f.write_str("w"),
        }
    }
}

pub type Entry = (Item, Val);

/// Concrete values for a set of items.
pub type ItemValuation = BTreeMap<Item, Ratio<u64>>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("a region needs at least one set")]
    NoSets,
    #[error("set {0} is empty; only the first set may be empty")]
    EmptySet(usize),
    #[error("item {0:?} occurs more than once")]
    DuplicateItem(Item),
    #[error("value {0} exceeds cmax {1}")]
    AboveCmax(u32, u32),
    #[error("item {0:?} does not occur in the region")]
    MissingItem(Item),
    #[error("the reference clock must sit in the first set to be pinned")]
    RefNotPinned,
    #[error("malformed region shape: {0}")]
    Shape(&'static str),
    #[error("regions do not agree on their shared items")]
    Misaligned,
}

/// Region shapes used on the symbolic stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// Plain clocks and the reference clock only.
    Bottom,
    /// One plain stack symbol, a shadow for every clock and for the reference
    /// clock, and a shadow of the symbol below when there is one.
    Stack {
        symbol: SymbolId,
        below: Option<SymbolId>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Region {
    sets: Vec<Vec<Entry>>,
    cmax: u32,
}

impl Region {
    /// Builds a region, sorting each set into canonical order.
    pub fn new(sets: Vec<Vec<Entry>>, cmax: u32) -> Result<Region, RegionError> {
        if sets.is_empty() {
            return Err(RegionError::NoSets);
        }
        let mut seen = BTreeSet::new();
        for (i, set) in sets.iter().enumerate() {
            if i > 0 && set.is_empty() {
                return Err(RegionError::EmptySet(i));
            }
            for &(item, val) in set {
                if !seen.insert(item) {
                    return Err(RegionError::DuplicateItem(item));
                }
                if let Val::Int(n) = val {
                    if n > cmax {
                        return Err(RegionError::AboveCmax(n, cmax));
                    }
                }
            }
        }
        Ok(Self::normalized(sets, cmax))
    }

    /// Moves ω items into the first set, drops empty sets past the first and
    /// sorts every set.
    pub(crate) fn normalized(mut sets: Vec<Vec<Entry>>, cmax: u32) -> Region {
        if sets.is_empty() {
            sets.push(Vec::new());
        }
        let mut out: Vec<Vec<Entry>> = Vec::with_capacity(sets.len());
        let mut omega = Vec::new();
        for (i, mut set) in sets.into_iter().enumerate() {
            if i > 0 {
                set.retain(|&e| {
                    if e.1 == Val::Omega {
                        omega.push(e);
                        false
                    } else {
                        true
                    }
                });
                if set.is_empty() {
                    continue;
                }
            }
            out.push(set);
        }
        out[0].append(&mut omega);
        for set in &mut out {
            set.sort_unstable();
        }
        Region { sets: out, cmax }
    }

    pub fn sets(&self) -> &[Vec<Entry>] {
        &self.sets
    }

    pub fn cmax(&self) -> u32 {
        self.cmax
    }

    pub fn items(&self) -> impl Iterator<Item = &Entry> + '_ {
        self.sets.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Set index and value of `item`.
    pub fn locate(&self, item: Item) -> Option<(usize, Val)> {
        self.sets
            .iter()
            .enumerate()
            .find_map(|(i, set)| set.iter().find(|(it, _)| *it == item).map(|&(_, v)| (i, v)))
    }

    pub fn contains(&self, item: Item) -> bool {
        self.locate(item).is_some()
    }

    /// Abstraction of a concrete valuation.
    pub fn of_valuation(v: &ItemValuation, cmax: u32) -> Region {
        let mut zero = Vec::new();
        let mut by_frac: BTreeMap<Ratio<u64>, Vec<Entry>> = BTreeMap::new();
        for (&item, value) in v {
            let int = value.to_integer();
            let frac = value - Ratio::from_integer(int);
            let val = match int.to_u32() {
                Some(n) if n <= cmax => Val::Int(n),
                _ => Val::Omega,
            };
            if frac == Ratio::from_integer(0) {
                zero.push((item, val));
            } else {
                by_frac.entry(frac).or_default().push((item, val));
            }
        }
        let mut sets = vec![zero];
        sets.extend(by_frac.into_values());
        Region::normalized(sets, cmax)
    }

    /// One step of time passage.
    ///
    /// With `move_ref` unset the plain reference clock stays put in the first
    /// set while every other item ages.
    pub fn rotate(&self, move_ref: bool) -> Result<Region, RegionError> {
        let pinned = |it: &Item| !move_ref && *it == Item::REF;
        if !move_ref {
            match self.locate(Item::REF) {
                None => return Err(RegionError::MissingItem(Item::REF)),
                Some((0, _)) => {}
                Some(_) => return Err(RegionError::RefNotPinned),
            }
        }
        // ω items have no fractional part to track
        let (stay, moving): (Vec<Entry>, Vec<Entry>) = self.sets[0]
            .iter()
            .partition(|(it, v)| pinned(it) || *v == Val::Omega);
        let mut sets = Vec::with_capacity(self.sets.len() + 1);
        if !moving.is_empty() {
            // zero fractions become the smallest positive fraction
            sets.push(stay);
            sets.push(moving);
            sets.extend(self.sets[1..].iter().cloned());
        } else if self.sets.len() > 1 {
            // the largest fractions reach their next integral value
            let last = self.sets.len() - 1;
            let mut first = stay;
            first.extend(self.sets[last].iter().map(|&(it, v)| (it, v.succ(self.cmax))));
            sets.push(first);
            sets.extend(self.sets[1..last].iter().cloned());
        } else {
            return Ok(self.clone());
        }
        Ok(Region::normalized(sets, self.cmax))
    }

    /// Rotations of `self` in order, stopping before the first repetition.
    pub fn orbit(&self, move_ref: bool) -> Result<Vec<Region>, RegionError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut cur = self.clone();
        while seen.insert(cur.clone()) {
            let next = cur.rotate(move_ref)?;
            out.push(cur);
            cur = next;
        }
        Ok(out)
    }

    /// All regions reachable by time passage with the reference clock pinned.
    pub fn time_successors(&self) -> Result<Vec<Region>, RegionError> {
        self.orbit(false)
    }

    /// Whether every value the item may take in this region lies in `iv`.
    pub fn satisfies(&self, item: Item, iv: &Interval) -> Result<bool, RegionError> {
        let (set, val) = self.locate(item).ok_or(RegionError::MissingItem(item))?;
        Ok(value_satisfies(set == 0, val, iv, self.cmax))
    }

    /// Every region obtained by giving `item` a fresh value inside `iv`. An
    /// absent item is inserted.
    pub fn reset_insert(&self, item: Item, iv: &Interval) -> Result<Vec<Region>, RegionError> {
        let sets: Vec<Vec<Entry>> = self
            .sets
            .iter()
            .map(|s| s.iter().copied().filter(|(it, _)| *it != item).collect())
            .collect();
        let base = Region::normalized(sets, self.cmax);
        Ok(base.insert_all(item, iv))
    }

    /// Every region obtained by adding the absent `item` with a value in `iv`.
    pub(crate) fn insert_all(&self, item: Item, iv: &Interval) -> Vec<Region> {
        let cmax = self.cmax;
        let mut at_zero: Vec<Val> = (0..=cmax).filter(|&n| iv.contains_int(n)).map(Val::Int).collect();
        let inside: Vec<Val> = (0..=cmax)
            .filter(|&n| iv.contains_open_unit(n))
            .map(Val::Int)
            .collect();
        if iv.contains_all_above(cmax) {
            at_zero.push(Val::Omega);
        }
        let mut out = Vec::new();
        for &v in &at_zero {
            let mut sets = self.sets.clone();
            sets[0].push((item, v));
            out.push(Region::normalized(sets, cmax));
        }
        for &v in &inside {
            // joining an existing positive set
            for j in 1..self.sets.len() {
                let mut sets = self.sets.clone();
                sets[j].push((item, v));
                out.push(Region::normalized(sets, cmax));
            }
            // alone, right after set `g`
            for g in 0..self.sets.len() {
                let mut sets = self.sets.clone();
                sets.insert(g + 1, vec![(item, v)]);
                out.push(Region::normalized(sets, cmax));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// The sets restricted to the items accepted by `keep`, renamed by it.
    /// The first set is kept even when it ends up empty.
    pub(crate) fn project(&self, mut keep: impl FnMut(Item) -> Option<Item>) -> Region {
        let sets = self
            .sets
            .iter()
            .map(|s| s.iter().filter_map(|&(it, v)| keep(it).map(|k| (k, v))).collect())
            .collect();
        Region::normalized(sets, self.cmax)
    }

    /// Classifies the region as a bottom or stack region over `clocks` clocks.
    pub fn shape(&self, clocks: u32) -> Result<Shape, RegionError> {
        let mut plain_clocks = 0;
        let mut shadow_clocks = 0;
        let mut refs = 0;
        let mut ref_shadow = 0;
        let mut syms = Vec::new();
        let mut shadow_syms = Vec::new();
        for &(it, _) in self.items() {
            match (it.base, it.shadow) {
                (ItemBase::Ref, false) => refs += 1,
                (ItemBase::Ref, true) => ref_shadow += 1,
                (ItemBase::Clock(c), s) => {
                    if c.0 >= clocks {
                        return Err(RegionError::Shape("undeclared clock"));
                    }
                    if s {
                        shadow_clocks += 1
                    } else {
                        plain_clocks += 1
                    }
                }
                (ItemBase::Sym(a), false) => syms.push(a),
                (ItemBase::Sym(a), true) => shadow_syms.push(a),
            }
        }
        if refs != 1 {
            return Err(RegionError::Shape("missing reference clock"));
        }
        if plain_clocks != clocks {
            return Err(RegionError::Shape("missing plain clock"));
        }
        match syms.as_slice() {
            [] => {
                if shadow_clocks + ref_shadow + shadow_syms.len() as u32 > 0 {
                    return Err(RegionError::Shape("bottom region with shadow items"));
                }
                Ok(Shape::Bottom)
            }
            [symbol] => {
                if shadow_clocks != clocks || ref_shadow != 1 {
                    return Err(RegionError::Shape("stack region without full shadows"));
                }
                match shadow_syms.as_slice() {
                    [] => Ok(Shape::Stack {
                        symbol: *symbol,
                        below: None,
                    }),
                    [b] => Ok(Shape::Stack {
                        symbol: *symbol,
                        below: Some(*b),
                    }),
                    _ => Err(RegionError::Shape("several shadow stack symbols")),
                }
            }
            _ => Err(RegionError::Shape("several plain stack symbols")),
        }
    }

    /// Plain stack symbol, if any.
    pub fn symbol(&self) -> Option<SymbolId> {
        self.items().find_map(|(it, _)| match (it.base, it.shadow) {
            (ItemBase::Sym(a), false) => Some(a),
            _ => None,
        })
    }

    /// Renders the region with names from `names`.
    pub fn display<'a, N: Names + ?Sized>(&'a self, names: &'a N) -> RegionDisplay<'a, N> {
        RegionDisplay { region: self, names }
    }
}

pub(crate) fn value_satisfies(zero_frac: bool, val: Val, iv: &Interval, cmax: u32) -> bool {
    match (zero_frac, val) {
        (true, Val::Int(n)) => iv.contains_int(n),
        (false, Val::Int(n)) => iv.contains_open_unit(n),
        (_, Val::Omega) => iv.contains_all_above(cmax),
    }
}

/// Names for clocks and stack symbols.
pub trait Names {
    fn clock_name(&self, c: ClockId) -> &str;
    fn symbol_name(&self, a: SymbolId) -> &str;
}

pub struct RegionDisplay<'a, N: ?Sized> {
    region: &'a Region,
    names: &'a N,
}

impl<N: Names + ?Sized> fmt::Display for RegionDisplay<'_, N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, set) in self.region.sets.iter().enumerate() {
            if i > 0 {
                f.write_str(" < ")?;
            }
            f.write_str("{")?;
            for (j, (it, v)) in set.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                match it.base {
                    ItemBase::Ref => f.write_str("R")?,
                    ItemBase::Clock(c) => f.write_str(self.names.clock_name(c))?,
                    ItemBase::Sym(a) => f.write_str(self.names.symbol_name(a))?,
                }
                if it.shadow {
                    f.write_str(".")?;
                }
                write!(f, ":{v}")?;
            }
            f.write_str("}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::Upper;
    use alloc::string::{String, ToString};

    struct Plain;

    impl Names for Plain {
        fn clock_name(&self, c: ClockId) -> &str {
            ["x", "y", "z", "x1", "x2", "x3", "x4", "x5", "x6", "x7"][c.0 as usize]
        }
        fn symbol_name(&self, a: SymbolId) -> &str {
            ["a", "b", "c"][a.0 as usize]
        }
    }

    fn x() -> Item {
        Item::clock(ClockId(0))
    }
    fn y() -> Item {
        Item::clock(ClockId(1))
    }
    fn show(r: &Region) -> String {
        r.display(&Plain).to_string()
    }
    fn q(n: u64, d: u64) -> Ratio<u64> {
        Ratio::new(n, d)
    }

    #[test]
    fn initial_style_valuation() {
        let v: ItemValuation = [(Item::REF, q(0, 1)), (x(), q(0, 1)), (y(), q(0, 1))].into();
        assert_eq!(show(&Region::of_valuation(&v, 7)), "{R:0, x:0, y:0}");
    }

    #[test]
    fn valuation_grouping() {
        let [x1, x2, x3, x4] = [3, 4, 5, 6].map(|i| Item::clock(ClockId(i)));
        let v: ItemValuation = [(x1, q(0, 1)), (x2, q(2, 1)), (x3, q(13, 10)), (x4, q(5, 2))].into();
        assert_eq!(
            show(&Region::of_valuation(&v, 7)),
            "{x1:0, x2:2} < {x3:1} < {x4:2}"
        );
    }

    #[test]
    fn valuation_caps_to_omega() {
        let v: ItemValuation = [(x(), q(91, 10))].into();
        assert_eq!(show(&Region::of_valuation(&v, 7)), "{x:w}");
        let moved = Region::new(vec![vec![], vec![(x(), Val::Omega)]], 7).unwrap();
        assert_eq!(moved, Region::of_valuation(&v, 7));
    }

    #[test]
    fn rotation_reaches_next_integers() {
        let [x6, x7] = [8, 9].map(|i| Item::clock(ClockId(i)));
        let r = Region::new(vec![vec![], vec![(x6, Val::Int(3)), (x7, Val::Int(0))]], 7).unwrap();
        assert_eq!(show(&r.rotate(true).unwrap()), "{x6:4, x7:1}");
    }

    #[test]
    fn pinned_rotation_keeps_ref() {
        let r = Region::new(vec![vec![(Item::REF, Val::Int(0)), (x(), Val::Int(2))]], 7).unwrap();
        assert_eq!(show(&r.rotate(false).unwrap()), "{R:0} < {x:2}");
        let bare = Region::new(vec![vec![(x(), Val::Int(2))]], 7).unwrap();
        assert_eq!(bare.rotate(false), Err(RegionError::MissingItem(Item::REF)));
    }

    #[test]
    fn rotation_caps_at_cmax() {
        let r = Region::new(vec![vec![], vec![(x(), Val::Int(7))]], 7).unwrap();
        assert_eq!(show(&r.rotate(true).unwrap()), "{x:w}");
    }

    #[test]
    fn omega_cycle() {
        let r = Region::new(vec![vec![(Item::REF, Val::Int(0)), (x(), Val::Omega)]], 7).unwrap();
        let succ = r.time_successors().unwrap();
        assert_eq!(succ.iter().map(show).collect::<Vec<_>>(), ["{R:0, x:w}"]);
        let y1 = Region::new(
            vec![vec![
                (Item::REF, Val::Int(0)),
                (x(), Val::Omega),
                (y(), Val::Int(1)),
            ]],
            1,
        )
        .unwrap();
        let succ = y1.time_successors().unwrap();
        assert_eq!(
            succ.iter().map(show).collect::<Vec<_>>(),
            ["{R:0, x:w, y:1}", "{R:0, x:w} < {y:1}", "{R:0, x:w, y:w}"]
        );
        let only_ref = Region::new(vec![vec![(Item::REF, Val::Int(0))]], 7).unwrap();
        assert_eq!(only_ref.time_successors().unwrap(), vec![only_ref.clone()]);
    }

    #[test]
    fn guard_checks() {
        let iv13 = Interval::closed(1, 3).unwrap();
        let r = Region::new(vec![vec![(Item::REF, Val::Int(0)), (x(), Val::Int(1))]], 7).unwrap();
        assert!(r.satisfies(x(), &iv13).unwrap());
        let r = Region::new(vec![vec![(Item::REF, Val::Int(0))], vec![(x(), Val::Int(3))]], 7).unwrap();
        assert!(!r.satisfies(x(), &iv13).unwrap());
        let r = Region::new(vec![vec![(Item::REF, Val::Int(0)), (y(), Val::Int(2))]], 7).unwrap();
        assert!(r.satisfies(y(), &Interval::greater_than(1)).unwrap());
        assert!(r.satisfies(x(), &iv13).is_err());
        let w = Region::new(vec![vec![(Item::REF, Val::Int(0)), (x(), Val::Omega)]], 7).unwrap();
        assert!(!w.satisfies(x(), &iv13).unwrap());
        assert!(w.satisfies(x(), &Interval::greater_than(1)).unwrap());
    }

    #[test]
    fn resets() {
        let r = Region::new(vec![vec![(Item::REF, Val::Int(0)), (x(), Val::Int(0))]], 7).unwrap();
        assert_eq!(r.reset_insert(x(), &Interval::point(0)).unwrap(), vec![r.clone()]);
        let one = r.reset_insert(x(), &Interval::point(1)).unwrap();
        assert_eq!(one.iter().map(show).collect::<Vec<_>>(), ["{R:0, x:1}"]);
        let added = r.reset_insert(y(), &Interval::point(1)).unwrap();
        assert_eq!(added.iter().map(show).collect::<Vec<_>>(), ["{R:0, x:0, y:1}"]);
    }

    #[test]
    fn omega_resets() {
        let r = Region::new(vec![vec![(Item::REF, Val::Int(0)), (x(), Val::Int(0))]], 1).unwrap();
        let iv = Interval::new(1, false, Upper::Infinite, false).unwrap();
        let all: Vec<String> = r.reset_insert(x(), &iv).unwrap().iter().map(show).collect();
        assert_eq!(all, ["{R:0} < {x:1}", "{R:0, x:w}"]);
    }

    #[test]
    fn constructor_rejects_malformed() {
        assert_eq!(Region::new(vec![], 1), Err(RegionError::NoSets));
        assert_eq!(
            Region::new(vec![vec![], vec![]], 1),
            Err(RegionError::EmptySet(1))
        );
        assert_eq!(
            Region::new(vec![vec![(x(), Val::Int(0))], vec![(x(), Val::Int(0))]], 1),
            Err(RegionError::DuplicateItem(x()))
        );
        assert_eq!(
            Region::new(vec![vec![(x(), Val::Int(3))]], 1),
            Err(RegionError::AboveCmax(3, 1))
        );
    }

    #[test]
    fn shapes() {
        let bottom = Region::new(vec![vec![(Item::REF, Val::Int(0)), (x(), Val::Int(0))]], 1).unwrap();
        assert_eq!(bottom.shape(1), Ok(Shape::Bottom));
        assert!(bottom.shape(2).is_err());
        let a = Item::sym(SymbolId(0));
        let stack = Region::new(
            vec![vec![
                (Item::REF, Val::Int(0)),
                (Item::REF_SHADOW, Val::Int(0)),
                (x(), Val::Int(0)),
                (x().shadowed(), Val::Int(0)),
                (a, Val::Int(1)),
            ]],
            1,
        )
        .unwrap();
        assert_eq!(
            stack.shape(1),
            Ok(Shape::Stack {
                symbol: SymbolId(0),
                below: None
            })
        );
    }
}
