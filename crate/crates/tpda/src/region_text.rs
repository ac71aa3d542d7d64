//! Text form of regions: `{R:0, x:1} < {y:w}`.
//!
//! Sets are listed by increasing fractional part; the first holds the items
//! with zero fractional part and may be empty (`{}`). `R` is the reference
//! clock, a trailing `.` marks a shadow and `w` stands for ω.

use std::collections::BTreeSet;

use thiserror::Error;
use tpda_core::region::Names;
use tpda_core::{ClockId, Item, Region, SymbolId, Val};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RegionTextError {
    #[error("column {col}: {message}")]
    Syntax { col: usize, message: String },
    #[error("{0}")]
    Region(String),
}

/// Clock and symbol names met while parsing, in order of appearance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ItemNames {
    pub clocks: Vec<String>,
    pub symbols: Vec<String>,
}

impl Names for ItemNames {
    fn clock_name(&self, c: ClockId) -> &str {
        self.clocks.get(c.0 as usize).map_or("?", String::as_str)
    }

    fn symbol_name(&self, a: SymbolId) -> &str {
        self.symbols.get(a.0 as usize).map_or("?", String::as_str)
    }
}

fn intern(names: &mut Vec<String>, name: &str) -> u32 {
    match names.iter().position(|n| n == name) {
        Some(i) => i as u32,
        None => {
            names.push(name.to_string());
            names.len() as u32 - 1
        }
    }
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn fail<T>(&self, message: &str) -> Result<T, RegionTextError> {
        Err(RegionTextError::Syntax {
            col: self.pos + 1,
            message: message.to_string(),
        })
    }

    fn expect(&mut self, c: char) -> Result<(), RegionTextError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&format!("expected `{c}`"))
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_alphanumeric() || *c == '_')
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }
}

/// Parses a region. Names listed in `symbols` are stack symbols, every other
/// name is a clock. Values above `cmax` are rejected; when `cmax` is `None`
/// the largest integer in the text is used.
pub fn parse_region(
    text: &str,
    symbols: &BTreeSet<String>,
    cmax: Option<u32>,
) -> Result<(Region, ItemNames), RegionTextError> {
    let mut cur = Cursor {
        chars: text.chars().collect(),
        pos: 0,
    };
    let mut names = ItemNames::default();
    let mut sets = Vec::new();
    loop {
        cur.expect('{')?;
        let mut set = Vec::new();
        if cur.peek() == Some('}') {
            cur.pos += 1;
        } else {
            loop {
                let name = cur.word();
                if name.is_empty() {
                    return cur.fail("expected an item name");
                }
                let shadow = cur.peek() == Some('.');
                if shadow {
                    cur.pos += 1;
                }
                let base = if name == "R" {
                    Item::REF
                } else if symbols.contains(&name) {
                    Item::sym(SymbolId(intern(&mut names.symbols, &name)))
                } else {
                    Item::clock(ClockId(intern(&mut names.clocks, &name)))
                };
                let item = if shadow { base.shadowed() } else { base };
                cur.expect(':')?;
                let v = cur.word();
                let val = match v.as_str() {
                    "w" | "ω" => Val::Omega,
                    _ => match v.parse() {
                        Ok(n) => Val::Int(n),
                        Err(_) => return cur.fail("expected a natural number or `w`"),
                    },
                };
                set.push((item, val));
                match cur.peek() {
                    Some(',') => cur.pos += 1,
                    Some('}') => {
                        cur.pos += 1;
                        break;
                    }
                    _ => return cur.fail("expected `,` or `}`"),
                }
            }
        }
        sets.push(set);
        match cur.peek() {
            Some('<') => cur.pos += 1,
            None => break,
            Some(_) => return cur.fail("expected `<` or the end of the region"),
        }
    }
    let largest = sets
        .iter()
        .flatten()
        .filter_map(|(_, v)| match v {
            Val::Int(n) => Some(*n),
            Val::Omega => None,
        })
        .max()
        .unwrap_or(0);
    let region =
        Region::new(sets, cmax.unwrap_or(largest)).map_err(|e| RegionTextError::Region(e.to_string()))?;
    Ok((region, names))
}
