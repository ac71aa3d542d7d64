//! The model description language.
//!
//! ```text
//! # comments run to the end of the line
//! tpda
//! states s1 s2 s3;
//! init s1;
//! clocks x;
//! alphabet a;
//! rule s1 -> s2 : push(a, [0:0]);
//! rule s2 -> s3 : test(x, [2:inf));
//! ```
//!
//! A `pda` model has no clocks and its stack operations take no interval:
//! `push(a)`, `pop(a)` and `nop`.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;
use tpda_core::interval::{Interval, IntervalError, Upper};
use tpda_core::pda::{Pda, PdaRule, StackOp};
use tpda_core::tpda::{ClockId, Op, StateId, SymbolId, Tpda, TpdaRule};

pub type NamedPda = Pda<String, String>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Model {
    Tpda(Tpda),
    Pda(NamedPda),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Lexical,
    Syntax,
    Semantic,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Lexical => "lexical error",
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Semantic => "semantic error",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind} at line {line}, column {col} near `{token}`: {message}")]
pub struct ParseError {
    pub kind: ErrorKind,
    pub line: usize,
    pub col: usize,
    pub token: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u32),
    Arrow,
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => f.write_str(s),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Arrow => f.write_str("->"),
            Tok::Punct(c) => write!(f, "{c}"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (ln, text) in src.lines().enumerate() {
        let text = text.split('#').next().unwrap_or("");
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            let col = text[..chars[i].0].chars().count() + 1;
            let at = |tok| Token {
                tok,
                line: ln + 1,
                col,
            };
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                out.push(at(Tok::Ident(chars[start..i].iter().map(|p| p.1).collect())));
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().map(|p| p.1).collect();
                let n = digits.parse().map_err(|_| ParseError {
                    kind: ErrorKind::Lexical,
                    line: ln + 1,
                    col,
                    token: digits.clone(),
                    message: "number out of range".into(),
                })?;
                out.push(at(Tok::Num(n)));
            } else if c == '-' && chars.get(i + 1).is_some_and(|p| p.1 == '>') {
                out.push(at(Tok::Arrow));
                i += 2;
            } else if ";:,()[]".contains(c) {
                out.push(at(Tok::Punct(c)));
                i += 1;
            } else {
                return Err(ParseError {
                    kind: ErrorKind::Lexical,
                    line: ln + 1,
                    col,
                    token: c.to_string(),
                    message: "unexpected character".into(),
                });
            }
        }
    }
    let line = src.lines().count().max(1);
    out.push(Token {
        tok: Tok::Eof,
        line,
        col: src.lines().last().map_or(1, |l| l.chars().count() + 1),
    });
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Header {
    Tpda,
    Pda,
}

#[derive(Clone, Debug)]
struct Name {
    text: String,
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
enum RawOp {
    Nop,
    Test(Name, Interval),
    Reset(Name, Interval),
    Push(Name, Option<Interval>),
    Pop(Name, Option<Interval>),
}

struct RawRule {
    src: Name,
    dst: Name,
    op: RawOp,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Token, kind: ErrorKind, message: impl Into<String>) -> ParseError {
        ParseError {
            kind,
            line: t.line,
            col: t.col,
            token: t.tok.to_string(),
            message: message.into(),
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        Self::error_at(self.peek(), ErrorKind::Syntax, message)
    }

    fn punct(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek().tok == Tok::Punct(c) {
            self.next();
            Ok(())
        } else {
            Err(self.syntax(format!("expected `{c}`")))
        }
    }

    fn name(&mut self) -> Result<Name, ParseError> {
        match self.peek().tok.clone() {
            Tok::Ident(text) => {
                let t = self.next();
                Ok(Name {
                    text,
                    line: t.line,
                    col: t.col,
                })
            }
            _ => Err(self.syntax("expected a name")),
        }
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        match self.peek().tok {
            Tok::Num(n) => {
                self.next();
                Ok(n)
            }
            _ => Err(self.syntax("expected a natural number")),
        }
    }

    /// Names up to the closing `;`.
    fn name_list(&mut self) -> Result<Vec<Name>, ParseError> {
        let mut out = Vec::new();
        while self.peek().tok != Tok::Punct(';') {
            out.push(self.name()?);
        }
        self.next();
        Ok(out)
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let open = self.peek().clone();
        let lo_closed = match open.tok {
            Tok::Punct('[') => true,
            Tok::Punct('(') => false,
            _ => return Err(self.syntax("expected `[` or `(` to start an interval")),
        };
        self.next();
        let lo = self.number()?;
        self.punct(':')?;
        let hi = match self.peek().tok.clone() {
            Tok::Num(n) => {
                self.next();
                Upper::Finite(n)
            }
            Tok::Ident(s) if s == "inf" => {
                self.next();
                Upper::Infinite
            }
            _ => return Err(self.syntax("expected a natural number or `inf`")),
        };
        let hi_closed = match self.peek().tok {
            Tok::Punct(']') => true,
            Tok::Punct(')') => false,
            _ => return Err(self.syntax("expected `]` or `)` to end an interval")),
        };
        self.next();
        Interval::new(lo, lo_closed, hi, hi_closed).map_err(|e| {
            let message = match e {
                IntervalError::Empty => "empty interval",
                IntervalError::ClosedInfinity => "`inf` needs an open bound `)`",
            };
            Self::error_at(&open, ErrorKind::Semantic, message)
        })
    }

    fn op(&mut self, header: Header) -> Result<RawOp, ParseError> {
        let kw = self.peek().clone();
        let word = match &kw.tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(self.syntax("expected an operation")),
        };
        self.next();
        if word == "nop" {
            return Ok(RawOp::Nop);
        }
        if !matches!(word.as_str(), "test" | "reset" | "push" | "pop") {
            return Err(Self::error_at(&kw, ErrorKind::Syntax, "unknown operation"));
        }
        if header == Header::Pda && matches!(word.as_str(), "test" | "reset") {
            return Err(Self::error_at(
                &kw,
                ErrorKind::Semantic,
                "pda models have no clocks",
            ));
        }
        self.punct('(')?;
        let arg = self.name()?;
        let iv = if self.peek().tok == Tok::Punct(',') {
            if header == Header::Pda {
                return Err(self.syntax("pda stack operations take no interval"));
            }
            self.next();
            Some(self.interval()?)
        } else if header == Header::Tpda {
            return Err(self.syntax("expected `,` and an interval"));
        } else {
            None
        };
        self.punct(')')?;
        Ok(match word.as_str() {
            "test" => RawOp::Test(arg, iv.unwrap_or_else(Interval::any)),
            "reset" => RawOp::Reset(arg, iv.unwrap_or_else(Interval::any)),
            "push" => RawOp::Push(arg, iv),
            _ => RawOp::Pop(arg, iv),
        })
    }
}

#[derive(Default)]
struct Decls {
    states: Option<Vec<Name>>,
    init: Option<Name>,
    clocks: Option<Vec<Name>>,
    alphabet: Option<Vec<Name>>,
    rules: Vec<RawRule>,
}

fn semantic(n: &Name, message: impl Into<String>) -> ParseError {
    ParseError {
        kind: ErrorKind::Semantic,
        line: n.line,
        col: n.col,
        token: n.text.clone(),
        message: message.into(),
    }
}

fn index(names: &[Name], n: &Name, what: &str) -> Result<u32, ParseError> {
    names
        .iter()
        .position(|d| d.text == n.text)
        .map(|i| i as u32)
        .ok_or_else(|| semantic(n, format!("undeclared {what}")))
}

fn no_duplicates(names: &[Name], what: &str) -> Result<(), ParseError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(&n.text) {
            return Err(semantic(n, format!("{what} declared twice")));
        }
    }
    Ok(())
}

pub fn parse_model(src: &str) -> Result<Model, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let header = match &p.peek().tok {
        Tok::Ident(s) if s == "tpda" => Header::Tpda,
        Tok::Ident(s) if s == "pda" => Header::Pda,
        _ => return Err(p.syntax("expected the header `tpda` or `pda`")),
    };
    p.next();
    let mut d = Decls::default();
    loop {
        let kw = p.peek().clone();
        let word = match &kw.tok {
            Tok::Eof => break,
            Tok::Ident(s) => s.clone(),
            _ => return Err(p.syntax("expected a declaration or `rule`")),
        };
        p.next();
        let twice = || Parser::error_at(&kw, ErrorKind::Semantic, format!("second `{word}` declaration"));
        match word.as_str() {
            "states" if d.states.is_none() => d.states = Some(p.name_list()?),
            "clocks" if header == Header::Pda => {
                return Err(Parser::error_at(
                    &kw,
                    ErrorKind::Semantic,
                    "pda models have no clocks",
                ))
            }
            "clocks" if d.clocks.is_none() => d.clocks = Some(p.name_list()?),
            "alphabet" if d.alphabet.is_none() => d.alphabet = Some(p.name_list()?),
            "init" if d.init.is_none() => {
                d.init = Some(p.name()?);
                p.punct(';')?;
            }
            "states" | "clocks" | "alphabet" | "init" => return Err(twice()),
            "rule" => {
                let src = p.name()?;
                if p.peek().tok != Tok::Arrow {
                    return Err(p.syntax("expected `->`"));
                }
                p.next();
                let dst = p.name()?;
                p.punct(':')?;
                let op = p.op(header)?;
                p.punct(';')?;
                d.rules.push(RawRule { src, dst, op });
            }
            _ => return Err(Parser::error_at(&kw, ErrorKind::Syntax, "unknown declaration")),
        }
    }
    resolve(header, d, &p.toks[p.toks.len() - 1])
}

fn resolve(header: Header, d: Decls, eof: &Token) -> Result<Model, ParseError> {
    let missing =
        |what: &str| Parser::error_at(eof, ErrorKind::Semantic, format!("missing `{what}` declaration"));
    let states = d.states.ok_or_else(|| missing("states"))?;
    let init = d.init.ok_or_else(|| missing("init"))?;
    let clocks = d.clocks.unwrap_or_default();
    let alphabet = d.alphabet.unwrap_or_default();
    no_duplicates(&states, "state")?;
    no_duplicates(&clocks, "clock")?;
    no_duplicates(&alphabet, "stack symbol")?;
    let init_id = index(&states, &init, "initial state")?;
    let text = |ns: &[Name]| ns.iter().map(|n| n.text.clone()).collect::<Vec<_>>();
    match header {
        Header::Tpda => {
            let mut rules = Vec::with_capacity(d.rules.len());
            for r in &d.rules {
                let src = StateId(index(&states, &r.src, "state")?);
                let dst = StateId(index(&states, &r.dst, "state")?);
                let clock = |n: &Name| index(&clocks, n, "clock").map(ClockId);
                let symbol = |n: &Name| index(&alphabet, n, "stack symbol").map(SymbolId);
                let op = match &r.op {
                    RawOp::Nop => Op::Nop,
                    RawOp::Test(x, iv) => Op::Test(clock(x)?, *iv),
                    RawOp::Reset(x, iv) => Op::Reset(clock(x)?, *iv),
                    RawOp::Push(a, iv) => Op::Push(symbol(a)?, iv.unwrap_or_else(Interval::any)),
                    RawOp::Pop(a, iv) => Op::Pop(symbol(a)?, iv.unwrap_or_else(Interval::any)),
                };
                rules.push(TpdaRule { src, op, dst });
            }
            Ok(Model::Tpda(Tpda {
                states: text(&states),
                init: StateId(init_id),
                clocks: text(&clocks),
                symbols: text(&alphabet),
                rules,
            }))
        }
        Header::Pda => {
            let mut rules = Vec::with_capacity(d.rules.len());
            for r in &d.rules {
                index(&states, &r.src, "state")?;
                index(&states, &r.dst, "state")?;
                let op = match &r.op {
                    RawOp::Push(a, _) => {
                        index(&alphabet, a, "stack symbol")?;
                        StackOp::Push(a.text.clone())
                    }
                    RawOp::Pop(a, _) => {
                        index(&alphabet, a, "stack symbol")?;
                        StackOp::Pop(a.text.clone())
                    }
                    _ => StackOp::Nop,
                };
                rules.push(PdaRule::new(r.src.text.clone(), op, r.dst.text.clone()));
            }
            let pda = Pda::new(text(&states), init.text.clone(), text(&alphabet), rules)
                .map_err(|e| semantic(&init, e.to_string()))?;
            Ok(Model::Pda(pda))
        }
    }
}

fn list(out: &mut String, kw: &str, names: impl IntoIterator<Item = impl fmt::Display>) {
    let names: Vec<String> = names.into_iter().map(|n| n.to_string()).collect();
    if !names.is_empty() {
        let _ = writeln!(out, "{kw} {};", names.join(" "));
    }
}

/// Canonical text of a model; [`parse_model`] reads it back unchanged.
pub fn render(model: &Model) -> String {
    let mut out = String::new();
    match model {
        Model::Tpda(t) => {
            out.push_str("tpda\n");
            list(&mut out, "states", &t.states);
            let _ = writeln!(out, "init {};", t.state_name(t.init));
            list(&mut out, "clocks", &t.clocks);
            list(&mut out, "alphabet", &t.symbols);
            for r in &t.rules {
                let _ = writeln!(out, "rule {};", t.rule_text(r));
            }
        }
        Model::Pda(p) => {
            out.push_str("pda\n");
            list(&mut out, "states", p.states());
            let _ = writeln!(out, "init {};", p.init());
            list(&mut out, "alphabet", p.alphabet());
            for r in p.rule_list() {
                let _ = writeln!(out, "rule {};", pda_rule_text(r));
            }
        }
    }
    out
}

pub fn pda_rule_text(r: &PdaRule<String, String>) -> String {
    let op = match &r.op {
        StackOp::Push(a) => format!("push({a})"),
        StackOp::Pop(a) => format!("pop({a})"),
        StackOp::Nop => "nop".into(),
    };
    format!("{} -> {} : {op}", r.src, r.dst)
}
