//! The textual model format.
//!
//! ```text
//! system {
//!   domain = [x, y]
//!   init = x
//!   leader {
//!     init = q0
//!     final = [q0]
//!     q0 -> q1 : ?y
//!     q1 -> q0 : !x
//!   }
//!   contributor {
//!     init = c0
//!     c0 -> c1 : !y
//!     c1 -> c0 : ?x
//!   }
//! }
//! ```
//!
//! Whitespace is insignificant and `#` starts a line comment. A block may
//! declare `states = [...]` to fix the state numbering; otherwise states are
//! numbered by first appearance, starting with `init`. The serializer always
//! writes the `states` line so isolated states survive a roundtrip.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Automaton, MemOp, ModelError, StateId, System, Transition};
use crate::bits::BitSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:{col}: {message}")]
    Semantic {
        line: usize,
        col: usize,
        message: String,
    },
}

impl ParseError {
    /// 1-based `(line, column)` of the diagnostic.
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. } | ParseError::Semantic { line, col, .. } => {
                (*line, *col)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    Comma,
    Arrow,
    Colon,
    Bang,
    Question,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Question => "`?`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '.'
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '=' => Some(Tok::Eq),
            ',' => Some(Tok::Comma),
            ':' => Some(Tok::Colon),
            '!' => Some(Tok::Bang),
            '?' => Some(Tok::Question),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            col += 1;
            out.push((tok, pos));
            continue;
        }
        if c == '-' {
            chars.next();
            col += 1;
            if chars.peek() == Some(&'>') {
                chars.next();
                col += 1;
                out.push((Tok::Arrow, pos));
                continue;
            }
            return Err(ParseError::Syntax {
                line: pos.line,
                col: pos.col,
                message: "expected `->`".into(),
            });
        }
        if is_ident_char(c) {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                s.push(c);
                chars.next();
                col += 1;
            }
            out.push((Tok::Ident(s), pos));
            continue;
        }
        return Err(ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message: format!("unexpected character {c:?}"),
        });
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[derive(Debug, Clone)]
struct Name {
    text: String,
    pos: Pos,
}

#[derive(Debug, Clone)]
enum RawOp {
    Eps,
    Read(Name),
    Write(Name),
}

#[derive(Debug, Default)]
struct RawBlock {
    pos: Option<Pos>,
    states: Option<Vec<Name>>,
    init: Option<Name>,
    finals: Option<Vec<Name>>,
    transitions: Vec<(Name, RawOp, Name)>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let pos = self.pos();
        Err(ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            ))
        }
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(text) => {
                let pos = self.bump().1;
                Ok(Name { text, pos })
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => Ok(self.bump().1),
            other => {
                let msg = format!("expected `{kw}`, found {}", other.describe());
                self.error(msg)
            }
        }
    }

    fn ident_list(&mut self) -> Result<Vec<Name>, ParseError> {
        self.expect(Tok::LBracket)?;
        let mut out = Vec::new();
        if *self.peek() == Tok::RBracket {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RBracket => {
                    self.bump();
                    return Ok(out);
                }
                other => {
                    let msg = format!("expected `,` or `]`, found {}", other.describe());
                    return self.error(msg);
                }
            }
        }
    }

    fn op(&mut self) -> Result<RawOp, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(RawOp::Write(self.ident()?))
            }
            Tok::Question => {
                self.bump();
                Ok(RawOp::Read(self.ident()?))
            }
            Tok::Ident(s) if s == "eps" => {
                self.bump();
                Ok(RawOp::Eps)
            }
            other => self.error(format!(
                "expected `!sym`, `?sym` or `eps`, found {}",
                other.describe()
            )),
        }
    }

    fn duplicate<T>(&self, pos: Pos, what: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            message: format!("duplicate `{what}`"),
        })
    }

    fn block(&mut self, is_leader: bool) -> Result<RawBlock, ParseError> {
        let mut b = RawBlock {
            pos: Some(self.expect(Tok::LBrace)?),
            ..RawBlock::default()
        };
        loop {
            match (self.peek().clone(), self.peek2().clone()) {
                (Tok::RBrace, _) => {
                    self.bump();
                    return Ok(b);
                }
                (Tok::Ident(kw), Tok::Eq) => {
                    let pos = self.bump().1;
                    self.bump();
                    match kw.as_str() {
                        "init" => {
                            if b.init.is_some() {
                                return self.duplicate(pos, "init");
                            }
                            b.init = Some(self.ident()?);
                        }
                        "states" => {
                            if b.states.is_some() {
                                return self.duplicate(pos, "states");
                            }
                            b.states = Some(self.ident_list()?);
                        }
                        "final" if is_leader => {
                            if b.finals.is_some() {
                                return self.duplicate(pos, "final");
                            }
                            b.finals = Some(self.ident_list()?);
                        }
                        "final" => {
                            return Err(ParseError::Syntax {
                                line: pos.line,
                                col: pos.col,
                                message: "`final` is only allowed in the leader block".into(),
                            })
                        }
                        other => {
                            return Err(ParseError::Syntax {
                                line: pos.line,
                                col: pos.col,
                                message: format!("unknown setting `{other}`"),
                            })
                        }
                    }
                }
                (Tok::Ident(_), _) => {
                    let from = self.ident()?;
                    self.expect(Tok::Arrow)?;
                    let to = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let op = self.op()?;
                    b.transitions.push((from, op, to));
                }
                (other, _) => {
                    return self.error(format!(
                        "expected transition, setting or `}}`, found {}",
                        other.describe()
                    ))
                }
            }
        }
    }
}

fn semantic<T>(pos: Pos, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Semantic {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    })
}

struct Resolved {
    automaton: Automaton,
    finals: BitSet,
}

fn resolve_block(
    role: &'static str,
    block: RawBlock,
    symbols: &[String],
) -> Result<Resolved, ParseError> {
    let block_pos = block.pos.unwrap_or(Pos { line: 1, col: 1 });
    let Some(init) = block.init.clone() else {
        return semantic(block_pos, format!("{role} missing init"));
    };
    let declared = block.states.is_some();
    let mut names: Vec<String> = Vec::new();
    if let Some(states) = &block.states {
        for n in states {
            if names.contains(&n.text) {
                return semantic(n.pos, format!("duplicate {role} state `{}`", n.text));
            }
            names.push(n.text.clone());
        }
    }
    let lookup = |n: &Name, names: &mut Vec<String>| -> Result<StateId, ParseError> {
        if let Some(i) = names.iter().position(|s| *s == n.text) {
            return Ok(i);
        }
        if declared {
            return semantic(n.pos, format!("unknown {role} state `{}`", n.text));
        }
        names.push(n.text.clone());
        Ok(names.len() - 1)
    };
    let initial = lookup(&init, &mut names)?;
    let mut finals = BitSet::EMPTY;
    for n in block.finals.iter().flatten() {
        let i = lookup(n, &mut names)?;
        if i >= crate::bits::MAX_BITS {
            return semantic(n.pos, format!("too many {role} states"));
        }
        finals.insert(i);
    }
    let symbol = |n: &Name| -> Result<usize, ParseError> {
        match symbols.iter().position(|s| *s == n.text) {
            Some(a) => Ok(a),
            None => semantic(n.pos, format!("unknown symbol `{}`", n.text)),
        }
    };
    let mut transitions = Vec::new();
    for (from, op, to) in &block.transitions {
        let f = lookup(from, &mut names)?;
        let t = lookup(to, &mut names)?;
        let op = match op {
            RawOp::Eps => MemOp::Eps,
            RawOp::Read(n) => MemOp::Read(symbol(n)?),
            RawOp::Write(n) => MemOp::Write(symbol(n)?),
        };
        transitions.push(Transition::new(f, op, t));
    }
    let automaton = Automaton::new(role, names, initial, transitions)
        .or_else(|e| semantic(block_pos, e.to_string()))?;
    Ok(Resolved { automaton, finals })
}

/// Parse a model document.
pub fn parse_system(text: &str) -> Result<System, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let start = p.keyword("system")?;
    p.expect(Tok::LBrace)?;
    let mut domain: Option<Vec<Name>> = None;
    let mut init: Option<Name> = None;
    let mut leader: Option<RawBlock> = None;
    let mut contributor: Option<RawBlock> = None;
    loop {
        match p.peek().clone() {
            Tok::RBrace => {
                p.bump();
                break;
            }
            Tok::Ident(kw) => {
                let pos = p.pos();
                match kw.as_str() {
                    "domain" => {
                        p.bump();
                        p.expect(Tok::Eq)?;
                        if domain.is_some() {
                            return p.duplicate(pos, "domain");
                        }
                        domain = Some(p.ident_list()?);
                    }
                    "init" => {
                        p.bump();
                        p.expect(Tok::Eq)?;
                        if init.is_some() {
                            return p.duplicate(pos, "init");
                        }
                        init = Some(p.ident()?);
                    }
                    "leader" => {
                        p.bump();
                        if leader.is_some() {
                            return p.duplicate(pos, "leader");
                        }
                        leader = Some(p.block(true)?);
                    }
                    "contributor" => {
                        p.bump();
                        if contributor.is_some() {
                            return p.duplicate(pos, "contributor");
                        }
                        contributor = Some(p.block(false)?);
                    }
                    other => return p.error(format!("unexpected `{other}` in system block")),
                }
            }
            other => {
                return p.error(format!(
                    "expected `domain`, `init`, `leader`, `contributor` or `}}`, found {}",
                    other.describe()
                ))
            }
        }
    }
    p.expect(Tok::Eof)?;

    let Some(domain) = domain else {
        return semantic(start, "missing domain");
    };
    if domain.is_empty() {
        return semantic(start, "empty domain");
    }
    let mut symbols: Vec<String> = Vec::new();
    for n in &domain {
        if symbols.contains(&n.text) {
            return semantic(n.pos, format!("duplicate symbol `{}`", n.text));
        }
        symbols.push(n.text.clone());
    }
    let Some(init) = init else {
        return semantic(start, "system missing init");
    };
    let Some(initial_value) = symbols.iter().position(|s| *s == init.text) else {
        return semantic(init.pos, format!("unknown symbol `{}`", init.text));
    };
    let Some(leader) = leader else {
        return semantic(start, "missing leader block");
    };
    let Some(contributor) = contributor else {
        return semantic(start, "missing contributor block");
    };
    let l = resolve_block("leader", leader, &symbols)?;
    let c = resolve_block("contributor", contributor, &symbols)?;
    System::new(symbols, initial_value, l.automaton, c.automaton, l.finals)
        .or_else(|e: ModelError| semantic(start, e.to_string()))
}

fn write_block(out: &mut String, sys: &System, role: &str, a: &Automaton, finals: Option<BitSet>) {
    let _ = writeln!(out, "  {role} {{");
    let _ = writeln!(out, "    states = [{}]", a.state_names().join(", "));
    let _ = writeln!(out, "    init = {}", a.state_name(a.initial()));
    if let Some(f) = finals {
        let names: Vec<&str> = f.iter().map(|q| a.state_name(q)).collect();
        let _ = writeln!(out, "    final = [{}]", names.join(", "));
    }
    for t in a.transitions() {
        let _ = writeln!(
            out,
            "    {} -> {} : {}",
            a.state_name(t.from),
            a.state_name(t.to),
            sys.display_op(t.op)
        );
    }
    let _ = writeln!(out, "  }}");
}

/// Canonical text of a system. Byte-stable: blocks in fixed order,
/// transitions sorted by `(source, target, op)`.
pub fn serialize_system(sys: &System) -> String {
    let mut out = String::new();
    out.push_str("system {\n");
    let _ = writeln!(out, "  domain = [{}]", sys.symbol_names().join(", "));
    let _ = writeln!(out, "  init = {}", sys.symbol_name(sys.initial_value()));
    write_block(
        &mut out,
        sys,
        "leader",
        sys.leader(),
        Some(sys.final_states()),
    );
    write_block(&mut out, sys, "contributor", sys.contributor(), None);
    out.push_str("}\n");
    out
}
