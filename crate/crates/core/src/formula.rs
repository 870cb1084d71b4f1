//! Propositional formulas: AST, parsing, evaluation and truth-table canonicalization.
//!
//! Concrete syntax: `!` binds tighter than `&`, which binds tighter than `|`.
//! Parentheses override. `true` and `false` are the constants.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Largest support a truth table is built for.
pub const MAX_TABLE_PROPS: usize = 20;

// Group letters `U` and `D` are keywords only before the `:` of a model
// line, so they stay usable as proposition names.
const RESERVED: [&str; 3] = ["given", "true", "false"];

/// Name of a proposition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PropId(String);

impl PropId {
    pub fn new(name: &str) -> Result<Self, FormulaError> {
        let mut chars = name.chars();
        let valid = match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
            }
            _ => false,
        };
        if !valid {
            return Err(FormulaError::InvalidName(name.to_string()));
        }
        if RESERVED.contains(&name) {
            return Err(FormulaError::Reserved {
                name: name.to_string(),
                pos: 0,
            });
        }
        Ok(PropId(name.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PropId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("reserved word `{name}` used as a proposition at column {pos}")]
    Reserved { name: String, pos: usize },
    #[error("undeclared proposition `{name}` at column {pos}")]
    Undeclared { name: String, pos: usize },
    #[error("invalid proposition name `{0}`")]
    InvalidName(String),
    #[error("assignment has no value for `{0}`")]
    MissingProp(String),
    #[error("truth table over {0} propositions exceeds the limit of {MAX_TABLE_PROPS}")]
    SupportTooLarge(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Top,
    Bottom,
    Prop(PropId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn prop(id: PropId) -> Self {
        Formula::Prop(id)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// Evaluates under a total assignment.
    pub fn eval(&self, a: &Assignment) -> Result<bool, FormulaError> {
        Ok(match self {
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::Prop(p) => a
                .get(p)
                .ok_or_else(|| FormulaError::MissingProp(p.to_string()))?,
            Formula::Not(f) => !f.eval(a)?,
            Formula::And(l, r) => l.eval(a)? && r.eval(a)?,
            Formula::Or(l, r) => l.eval(a)? || r.eval(a)?,
        })
    }

    /// Evaluates with a caller-supplied valuation; never fails.
    pub fn eval_with<F: Fn(&PropId) -> bool>(&self, value: &F) -> bool {
        match self {
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::Prop(p) => value(p),
            Formula::Not(f) => !f.eval_with(value),
            Formula::And(l, r) => l.eval_with(value) && r.eval_with(value),
            Formula::Or(l, r) => l.eval_with(value) || r.eval_with(value),
        }
    }

    /// Propositions occurring syntactically.
    pub fn support(&self) -> BTreeSet<PropId> {
        let mut out = BTreeSet::new();
        self.collect_support(&mut out);
        out
    }

    fn collect_support(&self, out: &mut BTreeSet<PropId>) {
        match self {
            Formula::Top | Formula::Bottom => {}
            Formula::Prop(p) => {
                out.insert(p.clone());
            }
            Formula::Not(f) => f.collect_support(out),
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.collect_support(out);
                r.collect_support(out);
            }
        }
    }

    /// Truth table over `props` (first prop is the least significant bit of
    /// the assignment index).
    fn truth_table(&self, props: &[PropId]) -> Vec<u64> {
        let rows = 1usize << props.len();
        let mut bits = vec![0u64; rows.div_ceil(64)];
        let index: BTreeMap<&PropId, usize> = props.iter().enumerate().map(|(i, p)| (p, i)).collect();
        for row in 0..rows {
            let v = self.eval_with(&|p: &PropId| index.get(p).is_some_and(|&j| row >> j & 1 == 1));
            if v {
                bits[row / 64] |= 1 << (row % 64);
            }
        }
        bits
    }

    /// True iff both formulas agree on every assignment of their joint support.
    pub fn semantically_equal(&self, other: &Formula) -> Result<bool, FormulaError> {
        let mut joint = self.support();
        joint.extend(other.support());
        if joint.len() > MAX_TABLE_PROPS {
            return Err(FormulaError::SupportTooLarge(joint.len()));
        }
        let props: Vec<PropId> = joint.into_iter().collect();
        let rows = 1usize << props.len();
        let index: BTreeMap<&PropId, usize> = props.iter().enumerate().map(|(i, p)| (p, i)).collect();
        for row in 0..rows {
            let value = |p: &PropId| index.get(p).is_some_and(|&j| row >> j & 1 == 1);
            if self.eval_with(&value) != other.eval_with(&value) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Semantic identity of the formula; see [`CanonicalKey`].
    pub fn canonical_key(&self) -> Result<CanonicalKey, FormulaError> {
        let support: Vec<PropId> = self.support().into_iter().collect();
        if support.len() > MAX_TABLE_PROPS {
            return Err(FormulaError::SupportTooLarge(support.len()));
        }
        let table = self.truth_table(&support);
        let bit = |row: usize| table[row / 64] >> (row % 64) & 1 == 1;
        let rows = 1usize << support.len();

        // Drop every proposition the table does not depend on.
        let relevant: Vec<usize> = (0..support.len())
            .filter(|&j| (0..rows).any(|row| bit(row) != bit(row ^ (1 << j))))
            .collect();
        let props: Vec<PropId> = relevant.iter().map(|&j| support[j].clone()).collect();
        let reduced_rows = 1usize << relevant.len();
        let mut bits = vec![0u64; reduced_rows.div_ceil(64)];
        for row in 0..reduced_rows {
            let full = relevant
                .iter()
                .enumerate()
                .filter(|(k, _)| row >> k & 1 == 1)
                .fold(0usize, |acc, (_, &j)| acc | 1 << j);
            if bit(full) {
                bits[row / 64] |= 1 << (row % 64);
            }
        }
        Ok(CanonicalKey { props, bits })
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Left operands may share the parent's precedence (left-associative
        // parse); right operands of equal precedence need parentheses.
        fn child(f: &mut fmt::Formatter<'_>, c: &Formula, min: u8) -> fmt::Result {
            if c.precedence() < min {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        match self {
            Formula::Top => f.write_str("true"),
            Formula::Bottom => f.write_str("false"),
            Formula::Prop(p) => write!(f, "{p}"),
            Formula::Not(inner) => {
                f.write_str("!")?;
                child(f, inner, 3)
            }
            Formula::And(l, r) => {
                child(f, l, 2)?;
                f.write_str(" & ")?;
                child(f, r, 3)
            }
            Formula::Or(l, r) => {
                child(f, l, 1)?;
                f.write_str(" | ")?;
                child(f, r, 2)
            }
        }
    }
}

/// Total valuation of a set of propositions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<PropId, bool>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, p: PropId, value: bool) -> &mut Self {
        self.0.insert(p, value);
        self
    }

    pub fn get(&self, p: &PropId) -> Option<bool> {
        self.0.get(p).copied()
    }
}

impl FromIterator<(PropId, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (PropId, bool)>>(iter: I) -> Self {
        Assignment(iter.into_iter().collect())
    }
}

/// Sorted propositions a formula semantically depends on, plus its truth
/// table over them. Row `i` assigns `props[j]` the value of bit `j` of `i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey {
    props: Vec<PropId>,
    bits: Vec<u64>,
}

impl CanonicalKey {
    pub fn props(&self) -> &[PropId] {
        &self.props
    }

    pub fn bits(&self) -> &[u64] {
        &self.bits
    }

    pub fn row(&self, row: usize) -> bool {
        self.bits[row / 64] >> (row % 64) & 1 == 1
    }

    pub fn is_top(&self) -> bool {
        self.props.is_empty() && self.row(0)
    }

    pub fn is_bottom(&self) -> bool {
        self.props.is_empty() && !self.row(0)
    }

    /// The proposition this key is equivalent to, if it is a bare proposition.
    pub fn as_single_prop(&self) -> Option<&PropId> {
        match self.props.as_slice() {
            [p] if self.bits[0] & 0b11 == 0b10 => Some(p),
            _ => None,
        }
    }

    /// Evaluates the key under a valuation of its propositions.
    pub fn eval_with<F: Fn(&PropId) -> bool>(&self, value: F) -> bool {
        let row = self
            .props
            .iter()
            .enumerate()
            .filter(|(_, p)| value(p))
            .fold(0usize, |acc, (j, _)| acc | 1 << j);
        self.row(row)
    }
}

/// Declared propositions, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    props: Vec<PropId>,
    auto_declare: bool,
}

impl Scope {
    /// A scope that declares unknown identifiers on first use.
    pub fn open() -> Self {
        Scope {
            props: Vec::new(),
            auto_declare: true,
        }
    }

    /// A fixed scope; unknown identifiers are errors.
    pub fn closed(props: impl IntoIterator<Item = PropId>) -> Self {
        Scope {
            props: props.into_iter().collect(),
            auto_declare: false,
        }
    }

    pub fn props(&self) -> &[PropId] {
        &self.props
    }

    pub fn into_props(self) -> Vec<PropId> {
        self.props
    }

    fn resolve(&mut self, name: &str, pos: usize) -> Result<PropId, FormulaError> {
        if RESERVED.contains(&name) {
            return Err(FormulaError::Reserved {
                name: name.to_string(),
                pos,
            });
        }
        if let Some(p) = self.props.iter().find(|p| p.as_str() == name) {
            return Ok(p.clone());
        }
        if !self.auto_declare {
            return Err(FormulaError::Undeclared {
                name: name.to_string(),
                pos,
            });
        }
        let p = PropId::new(name)?;
        self.props.push(p.clone());
        Ok(p)
    }
}

/// Parses a formula, resolving identifiers against `scope`.
pub fn parse_formula(text: &str, scope: &mut Scope) -> Result<Formula, FormulaError> {
    let tokens = lex(text)?;
    let mut parser = Parser::new(&tokens, scope);
    let f = parser.formula()?;
    parser.expect_end()?;
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok<'a> {
    Ident(&'a str),
    Num(&'a str),
    Not,
    And,
    Or,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Le,
    Ge,
    Eq,
}

/// A token and its 1-based column.
pub(crate) type Spanned<'a> = (Tok<'a>, usize);

pub(crate) fn lex(text: &str) -> Result<Vec<Spanned<'_>>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let col = i + 1;
        let single = match c {
            b'!' => Some(Tok::Not),
            b'&' => Some(Tok::And),
            b'|' => Some(Tok::Or),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b',' => Some(Tok::Comma),
            b':' => Some(Tok::Colon),
            b'=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, col));
            i += 1;
            continue;
        }
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'<' | b'>' => {
                if bytes.get(i + 1) != Some(&b'=') {
                    return Err(FormulaError::Syntax {
                        pos: col,
                        msg: "expected `<=` or `>=`".to_string(),
                    });
                }
                out.push((if c == b'<' { Tok::Le } else { Tok::Ge }, col));
                i += 2;
            }
            c if c.is_ascii_digit() || c == b'.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit() || matches!(bytes[i], b'.' | b'e' | b'E'))
                {
                    // exponent sign
                    if matches!(bytes[i], b'e' | b'E') && matches!(bytes.get(i + 1), Some(b'-' | b'+')) {
                        i += 1;
                    }
                    i += 1;
                }
                out.push((Tok::Num(&text[start..i]), col));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(&text[start..i]), col));
            }
            _ => {
                return Err(FormulaError::Syntax {
                    pos: col,
                    msg: alloc::format!("unexpected character `{}`", text[i..].chars().next().unwrap_or('?')),
                })
            }
        }
    }
    Ok(out)
}

pub(crate) struct Parser<'t, 'a, 's> {
    tokens: &'t [Spanned<'a>],
    at: usize,
    scope: &'s mut Scope,
    end_col: usize,
}

impl<'t, 'a, 's> Parser<'t, 'a, 's> {
    pub(crate) fn new(tokens: &'t [Spanned<'a>], scope: &'s mut Scope) -> Self {
        let end_col = tokens.last().map_or(1, |(_, c)| c + 1);
        Parser {
            tokens,
            at: 0,
            scope,
            end_col,
        }
    }

    pub(crate) fn peek(&self) -> Option<&Tok<'a>> {
        self.tokens.get(self.at).map(|(t, _)| t)
    }

    pub(crate) fn col(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end_col, |(_, c)| *c)
    }

    pub(crate) fn bump(&mut self) -> Option<Tok<'a>> {
        let t = self.tokens.get(self.at).map(|(t, _)| t.clone());
        self.at += 1;
        t
    }

    pub(crate) fn error(&self, msg: &str) -> FormulaError {
        FormulaError::Syntax {
            pos: self.col(),
            msg: msg.to_string(),
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok<'_>, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            Err(self.error(&alloc::format!("expected {what}")))
        }
    }

    pub(crate) fn expect_end(&self) -> Result<(), FormulaError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.error("unexpected trailing input")),
        }
    }

    pub(crate) fn formula(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let col = self.col();
        match self.bump() {
            Some(Tok::Not) => Ok(Formula::not(self.unary()?)),
            Some(Tok::LParen) => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident("true")) => Ok(Formula::Top),
            Some(Tok::Ident("false")) => Ok(Formula::Bottom),
            Some(Tok::Ident(name)) => Ok(Formula::Prop(self.scope.resolve(name, col)?)),
            _ => {
                self.at -= 1;
                Err(self.error("expected a proposition, `!`, `(`, `true` or `false`"))
            }
        }
    }
}
