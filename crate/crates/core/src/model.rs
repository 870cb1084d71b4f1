//! Logical credal networks and the line-oriented `.lcn` text format.
//!
//! ```text
//! # comment
//! U: 0.5 <= P(F1 given F2 & F3) <= 1
//! D: P(C1 given S1) in [0.03, 0.04]
//! U: P(A | B) = 0.4
//! ```

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::formula::{lex, CanonicalKey, Formula, FormulaError, Parser, PropId, Scope, Tok};

/// Constraint set a constraint belongs to. `U` constraints also tie the
/// propositions of their conditioned formula together.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    U,
    D,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::U => "U",
            Group::D => "D",
        })
    }
}

/// `lo <= P(phi | psi) <= hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    lo: f64,
    hi: f64,
    phi: Formula,
    psi: Formula,
    group: Group,
}

impl Constraint {
    pub fn new(lo: f64, hi: f64, phi: Formula, psi: Formula, group: Group) -> Result<Self, LcnError> {
        for v in [lo, hi] {
            if !(0.0..=1.0).contains(&v) {
                return Err(LcnError::BoundRange { line: 0, value: v });
            }
        }
        if lo > hi {
            return Err(LcnError::EmptyInterval { line: 0, lo, hi });
        }
        if matches!(phi, Formula::Top | Formula::Bottom) {
            return Err(LcnError::ConstantConditioned { line: 0 });
        }
        Ok(Constraint {
            lo,
            hi,
            phi,
            psi,
            group,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Conditioned formula.
    pub fn phi(&self) -> &Formula {
        &self.phi
    }

    /// Conditioning formula; `Top` when absent.
    pub fn psi(&self) -> &Formula {
        &self.psi
    }

    pub fn group(&self) -> Group {
        self.group
    }

    /// `lo = hi = 1` or `hi = 0`.
    pub fn is_hard(&self) -> bool {
        (self.lo == 1.0 && self.hi == 1.0) || self.hi == 0.0
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} <= P({}", self.group, self.lo, self.phi)?;
        if self.psi != Formula::Top {
            write!(f, " given {}", self.psi)?;
        }
        write!(f, ") <= {}", self.hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lcn {
    props: Vec<PropId>,
    constraints: Vec<Constraint>,
}

impl Lcn {
    pub fn new(props: Vec<PropId>, constraints: Vec<Constraint>) -> Result<Self, LcnError> {
        if props.is_empty() {
            return Err(LcnError::NoPropositions);
        }
        for (i, p) in props.iter().enumerate() {
            if props[..i].contains(p) {
                return Err(LcnError::DuplicateProp(p.to_string()));
            }
        }
        for c in &constraints {
            for p in c.phi.support().into_iter().chain(c.psi.support()) {
                if !props.contains(&p) {
                    return Err(LcnError::UnknownProp(p.to_string()));
                }
            }
        }
        Ok(Lcn { props, constraints })
    }

    /// Propositions in declaration order.
    pub fn props(&self) -> &[PropId] {
        &self.props
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn prop(&self, name: &str) -> Option<&PropId> {
        self.props.iter().find(|p| p.as_str() == name)
    }
}

impl fmt::Display for Lcn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.constraints {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LcnError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: {source}")]
    Formula { line: usize, source: FormulaError },
    #[error("line {line}: bound {value} is outside [0, 1]")]
    BoundRange { line: usize, value: f64 },
    #[error("line {line}: lower bound {lo} exceeds upper bound {hi}")]
    EmptyInterval { line: usize, lo: f64, hi: f64 },
    #[error("line {line}: the conditioned formula cannot be `true` or `false`")]
    ConstantConditioned { line: usize },
    #[error("model declares no propositions")]
    NoPropositions,
    #[error("proposition `{0}` is declared twice")]
    DuplicateProp(String),
    #[error("proposition `{0}` is not declared")]
    UnknownProp(String),
}

impl LcnError {
    fn at_line(self, line: usize) -> Self {
        match self {
            LcnError::BoundRange { value, .. } => LcnError::BoundRange { line, value },
            LcnError::EmptyInterval { lo, hi, .. } => LcnError::EmptyInterval { line, lo, hi },
            LcnError::ConstantConditioned { .. } => LcnError::ConstantConditioned { line },
            other => other,
        }
    }
}

/// Parses a `.lcn` document. Propositions are declared in order of first
/// appearance.
pub fn parse_lcn(text: &str) -> Result<Lcn, LcnError> {
    let mut scope = Scope::open();
    let mut constraints = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        constraints.push(parse_line(body, line, &mut scope)?);
    }
    Lcn::new(scope.into_props(), constraints)
}

fn parse_line(body: &str, line: usize, scope: &mut Scope) -> Result<Constraint, LcnError> {
    let formula_err = |source| match source {
        FormulaError::Syntax { pos, msg } => LcnError::Syntax { line, col: pos, msg },
        source => LcnError::Formula { line, source },
    };
    let tokens = lex(body).map_err(formula_err)?;
    let mut p = Parser::new(&tokens, scope);

    let group = match p.bump() {
        Some(Tok::Ident("U")) => Group::U,
        Some(Tok::Ident("D")) => Group::D,
        _ => {
            return Err(LcnError::Syntax {
                line,
                col: 1,
                msg: "expected group prefix `U:` or `D:`".to_string(),
            })
        }
    };
    p.expect(Tok::Colon, "`:` after the group").map_err(formula_err)?;

    let (lo, phi, psi, hi) = if let Some(Tok::Num(_)) = p.peek() {
        let lo = number(&mut p, line)?;
        p.expect(Tok::Le, "`<=`").map_err(formula_err)?;
        let (phi, psi) = probability(&mut p).map_err(formula_err)?;
        p.expect(Tok::Le, "`<=`").map_err(formula_err)?;
        let hi = number(&mut p, line)?;
        (lo, phi, psi, hi)
    } else {
        let (phi, psi) = probability(&mut p).map_err(formula_err)?;
        let col = p.col();
        match p.bump() {
            Some(Tok::Eq) => {
                let v = number(&mut p, line)?;
                (v, phi, psi, v)
            }
            Some(Tok::Le) => (0.0, phi, psi, number(&mut p, line)?),
            Some(Tok::Ge) => {
                let v = number(&mut p, line)?;
                (v, phi, psi, 1.0)
            }
            Some(Tok::Ident("in")) => {
                p.expect(Tok::LBracket, "`[`").map_err(formula_err)?;
                let lo = number(&mut p, line)?;
                p.expect(Tok::Comma, "`,`").map_err(formula_err)?;
                let hi = number(&mut p, line)?;
                p.expect(Tok::RBracket, "`]`").map_err(formula_err)?;
                (lo, phi, psi, hi)
            }
            _ => {
                return Err(LcnError::Syntax {
                    line,
                    col,
                    msg: "expected `=`, `<=`, `>=` or `in` after the probability".to_string(),
                })
            }
        }
    };
    p.expect_end().map_err(formula_err)?;
    Constraint::new(lo, hi, phi, psi, group).map_err(|e| e.at_line(line))
}

fn probability(p: &mut Parser<'_, '_, '_>) -> Result<(Formula, Formula), FormulaError> {
    if p.peek() != Some(&Tok::Ident("P")) {
        return Err(p.error("expected `P(`"));
    }
    p.bump();
    p.expect(Tok::LParen, "`(` after `P`")?;
    let phi = p.formula()?;
    let psi = if p.peek() == Some(&Tok::Ident("given")) {
        p.bump();
        p.formula()?
    } else {
        Formula::Top
    };
    p.expect(Tok::RParen, "`)`")?;
    Ok((phi, psi))
}

fn number(p: &mut Parser<'_, '_, '_>, line: usize) -> Result<f64, LcnError> {
    let col = p.col();
    match p.bump() {
        Some(Tok::Num(text)) => text.parse::<f64>().map_err(|_| LcnError::Syntax {
            line,
            col,
            msg: format!("malformed number `{text}`"),
        }),
        _ => Err(LcnError::Syntax {
            line,
            col,
            msg: "expected a number".to_string(),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticCode {
    HardConstraint,
    ConditionOnContradiction,
    TrivialConditioned,
    DuplicateConstraint,
    ConflictingIntervals,
    SupportTooLarge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    /// Zero-based index into [`Lcn::constraints`].
    pub constraint: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: constraint {}: {}", self.constraint + 1, self.message)
    }
}

/// Model-level checks. Never fails; problems come back as diagnostics.
pub fn validate(lcn: &Lcn) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<(CanonicalKey, CanonicalKey), Vec<usize>> = BTreeMap::new();
    for (i, c) in lcn.constraints.iter().enumerate() {
        let diag = |severity, code, message: String| Diagnostic {
            severity,
            code,
            constraint: i,
            message,
        };
        if c.is_hard() {
            out.push(diag(
                Severity::Info,
                DiagnosticCode::HardConstraint,
                format!("hard constraint on P({} | {})", c.phi, c.psi),
            ));
        }
        let keys = c.phi.canonical_key().and_then(|k| Ok((k, c.psi.canonical_key()?)));
        let (phi_key, psi_key) = match keys {
            Ok(keys) => keys,
            Err(e) => {
                out.push(diag(Severity::Error, DiagnosticCode::SupportTooLarge, e.to_string()));
                continue;
            }
        };
        if psi_key.is_bottom() {
            out.push(diag(
                Severity::Error,
                DiagnosticCode::ConditionOnContradiction,
                format!("conditioning formula `{}` is unsatisfiable", c.psi),
            ));
        }
        if phi_key.is_top() || phi_key.is_bottom() {
            out.push(diag(
                Severity::Warning,
                DiagnosticCode::TrivialConditioned,
                format!("conditioned formula `{}` is constant", c.phi),
            ));
        }
        let earlier = seen.entry((phi_key, psi_key)).or_default();
        for &j in earlier.iter() {
            let other = &lcn.constraints[j];
            if other.group == c.group && other.lo == c.lo && other.hi == c.hi {
                out.push(diag(
                    Severity::Warning,
                    DiagnosticCode::DuplicateConstraint,
                    format!("duplicates constraint {}", j + 1),
                ));
            } else if other.hi < c.lo || c.hi < other.lo {
                out.push(diag(
                    Severity::Warning,
                    DiagnosticCode::ConflictingIntervals,
                    format!(
                        "interval [{}, {}] does not meet [{}, {}] of constraint {}",
                        c.lo,
                        c.hi,
                        other.lo,
                        other.hi,
                        j + 1
                    ),
                ));
            }
        }
        earlier.push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn f(text: &str) -> Formula {
        parse_formula(text, &mut Scope::open()).unwrap()
    }

    fn single(text: &str) -> Constraint {
        parse_lcn(text).unwrap().constraints()[0].clone()
    }

    #[test]
    fn two_sided_bound() {
        let c = single("U: 0.5 <= P(F1 given F2 & F3) <= 1");
        assert_eq!(c, Constraint::new(0.5, 1.0, f("F1"), f("F2 & F3"), Group::U).unwrap());
    }

    #[test]
    fn interval_sugar() {
        let c = single("D: P(C1 given S1) in [0.03, 0.04]");
        assert_eq!(c, Constraint::new(0.03, 0.04, f("C1"), f("S1"), Group::D).unwrap());
    }

    #[test]
    fn equality_sugar_and_disjunction_inside() {
        let c = single("U: P(A | B) = 0.4");
        assert_eq!(c, Constraint::new(0.4, 0.4, f("A | B"), Formula::Top, Group::U).unwrap());
    }

    #[test]
    fn one_sided_sugar() {
        assert_eq!(single("D: P(A) <= 0.3").lo(), 0.0);
        assert_eq!(single("D: P(A) <= 0.3").hi(), 0.3);
        assert_eq!(single("D: P(A) >= 0.3").hi(), 1.0);
        assert_eq!(single("D: P(A) >= 0.3").lo(), 0.3);
    }

    #[test]
    fn comments_blanks_and_declaration_order() {
        let lcn = parse_lcn("# header\n\nU: P(B given A) = 0.2  # trailing\n   \nD: P(C & A) >= 0.1\n").unwrap();
        let names: Vec<&str> = lcn.props().iter().map(PropId::as_str).collect();
        assert_eq!(names, ["B", "A", "C"]);
        assert_eq!(lcn.constraints().len(), 2);
    }

    #[test]
    fn line_numbered_errors() {
        assert_eq!(
            parse_lcn("U: P(A) = 0.2\nX: P(B) = 0.1"),
            Err(LcnError::Syntax {
                line: 2,
                col: 1,
                msg: "expected group prefix `U:` or `D:`".into()
            })
        );
        assert!(matches!(parse_lcn("\nU: P(A) = 1.5"), Err(LcnError::BoundRange { line: 2, .. })));
        assert!(matches!(
            parse_lcn("U: 0.7 <= P(A) <= 0.2"),
            Err(LcnError::EmptyInterval { line: 1, .. })
        ));
        assert!(matches!(parse_lcn("U: P(A & ) = 0.2"), Err(LcnError::Syntax { line: 1, col: 10, .. })));
        assert!(matches!(
            parse_lcn("U: P(given) = 0.2"),
            Err(LcnError::Formula {
                line: 1,
                source: FormulaError::Reserved { .. }
            })
        ));
        assert!(matches!(parse_lcn("U: P(true) = 0.2"), Err(LcnError::ConstantConditioned { line: 1 })));
        assert!(matches!(parse_lcn("U: P(A) = 0.2 0.3"), Err(LcnError::Syntax { line: 1, .. })));
        assert!(matches!(parse_lcn("U: P(A) ~ 0.2"), Err(LcnError::Syntax { line: 1, col: 9, .. })));
        assert_eq!(parse_lcn("# nothing\n"), Err(LcnError::NoPropositions));
    }

    #[test]
    fn group_letters_as_propositions() {
        let lcn = parse_lcn("D: P(C given B & D) = 0.3\nU: P(U) = 0.5").unwrap();
        assert_eq!(lcn.constraints()[0].group(), Group::D);
        let names: Vec<&str> = lcn.props().iter().map(|p| p.as_str()).collect();
        assert_eq!(names, ["C", "B", "D", "U"]);
    }

    #[test]
    fn group_prefix_is_mandatory() {
        assert!(matches!(parse_lcn("P(A) = 0.2"), Err(LcnError::Syntax { line: 1, col: 1, .. })));
    }

    #[test]
    fn printer_round_trip() {
        let text = "U: 0.5 <= P(F1 given F2 & F3) <= 1\nD: P(C1 given !S1) in [0, 0.01]\nU: P(A | B & !C) = 0.4\n";
        let once = parse_lcn(text).unwrap();
        let twice = parse_lcn(&once.to_string()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn new_rejects_undeclared() {
        let a = PropId::new("A").unwrap();
        let c = Constraint::new(0.1, 0.2, f("B"), Formula::Top, Group::D).unwrap();
        assert_eq!(Lcn::new(alloc::vec![a], alloc::vec![c]), Err(LcnError::UnknownProp("B".into())));
    }

    #[test]
    fn validate_hard_and_contradiction() {
        let lcn = parse_lcn("U: 1 <= P(A | B) <= 1\nD: P(A given B & !B) = 0.5").unwrap();
        let diags = validate(&lcn);
        assert_eq!(diags.len(), 2);
        assert_eq!(diags[0].code, DiagnosticCode::HardConstraint);
        assert_eq!(diags[0].severity, Severity::Info);
        assert_eq!(diags[1].code, DiagnosticCode::ConditionOnContradiction);
        assert_eq!(diags[1].severity, Severity::Error);
        assert_eq!(diags[1].constraint, 1);
    }

    #[test]
    fn validate_duplicates_and_conflicts() {
        let lcn = parse_lcn(
            "U: P(A | B) = 0.4\nU: P(B | A) = 0.4\nD: P(A | B) in [0.6, 0.7]\nD: P(A | !A) <= 0.3",
        )
        .unwrap();
        let codes: Vec<DiagnosticCode> = validate(&lcn).iter().map(|d| d.code).collect();
        assert_eq!(
            codes,
            [
                DiagnosticCode::DuplicateConstraint,
                DiagnosticCode::ConflictingIntervals,
                DiagnosticCode::ConflictingIntervals,
                DiagnosticCode::TrivialConditioned,
            ]
        );
    }
}
