//! Terms and identities over one binary operation `->` and the constant `0`.
//!
//! The surface syntax is ASCII (`->`, `'`, `=`) with the Unicode forms
//! `→`, `′`, `″` and `≈` accepted on input. Every arrow below the top level
//! must be parenthesized; `[..]` and `{..}` are accepted as alternative
//! brackets so that displayed formulas can be transcribed verbatim.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A term of the zroupoid language.
///
/// `Comp(t)` is the derived unary operation `t' := t -> 0`. It is kept in the
/// tree so printed forms stay readable; [`Term::normalize_comp`] expands it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Zero,
    Comp(Box<Term>),
    Arrow(Box<Term>, Box<Term>),
}

/// Simultaneous substitution of terms for variables.
pub type Substitution = BTreeMap<String, Term>;

/// A path into a term: a sequence of child indices (`0` = left / only child,
/// `1` = right child of an arrow).
pub type Position = Vec<usize>;

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn arrow(lhs: Term, rhs: Term) -> Term {
        Term::Arrow(Box::new(lhs), Box::new(rhs))
    }

    pub fn comp(inner: Term) -> Term {
        Term::Comp(Box::new(inner))
    }

    /// Expands every `Comp(t)` into `Arrow(t, Zero)`.
    pub fn normalize_comp(&self) -> Term {
        match self {
            Term::Var(_) | Term::Zero => self.clone(),
            Term::Comp(t) => Term::arrow(t.normalize_comp(), Term::Zero),
            Term::Arrow(a, b) => Term::arrow(a.normalize_comp(), b.normalize_comp()),
        }
    }

    /// Variables occurring in the term, in alphabet order.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Zero => {}
            Term::Comp(t) => t.collect_vars(out),
            Term::Arrow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) | Term::Zero => 0,
            Term::Comp(t) => 1 + t.depth(),
            Term::Arrow(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Zero => 1,
            Term::Comp(t) => 1 + t.size(),
            Term::Arrow(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Simultaneous substitution; unmapped variables stay fixed.
    pub fn substitute(&self, sigma: &Substitution) -> Term {
        match self {
            Term::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Zero => Term::Zero,
            Term::Comp(t) => Term::comp(t.substitute(sigma)),
            Term::Arrow(a, b) => Term::arrow(a.substitute(sigma), b.substitute(sigma)),
        }
    }

    pub fn subterm(&self, pos: &[usize]) -> Option<&Term> {
        let Some((&first, rest)) = pos.split_first() else {
            return Some(self);
        };
        match (self, first) {
            (Term::Comp(t), 0) => t.subterm(rest),
            (Term::Arrow(a, _), 0) => a.subterm(rest),
            (Term::Arrow(_, b), 1) => b.subterm(rest),
            _ => None,
        }
    }

    /// Returns a copy with the subterm at `pos` replaced, or `None` when the
    /// position does not exist.
    pub fn replace_at(&self, pos: &[usize], with: Term) -> Option<Term> {
        let Some((&first, rest)) = pos.split_first() else {
            return Some(with);
        };
        match (self, first) {
            (Term::Comp(t), 0) => Some(Term::comp(t.replace_at(rest, with)?)),
            (Term::Arrow(a, b), 0) => Some(Term::Arrow(Box::new(a.replace_at(rest, with)?), b.clone())),
            (Term::Arrow(a, b), 1) => Some(Term::Arrow(a.clone(), Box::new(b.replace_at(rest, with)?))),
            _ => None,
        }
    }

    /// All positions of the term in pre-order.
    pub fn positions(&self) -> Vec<Position> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_positions(&mut path, &mut out);
        out
    }

    fn collect_positions(&self, path: &mut Position, out: &mut Vec<Position>) {
        out.push(path.clone());
        match self {
            Term::Var(_) | Term::Zero => {}
            Term::Comp(t) => {
                path.push(0);
                t.collect_positions(path, out);
                path.pop();
            }
            Term::Arrow(a, b) => {
                path.push(0);
                a.collect_positions(path, out);
                path.pop();
                path.push(1);
                b.collect_positions(path, out);
                path.pop();
            }
        }
    }

    /// One-sided matching: extends `sigma` so that `self` instantiated by it
    /// equals `target`. Only variables in `bindable` may be bound; every other
    /// variable is rigid.
    pub fn match_into(&self, target: &Term, bindable: &BTreeSet<String>, sigma: &mut Substitution) -> bool {
        match (self, target) {
            (Term::Var(v), _) if bindable.contains(v) => match sigma.get(v) {
                Some(bound) => bound == target,
                None => {
                    sigma.insert(v.clone(), target.clone());
                    true
                }
            },
            (Term::Var(v), Term::Var(w)) => v == w,
            (Term::Zero, Term::Zero) => true,
            (Term::Comp(p), Term::Comp(t)) => p.match_into(t, bindable, sigma),
            (Term::Arrow(p1, p2), Term::Arrow(t1, t2)) => p1.match_into(t1, bindable, sigma) && p2.match_into(t2, bindable, sigma),
            _ => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Zero => f.write_str("0"),
            Term::Comp(t) => write!(f, "{t}'"),
            Term::Arrow(a, b) => write!(f, "({a} -> {b})"),
        }
    }
}

/// Canonical printing: every arrow parenthesized, `'` postfix.
pub fn format_term(t: &Term) -> String {
    t.to_string()
}

/// An equation `lhs ≈ rhs`, orientation preserved as written. Equality
/// compares the two sides only, not the label.
#[derive(Clone, Debug)]
pub struct Identity {
    pub lhs: Term,
    pub rhs: Term,
    pub name: Option<String>,
}

impl PartialEq for Identity {
    fn eq(&self, other: &Identity) -> bool {
        self.lhs == other.lhs && self.rhs == other.rhs
    }
}

impl Eq for Identity {}

impl std::hash::Hash for Identity {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.lhs.hash(h);
        self.rhs.hash(h);
    }
}

impl Identity {
    pub fn new(lhs: Term, rhs: Term) -> Identity {
        Identity { lhs, rhs, name: None }
    }

    pub fn named(mut self, name: &str) -> Identity {
        self.name = Some(name.to_string());
        self
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.vars();
        v.extend(self.rhs.vars());
        v
    }

    pub fn flipped(&self) -> Identity {
        Identity { lhs: self.rhs.clone(), rhs: self.lhs.clone(), name: self.name.clone() }
    }

    pub fn substitute(&self, sigma: &Substitution) -> Identity {
        Identity { lhs: self.lhs.substitute(sigma), rhs: self.rhs.substitute(sigma), name: self.name.clone() }
    }

    pub fn normalize_comp(&self) -> Identity {
        Identity { lhs: self.lhs.normalize_comp(), rhs: self.rhs.normalize_comp(), name: self.name.clone() }
    }

    /// True when `other` is `self` up to a bijective renaming of variables
    /// (after expanding `'`).
    pub fn is_variant_of(&self, other: &Identity) -> bool {
        let a = self.normalize_comp();
        let b = other.normalize_comp();
        let bindable = a.vars();
        let mut sigma = Substitution::new();
        if !a.lhs.match_into(&b.lhs, &bindable, &mut sigma) || !a.rhs.match_into(&b.rhs, &bindable, &mut sigma) {
            return false;
        }
        let images: BTreeSet<&Term> = sigma.values().collect();
        images.len() == sigma.len() && images.iter().all(|t| matches!(t, Term::Var(_))) && a.vars().len() == b.vars().len()
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

/// An implication `h1, h2, ... |- conclusion`, read pointwise: for every
/// assignment satisfying all hypotheses the conclusion holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalIdentity {
    pub hypotheses: Vec<Identity>,
    pub conclusion: Identity,
}

impl ConditionalIdentity {
    pub fn unconditional(conclusion: Identity) -> ConditionalIdentity {
        ConditionalIdentity { hypotheses: Vec::new(), conclusion }
    }

    pub fn is_unconditional(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.conclusion.vars();
        for h in &self.hypotheses {
            v.extend(h.vars());
        }
        v
    }
}

impl fmt::Display for ConditionalIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.hypotheses.is_empty() {
            let hyps: Vec<String> = self.hypotheses.iter().map(|h| h.to_string()).collect();
            write!(f, "{} |- ", hyps.join(", "))?;
        }
        write!(f, "{}", self.conclusion)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unknown character {ch:?} at byte {offset}")]
    UnknownChar { ch: char, offset: usize },
    #[error("syntax error at byte {offset}: expected {expected}, found {found}")]
    Syntax { offset: usize, expected: &'static str, found: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::UnknownChar { offset, .. } | ParseError::Syntax { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Var(String),
    Zero,
    Open(char),
    Close(char),
    Arrow,
    Prime(usize),
    Eq,
    Comma,
    Turnstile,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("variable {v:?}"),
            Tok::Zero => "\"0\"".into(),
            Tok::Open(c) | Tok::Close(c) => format!("{c:?}"),
            Tok::Arrow => "\"->\"".into(),
            Tok::Prime(_) => "\"'\"".into(),
            Tok::Eq => "\"=\"".into(),
            Tok::Comma => "\",\"".into(),
            Tok::Turnstile => "\"|-\"".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut toks = Vec::new();
    let mut it = text.char_indices().peekable();
    while let Some((off, ch)) = it.next() {
        let tok = match ch {
            c if c.is_whitespace() => continue,
            '(' | '[' | '{' => Tok::Open(ch),
            ')' | ']' | '}' => Tok::Close(ch),
            '\'' | '′' => Tok::Prime(1),
            '″' => Tok::Prime(2),
            '→' => Tok::Arrow,
            '=' | '≈' => Tok::Eq,
            ',' => Tok::Comma,
            '0' => Tok::Zero,
            '-' if matches!(it.peek(), Some((_, '>'))) => {
                it.next();
                Tok::Arrow
            }
            '|' if matches!(it.peek(), Some((_, '-'))) => {
                it.next();
                Tok::Turnstile
            }
            c if c.is_ascii_lowercase() => {
                let mut name = c.to_string();
                while let Some(&(_, d)) = it.peek() {
                    if d.is_ascii_digit() || d == '_' {
                        name.push(d);
                        it.next();
                    } else {
                        break;
                    }
                }
                Tok::Var(name)
            }
            _ => return Err(ParseError::UnknownChar { ch, offset: off }),
        };
        toks.push((off, tok));
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: tokenize(text)?, pos: 0, end: text.len() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn error(&self, expected: &'static str) -> ParseError {
        let found = self.peek().map(Tok::describe).unwrap_or_else(|| "end of input".into());
        ParseError::Syntax { offset: self.offset(), expected, found }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// term ("->" term)?  -- the outermost arrow may omit its parentheses.
    fn top(&mut self) -> Result<Term, ParseError> {
        let lhs = self.postfixed()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.postfixed()?;
            return Ok(Term::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn postfixed(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom()?;
        while let Some(Tok::Prime(k)) = self.peek() {
            for _ in 0..*k {
                t = Term::comp(t);
            }
            self.pos += 1;
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(Term::Var(v))
            }
            Some(Tok::Zero) => {
                self.pos += 1;
                Ok(Term::Zero)
            }
            Some(Tok::Open(open)) => {
                self.pos += 1;
                let inner = self.top()?;
                let close = match open {
                    '(' => ')',
                    '[' => ']',
                    _ => '}',
                };
                if self.peek() == Some(&Tok::Close(close)) {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(self.error("closing bracket"))
                }
            }
            _ => Err(self.error("term")),
        }
    }

    fn identity(&mut self) -> Result<Identity, ParseError> {
        let lhs = self.top()?;
        if self.peek() != Some(&Tok::Eq) {
            return Err(self.error("\"=\""));
        }
        self.pos += 1;
        let rhs = self.top()?;
        Ok(Identity::new(lhs, rhs))
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.top()?;
    p.finish()?;
    Ok(t)
}

/// Parses `lhs = rhs` (or `lhs ≈ rhs`).
pub fn parse_identity(text: &str) -> Result<Identity, ParseError> {
    let mut p = Parser::new(text)?;
    let id = p.identity()?;
    p.finish()?;
    Ok(id)
}

/// Parses `h1, h2 |- lhs = rhs`, or a plain identity.
pub fn parse_conditional(text: &str) -> Result<ConditionalIdentity, ParseError> {
    let mut p = Parser::new(text)?;
    if !p.toks.iter().any(|(_, t)| *t == Tok::Turnstile) {
        let id = p.identity()?;
        p.finish()?;
        return Ok(ConditionalIdentity::unconditional(id));
    }
    let mut hypotheses = vec![p.identity()?];
    loop {
        match p.peek() {
            Some(Tok::Comma) => {
                p.pos += 1;
                hypotheses.push(p.identity()?);
            }
            Some(Tok::Turnstile) => {
                p.pos += 1;
                break;
            }
            _ => return Err(p.error("\",\" or \"|-\"")),
        }
    }
    let conclusion = p.identity()?;
    p.finish()?;
    Ok(ConditionalIdentity { hypotheses, conclusion })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Term {
        Term::var(n)
    }

    #[test]
    fn parses_top_level_arrow() {
        let t = parse_term("(x -> y') -> x").unwrap();
        assert_eq!(t, Term::arrow(Term::arrow(v("x"), Term::comp(v("y"))), v("x")));
        assert_eq!(parse_term("((x -> y') -> x)").unwrap(), t);
    }

    #[test]
    fn double_prime() {
        assert_eq!(parse_term("0''").unwrap(), Term::comp(Term::comp(Term::Zero)));
        assert_eq!(parse_term("0″").unwrap(), parse_term("0''").unwrap());
    }

    #[test]
    fn rejects_double_arrow() {
        let err = parse_term("x -> -> y").unwrap_err();
        assert_eq!(err.offset(), 5);
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn rejects_unparenthesized_chain() {
        assert!(parse_term("x -> y -> z").is_err());
    }

    #[test]
    fn unknown_character() {
        assert_eq!(parse_term("x + y").unwrap_err(), ParseError::UnknownChar { ch: '+', offset: 2 });
    }

    #[test]
    fn unicode_aliases() {
        let a = parse_identity("(x → y) → x ≈ x").unwrap();
        let b = parse_identity("(x -> y) -> x = x").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn brackets_are_interchangeable() {
        assert_eq!(parse_term("[{x -> y} -> z]'").unwrap(), parse_term("((x -> y) -> z)'").unwrap());
        assert!(parse_term("(x -> y]").is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(format_term(&Term::comp(Term::Zero)), "0'");
        assert_eq!(format_term(&parse_term("(x -> y) -> z").unwrap()), "((x -> y) -> z)");
        assert_eq!(format_term(&Term::arrow(Term::Zero, Term::comp(v("x")))), "(0 -> x')");
    }

    #[test]
    fn substitution_examples() {
        let mut s = Substitution::new();
        s.insert("x".into(), Term::Zero);
        assert_eq!(Term::comp(v("x")).substitute(&s), Term::comp(Term::Zero));

        let lhs = parse_term("(x -> y) -> z").unwrap();
        let mut s = Substitution::new();
        for (k, t) in [("x", "a"), ("y", "b"), ("z", "c")] {
            s.insert(k.into(), v(t));
        }
        assert_eq!(lhs.substitute(&s), parse_term("(a -> b) -> c").unwrap());
        assert_eq!(lhs.substitute(&Substitution::new()), lhs);
    }

    #[test]
    fn conditional_syntax() {
        let c = parse_conditional("(x -> y') -> x = x |- (x' -> y) -> x' = x'").unwrap();
        assert_eq!(c.hypotheses.len(), 1);
        let c = parse_conditional("x = y, y = z |- x = z").unwrap();
        assert_eq!(c.hypotheses.len(), 2);
        assert!(parse_conditional("x = x").unwrap().is_unconditional());
    }

    #[test]
    fn positions_and_replacement() {
        let t = parse_term("(a -> b')'").unwrap();
        assert_eq!(t.subterm(&[0, 1, 0]), Some(&v("b")));
        assert_eq!(t.subterm(&[1]), None);
        let r = t.replace_at(&[0, 1], Term::Zero).unwrap();
        assert_eq!(r, parse_term("(a -> 0)'").unwrap());
        assert_eq!(t.positions().len(), t.size());
    }

    #[test]
    fn variants() {
        let a = parse_identity("x -> y = y").unwrap();
        let b = parse_identity("b -> a = a").unwrap();
        let c = parse_identity("a -> a = a").unwrap();
        assert!(a.is_variant_of(&b));
        assert!(!a.is_variant_of(&c));
        assert!(!c.is_variant_of(&a));
    }
}
