//! Replay of equational proof scripts.
//!
//! A script is a chain `t0 = t1 = … = tn` where each link rewrites one
//! subterm with an instance of a cited identity, in either direction.
//! Comparisons are made on comp-normalized terms, so `t'` and `t -> 0` are
//! interchangeable everywhere; a path addresses the same subterm in both
//! forms since the child of `t'` is the left child of `t -> 0`.
//!
//! Script syntax, one item per line (`#` starts a comment):
//!
//! ```text
//! proof L3.3.20 goal [(0 -> a) -> b] -> a = b -> a
//! start [(0 -> a) -> b] -> a
//! = [(b -> a) -> (0 -> a)']' by L3.3.14 with x = a, y = b
//! = (b -> a)'' by L3.3.15 at 0
//! = b -> a by I20
//! ```
//!
//! Hypotheses are listed after `assume`, separated by `;`. The position
//! (`at 0.1`, `at root`) and substitution (`with x = t, …`) are optional;
//! when omitted they are inferred from the two terms. `rev` applies the
//! cited identity right to left. Letters in a script are rigid constants.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::CheckResult;
use crate::catalog::IdentityCatalog;
use crate::search::ModelCorpus;
use crate::term::{parse_identity, parse_term, ConditionalIdentity, Identity, ParseError, Position, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: chain broken: expected {expected}, found {found}")]
    ChainBreak { line: usize, expected: String, found: String },
    #[error("no proof in input")]
    Empty,
}

/// One link of a chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub from: Term,
    pub to: Term,
    /// Catalog label, `hyp:<i>`, `lemma:<name>` or `defcomp`.
    pub justification: String,
    pub substitution: Substitution,
    pub position: Option<Position>,
    pub reverse: bool,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofScript {
    pub name: String,
    pub hypotheses: Vec<Identity>,
    pub goal: Identity,
    pub start: Term,
    pub steps: Vec<Step>,
}

impl ProofScript {
    /// Term reached by the chain.
    pub fn last_term(&self) -> &Term {
        self.steps.last().map_or(&self.start, |s| &s.to)
    }

    /// Every label cited by the steps.
    pub fn citations(&self) -> BTreeSet<String> {
        self.steps.iter().map(|s| s.justification.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("unknown citation {0:?}")]
    UnknownCitation(String),
    #[error("hypothesis {hyp} of {label} is not assumed")]
    MissingHypothesis { label: String, hyp: String },
    #[error("no subterm at position {0}")]
    BadPosition(String),
    #[error("step does not change the term")]
    NoChange,
    #[error("instance mismatch: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub ok: bool,
    pub failing_step: Option<usize>,
    pub diagnostic: Option<String>,
}

impl Verdict {
    fn pass() -> Verdict {
        Verdict { ok: true, failing_step: None, diagnostic: None }
    }

    fn fail(step: usize, message: String) -> Verdict {
        Verdict { ok: false, failing_step: Some(step), diagnostic: Some(message) }
    }
}

pub fn format_position(p: &[usize]) -> String {
    if p.is_empty() {
        "root".to_string()
    } else {
        p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

fn parse_position(s: &str) -> Option<Position> {
    if s == "root" {
        return Some(Vec::new());
    }
    s.split('.').map(|c| c.parse::<usize>().ok().filter(|&i| i < 2)).collect()
}

/// Parses every proof in `text`, checking only that consecutive terms chain
/// and that each chain starts at its goal's left-hand side.
pub fn load_script(text: &str) -> Result<Vec<ProofScript>, ScriptError> {
    let mut out: Vec<ProofScript> = Vec::new();
    let mut current: Option<ProofScript> = None;
    let mut started = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let syntax = |m: &str| ScriptError::Syntax { line, message: m.to_string() };
        let term = |s: &str| parse_term(s).map_err(|source| ScriptError::Parse { line, source });
        if let Some(rest) = body.strip_prefix("proof ") {
            if let Some(p) = current.take() {
                out.push(p);
            }
            let rest = rest.trim();
            let (name, rest) = rest.split_once(char::is_whitespace).ok_or_else(|| syntax("expected a name and a goal"))?;
            let (assume, goal) = rest.split_once("goal ").ok_or_else(|| syntax("missing `goal`"))?;
            let assume = assume.trim();
            let hypotheses = if assume.is_empty() {
                Vec::new()
            } else {
                let list = assume.strip_prefix("assume").ok_or_else(|| syntax("expected `assume` or `goal`"))?;
                list.split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_identity(s).map_err(|source| ScriptError::Parse { line, source }))
                    .collect::<Result<_, _>>()?
            };
            let goal = parse_identity(goal).map_err(|source| ScriptError::Parse { line, source })?;
            current = Some(ProofScript { name: name.to_string(), hypotheses, start: goal.lhs.clone(), goal, steps: Vec::new() });
            started = false;
            continue;
        }
        let p = current.as_mut().ok_or_else(|| syntax("expected `proof` header"))?;
        if let Some(rest) = body.strip_prefix("start ") {
            let t = term(rest)?;
            let expected = if started { p.last_term().clone() } else { p.goal.lhs.clone() };
            if t.normalize_comp() != expected.normalize_comp() {
                return Err(ScriptError::ChainBreak { line, expected: expected.to_string(), found: t.to_string() });
            }
            if !started {
                p.start = t;
            }
            started = true;
            continue;
        }
        let rest = body.strip_prefix('=').ok_or_else(|| syntax("expected `proof`, `start` or `=`"))?;
        if !started {
            return Err(syntax("step before `start`"));
        }
        let (t, just) = rest.rsplit_once(" by ").ok_or_else(|| syntax("missing `by`"))?;
        let to = term(t)?;
        let mut words = just.trim();
        let (label, tail) = words.split_once(char::is_whitespace).unwrap_or((words, ""));
        let justification = label.to_string();
        words = tail.trim();
        let mut reverse = false;
        if let Some(w) = words.strip_suffix("rev") {
            if w.is_empty() || w.ends_with(char::is_whitespace) {
                reverse = true;
                words = w.trim();
            }
        }
        let mut position = None;
        if let Some(w) = words.strip_prefix("at ") {
            let w = w.trim_start();
            let (pos, tail) = w.split_once(char::is_whitespace).unwrap_or((w, ""));
            position = Some(parse_position(pos).ok_or_else(|| syntax(&format!("bad position {pos:?}")))?);
            words = tail.trim();
        }
        let mut substitution = Substitution::new();
        if let Some(w) = words.strip_prefix("with ") {
            for binding in w.split(',') {
                let (v, t) = binding.split_once('=').ok_or_else(|| syntax(&format!("bad binding {binding:?}")))?;
                substitution.insert(v.trim().to_string(), term(t)?);
            }
            words = "";
        }
        if !words.is_empty() {
            return Err(syntax(&format!("unexpected {words:?}")));
        }
        let from = p.last_term().clone();
        p.steps.push(Step { from, to, justification, substitution, position, reverse, line });
    }
    if let Some(p) = current.take() {
        out.push(p);
    }
    if out.is_empty() {
        return Err(ScriptError::Empty);
    }
    Ok(out)
}

/// Rules available to a script beyond the catalog.
#[derive(Debug, Clone, Default)]
pub struct Context<'a> {
    pub hypotheses: &'a [Identity],
    /// Goals of earlier successful proofs with their hypotheses.
    pub lemmas: Vec<(String, Vec<Identity>, Identity)>,
}

struct Rule {
    identity: Identity,
    bindable: BTreeSet<String>,
    /// Instantiated hypotheses that must be assumed.
    requires: Vec<Identity>,
}

fn same_equation(a: &Identity, b: &Identity) -> bool {
    let (a, b) = (a.normalize_comp(), b.normalize_comp());
    a == b || a == b.flipped()
}

fn resolve(label: &str, catalog: &IdentityCatalog, ctx: &Context) -> Result<Rule, StepError> {
    let unknown = || StepError::UnknownCitation(label.to_string());
    if let Some(i) = label.strip_prefix("hyp:") {
        let i: usize = i.parse().map_err(|_| unknown())?;
        let h = ctx.hypotheses.get(i).ok_or_else(unknown)?;
        return Ok(Rule { identity: h.clone(), bindable: BTreeSet::new(), requires: Vec::new() });
    }
    if let Some(name) = label.strip_prefix("lemma:") {
        let (_, hyps, goal) = ctx.lemmas.iter().find(|(n, _, _)| n == name).ok_or_else(unknown)?;
        // constants of a lemma without hypotheses are arbitrary
        let bindable = if hyps.is_empty() { goal.vars() } else { BTreeSet::new() };
        return Ok(Rule { identity: goal.clone(), bindable, requires: hyps.clone() });
    }
    let c: &ConditionalIdentity = catalog.get(label).ok_or_else(unknown)?;
    Ok(Rule { identity: c.conclusion.clone(), bindable: c.vars(), requires: c.hypotheses.clone() })
}

/// Divergence point of two different normalized terms: the deepest path at
/// which they differ in more than one child (or in their head symbol).
fn divergence(a: &Term, b: &Term) -> Position {
    match (a, b) {
        (Term::Arrow(a1, a2), Term::Arrow(b1, b2)) if a1 == b1 => {
            let mut p = vec![1];
            p.extend(divergence(a2, b2));
            p
        }
        (Term::Arrow(a1, a2), Term::Arrow(b1, b2)) if a2 == b2 => {
            let mut p = vec![0];
            p.extend(divergence(a1, b1));
            p
        }
        _ => Vec::new(),
    }
}

/// Tries the rewrite `l -> r` at `pos`, returning the completed substitution.
fn try_at(from: &Term, to: &Term, l: &Term, r: &Term, pos: &[usize], rule: &Rule, seed: &Substitution) -> Result<Substitution, StepError> {
    let sub = from.subterm(pos).ok_or_else(|| StepError::BadPosition(format_position(pos)))?;
    let mut sigma = seed.clone();
    if !l.match_into(sub, &rule.bindable, &mut sigma) {
        return Err(StepError::Mismatch(format!("at {}: {} is not an instance of {}", format_position(pos), sub, l.substitute(&sigma))));
    }
    if let Some(target) = to.subterm(pos) {
        let mut extended = sigma.clone();
        if r.match_into(target, &rule.bindable, &mut extended) {
            sigma = extended;
        }
    }
    let rewritten = from.replace_at(pos, r.substitute(&sigma)).expect("position exists");
    if &rewritten != to {
        return Err(StepError::Mismatch(format!("expected {rewritten}, found {to}")));
    }
    Ok(sigma)
}

/// Validates one step against the catalog and context.
pub fn check_step(s: &Step, catalog: &IdentityCatalog, ctx: &Context) -> Result<(), StepError> {
    let from = s.from.normalize_comp();
    let to = s.to.normalize_comp();
    if s.justification == "defcomp" {
        return if from == to { Ok(()) } else { Err(StepError::Mismatch(format!("{} and {} differ beyond x' = x -> 0", s.from, s.to))) };
    }
    if from == to {
        return Err(StepError::NoChange);
    }
    let rule = resolve(&s.justification, catalog, ctx)?;
    let id = rule.identity.normalize_comp();
    let (l, r) = if s.reverse { (&id.rhs, &id.lhs) } else { (&id.lhs, &id.rhs) };
    let seed: Substitution = s.substitution.iter().map(|(k, v)| (k.clone(), v.normalize_comp())).collect();
    let candidates: Vec<Position> = match &s.position {
        Some(p) => vec![p.clone()],
        None => {
            let d = divergence(&from, &to);
            (0..=d.len()).rev().map(|k| d[..k].to_vec()).collect()
        }
    };
    let mut first_err = None;
    for pos in &candidates {
        match try_at(&from, &to, l, r, pos, &rule, &seed) {
            Ok(sigma) => {
                for h in &rule.requires {
                    let inst = h.substitute(&sigma);
                    if !ctx.hypotheses.iter().any(|a| same_equation(a, &inst)) {
                        return Err(StepError::MissingHypothesis { label: s.justification.clone(), hyp: inst.to_string() });
                    }
                }
                return Ok(());
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.unwrap_or(StepError::NoChange))
}

/// Checks every step, the chain endpoints, and the goal. Reports the first
/// failure.
pub fn replay(script: &ProofScript, catalog: &IdentityCatalog, lemmas: &[(String, Vec<Identity>, Identity)]) -> Verdict {
    let ctx = Context { hypotheses: &script.hypotheses, lemmas: lemmas.to_vec() };
    if script.start.normalize_comp() != script.goal.lhs.normalize_comp() {
        return Verdict::fail(0, format!("chain starts at {}, goal starts at {}", script.start, script.goal.lhs));
    }
    let mut prev = script.start.normalize_comp();
    for (i, s) in script.steps.iter().enumerate() {
        if s.from.normalize_comp() != prev {
            return Verdict::fail(i, format!("chain broken before step {i}"));
        }
        if let Err(e) = check_step(s, catalog, &ctx) {
            return Verdict::fail(i, format!("line {}: {e}", s.line));
        }
        prev = s.to.normalize_comp();
    }
    if prev != script.goal.rhs.normalize_comp() {
        let last = script.steps.len().saturating_sub(1);
        return Verdict::fail(last, format!("chain ends at {}, goal is {}", script.last_term(), script.goal.rhs));
    }
    Verdict::pass()
}

/// Replays a file of proofs in order; later proofs may cite earlier
/// successful ones as `lemma:<name>`.
pub fn replay_all(scripts: &[ProofScript], catalog: &IdentityCatalog) -> Vec<Verdict> {
    let mut lemmas = Vec::new();
    let mut out = Vec::new();
    for s in scripts {
        let v = replay(s, catalog, &lemmas);
        if v.ok {
            lemmas.push((s.name.clone(), s.hypotheses.clone(), s.goal.clone()));
        }
        out.push(v);
    }
    out
}

/// Script files shipped with the crate, in replay order.
pub const SHIPPED: [(&str, &str); 2] =
    [("appendix.prf", include_str!("../data/proofs/appendix.prf")), ("r1.prf", include_str!("../data/proofs/r1.prf"))];

/// Every shipped script, file by file.
pub fn shipped_scripts() -> Vec<(&'static str, Vec<ProofScript>)> {
    SHIPPED.iter().map(|(name, text)| (*name, load_script(text).expect("shipped scripts parse"))).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossCheck {
    pub proof: String,
    pub checked: usize,
    pub failures: Vec<(String, CheckResult)>,
}

impl CrossCheck {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for CrossCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: goal checked on {} algebras, {} failures", self.proof, self.checked, self.failures.len())
    }
}

/// Evaluates the goal (under the script's hypotheses) on every algebra,
/// independently of the chain.
pub fn cross_check(script: &ProofScript, corpus: &ModelCorpus) -> CrossCheck {
    let c = ConditionalIdentity { hypotheses: script.hypotheses.clone(), conclusion: script.goal.clone() };
    let failures = corpus.algebras().map(|a| (a.label(), a.check_conditional(&c))).filter(|(_, r)| !r.holds).collect();
    CrossCheck { proof: script.name.clone(), checked: corpus.len(), failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;

    const L20: &str = "
proof L3.3.20 goal [(0 -> a) -> b] -> a = b -> a
start [(0 -> a) -> b] -> a
= [(b -> a) -> (0 -> a)']' by L3.3.14 with x = a, y = b
= (b -> a)'' by L3.3.15 at 0 with x = b, y = a
= b -> a by I20
";

    fn one(text: &str) -> ProofScript {
        load_script(text).unwrap().remove(0)
    }

    #[test]
    fn loads_and_replays() {
        let cat = builtin_catalog();
        let p = one(L20);
        assert_eq!(p.steps.len(), 3);
        assert_eq!(p.goal, parse_identity("((0 -> a) -> b) -> a = b -> a").unwrap());
        assert_eq!(replay(&p, &cat, &[]), Verdict::pass());
    }

    #[test]
    fn inference_without_position_or_substitution() {
        let cat = builtin_catalog();
        let text = "proof t goal [(0 -> a) -> b] -> a = b -> a
start [(0 -> a) -> b] -> a
= [(b -> a) -> (0 -> a)']' by L3.3.14
= (b -> a)'' by L3.3.15
= b -> a by I20";
        assert!(replay(&one(text), &cat, &[]).ok);
    }

    #[test]
    fn wrong_citation_is_a_mismatch() {
        let cat = builtin_catalog();
        let s = Step {
            from: parse_term("[(b -> a) -> (0 -> a)']'").unwrap(),
            to: parse_term("(b -> a)''").unwrap(),
            justification: "L3.3.15".into(),
            substitution: [("x".to_string(), Term::var("b")), ("y".to_string(), Term::var("a"))].into(),
            position: Some(vec![0]),
            reverse: false,
            line: 1,
        };
        // L3.3.15: (x -> y) -> (0 -> y)' = (x -> y)'
        assert_eq!(check_step(&s, &cat, &Context::default()), Ok(()));
        let wrong = Step { justification: "L3.3.14".into(), ..s.clone() };
        assert!(matches!(check_step(&wrong, &cat, &Context::default()), Err(StepError::Mismatch(_))));
        let missing = Step { justification: "L9".into(), ..s };
        assert_eq!(check_step(&missing, &cat, &Context::default()), Err(StepError::UnknownCitation("L9".into())));
    }

    #[test]
    fn mutated_last_term_fails_last_step() {
        let cat = builtin_catalog();
        let bad = L20.replace("= b -> a by I20", "= (b -> a') by I20");
        let v = replay(&one(&bad), &cat, &[]);
        assert_eq!(v.failing_step, Some(2));
    }

    #[test]
    fn chain_break_and_reflexivity() {
        let text = "proof t goal a = a\nstart a\nstart b";
        assert!(matches!(load_script(text), Err(ScriptError::ChainBreak { line: 3, .. })));
        let refl = one("proof r goal a -> b = a -> b\nstart a -> b");
        assert!(replay(&refl, &builtin_catalog(), &[]).ok);
        assert!(matches!(load_script("proof t goal a = b\nstart b"), Err(ScriptError::ChainBreak { line: 2, .. })));
    }

    #[test]
    fn hypotheses_and_conditional_items() {
        let cat = builtin_catalog();
        let text = "proof h assume (a -> b') -> a = a goal ((a -> b') -> a)' = a'
start ((a -> b') -> a)'
= a' by hyp:0 at 0";
        assert!(replay(&one(text), &cat, &[]).ok);
        // L3.3.44 needs its instantiated hypothesis
        let cond = "proof c assume (a -> b') -> a = a goal (a' -> b) -> a' = a'
start (a' -> b) -> a'
= a' by L3.3.44";
        assert!(replay(&one(cond), &cat, &[]).ok);
        let unassumed = "proof c goal (a' -> b) -> a' = a'
start (a' -> b) -> a'
= a' by L3.3.44";
        let v = replay(&one(unassumed), &cat, &[]);
        assert!(!v.ok && v.diagnostic.unwrap().contains("not assumed"));
    }

    #[test]
    fn defcomp_and_lemmas() {
        let cat = builtin_catalog();
        let text = "proof a0 goal a' = a -> 0
start a'
= a -> 0 by defcomp
proof a1 goal a'' = a
start a''
= a by I20
proof a2 goal (b -> c)'' -> d = (b -> c) -> d
start (b -> c)'' -> d
= (b -> c) -> d by lemma:a1";
        let ps = load_script(text).unwrap();
        let vs = replay_all(&ps, &cat);
        assert!(vs.iter().all(|v| v.ok), "{vs:?}");
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(load_script("= a by I"), Err(ScriptError::Syntax { line: 1, .. })));
        assert!(matches!(load_script("proof t goal a = a\nstart a\n= b"), Err(ScriptError::Syntax { line: 3, .. })));
        assert!(matches!(load_script("proof t goal a = a\nstart a\n= b by I at 0.7"), Err(ScriptError::Syntax { .. })));
        assert_eq!(load_script("# nothing"), Err(ScriptError::Empty));
    }
}
