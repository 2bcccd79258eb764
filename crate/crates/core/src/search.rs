//! Exhaustive enumeration of implication zroupoids of a given size, up to
//! isomorphism, and batch identity verification over the resulting corpus.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{for_each_assignment, for_each_fixing_permutation, simples, Counterexample, FiniteAlgebra, PartialValue, Program};
use crate::catalog::IdentityCatalog;
use crate::congruence::{is_simple, is_subdirectly_irreducible};
use crate::term::{ConditionalIdentity, Identity};

pub const DEFAULT_BUDGET: u64 = 2_000_000_000;

/// Largest size accepted without an explicit budget override.
pub const MAX_DEFAULT_SIZE: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("size must be at least 1")]
    ZeroSize,
    #[error("size {0} needs an explicit budget")]
    NeedsBudget(usize),
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("unknown identity label {0:?}")]
    UnknownLabel(String),
    #[error("search budget exhausted after {nodes} nodes; {found} models found so far (incomplete)")]
    BudgetExhausted { nodes: u64, found: usize, partial: Box<ModelCorpus> },
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub n: usize,
    /// Catalog labels imposed on top of (I) and (I0).
    pub extra_identities: Vec<String>,
    /// Maximum number of search nodes.
    pub budget: u64,
    pub simple_only: bool,
    /// Reject non-canonical prefixes during search instead of only
    /// deduplicating afterwards. `None` picks inline rejection for n >= 5.
    pub inline_symmetry: Option<bool>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Allows sizes above [`MAX_DEFAULT_SIZE`].
    pub allow_large: bool,
}

impl SearchConfig {
    pub fn new(n: usize) -> SearchConfig {
        SearchConfig {
            n,
            extra_identities: Vec::new(),
            budget: DEFAULT_BUDGET,
            simple_only: false,
            inline_symmetry: None,
            threads: None,
            allow_large: false,
        }
    }

    pub fn with_identities(mut self, labels: &[&str]) -> SearchConfig {
        self.extra_identities = labels.iter().map(|s| s.to_string()).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelFlags {
    pub simple: bool,
    pub si: bool,
    pub i20: bool,
    pub dm: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelEntry {
    pub algebra: FiniteAlgebra,
    pub flags: ModelFlags,
}

impl ModelEntry {
    /// Wraps an algebra in canonical form and computes its flags.
    pub fn new(alg: &FiniteAlgebra, catalog: &IdentityCatalog) -> ModelEntry {
        let canon = alg.canonical();
        let nontrivial = canon.size() >= 2;
        let flags = ModelFlags {
            simple: nontrivial && is_simple(&canon).unwrap_or(false),
            si: nontrivial && is_subdirectly_irreducible(&canon).map(|r| r.0).unwrap_or(false),
            i20: canon.satisfies(catalog.identity("I20").expect("I20")),
            dm: canon.satisfies(catalog.identity("DM").expect("DM")),
        };
        ModelEntry { algebra: canon, flags }
    }

    pub fn to_json_line(&self) -> String {
        let mut v = self.algebra.to_json_value();
        v["flags"] = serde_json::to_value(&self.flags).expect("flags");
        serde_json::to_string(&v).expect("json")
    }
}

/// Canonical algebras, no two isomorphic, sorted by (size, table).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelCorpus {
    pub entries: Vec<ModelEntry>,
}

impl ModelCorpus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn algebras(&self) -> impl Iterator<Item = &FiniteAlgebra> {
        self.entries.iter().map(|e| &e.algebra)
    }

    pub fn filter(&self, keep: impl Fn(&ModelEntry) -> bool) -> ModelCorpus {
        ModelCorpus { entries: self.entries.iter().filter(|e| keep(e)).cloned().collect() }
    }

    pub fn extend(&mut self, other: ModelCorpus) {
        self.entries.extend(other.entries);
        self.entries.sort_by(|a, b| (a.algebra.size(), a.algebra.flat_table()).cmp(&(b.algebra.size(), b.algebra.flat_table())));
        self.entries.dedup_by(|a, b| a.algebra.flat_table() == b.algebra.flat_table());
    }

    pub fn to_json_lines(&self) -> String {
        self.entries.iter().map(|e| e.to_json_line() + "\n").collect()
    }
}

struct Constraint {
    lhs: Program,
    rhs: Program,
}

const UNSET: u8 = u8::MAX;
const DONE: u16 = u16::MAX;

/// Partial table, the values still allowed in each cell, and for every
/// constraint instance the cell whose assignment will next change its
/// evaluation (`DONE` once satisfied).
#[derive(Clone)]
struct State {
    table: Vec<u8>,
    dom: Vec<u16>,
    watch: Vec<u16>,
}

enum Outcome {
    Done,
    Conflict,
    Force(usize, u8),
    Watch(usize),
}

struct Searcher<'a> {
    n: usize,
    constraints: Vec<Constraint>,
    /// (constraint, variable values) pairs.
    instances: Vec<(usize, Vec<usize>)>,
    /// Non-identity relabellings fixing 0, with their inverses.
    perms: Vec<(Vec<u8>, Vec<u8>)>,
    /// Cells in branching order; also the order of the lex-leader test.
    order: Vec<usize>,
    inline_symmetry: bool,
    budget: u64,
    nodes: &'a AtomicU64,
    exhausted: &'a AtomicBool,
}

impl Searcher<'_> {
    fn eval(&self, table: &[u8], inst: usize, stack: &mut Vec<usize>) -> Outcome {
        let n = self.n;
        let op = |a: usize, b: usize| {
            let v = table[a * n + b];
            (v != UNSET).then_some(v as usize)
        };
        let (c, vals) = &self.instances[inst];
        let c = &self.constraints[*c];
        let l = c.lhs.run_partial(op, vals, stack);
        if let PartialValue::Blocked(a, b) = l {
            return Outcome::Watch(a * n + b);
        }
        match (l, c.rhs.run_partial(op, vals, stack)) {
            (PartialValue::Known(x), PartialValue::Known(y)) => {
                if x == y {
                    Outcome::Done
                } else {
                    Outcome::Conflict
                }
            }
            (PartialValue::Known(v), PartialValue::Root(a, b)) | (PartialValue::Root(a, b), PartialValue::Known(v)) => {
                Outcome::Force(a * n + b, v as u8)
            }
            (_, PartialValue::Blocked(a, b)) | (PartialValue::Root(a, b), _) => Outcome::Watch(a * n + b),
            (PartialValue::Blocked(..), _) => unreachable!("handled above"),
        }
    }

    /// Removes from the domain of `cell` every value under which instance
    /// `inst` already fails. False when nothing is left.
    fn lookahead(&self, st: &mut State, cell: usize, inst: usize, queue: &mut Vec<(usize, u8)>, stack: &mut Vec<usize>) -> bool {
        let mut dom = st.dom[cell];
        for v in 0..self.n as u8 {
            if dom & (1 << v) == 0 {
                continue;
            }
            st.table[cell] = v;
            if let Outcome::Conflict = self.eval(&st.table, inst, stack) {
                dom &= !(1 << v);
            }
        }
        st.table[cell] = UNSET;
        st.dom[cell] = dom;
        if dom == 0 {
            return false;
        }
        if dom.count_ones() == 1 {
            queue.push((cell, dom.trailing_zeros() as u8));
        }
        true
    }

    fn watch(&self, st: &mut State, inst: usize, outcome: Outcome, queue: &mut Vec<(usize, u8)>, stack: &mut Vec<usize>) -> bool {
        match outcome {
            Outcome::Done => st.watch[inst] = DONE,
            Outcome::Conflict => return false,
            Outcome::Force(c, w) => {
                st.watch[inst] = DONE;
                queue.push((c, w));
            }
            Outcome::Watch(c) => {
                st.watch[inst] = c as u16;
                return self.lookahead(st, c, inst, queue, stack);
            }
        }
        true
    }

    /// Applies the queued assignments and everything they force, waking the
    /// instances that watch each newly filled cell. False on a contradiction.
    fn settle(&self, st: &mut State, mut queue: Vec<(usize, u8)>, stack: &mut Vec<usize>) -> bool {
        loop {
            let Some((cell, v)) = queue.pop() else { return true };
            let cur = st.table[cell];
            if cur != UNSET {
                if cur != v {
                    return false;
                }
                continue;
            }
            if st.dom[cell] & (1 << v) == 0 {
                return false;
            }
            st.table[cell] = v;
            st.dom[cell] = 1 << v;
            for i in 0..self.instances.len() {
                if st.watch[i] as usize != cell {
                    continue;
                }
                let outcome = self.eval(&st.table, i, stack);
                if !self.watch(st, i, outcome, &mut queue, stack) {
                    return false;
                }
            }
        }
    }

    fn root(&self, stack: &mut Vec<usize>) -> Option<State> {
        let cells = self.n * self.n;
        let mut st = State { table: vec![UNSET; cells], dom: vec![(1u16 << self.n) - 1; cells], watch: vec![DONE; self.instances.len()] };
        let mut queue = Vec::new();
        for i in 0..self.instances.len() {
            let outcome = self.eval(&st.table, i, stack);
            if !self.watch(&mut st, i, outcome, &mut queue, stack) {
                return None;
            }
        }
        self.settle(&mut st, queue, stack).then_some(st)
    }

    /// False when some relabelling fixing 0 yields a table smaller, in the
    /// branching order, than every completion of the current partial table.
    fn maybe_canonical(&self, table: &[u8]) -> bool {
        let n = self.n;
        for (perm, inv) in &self.perms {
            for &i in &self.order {
                let (r, c) = (i / n, i % n);
                let src = table[inv[r] as usize * n + inv[c] as usize];
                let cell = table[i];
                if src == UNSET || cell == UNSET {
                    break;
                }
                let mapped = perm[src as usize];
                if mapped < cell {
                    return false;
                }
                if mapped > cell {
                    break;
                }
            }
        }
        true
    }

    /// Children of `st` on its branching cell; `None` for a complete table.
    fn children(&self, st: &State, stack: &mut Vec<usize>) -> Option<Vec<State>> {
        let cell = self.order.iter().copied().find(|&c| st.table[c] == UNSET)?;
        let mut out = Vec::new();
        for v in 0..self.n as u8 {
            if st.dom[cell] & (1 << v) == 0 {
                continue;
            }
            if self.exhausted.load(Ordering::Relaxed) {
                break;
            }
            if self.nodes.fetch_add(1, Ordering::Relaxed) >= self.budget {
                self.exhausted.store(true, Ordering::Relaxed);
                break;
            }
            let mut next = st.clone();
            if self.settle(&mut next, vec![(cell, v)], stack) && (!self.inline_symmetry || self.maybe_canonical(&next.table)) {
                out.push(next);
            }
        }
        Some(out)
    }

    fn dfs(&self, st: &State, stack: &mut Vec<usize>, out: &mut Vec<Vec<u8>>) {
        match self.children(st, stack) {
            None => out.push(st.table.clone()),
            Some(kids) => {
                for k in &kids {
                    self.dfs(k, stack, out);
                }
            }
        }
    }

    /// Expands the tree breadth-first `levels` times, keeping complete tables.
    fn frontier(&self, root: State, levels: usize, stack: &mut Vec<usize>, done: &mut Vec<Vec<u8>>) -> Vec<State> {
        let mut layer = vec![root];
        for _ in 0..levels {
            let mut next = Vec::new();
            for st in &layer {
                match self.children(st, stack) {
                    None => done.push(st.table.clone()),
                    Some(kids) => next.extend(kids),
                }
            }
            layer = next;
        }
        layer
    }
}

/// All models of size `cfg.n` of (I), (I0) and the extra identities, one per
/// isomorphism class, sorted by canonical table.
pub fn enumerate(cfg: &SearchConfig, catalog: &IdentityCatalog) -> Result<ModelCorpus, SearchError> {
    let n = cfg.n;
    if n == 0 {
        return Err(SearchError::ZeroSize);
    }
    if cfg.budget == 0 {
        return Err(SearchError::ZeroBudget);
    }
    if n > MAX_DEFAULT_SIZE && !cfg.allow_large {
        return Err(SearchError::NeedsBudget(n));
    }
    let mut imposed: Vec<ConditionalIdentity> = Vec::new();
    for label in ["I", "I0"].iter().map(|s| s.to_string()).chain(cfg.extra_identities.iter().cloned()) {
        let id = catalog.get(&label).ok_or_else(|| SearchError::UnknownLabel(label.clone()))?;
        imposed.push(id.clone());
    }
    let mut constraints = Vec::new();
    let mut instances = Vec::new();
    for c in imposed.iter().filter(|c| c.is_unconditional()) {
        let id = &c.conclusion;
        let vars: Vec<String> = id.vars().into_iter().collect();
        for_each_assignment(n, vars.len(), |v| {
            instances.push((constraints.len(), v.to_vec()));
            true
        });
        constraints.push(Constraint { lhs: Program::compile(&id.lhs, &vars), rhs: Program::compile(&id.rhs, &vars) });
    }

    let mut perms = Vec::new();
    for_each_fixing_permutation(n, |p| {
        if p.iter().enumerate().any(|(i, &x)| i != x) {
            let mut inv = vec![0u8; n];
            for (i, &x) in p.iter().enumerate() {
                inv[x] = i as u8;
            }
            perms.push((p.iter().map(|&x| x as u8).collect(), inv));
        }
    });

    let nodes = AtomicU64::new(0);
    let exhausted = AtomicBool::new(false);
    let searcher = Searcher {
        n,
        constraints,
        instances,
        perms,
        // Negation column first; three operations of each (I) instance are negations.
        order: (0..n).map(|r| r * n).chain((0..n * n).filter(|c| c % n != 0)).collect(),
        inline_symmetry: cfg.inline_symmetry.unwrap_or(n >= 5),
        budget: cfg.budget,
        nodes: &nodes,
        exhausted: &exhausted,
    };

    let mut raw = Vec::new();
    let mut stack = Vec::new();
    if let Some(root) = searcher.root(&mut stack) {
        // Split the tree after roughly the negation column.
        let layer = searcher.frontier(root, n, &mut stack, &mut raw);
        let run = || {
            layer
                .par_iter()
                .map(|st| {
                    let mut stack = Vec::new();
                    let mut out = Vec::new();
                    searcher.dfs(st, &mut stack, &mut out);
                    out
                })
                .flatten()
                .collect::<Vec<Vec<u8>>>()
        };
        raw.extend(match cfg.threads {
            Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build().expect("thread pool").install(run),
            None => run(),
        });
    }

    let mut tables: Vec<Vec<usize>> = raw
        .into_iter()
        .map(|t| t.into_iter().map(usize::from).collect::<Vec<usize>>())
        .filter_map(|t| {
            let alg = FiniteAlgebra::from_flat(n, t, None).ok()?;
            imposed.iter().all(|c| alg.check_conditional(c).holds).then(|| alg.canonical_form())
        })
        .collect();
    tables.sort();
    tables.dedup();

    let known: Vec<(Vec<usize>, String)> = simples().into_iter().map(|a| (a.canonical_form(), a.label())).collect();
    let mut entries: Vec<ModelEntry> = tables
        .into_par_iter()
        .enumerate()
        .map(|(i, t)| {
            let name = known.iter().find(|(k, _)| *k == t).map(|(_, l)| l.clone()).unwrap_or_else(|| {
                if n == 1 {
                    "T".to_string()
                } else {
                    format!("n{n}_{i}")
                }
            });
            let alg = FiniteAlgebra::from_flat(n, t, Some(&name)).expect("valid table");
            ModelEntry::new(&alg, catalog)
        })
        .collect();
    if cfg.simple_only {
        entries.retain(|e| e.flags.simple);
    }
    let corpus = ModelCorpus { entries };
    if exhausted.load(Ordering::Relaxed) {
        return Err(SearchError::BudgetExhausted { nodes: nodes.load(Ordering::Relaxed), found: corpus.len(), partial: Box::new(corpus) });
    }
    Ok(corpus)
}

/// Union of the corpora for sizes `1..=max_n`.
pub fn enumerate_up_to(max_n: usize, extra: &[&str], catalog: &IdentityCatalog) -> Result<ModelCorpus, SearchError> {
    let mut all = ModelCorpus::default();
    for n in 1..=max_n {
        all.extend(enumerate(&SearchConfig::new(n).with_identities(extra), catalog)?);
    }
    Ok(all)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteCell {
    pub algebra: String,
    pub label: String,
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub cells: Vec<SuiteCell>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &SuiteCell> {
        self.cells.iter().filter(|c| !c.holds)
    }

    pub fn all_pass(&self) -> bool {
        self.cells.iter().all(|c| c.holds)
    }
}

/// Checks every labelled identity on every corpus algebra. Conditional
/// entries are checked pointwise.
pub fn verify_suite(corpus: &ModelCorpus, labels: &[String], catalog: &IdentityCatalog) -> Result<SuiteReport, SearchError> {
    let ids: Vec<(&String, &ConditionalIdentity)> = labels
        .iter()
        .map(|l| catalog.get(l).map(|c| (l, c)).ok_or_else(|| SearchError::UnknownLabel(l.clone())))
        .collect::<Result<_, _>>()?;
    let cells = corpus
        .entries
        .par_iter()
        .flat_map_iter(|e| {
            ids.iter().map(move |(label, c)| {
                let r = e.algebra.check_conditional(c);
                SuiteCell { algebra: e.algebra.label(), label: label.to_string(), holds: r.holds, counterexample: r.counterexample }
            })
        })
        .collect();
    Ok(SuiteReport { cells })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceRow {
    pub algebra: String,
    /// Truth of (a) `0' -> x = x`, (b) `x'' = x`, (c) `(x -> x')' = x`, (d) `x' -> x = x`.
    pub conditions: [bool; 4],
}

impl EquivalenceRow {
    pub fn consistent(&self) -> bool {
        self.conditions.iter().all(|&c| c == self.conditions[0])
    }
}

/// Evaluates the four conditions equivalent to `x'' = x` on each algebra.
pub fn verify_equivalence_l32(corpus: &ModelCorpus, catalog: &IdentityCatalog) -> Vec<EquivalenceRow> {
    let ids: Vec<&Identity> = ["L3.2a", "L3.2b", "L3.2c", "L3.2d"].iter().map(|l| catalog.identity(l).expect("L3.2")).collect();
    corpus
        .entries
        .iter()
        .map(|e| EquivalenceRow { algebra: e.algebra.label(), conditions: [0, 1, 2, 3].map(|i| e.algebra.satisfies(ids[i])) })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub simples: Vec<ModelEntry>,
    /// Sizes whose search ran out of budget.
    pub incomplete: Vec<usize>,
}

impl Classification {
    pub fn is_complete(&self) -> bool {
        self.incomplete.is_empty()
    }
}

/// Simple models of sizes `2..=max_n`.
pub fn classify_simples(max_n: usize, budget: u64, catalog: &IdentityCatalog) -> Classification {
    let mut simples = Vec::new();
    let mut incomplete = Vec::new();
    for n in 2..=max_n {
        let mut cfg = SearchConfig::new(n);
        cfg.budget = budget;
        cfg.simple_only = true;
        cfg.allow_large = true;
        match enumerate(&cfg, catalog) {
            Ok(c) => simples.extend(c.entries),
            Err(SearchError::BudgetExhausted { partial, .. }) => {
                simples.extend(partial.entries);
                incomplete.push(n);
            }
            Err(_) => incomplete.push(n),
        }
    }
    Classification { simples, incomplete }
}
