//! Finite zroupoids given by Cayley tables, term evaluation, identity
//! checking and the H, S, P constructions.
//!
//! Element `0` is always the constant. `table[a][b]` stores `a -> b`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::congruence::Partition;
use crate::term::{ConditionalIdentity, Identity, Term};

/// Variable name -> element.
pub type Assignment = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("table must be non-empty")]
    Empty,
    #[error("row {row} has {len} entries, expected {size}")]
    DimensionMismatch { row: usize, len: usize, size: usize },
    #[error("entry ({row},{col}) = {value} is out of range for size {size}")]
    OutOfRange { row: usize, col: usize, value: usize, size: usize },
    #[error("declared size {declared} does not match table size {actual}")]
    SizeMismatch { declared: usize, actual: usize },
    #[error("unbound variable {0:?}")]
    Unbound(String),
    #[error("element {0} out of range")]
    BadElement(usize),
    #[error("not a congruence: {a}~{b} and {c}~{d} but {a}->{c} and {b}->{d} are not related")]
    NotCongruence { a: usize, b: usize, c: usize, d: usize },
    #[error("set is not closed: {a} -> {b} = {value} escapes")]
    NotClosed { a: usize, b: usize, value: usize },
    #[error("invalid algebra file: {0}")]
    Json(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteAlgebra {
    name: Option<String>,
    size: usize,
    table: Vec<usize>,
}

impl fmt::Debug for FiniteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteAlgebra({}, {:?})", self.label(), self.rows())
    }
}

/// A failed instance of an identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub assignment: Assignment,
    pub lhs: usize,
    pub rhs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub holds: bool,
    pub counterexample: Option<Counterexample>,
}

impl CheckResult {
    fn pass() -> CheckResult {
        CheckResult { holds: true, counterexample: None }
    }

    fn fail(c: Counterexample) -> CheckResult {
        CheckResult { holds: false, counterexample: Some(c) }
    }
}

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    #[serde(default)]
    name: Option<String>,
    size: usize,
    table: Vec<Vec<usize>>,
}

impl FiniteAlgebra {
    /// Builds an algebra from a square table, range-checking every entry.
    pub fn validate(table: Vec<Vec<usize>>, name: Option<&str>) -> Result<FiniteAlgebra, AlgebraError> {
        let n = table.len();
        if n == 0 {
            return Err(AlgebraError::Empty);
        }
        let mut flat = Vec::with_capacity(n * n);
        for (row, r) in table.iter().enumerate() {
            if r.len() != n {
                return Err(AlgebraError::DimensionMismatch { row, len: r.len(), size: n });
            }
            for (col, &value) in r.iter().enumerate() {
                if value >= n {
                    return Err(AlgebraError::OutOfRange { row, col, value, size: n });
                }
                flat.push(value);
            }
        }
        Ok(FiniteAlgebra { name: name.map(String::from), size: n, table: flat })
    }

    pub fn from_flat(size: usize, table: Vec<usize>, name: Option<&str>) -> Result<FiniteAlgebra, AlgebraError> {
        if size == 0 {
            return Err(AlgebraError::Empty);
        }
        if table.len() != size * size {
            return Err(AlgebraError::SizeMismatch { declared: size * size, actual: table.len() });
        }
        if let Some(i) = table.iter().position(|&v| v >= size) {
            return Err(AlgebraError::OutOfRange { row: i / size, col: i % size, value: table[i], size });
        }
        Ok(FiniteAlgebra { name: name.map(String::from), size, table })
    }

    pub fn trivial() -> FiniteAlgebra {
        FiniteAlgebra { name: Some("T".into()), size: 1, table: vec![0] }
    }

    pub fn from_json(text: &str) -> Result<FiniteAlgebra, AlgebraError> {
        let raw: AlgebraJson = serde_json::from_str(text).map_err(|e| AlgebraError::Json(e.to_string()))?;
        if raw.size != raw.table.len() {
            return Err(AlgebraError::SizeMismatch { declared: raw.size, actual: raw.table.len() });
        }
        FiniteAlgebra::validate(raw.table, raw.name.as_deref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("serializable")
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({ "name": self.name, "size": self.size, "table": self.rows() })
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("A{}", self.size))
    }

    pub fn with_name(mut self, name: &str) -> FiniteAlgebra {
        self.name = Some(name.to_string());
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn op(&self, a: usize, b: usize) -> usize {
        self.table[a * self.size + b]
    }

    /// `a' = a -> 0`.
    #[inline]
    pub fn comp(&self, a: usize) -> usize {
        self.op(a, 0)
    }

    pub fn flat_table(&self) -> &[usize] {
        &self.table
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    pub fn evaluate(&self, t: &Term, a: &Assignment) -> Result<usize, AlgebraError> {
        Ok(match t {
            Term::Var(v) => {
                let e = *a.get(v).ok_or_else(|| AlgebraError::Unbound(v.clone()))?;
                if e >= self.size {
                    return Err(AlgebraError::BadElement(e));
                }
                e
            }
            Term::Zero => 0,
            Term::Comp(s) => self.comp(self.evaluate(s, a)?),
            Term::Arrow(l, r) => self.op(self.evaluate(l, a)?, self.evaluate(r, a)?),
        })
    }

    /// Exhaustive check over all assignments of the identity's variables,
    /// sorted alphabetically, in lexicographic order. Reports the first
    /// failing assignment.
    pub fn check_identity(&self, id: &Identity) -> CheckResult {
        self.check_conditional(&ConditionalIdentity::unconditional(id.clone()))
    }

    /// Checks `hyps |- conclusion` pointwise over all assignments.
    pub fn check_conditional(&self, c: &ConditionalIdentity) -> CheckResult {
        let vars: Vec<String> = c.vars().into_iter().collect();
        let hyps: Vec<(Program, Program)> =
            c.hypotheses.iter().map(|h| (Program::compile(&h.lhs, &vars), Program::compile(&h.rhs, &vars))).collect();
        let lhs = Program::compile(&c.conclusion.lhs, &vars);
        let rhs = Program::compile(&c.conclusion.rhs, &vars);
        let mut stack = Vec::new();
        let mut found = None;
        for_each_assignment(self.size, vars.len(), |vals| {
            let premises = hyps.iter().all(|(l, r)| l.run(self, vals, &mut stack) == r.run(self, vals, &mut stack));
            if !premises {
                return true;
            }
            let (x, y) = (lhs.run(self, vals, &mut stack), rhs.run(self, vals, &mut stack));
            if x != y {
                found = Some(Counterexample { assignment: vars.iter().cloned().zip(vals.iter().copied()).collect(), lhs: x, rhs: y });
                return false;
            }
            true
        });
        match found {
            Some(c) => CheckResult::fail(c),
            None => CheckResult::pass(),
        }
    }

    pub fn satisfies(&self, id: &Identity) -> bool {
        self.check_identity(id).holds
    }

    /// Componentwise product; the pair `(a, b)` is encoded as `a * |B| + b`.
    pub fn direct_product(&self, other: &FiniteAlgebra) -> FiniteAlgebra {
        let (n, m) = (self.size, other.size);
        let size = n * m;
        let mut table = Vec::with_capacity(size * size);
        for p in 0..size {
            for q in 0..size {
                let (a1, b1) = (p / m, p % m);
                let (a2, b2) = (q / m, q % m);
                table.push(self.op(a1, a2) * m + other.op(b1, b2));
            }
        }
        let name = format!("{}x{}", self.label(), other.label());
        FiniteAlgebra { name: Some(name), size, table }
    }

    /// Least subuniverse containing `seed` and the constant.
    pub fn subuniverse_closure(&self, seed: &[usize]) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = seed.iter().copied().filter(|&e| e < self.size).collect();
        set.insert(0);
        let mut frontier: Vec<usize> = set.iter().copied().collect();
        while !frontier.is_empty() {
            let current: Vec<usize> = set.iter().copied().collect();
            let mut next = Vec::new();
            for &a in &frontier {
                for &b in &current {
                    for v in [self.op(a, b), self.op(b, a)] {
                        if set.insert(v) {
                            next.push(v);
                        }
                    }
                }
            }
            frontier = next;
        }
        set
    }

    /// The induced algebra on a closed set containing 0; elements are
    /// relabelled in increasing order.
    pub fn subalgebra(&self, universe: &BTreeSet<usize>) -> Result<FiniteAlgebra, AlgebraError> {
        if !universe.contains(&0) {
            return Err(AlgebraError::NotClosed { a: 0, b: 0, value: 0 });
        }
        let elems: Vec<usize> = universe.iter().copied().collect();
        let index: BTreeMap<usize, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut table = Vec::with_capacity(elems.len() * elems.len());
        for &a in &elems {
            for &b in &elems {
                let v = self.op(a, b);
                table.push(*index.get(&v).ok_or(AlgebraError::NotClosed { a, b, value: v })?);
            }
        }
        Ok(FiniteAlgebra { name: None, size: elems.len(), table })
    }

    /// Quotient by a congruence; blocks become elements in canonical block
    /// order, so the block of 0 is the constant.
    pub fn quotient(&self, p: &Partition) -> Result<FiniteAlgebra, AlgebraError> {
        if p.universe_size() != self.size {
            return Err(AlgebraError::SizeMismatch { declared: self.size, actual: p.universe_size() });
        }
        let blocks = p.blocks();
        let k = blocks.len();
        let mut table = vec![usize::MAX; k * k];
        for (i, bi) in blocks.iter().enumerate() {
            for (j, bj) in blocks.iter().enumerate() {
                let (a0, c0) = (bi[0], bj[0]);
                let target = p.block_of(self.op(a0, c0));
                for &b in bi {
                    for &d in bj {
                        if p.block_of(self.op(b, d)) != target {
                            return Err(AlgebraError::NotCongruence { a: a0, b, c: c0, d });
                        }
                    }
                }
                table[i * k + j] = target;
            }
        }
        Ok(FiniteAlgebra { name: None, size: k, table })
    }

    /// Table of the algebra relabelled by `perm` (old element -> new element).
    pub fn permuted(&self, perm: &[usize]) -> FiniteAlgebra {
        let n = self.size;
        let mut table = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                table[perm[a] * n + perm[b]] = perm[self.op(a, b)];
            }
        }
        FiniteAlgebra { name: self.name.clone(), size: n, table }
    }

    /// Lexicographically least flattened table over all relabellings fixing 0.
    /// Tries all `(n-1)!` of them, so only practical for small `n`.
    pub fn canonical_form(&self) -> Vec<usize> {
        let n = self.size;
        let mut best = self.table.clone();
        let mut candidate = vec![0; n * n];
        for_each_fixing_permutation(n, |perm| {
            for a in 0..n {
                for b in 0..n {
                    candidate[perm[a] * n + perm[b]] = perm[self.op(a, b)];
                }
            }
            if candidate < best {
                best.copy_from_slice(&candidate);
            }
        });
        best
    }

    pub fn canonical(&self) -> FiniteAlgebra {
        FiniteAlgebra { name: self.name.clone(), size: self.size, table: self.canonical_form() }
    }

    pub fn is_isomorphic(&self, other: &FiniteAlgebra) -> bool {
        self.size == other.size && self.canonical_form() == other.canonical_form()
    }

    /// Whether `map` (indexed by elements of `self`) is a homomorphism into
    /// `target`: constant and operation preserving.
    pub fn is_homomorphism(&self, target: &FiniteAlgebra, map: &[usize]) -> bool {
        map.len() == self.size
            && map.iter().all(|&v| v < target.size)
            && map[0] == 0
            && (0..self.size).all(|a| (0..self.size).all(|b| map[self.op(a, b)] == target.op(map[a], map[b])))
    }
}

/// Calls `f` with every tuple in `{0..n}^k`, in lexicographic order, until
/// `f` returns false.
pub(crate) fn for_each_assignment(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) {
    let mut vals = vec![0usize; k];
    loop {
        if !f(&vals) {
            return;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            vals[i] += 1;
            if vals[i] < n {
                break;
            }
            vals[i] = 0;
        }
    }
}

/// Every permutation of `0..n` that fixes 0, starting with the identity.
pub(crate) fn for_each_fixing_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        f(&perm);
        // next lexicographic permutation of perm[1..]
        let tail = &mut perm[1.min(n)..];
        let Some(i) = (1..tail.len()).rev().find(|&i| tail[i - 1] < tail[i]) else {
            return;
        };
        let j = (i..tail.len()).rev().find(|&j| tail[j] > tail[i - 1]).expect("successor exists");
        tail.swap(i - 1, j);
        tail[i..].reverse();
    }
}

/// A term compiled to postfix code over variable slots.
#[derive(Debug, Clone)]
pub(crate) struct Program {
    code: Vec<Instr>,
}

#[derive(Debug, Clone, Copy)]
enum Instr {
    Var(usize),
    Zero,
    Comp,
    Arrow,
}

impl Program {
    /// `vars` fixes the slot order; every variable of `t` must appear in it.
    pub(crate) fn compile(t: &Term, vars: &[String]) -> Program {
        fn go(t: &Term, vars: &[String], code: &mut Vec<Instr>) {
            match t {
                Term::Var(v) => code.push(Instr::Var(vars.iter().position(|w| w == v).expect("variable slot"))),
                Term::Zero => code.push(Instr::Zero),
                Term::Comp(s) => {
                    go(s, vars, code);
                    code.push(Instr::Comp);
                }
                Term::Arrow(a, b) => {
                    go(a, vars, code);
                    go(b, vars, code);
                    code.push(Instr::Arrow);
                }
            }
        }
        let mut code = Vec::new();
        go(t, vars, &mut code);
        Program { code }
    }

    #[inline]
    pub(crate) fn run(&self, alg: &FiniteAlgebra, vals: &[usize], stack: &mut Vec<usize>) -> usize {
        self.run_with(|a, b| alg.op(a, b), vals, stack)
    }

    /// Runs against an arbitrary operation.
    #[inline]
    pub(crate) fn run_with(&self, op: impl Fn(usize, usize) -> usize, vals: &[usize], stack: &mut Vec<usize>) -> usize {
        stack.clear();
        for ins in &self.code {
            match *ins {
                Instr::Var(i) => stack.push(vals[i]),
                Instr::Zero => stack.push(0),
                Instr::Comp => {
                    let a = stack.pop().expect("operand");
                    stack.push(op(a, 0));
                }
                Instr::Arrow => {
                    let b = stack.pop().expect("operand");
                    let a = stack.pop().expect("operand");
                    stack.push(op(a, b));
                }
            }
        }
        stack.pop().expect("result")
    }

    /// Evaluates over a partial table (`None` marks an unfilled cell). On
    /// failure reports the first unfilled cell reached and whether it is the
    /// final operation.
    #[inline]
    pub(crate) fn run_partial(&self, op: impl Fn(usize, usize) -> Option<usize>, vals: &[usize], stack: &mut Vec<usize>) -> PartialValue {
        stack.clear();
        let last = self.code.len() - 1;
        for (i, ins) in self.code.iter().enumerate() {
            let (a, b) = match *ins {
                Instr::Var(v) => {
                    stack.push(vals[v]);
                    continue;
                }
                Instr::Zero => {
                    stack.push(0);
                    continue;
                }
                Instr::Comp => (stack.pop().expect("operand"), 0),
                Instr::Arrow => {
                    let b = stack.pop().expect("operand");
                    (stack.pop().expect("operand"), b)
                }
            };
            match op(a, b) {
                Some(v) => stack.push(v),
                None if i == last => return PartialValue::Root(a, b),
                None => return PartialValue::Blocked(a, b),
            }
        }
        PartialValue::Known(stack.pop().expect("result"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PartialValue {
    Known(usize),
    /// Everything but the cell `a -> b` at the root is determined.
    Root(usize, usize),
    /// Evaluation stopped at the unfilled cell `a -> b` below the root.
    Blocked(usize, usize),
}

const JSON_2Z: &str = include_str!("../data/algebras/2z.json");
const JSON_2S: &str = include_str!("../data/algebras/2s.json");
const JSON_2B: &str = include_str!("../data/algebras/2b.json");
const JSON_3K: &str = include_str!("../data/algebras/3k.json");
const JSON_4D: &str = include_str!("../data/algebras/4d.json");

/// The 2-element algebra with `x -> y = 0`.
pub fn two_z() -> FiniteAlgebra {
    FiniteAlgebra::from_json(JSON_2Z).expect("builtin")
}

/// The 2-element join-semilattice with least element 0.
pub fn two_s() -> FiniteAlgebra {
    FiniteAlgebra::from_json(JSON_2S).expect("builtin")
}

/// The 2-element Boolean algebra.
pub fn two_b() -> FiniteAlgebra {
    FiniteAlgebra::from_json(JSON_2B).expect("builtin")
}

/// The 3-element Kleene algebra.
pub fn three_k() -> FiniteAlgebra {
    FiniteAlgebra::from_json(JSON_3K).expect("builtin")
}

/// The 4-element De Morgan algebra.
pub fn four_d() -> FiniteAlgebra {
    FiniteAlgebra::from_json(JSON_4D).expect("builtin")
}

/// The five simple implication zroupoids, smallest first.
pub fn simples() -> Vec<FiniteAlgebra> {
    vec![two_z(), two_s(), two_b(), three_k(), four_d()]
}
