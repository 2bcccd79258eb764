//! Variety membership for finite algebras, finitely generated free
//! algebras, and the lattice of varieties generated by families of finite
//! algebras.
//!
//! Membership combines two semi-procedures. A positive answer carries a
//! subalgebra of a finite power of the generators together with a
//! surjective homomorphism onto the candidate; a negative answer carries an
//! identity that holds in every generator and fails in the candidate. Both
//! kinds of witness are re-validated before they are returned.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{for_each_assignment, FiniteAlgebra};
use crate::catalog::IdentityCatalog;
use crate::term::{Identity, Term};

pub const DEFAULT_ELEMENT_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VarietyError {
    #[error("free algebra closure exceeded {0} elements")]
    Budget(usize),
    #[error("membership undecided for: {}", .0.join("; "))]
    Undecided(Vec<String>),
    #[error("duplicate algebra name {0:?}")]
    DuplicateName(String),
}

/// Search limits for [`in_variety`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Effort {
    /// Largest number of factors in a direct power searched for a witness.
    pub max_power: usize,
    /// Term depth bound of the separating-identity search.
    pub max_depth: usize,
    /// Variable bound of the separating-identity search.
    pub max_vars: usize,
    /// Element budget of free algebras and closures.
    pub element_budget: usize,
}

impl Default for Effort {
    fn default() -> Effort {
        Effort { max_power: 3, max_depth: 4, max_vars: 3, element_budget: DEFAULT_ELEMENT_BUDGET }
    }
}

/// A subalgebra of the product of `factors` (elements as coordinate
/// vectors) and the image of each element in the candidate algebra.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberWitness {
    pub factors: Vec<String>,
    pub elements: Vec<Vec<usize>>,
    pub images: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MembershipVerdict {
    Member { witness: MemberWitness },
    NonMember { identity: String, counterexample: BTreeMap<String, usize> },
    Unknown,
}

impl MembershipVerdict {
    pub fn is_member(&self) -> bool {
        matches!(self, MembershipVerdict::Member { .. })
    }

    pub fn is_non_member(&self) -> bool {
        matches!(self, MembershipVerdict::NonMember { .. })
    }
}

/// A free algebra over a class, as a subalgebra of a power.
#[derive(Debug, Clone)]
pub struct FreeAlgebra {
    pub algebra: FiniteAlgebra,
    /// Element index of each free generator.
    pub generators: Vec<usize>,
    /// A term denoting each element.
    pub terms: Vec<Term>,
    /// Coordinates of each element in the ambient power.
    pub coordinates: Vec<Vec<usize>>,
    /// Factor name of each coordinate.
    pub factors: Vec<String>,
}

/// Names `x, y, z, u, v, w` then `x7, x8, …`.
pub fn generator_names(k: usize) -> Vec<String> {
    const BASE: [&str; 6] = ["x", "y", "z", "u", "v", "w"];
    (0..k).map(|i| if i < BASE.len() { BASE[i].to_string() } else { format!("x{}", i + 1) }).collect()
}

/// Closure of a set of tuples under the coordinatewise operation of a
/// product, recording a term for each element.
struct TupleClosure {
    elements: Vec<Vec<usize>>,
    terms: Vec<Term>,
    index: HashMap<Vec<usize>, usize>,
    table: HashMap<(usize, usize), usize>,
}

impl TupleClosure {
    fn new() -> TupleClosure {
        TupleClosure { elements: Vec::new(), terms: Vec::new(), index: HashMap::new(), table: HashMap::new() }
    }

    fn add(&mut self, tuple: Vec<usize>, term: Term) -> usize {
        if let Some(&i) = self.index.get(&tuple) {
            return i;
        }
        let i = self.elements.len();
        self.index.insert(tuple.clone(), i);
        self.elements.push(tuple);
        self.terms.push(term);
        i
    }

    fn close(&mut self, factors: &[&FiniteAlgebra], budget: usize) -> Result<(), VarietyError> {
        let mut i = 0;
        while i < self.elements.len() {
            for j in 0..=i {
                for (a, b) in [(i, j), (j, i)] {
                    if self.table.contains_key(&(a, b)) {
                        continue;
                    }
                    let tuple: Vec<usize> =
                        factors.iter().enumerate().map(|(c, f)| f.op(self.elements[a][c], self.elements[b][c])).collect();
                    let term =
                        if b == 0 { Term::comp(self.terms[a].clone()) } else { Term::arrow(self.terms[a].clone(), self.terms[b].clone()) };
                    let r = self.add(tuple, term);
                    self.table.insert((a, b), r);
                    if self.elements.len() > budget {
                        return Err(VarietyError::Budget(budget));
                    }
                }
            }
            i += 1;
        }
        Ok(())
    }

    fn algebra(&self, name: &str) -> FiniteAlgebra {
        let m = self.elements.len();
        let flat = (0..m).flat_map(|a| (0..m).map(move |b| (a, b))).map(|p| self.table[&p]).collect();
        FiniteAlgebra::from_flat(m, flat, Some(name)).expect("closed table")
    }
}

/// The free algebra on `k` generators of the variety generated by `class`:
/// the subalgebra of the product over `B` in `class` of `B^(B^k)` generated
/// by the projection tuples and the constant. Element 0 is the constant.
pub fn free_algebra(class: &[FiniteAlgebra], k: usize, budget: usize) -> Result<FreeAlgebra, VarietyError> {
    let mut factors: Vec<&FiniteAlgebra> = Vec::new();
    let mut gens: Vec<Vec<usize>> = vec![Vec::new(); k];
    for b in class {
        for_each_assignment(b.size(), k, |vals| {
            factors.push(b);
            for (g, &v) in vals.iter().enumerate() {
                gens[g].push(v);
            }
            true
        });
    }
    let names = generator_names(k);
    let mut cl = TupleClosure::new();
    cl.add(vec![0; factors.len()], Term::Zero);
    let generators: Vec<usize> = gens.into_iter().zip(&names).map(|(g, n)| cl.add(g, Term::var(n))).collect();
    cl.close(&factors, budget)?;
    let label = format!("F({};{})", class.iter().map(|b| b.label()).collect::<Vec<_>>().join(","), k);
    Ok(FreeAlgebra {
        algebra: cl.algebra(&label),
        generators,
        terms: cl.terms,
        coordinates: cl.elements,
        factors: factors.iter().map(|f| f.label()).collect(),
    })
}

/// A smallest set of nonzero elements that, with the constant, generates
/// the algebra. Ties go to the lexicographically first set.
pub fn minimal_generating_set(a: &FiniteAlgebra) -> Vec<usize> {
    let n = a.size();
    for r in 0..n {
        let mut found = None;
        for_subsets(1, n, r, &mut Vec::new(), &mut |s| {
            if found.is_none() && a.subuniverse_closure(s).len() == n {
                found = Some(s.to_vec());
            }
        });
        if let Some(s) = found {
            return s;
        }
    }
    (1..n).collect()
}

fn for_subsets(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == r {
        f(cur);
        return;
    }
    for e in start..n {
        cur.push(e);
        for_subsets(e + 1, n, r, cur, f);
        cur.pop();
    }
}

/// Pair closure of `(tuple, image)` seeds; `None` when some tuple receives
/// two images, i.e. the seed assignment does not extend to a homomorphism.
fn extend_to_homomorphism(
    factors: &[&FiniteAlgebra],
    target: &FiniteAlgebra,
    seeds: &[(Vec<usize>, usize)],
    budget: usize,
) -> Option<(Vec<Vec<usize>>, Vec<usize>)> {
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut elems: Vec<Vec<usize>> = Vec::new();
    let mut images: Vec<usize> = Vec::new();
    let mut push = |t: Vec<usize>, v: usize, elems: &mut Vec<Vec<usize>>, images: &mut Vec<usize>| -> Option<()> {
        match index.get(&t) {
            Some(&i) => (images[i] == v).then_some(()),
            None => {
                index.insert(t.clone(), elems.len());
                elems.push(t);
                images.push(v);
                Some(())
            }
        }
    };
    push(vec![0; factors.len()], 0, &mut elems, &mut images)?;
    for (t, v) in seeds {
        push(t.clone(), *v, &mut elems, &mut images)?;
    }
    let mut i = 0;
    while i < elems.len() {
        for j in 0..=i {
            for (a, b) in [(i, j), (j, i)] {
                let t: Vec<usize> = factors.iter().enumerate().map(|(c, f)| f.op(elems[a][c], elems[b][c])).collect();
                let v = target.op(images[a], images[b]);
                push(t, v, &mut elems, &mut images)?;
                if elems.len() > budget {
                    return None;
                }
            }
        }
        i += 1;
    }
    Some((elems, images))
}

/// Searches products of exactly `m` factors from `class` (with repetition)
/// for a subalgebra mapping onto `a`.
fn power_witness(a: &FiniteAlgebra, class: &[FiniteAlgebra], m: usize, budget: usize) -> Option<MemberWitness> {
    let gens = minimal_generating_set(a);
    let mut choice = vec![0usize; m];
    loop {
        let factors: Vec<&FiniteAlgebra> = choice.iter().map(|&i| &class[i]).collect();
        let sizes: Vec<usize> = factors.iter().map(|f| f.size()).collect();
        let total: usize = sizes.iter().product();
        let decode = |mut code: usize| -> Vec<usize> {
            let mut t = vec![0; m];
            for c in (0..m).rev() {
                t[c] = code % sizes[c];
                code /= sizes[c];
            }
            t
        };
        let mut found = None;
        for_each_assignment(total, gens.len(), |codes| {
            let seeds: Vec<(Vec<usize>, usize)> = codes.iter().zip(&gens).map(|(&c, &g)| (decode(c), g)).collect();
            if let Some((elements, images)) = extend_to_homomorphism(&factors, a, &seeds, budget) {
                found = Some(MemberWitness { factors: factors.iter().map(|f| f.label()).collect(), elements, images });
                return false;
            }
            true
        });
        if found.is_some() {
            return found;
        }
        // next non-decreasing index tuple
        let pos = (0..m).rev().find(|&i| choice[i] + 1 < class.len())?;
        let v = choice[pos] + 1;
        for c in choice.iter_mut().skip(pos) {
            *c = v;
        }
    }
}

/// Independent re-check of a membership witness.
pub fn validate_member(a: &FiniteAlgebra, class: &[FiniteAlgebra], w: &MemberWitness) -> Result<(), String> {
    let factors: Vec<&FiniteAlgebra> = w
        .factors
        .iter()
        .map(|n| class.iter().find(|b| &b.label() == n).ok_or_else(|| format!("unknown factor {n}")))
        .collect::<Result<_, _>>()?;
    if w.elements.len() != w.images.len() {
        return Err("elements and images differ in length".into());
    }
    let index: HashMap<&Vec<usize>, usize> = w.elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
    for e in &w.elements {
        if e.len() != factors.len() || e.iter().zip(&factors).any(|(&v, f)| v >= f.size()) {
            return Err(format!("{e:?} is not an element of the product"));
        }
    }
    let zero = vec![0; factors.len()];
    match index.get(&zero) {
        Some(&i) if w.images[i] == 0 => {}
        _ => return Err("constant missing or not mapped to 0".into()),
    }
    for (i, x) in w.elements.iter().enumerate() {
        for (j, y) in w.elements.iter().enumerate() {
            let t: Vec<usize> = factors.iter().enumerate().map(|(c, f)| f.op(x[c], y[c])).collect();
            let k = *index.get(&t).ok_or_else(|| format!("{x:?} -> {y:?} leaves the subuniverse"))?;
            if w.images[k] != a.op(w.images[i], w.images[j]) {
                return Err(format!("map does not preserve {x:?} -> {y:?}"));
            }
        }
    }
    let hit: BTreeSet<usize> = w.images.iter().copied().collect();
    if hit.len() != a.size() || w.images.iter().any(|&v| v >= a.size()) {
        return Err("map is not onto".into());
    }
    Ok(())
}

/// Independent re-check of a separating identity; returns the first
/// failing assignment in `a`.
pub fn validate_non_member(a: &FiniteAlgebra, class: &[FiniteAlgebra], id: &Identity) -> Result<BTreeMap<String, usize>, String> {
    if let Some(b) = class.iter().find(|b| !b.satisfies(id)) {
        return Err(format!("{id} fails in generator {}", b.label()));
    }
    let r = a.check_identity(id);
    r.counterexample.map(|c| c.assignment).ok_or_else(|| format!("{id} holds in {}", a.label()))
}

/// Breadth-first term enumeration over `v` variables up to `max_depth`,
/// deduplicated by their value pattern across `class`. Two terms with equal
/// patterns on the class but different ones on `a` give an identity of the
/// class that fails in `a`.
fn enumerate_separation(a: &FiniteAlgebra, class: &[FiniteAlgebra], v: usize, max_depth: usize, budget: usize) -> Option<Identity> {
    let names = generator_names(v);
    // one coordinate per (algebra, assignment); the candidate comes last
    let mut algs: Vec<&FiniteAlgebra> = class.iter().collect();
    algs.push(a);
    let mut coords: Vec<(usize, Vec<usize>)> = Vec::new();
    for (ai, alg) in algs.iter().enumerate() {
        for_each_assignment(alg.size(), v, |vals| {
            coords.push((ai, vals.to_vec()));
            true
        });
    }
    let split = coords.iter().position(|(ai, _)| *ai == class.len()).unwrap_or(coords.len());
    let op = |x: &[usize], y: &[usize]| -> Vec<usize> { coords.iter().enumerate().map(|(c, (ai, _))| algs[*ai].op(x[c], y[c])).collect() };
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut reps: Vec<(Vec<usize>, Term)> = Vec::new();
    let mut level_start = 0;
    let mut consider = |vals: Vec<usize>, t: Term, reps: &mut Vec<(Vec<usize>, Term)>| -> Option<Identity> {
        let key = vals[..split].to_vec();
        match seen.get(&key) {
            Some(&i) => {
                if reps[i].0[split..] != vals[split..] {
                    return Some(Identity::new(reps[i].1.clone(), t));
                }
                None
            }
            None => {
                seen.insert(key, reps.len());
                reps.push((vals, t));
                None
            }
        }
    };
    if let Some(id) = consider(vec![0; coords.len()], Term::Zero, &mut reps) {
        return Some(id);
    }
    for (g, n) in names.iter().enumerate() {
        let vals = coords.iter().map(|(_, asg)| asg[g]).collect();
        if let Some(id) = consider(vals, Term::var(n), &mut reps) {
            return Some(id);
        }
    }
    for _ in 0..max_depth {
        let level_end = reps.len();
        for i in 0..level_end {
            for j in 0..level_end {
                if i < level_start && j < level_start {
                    continue;
                }
                let vals = op(&reps[i].0, &reps[j].0);
                let t = if j == 0 { Term::comp(reps[i].1.clone()) } else { Term::arrow(reps[i].1.clone(), reps[j].1.clone()) };
                if let Some(id) = consider(vals, t, &mut reps) {
                    return Some(id);
                }
                if reps.len() > budget {
                    return None;
                }
            }
        }
        if reps.len() == level_end {
            break;
        }
        level_start = level_end;
    }
    None
}

/// Labels tried, in order, as separating identities before term search.
const CANDIDATES: [&str; 7] = ["I", "I0", "I20", "DM", "KL2", "BA", "KL1"];

fn non_member(a: &FiniteAlgebra, class: &[FiniteAlgebra], id: Identity) -> Option<MembershipVerdict> {
    let cx = validate_non_member(a, class, &id).ok()?;
    Some(MembershipVerdict::NonMember { identity: id.to_string(), counterexample: cx })
}

/// Decides `a ∈ V(class)` within `effort`.
pub fn in_variety(a: &FiniteAlgebra, class: &[FiniteAlgebra], catalog: &IdentityCatalog, effort: &Effort) -> MembershipVerdict {
    let member = |w: MemberWitness| {
        debug_assert_eq!(validate_member(a, class, &w), Ok(()));
        MembershipVerdict::Member { witness: w }
    };
    if a.size() == 1 {
        // the image of any generator, or the empty product
        let (factors, elements) = match class.first() {
            Some(b) => (vec![b.label()], (0..b.size()).map(|e| vec![e]).collect()),
            None => (Vec::new(), vec![Vec::new()]),
        };
        let images = vec![0; elements.len()];
        return member(MemberWitness { factors, elements, images });
    }
    if class.is_empty() {
        let id = Identity::new(Term::var("x"), Term::Zero);
        return non_member(a, class, id).expect("x = 0 separates from the trivial class");
    }
    if let Some(w) = power_witness(a, class, 1, effort.element_budget) {
        return member(w);
    }
    for label in CANDIDATES {
        if let Some(v) = catalog.identity(label).and_then(|id| non_member(a, class, id.clone())) {
            return v;
        }
    }
    for v in 1..=effort.max_vars {
        if let Some(v) = enumerate_separation(a, class, v, effort.max_depth, effort.element_budget).and_then(|id| non_member(a, class, id))
        {
            return v;
        }
    }
    for m in 2..=effort.max_power {
        if let Some(w) = power_witness(a, class, m, effort.element_budget) {
            return member(w);
        }
    }
    // decisive: a is in V(class) iff the generators of a are the image of
    // the free generators under a homomorphism
    let gens = minimal_generating_set(a);
    let Ok(free) = free_algebra(class, gens.len(), effort.element_budget) else { return MembershipVerdict::Unknown };
    let names = generator_names(gens.len());
    let asg: BTreeMap<String, usize> = names.iter().cloned().zip(gens.iter().copied()).collect();
    let images: Vec<usize> = free.terms.iter().map(|t| a.evaluate(t, &asg).expect("bound")).collect();
    let f = &free.algebra;
    for x in 0..f.size() {
        for y in 0..f.size() {
            let z = f.op(x, y);
            if images[z] != a.op(images[x], images[y]) {
                let rhs =
                    if y == 0 { Term::comp(free.terms[x].clone()) } else { Term::arrow(free.terms[x].clone(), free.terms[y].clone()) };
                let id = Identity::new(free.terms[z].clone(), rhs);
                return non_member(a, class, id).unwrap_or(MembershipVerdict::Unknown);
            }
        }
    }
    member(MemberWitness { factors: free.factors, elements: free.coordinates, images })
}

/// One class of generating families with the same variety.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarietyNode {
    /// Generators of the smallest family in the class; empty for the
    /// trivial variety.
    pub generators: Vec<String>,
    /// Indices of the nodes this node covers.
    pub covers: Vec<usize>,
    /// Every input family generating this variety.
    pub families: Vec<Vec<String>>,
}

impl VarietyNode {
    pub fn label(&self) -> String {
        if self.generators.is_empty() {
            "T".to_string()
        } else {
            self.generators.join(", ")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarietyPoset {
    pub nodes: Vec<VarietyNode>,
    /// `leq[i][j]` iff node `i` is contained in node `j`.
    #[serde(skip)]
    pub leq: Vec<Vec<bool>>,
}

impl VarietyPoset {
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self.nodes.iter().enumerate().flat_map(|(i, n)| n.covers.iter().map(move |&j| (j, i))).collect();
        e.sort();
        e
    }

    pub fn find(&self, generators: &[&str]) -> Option<usize> {
        self.nodes.iter().position(|n| n.generators.iter().map(String::as_str).eq(generators.iter().copied()))
    }

    /// Hasse diagram, bottom to top, lower node first on each edge.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph varieties {\n  rankdir=BT;\n");
        for n in &self.nodes {
            s += &format!("  \"{}\";\n", n.label());
        }
        for (lo, hi) in self.edges() {
            s += &format!("  \"{}\" -> \"{}\";\n", self.nodes[lo].label(), self.nodes[hi].label());
        }
        s += "}\n";
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.nodes.iter().map(|n| serde_json::json!({
                "label": n.label(),
                "generators": n.generators,
                "families": n.families,
                "covers": n.covers.iter().map(|&c| self.nodes[c].label()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Every subset of `algs`, in order of size and then position.
pub fn all_subsets(algs: &[FiniteAlgebra]) -> Vec<Vec<FiniteAlgebra>> {
    let n = algs.len();
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|&m| (m.count_ones(), (0..n).filter(|&i| m & (1 << i) != 0).collect::<Vec<_>>()));
    masks.into_iter().map(|m| (0..n).filter(|&i| m & (1 << i) != 0).map(|i| algs[i].clone()).collect()).collect()
}

/// Varieties generated by the given families, identified under mutual
/// containment, with their Hasse diagram.
pub fn variety_poset(families: &[Vec<FiniteAlgebra>], catalog: &IdentityCatalog, effort: &Effort) -> Result<VarietyPoset, VarietyError> {
    // every distinct algebra, in first-appearance order
    let mut algs: Vec<FiniteAlgebra> = Vec::new();
    for f in families {
        for a in f {
            match algs.iter().find(|b| b.label() == a.label()) {
                Some(b) if b.flat_table() != a.flat_table() => return Err(VarietyError::DuplicateName(a.label())),
                Some(_) => {}
                None => algs.push(a.clone()),
            }
        }
    }
    let pos = |a: &FiniteAlgebra| algs.iter().position(|b| b.label() == a.label()).expect("collected");
    let fams: Vec<Vec<usize>> = families
        .iter()
        .map(|f| {
            let mut v: Vec<usize> = f.iter().map(pos).collect();
            v.sort();
            v.dedup();
            v
        })
        .collect();
    let distinct: Vec<Vec<usize>> = {
        let mut d: Vec<Vec<usize>> = Vec::new();
        for f in &fams {
            if !d.contains(f) {
                d.push(f.clone());
            }
        }
        d
    };
    // member[a][f]: algebra a lies in V(family f)
    let jobs: Vec<(usize, usize)> = (0..algs.len()).flat_map(|a| (0..distinct.len()).map(move |f| (a, f))).collect();
    let verdicts: Vec<MembershipVerdict> = jobs
        .par_iter()
        .map(|&(a, f)| {
            if distinct[f].contains(&a) {
                return MembershipVerdict::Member { witness: MemberWitness { factors: vec![], elements: vec![], images: vec![] } };
            }
            let class: Vec<FiniteAlgebra> = distinct[f].iter().map(|&i| algs[i].clone()).collect();
            in_variety(&algs[a], &class, catalog, effort)
        })
        .collect();
    let undecided: Vec<String> = jobs
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| matches!(v, MembershipVerdict::Unknown))
        .map(|(&(a, f), _)| {
            format!("{} in V({})", algs[a].label(), distinct[f].iter().map(|&i| algs[i].label()).collect::<Vec<_>>().join(","))
        })
        .collect();
    if !undecided.is_empty() {
        return Err(VarietyError::Undecided(undecided));
    }
    let member = |a: usize, f: usize| verdicts[a * distinct.len() + f].is_member();
    let contained = |f: usize, g: usize| distinct[f].iter().all(|&a| member(a, g));

    // classes of mutually contained families; key = smallest family
    let mut class_of = vec![usize::MAX; distinct.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for f in 0..distinct.len() {
        if class_of[f] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (0..distinct.len()).filter(|&g| contained(f, g) && contained(g, f)).collect();
        for &g in &members {
            class_of[g] = classes.len();
        }
        classes.push(members);
    }
    let key = |c: &Vec<usize>| c.iter().map(|&f| distinct[f].clone()).min_by_key(|v| (v.len(), v.clone())).expect("non-empty");
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by_key(|&c| {
        let k = key(&classes[c]);
        (k.len(), k)
    });
    let reps: Vec<usize> = order.iter().map(|&c| classes[c][0]).collect();
    let m = reps.len();
    let leq: Vec<Vec<bool>> = (0..m).map(|i| (0..m).map(|j| contained(reps[i], reps[j])).collect()).collect();
    let names = |f: &[usize]| f.iter().map(|&i| algs[i].label()).collect::<Vec<String>>();
    let nodes = (0..m)
        .map(|i| {
            let covers = (0..m).filter(|&j| j != i && leq[j][i] && !(0..m).any(|k| k != i && k != j && leq[j][k] && leq[k][i])).collect();
            let mut fams: Vec<Vec<String>> = classes[order[i]].iter().map(|&f| names(&distinct[f])).collect();
            fams.sort_by_key(|f| (f.len(), f.clone()));
            VarietyNode { generators: names(&key(&classes[order[i]])), covers, families: fams }
        })
        .collect();
    Ok(VarietyPoset { nodes, leq })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("expected 16 elements, found {0}")]
    Size(usize),
    #[error("{0} and {1} have no least upper bound")]
    NoJoin(String, String),
    #[error("{0} and {1} have no greatest lower bound")]
    NoMeet(String, String),
    #[error("distributivity fails at {0}, {1}, {2}")]
    NotDistributive(String, String, String),
    #[error("join-irreducibles do not form two incomparable points beside a 3-chain: {0}")]
    JoinIrreducibles(String),
}

/// Join-irreducible structure of a lattice isomorphic to B2 x B2 x C4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LatticeShape {
    pub atoms: Vec<String>,
    pub chain: Vec<String>,
}

impl fmt::Display for LatticeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "independent atoms [{}]; chain [{}]", self.atoms.join(" | "), self.chain.join(" < "))
    }
}

/// Confirms the poset is a lattice isomorphic to the product of the
/// 4-element Boolean lattice and the 4-element chain. The isomorphism
/// sends each element to the set of join-irreducibles below it.
pub fn check_lattice_shape(p: &VarietyPoset) -> Result<LatticeShape, ShapeError> {
    let m = p.nodes.len();
    let le = &p.leq;
    let lbl = |i: usize| p.nodes[i].label();
    let bound = |i: usize, j: usize, upper: bool| -> Option<usize> {
        let cands: Vec<usize> = (0..m).filter(|&k| if upper { le[i][k] && le[j][k] } else { le[k][i] && le[k][j] }).collect();
        cands.iter().copied().find(|&c| cands.iter().all(|&d| if upper { le[c][d] } else { le[d][c] }))
    };
    let mut join = vec![vec![0; m]; m];
    let mut meet = vec![vec![0; m]; m];
    for i in 0..m {
        for j in 0..m {
            join[i][j] = bound(i, j, true).ok_or_else(|| ShapeError::NoJoin(lbl(i), lbl(j)))?;
            meet[i][j] = bound(i, j, false).ok_or_else(|| ShapeError::NoMeet(lbl(i), lbl(j)))?;
        }
    }
    if m != 16 {
        return Err(ShapeError::Size(m));
    }
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                if meet[x][join[y][z]] != join[meet[x][y]][meet[x][z]] {
                    return Err(ShapeError::NotDistributive(lbl(x), lbl(y), lbl(z)));
                }
            }
        }
    }
    // join-irreducible: exactly one lower cover
    let ji: Vec<usize> = (0..m).filter(|&i| p.nodes[i].covers.len() == 1).collect();
    let below = |i: usize, j: usize| i != j && le[i][j];
    let comparable = |i: usize, j: usize| le[i][j] || le[j][i];
    let isolated: Vec<usize> = ji.iter().copied().filter(|&i| ji.iter().all(|&j| j == i || !comparable(i, j))).collect();
    let mut chain: Vec<usize> = ji.iter().copied().filter(|i| !isolated.contains(i)).collect();
    chain.sort_by_key(|&i| ji.iter().filter(|&&j| below(j, i)).count());
    let is_chain = chain.windows(2).all(|w| below(w[0], w[1]));
    if isolated.len() != 2 || chain.len() != 3 || !is_chain {
        let desc: Vec<String> = ji.iter().map(|&i| lbl(i)).collect();
        return Err(ShapeError::JoinIrreducibles(desc.join("; ")));
    }
    // the 16 down-sets of J(L) are exactly 2 x 2 x 4 and x -> (J ∩ ↓x) is a
    // bijection in a finite distributive lattice; confirm it explicitly
    let image = |x: usize| -> (bool, bool, usize) { (le[isolated[0]][x], le[isolated[1]][x], chain.iter().filter(|&&c| le[c][x]).count()) };
    let images: BTreeSet<(bool, bool, usize)> = (0..m).map(image).collect();
    let order_ok = (0..m).all(|x| {
        (0..m).all(|y| {
            let (a, b) = (image(x), image(y));
            le[x][y] == ((!a.0 || b.0) && (!a.1 || b.1) && a.2 <= b.2)
        })
    });
    if images.len() != 16 || !order_ok {
        return Err(ShapeError::JoinIrreducibles("down-set map is not an order isomorphism".into()));
    }
    Ok(LatticeShape { atoms: isolated.iter().map(|&i| lbl(i)).collect(), chain: chain.iter().map(|&i| lbl(i)).collect() })
}
