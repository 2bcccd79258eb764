//! Congruences of finite zroupoids: principal congruences, the congruence
//! lattice, simplicity, subdirect irreducibility, and the named relations
//! used to rule out simple algebras outside DM.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::algebra::FiniteAlgebra;

/// Largest algebra for which the full congruence lattice is computed.
pub const MAX_LATTICE_SIZE: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CongruenceError {
    #[error("element {0} out of range")]
    OutOfRange(usize),
    #[error("blocks do not partition the universe")]
    NotAPartition,
    #[error("algebra of size {0} exceeds the congruence lattice budget")]
    TooLarge(usize),
    #[error("simplicity is not defined for the trivial algebra")]
    Trivial,
    #[error("relation R1 requires x'' = x, which fails at x = {0}")]
    NotInI20(usize),
    #[error("not an equivalence relation: {0}")]
    NotEquivalence(EquivalenceViolation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquivalenceViolation {
    Reflexivity(usize),
    Symmetry(usize, usize),
    Transitivity(usize, usize, usize),
}

impl fmt::Display for EquivalenceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquivalenceViolation::Reflexivity(a) => write!(f, "({a},{a}) missing"),
            EquivalenceViolation::Symmetry(a, b) => write!(f, "({a},{b}) present but ({b},{a}) missing"),
            EquivalenceViolation::Transitivity(a, b, c) => write!(f, "({a},{b}) and ({b},{c}) present but ({a},{c}) missing"),
        }
    }
}

/// An equivalence relation in canonical block form: blocks sorted
/// internally and ordered by least element.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    /// Block index of every element.
    labels: Vec<usize>,
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.blocks())
    }
}

impl Serialize for Partition {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.blocks().serialize(s)
    }
}

impl Partition {
    /// Canonicalizes arbitrary block labels.
    pub fn from_labels(raw: &[usize]) -> Partition {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition { labels }
    }

    pub fn from_blocks(n: usize, blocks: Vec<Vec<usize>>) -> Result<Partition, CongruenceError> {
        let mut raw = vec![usize::MAX; n];
        for (i, b) in blocks.iter().enumerate() {
            for &e in b {
                if e >= n {
                    return Err(CongruenceError::OutOfRange(e));
                }
                if raw[e] != usize::MAX {
                    return Err(CongruenceError::NotAPartition);
                }
                raw[e] = i;
            }
        }
        if raw.contains(&usize::MAX) {
            return Err(CongruenceError::NotAPartition);
        }
        Ok(Partition::from_labels(&raw))
    }

    /// The identity relation Δ.
    pub fn discrete(n: usize) -> Partition {
        Partition { labels: (0..n).collect() }
    }

    /// The full relation ∇.
    pub fn full(n: usize) -> Partition {
        Partition { labels: vec![0; n] }
    }

    pub fn universe_size(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn block_of(&self, a: usize) -> usize {
        self.labels[a]
    }

    pub fn related(&self, a: usize, b: usize) -> bool {
        self.labels[a] == self.labels[b]
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (e, &l) in self.labels.iter().enumerate() {
            out[l].push(e);
        }
        out
    }

    pub fn is_discrete(&self) -> bool {
        self.num_blocks() == self.labels.len()
    }

    pub fn is_full(&self) -> bool {
        self.num_blocks() <= 1
    }

    /// `self ⊆ other` as relations.
    pub fn refines(&self, other: &Partition) -> bool {
        let n = self.labels.len();
        (0..n).all(|a| (0..n).all(|b| !self.related(a, b) || other.related(a, b)))
    }

    pub fn meet(&self, other: &Partition) -> Partition {
        let raw: Vec<usize> = self.labels.iter().zip(&other.labels).map(|(a, b)| a * self.labels.len() + b).collect();
        Partition::from_labels(&raw)
    }

    /// Transitive closure of the union.
    pub fn join(&self, other: &Partition) -> Partition {
        let mut uf = UnionFind::new(self.labels.len());
        for p in [self, other] {
            for b in p.blocks() {
                for w in b.windows(2) {
                    uf.union(w[0], w[1]);
                }
            }
        }
        uf.partition()
    }

    pub fn to_relation(&self) -> Relation {
        let n = self.labels.len();
        let pairs = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| self.related(a, b)).collect();
        Relation { size: n, pairs }
    }
}

/// A binary relation on `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Relation {
    pub size: usize,
    pub pairs: BTreeSet<(usize, usize)>,
}

impl Relation {
    pub fn new(size: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Relation {
        Relation { size, pairs: pairs.into_iter().collect() }
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn is_full(&self) -> bool {
        self.pairs.len() == self.size * self.size
    }

    pub fn is_identity(&self) -> bool {
        self.pairs.len() == self.size && self.pairs.iter().all(|(a, b)| a == b)
    }

    pub fn check_equivalence(&self) -> Result<(), EquivalenceViolation> {
        let n = self.size;
        if let Some(a) = (0..n).find(|&a| !self.contains(a, a)) {
            return Err(EquivalenceViolation::Reflexivity(a));
        }
        if let Some(&(a, b)) = self.pairs.iter().find(|&&(a, b)| !self.contains(b, a)) {
            return Err(EquivalenceViolation::Symmetry(a, b));
        }
        for &(a, b) in &self.pairs {
            if let Some(c) = (0..n).find(|&c| self.contains(b, c) && !self.contains(a, c)) {
                return Err(EquivalenceViolation::Transitivity(a, b, c));
            }
        }
        Ok(())
    }

    pub fn to_partition(&self) -> Result<Partition, EquivalenceViolation> {
        self.check_equivalence()?;
        let raw: Vec<usize> = (0..self.size).map(|a| (0..self.size).find(|&b| self.contains(a, b)).unwrap_or(a)).collect();
        Ok(Partition::from_labels(&raw))
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    fn partition(&mut self) -> Partition {
        let raw: Vec<usize> = (0..self.parent.len()).map(|a| self.find(a)).collect();
        Partition::from_labels(&raw)
    }
}

/// Least congruence containing every pair in `pairs`: close under the
/// translations `z -> c->z` and `z -> z->c` until nothing new is merged.
pub fn congruence_generated(alg: &FiniteAlgebra, pairs: &[(usize, usize)]) -> Partition {
    let n = alg.size();
    let mut uf = UnionFind::new(n);
    for &(a, b) in pairs {
        uf.union(a, b);
    }
    loop {
        let mut changed = false;
        for x in 0..n {
            let r = uf.find(x);
            if r == x {
                continue;
            }
            for c in 0..n {
                changed |= uf.union(alg.op(c, x), alg.op(c, r));
                changed |= uf.union(alg.op(x, c), alg.op(r, c));
            }
        }
        if !changed {
            return uf.partition();
        }
    }
}

/// Cg(a, b).
pub fn principal_congruence(alg: &FiniteAlgebra, a: usize, b: usize) -> Result<Partition, CongruenceError> {
    for e in [a, b] {
        if e >= alg.size() {
            return Err(CongruenceError::OutOfRange(e));
        }
    }
    Ok(congruence_generated(alg, &[(a, b)]))
}

/// Every congruence, Δ first and ∇ last (ordered by decreasing number of
/// blocks, then by block labels).
pub fn all_congruences(alg: &FiniteAlgebra) -> Result<Vec<Partition>, CongruenceError> {
    let n = alg.size();
    if n > MAX_LATTICE_SIZE {
        return Err(CongruenceError::TooLarge(n));
    }
    let mut seen: HashSet<Partition> = HashSet::new();
    let mut all = vec![Partition::discrete(n)];
    seen.insert(all[0].clone());
    for a in 0..n {
        for b in a + 1..n {
            let p = congruence_generated(alg, &[(a, b)]);
            if seen.insert(p.clone()) {
                all.push(p);
            }
        }
    }
    let mut frontier = all.clone();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for p in &frontier {
            for q in all.clone().iter() {
                let j = p.join(q);
                if seen.insert(j.clone()) {
                    all.push(j.clone());
                    next.push(j);
                }
            }
        }
        frontier = next;
    }
    all.sort_by(|p, q| q.num_blocks().cmp(&p.num_blocks()).then_with(|| p.cmp(q)));
    Ok(all)
}

/// Exactly two congruences. The trivial algebra is rejected.
pub fn is_simple(alg: &FiniteAlgebra) -> Result<bool, CongruenceError> {
    let n = alg.size();
    if n < 2 {
        return Err(CongruenceError::Trivial);
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    Ok(pairs.par_iter().all(|&(a, b)| congruence_generated(alg, &[(a, b)]).is_full()))
}

/// Returns the monolith (least non-Δ congruence) when it exists.
pub fn is_subdirectly_irreducible(alg: &FiniteAlgebra) -> Result<(bool, Option<Partition>), CongruenceError> {
    let n = alg.size();
    if n < 2 {
        return Err(CongruenceError::Trivial);
    }
    // every non-Δ congruence contains some Cg(a, b)
    let mut monolith = Partition::full(n);
    for a in 0..n {
        for b in a + 1..n {
            monolith = monolith.meet(&congruence_generated(alg, &[(a, b)]));
        }
    }
    if monolith.is_discrete() {
        Ok((false, None))
    } else {
        Ok((true, Some(monolith)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelationKind {
    /// `(x -> y') -> x = x` and `(y -> x') -> y = y`.
    R1,
    /// `x'' = y''`.
    Rdoubleprime,
    /// `x' = y'`.
    Rprime,
    /// The partition `{T, A \ T}` with `T = {b : b -> c != 0 for some c}`.
    RT,
}

impl std::str::FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<RelationKind, String> {
        match s {
            "r1" | "R1" => Ok(RelationKind::R1),
            "rpp" | "Rdoubleprime" => Ok(RelationKind::Rdoubleprime),
            "rp" | "Rprime" => Ok(RelationKind::Rprime),
            "rt" | "RT" => Ok(RelationKind::RT),
            _ => Err(format!("unknown relation kind {s:?} (expected r1, rpp, rp or rt)")),
        }
    }
}

pub fn derived_relation(alg: &FiniteAlgebra, kind: RelationKind) -> Result<Relation, CongruenceError> {
    let n = alg.size();
    let all = (0..n).flat_map(|a| (0..n).map(move |b| (a, b)));
    let rel = match kind {
        RelationKind::R1 => {
            if let Some(x) = (0..n).find(|&x| alg.comp(alg.comp(x)) != x) {
                return Err(CongruenceError::NotInI20(x));
            }
            let half = |x: usize, y: usize| alg.op(alg.op(x, alg.comp(y)), x) == x;
            Relation::new(n, all.filter(|&(x, y)| half(x, y) && half(y, x)))
        }
        RelationKind::Rdoubleprime => {
            let dd = |x: usize| alg.comp(alg.comp(x));
            Relation::new(n, all.filter(|&(x, y)| dd(x) == dd(y)))
        }
        RelationKind::Rprime => Relation::new(n, all.filter(|&(x, y)| alg.comp(x) == alg.comp(y))),
        RelationKind::RT => {
            let in_t = |b: usize| (0..n).any(|c| alg.op(b, c) != 0);
            Relation::new(n, all.filter(|&(x, y)| in_t(x) == in_t(y)))
        }
    };
    Ok(rel)
}

/// Elements `(a, b, c, d)` with `a~b`, `c~d` and `a->c` unrelated to `b->d`.
pub type CompatibilityWitness = (usize, usize, usize, usize);

/// Whether an equivalence relation is compatible with `->`, with a witness
/// on failure.
pub fn is_congruence(alg: &FiniteAlgebra, rel: &Relation) -> Result<(bool, Option<CompatibilityWitness>), CongruenceError> {
    rel.check_equivalence().map_err(CongruenceError::NotEquivalence)?;
    for &(a, b) in &rel.pairs {
        for &(c, d) in &rel.pairs {
            if !rel.contains(alg.op(a, c), alg.op(b, d)) {
                return Ok((false, Some((a, b, c, d))));
            }
        }
    }
    Ok((true, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{four_d, simples, three_k, two_b, two_s, two_z};

    fn p(n: usize, blocks: &[&[usize]]) -> Partition {
        Partition::from_blocks(n, blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn partition_basics() {
        let q = Partition::from_labels(&[5, 5, 2, 7]);
        assert_eq!(q.blocks(), vec![vec![0, 1], vec![2], vec![3]]);
        assert_eq!(serde_json::to_string(&q).unwrap(), "[[0,1],[2],[3]]");
        assert!(Partition::discrete(4).refines(&q));
        assert!(q.refines(&Partition::full(4)));
        assert_eq!(q.join(&p(4, &[&[0], &[1], &[2, 3]])), p(4, &[&[0, 1], &[2, 3]]));
        assert_eq!(q.meet(&p(4, &[&[0], &[1, 2, 3]])), Partition::discrete(4));
        assert_eq!(Partition::from_blocks(3, vec![vec![0, 1]]), Err(CongruenceError::NotAPartition));
    }

    #[test]
    fn principal_examples() {
        assert!(principal_congruence(&two_b(), 0, 1).unwrap().is_full());
        assert!(principal_congruence(&three_k(), 1, 2).unwrap().is_full());
        let bb = two_b().direct_product(&two_b());
        assert_eq!(principal_congruence(&bb, 0, 1).unwrap(), p(4, &[&[0, 1], &[2, 3]]));
        assert_eq!(principal_congruence(&bb, 2, 2).unwrap(), Partition::discrete(4));
        assert_eq!(principal_congruence(&bb, 0, 9), Err(CongruenceError::OutOfRange(9)));
    }

    #[test]
    fn lattice_examples() {
        let t = FiniteAlgebra::trivial();
        assert_eq!(all_congruences(&t).unwrap(), vec![Partition::full(1)]);
        assert_eq!(all_congruences(&four_d()).unwrap(), vec![Partition::discrete(4), Partition::full(4)]);
        let bb = two_b().direct_product(&two_b());
        let cons = all_congruences(&bb).unwrap();
        assert!(cons.contains(&p(4, &[&[0, 1], &[2, 3]])));
        assert!(cons.contains(&p(4, &[&[0, 2], &[1, 3]])));
        assert_eq!(cons.first(), Some(&Partition::discrete(4)));
        assert_eq!(cons.last(), Some(&Partition::full(4)));
        let big = two_b().direct_product(&two_b()).direct_product(&three_k()).direct_product(&two_z());
        assert_eq!(all_congruences(&big), Err(CongruenceError::TooLarge(24)));
    }

    #[test]
    fn simplicity() {
        for a in simples() {
            assert!(is_simple(&a).unwrap(), "{a:?}");
            let (si, mono) = is_subdirectly_irreducible(&a).unwrap();
            assert!(si);
            assert!(mono.unwrap().is_full());
        }
        let bb = two_b().direct_product(&two_b());
        assert!(!is_simple(&bb).unwrap());
        assert_eq!(is_subdirectly_irreducible(&bb).unwrap(), (false, None));
        assert_eq!(is_simple(&FiniteAlgebra::trivial()), Err(CongruenceError::Trivial));
        assert_eq!(is_subdirectly_irreducible(&FiniteAlgebra::trivial()), Err(CongruenceError::Trivial));
    }

    #[test]
    fn derived_relation_examples() {
        assert!(derived_relation(&two_z(), RelationKind::Rdoubleprime).unwrap().is_full());
        assert!(derived_relation(&two_b(), RelationKind::Rprime).unwrap().is_identity());
        assert!(derived_relation(&three_k(), RelationKind::R1).unwrap().is_full());
        assert_eq!(derived_relation(&two_z(), RelationKind::R1), Err(CongruenceError::NotInI20(1)));
        // 2s: 0 -> c = 0 only for c = 0, 1 -> c = 1, so T = {0, 1}
        assert!(derived_relation(&two_s(), RelationKind::RT).unwrap().is_full());
        // 2z: T is empty, the relation degenerates to the full one
        assert!(derived_relation(&two_z(), RelationKind::RT).unwrap().is_full());
    }

    #[test]
    fn congruence_checks() {
        let k = three_k();
        let rel = derived_relation(&k, RelationKind::Rdoubleprime).unwrap();
        assert_eq!(is_congruence(&k, &rel).unwrap(), (true, None));
        let bad = Relation::new(2, [(0, 0), (1, 1), (0, 1)]);
        assert_eq!(is_congruence(&two_b(), &bad), Err(CongruenceError::NotEquivalence(EquivalenceViolation::Symmetry(0, 1))));
        let r = p(3, &[&[0, 1], &[2]]).to_relation();
        let (ok, w) = is_congruence(&k, &r).unwrap();
        assert!(!ok);
        let (a, b, c, d) = w.unwrap();
        assert!(r.contains(a, b) && r.contains(c, d) && !r.contains(k.op(a, c), k.op(b, d)));
    }

    #[test]
    fn relation_round_trip() {
        let q = p(4, &[&[0, 3], &[1], &[2]]);
        assert_eq!(q.to_relation().to_partition().unwrap(), q);
    }
}
