//! Brute-force reference implementations shared by the oracle and
//! acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zroupoid::congruence::{all_congruences, principal_congruence};
use zroupoid::{enumerate, FiniteAlgebra, Identity, IdentityCatalog, ModelCorpus, SearchConfig, Term};

pub fn naive_eval(t: &[Vec<usize>], term: &Term, env: &BTreeMap<String, usize>) -> usize {
    match term {
        Term::Var(v) => env[v],
        Term::Zero => 0,
        Term::Comp(a) => t[naive_eval(t, a, env)][0],
        Term::Arrow(a, b) => t[naive_eval(t, a, env)][naive_eval(t, b, env)],
    }
}

/// Every assignment of `vars` into `0..n`, odometer order.
pub fn assignments(vars: &[String], n: usize) -> Vec<BTreeMap<String, usize>> {
    let mut out = Vec::new();
    let mut digits = vec![0; vars.len()];
    loop {
        out.push(vars.iter().cloned().zip(digits.iter().copied()).collect());
        let mut i = 0;
        while i < digits.len() && digits[i] == n - 1 {
            digits[i] = 0;
            i += 1;
        }
        if i == digits.len() {
            return out;
        }
        digits[i] += 1;
    }
}

pub fn random_term(rng: &mut ChaCha8Rng, depth: u32) -> Term {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 => Term::Zero,
            1 => Term::var("x"),
            2 => Term::var("y"),
            _ => Term::var("z"),
        };
    }
    if rng.gen_bool(0.3) {
        Term::comp(random_term(rng, depth - 1))
    } else {
        Term::arrow(random_term(rng, depth - 1), random_term(rng, depth - 1))
    }
}

pub fn satisfies_i_and_i0(t: &[usize], n: usize) -> bool {
    let op = |a: usize, b: usize| t[a * n + b];
    let c = |a: usize| op(a, 0);
    if c(c(0)) != 0 {
        return false;
    }
    (0..n).all(|x| (0..n).all(|y| (0..n).all(|z| op(op(x, y), z) == c(op(op(c(z), x), c(op(y, z)))))))
}

pub fn permutations_fixing_zero(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for v in 1..n {
            if !prefix.contains(&v) {
                prefix.push(v);
                go(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut vec![0], n, &mut out);
    out
}

/// Least relabelled table over all permutations fixing 0.
pub fn min_relabelling(t: &[usize], n: usize, perms: &[Vec<usize>]) -> Vec<usize> {
    perms
        .iter()
        .map(|p| {
            let mut u = vec![0; n * n];
            for a in 0..n {
                for b in 0..n {
                    u[p[a] * n + p[b]] = p[t[a * n + b]];
                }
            }
            u
        })
        .min()
        .unwrap()
}

pub fn relation_closure_cg(alg: &FiniteAlgebra, a: usize, b: usize) -> Vec<Vec<bool>> {
    let n = alg.size();
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    r[a][b] = true;
    r[b][a] = true;
    loop {
        let mut changed = false;
        let mut add = |r: &mut Vec<Vec<bool>>, x: usize, y: usize| {
            if !r[x][y] {
                r[x][y] = true;
                changed = true;
            }
        };
        for x in 0..n {
            for y in 0..n {
                if !r[x][y] {
                    continue;
                }
                add(&mut r, y, x);
                for z in 0..n {
                    if r[y][z] {
                        add(&mut r, x, z);
                    }
                    add(&mut r, alg.op(x, z), alg.op(y, z));
                    add(&mut r, alg.op(z, x), alg.op(z, y));
                }
            }
        }
        if !changed {
            return r;
        }
    }
}

/// Runs `cases` random identities on random tables through `check_identity`
/// and the naive evaluator. Returns the disagreements and the number of
/// failing identities seen.
pub fn fuzz_check_identity(cases: usize, seed: u64) -> (Vec<String>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failing = 0;
    let mut bad_cases = Vec::new();
    for case in 0..cases {
        let n = rng.gen_range(1..=4);
        let table: Vec<Vec<usize>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..n)).collect()).collect();
        let alg = FiniteAlgebra::validate(table.clone(), None).unwrap();
        let id = Identity::new(random_term(&mut rng, 4), random_term(&mut rng, 4));
        let vars: Vec<String> = id.vars().into_iter().collect();
        let bad: Vec<_> =
            assignments(&vars, n).into_iter().filter(|e| naive_eval(&table, &id.lhs, e) != naive_eval(&table, &id.rhs, e)).collect();
        let r = alg.check_identity(&id);
        let agrees = r.holds == bad.is_empty()
            && r.counterexample.as_ref().is_none_or(|c| {
                bad.contains(&c.assignment)
                    && c.lhs == naive_eval(&table, &id.lhs, &c.assignment)
                    && c.rhs == naive_eval(&table, &id.rhs, &c.assignment)
            });
        if !agrees {
            bad_cases.push(format!("case {case}: {id} on {table:?}"));
        }
        if !bad.is_empty() {
            failing += 1;
        }
    }
    (bad_cases, failing)
}

/// Isomorphism classes of all `n`-element tables satisfying (I) and `0'' = 0`
/// (and `x'' = x` when `i20`), by exhaustive filtering.
pub fn filter_everything(n: usize, i20: bool) -> BTreeSet<Vec<usize>> {
    let perms = permutations_fixing_zero(n);
    let cells = n * n;
    let mut classes = BTreeSet::new();
    for code in 0..n.pow(cells as u32) {
        let t: Vec<usize> = (0..cells).map(|i| code / n.pow(i as u32) % n).collect();
        if satisfies_i_and_i0(&t, n) && (!i20 || (0..n).all(|x| t[t[x * n] * n] == x)) {
            classes.insert(min_relabelling(&t, n, &perms));
        }
    }
    classes
}

/// Differences between `enumerate` and [`filter_everything`] at size `n`.
pub fn enumerate_vs_filter(n: usize, i20: bool, cat: &IdentityCatalog) -> Vec<String> {
    let perms = permutations_fixing_zero(n);
    let labels: &[&str] = if i20 { &["I20"] } else { &[] };
    let found: BTreeSet<Vec<usize>> = enumerate(&SearchConfig::new(n).with_identities(labels), cat)
        .unwrap()
        .algebras()
        .map(|a| min_relabelling(a.flat_table(), n, &perms))
        .collect();
    let expected = filter_everything(n, i20);
    let mut out: Vec<String> = found.difference(&expected).map(|t| format!("spurious {t:?}")).collect();
    out.extend(expected.difference(&found).map(|t| format!("missing {t:?}")));
    out
}

/// Compares `principal_congruence` with the meet of all congruences
/// containing the pair and with a naive closure. Returns the number of
/// pairs checked and the disagreements.
pub fn principal_vs_meet(corpus: &ModelCorpus) -> (usize, Vec<String>) {
    let mut pairs = 0;
    let mut bad = Vec::new();
    for alg in corpus.algebras() {
        let cons = all_congruences(alg).unwrap();
        let n = alg.size();
        for a in 0..n {
            for b in 0..n {
                let cg = principal_congruence(alg, a, b).unwrap();
                let meet = cons.iter().filter(|c| c.related(a, b)).fold(None, |acc: Option<zroupoid::Partition>, c| {
                    Some(match acc {
                        None => c.clone(),
                        Some(m) => m.meet(c),
                    })
                });
                let closure = relation_closure_cg(alg, a, b);
                let same_closure = (0..n).all(|x| (0..n).all(|y| cg.related(x, y) == closure[x][y]));
                if Some(&cg) != meet.as_ref() || !same_closure {
                    bad.push(format!("{} ({a},{b})", alg.label()));
                }
                pairs += 1;
            }
        }
    }
    (pairs, bad)
}
