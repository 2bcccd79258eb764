//! Library results compared against brute-force reimplementations.

mod common;

use std::collections::BTreeSet;

use common::*;
use zroupoid::algebra::{four_d, simples, three_k, two_b, two_s, two_z};
use zroupoid::builtin_catalog;
use zroupoid::congruence::all_congruences;
use zroupoid::search::enumerate_up_to;
use zroupoid::term::parse_identity;
use zroupoid::variety::free_algebra;

#[test]
fn check_identity_matches_naive_evaluator() {
    let (bad, failing) = fuzz_check_identity(1000, 0x5eed);
    assert!(bad.is_empty(), "{bad:#?}");
    // Both outcomes are exercised.
    assert!(failing > 100 && failing < 1000, "{failing}");
}

#[test]
fn enumerate_matches_filter_everything_oracle() {
    let cat = builtin_catalog();
    for n in 1..=3 {
        for i20 in [false, true] {
            let bad = enumerate_vs_filter(n, i20, &cat);
            assert!(bad.is_empty(), "size {n}, i20 {i20}: {bad:?}");
        }
    }
    assert_eq!(filter_everything(3, false).len(), 17);
}

#[test]
fn principal_congruence_is_least_containing_pair() {
    let cat = builtin_catalog();
    let (pairs, bad) = principal_vs_meet(&enumerate_up_to(4, &[], &cat).unwrap());
    assert!(bad.is_empty(), "{bad:?}");
    assert!(pairs > 2000, "{pairs}");
}

#[test]
fn corpus_is_closed_under_subalgebras_and_quotients() {
    let cat = builtin_catalog();
    let corpus = enumerate_up_to(4, &[], &cat).unwrap();
    let known: BTreeSet<Vec<usize>> = corpus.algebras().map(|a| a.canonical_form()).collect();
    for alg in corpus.algebras() {
        let n = alg.size();
        for a in 0..n {
            for b in a..n {
                let sub = alg.subalgebra(&alg.subuniverse_closure(&[a, b])).unwrap();
                assert!(known.contains(&sub.canonical_form()), "subalgebra of {}", alg.label());
            }
        }
        for c in all_congruences(alg).unwrap() {
            let q = alg.quotient(&c).unwrap();
            assert!(known.contains(&q.canonical_form()), "quotient of {}", alg.label());
        }
    }
}

#[test]
fn free_algebras_are_universal() {
    let classes = [vec![two_b()], vec![two_s()], vec![two_z(), two_s()], vec![three_k()], vec![two_b(), four_d()]];
    for class in &classes {
        for k in 1..=2 {
            let f = free_algebra(class, k, 100_000).unwrap();
            let gens: Vec<String> = f.terms.iter().flat_map(|t| t.vars()).collect::<BTreeSet<_>>().into_iter().collect();
            assert!(gens.len() <= k);
            for a in class {
                let names = zroupoid::variety::generator_names(k);
                for env in assignments(&names, a.size()) {
                    let map: Vec<usize> = f.terms.iter().map(|t| a.evaluate(t, &env).unwrap()).collect();
                    assert!(f.algebra.is_homomorphism(a, &map));
                    for (g, name) in f.generators.iter().zip(&names) {
                        assert_eq!(map[*g], env[name]);
                    }
                }
            }
            // Distinct elements are separated by some factor, so the terms are pairwise inequivalent.
            let distinct: BTreeSet<&Vec<usize>> = f.coordinates.iter().collect();
            assert_eq!(distinct.len(), f.algebra.size());
        }
    }
}

#[test]
fn printed_item_28_fails_in_2b() {
    let printed = parse_identity("[(x -> y) -> (0 -> x)]' = (0 -> x) -> [y -> (0 -> x)']").unwrap();
    let r = two_b().check_identity(&printed);
    assert!(!r.holds);
    let cat = builtin_catalog();
    assert!(simples().iter().all(|a| a.check_conditional(cat.get("L3.3.28").unwrap()).holds));
}
