//! End-to-end runs of the binary against stored outputs.
//! Set `BLESS=1` to rewrite the stored files after an intended format change.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

fn here() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn algebra(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/algebras").join(format!("{name}.json"));
    p.to_str().unwrap().to_string()
}

fn fixture(name: &str) -> String {
    here().join("fixtures").join(name).to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_zroupoid")).args(args).output().expect("spawn");
    (String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap(), out.status.code().expect("exit code"))
}

fn golden(name: &str, actual: &str) {
    let path = here().join("golden").join(name);
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

#[test]
fn check_dm_fails_on_2s() {
    let (out, _, code) = run(&["check", &algebra("2s"), "DM"]);
    assert_eq!(code, 1);
    golden("check_2s_dm.txt", &out);
    let (out, _, code) = run(&["check", &algebra("2s"), "DM", "--format", "json"]);
    assert_eq!(code, 1);
    golden("check_2s_dm.json", &out);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["counterexample"]["assignment"]["x"], 0);
    assert_eq!(v["counterexample"]["assignment"]["y"], 1);
}

#[test]
fn check_holds_exits_zero() {
    let (out, _, code) = run(&["check", "4d", "x'' = x"]);
    assert_eq!(code, 0, "{out}");
    let (_, _, code) = run(&["check", &algebra("2b"), "L3.3.28"]);
    assert_eq!(code, 0);
}

#[test]
fn json_keys_are_sorted() {
    let (out, _, _) = run(&["check", "2s", "DM", "--format", "json"]);
    let keys: Vec<&str> =
        ["\"algebra\"", "\"counterexample\"", "\"holds\"", "\"identity\""].into_iter().filter(|k| out.contains(k)).collect();
    let pos: Vec<usize> = keys.iter().map(|k| out.find(k).unwrap()).collect();
    assert_eq!(keys.len(), 4);
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{out}");
}

#[test]
fn congruences_of_3k() {
    let (out, _, code) = run(&["congruences", &algebra("3k"), "--format", "json"]);
    assert_eq!(code, 0);
    golden("congruences_3k.json", &out);
}

#[test]
fn simplicity_exit_codes() {
    let (out, _, code) = run(&["simple", &algebra("4d")]);
    assert_eq!(code, 0);
    golden("simple_4d.txt", &out);
    let (out, _, code) = run(&["simple", &fixture("n3_16.json")]);
    assert_eq!(code, 1);
    golden("simple_n3_16.txt", &out);
}

#[test]
fn relation_r1_on_3k() {
    let (out, _, code) = run(&["relation", &algebra("3k"), "--kind", "r1", "--format", "json"]);
    assert_eq!(code, 0);
    golden("relation_3k_r1.json", &out);
}

#[test]
fn enumerate_size_three() {
    let (out, _, code) = run(&["enumerate", "--n", "3", "--format", "json"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 17);
    golden("enumerate_3.jsonl", &out);
    let (out, _, code) = run(&["enumerate", "--n", "4", "--i20", "--simple-only"]);
    assert_eq!(code, 0);
    golden("enumerate_4_i20_simple.txt", &out);
}

#[test]
fn enumerate_budget_exhaustion_exits_three() {
    let (_, err, code) = run(&["enumerate", "--n", "6", "--budget", "1000"]);
    assert_eq!(code, 3);
    assert!(err.contains("budget exhausted"), "{err}");
}

#[test]
fn free_algebra_over_2s() {
    let (out, _, code) = run(&["free", "--gen", &algebra("2s"), "--k", "2"]);
    assert_eq!(code, 0);
    golden("free_2s_k2.txt", &out);
}

#[test]
fn membership_verdicts() {
    let (out, _, code) = run(&["member", &algebra("3k"), "--in", &algebra("2b"), &algebra("4d")]);
    assert_eq!(code, 0);
    golden("member_3k_in_2b_4d.txt", &out);
    let (out, _, code) = run(&["member", &algebra("3k"), "--in", &algebra("2s"), &algebra("2z")]);
    assert_eq!(code, 1);
    golden("member_3k_in_2s_2z.txt", &out);
}

#[test]
fn lattice_matches_expected_diagram() {
    let (out, _, code) = run(&["lattice", "--family", "all5subsets", "--format", "dot"]);
    assert_eq!(code, 0);
    golden("lattice.dot", &out);
    // Covering pairs transcribed by hand from the published Hasse diagram.
    let expected: BTreeSet<String> =
        std::fs::read_to_string(here().join("golden/lattice_edges.txt")).unwrap().lines().map(str::to_string).collect();
    let actual: BTreeSet<String> =
        out.lines().filter(|l| l.contains("->")).map(|l| l.trim().trim_end_matches(';').replace('"', "")).collect();
    assert_eq!(expected.len(), 28);
    assert_eq!(actual, expected);
    let nodes = out.lines().filter(|l| !l.contains("->") && l.trim_start().starts_with('"')).count();
    assert_eq!(nodes, 16);
}

#[test]
fn replay_shipped_and_broken_scripts() {
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/proofs/r1.prf");
    let (out, _, code) = run(&["replay", script.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    golden("replay_r1.txt", &out);
    let (out, _, code) = run(&["replay", &fixture("broken.prf")]);
    assert_eq!(code, 1);
    assert!(out.contains("FAIL at step 0"), "{out}");
}

#[test]
fn suite_over_i20_models() {
    let dir = std::env::temp_dir().join(format!("zroupoid-suite-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (models, _, _) = run(&["enumerate", "--n", "4", "--i20", "--format", "json"]);
    std::fs::write(dir.join("i20_4.jsonl"), &models).unwrap();
    std::fs::copy(algebra("3k"), dir.join("3k.json")).unwrap();
    let corpus = dir.to_str().unwrap();
    let (out, _, code) = run(&["suite", "--corpus", corpus, "--labels", "L3.3.1..L3.3.63"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out, "19 algebras x 63 identities, 0 failures\n");
    let (out, _, code) = run(&["suite", "--corpus", corpus, "--labels", "DM,BA"]);
    assert_eq!(code, 1);
    golden("suite_dm_ba.txt", &out);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["enumerate"],
        vec!["check", "2s"],
        vec!["check", "2s", "x ->"],
        vec!["check", "no-such-file.json", "DM"],
        vec!["enumerate", "--n", "6"],
        vec!["congruences", "3k", "--format", "dot"],
        vec!["frobnicate"],
    ] {
        let (_, _, code) = run(&args);
        assert_eq!(code, 2, "{args:?}");
    }
    let (_, err, code) = run(&["check", &fixture("ragged.json"), "DM"]);
    assert_eq!(code, 2);
    assert!(err.contains("row 1"), "{err}");
}
