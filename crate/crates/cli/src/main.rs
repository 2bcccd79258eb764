use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use zroupoid::algebra::simples;
use zroupoid::congruence::{all_congruences, derived_relation, is_congruence, is_simple, is_subdirectly_irreducible};
use zroupoid::proof::{cross_check, load_script, replay_all};
use zroupoid::search::{enumerate, verify_suite, ModelCorpus, ModelEntry, SearchConfig, SearchError};
use zroupoid::term::parse_conditional;
use zroupoid::variety::{all_subsets, check_lattice_shape, free_algebra, in_variety, variety_poset, Effort, MembershipVerdict};
use zroupoid::{builtin_catalog, ConditionalIdentity, FiniteAlgebra, IdentityCatalog, RelationKind};

const OK: u8 = 0;
const FAILS: u8 = 1;
const USAGE: u8 = 2;
const BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "zroupoid", version, about = "Finite-model workbench for implication zroupoids")]
#[command(after_help = "Algebra arguments are JSON files ({\"size\": n, \"table\": [[...]]}) or one of the \
built-in names 2z, 2s, 2b, 3k, 4d.\nExit codes: 0 ok, 1 property fails, 2 usage or input error, 3 budget exhausted.")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "text")]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Subcommand)]
enum Command {
    /// Check an identity (or catalog label) on an algebra
    Check { algebra: String, identity: String },
    /// Enumerate I-zroupoids of one size up to isomorphism
    Enumerate {
        #[arg(long)]
        n: usize,
        /// Impose x'' = x
        #[arg(long)]
        i20: bool,
        #[arg(long)]
        simple_only: bool,
        /// Search node limit (required above size 5)
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the congruences of an algebra
    Congruences { algebra: String },
    /// Test simplicity (exit 1 when not simple)
    Simple { algebra: String },
    /// Build a derived relation and test it for being a congruence (exit 1 when not)
    Relation {
        algebra: String,
        #[arg(long)]
        kind: RelationKind,
    },
    /// Free algebra on k generators over the variety of the given algebras
    Free {
        #[arg(long = "gen", num_args = 1.., required = true)]
        generators: Vec<String>,
        #[arg(long)]
        k: usize,
    },
    /// Decide membership of an algebra in the variety of a class (exit 1 when not, 3 when undecided)
    Member {
        algebra: String,
        #[arg(long = "in", num_args = 1.., required = true)]
        class: Vec<String>,
    },
    /// Poset of varieties generated by all subsets of the given algebras (`all5subsets`: the five simples)
    Lattice {
        #[arg(long, num_args = 1.., required = true)]
        family: Vec<String>,
    },
    /// Replay proof scripts (exit 1 when a proof fails)
    Replay {
        script: PathBuf,
        /// Also evaluate every goal on the I20 models up to this size
        #[arg(long)]
        cross_check: Option<usize>,
    },
    /// Check catalog identities on a corpus (directory of .json/.jsonl files, or one such file)
    Suite {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated labels and ranges, e.g. `L3.3.1..L3.3.63,DM` or `all`
        #[arg(long)]
        labels: String,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: USAGE, message: message.into() }
    }
}

type Outcome = Result<(String, u8), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let catalog = builtin_catalog();
    if cli.format == Format::Dot && !matches!(cli.command, Command::Lattice { .. }) {
        return Err(Failure::usage("dot output is only available for `lattice`"));
    }
    match &cli.command {
        Command::Check { algebra, identity } => check(cli.format, &load_algebra(algebra)?, identity, &catalog),
        Command::Enumerate { n, i20, simple_only, budget, threads } => {
            let mut cfg = SearchConfig::new(*n);
            if *i20 {
                cfg.extra_identities.push("I20".to_string());
            }
            cfg.simple_only = *simple_only;
            if let Some(b) = budget {
                cfg.budget = *b;
                cfg.allow_large = true;
            }
            cfg.threads = *threads;
            enumerate_cmd(cli.format, &cfg, &catalog)
        }
        Command::Congruences { algebra } => congruences(cli.format, &load_algebra(algebra)?),
        Command::Simple { algebra } => simple(cli.format, &load_algebra(algebra)?),
        Command::Relation { algebra, kind } => relation(cli.format, &load_algebra(algebra)?, *kind),
        Command::Free { generators, k } => free(cli.format, &load_all(generators)?, *k),
        Command::Member { algebra, class } => member(cli.format, &load_algebra(algebra)?, &load_all(class)?, &catalog),
        Command::Lattice { family } => lattice(cli.format, family, &catalog),
        Command::Replay { script, cross_check } => replay(cli.format, script, *cross_check, &catalog),
        Command::Suite { corpus, labels } => suite(cli.format, &load_corpus(corpus, &catalog)?, labels, &catalog),
    }
}

fn load_algebra(arg: &str) -> Result<FiniteAlgebra, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(a) = simples().into_iter().find(|a| a.label() == arg) {
            return Ok(a);
        }
    }
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{arg}: {e}")))?;
    let alg = FiniteAlgebra::from_json(&text).map_err(|e| Failure::usage(format!("{arg}: {e}")))?;
    if alg.name().is_some() {
        return Ok(alg);
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(arg);
    Ok(alg.with_name(stem))
}

fn load_all(args: &[String]) -> Result<Vec<FiniteAlgebra>, Failure> {
    args.iter().map(|a| load_algebra(a)).collect()
}

fn load_corpus(path: &Path, catalog: &IdentityCatalog) -> Result<ModelCorpus, Failure> {
    let bad = |p: &Path, e: &dyn std::fmt::Display| Failure::usage(format!("{}: {e}", p.display()));
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in fs::read_dir(path).map_err(|e| bad(path, &e))? {
            let p = entry.map_err(|e| bad(path, &e))?.path();
            if matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "jsonl")) {
                files.push(p);
            }
        }
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    let mut corpus = ModelCorpus::default();
    for f in files {
        let text = fs::read_to_string(&f).map_err(|e| bad(&f, &e))?;
        let chunks: Vec<&str> = if f.extension().and_then(|e| e.to_str()) == Some("jsonl") {
            text.lines().filter(|l| !l.trim().is_empty()).collect()
        } else {
            vec![text.as_str()]
        };
        for chunk in chunks {
            let alg = FiniteAlgebra::from_json(chunk).map_err(|e| bad(&f, &e))?;
            corpus.entries.push(ModelEntry::new(&alg, catalog));
        }
    }
    Ok(corpus)
}

fn render(v: &Value) -> String {
    serde_json::to_string(v).expect("json") + "\n"
}

fn table_text(a: &FiniteAlgebra) -> String {
    let rows: Vec<String> = a.rows().iter().map(|r| r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")).collect();
    rows.join(" | ")
}

fn check(format: Format, alg: &FiniteAlgebra, identity: &str, catalog: &IdentityCatalog) -> Outcome {
    let id: ConditionalIdentity = match catalog.get(identity) {
        Some(c) => c.clone(),
        None => parse_conditional(identity).map_err(|e| Failure::usage(format!("{identity}: {e}")))?,
    };
    let r = alg.check_conditional(&id);
    let code = if r.holds { OK } else { FAILS };
    let out = match format {
        Format::Json => render(&json!({
            "algebra": alg.label(),
            "identity": id.to_string(),
            "holds": r.holds,
            "counterexample": r.counterexample,
        })),
        _ => match &r.counterexample {
            None => format!("{}: {} holds\n", alg.label(), id),
            Some(c) => {
                let asg: Vec<String> = c.assignment.iter().map(|(k, v)| format!("{k}={v}")).collect();
                format!("{}: {} fails at {} (lhs {}, rhs {})\n", alg.label(), id, asg.join(", "), c.lhs, c.rhs)
            }
        },
    };
    Ok((out, code))
}

fn corpus_text(c: &ModelCorpus) -> String {
    let mut s = String::new();
    for e in &c.entries {
        let f = &e.flags;
        let flags: Vec<&str> = [(f.simple, "simple"), (f.si, "si"), (f.i20, "i20"), (f.dm, "dm")]
            .into_iter()
            .filter_map(|(on, name)| on.then_some(name))
            .collect();
        let _ = writeln!(s, "{}: {} [{}]", e.algebra.label(), table_text(&e.algebra), flags.join(" "));
    }
    s
}

fn enumerate_cmd(format: Format, cfg: &SearchConfig, catalog: &IdentityCatalog) -> Outcome {
    let show = |c: &ModelCorpus| match format {
        Format::Json => c.to_json_lines(),
        _ => corpus_text(c) + &format!("{} models\n", c.len()),
    };
    match enumerate(cfg, catalog) {
        Ok(c) => Ok((show(&c), OK)),
        Err(SearchError::BudgetExhausted { nodes, found, partial }) => {
            eprintln!("budget exhausted after {nodes} nodes; {found} models found, listing is incomplete");
            Ok((show(&partial), BUDGET))
        }
        Err(e) => Err(Failure::usage(e.to_string())),
    }
}

fn blocks_text(blocks: &[Vec<usize>]) -> String {
    let parts: Vec<String> =
        blocks.iter().map(|b| format!("{{{}}}", b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))).collect();
    parts.join(" ")
}

fn congruences(format: Format, alg: &FiniteAlgebra) -> Outcome {
    let cons = all_congruences(alg).map_err(|e| Failure::usage(e.to_string()))?;
    let out = match format {
        Format::Json => render(&json!({
            "algebra": alg.label(),
            "congruences": cons.iter().map(|p| p.blocks()).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = String::new();
            for p in &cons {
                let _ = writeln!(s, "{}", blocks_text(&p.blocks()));
            }
            let _ = writeln!(s, "{} congruences", cons.len());
            s
        }
    };
    Ok((out, OK))
}

fn simple(format: Format, alg: &FiniteAlgebra) -> Outcome {
    let s = is_simple(alg).map_err(|e| Failure::usage(e.to_string()))?;
    let (si, monolith) = is_subdirectly_irreducible(alg).map_err(|e| Failure::usage(e.to_string()))?;
    let out = match format {
        Format::Json => render(&json!({
            "algebra": alg.label(),
            "simple": s,
            "subdirectly_irreducible": si,
            "monolith": monolith.map(|m| m.blocks()),
        })),
        _ => {
            let mut t = format!("{}: {}\n", alg.label(), if s { "simple" } else { "not simple" });
            if let Some(m) = monolith.filter(|_| si) {
                let _ = writeln!(t, "subdirectly irreducible, monolith {}", blocks_text(&m.blocks()));
            }
            t
        }
    };
    Ok((out, if s { OK } else { FAILS }))
}

fn relation(format: Format, alg: &FiniteAlgebra, kind: RelationKind) -> Outcome {
    let rel = derived_relation(alg, kind).map_err(|e| Failure::usage(e.to_string()))?;
    let n = alg.size();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| rel.contains(a, b)).collect();
    let partition = rel.to_partition().ok();
    let (cong, witness) =
        if partition.is_some() { is_congruence(alg, &rel).map_err(|e| Failure::usage(e.to_string()))? } else { (false, None) };
    let out = match format {
        Format::Json => render(&json!({
            "algebra": alg.label(),
            "pairs": pairs,
            "equivalence": partition.is_some(),
            "blocks": partition.as_ref().map(|p| p.blocks()),
            "congruence": cong,
            "witness": witness,
        })),
        _ => {
            let mut s = match &partition {
                Some(p) => format!("blocks {}\n", blocks_text(&p.blocks())),
                None => {
                    let ps: Vec<String> = pairs.iter().map(|(a, b)| format!("({a},{b})")).collect();
                    format!("pairs {}\nnot an equivalence\n", ps.join(" "))
                }
            };
            match witness {
                _ if cong => s += "congruence\n",
                Some((a, b, c, d)) => {
                    let _ = writeln!(s, "not a congruence: {a}~{b}, {c}~{d}, but {a}->{c} and {b}->{d} are unrelated");
                }
                None if partition.is_some() => s += "not a congruence\n",
                None => {}
            }
            s
        }
    };
    Ok((out, if cong { OK } else { FAILS }))
}

fn free(format: Format, class: &[FiniteAlgebra], k: usize) -> Outcome {
    let fa =
        free_algebra(class, k, zroupoid::variety::DEFAULT_ELEMENT_BUDGET).map_err(|e| Failure { code: BUDGET, message: e.to_string() })?;
    let a = &fa.algebra;
    let out = match format {
        Format::Json => render(&json!({
            "size": a.size(),
            "table": a.rows(),
            "generators": fa.generators,
            "terms": fa.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "coordinates": fa.coordinates,
            "factors": fa.factors,
        })),
        _ => {
            let mut s = format!("{} elements\n", a.size());
            for (i, t) in fa.terms.iter().enumerate() {
                let _ = writeln!(s, "{i}: {t}");
            }
            let _ = writeln!(s, "table: {}", table_text(a));
            s
        }
    };
    Ok((out, OK))
}

fn member(format: Format, alg: &FiniteAlgebra, class: &[FiniteAlgebra], catalog: &IdentityCatalog) -> Outcome {
    let v = in_variety(alg, class, catalog, &Effort::default());
    let code = match v {
        MembershipVerdict::Member { .. } => OK,
        MembershipVerdict::NonMember { .. } => FAILS,
        MembershipVerdict::Unknown => BUDGET,
    };
    let names: Vec<String> = class.iter().map(|a| a.label()).collect();
    let out = match format {
        Format::Json => {
            let mut j = serde_json::to_value(&v).expect("json");
            j["algebra"] = json!(alg.label());
            j["class"] = json!(names);
            render(&j)
        }
        _ => match &v {
            MembershipVerdict::Member { witness } => format!(
                "{} is in V({}): image of a subalgebra of {}\n",
                alg.label(),
                names.join(", "),
                if witness.factors.is_empty() { "the trivial algebra".to_string() } else { witness.factors.join(" x ") }
            ),
            MembershipVerdict::NonMember { identity, counterexample } => {
                let asg: Vec<String> = counterexample.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let at = if asg.is_empty() { String::new() } else { format!(" at {}", asg.join(", ")) };
                format!("{} is not in V({}): {} fails{at}\n", alg.label(), names.join(", "), identity)
            }
            MembershipVerdict::Unknown => format!("membership of {} in V({}) undecided\n", alg.label(), names.join(", ")),
        },
    };
    Ok((out, code))
}

fn lattice(format: Format, family: &[String], catalog: &IdentityCatalog) -> Outcome {
    let gens = if family.len() == 1 && family[0] == "all5subsets" { simples() } else { load_all(family)? };
    let poset =
        variety_poset(&all_subsets(&gens), catalog, &Effort::default()).map_err(|e| Failure { code: BUDGET, message: e.to_string() })?;
    let shape = check_lattice_shape(&poset);
    let out = match format {
        Format::Dot => poset.to_dot(),
        Format::Json => {
            let mut j = poset.to_json();
            j["shape"] = match &shape {
                Ok(s) => json!({"ok": true, "atoms": s.atoms, "chain": s.chain}),
                Err(e) => json!({"ok": false, "error": e.to_string()}),
            };
            render(&j)
        }
        Format::Text => {
            let mut s = String::new();
            for n in &poset.nodes {
                let below: Vec<String> = n.covers.iter().map(|&c| poset.nodes[c].label()).collect();
                let _ = writeln!(s, "V({}) covers [{}]", n.label(), below.join("; "));
            }
            let _ = writeln!(s, "{} varieties, {} covering pairs", poset.nodes.len(), poset.edges().len());
            match &shape {
                Ok(sh) => {
                    let _ = writeln!(s, "lattice shape: 2x2 Boolean x 4-chain ({sh})");
                }
                Err(e) => {
                    let _ = writeln!(s, "lattice shape: {e}");
                }
            }
            s
        }
    };
    Ok((out, OK))
}

fn replay(format: Format, path: &Path, cross: Option<usize>, catalog: &IdentityCatalog) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let scripts = load_script(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let verdicts = replay_all(&scripts, catalog);
    let corpus = match cross {
        Some(n) => {
            Some(zroupoid::search::enumerate_up_to(n, &["I20"], catalog).map_err(|e| Failure { code: BUDGET, message: e.to_string() })?)
        }
        None => None,
    };
    let checks: Vec<_> = scripts.iter().map(|s| corpus.as_ref().map(|c| cross_check(s, c))).collect();
    let ok = verdicts.iter().all(|v| v.ok) && checks.iter().flatten().all(|c| c.holds());
    let out = match format {
        Format::Json => {
            let rows: Vec<Value> = scripts
                .iter()
                .zip(&verdicts)
                .zip(&checks)
                .map(|((s, v), c)| {
                    let mut j = json!({"proof": s.name, "steps": s.steps.len(), "verdict": v});
                    if let Some(c) = c {
                        j["cross_check"] = json!({"checked": c.checked, "failures": c.failures.len()});
                    }
                    j
                })
                .collect();
            render(&json!({"ok": ok, "proofs": rows}))
        }
        _ => {
            let mut t = String::new();
            for ((s, v), c) in scripts.iter().zip(&verdicts).zip(&checks) {
                match (&v.failing_step, &v.diagnostic) {
                    (Some(i), Some(d)) if !v.ok => {
                        let _ = writeln!(t, "{}: FAIL at step {i}: {d}", s.name);
                    }
                    _ => {
                        let _ = writeln!(t, "{}: ok ({} steps)", s.name, s.steps.len());
                    }
                }
                if let Some(c) = c {
                    let _ = writeln!(t, "  {c}");
                }
            }
            t
        }
    };
    Ok((out, if ok { OK } else { FAILS }))
}

fn suite(format: Format, corpus: &ModelCorpus, labels: &str, catalog: &IdentityCatalog) -> Outcome {
    let labels = catalog.resolve(labels).map_err(|e| Failure::usage(e.to_string()))?;
    let report = verify_suite(corpus, &labels, catalog).map_err(|e| Failure::usage(e.to_string()))?;
    let failures: Vec<_> = report.failures().collect();
    let out = match format {
        Format::Json => render(&json!({
            "algebras": corpus.len(),
            "labels": labels,
            "checked": report.cells.len(),
            "failures": failures,
        })),
        _ => {
            let mut s = String::new();
            for f in &failures {
                let at =
                    f.counterexample.as_ref().map(|c| c.assignment.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(", "));
                let _ = writeln!(s, "{} fails {} at {}", f.algebra, f.label, at.unwrap_or_default());
            }
            let _ = writeln!(s, "{} algebras x {} identities, {} failures", corpus.len(), labels.len(), failures.len());
            s
        }
    };
    Ok((out, if failures.is_empty() { OK } else { FAILS }))
}
