//! Labelled identity collections and the identity file format.
//!
//! One entry per line, `label : lhs = rhs`; conditional entries are written
//! `label : hyp1, hyp2 |- lhs = rhs`. `#` starts a comment.

use std::collections::HashMap;

use thiserror::Error;

use crate::term::{parse_conditional, ConditionalIdentity, Identity, ParseError};

const BUILTIN: &str = include_str!("../data/catalog.idf");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("line {line}: missing ':' after label")]
    MissingLabel { line: usize },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: duplicate label {label:?}")]
    Duplicate { line: usize, label: String },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

/// Ordered label -> identity map. Insertion order is the citation order.
#[derive(Debug, Clone, Default)]
pub struct IdentityCatalog {
    entries: Vec<(String, ConditionalIdentity)>,
    index: HashMap<String, usize>,
}

impl IdentityCatalog {
    pub fn new() -> IdentityCatalog {
        IdentityCatalog::default()
    }

    pub fn insert(&mut self, label: &str, mut id: ConditionalIdentity) -> Result<(), CatalogError> {
        if self.index.contains_key(label) {
            return Err(CatalogError::Duplicate { line: 0, label: label.to_string() });
        }
        id.conclusion.name = Some(label.to_string());
        self.index.insert(label.to_string(), self.entries.len());
        self.entries.push((label.to_string(), id));
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&ConditionalIdentity> {
        self.index.get(label).map(|&i| &self.entries[i].1)
    }

    /// The unconditional identity under `label`, if it has no hypotheses.
    pub fn identity(&self, label: &str) -> Option<&Identity> {
        self.get(label).filter(|c| c.is_unconditional()).map(|c| &c.conclusion)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ConditionalIdentity)> {
        self.entries.iter().map(|(l, c)| (l.as_str(), c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolves a comma-separated list of labels and inclusive ranges
    /// `FROM..TO` (catalog order). `all` selects everything.
    pub fn resolve(&self, spec: &str) -> Result<Vec<String>, CatalogError> {
        let mut out = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(self.labels().map(String::from));
            } else if let Some((from, to)) = part.split_once("..") {
                let a = self.position(from).ok_or_else(|| CatalogError::UnknownLabel(from.to_string()))?;
                let b = self.position(to).ok_or_else(|| CatalogError::UnknownLabel(to.to_string()))?;
                out.extend(self.entries[a.min(b)..=a.max(b)].iter().map(|(l, _)| l.clone()));
            } else {
                self.position(part).ok_or_else(|| CatalogError::UnknownLabel(part.to_string()))?;
                out.push(part.to_string());
            }
        }
        Ok(out)
    }
}

/// Parses an identity file.
pub fn parse_identity_file(text: &str) -> Result<IdentityCatalog, CatalogError> {
    let mut cat = IdentityCatalog::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (label, body) = line.split_once(':').ok_or(CatalogError::MissingLabel { line: line_no })?;
        let label = label.trim();
        if label.is_empty() {
            return Err(CatalogError::MissingLabel { line: line_no });
        }
        let id = parse_conditional(body).map_err(|source| CatalogError::Parse { line: line_no, source })?;
        cat.insert(label, id).map_err(|_| CatalogError::Duplicate { line: line_no, label: label.to_string() })?;
    }
    Ok(cat)
}

/// The builtin catalog: defining identities of I, I_{2,0}, DM, KL, BA and
/// the derived identities valid in I_{2,0} (items `L3.3.1` to `L3.3.63`).
pub fn builtin_catalog() -> IdentityCatalog {
    parse_identity_file(BUILTIN).expect("builtin catalog parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_identity;

    #[test]
    fn builtin_counts() {
        let cat = builtin_catalog();
        assert_eq!(cat.labels().filter(|l| l.starts_with("L3.3.")).count(), 63);
        for k in 1..=63 {
            assert!(cat.get(&format!("L3.3.{k}")).is_some(), "missing item {k}");
        }
        for l in ["I", "I0", "I20", "DM", "KL1", "KL2", "BA", "L3.1a", "L3.1b", "L3.2a", "L3.2b", "L3.2c", "L3.2d"] {
            assert!(cat.get(l).is_some(), "missing {l}");
        }
    }

    #[test]
    fn lookups() {
        let cat = builtin_catalog();
        assert_eq!(*cat.identity("DM").unwrap(), parse_identity("(x -> y) -> x = x").unwrap());
        assert_eq!(*cat.identity("L3.3.32").unwrap(), parse_identity("[{x -> (0 -> y)} -> z]' = z -> [(x -> y) -> z]'").unwrap());
        assert_eq!(*cat.identity("KL1").unwrap(), parse_identity("(x -> x) -> (y -> y)' = x -> x").unwrap());
        let c44 = cat.get("L3.3.44").unwrap();
        assert_eq!(c44.hypotheses, vec![parse_identity("(x -> y') -> x = x").unwrap()]);
        assert!(cat.identity("L3.3.44").is_none());
    }

    #[test]
    fn ranges() {
        let cat = builtin_catalog();
        let r = cat.resolve("L3.3.1..L3.3.63").unwrap();
        assert_eq!(r.len(), 63);
        assert_eq!(cat.resolve("DM, BA").unwrap(), vec!["DM", "BA"]);
        assert!(matches!(cat.resolve("nope"), Err(CatalogError::UnknownLabel(_))));
    }

    #[test]
    fn file_errors() {
        assert_eq!(parse_identity_file("x = x").unwrap_err(), CatalogError::MissingLabel { line: 1 });
        assert!(matches!(parse_identity_file("a : x = x\na : y = y").unwrap_err(), CatalogError::Duplicate { line: 2, .. }));
        assert!(matches!(parse_identity_file("# c\na : x -> = x").unwrap_err(), CatalogError::Parse { line: 2, .. }));
    }
}
