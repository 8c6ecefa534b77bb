//! Closed-world knowledge base of `(head, relation, tail)` triples.
//!
//! File format: UTF-8 text, one triple per line as `head<TAB>relation<TAB>tail`.
//! Lines starting with `#` are comments and blank lines are skipped. Labels are
//! trimmed but otherwise kept verbatim, so `tennis racket` stays one entity.

use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexSet;
use rand::seq::SliceRandom;

use crate::error::{Error, LineError, Result};
use crate::rng::{self, Purpose};

/// A directed fact. Equality is field-wise.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Triple {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

/// Entity set, relation set and triple set, all kept in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    entities: IndexSet<String>,
    relations: IndexSet<String>,
    triples: IndexSet<Triple>,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a KB file. All malformed lines are reported together.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|errors| Error::Ingest {
            path: path.to_path_buf(),
            errors,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, Vec<LineError>> {
        let mut kb = KnowledgeBase::new();
        let mut errors = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields.len() != 3 {
                errors.push(LineError {
                    line,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
                continue;
            }
            let fields: Vec<&str> = fields.iter().map(|f| f.trim()).collect();
            if let Some(pos) = fields.iter().position(|f| f.is_empty()) {
                let name = ["head", "relation", "tail"][pos];
                errors.push(LineError {
                    line,
                    message: format!("empty {name} field"),
                });
                continue;
            }
            kb.insert(Triple::new(fields[0], fields[1], fields[2]));
        }
        if errors.is_empty() {
            Ok(kb)
        } else {
            Err(errors)
        }
    }

    /// Adds a triple, registering its labels. Returns false for a duplicate.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.entities.insert(triple.head.clone());
        self.relations.insert(triple.relation.clone());
        self.entities.insert(triple.tail.clone());
        self.triples.insert(triple)
    }

    /// Closed-world membership: anything not stored is false.
    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn contains_labels(&self, head: &str, relation: &str, tail: &str) -> bool {
        // Avoids allocating a Triple for the common unknown-label miss.
        if !self.relations.contains(relation) || !self.entities.contains(head) {
            return false;
        }
        self.contains(&Triple::new(head, relation, tail))
    }

    pub fn entities(&self) -> impl ExactSizeIterator<Item = &str> {
        self.entities.iter().map(String::as_str)
    }

    pub fn relations(&self) -> impl ExactSizeIterator<Item = &str> {
        self.relations.iter().map(String::as_str)
    }

    pub fn triples(&self) -> impl ExactSizeIterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn entity_index(&self, label: &str) -> Option<usize> {
        self.entities.get_index_of(label)
    }

    pub fn relation_index(&self, label: &str) -> Option<usize> {
        self.relations.get_index_of(label)
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples_with_relation(&self, relation: &str) -> Vec<Triple> {
        self.triples
            .iter()
            .filter(|t| t.relation == relation)
            .cloned()
            .collect()
    }

    /// Splits H into a kept part of `round(keep_fraction * |H|)` triples and
    /// the held-out remainder, using a seeded permutation. Both halves are
    /// returned in KB order.
    pub fn split(&self, keep_fraction: f64, seed: u64) -> Result<(Vec<Triple>, Vec<Triple>)> {
        if !(0.0..=1.0).contains(&keep_fraction) {
            return Err(Error::invalid(format!("keep fraction {keep_fraction} outside [0, 1]")));
        }
        let n = self.triples.len();
        let n_keep = (keep_fraction * n as f64).round() as usize;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(seed, Purpose::Holdout, 0));
        let mut keep_mask = vec![false; n];
        for &i in &order[..n_keep] {
            keep_mask[i] = true;
        }
        let (kept, held): (Vec<_>, Vec<_>) = self.triples.iter().zip(keep_mask).partition(|(_, keep)| *keep);
        Ok((
            kept.into_iter().map(|(t, _)| t.clone()).collect(),
            held.into_iter().map(|(t, _)| t.clone()).collect(),
        ))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.triples {
            let _ = writeln!(out, "{}\t{}\t{}", t.head, t.relation, t.tail);
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

impl FromIterator<Triple> for KnowledgeBase {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut kb = KnowledgeBase::new();
        for t in iter {
            kb.insert(t);
        }
        kb
    }
}
