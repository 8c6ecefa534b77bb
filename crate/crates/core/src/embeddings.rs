//! Pretrained word vectors and averaged entity embeddings.
//!
//! Entity labels are lowercased and split on whitespace; the entity vector is
//! the mean of the in-vocabulary token vectors. A set of entities (everything
//! recognized in one image) is embedded as the mean of its entity vectors.

use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, LineError, Result};

pub const DEFAULT_DIM: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    vectors: IndexMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntityEmbedding {
    pub vector: Vec<f64>,
    pub source_tokens: Vec<String>,
}

/// Mean of the embeddable labels plus the labels that had to be skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct EntitySetEmbedding {
    pub vector: Vec<f64>,
    pub skipped: Vec<String>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        WordVectorTable {
            dim,
            vectors: IndexMap::new(),
        }
    }

    /// Loads a GloVe-style text file: `token v1 ... v_dim` per line.
    /// A token seen twice keeps the later vector.
    pub fn load(path: impl AsRef<Path>, expected_dim: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match Self::parse(&text, expected_dim) {
            Ok(t) if t.is_empty() => Err(Error::EmptyFile(path.to_path_buf())),
            Ok(t) => Ok(t),
            Err(errors) => Err(Error::Ingest {
                path: path.to_path_buf(),
                errors,
            }),
        }
    }

    pub fn parse(text: &str, expected_dim: usize) -> std::result::Result<Self, Vec<LineError>> {
        let mut table = WordVectorTable::new(expected_dim);
        let mut errors = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let mut parts = raw.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let fields: Vec<&str> = parts.collect();
            if fields.len() != expected_dim {
                errors.push(LineError {
                    line,
                    message: format!(
                        "dimension mismatch: expected {expected_dim} numbers, found {}",
                        fields.len()
                    ),
                });
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.iter().all(|x| x.is_finite()) => {
                    table.vectors.insert(token.to_string(), v);
                }
                Ok(_) => errors.push(LineError {
                    line,
                    message: "non-finite number".into(),
                }),
                Err(e) => errors.push(LineError {
                    line,
                    message: format!("unparseable number: {e}"),
                }),
            }
        }
        if errors.is_empty() {
            Ok(table)
        } else {
            Err(errors)
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::shape(format!(
                "word vector has length {}, table dim is {}",
                vector.len(),
                self.dim
            )));
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn embed_entity(&self, label: &str) -> Result<EntityEmbedding> {
        if label.trim().is_empty() {
            return Err(Error::invalid("empty entity label"));
        }
        let lowered = label.to_lowercase();
        let mut sum = vec![0.0; self.dim];
        let mut source_tokens = Vec::new();
        for token in lowered.split_whitespace() {
            if let Some(v) = self.vectors.get(token) {
                add_into(&mut sum, v);
                source_tokens.push(token.to_string());
            }
        }
        if source_tokens.is_empty() {
            return Err(Error::OutOfVocabulary(label.to_string()));
        }
        scale(&mut sum, 1.0 / source_tokens.len() as f64);
        Ok(EntityEmbedding {
            vector: sum,
            source_tokens,
        })
    }

    /// Averages the entity embeddings of `labels`, skipping labels that have
    /// no in-vocabulary token.
    pub fn embed_entity_set<S: AsRef<str>>(&self, labels: &[S]) -> Result<EntitySetEmbedding> {
        if labels.is_empty() {
            return Err(Error::Empty("entity label list"));
        }
        let mut embedded = Vec::new();
        let mut skipped = Vec::new();
        for label in labels {
            match self.embed_entity(label.as_ref()) {
                Ok(e) => embedded.push((label.as_ref(), e.vector)),
                Err(Error::OutOfVocabulary(_) | Error::InvalidArgument(_)) => skipped.push(label.as_ref().to_string()),
                Err(e) => return Err(e),
            }
        }
        if embedded.is_empty() {
            return Err(Error::OutOfVocabulary(
                labels.iter().map(|l| l.as_ref()).collect::<Vec<_>>().join(", "),
            ));
        }
        // Summing in label order makes the result bit-identical under any
        // permutation of the input.
        embedded.sort_by(|a, b| a.0.cmp(b.0));
        let mut sum = vec![0.0; self.dim];
        for (_, v) in &embedded {
            add_into(&mut sum, v);
        }
        scale(&mut sum, 1.0 / embedded.len() as f64);
        Ok(EntitySetEmbedding { vector: sum, skipped })
    }

    /// Pipeline fallback: the zero vector when nothing in `labels` embeds.
    pub fn embed_entity_set_or_zero<S: AsRef<str>>(&self, labels: &[S], context: &str) -> Vec<f64> {
        match self.embed_entity_set(labels) {
            Ok(e) => {
                if !e.skipped.is_empty() {
                    log::warn!("{context}: skipped out-of-vocabulary entities {:?}", e.skipped);
                }
                e.vector
            }
            Err(_) => {
                log::warn!("{context}: no embeddable entity, using the zero vector");
                vec![0.0; self.dim]
            }
        }
    }
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

fn scale(v: &mut [f64], s: f64) {
    for x in v {
        *x *= s;
    }
}
