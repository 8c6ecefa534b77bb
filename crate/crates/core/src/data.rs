//! Record ingestion: the class label vocabulary, `features.jsonl` and
//! `detections.jsonl`.
//!
//! ```text
//! features.jsonl   {"image_id": str, "label": str, "entities": [str], "vgg": [4096 numbers]}
//! detections.jsonl {"image_id": str, "boxes": [{"x_min","y_min","x_max","y_max","score","label"}]}
//! labels.txt       one class label per line, 12 lines
//! ```
//!
//! Readers validate every line and report all bad lines at once.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::detect::DetBox;
use crate::embeddings::WordVectorTable;
use crate::error::{Error, LineError, Result};
use crate::models::{Classifier, Sample, IMAGE_DIM, NUM_CLASSES};

/// The twelve image classes used when no label file is given.
pub const DEFAULT_LABELS: [&str; NUM_CLASSES] = [
    "Human with animals",
    "Tennis racket",
    "Baseball",
    "Sportsball",
    "Person snowboarding",
    "Kitchen electronics",
    "Living room",
    "Traffic",
    "Utencils",
    "Person with bags",
    "Animals",
    "Human with Umbrella",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelVocabulary {
    labels: Vec<String>,
}

impl Default for LabelVocabulary {
    fn default() -> Self {
        LabelVocabulary {
            labels: DEFAULT_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl TryFrom<Vec<String>> for LabelVocabulary {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        if labels.len() != NUM_CLASSES {
            return Err(Error::invalid(format!(
                "label vocabulary needs {NUM_CLASSES} labels, got {}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if l.is_empty() {
                return Err(Error::invalid("empty class label"));
            }
            if !seen.insert(l) {
                return Err(Error::invalid(format!("duplicate class label `{l}`")));
            }
        }
        Ok(LabelVocabulary { labels })
    }
}

impl From<LabelVocabulary> for Vec<String> {
    fn from(v: LabelVocabulary) -> Self {
        v.labels
    }
}

impl LabelVocabulary {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let labels: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        Self::try_from(labels).map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            errors: vec![LineError {
                line: 0,
                message: e.to_string(),
            }],
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub image_id: String,
    pub label: String,
    pub entity_labels: Vec<String>,
    pub image_feature: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct FeatureLine {
    image_id: String,
    label: String,
    entities: Vec<String>,
    vgg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<FeatureRecord>,
    vocabulary: LabelVocabulary,
}

impl Dataset {
    pub fn records(&self) -> &[FeatureRecord] {
        &self.records
    }

    pub fn vocabulary(&self) -> &LabelVocabulary {
        &self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Classifier inputs. Records whose entities are all out of vocabulary
    /// (or absent) get the zero embedding, with a logged warning.
    pub fn samples(&self, table: &WordVectorTable) -> Vec<Sample> {
        self.records
            .iter()
            .map(|r| Sample {
                image: r.image_feature.clone(),
                embedding: table.embed_entity_set_or_zero(&r.entity_labels, &r.image_id),
                label: self.vocabulary.index_of(&r.label).expect("labels validated on read"),
            })
            .collect()
    }
}

fn read_lines(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>, vocabulary: &LabelVocabulary) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_lines(path)?;
    parse_features(&text, vocabulary).map_err(|errors| Error::Ingest {
        path: path.to_path_buf(),
        errors,
    })
}

pub fn parse_features(text: &str, vocabulary: &LabelVocabulary) -> std::result::Result<Dataset, Vec<LineError>> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut ids = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let mut fail = |message: String| errors.push(LineError { line, message });
        let rec: FeatureLine = match serde_json::from_str(raw) {
            Ok(r) => r,
            Err(e) => {
                fail(format!("malformed JSON: {e}"));
                continue;
            }
        };
        if rec.vgg.len() != IMAGE_DIM {
            fail(format!("vgg has {} numbers, expected {IMAGE_DIM}", rec.vgg.len()));
            continue;
        }
        if vocabulary.index_of(&rec.label).is_none() {
            fail(format!("unknown class label `{}`", rec.label));
            continue;
        }
        if !ids.insert(rec.image_id.clone()) {
            fail(format!("duplicate image_id `{}`", rec.image_id));
            continue;
        }
        records.push(FeatureRecord {
            image_id: rec.image_id,
            label: rec.label,
            entity_labels: rec.entities,
            image_feature: rec.vgg,
        });
    }
    if errors.is_empty() {
        Ok(Dataset {
            records,
            vocabulary: vocabulary.clone(),
        })
    } else {
        Err(errors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionLine {
    pub image_id: String,
    pub boxes: Vec<DetBox>,
    /// Present only in NMS output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entities: Option<Vec<String>>,
}

/// Raw boxes per image, in file order.
pub type Detections = IndexMap<String, Vec<DetBox>>;

pub fn read_detections(path: impl AsRef<Path>) -> Result<Detections> {
    let path = path.as_ref();
    let text = read_lines(path)?;
    parse_detections(&text).map_err(|errors| Error::Ingest {
        path: path.to_path_buf(),
        errors,
    })
}

pub fn parse_detections(text: &str) -> std::result::Result<Detections, Vec<LineError>> {
    let mut out = Detections::new();
    let mut errors = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: DetectionLine = match serde_json::from_str(raw) {
            Ok(r) => r,
            Err(e) => {
                errors.push(LineError {
                    line,
                    message: format!("malformed JSON: {e}"),
                });
                continue;
            }
        };
        let bad: Vec<String> = rec
            .boxes
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.validate().err().map(|e| format!("box {i}: {e}")))
            .collect();
        if !bad.is_empty() {
            errors.push(LineError {
                line,
                message: bad.join("; "),
            });
            continue;
        }
        if out.contains_key(&rec.image_id) {
            errors.push(LineError {
                line,
                message: format!("duplicate image_id `{}`", rec.image_id),
            });
            continue;
        }
        out.insert(rec.image_id, rec.boxes);
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

/// Writes one JSON object per line.
pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, row)?;
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Fraction of records whose predicted class matches the label.
pub fn evaluate<M: Classifier + ?Sized>(model: &M, dataset: &Dataset, table: &WordVectorTable) -> Result<f64> {
    crate::models::evaluate(model, &dataset.samples(table))
}
