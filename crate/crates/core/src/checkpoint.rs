//! Versioned JSON checkpoints.
//!
//! ```text
//! link model  {"format_version":1,"d":..,"k":..,
//!              "relations":{label:{"W":[k × d × d],"V":[k × 2d],"b":[k]}},
//!              "entities":{label:[d]}}
//! classifier  {"format_version":1,"kind":"baseline"|"fusion","labels":[12],
//!              "filters":8 (fusion only),"params":[{"shape":[..],"data":[..]}]}
//! ```
//!
//! Numbers are written in shortest round-trip form, so a save/load cycle is
//! bit-exact.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::data::LabelVocabulary;
use crate::error::{Error, Result};
use crate::models::{Classifier, FusionModel, ModelKind, TrainedModel};
use crate::nn::Tensor;
use crate::ntl::{NtlModel, NtlRelationParams};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NtlDoc {
    format_version: u32,
    d: usize,
    k: usize,
    relations: IndexMap<String, RelationDoc>,
    entities: IndexMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RelationDoc {
    #[serde(rename = "W")]
    w: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ClassifierDoc {
    format_version: u32,
    kind: ModelKind,
    labels: LabelVocabulary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    filters: Option<usize>,
    params: Vec<Tensor>,
}

fn check_version(v: u32) -> Result<()> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::Checkpoint(format!(
            "unsupported format_version {v} (expected {FORMAT_VERSION})"
        )))
    }
}

fn rows(t: &Tensor, cols: usize) -> Vec<Vec<f64>> {
    t.data().chunks(cols).map(<[f64]>::to_vec).collect()
}

fn flatten_rows(label: &str, what: &str, rows: Vec<Vec<f64>>, cols: usize) -> Result<Vec<f64>> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Checkpoint(format!(
            "relation `{label}`: every {what} row needs {cols} numbers"
        )));
    }
    Ok(rows.concat())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn ntl_to_json(model: &NtlModel) -> String {
    let (d, k) = (model.dim(), model.slices());
    let relations = model
        .relations()
        .iter()
        .map(|(label, p)| {
            let [w, v, b] = p.tensors();
            let doc = RelationDoc {
                w: w.data()
                    .chunks(d * d)
                    .map(|slice| slice.chunks(d).map(<[f64]>::to_vec).collect())
                    .collect(),
                v: rows(v, 2 * d),
                b: b.data().to_vec(),
            };
            (label.clone(), doc)
        })
        .collect();
    let doc = NtlDoc {
        format_version: FORMAT_VERSION,
        d,
        k,
        relations,
        entities: model.entities().clone(),
    };
    let mut s = serde_json::to_string(&doc).expect("checkpoint serializes");
    s.push('\n');
    s
}

pub fn ntl_from_json(text: &str) -> Result<NtlModel> {
    let doc: NtlDoc = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    check_version(doc.format_version)?;
    let (d, k) = (doc.d, doc.k);
    if d == 0 || k == 0 {
        return Err(Error::Checkpoint("d and k must be positive".into()));
    }
    let mut relations = IndexMap::new();
    for (label, r) in doc.relations {
        if r.w.len() != k || r.v.len() != k || r.b.len() != k {
            return Err(Error::Checkpoint(format!(
                "relation `{label}` does not have {k} slices"
            )));
        }
        let mut w = Vec::with_capacity(k * d * d);
        for slice in r.w {
            if slice.len() != d {
                return Err(Error::Checkpoint(format!(
                    "relation `{label}`: W slice is not {d} × {d}"
                )));
            }
            w.extend(flatten_rows(&label, "W", slice, d)?);
        }
        let v = flatten_rows(&label, "V", r.v, 2 * d)?;
        let params = NtlRelationParams::from_parts(
            Tensor::from_vec(&[k, d, d], w)?,
            Tensor::from_vec(&[k, 2 * d], v)?,
            Tensor::from_vec(&[k], r.b)?,
        )?;
        if !params.tensors().iter().all(|t| t.is_finite()) {
            return Err(Error::NonFinite("relation parameters"));
        }
        relations.insert(label, params);
    }
    NtlModel::new(relations, doc.entities, d, k)
}

pub fn save_ntl(model: &NtlModel, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &ntl_to_json(model))
}

pub fn load_ntl(path: impl AsRef<Path>) -> Result<NtlModel> {
    ntl_from_json(&read_text(path.as_ref())?)
}

pub fn classifier_to_json(model: &TrainedModel, labels: &LabelVocabulary) -> String {
    let doc = ClassifierDoc {
        format_version: FORMAT_VERSION,
        kind: model.kind(),
        labels: labels.clone(),
        filters: match model {
            TrainedModel::Fusion(m) => Some(m.filters()),
            TrainedModel::Baseline(_) => None,
        },
        params: model.params().into_iter().cloned().collect(),
    };
    let mut s = serde_json::to_string(&doc).expect("checkpoint serializes");
    s.push('\n');
    s
}

/// Rebuilds the architecture named in the checkpoint and loads its
/// parameters, rejecting any tensor whose shape differs.
pub fn classifier_from_json(text: &str) -> Result<(TrainedModel, LabelVocabulary)> {
    let doc: ClassifierDoc = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
    check_version(doc.format_version)?;
    let mut model = match (doc.kind, doc.filters) {
        (ModelKind::Baseline, None) => TrainedModel::build(ModelKind::Baseline, 0)?,
        (ModelKind::Fusion, Some(f)) => TrainedModel::Fusion(FusionModel::with_filters(0, f)?),
        (ModelKind::Fusion, None) => TrainedModel::build(ModelKind::Fusion, 0)?,
        (ModelKind::Baseline, Some(_)) => {
            return Err(Error::Checkpoint("baseline checkpoint must not set filters".into()))
        }
    };
    let mut slots = model.params_mut();
    if slots.len() != doc.params.len() {
        return Err(Error::Checkpoint(format!(
            "{} expects {} parameter tensors, found {}",
            doc.kind,
            slots.len(),
            doc.params.len()
        )));
    }
    for (i, (slot, t)) in slots.iter_mut().zip(doc.params).enumerate() {
        if slot.shape() != t.shape() || t.len() != slot.len() {
            return Err(Error::Checkpoint(format!(
                "parameter {i}: shape {:?} does not match {:?}",
                t.shape(),
                slot.shape()
            )));
        }
        if !t.is_finite() {
            return Err(Error::NonFinite("classifier parameters"));
        }
        **slot = t;
    }
    Ok((model, doc.labels))
}

pub fn save_classifier(model: &TrainedModel, labels: &LabelVocabulary, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &classifier_to_json(model, labels))
}

pub fn load_classifier(path: impl AsRef<Path>) -> Result<(TrainedModel, LabelVocabulary)> {
    classifier_from_json(&read_text(path.as_ref())?)
}
