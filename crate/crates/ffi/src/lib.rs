//! C ABI over `semlink`.
//!
//! Every fallible function returns an [`SlStatus`] and writes results through
//! out-pointers. After a failure, [`sl_last_error`] describes it for the
//! calling thread. Handles come from a `*_load` function and are released
//! with the matching `*_free`; freeing NULL is a no-op. Panics never cross the
//! boundary; they surface as `SL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use semlink::checkpoint;
use semlink::data::LabelVocabulary;
use semlink::detect::{self, DetBox};
use semlink::embeddings::WordVectorTable;
use semlink::kb::KnowledgeBase;
use semlink::models::{Classifier, Sample, TrainedModel};
use semlink::ntl::{self, NtlModel};
use semlink::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    UnknownLabel = 6,
    Shape = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Detection box in corner form. `class_id` stands in for the class label:
/// boxes with equal ids are suppressed against each other.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub score: f64,
    pub class_id: u32,
}

pub struct SlKnowledgeBase(KnowledgeBase);

pub struct SlWordVectors(WordVectorTable);

pub struct SlLinkModel(NtlModel);

pub struct SlClassifier {
    model: TrainedModel,
    labels: LabelVocabulary,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => SlStatus::Io,
            Error::Ingest { .. } | Error::EmptyFile(_) | Error::Checkpoint(_) | Error::Json(_) => SlStatus::Parse,
            Error::Shape(_) => SlStatus::Shape,
            Error::UnknownLabel { .. } | Error::OutOfVocabulary(_) => SlStatus::UnknownLabel,
            _ => SlStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult = Result<(), Failure>;

fn guard(f: impl FnOnce() -> FfiResult) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SlStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(&format!("internal panic: {message}"));
            SlStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SlStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SlStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        Ok(&mut [])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts_mut(p, len))
    }
}

unsafe fn store<T>(dst: *mut *mut T, value: T) -> FfiResult {
    *out(dst, "out")? = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Copies `s` NUL-terminated into `buf`. `needed` receives the buffer size
/// required, including the terminator.
unsafe fn copy_str(s: &str, buf: *mut c_char, buf_len: usize, needed: *mut usize) -> FfiResult {
    let need = s.len() + 1;
    if !needed.is_null() {
        *needed = need;
    }
    if buf_len < need {
        return Err(Failure(SlStatus::BufferTooSmall, format!("buffer needs {need} bytes")));
    }
    let dst = slice_mut(buf.cast::<u8>(), buf_len, "buf")?;
    dst[..s.len()].copy_from_slice(s.as_bytes());
    dst[s.len()] = 0;
    Ok(())
}

fn to_det_box(b: &SlBox) -> DetBox {
    DetBox::new(b.x_min, b.y_min, b.x_max, b.y_max, b.score, b.class_id.to_string())
}

/// Message for the last failed call on this thread, or "" after a success.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a tab-separated knowledge base.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_kb` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_kb_load(path: *const c_char, out_kb: *mut *mut SlKnowledgeBase) -> SlStatus {
    guard(|| store(out_kb, SlKnowledgeBase(KnowledgeBase::load(str_arg(path, "path")?)?)))
}

/// # Safety
/// `kb` must be NULL or a handle from [`sl_kb_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_kb_free(kb: *mut SlKnowledgeBase) {
    free(kb)
}

/// # Safety
/// `kb` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_kb_counts(
    kb: *const SlKnowledgeBase,
    entities: *mut usize,
    relations: *mut usize,
    triples: *mut usize,
) -> SlStatus {
    guard(|| {
        let kb = &handle(kb, "kb")?.0;
        *out(entities, "entities")? = kb.num_entities();
        *out(relations, "relations")? = kb.num_relations();
        *out(triples, "triples")? = kb.len();
        Ok(())
    })
}

/// Closed-world membership of `(head, relation, tail)`.
///
/// # Safety
/// `kb` must be a live handle, the labels NUL-terminated strings and
/// `out_contains` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_kb_contains(
    kb: *const SlKnowledgeBase,
    head: *const c_char,
    relation: *const c_char,
    tail: *const c_char,
    out_contains: *mut bool,
) -> SlStatus {
    guard(|| {
        let kb = &handle(kb, "kb")?.0;
        let found = kb.contains_labels(
            str_arg(head, "head")?,
            str_arg(relation, "relation")?,
            str_arg(tail, "tail")?,
        );
        *out(out_contains, "out_contains")? = found;
        Ok(())
    })
}

/// Loads a whitespace-separated word vector file of dimension `dim`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_vectors` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_vectors_load(
    path: *const c_char,
    dim: usize,
    out_vectors: *mut *mut SlWordVectors,
) -> SlStatus {
    guard(|| {
        store(
            out_vectors,
            SlWordVectors(WordVectorTable::load(str_arg(path, "path")?, dim)?),
        )
    })
}

/// # Safety
/// `vectors` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_vectors_free(vectors: *mut SlWordVectors) {
    free(vectors)
}

/// Averaged embedding of an entity label list, the zero vector when no label
/// embeds. `out` must hold exactly the table dimension.
///
/// # Safety
/// `labels` must point to `n_labels` NUL-terminated strings and `out` to
/// `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sl_vectors_embed_entities(
    vectors: *const SlWordVectors,
    labels: *const *const c_char,
    n_labels: usize,
    out_embedding: *mut f64,
    out_len: usize,
) -> SlStatus {
    guard(|| {
        let table = &handle(vectors, "vectors")?.0;
        if out_len != table.dim() {
            return Err(Failure(
                SlStatus::Shape,
                format!("output length {out_len} != dimension {}", table.dim()),
            ));
        }
        let labels = slice(labels, n_labels, "labels")?
            .iter()
            .map(|&p| str_arg(p, "label"))
            .collect::<Result<Vec<_>, _>>()?;
        let v = table.embed_entity_set_or_zero(&labels, "ffi");
        slice_mut(out_embedding, out_len, "out_embedding")?.copy_from_slice(&v);
        Ok(())
    })
}

/// Loads a link model checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_link_model_load(path: *const c_char, out_model: *mut *mut SlLinkModel) -> SlStatus {
    guard(|| store(out_model, SlLinkModel(checkpoint::load_ntl(str_arg(path, "path")?)?)))
}

/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_link_model_free(model: *mut SlLinkModel) {
    free(model)
}

/// Raw tensor-layer score and its plausibility (the negated raw score).
///
/// # Safety
/// `model` must be a live handle, the labels NUL-terminated strings and the
/// out-pointers valid.
#[no_mangle]
pub unsafe extern "C" fn sl_link_model_score(
    model: *const SlLinkModel,
    head: *const c_char,
    relation: *const c_char,
    tail: *const c_char,
    out_raw: *mut f64,
    out_plausibility: *mut f64,
) -> SlStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let raw = m.raw_score(
            str_arg(head, "head")?,
            str_arg(relation, "relation")?,
            str_arg(tail, "tail")?,
        )?;
        *out(out_raw, "out_raw")? = raw;
        *out(out_plausibility, "out_plausibility")? = ntl::plausibility(raw);
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `out_count` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_link_model_num_entities(model: *const SlLinkModel, out_count: *mut usize) -> SlStatus {
    guard(|| {
        *out(out_count, "out_count")? = handle(model, "model")?.0.entities().len();
        Ok(())
    })
}

/// Copies the label of entity `index` into `buf`.
///
/// # Safety
/// `model` must be a live handle, `buf` must hold `buf_len` bytes and
/// `out_needed` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_link_model_entity(
    model: *const SlLinkModel,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
    out_needed: *mut usize,
) -> SlStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let (label, _) = m
            .entities()
            .get_index(index)
            .ok_or_else(|| Failure(SlStatus::InvalidArgument, format!("entity index {index} out of range")))?;
        copy_str(label, buf, buf_len, out_needed)
    })
}

/// Ranks every entity as tail of `(head, relation)`, most plausible first.
/// Writes up to `capacity` entity indices and plausibilities.
///
/// # Safety
/// `model` must be a live handle, the labels NUL-terminated strings and the
/// output arrays must hold `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn sl_link_model_rank_tails(
    model: *const SlLinkModel,
    head: *const c_char,
    relation: *const c_char,
    out_indices: *mut usize,
    out_plausibility: *mut f64,
    capacity: usize,
    out_written: *mut usize,
) -> SlStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let ranked = m.rank_tails(str_arg(head, "head")?, str_arg(relation, "relation")?)?;
        let n = ranked.len().min(capacity);
        let idx = slice_mut(out_indices, capacity, "out_indices")?;
        let scores = slice_mut(out_plausibility, capacity, "out_plausibility")?;
        for (i, (label, p)) in ranked.iter().take(n).enumerate() {
            idx[i] = m.entities().get_index_of(label).expect("ranked label is an entity");
            scores[i] = *p;
        }
        *out(out_written, "out_written")? = n;
        Ok(())
    })
}

/// Intersection over union of two boxes; 0 when both are degenerate.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sl_iou(a: *const SlBox, b: *const SlBox, out_iou: *mut f64) -> SlStatus {
    guard(|| {
        let v = detect::iou(&to_det_box(handle(a, "a")?), &to_det_box(handle(b, "b")?))?;
        *out(out_iou, "out_iou")? = v;
        Ok(())
    })
}

/// Greedy per-class non-max suppression. Writes the input indices of the
/// kept boxes, best score first; `capacity` must be at least
/// `min(n_boxes, max_keep)`.
///
/// # Safety
/// `boxes` must point to `n_boxes` boxes and `out_indices` to `capacity`
/// elements.
#[no_mangle]
pub unsafe extern "C" fn sl_nms(
    boxes: *const SlBox,
    n_boxes: usize,
    iou_threshold: f64,
    max_keep: usize,
    out_indices: *mut usize,
    capacity: usize,
    out_written: *mut usize,
) -> SlStatus {
    guard(|| {
        let boxes: Vec<DetBox> = slice(boxes, n_boxes, "boxes")?.iter().map(to_det_box).collect();
        let kept = detect::nms_indices(&boxes, iou_threshold, max_keep)?;
        if kept.len() > capacity {
            return Err(Failure(
                SlStatus::BufferTooSmall,
                format!("{} kept boxes exceed capacity {capacity}", kept.len()),
            ));
        }
        slice_mut(out_indices, capacity, "out_indices")?[..kept.len()].copy_from_slice(&kept);
        *out(out_written, "out_written")? = kept.len();
        Ok(())
    })
}

/// Loads a classifier checkpoint (either architecture).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_classifier` valid.
#[no_mangle]
pub unsafe extern "C" fn sl_classifier_load(path: *const c_char, out_classifier: *mut *mut SlClassifier) -> SlStatus {
    guard(|| {
        let (model, labels) = checkpoint::load_classifier(str_arg(path, "path")?)?;
        store(out_classifier, SlClassifier { model, labels })
    })
}

/// # Safety
/// `classifier` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sl_classifier_free(classifier: *mut SlClassifier) {
    free(classifier)
}

/// Predicted class index and, if `out_probs` is not NULL, the class
/// distribution (`probs_len` must then equal the class count). The baseline
/// ignores `image`, which may be NULL with `image_len` 0.
///
/// # Safety
/// `classifier` must be a live handle and every array must hold its stated
/// length.
#[no_mangle]
pub unsafe extern "C" fn sl_classifier_predict(
    classifier: *const SlClassifier,
    image: *const f64,
    image_len: usize,
    embedding: *const f64,
    embedding_len: usize,
    out_class: *mut usize,
    out_probs: *mut f64,
    probs_len: usize,
) -> SlStatus {
    guard(|| {
        let c = handle(classifier, "classifier")?;
        let sample = Sample {
            image: slice(image, image_len, "image")?.to_vec(),
            embedding: slice(embedding, embedding_len, "embedding")?.to_vec(),
            label: 0,
        };
        let (class, probs) = c.model.predict(&sample)?;
        if !out_probs.is_null() {
            if probs_len != probs.len() {
                return Err(Failure(
                    SlStatus::Shape,
                    format!("probs_len {probs_len} != {}", probs.len()),
                ));
            }
            slice_mut(out_probs, probs_len, "out_probs")?.copy_from_slice(&probs);
        }
        *out(out_class, "out_class")? = class;
        Ok(())
    })
}

/// Copies the label of class `index` into `buf`.
///
/// # Safety
/// `classifier` must be a live handle, `buf` must hold `buf_len` bytes and
/// `out_needed` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn sl_classifier_label(
    classifier: *const SlClassifier,
    index: usize,
    buf: *mut c_char,
    buf_len: usize,
    out_needed: *mut usize,
) -> SlStatus {
    guard(|| {
        let c = handle(classifier, "classifier")?;
        let label = c
            .labels
            .label(index)
            .ok_or_else(|| Failure(SlStatus::InvalidArgument, format!("class index {index} out of range")))?;
        copy_str(label, buf, buf_len, out_needed)
    })
}
