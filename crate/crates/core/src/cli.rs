//! The `semlink` command line.
//!
//! Exit codes: 0 success, 1 validation or runtime error, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::checkpoint;
use crate::data::{self, DetectionLine, LabelVocabulary};
use crate::detect::{self, DEFAULT_IOU_THRESHOLD, DEFAULT_MAX_KEEP};
use crate::embeddings::{WordVectorTable, DEFAULT_DIM};
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::models::{self, Classifier, ModelKind, TrainConfig, TrainedModel};
use crate::nn::gradcheck::DEFAULT_STEP;
use crate::ntl::{self, NtlConfig};
use crate::verify::{self, DrawPlan, Network};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "semlink", version, about = "Semantic link learning between image entities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate input files and report every bad line.
    IngestCheck(IngestCheckArgs),
    /// Train a relation classifier.
    Train(TrainArgs),
    /// Accuracy of a classifier checkpoint on a feature file.
    Eval(EvalArgs),
    /// Per-record predictions of a classifier checkpoint.
    Predict(PredictArgs),
    /// k-fold cross-validation.
    Cv(CvArgs),
    /// Non-max suppression over raw detections.
    Nms(NmsArgs),
    /// Raw score and plausibility of one triple.
    ScoreTriple(ScoreTripleArgs),
    /// Candidate tails of (head, relation), most plausible first.
    RankTails(RankTailsArgs),
    /// Train the neural tensor link model on a knowledge base.
    TrainNtl(TrainNtlArgs),
    /// Finite-difference gradient check of the networks and the triple scorer.
    GradCheck(GradCheckArgs),
}

#[derive(Args, Debug)]
struct IngestCheckArgs {
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    detections: Option<PathBuf>,
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    glove: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbeddingArgs {
    /// Word vector file: `token v1 .. vd` per line.
    #[arg(long)]
    glove: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    dim: usize,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = crate::nn::adam::DEFAULT_LR)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_parser = parse_kind)]
    model: ModelKind,
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    /// Class labels, one per line (default: the built-in 12).
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Report path (default: `<out stem>.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Learning curves path (default: `<out stem>.curves.csv`).
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    val_split: f64,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Classifier checkpoint.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    embedding: EmbeddingArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    /// Output JSON Lines (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[arg(long, value_parser = parse_kind)]
    model: ModelKind,
    #[arg(long)]
    features: PathBuf,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Report path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Args, Debug)]
struct NmsArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    iou: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_KEEP)]
    max_keep: usize,
    #[arg(long)]
    out: PathBuf,
    /// Add each image's entity label list to the output.
    #[arg(long)]
    entities: bool,
}

#[derive(Args, Debug)]
struct ScoreTripleArgs {
    /// Knowledge base, used to report whether the triple is a known fact.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Link model checkpoint.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    head: String,
    #[arg(long)]
    rel: String,
    #[arg(long)]
    tail: String,
}

#[derive(Args, Debug)]
struct RankTailsArgs {
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    head: String,
    #[arg(long)]
    rel: String,
    /// Print only the best `top` tails.
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainNtlArgs {
    #[arg(long)]
    kb: PathBuf,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Report path (default: `<out stem>.report.json`).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Tensor slices per relation.
    #[arg(long, default_value_t = ntl::DEFAULT_SLICES)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value_t = crate::nn::adam::DEFAULT_LR)]
    lr: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 1)]
    negatives: usize,
}

#[derive(Args, Debug)]
struct GradCheckArgs {
    #[arg(long)]
    seed: u64,
    /// baseline, fusion or ntl; repeatable (default: all three).
    #[arg(long = "network", value_parser = parse_network)]
    networks: Vec<Network>,
    #[arg(long, default_value_t = 100)]
    draws: usize,
    /// Coordinates per parameter tensor per draw (default: per network).
    #[arg(long)]
    coords: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Exit 1 if any relative error exceeds this.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_network(s: &str) -> std::result::Result<Network, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::IngestCheck(a) => ingest_check(a),
        Command::Train(a) => train(a).map(|_| EXIT_OK),
        Command::Eval(a) => eval(a).map(|_| EXIT_OK),
        Command::Predict(a) => predict(a).map(|_| EXIT_OK),
        Command::Cv(a) => cv(a).map(|_| EXIT_OK),
        Command::Nms(a) => nms(a).map(|_| EXIT_OK),
        Command::ScoreTriple(a) => score_triple(a).map(|_| EXIT_OK),
        Command::RankTails(a) => rank_tails(a).map(|_| EXIT_OK),
        Command::TrainNtl(a) => train_ntl(a).map(|_| EXIT_OK),
        Command::GradCheck(a) => grad_check(a),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `ckpt.json` → `ckpt.<suffix>`
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn vocabulary(path: Option<&Path>) -> Result<LabelVocabulary> {
    path.map_or_else(|| Ok(LabelVocabulary::default()), LabelVocabulary::load)
}

fn load_table(a: &EmbeddingArgs) -> Result<WordVectorTable> {
    WordVectorTable::load(&a.glove, a.dim)
}

fn ingest_check(a: IngestCheckArgs) -> Result<i32> {
    let mut failed = false;
    let mut report = |file: &str, path: &Path, result: Result<serde_json::Value>| {
        let line = match result {
            Ok(summary) => json!({"file": file, "path": path, "ok": true, "summary": summary}),
            Err(e) => {
                failed = true;
                let errors: Vec<String> = match &e {
                    Error::Ingest { errors, .. } => errors.iter().map(ToString::to_string).collect(),
                    other => vec![other.to_string()],
                };
                json!({"file": file, "path": path, "ok": false, "errors": errors})
            }
        };
        print_json(&line)
    };
    let labels = match &a.labels {
        Some(p) => {
            let v = LabelVocabulary::load(p);
            let summary = v.as_ref().map(|v| json!({"labels": v.labels().len()}));
            report("labels", p, summary.map_err(|e| Error::invalid(e.to_string())))?;
            v.ok()
        }
        None => Some(LabelVocabulary::default()),
    };
    if let Some(p) = &a.features {
        let r = match &labels {
            Some(v) => data::read_features(p, v).map(|d| json!({"records": d.len()})),
            None => Err(Error::invalid("label vocabulary failed to load")),
        };
        report("features", p, r)?;
    }
    if let Some(p) = &a.detections {
        let r = data::read_detections(p)
            .map(|d| json!({"images": d.len(), "boxes": d.values().map(Vec::len).sum::<usize>()}));
        report("detections", p, r)?;
    }
    if let Some(p) = &a.kb {
        let r = KnowledgeBase::load(p)
            .map(|kb| json!({"entities": kb.num_entities(), "relations": kb.num_relations(), "triples": kb.len()}));
        report("kb", p, r)?;
    }
    if let Some(p) = &a.glove {
        let r = WordVectorTable::load(p, a.dim).map(|t| json!({"tokens": t.len(), "dim": t.dim()}));
        report("glove", p, r)?;
    }
    Ok(if failed { EXIT_INVALID } else { EXIT_OK })
}

fn train(a: TrainArgs) -> Result<()> {
    let vocab = vocabulary(a.labels.as_deref())?;
    let dataset = data::read_features(&a.features, &vocab)?;
    let samples = dataset.samples(&load_table(&a.embedding)?);
    let config = TrainConfig {
        epochs: a.fit.epochs,
        lr: a.fit.lr,
        val_split: a.val_split,
        batch_size: a.fit.batch_size,
        seed: a.seed,
    };
    let mut model = TrainedModel::build(a.model, a.seed)?;
    let report = models::train(&mut model, &samples, &config)?;
    checkpoint::save_classifier(&model, &vocab, &a.out)?;
    write_json(&a.report.unwrap_or_else(|| sibling(&a.out, "report.json")), &report)?;
    write_file(
        &a.curves.unwrap_or_else(|| sibling(&a.out, "curves.csv")),
        &report.curves_csv(),
    )?;
    print_json(&json!({
        "model": report.model,
        "train_size": report.train_size,
        "val_size": report.val_size,
        "final_train_loss": report.epochs.last().map(|e| e.train_loss),
        "final_val_accuracy": report.final_val_accuracy,
    }))
}

fn eval(a: EvalArgs) -> Result<()> {
    let (model, vocab) = checkpoint::load_classifier(&a.model)?;
    let dataset = data::read_features(&a.features, &vocab)?;
    let accuracy = data::evaluate(&model, &dataset, &load_table(&a.embedding)?)?;
    print_json(&json!({"records": dataset.len(), "accuracy": accuracy}))
}

fn predict(a: PredictArgs) -> Result<()> {
    let (model, vocab) = checkpoint::load_classifier(&a.model)?;
    let dataset = data::read_features(&a.features, &vocab)?;
    let samples = dataset.samples(&load_table(&a.embedding)?);
    let mut rows = Vec::with_capacity(samples.len());
    for (rec, s) in dataset.records().iter().zip(&samples) {
        let (class, probs) = model.predict(s)?;
        rows.push(json!({
            "image_id": rec.image_id,
            "label": rec.label,
            "predicted": vocab.label(class),
            "probabilities": probs,
        }));
    }
    match &a.out {
        Some(p) => data::write_jsonl(p, &rows),
        None => rows.iter().try_for_each(print_json),
    }
}

fn cv(a: CvArgs) -> Result<()> {
    let vocab = vocabulary(a.labels.as_deref())?;
    let dataset = data::read_features(&a.features, &vocab)?;
    let samples = dataset.samples(&load_table(&a.embedding)?);
    let config = TrainConfig {
        epochs: a.fit.epochs,
        lr: a.fit.lr,
        val_split: 0.0,
        batch_size: a.fit.batch_size,
        seed: a.seed,
    };
    let kind = a.model;
    let report = models::kfold_cv(|s| TrainedModel::build(kind, s), &samples, a.folds, a.seed, &config)?;
    match &a.out {
        Some(p) => write_json(p, &report),
        None => print_json(&report),
    }
}

fn nms(a: NmsArgs) -> Result<()> {
    let detections = data::read_detections(&a.detections)?;
    let mut rows = Vec::with_capacity(detections.len());
    for (image_id, boxes) in detections {
        let kept = detect::nms(&boxes, a.iou, a.max_keep)?;
        rows.push(DetectionLine {
            image_id,
            entities: a.entities.then(|| detect::entities_from_boxes(&kept)),
            boxes: kept,
        });
    }
    data::write_jsonl(&a.out, &rows)
}

fn score_triple(a: ScoreTripleArgs) -> Result<()> {
    let model = checkpoint::load_ntl(&a.model)?;
    let raw = model.raw_score(&a.head, &a.rel, &a.tail)?;
    let mut out = json!({
        "head": a.head,
        "relation": a.rel,
        "tail": a.tail,
        "raw_score": raw,
        "plausibility": ntl::plausibility(raw),
    });
    if let Some(p) = &a.kb {
        out["in_kb"] = KnowledgeBase::load(p)?.contains_labels(&a.head, &a.rel, &a.tail).into();
    }
    print_json(&out)
}

fn rank_tails(a: RankTailsArgs) -> Result<()> {
    let model = checkpoint::load_ntl(&a.model)?;
    let kb = a.kb.as_deref().map(KnowledgeBase::load).transpose()?;
    let ranked = model.rank_tails(&a.head, &a.rel)?;
    let top = a.top.unwrap_or(ranked.len());
    for (i, (tail, plausibility)) in ranked.into_iter().take(top).enumerate() {
        let mut row = json!({"rank": i + 1, "tail": tail, "plausibility": plausibility});
        if let Some(kb) = &kb {
            row["in_kb"] = kb.contains_labels(&a.head, &a.rel, &tail).into();
        }
        print_json(&row)?;
    }
    Ok(())
}

fn train_ntl(a: TrainNtlArgs) -> Result<()> {
    let kb = KnowledgeBase::load(&a.kb)?;
    let vectors = ntl::entity_vectors(&kb, &load_table(&a.embedding)?)?;
    let config = NtlConfig {
        k: a.k,
        margin: a.margin,
        lr: a.lr,
        epochs: a.epochs,
        negatives_per_positive: a.negatives,
        seed: a.seed,
    };
    let (model, report) = ntl::train_ntl(&kb, &vectors, &config)?;
    let hits_at_1 = model.hits_at_n(kb.triples(), 1)?;
    let hits_at_3 = model.hits_at_n(kb.triples(), 3.min(kb.num_entities()))?;
    checkpoint::save_ntl(&model, &a.out)?;
    let summary = json!({
        "config": report.config,
        "epoch_losses": report.epoch_losses,
        "train_hits_at_1": hits_at_1,
        "train_hits_at_3": hits_at_3,
    });
    write_json(&a.report.unwrap_or_else(|| sibling(&a.out, "report.json")), &summary)?;
    print_json(&json!({
        "triples": kb.len(),
        "first_epoch_loss": report.epoch_losses.first(),
        "last_epoch_loss": report.epoch_losses.last(),
        "train_hits_at_1": hits_at_1,
    }))
}

fn grad_check(a: GradCheckArgs) -> Result<i32> {
    let networks = if a.networks.is_empty() {
        Network::ALL.to_vec()
    } else {
        a.networks
    };
    let mut pass = true;
    for n in networks {
        let plan = DrawPlan {
            draws: a.draws,
            step: a.step,
            per_tensor: a.coords.unwrap_or_else(|| n.default_per_tensor()),
            seed: a.seed,
        };
        let r = verify::check_network(n, &plan)?;
        let ok = r.max_rel_error <= a.tolerance;
        pass &= ok;
        print_json(&json!({
            "network": n,
            "draws": a.draws,
            "checked": r.checked,
            "skipped_kinks": r.skipped_kinks,
            "max_rel_error": r.max_rel_error,
            "pass": ok,
        }))?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_INVALID })
}
