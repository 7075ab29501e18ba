//! Annotation files, evaluation against them, and a seeded synthetic corpus.

mod eval;
mod generate;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::flow::Branch;
use crate::ingest::{candidate_at, parse_document, scrub_template, Document, ListCandidate};

pub use eval::{
    block_ablation, evaluate_identification, labeled_candidates, score_blocks, AblationRow, BlockScore,
    ABLATION_ROWS,
};
pub use generate::{
    generate_corpus, write_corpus, CorpusManifest, CorpusSpec, GeneratedCorpus, GeneratedDoc,
    NoiseKind,
};

pub const ANNOTATION_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberAnnotation {
    pub step: usize,
    pub sentence: usize,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionAnnotation {
    pub step_index: usize,
    pub sentence_index: usize,
    pub condition_text: String,
    pub effect_text: String,
    pub block_members: Vec<MemberAnnotation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub version: u32,
    /// Document path, relative to the annotation file.
    pub doc_path: String,
    pub node_path: Vec<usize>,
    pub is_procedure: bool,
    #[serde(default)]
    pub decision_annotations: Vec<DecisionAnnotation>,
}

/// Records loaded from one annotation file.
#[derive(Debug, Clone)]
pub struct AnnotationSet {
    pub base_dir: PathBuf,
    pub records: Vec<AnnotationRecord>,
}

/// Reads, parses and scrubs an HTML file; the URL is the given name.
pub fn load_document(path: &Path, url: &str) -> Result<Document> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(scrub_template(&parse_document(&raw, url)?))
}

/// Scrubbed documents keyed by annotation doc path.
#[derive(Debug, Default)]
pub struct DocumentCache {
    docs: HashMap<String, Document>,
}

impl DocumentCache {
    pub fn get(&mut self, set: &AnnotationSet, doc_path: &str) -> Result<&Document> {
        if !self.docs.contains_key(doc_path) {
            let doc = load_document(&set.base_dir.join(doc_path), doc_path)?;
            self.docs.insert(doc_path.to_string(), doc);
        }
        Ok(&self.docs[doc_path])
    }

    pub fn candidate(&mut self, set: &AnnotationSet, rec: &AnnotationRecord, k: usize) -> Result<Option<ListCandidate>> {
        let doc = self.get(set, &rec.doc_path)?;
        Ok(candidate_at(doc, &rec.node_path, k))
    }
}

fn pick<'a>(obj: &'a serde_json::Map<String, Value>, keys: &[&str]) -> Option<&'a Value> {
    keys.iter().find_map(|k| obj.get(*k))
}

fn as_bool(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        Value::Number(n) => n.as_i64().map(|i| i > 0),
        Value::String(s) => match s.to_lowercase().as_str() {
            "true" | "yes" | "1" | "procedure" | "positive" => Some(true),
            "false" | "no" | "0" | "not_procedure" | "non-procedure" | "negative" => Some(false),
            _ => None,
        },
        _ => None,
    }
}

fn as_path(v: &Value) -> Option<Vec<usize>> {
    match v {
        Value::Array(xs) => xs.iter().map(|x| x.as_u64().map(|n| n as usize)).collect(),
        Value::String(s) => s
            .split(['/', '.', ','])
            .filter(|p| !p.is_empty())
            .map(|p| p.trim().parse().ok())
            .collect(),
        _ => None,
    }
}

fn as_branch(v: Option<&Value>) -> Branch {
    match v.and_then(Value::as_str).map(str::to_lowercase).as_deref() {
        Some("false") | Some("no") | Some("f") => Branch::False,
        _ => match v.and_then(Value::as_bool) {
            Some(false) => Branch::False,
            _ => Branch::True,
        },
    }
}

/// Best-effort reader for records without a version field, accepting common
/// alternative key names.
fn compat_record(v: &Value) -> std::result::Result<AnnotationRecord, String> {
    let obj = v.as_object().ok_or("record is not an object")?;
    let doc_path = pick(obj, &["doc_path", "doc", "file", "page", "path_html", "html", "url"])
        .and_then(Value::as_str)
        .ok_or("missing document path")?
        .to_string();
    let node_path = pick(obj, &["node_path", "list_path", "path", "dom_path"])
        .and_then(as_path)
        .ok_or("missing node path")?;
    let is_procedure = pick(obj, &["is_procedure", "procedure", "is_proc", "label"])
        .and_then(as_bool)
        .ok_or("missing procedure label")?;
    let mut decisions = Vec::new();
    if let Some(Value::Array(ds)) = pick(obj, &["decision_annotations", "decisions", "decision_points"]) {
        for d in ds {
            let d = d.as_object().ok_or("decision is not an object")?;
            let num = |keys: &[&str]| pick(d, keys).and_then(Value::as_u64).map(|n| n as usize);
            let text = |keys: &[&str]| {
                pick(d, keys).and_then(Value::as_str).unwrap_or_default().to_string()
            };
            let mut members = Vec::new();
            if let Some(Value::Array(ms)) = pick(d, &["block_members", "block", "members"]) {
                for m in ms {
                    let m = m.as_object().ok_or("member is not an object")?;
                    let step = pick(m, &["step", "step_index"]).and_then(Value::as_u64);
                    let sentence = pick(m, &["sentence", "sentence_index"]).and_then(Value::as_u64);
                    let (Some(step), Some(sentence)) = (step, sentence) else {
                        return Err("member without step/sentence".into());
                    };
                    members.push(MemberAnnotation {
                        step: step as usize,
                        sentence: sentence as usize,
                        branch: as_branch(pick(m, &["branch", "label"])),
                    });
                }
            }
            decisions.push(DecisionAnnotation {
                step_index: num(&["step_index", "step"]).ok_or("decision without step")?,
                sentence_index: num(&["sentence_index", "sentence"]).ok_or("decision without sentence")?,
                condition_text: text(&["condition_text", "condition"]),
                effect_text: text(&["effect_text", "effect"]),
                block_members: members,
            });
        }
    }
    Ok(AnnotationRecord {
        version: ANNOTATION_VERSION,
        doc_path,
        node_path,
        is_procedure,
        decision_annotations: decisions,
    })
}

/// Parses annotation JSON Lines without touching the referenced documents.
pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| Error::Schema {
            line: line_no,
            message,
        };
        let value: Value = serde_json::from_str(line).map_err(|e| schema(e.to_string()))?;
        let rec = match value.get("version") {
            Some(v) if v.as_u64() == Some(u64::from(ANNOTATION_VERSION)) => {
                serde_json::from_value(value).map_err(|e| schema(e.to_string()))?
            }
            Some(v) => return Err(schema(format!("unsupported version {v}"))),
            None => compat_record(&value).map_err(|m| schema(m.to_string()))?,
        };
        out.push(rec);
    }
    Ok(out)
}

/// Loads and validates an annotation file: every node path must address a
/// list in its (scrubbed) document and every member must address a sentence.
pub fn load_annotations(path: &Path) -> Result<AnnotationSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let set = AnnotationSet {
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        records: parse_annotations(&text)?,
    };
    let mut cache = DocumentCache::default();
    for (idx, rec) in set.records.iter().enumerate() {
        let dangling = || Error::DanglingPath {
            record: idx,
            doc: rec.doc_path.clone(),
            path: rec.node_path.clone(),
        };
        let cand = cache.candidate(&set, rec, 1)?.ok_or_else(dangling)?;
        let exists = |step: usize, sentence: usize| {
            cand.items.get(step).is_some_and(|it| sentence < it.sentences.len())
        };
        for d in &rec.decision_annotations {
            let ok = exists(d.step_index, d.sentence_index)
                && d.block_members.iter().all(|m| exists(m.step, m.sentence));
            if !ok {
                return Err(Error::Schema {
                    line: idx + 1,
                    message: format!(
                        "decision ({}, {}) addresses a sentence outside the list",
                        d.step_index, d.sentence_index
                    ),
                });
            }
        }
    }
    Ok(set)
}

pub fn write_annotations(records: &[AnnotationRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}
