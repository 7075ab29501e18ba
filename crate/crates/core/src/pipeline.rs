//! End-to-end run from HTML pages to flow-graph files.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{ProcedureClassifier, TrainParams};
use crate::corpus::{labeled_candidates, load_annotations, load_document};
use crate::error::{Error, Result};
use crate::features::{builtin_wordlist, FeatureConfig};
use crate::flow::{mine_procedure, FlowConfig, FlowDocument, Procedure, SourceRef};
use crate::linguistics::{read_word_list, ImperativeLexicon};
use crate::search::{find_procedures, ProcedureCandidate, SearchConfig};

pub const REPORT_VERSION: u32 = 1;
/// Suffix of every flow-graph file written by the pipeline.
pub const FLOW_SUFFIX: &str = ".flow.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelinePaths {
    /// Model file; trained from `train_annotations` when absent.
    pub model: Option<PathBuf>,
    pub train_annotations: Option<PathBuf>,
    /// Extra domain verbs, one per line.
    pub lexicon: Option<PathBuf>,
    /// Dictionary filter for vocabulary terms.
    pub wordlist: Option<PathBuf>,
    /// HTML files or directories searched recursively.
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
}

impl Default for PipelinePaths {
    fn default() -> Self {
        PipelinePaths {
            model: None,
            train_annotations: None,
            lexicon: None,
            wordlist: None,
            inputs: Vec::new(),
            out: PathBuf::from("flows"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub train: TrainParams,
    pub search: SearchConfig,
    pub flow: FlowConfig,
    pub paths: PipelinePaths,
}

impl PipelineConfig {
    /// Reads a TOML or JSON config; relative paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
            _ => toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        };
        if let Some(base) = path.parent() {
            cfg.paths.resolve_against(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.search.validate()?;
        self.flow.validate()?;
        if self.train.reg_c.is_nan() || self.train.reg_c <= 0.0 {
            return Err(Error::Config(format!("reg_c must be positive, got {}", self.train.reg_c)));
        }
        if self.paths.model.is_none() && self.paths.train_annotations.is_none() {
            return Err(Error::Config("either paths.model or paths.train_annotations is required".into()));
        }
        Ok(())
    }
}

impl PipelinePaths {
    fn resolve_against(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.model, &mut self.train_annotations, &mut self.lexicon, &mut self.wordlist]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        self.inputs.iter_mut().for_each(fix);
        fix(&mut self.out);
    }
}

/// Where a flow-graph file came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub id: String,
    pub file: String,
    pub title: String,
    pub source: SourceRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FileReport {
    pub path: String,
    pub lists: usize,
    pub classified: usize,
    pub procedures: usize,
    pub decision_points: usize,
    pub empty_blocks: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub files: usize,
    pub lists: usize,
    pub classified: usize,
    pub procedures: usize,
    pub decision_points: usize,
    pub empty_blocks: usize,
    pub truncated: usize,
    pub per_file: Vec<FileReport>,
    pub flows: Vec<FlowEntry>,
}

impl RunReport {
    fn from_files(per_file: Vec<FileReport>, flows: Vec<FlowEntry>) -> Self {
        let sum = |f: fn(&FileReport) -> usize| per_file.iter().map(f).sum();
        RunReport {
            version: REPORT_VERSION,
            files: per_file.len(),
            lists: sum(|f| f.lists),
            classified: sum(|f| f.classified),
            procedures: sum(|f| f.procedures),
            decision_points: sum(|f| f.decision_points),
            empty_blocks: sum(|f| f.empty_blocks),
            truncated: sum(|f| usize::from(f.truncated)),
            per_file,
            flows,
        }
    }
}

fn lexicon(paths: &PipelinePaths) -> Result<ImperativeLexicon> {
    match &paths.lexicon {
        Some(p) => ImperativeLexicon::builtin_with_file(p),
        None => Ok(ImperativeLexicon::builtin().clone()),
    }
}

/// Loads the configured model, or trains one when only annotations are given.
pub fn resolve_classifier(cfg: &PipelineConfig) -> Result<ProcedureClassifier> {
    if let Some(model) = &cfg.paths.model {
        if model.exists() {
            let clf = ProcedureClassifier::load(model)?;
            if clf.config != cfg.features {
                log::warn!("{}: using the feature settings stored with the model", model.display());
            }
            return Ok(clf);
        }
        if cfg.paths.train_annotations.is_none() {
            return Err(Error::ModelNotFound(model.clone()));
        }
    }
    let Some(ann) = &cfg.paths.train_annotations else {
        return Err(Error::Config("no model and no training annotations".into()));
    };
    let set = load_annotations(ann)?;
    let data = labeled_candidates(&set, cfg.features.context_k)?;
    let wordlist = match &cfg.paths.wordlist {
        Some(p) => read_word_list(p)?,
        None => builtin_wordlist().clone(),
    };
    let clf = ProcedureClassifier::train(&data, &cfg.features, &cfg.train, &wordlist, &lexicon(&cfg.paths)?)?;
    if let Some(model) = &cfg.paths.model {
        clf.save(model)?;
    }
    Ok(clf)
}

/// HTML files under the given inputs, with display names relative to each input root.
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<(PathBuf, String)>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_file() {
            let name = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            out.push((input.clone(), name));
            continue;
        }
        if !input.is_dir() {
            return Err(Error::io(input, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        for entry in walkdir::WalkDir::new(input).sort_by_file_name() {
            let entry = entry.map_err(|e| Error::io(input, e.into()))?;
            let path = entry.path();
            let html = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"));
            if entry.file_type().is_file() && html {
                let rel = path.strip_prefix(input).unwrap_or(path);
                out.push((path.to_path_buf(), rel.to_string_lossy().replace('\\', "/")));
            }
        }
    }
    Ok(out)
}

/// File-name-safe stem of a display name or URL.
pub fn flow_stem(name: &str) -> String {
    let stem = name
        .rsplit_once('.')
        .filter(|(s, _)| !s.is_empty())
        .map_or(name, |(s, _)| s);
    let mut out = String::new();
    for c in stem.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let out = out.trim_matches('-').to_string();
    if out.is_empty() {
        "doc".into()
    } else {
        out
    }
}

/// A mined flow document with its id.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedFlow {
    pub id: String,
    pub document: FlowDocument,
    pub decision_points: usize,
    pub empty_blocks: usize,
}

/// Mines flow documents from extracted procedures; ids are `{stem}-p{k}`.
pub fn flows_for_candidates(stem: &str, procedures: &[ProcedureCandidate], cfg: &FlowConfig) -> Result<Vec<MinedFlow>> {
    procedures
        .iter()
        .enumerate()
        .map(|(k, pc)| {
            let p = Procedure::from_candidate(&pc.candidate, &pc.doc_title);
            let mined = mine_procedure(&p, cfg)?;
            Ok(MinedFlow {
                id: format!("{stem}-p{k}"),
                decision_points: mined.decisions.len(),
                empty_blocks: mined.blocks.iter().filter(|b| b.members.is_empty()).count(),
                document: FlowDocument::new(&mined.procedure, &mined.graph),
            })
        })
        .collect()
}

/// Stems for the given names, made distinct by numeric suffixes.
pub fn unique_stems<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut stems: Vec<String> = Vec::new();
    for name in names {
        let base = flow_stem(name);
        let mut stem = base.clone();
        let mut n = 2;
        while stems.contains(&stem) {
            stem = format!("{base}-{n}");
            n += 1;
        }
        stems.push(stem);
    }
    stems
}

/// Writes `{id}.flow.json` files into `out`, creating it if needed.
pub fn write_flows(out: &Path, flows: &[MinedFlow]) -> Result<Vec<FlowEntry>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    flows
        .iter()
        .map(|f| {
            let file = format!("{}{FLOW_SUFFIX}", f.id);
            let path = out.join(&file);
            std::fs::write(&path, f.document.to_json()?).map_err(|e| Error::io(&path, e))?;
            Ok(FlowEntry {
                id: f.id.clone(),
                file,
                title: f.document.title.clone(),
                source: f.document.source.clone(),
            })
        })
        .collect()
}

struct FileOutcome {
    report: FileReport,
    flows: Vec<MinedFlow>,
}

fn process_file(
    path: &Path,
    name: &str,
    stem: &str,
    classifier: &ProcedureClassifier,
    context_k: usize,
    cfg: &PipelineConfig,
) -> Result<FileOutcome> {
    let doc = load_document(path, name)?;
    let search = find_procedures(&doc, classifier, &cfg.search, context_k)?;
    let flows = flows_for_candidates(stem, &search.procedures, &cfg.flow)?;
    Ok(FileOutcome {
        report: FileReport {
            path: name.to_string(),
            lists: doc.list_count(),
            classified: search.classified.len(),
            procedures: search.procedures.len(),
            decision_points: flows.iter().map(|f| f.decision_points).sum(),
            empty_blocks: flows.iter().map(|f| f.empty_blocks).sum(),
            truncated: search.truncated,
        },
        flows,
    })
}

/// Runs ingest, search and flow mining over every input and writes one
/// `{id}.flow.json` per procedure plus `report.json` into `paths.out`.
/// The model is resolved before any input is read.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    let classifier = resolve_classifier(cfg)?;
    let inputs = collect_inputs(&cfg.paths.inputs)?;

    let stems = unique_stems(inputs.iter().map(|(_, name)| name.as_str()));

    let context_k = classifier.config.context_k;
    let outcomes: Vec<Result<FileOutcome>> = inputs
        .par_iter()
        .zip(&stems)
        .map(|((path, name), stem)| {
            process_file(path, name, stem, &classifier, context_k, cfg).map_err(|e| e.in_file(path))
        })
        .collect();

    let mut per_file = Vec::new();
    let mut flows = Vec::new();
    for outcome in outcomes {
        let outcome = outcome?;
        flows.extend(outcome.flows);
        per_file.push(outcome.report);
    }
    let out = &cfg.paths.out;
    let entries = write_flows(out, &flows)?;
    let report = RunReport::from_files(per_file, entries);
    let path = out.join(REPORT_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(report)
}
