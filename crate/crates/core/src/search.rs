//! Breadth-first procedure search over a document tree.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::classifier::{ListClassifier, Prediction};
use crate::error::{Error, Result};
use crate::ingest::{extract_list_candidates, Document, DomNode, ListCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub threshold: f64,
    pub max_nodes: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            threshold: 0.5,
            max_nodes: 50_000,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold must be in [0, 1], got {}", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcedureCandidate {
    #[serde(default)]
    pub doc_title: String,
    pub candidate: ListCandidate,
    pub prediction: Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub procedures: Vec<ProcedureCandidate>,
    /// Node paths of every list that was classified, in classification order.
    pub classified: Vec<Vec<usize>>,
    pub visited: usize,
    pub truncated: bool,
}

/// Classifies list nodes in breadth-first order. A list accepted as a
/// procedure is returned and its subtree is not explored; any other node
/// has its children queued in document order.
pub fn find_procedures(
    doc: &Document,
    classifier: &dyn ListClassifier,
    cfg: &SearchConfig,
    context_k: usize,
) -> Result<SearchResult> {
    cfg.validate()?;
    let mut candidates: HashMap<Vec<usize>, ListCandidate> = extract_list_candidates(doc, context_k)
        .into_iter()
        .map(|c| (c.node_path.clone(), c))
        .collect();
    let mut result = SearchResult {
        procedures: Vec::new(),
        classified: Vec::new(),
        visited: 0,
        truncated: false,
    };
    let mut queue: VecDeque<&DomNode> = VecDeque::from([&doc.dom]);
    while let Some(node) = queue.pop_front() {
        if result.visited >= cfg.max_nodes {
            log::warn!("{}: search stopped after {} nodes", doc.url, cfg.max_nodes);
            result.truncated = true;
            break;
        }
        result.visited += 1;
        if node.is_list() {
            if let Some(cand) = candidates.remove(&node.node_path) {
                let prediction = classifier.classify(&cand)?;
                result.classified.push(node.node_path.clone());
                if prediction.is_procedure && prediction.confidence >= cfg.threshold {
                    result.procedures.push(ProcedureCandidate {
                        doc_title: doc.title.clone(),
                        candidate: cand,
                        prediction,
                    });
                    continue;
                }
            }
        }
        queue.extend(node.children.iter().filter(|c| !c.is_text()));
    }
    Ok(result)
}
