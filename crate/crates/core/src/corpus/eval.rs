use serde::{Deserialize, Serialize};

use super::{AnnotationRecord, AnnotationSet, DecisionAnnotation, DocumentCache};
use crate::classifier::{EvalReport, ListClassifier};
use crate::error::{Error, Result};
use crate::flow::{extract_decision_block, map_instructions, BlockRules, DecisionPoint, Procedure};
use crate::ingest::ListCandidate;
use crate::linguistics::{detect_conditional, detect_negation, ConditionalSplit, Polarity, Trigger};

fn candidate(
    cache: &mut DocumentCache,
    set: &AnnotationSet,
    idx: usize,
    rec: &AnnotationRecord,
    k: usize,
) -> Result<ListCandidate> {
    cache.candidate(set, rec, k)?.ok_or_else(|| Error::DanglingPath {
        record: idx,
        doc: rec.doc_path.clone(),
        path: rec.node_path.clone(),
    })
}

/// Every annotated list with its label, in record order.
pub fn labeled_candidates(set: &AnnotationSet, context_k: usize) -> Result<Vec<(ListCandidate, bool)>> {
    let mut cache = DocumentCache::default();
    set.records
        .iter()
        .enumerate()
        .map(|(idx, rec)| Ok((candidate(&mut cache, set, idx, rec, context_k)?, rec.is_procedure)))
        .collect()
}

/// List-level accuracy of `classifier` against the annotated labels.
pub fn evaluate_identification(
    classifier: &dyn ListClassifier,
    set: &AnnotationSet,
    context_k: usize,
) -> Result<EvalReport> {
    let mut cache = DocumentCache::default();
    let mut pairs = Vec::new();
    for (idx, rec) in set.records.iter().enumerate() {
        let cand = candidate(&mut cache, set, idx, rec, context_k)?;
        pairs.push((rec.is_procedure, classifier.classify(&cand)?.is_procedure));
    }
    Ok(EvalReport::from_pairs(pairs))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockScore {
    pub correct: usize,
    pub total: usize,
    /// Annotated blocks with no members, and how many of those were matched.
    pub empty_total: usize,
    pub empty_correct: usize,
    /// Correct blocks whose branch labels also all match.
    pub branches_correct: usize,
}

impl BlockScore {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// The decision point at the annotated sentence; falls back to the
/// annotated condition text when the detector misses the sentence.
fn aligned_decision(p: &Procedure, d: &DecisionAnnotation) -> DecisionPoint {
    let split = p
        .sentence(d.step_index, d.sentence_index)
        .and_then(detect_conditional)
        .unwrap_or_else(|| ConditionalSplit {
            trigger: Trigger::If,
            trigger_index: 0,
            condition: d.condition_text.clone(),
            effect: d.effect_text.clone(),
            polarity: Polarity::Direct,
            condition_negated: detect_negation(&d.condition_text),
            condition_span: (0, 0),
            effect_span: (0, 0),
        });
    DecisionPoint {
        step_index: d.step_index,
        sentence_index: d.sentence_index,
        split,
    }
}

/// Exact-match block accuracy over every annotated decision point.
pub fn score_blocks(set: &AnnotationSet, rules: &BlockRules, sim_threshold: f64) -> Result<BlockScore> {
    let mut cache = DocumentCache::default();
    let mut score = BlockScore::default();
    for (idx, rec) in set.records.iter().enumerate() {
        if rec.decision_annotations.is_empty() {
            continue;
        }
        let cand = candidate(&mut cache, set, idx, rec, 1)?;
        let p = Procedure::from_candidate(&cand, "");
        for d in &rec.decision_annotations {
            let block = map_instructions(&p, extract_decision_block(&p, &aligned_decision(&p, d), rules), sim_threshold);
            let got: Vec<(usize, usize)> = block.members.iter().map(|m| (m.step, m.sentence)).collect();
            let want: Vec<(usize, usize)> = d.block_members.iter().map(|m| (m.step, m.sentence)).collect();
            score.total += 1;
            if want.is_empty() {
                score.empty_total += 1;
            }
            if got == want {
                score.correct += 1;
                if want.is_empty() {
                    score.empty_correct += 1;
                }
                if block.members.iter().zip(&d.block_members).all(|(g, w)| g.branch == w.branch) {
                    score.branches_correct += 1;
                }
            }
        }
    }
    Ok(score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub rules: BlockRules,
    pub score: BlockScore,
    pub accuracy: f64,
}

/// Row names of the block-rule ablation, in cumulative order.
pub const ABLATION_ROWS: [&str; 4] = [
    "Baseline",
    "+Removed note and information",
    "+Next step conditional overlap",
    "+Stop at sub-list item or paragraph",
];

/// Scores the rest-of-step baseline and then each rule added cumulatively.
pub fn block_ablation(set: &AnnotationSet, overlap_threshold: f64, sim_threshold: f64) -> Result<Vec<AblationRow>> {
    let base = BlockRules {
        overlap_threshold,
        ..BlockRules::baseline()
    };
    let steps = [
        base,
        BlockRules { note: true, ..base },
        BlockRules {
            note: true,
            overlap: true,
            ..base
        },
        BlockRules {
            note: true,
            overlap: true,
            sub_structure: true,
            ..base
        },
    ];
    steps
        .iter()
        .zip(ABLATION_ROWS)
        .map(|(rules, name)| {
            let score = score_blocks(set, rules, sim_threshold)?;
            Ok(AblationRow {
                name: name.to_string(),
                rules: *rules,
                accuracy: score.accuracy(),
                score,
            })
        })
        .collect()
}
