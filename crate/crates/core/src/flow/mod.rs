//! Decision points, decision blocks, branch mapping and flow graphs for a
//! single procedure.

mod graph;
mod question;

use serde::{Deserialize, Serialize};

use crate::ingest::{tokenize, ListCandidate, Sentence};
use crate::linguistics::{detect_conditional, similarity, ConditionalSplit};

pub use graph::{
    build_flow_graph, Edge, EdgeLabel, FlowDocument, FlowGraph, FlowNode, NodeKind, SourceRef,
    FLOW_VERSION,
};
pub use question::{generate_question, QuestionSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub index: usize,
    pub sentences: Vec<Sentence>,
    pub sublist_paths: Vec<Vec<usize>>,
    pub paragraph_breaks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Procedure {
    pub source: SourceRef,
    #[serde(default)]
    pub title: String,
    pub steps: Vec<Step>,
    pub context: Vec<Sentence>,
}

impl Procedure {
    pub fn from_candidate(cand: &ListCandidate, title: &str) -> Self {
        Procedure {
            source: SourceRef {
                url: cand.doc_url.clone(),
                node_path: cand.node_path.clone(),
            },
            title: title.to_string(),
            steps: cand
                .items
                .iter()
                .enumerate()
                .map(|(index, item)| Step {
                    index,
                    sentences: item.sentences.clone(),
                    sublist_paths: item.sublist_paths.clone(),
                    paragraph_breaks: item.paragraph_breaks.clone(),
                })
                .collect(),
            context: cand.context.clone(),
        }
    }

    pub fn sentence(&self, step: usize, sentence: usize) -> Option<&Sentence> {
        self.steps.get(step)?.sentences.get(sentence)
    }

    /// `(step, sentence)` addresses in document order.
    pub fn addresses(&self) -> Vec<(usize, usize)> {
        self.steps
            .iter()
            .flat_map(|s| (0..s.sentences.len()).map(move |j| (s.index, j)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionPoint {
    pub step_index: usize,
    pub sentence_index: usize,
    pub split: ConditionalSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    True,
    False,
}

impl Branch {
    pub fn other(self) -> Branch {
        match self {
            Branch::True => Branch::False,
            Branch::False => Branch::True,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMember {
    pub step: usize,
    pub sentence: usize,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionBlock {
    pub decision: DecisionPoint,
    pub members: Vec<BlockMember>,
    pub absorbed_steps: Vec<usize>,
}

/// Switches for the block-boundary rules applied on top of the
/// rest-of-step baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockRules {
    /// Stop before information sentences ("Note", "Important", ...).
    pub note: bool,
    /// Stop at the paragraph or sub-list item boundary.
    pub sub_structure: bool,
    /// Absorb following steps that open with a similar conditional.
    pub overlap: bool,
    pub overlap_threshold: f64,
}

impl Default for BlockRules {
    fn default() -> Self {
        BlockRules {
            note: true,
            sub_structure: true,
            overlap: true,
            overlap_threshold: 0.7,
        }
    }
}

impl BlockRules {
    pub fn baseline() -> Self {
        BlockRules {
            note: false,
            sub_structure: false,
            overlap: false,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub rules: BlockRules,
    /// Similarity at or above which an in-block conditional is parallel.
    pub sim_threshold: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            rules: BlockRules::default(),
            sim_threshold: 0.7,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> crate::Result<()> {
        for (name, v) in [
            ("sim_threshold", self.sim_threshold),
            ("overlap_threshold", self.rules.overlap_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(crate::Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

const INFO_CUES: &[&str] = &["note", "information", "important", "tip"];
const ELSE_CUES: &[&str] = &["else", "otherwise"];
const BARE_NEGATIONS: &[&str] = &["not", "no", "so", "none"];

/// Sentence opens with an information cue word.
pub fn is_information(s: &Sentence) -> bool {
    s.tokens.first().is_some_and(|t| INFO_CUES.contains(&t.as_str()))
}

/// Sentence opens with "else"/"otherwise", has one after a clause-initial
/// comma or semicolon, or is an elliptical "If not, ...".
pub fn is_else_cue(s: &Sentence) -> bool {
    if s.tokens.first().is_some_and(|t| ELSE_CUES.contains(&t.as_str())) {
        return true;
    }
    for cue in ELSE_CUES {
        for sep in [", ", "; "] {
            let lower = s.text.to_lowercase();
            if lower.contains(&format!("{sep}{cue} ")) || lower.contains(&format!("{sep}{cue},")) {
                return true;
            }
        }
    }
    detect_conditional(s).is_some_and(|c| {
        let toks = tokenize(&c.condition);
        !toks.is_empty() && toks.iter().all(|t| BARE_NEGATIONS.contains(&t.as_str()))
    })
}

pub fn extract_decision_points(p: &Procedure) -> Vec<DecisionPoint> {
    let mut out = Vec::new();
    for step in &p.steps {
        for (j, s) in step.sentences.iter().enumerate() {
            if let Some(split) = detect_conditional(s) {
                out.push(DecisionPoint {
                    step_index: step.index,
                    sentence_index: j,
                    split,
                });
            }
        }
    }
    out
}

/// Members of the block opened by `d`, all labeled TRUE. Use
/// [`map_instructions`] to assign branches.
pub fn extract_decision_block(p: &Procedure, d: &DecisionPoint, rules: &BlockRules) -> DecisionBlock {
    let mut members = Vec::new();
    let mut absorbed = Vec::new();
    let step = &p.steps[d.step_index];
    let mut exhausted = true;
    for j in d.sentence_index + 1..step.sentences.len() {
        if rules.note && is_information(&step.sentences[j]) {
            exhausted = false;
            break;
        }
        if rules.sub_structure && step.paragraph_breaks.contains(&j) {
            exhausted = false;
            break;
        }
        members.push(BlockMember {
            step: d.step_index,
            sentence: j,
            branch: Branch::True,
        });
    }
    if rules.overlap && exhausted {
        for next in &p.steps[d.step_index + 1..] {
            let Some(first) = next.sentences.first() else {
                break;
            };
            let similar = detect_conditional(first).is_some_and(|c| {
                similarity(&c.condition, &d.split.condition) >= rules.overlap_threshold
            });
            if !similar {
                break;
            }
            absorbed.push(next.index);
            members.extend((0..next.sentences.len()).map(|j| BlockMember {
                step: next.index,
                sentence: j,
                branch: Branch::True,
            }));
        }
    }
    DecisionBlock {
        decision: d.clone(),
        members,
        absorbed_steps: absorbed,
    }
}

/// Labels members TRUE until an else cue or a parallel conditional
/// (condition similarity ≥ `sim_threshold`), FALSE from there on.
pub fn map_instructions(p: &Procedure, mut block: DecisionBlock, sim_threshold: f64) -> DecisionBlock {
    let mut branch = Branch::True;
    for m in &mut block.members {
        if branch == Branch::True {
            if let Some(s) = p.sentence(m.step, m.sentence) {
                if is_else_cue(s) {
                    branch = Branch::False;
                } else if let Some(c) = detect_conditional(s) {
                    if similarity(&c.condition, &block.decision.split.condition) >= sim_threshold {
                        branch = Branch::False;
                    }
                }
            }
        }
        m.branch = branch;
    }
    block
}

/// Everything mined from one procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedProcedure {
    pub procedure: Procedure,
    pub decisions: Vec<DecisionPoint>,
    pub blocks: Vec<DecisionBlock>,
    pub graph: FlowGraph,
}

pub fn mine_procedure(p: &Procedure, cfg: &FlowConfig) -> crate::Result<MinedProcedure> {
    let decisions = extract_decision_points(p);
    let blocks: Vec<DecisionBlock> = decisions
        .iter()
        .map(|d| map_instructions(p, extract_decision_block(p, d, &cfg.rules), cfg.sim_threshold))
        .collect();
    let graph = build_flow_graph(p, &blocks)?;
    Ok(MinedProcedure {
        procedure: p.clone(),
        decisions,
        blocks,
        graph,
    })
}
