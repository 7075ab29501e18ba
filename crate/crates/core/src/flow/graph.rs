use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{generate_question, Branch, DecisionBlock, Procedure};
use crate::error::{Error, Result};

pub const FLOW_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub url: String,
    pub node_path: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    Instruction,
    Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowNode {
    pub id: String,
    pub kind: NodeKind,
    /// The full source sentence.
    pub text: String,
    pub step: usize,
    pub sentence: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yes_branch: Option<Branch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeLabel {
    Next,
    True,
    False,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowGraph {
    pub entry: Option<String>,
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<Edge>,
}

impl FlowGraph {
    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn outgoing(&self, id: &str) -> impl Iterator<Item = &Edge> {
        let id = id.to_string();
        self.edges.iter().filter(move |e| e.from == id)
    }

    /// Target of the edge leaving `id` with `label`.
    pub fn follow(&self, id: &str, label: EdgeLabel) -> Option<&FlowNode> {
        self.outgoing(id).find(|e| e.label == label).and_then(|e| self.node(&e.to))
    }
}

/// The exported flow-graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDocument {
    pub version: u32,
    pub source: SourceRef,
    #[serde(default)]
    pub title: String,
    pub entry: Option<String>,
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<Edge>,
}

impl FlowDocument {
    pub fn new(p: &Procedure, graph: &FlowGraph) -> Self {
        FlowDocument {
            version: FLOW_VERSION,
            source: p.source.clone(),
            title: p.title.clone(),
            entry: graph.entry.clone(),
            nodes: graph.nodes.clone(),
            edges: graph.edges.clone(),
        }
    }

    pub fn graph(&self) -> FlowGraph {
        FlowGraph {
            entry: self.entry.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FlowDocument = serde_json::from_str(text)?;
        if doc.version != FLOW_VERSION {
            return Err(Error::Config(format!("unsupported flow version {}", doc.version)));
        }
        Ok(doc)
    }
}

fn node_id(pos: usize) -> String {
    format!("n{pos}")
}

struct Builder {
    /// Block members by decision position, as positions with their branch.
    blocks: HashMap<usize, Vec<(usize, Branch)>>,
    edges: Vec<Edge>,
}

impl Builder {
    fn link(&mut self, from: usize, to: Option<usize>, label: EdgeLabel) {
        if let Some(to) = to {
            self.edges.push(Edge {
                from: node_id(from),
                to: node_id(to),
                label,
            });
        }
    }

    /// Wires a contiguous run of positions ending in `exit`; returns its entry,
    /// which is `exit` itself for an empty run.
    fn region(&mut self, positions: &[usize], exit: Option<usize>) -> Option<usize> {
        let Some((&first, rest)) = positions.split_first() else {
            return exit;
        };
        let Some(members) = self.blocks.get(&first).cloned() else {
            let next = self.region(rest, exit);
            self.link(first, next, EdgeLabel::Next);
            return Some(first);
        };
        // a nested block never extends past its enclosing region
        let taken = members
            .iter()
            .zip(rest)
            .take_while(|((m, _), &r)| *m == r)
            .count();
        let members = &members[..taken];
        let join = self.region(&rest[taken..], exit);
        let split = members.iter().position(|m| m.1 == Branch::False).unwrap_or(taken);
        let truthy: Vec<usize> = members[..split].iter().map(|m| m.0).collect();
        let falsy: Vec<usize> = members[split..].iter().map(|m| m.0).collect();
        let t = self.region(&truthy, join);
        let f = self.region(&falsy, join);
        self.link(first, t, EdgeLabel::True);
        self.link(first, f, EdgeLabel::False);
        Some(first)
    }
}

fn position_map(p: &Procedure) -> HashMap<(usize, usize), usize> {
    p.addresses().into_iter().enumerate().map(|(i, a)| (a, i)).collect()
}

fn validate_blocks(
    blocks: &[DecisionBlock],
    pos: &HashMap<(usize, usize), usize>,
) -> Result<HashMap<usize, Vec<(usize, Branch)>>> {
    let mut out = HashMap::new();
    for b in blocks {
        let d = (b.decision.step_index, b.decision.sentence_index);
        let dpos = *pos.get(&d).ok_or(Error::InconsistentBlocks { step: d.0, sentence: d.1 })?;
        let mut members = Vec::new();
        for (k, m) in b.members.iter().enumerate() {
            let mp = *pos.get(&(m.step, m.sentence)).ok_or(Error::InconsistentBlocks {
                step: m.step,
                sentence: m.sentence,
            })?;
            // members must follow the decision contiguously
            if mp != dpos + 1 + k {
                return Err(Error::InconsistentBlocks {
                    step: m.step,
                    sentence: m.sentence,
                });
            }
            members.push((mp, m.branch));
        }
        if out.insert(dpos, members).is_some() {
            return Err(Error::InconsistentBlocks { step: d.0, sentence: d.1 });
        }
    }
    Ok(out)
}

/// Builds the flow graph of a procedure from its mapped decision blocks.
///
/// Sentences outside blocks are chained by NEXT edges. A decision's TRUE
/// edge enters its TRUE members, its FALSE edge its FALSE members, and both
/// rejoin at the first sentence after the block. Blocks must start right
/// after their decision and be contiguous; a block whose decision sits
/// inside another block is clipped to the enclosing branch.
pub fn build_flow_graph(p: &Procedure, blocks: &[DecisionBlock]) -> Result<FlowGraph> {
    let pos = position_map(p);
    let member_map = validate_blocks(blocks, &pos)?;
    let addresses = p.addresses();
    let decisions: HashMap<usize, &DecisionBlock> = blocks
        .iter()
        .map(|b| (pos[&(b.decision.step_index, b.decision.sentence_index)], b))
        .collect();

    let nodes: Vec<FlowNode> = addresses
        .iter()
        .enumerate()
        .map(|(i, &(step, sentence))| {
            let text = p.steps[step].sentences[sentence].text.clone();
            match decisions.get(&i) {
                Some(b) => {
                    let q = generate_question(&b.decision);
                    FlowNode {
                        id: node_id(i),
                        kind: NodeKind::Decision,
                        text,
                        step,
                        sentence,
                        condition: Some(b.decision.split.condition.clone()),
                        effect: Some(b.decision.split.effect.clone()),
                        question: Some(q.text),
                        yes_branch: Some(q.yes_branch),
                    }
                }
                None => FlowNode {
                    id: node_id(i),
                    kind: NodeKind::Instruction,
                    text,
                    step,
                    sentence,
                    condition: None,
                    effect: None,
                    question: None,
                    yes_branch: None,
                },
            }
        })
        .collect();

    let mut builder = Builder {
        blocks: member_map,
        edges: Vec::new(),
    };
    let all: Vec<usize> = (0..addresses.len()).collect();
    let entry = builder.region(&all, None);
    let mut edges = builder.edges;
    edges.sort_by(|a, b| {
        let key = |e: &Edge| (e.from[1..].parse::<usize>().unwrap_or(0), e.label as u8);
        key(a).cmp(&key(b))
    });
    Ok(FlowGraph {
        entry: entry.map(node_id),
        nodes,
        edges,
    })
}
