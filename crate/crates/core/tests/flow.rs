mod common;

use std::collections::{HashMap, HashSet, VecDeque};

use proptest::prelude::*;
use procmine::corpus::{load_annotations, DocumentCache};
use procmine::flow::{
    extract_decision_block, extract_decision_points, generate_question, mine_procedure, BlockRules, Branch,
    EdgeLabel, FlowConfig, FlowDocument, FlowGraph, NodeKind, Procedure, SourceRef, Step,
};
use procmine::ingest::segment_sentences;

use common::{corpus_on_disk, fixture, spec};

/// Steps given as paragraphs of raw text.
fn procedure(steps: &[Vec<String>]) -> Procedure {
    Procedure {
        source: SourceRef { url: "t".into(), node_path: vec![0] },
        title: "t".into(),
        steps: steps
            .iter()
            .enumerate()
            .map(|(index, paras)| {
                let mut sentences = Vec::new();
                let mut paragraph_breaks = Vec::new();
                for p in paras {
                    if !sentences.is_empty() {
                        paragraph_breaks.push(sentences.len());
                    }
                    sentences.extend(segment_sentences(p));
                }
                Step { index, sentences, sublist_paths: vec![], paragraph_breaks }
            })
            .collect(),
        context: vec![],
    }
}

fn simple(steps: &[&str]) -> Procedure {
    procedure(&steps.iter().map(|s| vec![s.to_string()]).collect::<Vec<_>>())
}

/// Structural checks every mined graph must satisfy.
fn assert_well_formed(p: &Procedure, g: &FlowGraph) {
    let addresses = p.addresses();
    assert_eq!(g.nodes.len(), addresses.len(), "one node per sentence");
    let seen: HashSet<(usize, usize)> = g.nodes.iter().map(|n| (n.step, n.sentence)).collect();
    assert_eq!(seen, addresses.iter().copied().collect::<HashSet<_>>());
    for n in &g.nodes {
        assert_eq!(n.text, p.steps[n.step].sentences[n.sentence].text);
    }

    let ids: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    assert_eq!(ids.len(), g.nodes.len(), "unique ids");
    for n in &g.nodes {
        let out: Vec<EdgeLabel> = g.outgoing(&n.id).map(|e| e.label).collect();
        let count = |l| out.iter().filter(|&&x| x == l).count();
        match n.kind {
            NodeKind::Decision => {
                assert_eq!(count(EdgeLabel::Next), 0);
                assert!(count(EdgeLabel::True) <= 1 && count(EdgeLabel::False) <= 1);
                assert!(n.question.is_some() && n.yes_branch.is_some());
            }
            NodeKind::Instruction => {
                assert_eq!(out, vec![EdgeLabel::Next; out.len()]);
                assert!(out.len() <= 1);
            }
        }
    }
    for e in &g.edges {
        assert!(ids.contains_key(e.from.as_str()) && ids.contains_key(e.to.as_str()));
        // edges only point forward in document order, so the graph is acyclic
        assert!(ids[e.from.as_str()] < ids[e.to.as_str()], "{e:?}");
    }

    if let Some(entry) = &g.entry {
        assert_eq!(ids[entry.as_str()], 0);
        let mut reached = HashSet::from([entry.as_str()]);
        let mut queue = VecDeque::from([entry.as_str()]);
        while let Some(id) = queue.pop_front() {
            for e in g.outgoing(id) {
                if reached.insert(e.to.as_str()) {
                    queue.push_back(e.to.as_str());
                }
            }
        }
        assert_eq!(reached.len(), g.nodes.len(), "every node reachable from entry");
    } else {
        assert!(g.nodes.is_empty());
    }
}

#[test]
fn three_plain_steps_form_a_chain() {
    let p = simple(&["Open the cover.", "Remove the fan.", "Close the cover."]);
    let g = mine_procedure(&p, &FlowConfig::default()).unwrap().graph;
    assert_well_formed(&p, &g);
    let labels: Vec<EdgeLabel> = g.edges.iter().map(|e| e.label).collect();
    assert_eq!(labels, vec![EdgeLabel::Next; 2]);
}

#[test]
fn nested_conditional_sits_on_the_true_branch() {
    let p = simple(&[
        "If the fan is running, check the airflow. If the vents are blocked, clear the vents. Record the fan speed.",
        "Close the cover.",
    ]);
    let g = mine_procedure(&p, &FlowConfig::default()).unwrap().graph;
    assert_well_formed(&p, &g);
    let outer = &g.nodes[0];
    let inner = g.follow(&outer.id, EdgeLabel::True).unwrap();
    assert_eq!(inner.kind, NodeKind::Decision);
    assert!(inner.text.starts_with("If the vents are blocked"));
    let into_inner: Vec<_> = g.edges.iter().filter(|e| e.to == inner.id).collect();
    assert_eq!(into_inner.len(), 1);
    assert_eq!(into_inner[0].label, EdgeLabel::True);
    let join = g.follow(&outer.id, EdgeLabel::False).unwrap();
    assert_eq!(join.text, "Close the cover.");
    assert_eq!(g.follow(&inner.id, EdgeLabel::False).unwrap().id, join.id);
    assert_eq!(g.follow(&inner.id, EdgeLabel::True).unwrap().text, "Record the fan speed.");
}

#[test]
fn parallel_conditional_chains_on_the_false_branch() {
    let p = simple(&[
        "If the slot status is missing, reseat the drive.",
        "If the slot status is failed, replace the drive.",
        "Close the cover.",
    ]);
    let mined = mine_procedure(&p, &FlowConfig::default()).unwrap();
    assert_eq!(mined.blocks[0].absorbed_steps, vec![1]);
    let g = mined.graph;
    assert_well_formed(&p, &g);
    let second = g.follow("n0", EdgeLabel::False).unwrap();
    assert_eq!(second.kind, NodeKind::Decision);
    assert_eq!(g.follow("n0", EdgeLabel::True).unwrap().text, "Close the cover.");
}

#[test]
fn fixture_procedures_yield_well_formed_graphs() {
    let set = load_annotations(&fixture("blocks/annotations.jsonl")).unwrap();
    let mut cache = DocumentCache::default();
    for rec in &set.records {
        let cand = cache.candidate(&set, rec, 1).unwrap().unwrap();
        let p = Procedure::from_candidate(&cand, "");
        let mined = mine_procedure(&p, &FlowConfig::default()).unwrap();
        assert_well_formed(&p, &mined.graph);
    }
}

#[test]
fn generated_procedures_yield_well_formed_graphs() {
    let (_dir, set) = corpus_on_disk(&spec(5, 20, 80));
    let mut cache = DocumentCache::default();
    let mut checked = 0;
    for rec in set.records.iter().filter(|r| r.is_procedure) {
        let cand = cache.candidate(&set, rec, 1).unwrap().unwrap();
        let p = Procedure::from_candidate(&cand, "");
        for rules in [BlockRules::baseline(), BlockRules::default()] {
            let cfg = FlowConfig { rules, ..FlowConfig::default() };
            assert_well_formed(&p, &mine_procedure(&p, &cfg).unwrap().graph);
        }
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn flow_document_round_trips() {
    let p = simple(&["If the LED is off, reseat the module. Otherwise, replace it.", "Close the cover."]);
    let g = mine_procedure(&p, &FlowConfig::default()).unwrap().graph;
    let doc = FlowDocument::new(&p, &g);
    let text = doc.to_json().unwrap();
    assert_eq!(FlowDocument::from_json(&text).unwrap(), doc);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["version", "source", "entry", "nodes", "edges"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["nodes"][0]["kind"], "DECISION");
    assert_eq!(v["edges"][0]["label"], "TRUE");
    let bumped = text.replacen("\"version\": 1", "\"version\": 99", 1);
    assert!(FlowDocument::from_json(&bumped).is_err());
}

#[test]
fn question_examples() {
    let cases = [
        (
            "If you already have the IBM Digital Analytics subgroup, delete everything from the subgroup.",
            "Do you have the IBM Digital Analytics subgroup already?",
            Branch::True,
        ),
        (
            "If the LEDs do not show a fault on the power supplies or batteries, power off both power supplies.",
            "Do the LEDs show a fault on the power supplies or batteries?",
            Branch::False,
        ),
        (
            "Unless both nodes in the I/O group are online, fix the problem that is causing the node to be offline first.",
            "Are both nodes in the I/O group online?",
            Branch::False,
        ),
    ];
    for (sentence, question, yes) in cases {
        let p = simple(&[sentence]);
        let d = &extract_decision_points(&p)[0];
        let q = generate_question(d);
        assert_eq!(q.text, question);
        assert_eq!(q.yes_branch, yes);
        assert_eq!(q.no_branch, yes.other());
    }
}

#[test]
fn question_fallback_keeps_the_condition() {
    let p = simple(&["If both node canisters continue to report this error, replace the enclosure chassis."]);
    let q = generate_question(&extract_decision_points(&p)[0]);
    assert_eq!(q.text, "Is the following true: both node canisters continue to report this error?");
    assert_eq!(q.yes_branch, Branch::True);
}

const POOL: &[&str] = &[
    "Open the cover.",
    "Remove the fan module.",
    "Wait 30 seconds.",
    "If the LED is amber, replace the battery.",
    "If the LED is green, close the cover.",
    "If the node is offline, restart the node.",
    "When the rebuild completes, check the array.",
    "Otherwise, contact support.",
    "Note: the drive is hot.",
    "Unless the switch is on, press the button.",
    "The enclosure has two fans.",
];

fn arb_procedure() -> impl Strategy<Value = Vec<Vec<String>>> {
    let sentence = prop::sample::select(POOL).prop_map(str::to_string);
    let paragraph = prop::collection::vec(sentence, 1..4).prop_map(|s| s.join(" "));
    prop::collection::vec(prop::collection::vec(paragraph, 1..3), 1..6)
}

proptest! {
    #[test]
    fn mined_graphs_are_well_formed(steps in arb_procedure(), note: bool, sub: bool, overlap: bool) {
        let p = procedure(&steps);
        let cfg = FlowConfig {
            rules: BlockRules { note, sub_structure: sub, overlap, ..BlockRules::default() },
            ..FlowConfig::default()
        };
        let mined = mine_procedure(&p, &cfg).unwrap();
        assert_well_formed(&p, &mined.graph);
        let order = p.addresses();
        for b in &mined.blocks {
            let d = order.iter().position(|&a| a == (b.decision.step_index, b.decision.sentence_index)).unwrap();
            for (k, m) in b.members.iter().enumerate() {
                prop_assert_eq!(order[d + 1 + k], (m.step, m.sentence));
            }
            let first_false = b.members.iter().position(|m| m.branch == Branch::False).unwrap_or(b.members.len());
            prop_assert!(b.members[first_false..].iter().all(|m| m.branch == Branch::False));
        }
    }

    #[test]
    fn baseline_block_is_rest_of_step(steps in arb_procedure()) {
        let p = procedure(&steps);
        for d in extract_decision_points(&p) {
            let b = extract_decision_block(&p, &d, &BlockRules::baseline());
            let got: Vec<(usize, usize)> = b.members.iter().map(|m| (m.step, m.sentence)).collect();
            let want: Vec<(usize, usize)> = (d.sentence_index + 1..p.steps[d.step_index].sentences.len())
                .map(|j| (d.step_index, j))
                .collect();
            prop_assert_eq!(got, want);
            prop_assert!(b.absorbed_steps.is_empty());
        }
    }
}
