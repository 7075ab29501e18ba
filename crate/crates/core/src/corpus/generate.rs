//! Seeded synthetic support pages with ground-truth annotations.

use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{write_annotations, AnnotationRecord, DecisionAnnotation, MemberAnnotation, ANNOTATION_VERSION};
use crate::error::{Error, Result};
use crate::flow::Branch;
use crate::ingest::{candidate_at, parse_document, scrub_template, DomNode};
use crate::linguistics::similarity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NoiseKind {
    /// Inventories of parts or products.
    Items,
    /// Settings or command options with descriptions.
    Options,
    /// Related-topic link lists.
    Links,
    /// Lists of descriptive statements.
    Descriptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub seed: u64,
    pub n_docs: usize,
    /// Total number of lists across all documents.
    pub n_lists: usize,
    pub procedure_ratio: f64,
    /// Probability that a procedure step carries a decision point.
    pub decision_density: f64,
    pub noise_kinds: Vec<NoiseKind>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: 7,
            n_docs: 50,
            n_lists: 200,
            procedure_ratio: 0.43,
            decision_density: 0.35,
            noise_kinds: vec![
                NoiseKind::Items,
                NoiseKind::Options,
                NoiseKind::Links,
                NoiseKind::Descriptions,
            ],
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("procedure_ratio", self.procedure_ratio),
            ("decision_density", self.decision_density),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if self.n_docs == 0 || self.n_lists == 0 {
            return Err(Error::Config("corpus needs at least one document and one list".into()));
        }
        if self.noise_kinds.is_empty() && self.procedure_ratio < 1.0 {
            return Err(Error::Config("noise_kinds is empty but negatives are requested".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedDoc {
    /// Path relative to the corpus root.
    pub file_name: String,
    pub html: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub spec: CorpusSpec,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedCorpus {
    pub docs: Vec<GeneratedDoc>,
    pub annotations: Vec<AnnotationRecord>,
    pub manifest: CorpusManifest,
}

const COMPONENTS: &[&str] = &[
    "fan module", "power supply", "node canister", "battery", "drive", "system board",
    "enclosure", "cable", "memory module", "adapter", "controller", "expansion canister",
];
const LEDS: &[&str] = &["power", "fault", "status", "activity", "battery", "identify"];
const STATES: &[&str] = &["missing", "failed", "degraded", "offline", "excluded", "unknown"];
const LED_STATES: &[&str] = &["on", "off", "blinking", "flashing"];
const CODES: &[&str] = &["509", "550", "561", "578", "1001", "1044", "1195", "2030"];
const GOALS: &[&str] = &[
    "fix node error {code}",
    "replace the {c}",
    "resolve the {c} fault",
    "restore access to the {c}",
    "remove the {c}",
    "update the {c} firmware",
];
const VERB_OBJECT: &[&str] = &[
    "Replace the {c}",
    "Reseat the {c}",
    "Remove the {c}",
    "Disconnect the {c}",
    "Reconnect the {c}",
    "Inspect the {c} for damage",
    "Restart the {c}",
    "Install the new {c}",
    "Power off the {c}",
    "Clean the {c} contacts",
    "Update the firmware of the {c}",
    "Run the fix procedure for error {code}",
    "Record the error code",
    "Wait {n} seconds",
    "Contact your service representative",
    "Mark the error as fixed",
    "Open the management interface",
    "Press the release latch on the {c}",
    "Verify that the {c} LED is green",
];
const INFO: &[&str] = &[
    "Note: The {c} might take several minutes to start.",
    "Note: Keep the {c} in its antistatic bag until use.",
    "Important: Do not operate the system without the {c} for more than ten minutes.",
    "Tip: The {c} part number is printed on the label.",
    "Information: The event log keeps the last 4096 entries.",
];
const DECLARATIVE: &[&str] = &[
    "The {c} LED turns green.",
    "The system logs event {code}.",
    "This action takes about {n} seconds.",
    "The {c} is hot-swappable.",
];
const DESCRIPTIONS: &[&str] = &[
    "The {c} is located at the rear of the enclosure.",
    "Each enclosure holds two {c} units.",
    "The {c} reports its status through the {led} LED.",
    "Error {code} indicates a {c} fault.",
    "The {c} supports concurrent maintenance.",
    "A failed {c} lowers the redundancy of the system.",
];
const PROC_INTROS: &[&str] = &[
    "Complete the following steps to {goal}:",
    "To {goal}, perform these steps:",
    "Perform the following actions to {goal}.",
    "Use this procedure to {goal}.",
];
const NEG_INTROS: &[&str] = &[
    "The following {c} parts are available:",
    "This section describes the {c}.",
    "Related topics:",
    "The following options are supported:",
    "The {c} has these characteristics:",
];
const ACTION_INTROS: &[&str] = &[
    "Choose one of the following actions:",
    "Use one of the following options to {goal}:",
    "The following actions are available for the {c}:",
];
const ITEMS: &[&str] = &[
    "{C} (part {code})",
    "Spare {c}",
    "{C}, 2 units",
    "Replacement {c} kit",
    "{C} bracket",
    "{C} cable set",
];
const OPTIONS: &[&str] = &[
    "Automatic mode: the {c} is managed by the system",
    "Manual mode: an operator controls the {c}",
    "Verbose: prints details about the {c}",
    "Restart the {c} from the service assistant",
    "Quiet: suppresses {c} messages",
    "Force: skips the {c} checks",
];
const LINKS: &[&str] = &[
    "Replacing a {c}",
    "Troubleshooting {c} errors",
    "Error {code} reference",
    "{C} specifications",
    "Removing the {c}",
    "About the {c}",
];
const BLOCK_SIZES: [(usize, f64); 5] = [(1, 0.30), (2, 0.30), (3, 0.20), (4, 0.12), (5, 0.08)];
const EMPTY_BLOCK_P: f64 = 0.47;
const PROCEDURE_ORDERED_P: f64 = 0.9;
const NEGATIVE_ORDERED_P: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Boundary {
    EndOfStep,
    Note,
    Paragraph,
    Sublist,
    Parallel,
}

#[derive(Debug, Clone)]
struct NegativeList {
    kind: NoiseKind,
    ordered: bool,
    items: Vec<String>,
    context: String,
}

#[derive(Debug, Clone, Default)]
struct PlannedStep {
    paragraphs: Vec<Vec<String>>,
    sublist: Option<usize>,
}

#[derive(Debug, Clone)]
enum PlannedList {
    Procedure {
        ordered: bool,
        context: String,
        steps: Vec<PlannedStep>,
        decisions: Vec<DecisionAnnotation>,
    },
    Negative(NegativeList),
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().collect::<String>() + c.as_str())
        .unwrap_or_default()
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_lowercase().collect::<String>() + c.as_str())
        .unwrap_or_default()
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    spec: &'a CorpusSpec,
}

impl Gen<'_> {
    fn p(&mut self, prob: f64) -> bool {
        self.rng.random::<f64>() < prob
    }

    fn pick<'s>(&mut self, xs: &[&'s str]) -> &'s str {
        xs.choose(&mut self.rng).copied().unwrap_or_default()
    }

    fn fill(&mut self, template: &str) -> String {
        let c = self.pick(COMPONENTS);
        let code = self.pick(CODES);
        let led = self.pick(LEDS);
        let n = [10, 20, 30, 60][self.rng.random_range(0..4)];
        let mut out = template
            .replace("{C}", &capitalize(c))
            .replace("{c}", c)
            .replace("{code}", code)
            .replace("{led}", led)
            .replace("{n}", &n.to_string());
        if out.contains("{goal}") {
            let g = self.pick(GOALS);
            let goal = self.fill(g);
            out = out.replace("{goal}", &goal);
        }
        out
    }

    fn imperative(&mut self) -> String {
        let t = self.pick(VERB_OBJECT);
        self.fill(t)
    }

    fn block_size(&mut self) -> usize {
        let mut u = self.rng.random::<f64>();
        for (size, w) in BLOCK_SIZES {
            if u < w {
                return size;
            }
            u -= w;
        }
        BLOCK_SIZES[BLOCK_SIZES.len() - 1].0
    }

    /// A condition and, when one exists, a parallel alternative to it.
    fn condition(&mut self) -> (String, Option<String>) {
        let c = self.pick(COMPONENTS);
        match self.rng.random_range(0..6) {
            0 | 1 => {
                let mut states = STATES.to_vec();
                states.shuffle(&mut self.rng);
                (
                    format!("the {c} status is {}", states[0]),
                    Some(format!("the {c} status is {}", states[1])),
                )
            }
            2 => {
                let led = self.pick(LEDS);
                let mut states = LED_STATES.to_vec();
                states.shuffle(&mut self.rng);
                (
                    format!("the {led} LED is {}", states[0]),
                    Some(format!("the {led} LED is {}", states[1])),
                )
            }
            3 => (format!("node error {} is still reported", self.pick(CODES)), None),
            4 => (format!("the {c} does not respond"), None),
            _ => (format!("you have replaced the {c}"), None),
        }
    }

    fn dissimilar_condition(&mut self, avoid: &[String]) -> (String, Option<String>) {
        loop {
            let (cond, parallel) = self.condition();
            if avoid.iter().all(|a| similarity(a, &cond) < 0.5) {
                return (cond, parallel);
            }
        }
    }

    /// Sentence form of a conditional; returns the sentence.
    fn conditional_sentence(&mut self, cond: &str) -> String {
        let effect = self.imperative();
        match self.rng.random_range(0..10) {
            0 => format!("{effect} if {cond}."),
            1 | 2 => format!("When {cond}, {}.", lower_first(&effect)),
            _ => format!("If {cond}, {}.", lower_first(&effect)),
        }
    }

    fn member_sentences(&mut self, n: usize) -> (Vec<String>, Vec<Branch>) {
        let mut out = Vec::new();
        let mut branches = Vec::new();
        let else_at = if n >= 2 && self.p(0.3) {
            self.rng.random_range(1..n)
        } else {
            n
        };
        for k in 0..n {
            let imp = self.imperative();
            if k == else_at {
                out.push(format!("Otherwise, {}.", lower_first(&imp)));
            } else {
                out.push(format!("{imp}."));
            }
            branches.push(if k >= else_at { Branch::False } else { Branch::True });
        }
        (out, branches)
    }

    fn negative(&mut self) -> NegativeList {
        let kind = *self.spec.noise_kinds.choose(&mut self.rng).unwrap_or(&NoiseKind::Items);
        let n = self.rng.random_range(2..=6);
        let templates = match kind {
            NoiseKind::Items => ITEMS,
            NoiseKind::Options => OPTIONS,
            NoiseKind::Links => LINKS,
            NoiseKind::Descriptions => DESCRIPTIONS,
        };
        // half of the option lists offer alternative actions in the imperative
        if kind == NoiseKind::Options && self.p(0.5) {
            let items = (0..n).map(|_| self.imperative()).collect();
            let t = if self.p(0.5) { self.pick(PROC_INTROS) } else { self.pick(ACTION_INTROS) };
            let context = self.fill(t);
            return NegativeList {
                kind,
                ordered: self.p(NEGATIVE_ORDERED_P),
                items,
                context,
            };
        }
        let items = (0..n)
            .map(|_| {
                let t = self.pick(templates);
                self.fill(t)
            })
            .collect();
        let context = if self.p(0.6) {
            let t = self.pick(NEG_INTROS);
            self.fill(t)
        } else {
            let t = self.pick(DESCRIPTIONS);
            self.fill(t)
        };
        NegativeList {
            kind,
            ordered: self.p(NEGATIVE_ORDERED_P),
            items,
            context,
        }
    }

    fn boundary(&mut self, has_next_step: bool, can_embed: bool) -> Boundary {
        let u = self.rng.random::<f64>();
        let b = if u < 0.5 {
            Boundary::EndOfStep
        } else if u < 0.65 {
            Boundary::Note
        } else if u < 0.8 {
            Boundary::Paragraph
        } else if u < 0.85 {
            Boundary::Sublist
        } else {
            Boundary::Parallel
        };
        match b {
            Boundary::Parallel if !has_next_step => Boundary::EndOfStep,
            Boundary::Sublist if !can_embed => Boundary::Paragraph,
            b => b,
        }
    }

    /// Plans a procedure; may take negative lists from `embeddable` as sub-lists.
    fn procedure(&mut self, embeddable: &mut Vec<usize>) -> PlannedList {
        let n_steps = if self.p(0.25) {
            self.rng.random_range(2..=3)
        } else {
            self.rng.random_range(3..=8)
        };
        let mut steps: Vec<PlannedStep> = Vec::new();
        let mut decisions: Vec<DecisionAnnotation> = Vec::new();
        // conditions of blocks that run to the end of the previous step
        let mut avoid: Vec<String> = Vec::new();
        let mut s = 0;
        while s < n_steps {
            let mut step = PlannedStep::default();
            let mut para: Vec<String> = Vec::new();
            let mut next_avoid = Vec::new();
            if !self.p(self.spec.decision_density) {
                para.push(format!("{}.", self.imperative()));
                if self.p(0.25) {
                    let t = self.pick(DECLARATIVE);
                    para.push(self.fill(t));
                }
                step.paragraphs.push(para);
                steps.push(step);
                avoid.clear();
                s += 1;
                continue;
            }

            let lead = self.p(0.2);
            if lead {
                para.push(format!("{}.", self.imperative()));
            }
            let (cond, parallel) = if lead {
                self.condition()
            } else {
                self.dissimilar_condition(&avoid)
            };
            let boundary = self.boundary(s + 1 < n_steps && parallel.is_some(), !embeddable.is_empty());
            let total = if boundary == Boundary::Parallel {
                self.block_size().max(1)
            } else if self.p(EMPTY_BLOCK_P) {
                0
            } else {
                self.block_size()
            };
            let own = if boundary == Boundary::Parallel {
                self.rng.random_range(0..total)
            } else {
                total
            };
            let dsent = para.len();
            let sentence = self.conditional_sentence(&cond);
            para.push(sentence);
            let (members, branches) = self.member_sentences(own);
            let first_member = para.len();
            para.extend(members);
            let mut annotated: Vec<MemberAnnotation> = branches
                .iter()
                .enumerate()
                .map(|(k, &branch)| MemberAnnotation {
                    step: s,
                    sentence: first_member + k,
                    branch,
                })
                .collect();
            let mut extra_decision = None;
            match boundary {
                Boundary::EndOfStep => {
                    step.paragraphs.push(para);
                    next_avoid.push(cond.clone());
                }
                Boundary::Note => {
                    let t = self.pick(INFO);
                    para.push(self.fill(t));
                    step.paragraphs.push(para);
                }
                Boundary::Paragraph => {
                    let at = para.len();
                    step.paragraphs.push(para);
                    if self.p(0.3) {
                        let (c2, _) = self.condition();
                        let sent = self.conditional_sentence(&c2);
                        step.paragraphs.push(vec![sent]);
                        extra_decision = Some(DecisionAnnotation {
                            step_index: s,
                            sentence_index: at,
                            condition_text: c2.clone(),
                            effect_text: String::new(),
                            block_members: vec![],
                        });
                        next_avoid.push(c2);
                    } else {
                        step.paragraphs.push(vec![format!("{}.", self.imperative())]);
                    }
                }
                Boundary::Sublist => {
                    step.paragraphs.push(para);
                    let k = embeddable.remove(0);
                    step.sublist = Some(k);
                }
                Boundary::Parallel => {
                    step.paragraphs.push(para);
                }
            }
            let this = DecisionAnnotation {
                step_index: s,
                sentence_index: dsent,
                condition_text: cond.clone(),
                effect_text: String::new(),
                block_members: Vec::new(),
            };
            steps.push(step);

            if boundary == Boundary::Parallel {
                let pcond = parallel.clone().unwrap_or_default();
                let rest = total - own - 1;
                let psent = self.conditional_sentence(&pcond);
                let (pm, _) = self.member_sentences(rest);
                // the parallel step's own members carry no else cue
                let pm: Vec<String> = pm
                    .into_iter()
                    .map(|m| match m.strip_prefix("Otherwise, ") {
                        Some(r) => capitalize(r),
                        None => m,
                    })
                    .collect();
                let mut para2 = vec![psent];
                para2.extend(pm);
                for k in 0..para2.len() {
                    annotated.push(MemberAnnotation {
                        step: s + 1,
                        sentence: k,
                        branch: Branch::False,
                    });
                }
                decisions.push(DecisionAnnotation {
                    block_members: annotated,
                    ..this
                });
                decisions.push(DecisionAnnotation {
                    step_index: s + 1,
                    sentence_index: 0,
                    condition_text: pcond.clone(),
                    effect_text: String::new(),
                    block_members: (1..para2.len())
                        .map(|k| MemberAnnotation {
                            step: s + 1,
                            sentence: k,
                            branch: Branch::True,
                        })
                        .collect(),
                });
                steps.push(PlannedStep {
                    paragraphs: vec![para2],
                    sublist: None,
                });
                avoid = vec![cond, pcond];
                s += 2;
                continue;
            }
            decisions.push(DecisionAnnotation {
                block_members: annotated,
                ..this
            });
            if let Some(d) = extra_decision {
                decisions.push(d);
            }
            avoid = next_avoid;
            s += 1;
        }
        let context = if self.p(0.75) {
            let t = self.pick(PROC_INTROS);
            self.fill(t)
        } else {
            let t = self.pick(DESCRIPTIONS);
            self.fill(t)
        };
        PlannedList::Procedure {
            ordered: self.p(PROCEDURE_ORDERED_P),
            context,
            steps,
            decisions,
        }
    }
}

/// List id, label, planned sentences per step and decisions.
type RenderedList = (String, bool, Vec<Vec<String>>, Vec<DecisionAnnotation>);

struct Rendered {
    html: String,
    lists: Vec<RenderedList>,
}

fn render_negative(out: &mut String, id: &str, neg: &NegativeList) {
    let tag = if neg.ordered { "ol" } else { "ul" };
    out.push_str(&format!("<{tag} id=\"{id}\">"));
    for item in &neg.items {
        if neg.kind == NoiseKind::Links {
            out.push_str(&format!("<li><a href=\"#\">{}</a></li>", escape(item)));
        } else {
            out.push_str(&format!("<li>{}</li>", escape(item)));
        }
    }
    out.push_str(&format!("</{tag}>"));
}

fn render_doc(title: &str, lists: &[PlannedList], negatives: &[NegativeList], list_ids: &[String], embedded: &[Option<usize>]) -> Rendered {
    let mut html = String::new();
    html.push_str(&format!(
        "<!DOCTYPE html>\n<html><head><title>{t}</title><script>var x = 1;</script></head><body>\n\
         <header><nav><ul><li><a href=\"#\">Home</a></li><li><a href=\"#\">Products</a></li><li><a href=\"#\">Support</a></li></ul></nav></header>\n\
         <div class=\"breadcrumb\"><ol><li>Support</li><li>Storage</li></ol></div>\n<article><h1>{t}</h1>\n",
        t = escape(title)
    ));
    let mut rendered_lists = Vec::new();
    for (k, list) in lists.iter().enumerate() {
        if embedded[k].is_some() {
            continue;
        }
        let id = &list_ids[k];
        match list {
            PlannedList::Negative(neg) => {
                html.push_str(&format!("<p>{}</p>\n", escape(&neg.context)));
                render_negative(&mut html, id, neg);
                html.push('\n');
                rendered_lists.push((id.clone(), false, neg.items.iter().map(|i| vec![i.clone()]).collect(), vec![]));
            }
            PlannedList::Procedure {
                ordered,
                context,
                steps,
                decisions,
            } => {
                html.push_str(&format!("<p>{}</p>\n", escape(context)));
                let tag = if *ordered { "ol" } else { "ul" };
                html.push_str(&format!("<{tag} id=\"{id}\">\n"));
                let mut planned = Vec::new();
                for step in steps {
                    let mut sentences: Vec<String> = Vec::new();
                    html.push_str("<li>");
                    if step.paragraphs.len() == 1 && step.sublist.is_none() {
                        html.push_str(&escape(&step.paragraphs[0].join(" ")));
                    } else {
                        for p in &step.paragraphs {
                            html.push_str(&format!("<p>{}</p>", escape(&p.join(" "))));
                        }
                    }
                    for p in &step.paragraphs {
                        sentences.extend(p.iter().cloned());
                    }
                    if let Some(neg_idx) = step.sublist {
                        let neg = &negatives[neg_idx];
                        let sub_id = list_ids
                            .iter()
                            .zip(embedded)
                            .find(|(_, e)| **e == Some(neg_idx))
                            .map(|(i, _)| i.clone())
                            .unwrap_or_default();
                        render_negative(&mut html, &sub_id, neg);
                        sentences.extend(neg.items.iter().cloned());
                        rendered_lists.push((sub_id, false, neg.items.iter().map(|i| vec![i.clone()]).collect(), vec![]));
                    }
                    html.push_str("</li>\n");
                    planned.push(sentences);
                }
                html.push_str(&format!("</{tag}>\n"));
                rendered_lists.push((id.clone(), true, planned, decisions.clone()));
            }
        }
    }
    html.push_str(
        "</article>\n<div class=\"sidebar\"><ul><li>Related products</li><li>Downloads</li></ul></div>\n\
         <footer><p>Copyright notice. Contact us.</p></footer>\n</body></html>\n",
    );
    Rendered {
        html,
        lists: rendered_lists,
    }
}

fn find_id<'a>(node: &'a DomNode, id: &str) -> Option<&'a DomNode> {
    if node.id.as_deref() == Some(id) {
        return Some(node);
    }
    node.children.iter().find_map(|c| find_id(c, id))
}

/// Generates a corpus. Identical specs give byte-identical output.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        spec,
    };
    let positives = (spec.procedure_ratio * spec.n_lists as f64).round() as usize;
    let mut labels: Vec<bool> = (0..spec.n_lists).map(|i| i < positives).collect();
    labels.shuffle(&mut g.rng);

    let mut docs = Vec::new();
    let mut annotations = Vec::new();
    let mut files = Vec::new();
    for d in 0..spec.n_docs {
        let lo = d * spec.n_lists / spec.n_docs;
        let hi = (d + 1) * spec.n_lists / spec.n_docs;
        let doc_labels = &labels[lo..hi];
        // negatives first so procedures can embed some of them as sub-lists
        let negatives: Vec<NegativeList> = doc_labels.iter().filter(|l| !**l).map(|_| g.negative()).collect();
        let mut embeddable: Vec<usize> = (0..negatives.len())
            .filter(|&i| negatives[i].kind == NoiseKind::Options || negatives[i].kind == NoiseKind::Items)
            .collect();
        let mut lists: Vec<PlannedList> = Vec::new();
        let mut neg_of_list: Vec<Option<usize>> = Vec::new();
        let mut next_neg = 0;
        for &label in doc_labels {
            if label {
                lists.push(g.procedure(&mut embeddable));
                neg_of_list.push(None);
            } else {
                lists.push(PlannedList::Negative(negatives[next_neg].clone()));
                neg_of_list.push(Some(next_neg));
                next_neg += 1;
            }
        }
        let used: Vec<usize> = lists
            .iter()
            .flat_map(|l| match l {
                PlannedList::Procedure { steps, .. } => steps.iter().filter_map(|s| s.sublist).collect(),
                PlannedList::Negative(_) => vec![],
            })
            .collect();
        let embedded: Vec<Option<usize>> = neg_of_list
            .iter()
            .map(|n| n.filter(|i| used.contains(i)))
            .collect();
        let list_ids: Vec<String> = (0..lists.len()).map(|k| format!("list-{d}-{k}")).collect();
        let title = {
            let t = g.pick(&["Troubleshooting the {c}", "Node error {code}", "Replacing a {c}", "{C} problems"]);
            g.fill(t)
        };
        let rendered = render_doc(&title, &lists, &negatives, &list_ids, &embedded);
        let file_name = format!("docs/doc-{d:03}.html");

        let parsed = scrub_template(&parse_document(rendered.html.as_bytes(), &file_name)?);
        let mut rendered_lists = rendered.lists;
        // annotations in document order of the list ids
        rendered_lists.sort_by_key(|(id, ..)| rendered.html.find(&format!("id=\"{id}\"")).unwrap_or(usize::MAX));
        for (id, is_procedure, planned, decisions) in rendered_lists {
            let node = find_id(&parsed.dom, &id).ok_or_else(|| {
                Error::Config(format!("generated list {id} vanished during scrubbing"))
            })?;
            let cand = candidate_at(&parsed, &node.node_path, 1)
                .ok_or_else(|| Error::Config(format!("generated list {id} is not a list candidate")))?;
            let got: Vec<Vec<String>> = cand
                .items
                .iter()
                .map(|it| it.sentences.iter().map(|s| s.text.clone()).collect())
                .collect();
            if got != planned {
                return Err(Error::Config(format!("generated list {id} segments differently than planned")));
            }
            annotations.push(AnnotationRecord {
                version: ANNOTATION_VERSION,
                doc_path: file_name.clone(),
                node_path: node.node_path.clone(),
                is_procedure,
                decision_annotations: decisions,
            });
        }
        files.push(file_name.clone());
        docs.push(GeneratedDoc {
            file_name,
            html: rendered.html,
        });
    }
    Ok(GeneratedCorpus {
        docs,
        annotations,
        manifest: CorpusManifest {
            seed: spec.seed,
            spec: spec.clone(),
            files,
        },
    })
}

/// Writes documents, `annotations.jsonl` and `manifest.json` under `dir`.
pub fn write_corpus(corpus: &GeneratedCorpus, dir: &Path) -> Result<()> {
    let docs_dir = dir.join("docs");
    std::fs::create_dir_all(&docs_dir).map_err(|e| Error::io(&docs_dir, e))?;
    for d in &corpus.docs {
        let path = dir.join(&d.file_name);
        std::fs::write(&path, &d.html).map_err(|e| Error::io(&path, e))?;
    }
    let ann = dir.join("annotations.jsonl");
    std::fs::write(&ann, write_annotations(&corpus.annotations)?).map_err(|e| Error::io(&ann, e))?;
    let man = dir.join("manifest.json");
    std::fs::write(&man, serde_json::to_string_pretty(&corpus.manifest)? + "\n").map_err(|e| Error::io(&man, e))?;
    Ok(())
}
