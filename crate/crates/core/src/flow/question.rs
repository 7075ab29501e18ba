use serde::{Deserialize, Serialize};

use super::{Branch, DecisionPoint};
use crate::ingest::tokenize;
use crate::linguistics::{detect_negation, Polarity};

/// A yes/no question for a decision node and the branch each answer selects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub text: String,
    pub yes_branch: Branch,
    pub no_branch: Branch,
}

/// Verbs that can be fronted to form a question, with contracted negatives.
const FRONTABLE: &[(&str, &str, bool)] = &[
    ("is", "is", false),
    ("are", "are", false),
    ("was", "was", false),
    ("were", "were", false),
    ("has", "has", false),
    ("have", "have", false),
    ("had", "had", false),
    ("can", "can", false),
    ("does", "does", false),
    ("do", "do", false),
    ("did", "did", false),
    ("isn't", "is", true),
    ("aren't", "are", true),
    ("wasn't", "was", true),
    ("weren't", "were", true),
    ("hasn't", "has", true),
    ("haven't", "have", true),
    ("hadn't", "had", true),
    ("can't", "can", true),
    ("cannot", "can", true),
    ("doesn't", "does", true),
    ("don't", "do", true),
    ("didn't", "did", true),
];

const REMOVABLE_NEGATIONS: &[&str] = &["not", "never"];
const MOVABLE_ADVERBS: &[&str] = &["already", "still", "also", "currently", "now", "really"];
const IRREGULAR_PARTICIPLES: &[&str] = &[
    "been", "done", "seen", "made", "got", "gotten", "run", "set", "put", "found", "lost",
    "written", "taken", "given", "known", "shown", "sent", "built", "read", "begun", "chosen",
    "held", "left", "kept", "brought", "bought", "won", "gone",
];
const SUBJECT_LIMIT: usize = 8;

/// Word spans of `text` (byte offsets).
fn words(text: &str) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s, i, text[s..i].to_string()));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, text.len(), text[s..].to_string()));
    }
    out
}

fn bare(word: &str) -> String {
    tokenize(word).join(" ")
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

fn is_participle(w: &str) -> bool {
    w.ends_with("ed") || IRREGULAR_PARTICIPLES.contains(&w)
}

/// Subject + fronted verb + remainder, or `None` when the condition has no
/// frontable verb near its start. The flag reports a removed negation.
fn invert(condition: &str) -> Option<(String, bool)> {
    let ws = words(condition);
    let lowered: Vec<String> = ws.iter().map(|w| bare(&w.2)).collect();
    let v = (1..ws.len().min(SUBJECT_LIMIT)).find(|&i| FRONTABLE.iter().any(|f| f.0 == lowered[i]))?;
    let &(_, base, contracted) = FRONTABLE.iter().find(|f| f.0 == lowered[v])?;

    let mut subject: Vec<&str> = Vec::new();
    let mut trailing: Vec<&str> = Vec::new();
    for i in 0..v {
        if MOVABLE_ADVERBS.contains(&lowered[i].as_str()) {
            trailing.push(&ws[i].2);
        } else {
            subject.push(&ws[i].2);
        }
    }
    if subject.is_empty() {
        return None;
    }
    let mut removed = contracted;
    let mut rest: Vec<&str> = Vec::new();
    for i in v + 1..ws.len() {
        if REMOVABLE_NEGATIONS.contains(&lowered[i].as_str()) {
            removed = true;
        } else {
            rest.push(&ws[i].2);
        }
    }

    // "have" as a main verb takes do-support: "you have X" -> "Do you have X"
    let main_have = matches!(base, "have" | "has" | "had")
        && !rest.first().is_some_and(|w| is_participle(&bare(w)));
    let mut parts: Vec<String> = Vec::new();
    if main_have {
        let aux = match base {
            "has" => "Does",
            "had" => "Did",
            _ => "Do",
        };
        parts.push(aux.to_string());
        parts.extend(subject.iter().map(|s| s.to_string()));
        parts.push("have".to_string());
    } else {
        parts.push(capitalize(base));
        parts.extend(subject.iter().map(|s| s.to_string()));
    }
    parts.extend(rest.iter().map(|s| s.to_string()));
    parts.extend(trailing.iter().map(|s| s.to_string()));
    let mut text = parts.join(" ");
    while text.ends_with(['.', ',', ';', ':', '!', '?']) {
        text.pop();
    }
    Some((text + "?", removed))
}

/// Builds a yes/no question from a decision's condition.
///
/// The condition is inverted around its first auxiliary or copula when one
/// follows the subject, dropping `not`/`never`; otherwise the condition is
/// quoted in a fixed template. "Yes" leads to the branch on which the
/// effect applies exactly when the answer makes the written condition (with
/// its polarity) hold.
pub fn generate_question(d: &DecisionPoint) -> QuestionSpec {
    let cond = d.split.condition.trim();
    let inverted = d.split.polarity == Polarity::Inverted;
    let (text, negation_removed) = match invert(cond) {
        Some((q, removed)) if !detect_negation(&q) => (q, removed),
        _ => {
            let mut c = cond.to_string();
            while c.ends_with(['.', ',', ';', ':', '!', '?']) {
                c.pop();
            }
            (format!("Is the following true: {c}?"), false)
        }
    };
    let yes_branch = if negation_removed == inverted {
        Branch::True
    } else {
        Branch::False
    };
    QuestionSpec {
        text,
        yes_branch,
        no_branch: yes_branch.other(),
    }
}
