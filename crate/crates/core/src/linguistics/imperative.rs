use serde::{Deserialize, Serialize};

use super::conditional::{clause_boundary, finite_guard, imperative_at, lexical_boundary};
use super::{
    analyze, in_set, is_number, ImperativeLexicon, Tok, DETERMINERS, LEADING_ADVERBS,
    PREPOSITIONS, SUBJECT_PRONOUNS,
};
use crate::ingest::Sentence;

/// An imperative verb found in a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImperativeAnnotation {
    pub verb: String,
    pub token_index: usize,
}

const SUBORDINATORS: &[&str] = &[
    "if", "when", "unless", "once", "after", "before", "while", "whenever", "until", "because",
    "since", "as",
];

/// Verbs that are far more often nouns; inside a coordination they only count
/// when an object phrase follows.
const AMBIGUOUS: &[&str] = &[
    "log", "view", "set", "test", "filter", "type", "record", "name", "list", "map", "label",
    "sort", "route", "tag", "issue", "patch", "block", "report", "page", "cycle", "back", "group",
    "point", "display", "index", "document", "program", "power", "update", "upgrade", "change",
    "control", "switch", "access", "return", "support", "service", "start", "load",
];

/// Token index where the main clause of the sentence starts.
fn clause_start(toks: &[Tok], lex: &ImperativeLexicon) -> Option<usize> {
    let n = toks.len();
    let mut k = 0;
    let skip_prefix = |mut k: usize| {
        loop {
            if k < n && is_number(&toks[k].lower) {
                k += 1;
            } else if k + 1 < n && toks[k].is("step") && is_number(&toks[k + 1].lower) {
                k += 2;
            } else if k < n && in_set(LEADING_ADVERBS, &toks[k].lower) && !toks[k].colon_after() {
                k += 1;
            } else {
                return k;
            }
        }
    };
    k = skip_prefix(k);
    if k >= n {
        return None;
    }
    if toks[k].is("to") {
        // purpose clause: "To clear the error, restart the node"
        let j = (k..n).find(|&j| toks[j].comma_after())?;
        k = j + 1;
    } else if in_set(SUBORDINATORS, &toks[k].lower) {
        if let Some(b) = clause_boundary(toks, k + 1, lex) {
            k = b.main_start;
        } else if in_set(&["if", "when", "unless"], &toks[k].lower) {
            k = lexical_boundary(toks, k + 1, lex)?;
        } else {
            return None;
        }
    }
    let k = skip_prefix(k);
    (k < n).then_some(k)
}

fn negated_command(toks: &[Tok], k: usize) -> Option<usize> {
    let t = &toks[k];
    let verb = if t.is("don't") {
        k + 1
    } else if t.is("do") && toks.get(k + 1).is_some_and(|n| n.is("not")) {
        k + 2
    } else if t.is("never") {
        k + 1
    } else {
        return None;
    };
    (verb < toks.len()).then_some(verb)
}

fn opens_object(t: Option<&Tok>) -> bool {
    t.is_some_and(|t| {
        in_set(DETERMINERS, &t.lower)
            || in_set(SUBJECT_PRONOUNS, &t.lower)
            || in_set(PREPOSITIONS, &t.lower)
            || is_number(&t.lower)
    })
}

/// Finds imperative verbs.
///
/// A lexicon verb is imperative when it opens the main clause (after
/// ordinals, adverbs, a purpose clause or a fronted subordinate clause) and
/// is not followed by a finite verb, or when it is coordinated by `and`,
/// `or`, `then` or a comma with an earlier imperative.
pub fn detect_imperatives(s: &Sentence, lex: &ImperativeLexicon) -> Vec<ImperativeAnnotation> {
    let toks = analyze(&s.text);
    let mut out: Vec<ImperativeAnnotation> = Vec::new();
    let push = |out: &mut Vec<ImperativeAnnotation>, i: usize| {
        if !out.iter().any(|a| a.token_index == i) {
            out.push(ImperativeAnnotation {
                verb: toks[i].lower.clone(),
                token_index: i,
            });
        }
    };

    if let Some(k) = clause_start(&toks, lex) {
        if let Some(v) = negated_command(&toks, k) {
            if lex.contains(&toks[v].lower) && !toks[v].colon_after() {
                push(&mut out, v);
            }
        } else if imperative_at(&toks, k, lex) {
            push(&mut out, k);
        }
    }

    for i in 1..toks.len() {
        if !out.iter().any(|a| a.token_index < i) {
            continue;
        }
        let prev = &toks[i - 1];
        let coordinated = in_set(&["and", "or", "then"], &prev.lower) || prev.comma_after();
        if !coordinated || !lex.contains(&toks[i].lower) || toks[i].colon_after() {
            continue;
        }
        if finite_guard(&toks, i) {
            continue;
        }
        if in_set(AMBIGUOUS, &toks[i].lower) && !opens_object(toks.get(i + 1)) {
            continue;
        }
        push(&mut out, i);
    }
    out.sort_by_key(|a| a.token_index);
    out
}
