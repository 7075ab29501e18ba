use serde::{Deserialize, Serialize};

use super::{
    analyze, detect_negation, in_set, is_number, ImperativeLexicon, Tok, AUXILIARIES,
    DETERMINERS, PREPOSITIONS, RELATIVE_PRONOUNS, SUBJECT_PRONOUNS,
};
use crate::error::{Error, Result};
use crate::ingest::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Trigger {
    If,
    When,
    Unless,
}

impl Trigger {
    fn from_word(w: &str) -> Option<Self> {
        match w {
            "if" => Some(Trigger::If),
            "when" => Some(Trigger::When),
            "unless" => Some(Trigger::Unless),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Polarity {
    /// The effect applies when the condition holds.
    Direct,
    /// The effect applies when the condition does not hold (`unless`).
    Inverted,
}

/// A decision point: the condition governing a split and the effect on the
/// branch where the decision applies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalSplit {
    pub trigger: Trigger,
    pub trigger_index: usize,
    pub condition: String,
    pub effect: String,
    pub polarity: Polarity,
    pub condition_negated: bool,
    /// Byte spans of condition and effect inside the sentence text.
    pub condition_span: (usize, usize),
    pub effect_span: (usize, usize),
}

/// Words that may precede a fronted trigger without forming a clause of their own.
const CONNECTIVES: &[&str] = &[
    "then", "and", "but", "or", "so", "otherwise", "also", "however", "next", "finally", "now",
    "else", "first", "only", "even", "again",
];

/// Verbs taking an if/when complement clause ("check if ..."), all inflections.
const COMPLEMENT_VERBS: &[&str] = &[
    "check", "checks", "checked", "checking", "see", "sees", "saw", "seen", "seeing",
    "determine", "determines", "determined", "determining", "verify", "verifies", "verified",
    "verifying", "know", "knows", "knew", "known", "knowing", "ask", "asks", "asked", "asking",
    "wonder", "wonders", "wondered", "wondering",
];

const INTERROGATIVES: &[&str] = &["what", "where", "why", "how", "who", "whom", "whose", "which"];

const CLAUSE_SPLITTERS: &[&str] = &["but", "however", "yet", "whereas", "although"];

const PARTICLE_OR_FUNCTION: &[&str] = &["to", "not"];

/// `toks[i]` is followed by a finite verb, so it heads a subject rather than a command
/// ("Restart is required", "Power supplies are off").
pub(crate) fn finite_guard(toks: &[Tok], i: usize) -> bool {
    let Some(next) = toks.get(i + 1) else {
        return false;
    };
    if in_set(AUXILIARIES, &next.lower) {
        return true;
    }
    let opens_phrase = in_set(DETERMINERS, &next.lower)
        || in_set(SUBJECT_PRONOUNS, &next.lower)
        || in_set(PREPOSITIONS, &next.lower)
        || is_number(&next.lower);
    !opens_phrase
        && !toks[i].comma_after()
        && !next.comma_after()
        && toks.get(i + 2).is_some_and(|t| in_set(AUXILIARIES, &t.lower))
}

pub(crate) fn imperative_at(toks: &[Tok], k: usize, lex: &ImperativeLexicon) -> bool {
    let t = &toks[k];
    lex.contains(&t.lower) && !t.colon_after() && !finite_guard(toks, k)
}

fn subject_verb_at(toks: &[Tok], k: usize, lex: &ImperativeLexicon) -> bool {
    let head = &toks[k].lower;
    if in_set(RELATIVE_PRONOUNS, head) && !in_set(&["this", "that"], head)
        || in_set(AUXILIARIES, head)
        || in_set(PREPOSITIONS, head)
        || in_set(CONNECTIVES, head)
    {
        return false;
    }
    if head == "that" {
        // "that" opening a clause after a comma is almost always relative
        return false;
    }
    if in_set(SUBJECT_PRONOUNS, head) {
        if let Some(next) = toks.get(k + 1) {
            if lex.contains(&next.lower) || in_set(AUXILIARIES, &next.lower) {
                return true;
            }
        }
    }
    let stop = (k + 7).min(toks.len());
    for m in k + 1..stop {
        if toks[m - 1].comma_after() {
            break;
        }
        let w = &toks[m].lower;
        if in_set(AUXILIARIES, w)
            || ((w.ends_with('s') && !w.ends_with("ss")) || w.ends_with("ed"))
                && lex.is_inflected_verb(w)
        {
            return true;
        }
    }
    false
}

pub(crate) struct Boundary {
    /// Exclusive token index where the subordinate clause ends.
    pub clause_end: usize,
    /// First token of the main clause.
    pub main_start: usize,
    pub conjoined: bool,
}

/// First comma after `from` that is followed by a plausible main clause.
pub(crate) fn clause_boundary(toks: &[Tok], from: usize, lex: &ImperativeLexicon) -> Option<Boundary> {
    let n = toks.len();
    for j in from..n.saturating_sub(1) {
        if !toks[j].comma_after() {
            continue;
        }
        let mut k = j + 1;
        let mut conjoined = false;
        if in_set(&["and", "or", "but"], &toks[k].lower) {
            k += 1;
            conjoined = true;
        }
        if k < n && toks[k].is("then") {
            k += 1;
        }
        if k >= n {
            continue;
        }
        if imperative_at(toks, k, lex) || (!conjoined && subject_verb_at(toks, k, lex)) {
            return Some(Boundary {
                clause_end: j + 1,
                main_start: k,
                conjoined,
            });
        }
    }
    None
}

/// Comma-less boundary: a lexicon verb opening an object phrase, preceded by
/// content inside the clause ("If both canisters continue to report this
/// error replace the chassis").
pub(crate) fn lexical_boundary(toks: &[Tok], from: usize, lex: &ImperativeLexicon) -> Option<usize> {
    let n = toks.len();
    let mut saw_verb = false;
    for j in from..n {
        let w = &toks[j].lower;
        if j > from + 1 && saw_verb && lex.contains(w) {
            let prev = &toks[j - 1].lower;
            let next_ok = toks.get(j + 1).is_some_and(|t| {
                in_set(DETERMINERS, &t.lower)
                    || in_set(SUBJECT_PRONOUNS, &t.lower) && t.lower != "that"
                    || is_number(&t.lower)
                    || in_set(&["off", "on", "up", "down", "out"], &t.lower)
            });
            let prev_ok = !(in_set(PARTICLE_OR_FUNCTION, prev)
                || in_set(AUXILIARIES, prev)
                || in_set(DETERMINERS, prev)
                || in_set(SUBJECT_PRONOUNS, prev)
                || in_set(&["and", "or", "will", "please"], prev));
            if next_ok && prev_ok {
                return Some(j);
            }
        }
        if in_set(AUXILIARIES, w) || lex.contains(w) || lex.is_inflected_verb(w) {
            saw_verb = true;
        }
    }
    None
}

fn governed_by_complement(toks: &[Tok], i: usize) -> bool {
    i > 0 && in_set(COMPLEMENT_VERBS, &toks[i - 1].lower)
}

fn looks_like_question(text: &str, toks: &[Tok]) -> bool {
    if text.trim_end().ends_with('?') {
        return true;
    }
    let Some(first) = toks.first() else {
        return false;
    };
    if in_set(INTERROGATIVES, &first.lower) {
        return true;
    }
    let second = toks.get(1).map(|t| t.lower.as_str()).unwrap_or("");
    if first.is("when") && in_set(AUXILIARIES, second) {
        return true;
    }
    in_set(AUXILIARIES, &first.lower)
        && (in_set(SUBJECT_PRONOUNS, second) || in_set(DETERMINERS, second))
        && !first.lower.ends_with("n't")
}

/// Extends a span end over closing quotes and brackets that directly follow it.
fn extend_closers(text: &str, end: usize) -> usize {
    let rest = &text[end..];
    let extra: usize = rest
        .chars()
        .take_while(|c| matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}'))
        .map(char::len_utf8)
        .sum();
    end + extra
}

fn span_of(text: &str, toks: &[Tok], from: usize, to: usize) -> Option<(usize, usize)> {
    if from >= to || to > toks.len() {
        return None;
    }
    Some((toks[from].start, extend_closers(text, toks[to - 1].end)))
}

fn skip_then(toks: &[Tok], mut k: usize) -> usize {
    while k < toks.len() && toks[k].is("then") {
        k += 1;
    }
    k
}

pub(crate) struct SplitSpans {
    pub condition: (usize, usize),
    pub effect: (usize, usize),
}

pub(crate) fn split_tokens(
    text: &str,
    toks: &[Tok],
    trig: usize,
    lex: &ImperativeLexicon,
) -> Result<SplitSpans> {
    let n = toks.len();
    let malformed = |what: &str| Error::MalformedClause(format!("{what} in {text:?}"));
    if trig >= n || Trigger::from_word(&toks[trig].lower).is_none() {
        return Err(malformed("no trigger at index"));
    }
    let cond_start = trig + 1;
    let fronted = toks[..trig].iter().all(|t| in_set(CONNECTIVES, &t.lower));
    let boundary = clause_boundary(toks, cond_start, lex);

    let (cond, eff) = if fronted {
        if let Some(b) = boundary {
            (
                span_of(text, toks, cond_start, b.clause_end),
                span_of(text, toks, skip_then(toks, b.main_start), n),
            )
        } else if let Some(j) = lexical_boundary(toks, cond_start, lex) {
            (
                span_of(text, toks, cond_start, j),
                span_of(text, toks, skip_then(toks, j), n),
            )
        } else {
            return Err(malformed("no main clause"));
        }
    } else {
        let comma_before = toks[trig - 1].comma_after();
        match boundary {
            // "To fix this, if X, do Y": the trigger opens a fronted clause mid-sentence
            Some(b) if comma_before && !b.conjoined => (
                span_of(text, toks, cond_start, b.clause_end),
                span_of(text, toks, skip_then(toks, b.main_start), n),
            ),
            _ => {
                let mut eff_start = 0;
                for (i, t) in toks[..trig].iter().enumerate() {
                    if in_set(CLAUSE_SPLITTERS, &t.lower)
                        || (t.is("then") && i > 0 && toks[i - 1].comma_after())
                        || t.trailing.contains(';')
                    {
                        eff_start = i + 1;
                    }
                }
                let eff_start = skip_then(toks, eff_start);
                let cond_end = match boundary {
                    Some(b) => {
                        log::debug!("discontiguous effect dropped after the condition in {text:?}");
                        b.clause_end
                    }
                    None => n,
                };
                (
                    span_of(text, toks, cond_start, cond_end),
                    span_of(text, toks, eff_start, trig),
                )
            }
        }
    };
    match (cond, eff) {
        (Some(condition), Some(effect)) => Ok(SplitSpans { condition, effect }),
        (None, _) => Err(malformed("empty condition")),
        (_, None) => Err(malformed("empty effect")),
    }
}

/// Splits a conditional sentence at `trigger_index` into condition and effect text.
pub fn split_condition_effect(s: &Sentence, trigger_index: usize) -> Result<(String, String)> {
    let toks = analyze(&s.text);
    let spans = split_tokens(&s.text, &toks, trigger_index, ImperativeLexicon::builtin())?;
    Ok((
        s.text[spans.condition.0..spans.condition.1].to_string(),
        s.text[spans.effect.0..spans.effect.1].to_string(),
    ))
}

/// Detects a decision point using the builtin lexicon.
pub fn detect_conditional(s: &Sentence) -> Option<ConditionalSplit> {
    detect_conditional_with(s, ImperativeLexicon::builtin())
}

pub fn detect_conditional_with(s: &Sentence, lex: &ImperativeLexicon) -> Option<ConditionalSplit> {
    let text = s.text.as_str();
    let toks = analyze(text);
    if toks.is_empty() || looks_like_question(text, &toks) {
        return None;
    }
    for (i, tok) in toks.iter().enumerate() {
        let Some(trigger) = Trigger::from_word(&tok.lower) else {
            continue;
        };
        if i > 0 && in_set(&["as", "what"], &toks[i - 1].lower) {
            continue;
        }
        if governed_by_complement(&toks, i) {
            continue;
        }
        let Ok(spans) = split_tokens(text, &toks, i, lex) else {
            continue;
        };
        let condition = text[spans.condition.0..spans.condition.1].to_string();
        let effect = text[spans.effect.0..spans.effect.1].to_string();
        return Some(ConditionalSplit {
            trigger,
            trigger_index: i,
            condition_negated: detect_negation(&condition),
            condition,
            effect,
            polarity: if trigger == Trigger::Unless {
                Polarity::Inverted
            } else {
                Polarity::Direct
            },
            condition_span: spans.condition,
            effect_span: spans.effect,
        });
    }
    None
}
