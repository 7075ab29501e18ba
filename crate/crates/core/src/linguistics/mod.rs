//! Sentence-level analyses: imperatives, decision points, negation and
//! condition similarity. All rules are positional and lexicon driven.

mod conditional;
mod imperative;
mod lexicon;

use std::collections::HashSet;

use crate::ingest::{normalize_token, token_spans, tokenize};

pub use conditional::{
    detect_conditional, detect_conditional_with, split_condition_effect, ConditionalSplit,
    Polarity, Trigger,
};
pub use imperative::{detect_imperatives, ImperativeAnnotation};
pub use lexicon::{parse_word_list, read_word_list, ImperativeLexicon};

/// A token with its byte span and the punctuation that follows it.
#[derive(Debug, Clone)]
pub(crate) struct Tok {
    pub start: usize,
    pub end: usize,
    pub lower: String,
    /// Non-space characters between this token and the next one.
    pub trailing: String,
}

impl Tok {
    pub fn comma_after(&self) -> bool {
        self.trailing.contains(',') || self.trailing.contains(';')
    }

    pub fn colon_after(&self) -> bool {
        self.trailing.contains(':')
    }

    pub fn is(&self, w: &str) -> bool {
        self.lower == w
    }
}

pub(crate) fn analyze(text: &str) -> Vec<Tok> {
    let spans = token_spans(text);
    spans
        .iter()
        .enumerate()
        .map(|(i, &(s, e))| {
            let next = spans.get(i + 1).map_or(text.len(), |n| n.0);
            Tok {
                start: s,
                end: e,
                lower: normalize_token(&text[s..e]),
                trailing: text[e..next].chars().filter(|c| !c.is_whitespace()).collect(),
            }
        })
        .collect()
}

pub(crate) const SUBJECT_PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "this", "that", "these", "those", "there", "one",
    "someone", "somebody", "everyone", "nobody",
];

pub(crate) const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "each", "every", "all", "both", "some",
    "any", "no", "your", "my", "our", "its", "their", "his", "her", "another", "either",
    "neither", "several", "many", "few", "more", "most", "other",
];

pub(crate) const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "am", "be", "been", "being", "has", "have", "had", "do", "does",
    "did", "can", "could", "will", "would", "shall", "should", "may", "might", "must", "isn't",
    "aren't", "wasn't", "weren't", "hasn't", "haven't", "hadn't", "don't", "doesn't", "didn't",
    "can't", "cannot", "couldn't", "won't", "wouldn't", "shouldn't", "mustn't",
];

pub(crate) const PREPOSITIONS: &[&str] = &[
    "in", "on", "at", "to", "for", "from", "with", "by", "of", "into", "onto", "off", "up",
    "down", "out", "over", "under", "through", "about", "after", "before", "between", "during",
    "within", "without", "across", "against", "along", "behind", "below", "above", "near", "via",
    "per", "away", "back", "as", "around",
];

pub(crate) const LEADING_ADVERBS: &[&str] = &[
    "then", "first", "next", "also", "now", "finally", "optionally", "again", "afterwards",
    "afterward", "second", "third", "lastly", "please", "immediately", "simply", "carefully",
    "quickly", "manually", "just", "always", "never", "only", "still",
];

pub(crate) const RELATIVE_PRONOUNS: &[&str] = &["which", "who", "whom", "whose", "that", "where"];

pub(crate) fn in_set(set: &[&str], w: &str) -> bool {
    set.contains(&w)
}

pub(crate) fn is_number(w: &str) -> bool {
    w.chars().next().is_some_and(|c| c.is_ascii_digit())
}

const NEGATIONS: &[&str] = &[
    "not", "no", "never", "cannot", "n't", "without", "unable", "fails", "fail",
];

/// True iff the text contains a negation word or an `n't` clitic.
pub fn detect_negation(condition: &str) -> bool {
    tokenize(condition)
        .iter()
        .any(|t| NEGATIONS.contains(&t.as_str()) || t.ends_with("n't"))
}

/// Cosine similarity of binary token-presence vectors.
///
/// Two texts with no tokens at all count as identical.
pub fn similarity(a: &str, b: &str) -> f64 {
    let sa: HashSet<String> = tokenize(a).into_iter().collect();
    let sb: HashSet<String> = tokenize(b).into_iter().collect();
    if sa.is_empty() && sb.is_empty() {
        return 1.0;
    }
    if sa.is_empty() || sb.is_empty() {
        return 0.0;
    }
    let common = sa.intersection(&sb).count() as f64;
    (common / ((sa.len() * sb.len()) as f64).sqrt()).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation() {
        assert!(detect_negation("the LEDs do not show a fault on the power supplies or batteries"));
        assert!(!detect_negation("the light is blinking"));
        assert!(!detect_negation("booted yes is shown for that drive in boot drive view"));
        assert!(detect_negation("the node doesn't respond"));
        assert!(detect_negation("the node fails to start"));
        assert!(!detect_negation("the slot status is failed"));
    }

    #[test]
    fn similarity_identity_and_disjoint() {
        assert_eq!(similarity("slot status is failed", "slot status is failed"), 1.0);
        assert_eq!(similarity("restart the node", "power cords"), 0.0);
        assert_eq!(similarity("", "x"), 0.0);
    }

    #[test]
    fn similarity_parallel_example() {
        // |A ∩ B| = 4, |A| = |B| = 5
        let s = similarity("the slot status is missing", "the slot status is failed");
        assert!((s - 4.0 / 25f64.sqrt()).abs() < 1e-12);
        assert!(s >= 0.7);
    }

    #[test]
    fn similarity_nested_example() {
        // A = {the, power, supply, error, led, is, off}, B has 9 distinct
        // tokens, shared = {the, error, is}
        let s = similarity(
            "the power supply error LED is off",
            "the error is not automatically fixed after 2 minutes",
        );
        assert!((s - 3.0 / 63f64.sqrt()).abs() < 1e-12);
        assert!(s < 0.7);
        // with the trigger word kept on both sides the counts become 4, 8 and 10
        let with_if = similarity(
            "If the power supply error LED is off",
            "If the error is not automatically fixed after 2 minutes",
        );
        assert!((with_if - 4.0 / 80f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn analyze_records_punctuation() {
        let toks = analyze("If the light is blinking, replace it: now");
        assert!(toks[4].comma_after());
        assert!(toks[6].colon_after());
        assert_eq!(toks[0].lower, "if");
    }
}
