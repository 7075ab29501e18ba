//! Tokenization and rule-based sentence segmentation.

use serde::{Deserialize, Serialize};

/// A sentence with its lowercase tokens and byte span in the text it was cut from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<String>,
    pub char_span: (usize, usize),
}

impl Sentence {
    /// Builds a free-standing sentence spanning all of `text`.
    pub fn new(text: &str) -> Self {
        let trimmed = text.trim();
        Sentence {
            text: trimmed.to_string(),
            tokens: tokenize(trimmed),
            char_span: (0, trimmed.len()),
        }
    }
}

/// Abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "e.g.", "i.e.", "eg.", "ie.", "cf.", "vs.", "no.", "nos.", "fig.", "figs.", "approx.",
    "ref.", "sec.", "vol.", "ver.", "rev.", "ch.", "tbl.", "eq.", "pp.", "p.", "al.", "mr.",
    "mrs.", "ms.", "dr.", "st.", "inc.", "ltd.", "co.", "corp.", "dept.", "min.", "max.", "jan.",
    "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
];

fn is_connector(c: char) -> bool {
    matches!(c, '-' | '.' | '/' | '\'' | '\u{2019}' | '_')
}

/// Byte spans of word tokens in `text`.
///
/// A token is a run of alphanumerics; `- . / ' _` join two alphanumeric
/// runs ("I/O", "7.1.0.4", "don't", "right-click") but never start or end one.
pub(crate) fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        let mut j = i + 1;
        loop {
            if j < chars.len() && chars[j].1.is_alphanumeric() {
                j += 1;
            } else if j + 1 < chars.len()
                && is_connector(chars[j].1)
                && chars[j + 1].1.is_alphanumeric()
            {
                j += 2;
            } else {
                break;
            }
        }
        let end = if j < chars.len() { chars[j].0 } else { text.len() };
        spans.push((start, end));
        i = j;
    }
    spans
}

pub(crate) fn normalize_token(raw: &str) -> String {
    raw.replace('\u{2019}', "'").to_lowercase()
}

/// Lowercase word tokens of `text`; punctuation is dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(s, e)| normalize_token(&text[s..e]))
        .collect()
}

fn is_abbreviation(line: &str, dot: usize) -> bool {
    let word_start = line[..dot]
        .rfind(char::is_whitespace)
        .map(|p| p + 1)
        .unwrap_or(0);
    let word = line[word_start..=dot].trim_start_matches(['(', '"', '\'']).to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Candidate split offsets (exclusive ends) inside one line.
fn split_points(line: &str) -> Vec<usize> {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut points = Vec::new();
    for (k, &(pos, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        // allow closing quotes/brackets directly after the terminator
        let mut m = k + 1;
        while m < chars.len() && matches!(chars[m].1, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}') {
            m += 1;
        }
        if m >= chars.len() || !chars[m].1.is_whitespace() {
            continue;
        }
        let mut n = m;
        while n < chars.len() && chars[n].1.is_whitespace() {
            n += 1;
        }
        let Some(&(_, next)) = chars.get(n) else {
            continue;
        };
        let next = if matches!(next, '"' | '(' | '\u{201c}') {
            chars.get(n + 1).map(|x| x.1).unwrap_or(' ')
        } else {
            next
        };
        if !(next.is_uppercase() || next.is_ascii_digit()) {
            continue;
        }
        if c == '.' && is_abbreviation(line, pos) {
            continue;
        }
        let end = if m < chars.len() { chars[m].0 } else { line.len() };
        points.push(end);
    }
    points
}

/// Splits `text` into sentences.
///
/// Newlines are hard boundaries. Inside a line, `.`, `!` or `?` followed by
/// whitespace and an uppercase letter or digit ends a sentence unless the
/// word is a known abbreviation. Fragments without any word token are
/// attached to a neighbour, so no returned sentence is empty.
pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    let mut raw: Vec<(usize, usize)> = Vec::new();
    let mut line_start = 0;
    for line in text.split('\n') {
        let mut start = 0;
        for end in split_points(line) {
            raw.push((line_start + start, line_start + end));
            start = end;
        }
        raw.push((line_start + start, line_start + line.len()));
        line_start += line.len() + 1;
    }

    // trim, then fold token-less fragments into the previous (or next) sentence
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut pending: Option<usize> = None;
    for (s, e) in raw {
        let Some((s, e)) = trim_span(text, s, e) else {
            continue;
        };
        if token_spans(&text[s..e]).is_empty() {
            match spans.last_mut() {
                Some(last) => last.1 = e,
                None => pending = Some(pending.unwrap_or(s)),
            }
            continue;
        }
        spans.push((pending.take().unwrap_or(s), e));
    }

    spans
        .into_iter()
        .map(|(s, e)| {
            let body = &text[s..e];
            Sentence {
                text: body.to_string(),
                tokens: tokenize(body),
                char_span: (s, e),
            }
        })
        .collect()
}

fn trim_span(text: &str, s: usize, e: usize) -> Option<(usize, usize)> {
    let slice = &text[s..e];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if trimmed.is_empty() {
        None
    } else {
        Some((s + lead, s + lead + trimmed.len()))
    }
}
