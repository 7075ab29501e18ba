//! Sparse feature vectors for list candidates: tf-idf n-grams over context
//! and list text, a list-type flag and imperative statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{ListCandidate, ListKind, Sentence};
use crate::linguistics::{detect_imperatives, parse_word_list, ImperativeLexicon};

pub const VOCABULARY_VERSION: u32 = 1;

const BUILTIN_WORDLIST: &str = include_str!("../data/wordlist_en_10k.txt");

/// The bundled 10,000-word English frequency list.
pub fn builtin_wordlist() -> &'static BTreeSet<String> {
    static WORDS: OnceLock<BTreeSet<String>> = OnceLock::new();
    WORDS.get_or_init(|| parse_word_list(BUILTIN_WORDLIST))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub ngram_max: usize,
    pub context_k: usize,
    pub use_list_type: bool,
    pub use_imperatives: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            ngram_max: 1,
            context_k: 1,
            use_list_type: true,
            use_imperatives: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.ngram_max) {
            return Err(Error::Config(format!("ngram_max must be 1..=3, got {}", self.ngram_max)));
        }
        if !(1..=4).contains(&self.context_k) {
            return Err(Error::Config(format!("context_k must be 1..=4, got {}", self.context_k)));
        }
        Ok(())
    }

    /// Number of non-text features appended after the text block.
    pub fn meta_len(&self) -> usize {
        usize::from(self.use_list_type) + if self.use_imperatives { 3 } else { 0 }
    }
}

/// N-gram vocabulary with smoothed inverse document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabularyFile", into = "VocabularyFile")]
pub struct Vocabulary {
    pub ngram_max: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
    term_to_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    version: u32,
    ngram_max: usize,
    terms: Vec<String>,
    idf: Vec<f64>,
}

impl TryFrom<VocabularyFile> for Vocabulary {
    type Error = String;

    fn try_from(f: VocabularyFile) -> std::result::Result<Self, String> {
        if f.version != VOCABULARY_VERSION {
            return Err(format!("unsupported vocabulary version {}", f.version));
        }
        if f.terms.len() != f.idf.len() {
            return Err(format!("{} terms but {} idf values", f.terms.len(), f.idf.len()));
        }
        Ok(Vocabulary::from_parts(f.ngram_max, f.terms, f.idf))
    }
}

impl From<Vocabulary> for VocabularyFile {
    fn from(v: Vocabulary) -> Self {
        VocabularyFile {
            version: VOCABULARY_VERSION,
            ngram_max: v.ngram_max,
            terms: v.terms,
            idf: v.idf,
        }
    }
}

impl Vocabulary {
    fn from_parts(ngram_max: usize, terms: Vec<String>, idf: Vec<f64>) -> Self {
        let term_to_index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary {
            ngram_max,
            terms,
            idf,
            term_to_index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    /// Hash identifying this vocabulary together with the feature layout built on it.
    pub fn fingerprint(&self, cfg: &FeatureConfig) -> String {
        let mut h = Sha256::new();
        h.update(format!("{}:{}", self.ngram_max, self.terms.len()).as_bytes());
        for (t, idf) in self.terms.iter().zip(&self.idf) {
            h.update(t.as_bytes());
            h.update([0]);
            h.update(idf.to_bits().to_le_bytes());
        }
        h.update(
            format!(
                "{}:{}:{}:{}",
                cfg.ngram_max, cfg.context_k, cfg.use_list_type, cfg.use_imperatives
            )
            .as_bytes(),
        );
        format!("{:x}", h.finalize())
    }
}

/// Sparse vector; text block occupies `[0, meta_offset)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, f64)>,
    pub meta_offset: usize,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub fingerprint: String,
}

impl FeatureVector {
    pub fn new(mut entries: Vec<(usize, f64)>, meta_offset: usize) -> Self {
        entries.sort_by_key(|e| e.0);
        FeatureVector {
            entries,
            meta_offset,
            fingerprint: String::new(),
        }
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn text_norm(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.0 < self.meta_offset)
            .map(|e| e.1 * e.1)
            .sum::<f64>()
            .sqrt()
    }
}

/// The context sentences and list sentences that feed the text block.
fn text_sentences<'a>(cand: &'a ListCandidate, cfg: &FeatureConfig) -> impl Iterator<Item = &'a Sentence> {
    let skip = cand.context.len().saturating_sub(cfg.context_k);
    cand.context[skip..].iter().chain(cand.sentences())
}

/// N-grams (1..=n) of one sentence whose constituent unigrams are all allowed.
fn sentence_ngrams(tokens: &[String], n: usize, allowed: &dyn Fn(&str) -> bool, out: &mut Vec<String>) {
    let ok: Vec<bool> = tokens.iter().map(|t| allowed(t)).collect();
    for len in 1..=n {
        for start in 0..tokens.len().saturating_sub(len - 1) {
            if ok[start..start + len].iter().all(|&b| b) {
                out.push(tokens[start..start + len].join(" "));
            }
        }
    }
}

fn candidate_ngrams(cand: &ListCandidate, cfg: &FeatureConfig, allowed: &dyn Fn(&str) -> bool) -> Vec<String> {
    let mut out = Vec::new();
    for s in text_sentences(cand, cfg) {
        sentence_ngrams(&s.tokens, cfg.ngram_max, allowed, &mut out);
    }
    out
}

/// Builds the vocabulary from training candidates, keeping only n-grams whose
/// words all appear in `wordlist`.
pub fn build_vocabulary(
    candidates: &[ListCandidate],
    cfg: &FeatureConfig,
    wordlist: &BTreeSet<String>,
) -> Result<Vocabulary> {
    cfg.validate()?;
    if candidates.is_empty() || wordlist.is_empty() {
        return Err(Error::EmptyInput);
    }
    let allowed = |t: &str| wordlist.contains(t);
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for cand in candidates {
        let grams: BTreeSet<String> = candidate_ngrams(cand, cfg, &allowed).into_iter().collect();
        for g in grams {
            *df.entry(g).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::EmptyVocab);
    }
    let n = candidates.len() as f64;
    let (terms, idf) = df
        .into_iter()
        .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
        .unzip();
    Ok(Vocabulary::from_parts(cfg.ngram_max, terms, idf))
}

/// (fraction of list sentences with an imperative, fraction starting with one,
/// imperatives per token).
pub fn imperative_features(cand: &ListCandidate, lex: &ImperativeLexicon) -> (f64, f64, f64) {
    let mut sentences = 0usize;
    let mut with = 0usize;
    let mut starting = 0usize;
    let mut found = 0usize;
    let mut tokens = 0usize;
    for s in cand.sentences() {
        let anns = detect_imperatives(s, lex);
        sentences += 1;
        tokens += s.tokens.len();
        found += anns.len();
        if !anns.is_empty() {
            with += 1;
        }
        if anns.iter().any(|a| a.token_index == 0) {
            starting += 1;
        }
    }
    if sentences == 0 {
        return (0.0, 0.0, 0.0);
    }
    let s = sentences as f64;
    let density = (found as f64 / (tokens as f64 + 1.0)).min(1.0);
    (with as f64 / s, starting as f64 / s, density)
}

pub fn featurize(
    cand: &ListCandidate,
    vocab: &Vocabulary,
    cfg: &FeatureConfig,
    lex: &ImperativeLexicon,
) -> FeatureVector {
    let allowed = |t: &str| vocab.term_to_index.contains_key(t);
    let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
    for g in candidate_ngrams(cand, cfg, &allowed) {
        if let Some(i) = vocab.index_of(&g) {
            *tf.entry(i).or_default() += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = tf.into_iter().map(|(i, c)| (i, c * vocab.idf[i])).collect();
    let norm = entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    if norm > 0.0 {
        for e in &mut entries {
            e.1 /= norm;
        }
    }
    let offset = vocab.len();
    let mut next = offset;
    if cfg.use_list_type {
        if cand.list_kind == ListKind::Ordered {
            entries.push((next, 1.0));
        }
        next += 1;
    }
    if cfg.use_imperatives {
        let (a, b, c) = imperative_features(cand, lex);
        for v in [a, b, c] {
            if v != 0.0 {
                entries.push((next, v));
            }
            next += 1;
        }
    }
    let mut fv = FeatureVector::new(entries, offset);
    fv.fingerprint = vocab.fingerprint(cfg);
    fv
}
