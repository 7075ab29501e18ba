use std::collections::BTreeSet;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_VERBS: &str = include_str!("../../data/imperative_verbs.txt");
const BUILTIN_DOMAIN_VERBS: &str = include_str!("../../data/domain_verbs.txt");

/// Parses the plain word-list format: one lowercase entry per line, `#`
/// starts a comment, blank lines ignored.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn read_word_list(path: &Path) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_word_list(&text))
}

/// Base-form verbs that may be used in command mood.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImperativeLexicon {
    pub verbs: BTreeSet<String>,
    pub domain_verbs: BTreeSet<String>,
}

impl ImperativeLexicon {
    pub fn new(verbs: BTreeSet<String>, domain_verbs: BTreeSet<String>) -> Self {
        let clean = |set: BTreeSet<String>| {
            set.into_iter()
                .map(|v| v.trim().to_lowercase())
                .filter(|v| !v.is_empty())
                .collect()
        };
        ImperativeLexicon {
            verbs: clean(verbs),
            domain_verbs: clean(domain_verbs),
        }
    }

    /// The bundled general and technical verb lists.
    pub fn builtin() -> &'static ImperativeLexicon {
        static LEX: OnceLock<ImperativeLexicon> = OnceLock::new();
        LEX.get_or_init(|| {
            ImperativeLexicon::new(
                parse_word_list(BUILTIN_VERBS),
                parse_word_list(BUILTIN_DOMAIN_VERBS),
            )
        })
    }

    pub fn with_domain_verbs<I, S>(mut self, verbs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for v in verbs {
            let v = v.as_ref().trim().to_lowercase();
            if !v.is_empty() {
                self.domain_verbs.insert(v);
            }
        }
        self
    }

    /// Builtin lexicon extended with the domain verbs listed in `path`.
    pub fn builtin_with_file(path: &Path) -> Result<Self> {
        Ok(Self::builtin().clone().with_domain_verbs(read_word_list(path)?))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.verbs.contains(word) || self.domain_verbs.contains(word)
    }

    pub fn len(&self) -> usize {
        self.verbs.len() + self.domain_verbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether `word` looks like an inflected (-s, -ed, -ing) form of a lexicon verb.
    pub(crate) fn is_inflected_verb(&self, word: &str) -> bool {
        let stems = [
            word.strip_suffix("ies").map(|s| format!("{s}y")),
            word.strip_suffix("es").map(str::to_string),
            word.strip_suffix('s').map(str::to_string),
            word.strip_suffix("ied").map(|s| format!("{s}y")),
            word.strip_suffix("ed").map(str::to_string),
            word.strip_suffix('d').map(str::to_string),
            word.strip_suffix("ing").map(str::to_string),
            word.strip_suffix("ing").map(|s| format!("{s}e")),
        ];
        stems
            .into_iter()
            .flatten()
            .any(|s| s.len() > 1 && self.contains(&s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_general_and_technical_verbs() {
        let lex = ImperativeLexicon::builtin();
        assert!(lex.verbs.len() >= 600);
        for v in ["wait", "replace", "remove", "power", "press", "restart"] {
            assert!(lex.contains(v), "{v}");
        }
        for v in ["reseat", "ftp", "ssh", "unmount"] {
            assert!(lex.contains(v), "{v}");
        }
        assert!(!lex.contains("drive"));
        assert!(lex.verbs.iter().chain(&lex.domain_verbs).all(|v| !v.is_empty() && *v == v.to_lowercase()));
    }

    #[test]
    fn word_list_format() {
        let set = parse_word_list("# header\nReseat\n\n  ssh  # inline\n");
        assert_eq!(set.into_iter().collect::<Vec<_>>(), vec!["reseat", "ssh"]);
    }

    #[test]
    fn domain_extension() {
        let lex = ImperativeLexicon::builtin().clone().with_domain_verbs(["svctask", " Quiesce "]);
        assert!(lex.contains("svctask"));
        assert!(lex.contains("quiesce"));
    }

    #[test]
    fn inflections() {
        let lex = ImperativeLexicon::builtin();
        assert!(lex.is_inflected_verb("restarted"));
        assert!(lex.is_inflected_verb("shows"));
        assert!(lex.is_inflected_verb("blinking"));
        assert!(!lex.is_inflected_verb("canister"));
    }
}
