//! Dictionaries: DAWG word graphs, plain word lists (`user-words`) and the
//! dangerous-ambiguity table.

mod dawg;

pub use dawg::{build_dawg, deserialize_dawg, serialize_dawg, Dawg, DawgNode, MAGIC, VERSION};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("word {0:?} contains characters outside a-z")]
    OutOfAlphabet(String),
    #[error("corrupt dawg: {0}")]
    Corrupt(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Words in first-appearance order, duplicates removed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordList {
    words: Vec<String>,
}

impl WordList {
    pub fn new(words: Vec<String>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let words = words.into_iter().filter(|w| seen.insert(w.clone())).collect();
        WordList { words }
    }

    /// One word per line; surrounding whitespace is trimmed and blank lines skipped.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect())
    }

    pub fn serialize(&self) -> String {
        self.words.iter().map(|w| format!("{w}\n")).collect()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.iter().any(|w| w == word)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AmbigRule {
    pub wrong: String,
    pub right: String,
}

/// Confusable strings. Used only to warn, never to rewrite output.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbigTable {
    pub rules: Vec<AmbigRule>,
}

impl AmbigTable {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn serialize(&self) -> String {
        self.rules.iter().map(|r| format!("{}\t{}\n", r.wrong, r.right)).collect()
    }
}

/// Parses `wrong<TAB>right` lines. Blank lines are skipped and repeated
/// rules kept once.
pub fn parse_ambigs(text: &str) -> Result<AmbigTable, LexiconError> {
    let mut rules: Vec<AmbigRule> = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: &str| LexiconError::Malformed { line: i + 1, message: message.to_string() };
        let mut parts = line.split('\t');
        let (wrong, right) = match (parts.next(), parts.next(), parts.next()) {
            (Some(w), Some(r), None) => (w, r),
            _ => return Err(malformed("expected exactly one tab between the two sides")),
        };
        if wrong.is_empty() || right.is_empty() {
            return Err(malformed("both sides of a rule must be non-empty"));
        }
        let rule = AmbigRule { wrong: wrong.to_string(), right: right.to_string() };
        if !rules.contains(&rule) {
            rules.push(rule);
        }
    }
    Ok(AmbigTable { rules })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ambigs_basics() {
        assert!(parse_ambigs("").unwrap().is_empty());
        let t = parse_ambigs("rn\tm\n").unwrap();
        assert_eq!(t.rules, vec![AmbigRule { wrong: "rn".into(), right: "m".into() }]);
        let t = parse_ambigs("rn\tm\nrn\tm\ncl\td\n").unwrap();
        assert_eq!(t.rules.len(), 2);
        assert_eq!(parse_ambigs(&t.serialize()).unwrap(), t);
    }

    #[test]
    fn malformed_ambig_lines() {
        assert!(matches!(parse_ambigs("rn\tm\nbroken\n"), Err(LexiconError::Malformed { line: 2, .. })));
        assert!(matches!(parse_ambigs("\tm\n"), Err(LexiconError::Malformed { line: 1, .. })));
        assert!(matches!(parse_ambigs("a\tb\tc\n"), Err(LexiconError::Malformed { line: 1, .. })));
    }

    #[test]
    fn wordlist_dedups_and_trims() {
        let wl = WordList::parse("the\n  cat\n\nthe\r\ndog\n");
        assert_eq!(wl.words(), &["the", "cat", "dog"]);
        assert_eq!(WordList::parse(&wl.serialize()), wl);
    }
}
