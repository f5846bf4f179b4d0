//! Rule-based entity extraction and canonicalization.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::backends::{BackendError, EntityExtractor};
use crate::chunker::{Token, Tokenizer, WordPunctTokenizer};
use crate::error::{Error, Result};

/// Function words that never start an entity. Capitalized runs lose any
/// leading stopwords, which mostly strips sentence-initial capitals.
const STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "against", "all", "also", "although", "am", "an", "and",
    "another", "any", "are", "as", "at", "be", "because", "been", "before", "being", "both",
    "but", "by", "can", "could", "did", "do", "does", "during", "each", "either", "even", "every",
    "few", "for", "from", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
    "him", "himself", "his", "how", "however", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "last", "later", "let", "many", "may", "me", "meanwhile", "might", "more",
    "most", "much", "must", "my", "myself", "neither", "never", "next", "no", "nor", "not", "now",
    "of", "off", "oh", "on", "once", "one", "only", "or", "other", "our", "ours", "out", "over",
    "perhaps", "please", "same", "several", "shall", "she", "should", "since", "so", "some",
    "soon", "still", "such", "suddenly", "than", "that", "the", "their", "theirs", "them",
    "then", "there", "these", "they", "this", "those", "though", "through", "thus", "to",
    "today", "tomorrow", "too", "under", "until", "up", "upon", "us", "very", "was", "we",
    "well", "were", "what", "whatever", "when", "whenever", "where", "whether", "which",
    "while", "who", "whom", "whose", "why", "will", "with", "within", "without", "would", "yes",
    "yesterday", "yet", "you", "your", "yours", "yourself",
];

/// Lowercases and collapses internal whitespace. `None` for blank input.
pub fn canonicalize(surface: &str) -> Option<String> {
    let canonical = surface
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ");
    (!canonical.is_empty()).then_some(canonical)
}

/// Common-noun lexicon matched longest-first on lowercase token sequences.
#[derive(Debug, Clone, Default)]
pub struct NounLexicon {
    terms: HashSet<Vec<String>>,
    max_len: usize,
}

impl NounLexicon {
    pub fn new<I, S>(terms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lexicon = Self::default();
        for term in terms {
            let words: Vec<String> = WordPunctTokenizer
                .split(&term.as_ref().to_lowercase())
                .into_iter()
                .map(|t| t.text)
                .collect();
            if words.is_empty() {
                continue;
            }
            lexicon.max_len = lexicon.max_len.max(words.len());
            lexicon.terms.insert(words);
        }
        lexicon
    }

    /// One term per line, UTF-8. Blank lines and `#` comments are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        ))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms as space-joined tokens, sorted. Feeding them back to
    /// [`NounLexicon::new`] yields an equal lexicon.
    pub fn terms(&self) -> Vec<String> {
        let mut out: Vec<String> = self.terms.iter().map(|t| t.join(" ")).collect();
        out.sort();
        out
    }

    fn longest_match(&self, words: &[String]) -> usize {
        let upper = self.max_len.min(words.len());
        (1..=upper)
            .rev()
            .find(|&len| self.terms.contains(&words[..len]))
            .unwrap_or(0)
    }
}

/// Default extractor: maximal runs of capitalized words (minus leading
/// stopwords) plus lexicon-listed common nouns.
#[derive(Debug, Clone, Default)]
pub struct RuleBasedExtractor {
    lexicon: NounLexicon,
}

impl RuleBasedExtractor {
    pub fn new(lexicon: NounLexicon) -> Self {
        Self { lexicon }
    }

    pub fn lexicon(&self) -> &NounLexicon {
        &self.lexicon
    }
}

fn is_word(tok: &Token) -> bool {
    tok.text.chars().any(char::is_alphanumeric)
}

fn is_capitalized(tok: &Token) -> bool {
    tok.text.chars().next().is_some_and(char::is_uppercase)
}

fn is_stopword(tok: &Token) -> bool {
    STOPWORDS.contains(&tok.text.to_lowercase().as_str())
}

impl EntityExtractor for RuleBasedExtractor {
    fn id(&self) -> String {
        format!("rule-based:lexicon={}", self.lexicon.len())
    }

    fn extract(&self, sentence: &str) -> Result<Vec<String>, BackendError> {
        let tokens = WordPunctTokenizer.split(sentence);
        let mut mentions = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let tok = &tokens[i];
            if !is_word(tok) {
                i += 1;
                continue;
            }
            if is_capitalized(tok) {
                let mut end = i;
                while end < tokens.len() && is_word(&tokens[end]) && is_capitalized(&tokens[end]) {
                    end += 1;
                }
                let mut start = i;
                while start < end && is_stopword(&tokens[start]) {
                    start += 1;
                }
                if start < end {
                    let words: Vec<&str> = tokens[start..end].iter().map(|t| t.text.as_str()).collect();
                    mentions.push(words.join(" "));
                }
                i = end;
                continue;
            }
            if !self.lexicon.is_empty() {
                let mut words = Vec::with_capacity(self.lexicon.max_len);
                for t in tokens[i..].iter().take(self.lexicon.max_len) {
                    if !is_word(t) || is_capitalized(t) {
                        break;
                    }
                    words.push(t.text.to_lowercase());
                }
                let len = self.lexicon.longest_match(&words);
                if len > 0 {
                    mentions.push(words[..len].join(" "));
                    i += len;
                    continue;
                }
            }
            i += 1;
        }
        Ok(mentions)
    }
}

/// Unified entity with its occurrence count in some span of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityCount {
    pub canonical: String,
    pub surface_forms: BTreeSet<String>,
    pub count: u32,
}

/// Extracts and unifies the entities of one sentence, in order of first
/// appearance.
pub fn extract_entities(
    sentence: &str,
    extractor: &dyn EntityExtractor,
) -> Result<Vec<EntityCount>, BackendError> {
    let mut out: Vec<EntityCount> = Vec::new();
    let mut position: HashMap<String, usize> = HashMap::new();
    for surface in extractor.extract(sentence)? {
        let Some(canonical) = canonicalize(&surface) else {
            continue;
        };
        match position.get(&canonical) {
            Some(&idx) => {
                out[idx].count += 1;
                out[idx].surface_forms.insert(surface);
            }
            None => {
                position.insert(canonical.clone(), out.len());
                out.push(EntityCount {
                    canonical,
                    surface_forms: BTreeSet::from([surface]),
                    count: 1,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(sentence: &str, extractor: &RuleBasedExtractor) -> Vec<(String, u32)> {
        extract_entities(sentence, extractor)
            .unwrap()
            .into_iter()
            .map(|e| (e.canonical, e.count))
            .collect()
    }

    #[test]
    fn capitalized_runs_and_lexicon() {
        let ex = RuleBasedExtractor::new(NounLexicon::new(["cup", "house cup"]));
        assert_eq!(
            names("Slytherin won the House Cup", &ex),
            [("slytherin".to_string(), 1), ("house cup".to_string(), 1)]
        );
        assert_eq!(
            names("the house cup is a cup", &ex),
            [("house cup".to_string(), 1), ("cup".to_string(), 1)]
        );
    }

    #[test]
    fn no_entities() {
        assert!(names("it rained today", &RuleBasedExtractor::default()).is_empty());
    }

    #[test]
    fn repeated_mentions_are_unified() {
        let ex = RuleBasedExtractor::default();
        assert_eq!(names("Harry met Harry", &ex), [("harry".to_string(), 2)]);
        let all = extract_entities("Harry met HARRY", &ex).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].surface_forms.len(), 2);
    }

    #[test]
    fn leading_stopwords_are_dropped() {
        let ex = RuleBasedExtractor::default();
        assert_eq!(
            names("Has Slytherin won the House Cup?", &ex),
            [("slytherin".to_string(), 1), ("house cup".to_string(), 1)]
        );
        assert_eq!(names("The Burrow was quiet", &ex), [("burrow".to_string(), 1)]);
        assert!(names("I think so", &ex).is_empty());
    }

    #[test]
    fn punctuation_breaks_runs() {
        let ex = RuleBasedExtractor::default();
        assert_eq!(
            names("Ron, Hermione and Harry.", &ex),
            [
                ("ron".to_string(), 1),
                ("hermione".to_string(), 1),
                ("harry".to_string(), 1)
            ]
        );
    }

    #[test]
    fn canonical_form() {
        assert_eq!(canonicalize("  House \t Cup "), Some("house cup".to_string()));
        assert_eq!(canonicalize("   "), None);
    }

    #[test]
    fn lexicon_file_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nouns.txt");
        std::fs::write(&path, "wand\n# comment\n\ninvisibility cloak\n").unwrap();
        let lexicon = NounLexicon::load(&path).unwrap();
        assert_eq!(lexicon.len(), 2);
        let ex = RuleBasedExtractor::new(lexicon);
        assert_eq!(
            names("his wand and the invisibility cloak", &ex),
            [("wand".to_string(), 1), ("invisibility cloak".to_string(), 1)]
        );
    }
}
