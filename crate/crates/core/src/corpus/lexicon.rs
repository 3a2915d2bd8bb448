//! Filler-word and reporting-verb lexicon, and the "unimportant utterance" test built on it.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use super::{Pos, Token, Utterance};
use crate::error::{Error, Result};

/// The shipped lexicon: 40 filling words and 69 reporting verbs.
pub const DEFAULT_FILTER_LEXICON: &str = include_str!("../../data/filter_lexicon.txt");

/// Personal pronouns accepted as subjects inside otherwise empty utterances ("I agree").
const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FilterLexicon {
    pub filling_words: BTreeSet<String>,
    pub reporting_verbs: BTreeSet<String>,
    // Single tokens that count as filling words; multi-word entries contribute their parts.
    filler_tokens: HashSet<String>,
}

impl FilterLexicon {
    pub fn new(filling_words: BTreeSet<String>, reporting_verbs: BTreeSet<String>) -> Result<Self> {
        if filling_words.is_empty() || reporting_verbs.is_empty() {
            return Err(Error::LexiconFormat(
                "both sections must be non-empty".into(),
            ));
        }
        if let Some(w) = filling_words.intersection(&reporting_verbs).next() {
            return Err(Error::LexiconFormat(format!(
                "{w:?} is listed in both sections"
            )));
        }
        let filler_tokens = filling_words
            .iter()
            .flat_map(|w| w.split_whitespace().map(str::to_string))
            .collect();
        Ok(FilterLexicon {
            filling_words,
            reporting_verbs,
            filler_tokens,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        enum Section {
            None,
            Filling,
            Reporting,
        }
        let mut section = Section::None;
        let mut saw_filling = false;
        let mut saw_reporting = false;
        let mut filling = BTreeSet::new();
        let mut reporting = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "[filling]" => {
                    section = Section::Filling;
                    saw_filling = true;
                }
                "[reporting]" => {
                    section = Section::Reporting;
                    saw_reporting = true;
                }
                word => {
                    let word = word
                        .split_whitespace()
                        .collect::<Vec<_>>()
                        .join(" ")
                        .to_lowercase();
                    match section {
                        Section::None => {
                            return Err(Error::LexiconFormat(format!(
                                "line {}: word {word:?} before any section header",
                                i + 1
                            )))
                        }
                        Section::Filling => filling.insert(word),
                        Section::Reporting => reporting.insert(word),
                    };
                }
            }
        }
        if !saw_filling {
            return Err(Error::LexiconFormat(
                "missing [filling] section header".into(),
            ));
        }
        if !saw_reporting {
            return Err(Error::LexiconFormat(
                "missing [reporting] section header".into(),
            ));
        }
        FilterLexicon::new(filling, reporting)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FilterLexicon::parse(&text)
    }

    pub fn is_filling_word(&self, lower: &str) -> bool {
        self.filler_tokens.contains(lower)
    }

    pub fn is_reporting_verb(&self, lower: &str) -> bool {
        self.reporting_verbs.contains(lower)
    }

    pub fn contains(&self, lower: &str) -> bool {
        self.is_filling_word(lower) || self.is_reporting_verb(lower)
    }
}

impl Default for FilterLexicon {
    fn default() -> Self {
        FilterLexicon::parse(DEFAULT_FILTER_LEXICON).expect("shipped lexicon is well formed")
    }
}

pub(crate) fn is_punctuation(token: &Token) -> bool {
    match token.pos {
        Some(Pos::Punct) => true,
        Some(_) => false,
        None => !token.text.chars().any(char::is_alphanumeric),
    }
}

fn is_filtered_token(token: &Token, lex: &FilterLexicon) -> bool {
    let lower = token.lower();
    lex.contains(&lower)
        || token.pos == Some(Pos::Intj)
        || token.pos == Some(Pos::Pron)
        || PRONOUNS.contains(&lower.as_str())
        || is_punctuation(token)
}

/// True when the utterance carries no content: every token is a filling
/// word, reporting verb, interjection, punctuation or personal pronoun.
pub fn is_unimportant(utterance: &Utterance, lex: &FilterLexicon) -> bool {
    utterance.tokens.iter().all(|t| is_filtered_token(t, lex))
}
