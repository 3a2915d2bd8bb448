//! Dialogue data model: documents made of speaker-tagged utterances, token
//! spans, mentions and clusterings of mentions.

mod jsonl;
mod lexicon;
mod stats;

pub use jsonl::{
    parse_document, read_corpus, read_corpus_str, serialize_document, validate_system_clustering,
    write_corpus, Strictness,
};
pub use lexicon::{is_unimportant, FilterLexicon, DEFAULT_FILTER_LEXICON};
pub use stats::{corpus_stats, count_turns, StatsReport};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Coarse part-of-speech tag set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Pron,
    Punct,
    Intj,
    Other,
}

impl Pos {
    pub fn parse(tag: &str) -> Option<Pos> {
        Some(match tag {
            "NOUN" => Pos::Noun,
            "VERB" => Pos::Verb,
            "ADJ" => Pos::Adj,
            "PRON" => Pos::Pron,
            "PUNCT" => Pos::Punct,
            "INTJ" => Pos::Intj,
            "OTHER" => Pos::Other,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Pron => "PRON",
            Pos::Punct => "PUNCT",
            Pos::Intj => "INTJ",
            Pos::Other => "OTHER",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub pos: Option<Pos>,
}

impl Token {
    pub fn new(text: impl Into<String>, pos: Option<Pos>) -> Self {
        Token {
            text: text.into(),
            pos,
        }
    }

    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Utterance {
    pub index: usize,
    pub speaker: String,
    pub tokens: Vec<Token>,
}

impl Utterance {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Span covering the whole utterance.
    pub fn span(&self) -> SpanRef {
        SpanRef::new(self.index, 0, self.tokens.len().saturating_sub(1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub utterances: Vec<Utterance>,
}

impl Document {
    /// Builds a document from `(speaker, tokens)` pairs, assigning indices.
    pub fn new(doc_id: impl Into<String>, utterances: Vec<(String, Vec<Token>)>) -> Self {
        Document {
            doc_id: doc_id.into(),
            utterances: utterances
                .into_iter()
                .enumerate()
                .map(|(index, (speaker, tokens))| Utterance {
                    index,
                    speaker,
                    tokens,
                })
                .collect(),
        }
    }

    pub fn token_count(&self) -> usize {
        self.utterances.iter().map(Utterance::len).sum()
    }

    /// Offset of the first token of utterance `utt` in the flattened token stream.
    pub fn utterance_offset(&self, utt: usize) -> usize {
        self.utterances[..utt].iter().map(Utterance::len).sum()
    }

    /// Offsets of every utterance's first token, plus the total at the end.
    pub fn utterance_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.utterances.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for u in &self.utterances {
            acc += u.len();
            offsets.push(acc);
        }
        offsets
    }

    pub fn contains(&self, span: SpanRef) -> bool {
        span.start <= span.end
            && self
                .utterances
                .get(span.utt)
                .is_some_and(|u| span.end < u.len())
    }

    pub fn tokens(&self, span: SpanRef) -> &[Token] {
        &self.utterances[span.utt].tokens[span.start..=span.end]
    }

    /// Lowercased surface form of a span, tokens joined by single spaces.
    pub fn surface(&self, span: SpanRef) -> String {
        self.tokens(span)
            .iter()
            .map(Token::lower)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// An intra-utterance token span, inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpanRef {
    pub utt: usize,
    pub start: usize,
    pub end: usize,
}

impl SpanRef {
    pub fn new(utt: usize, start: usize, end: usize) -> Self {
        SpanRef { utt, start, end }
    }

    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }
}

impl fmt::Display for SpanRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(u{}, {}..{})", self.utt, self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MentionKind {
    Anaphor,
    Utterance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mention {
    pub span: SpanRef,
    pub kind: MentionKind,
}

impl Mention {
    pub fn anaphor(span: SpanRef) -> Self {
        Mention {
            span,
            kind: MentionKind::Anaphor,
        }
    }

    pub fn utterance(doc: &Document, utt: usize) -> Self {
        Mention {
            span: doc.utterances[utt].span(),
            kind: MentionKind::Utterance,
        }
    }

    pub fn is_anaphor(&self) -> bool {
        self.kind == MentionKind::Anaphor
    }
}

/// A partition of (some of) a document's mentions.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Clustering {
    pub doc_id: String,
    pub clusters: Vec<Vec<Mention>>,
}

impl Clustering {
    pub fn new(doc_id: impl Into<String>, clusters: Vec<Vec<Mention>>) -> Self {
        Clustering {
            doc_id: doc_id.into(),
            clusters,
        }
    }

    pub fn mentions(&self) -> impl Iterator<Item = &Mention> {
        self.clusters.iter().flatten()
    }

    pub fn anaphors(&self) -> impl Iterator<Item = &Mention> {
        self.mentions().filter(|m| m.is_anaphor())
    }

    /// Drops clusters with fewer than two mentions.
    pub fn without_singletons(&self) -> Clustering {
        Clustering {
            doc_id: self.doc_id.clone(),
            clusters: self
                .clusters
                .iter()
                .filter(|c| c.len() >= 2)
                .cloned()
                .collect(),
        }
    }
}

/// A document together with its (optional) gold annotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedDocument {
    pub document: Document,
    pub clusters: Option<Clustering>,
}

impl AnnotatedDocument {
    pub fn doc_id(&self) -> &str {
        &self.document.doc_id
    }

    /// Gold clustering, or an empty one for unannotated input.
    pub fn clustering(&self) -> Clustering {
        self.clusters
            .clone()
            .unwrap_or_else(|| Clustering::new(self.document.doc_id.clone(), Vec::new()))
    }
}

pub type Corpus = Vec<AnnotatedDocument>;
