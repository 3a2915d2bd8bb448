//! JSON-lines corpus format, one document per line.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AnnotatedDocument, Clustering, Document, Mention, MentionKind, Pos, SpanRef, Token, Utterance,
};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    doc_id: String,
    utterances: Vec<RawUtterance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clusters: Option<Vec<Vec<RawMention>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUtterance {
    speaker: String,
    tokens: Vec<String>,
    #[serde(default)]
    pos: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMention {
    utt: usize,
    start: usize,
    end: usize,
    kind: MentionKind,
}

/// How strictly cluster annotations are validated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strictness {
    /// Gold annotation: every cluster has at least one anaphor and one
    /// utterance mention, so singletons are rejected.
    Gold,
    /// System output: singletons and single-kind clusters are tolerated.
    System,
}

/// Parses one JSON-lines record. `line` is 1-based and only used in messages.
pub fn parse_document(
    record: &str,
    line: usize,
    strictness: Strictness,
) -> Result<AnnotatedDocument> {
    let raw: RawDocument =
        serde_json::from_str(record).map_err(|source| Error::Json { line, source })?;
    let doc_id = raw.doc_id;
    if doc_id.is_empty() {
        return Err(Error::validation(
            "<empty>",
            format!("line {line}: empty doc_id"),
        ));
    }

    let mut utterances = Vec::with_capacity(raw.utterances.len());
    for (index, ru) in raw.utterances.into_iter().enumerate() {
        if ru.tokens.is_empty() {
            return Err(Error::validation(
                &doc_id,
                format!("utterance {index} has no tokens"),
            ));
        }
        if let Some(i) = ru.tokens.iter().position(String::is_empty) {
            return Err(Error::validation(
                &doc_id,
                format!("utterance {index}, token {i} is empty"),
            ));
        }
        let tags: Vec<Option<Pos>> = match ru.pos {
            None => vec![None; ru.tokens.len()],
            Some(tags) => {
                if tags.len() != ru.tokens.len() {
                    return Err(Error::validation(
                        &doc_id,
                        format!(
                            "utterance {index} has {} tokens but {} pos tags",
                            ru.tokens.len(),
                            tags.len()
                        ),
                    ));
                }
                tags.iter()
                    .map(|t| {
                        Pos::parse(t).map(Some).ok_or_else(|| {
                            Error::validation(
                                &doc_id,
                                format!("utterance {index}: unknown pos tag {t:?}"),
                            )
                        })
                    })
                    .collect::<Result<_>>()?
            }
        };
        let tokens = ru
            .tokens
            .into_iter()
            .zip(tags)
            .map(|(text, pos)| Token { text, pos })
            .collect();
        utterances.push(Utterance {
            index,
            speaker: ru.speaker,
            tokens,
        });
    }
    let document = Document { doc_id, utterances };

    let clusters = match raw.clusters {
        None => None,
        Some(raw_clusters) => {
            let clusters = raw_clusters
                .into_iter()
                .map(|c| {
                    c.into_iter()
                        .map(|m| Mention {
                            span: SpanRef::new(m.utt, m.start, m.end),
                            kind: m.kind,
                        })
                        .collect()
                })
                .collect();
            let clustering = Clustering::new(document.doc_id.clone(), clusters);
            validate_clustering(&document, &clustering, strictness)?;
            Some(clustering)
        }
    };

    Ok(AnnotatedDocument { document, clusters })
}

/// Checks the clustering invariants against `doc`.
pub(crate) fn validate_clustering(
    doc: &Document,
    clustering: &Clustering,
    strictness: Strictness,
) -> Result<()> {
    let doc_id = &doc.doc_id;
    let mut seen = HashSet::new();
    for (ci, cluster) in clustering.clusters.iter().enumerate() {
        for m in cluster {
            if !doc.contains(m.span) {
                return Err(Error::validation(
                    doc_id,
                    format!("span {} is out of bounds", m.span),
                ));
            }
            if m.kind == MentionKind::Utterance && m.span != doc.utterances[m.span.utt].span() {
                return Err(Error::validation(
                    doc_id,
                    format!(
                        "utterance mention {} does not cover the whole utterance",
                        m.span
                    ),
                ));
            }
            if !seen.insert(*m) {
                return Err(Error::validation(
                    doc_id,
                    format!("mention {} {:?} appears more than once", m.span, m.kind),
                ));
            }
        }
        if strictness == Strictness::Gold {
            let anaphors = cluster.iter().filter(|m| m.is_anaphor()).count();
            if cluster.len() < 2 || anaphors == 0 || anaphors == cluster.len() {
                return Err(Error::validation(
                    doc_id,
                    format!("gold cluster {ci} must contain at least one anaphor and one utterance mention"),
                ));
            }
        }
    }
    Ok(())
}

/// Checks a predicted clustering against the document it annotates.
pub fn validate_system_clustering(doc: &Document, clustering: &Clustering) -> Result<()> {
    validate_clustering(doc, clustering, Strictness::System)
}

pub fn serialize_document(doc: &AnnotatedDocument) -> String {
    let raw = RawDocument {
        doc_id: doc.document.doc_id.clone(),
        utterances: doc
            .document
            .utterances
            .iter()
            .map(|u| RawUtterance {
                speaker: u.speaker.clone(),
                tokens: u.tokens.iter().map(|t| t.text.clone()).collect(),
                pos: u
                    .tokens
                    .iter()
                    .map(|t| t.pos.map(|p| p.as_str().to_string()))
                    .collect(),
            })
            .collect(),
        clusters: doc.clusters.as_ref().map(|c| {
            c.clusters
                .iter()
                .map(|cluster| {
                    cluster
                        .iter()
                        .map(|m| RawMention {
                            utt: m.span.utt,
                            start: m.span.start,
                            end: m.span.end,
                            kind: m.kind,
                        })
                        .collect()
                })
                .collect()
        }),
    };
    serde_json::to_string(&raw).expect("corpus records always serialize")
}

/// Parses a whole corpus; blank lines are skipped, doc ids must be unique.
pub fn read_corpus_str(text: &str, strictness: Strictness) -> Result<Vec<AnnotatedDocument>> {
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_document(line, i + 1, strictness)?;
        if !ids.insert(doc.document.doc_id.clone()) {
            return Err(Error::validation(
                &doc.document.doc_id,
                format!("line {}: duplicate doc_id", i + 1),
            ));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn read_corpus(
    path: impl AsRef<Path>,
    strictness: Strictness,
) -> Result<Vec<AnnotatedDocument>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_corpus_str(&text, strictness)
}

pub fn write_corpus(path: impl AsRef<Path>, docs: &[AnnotatedDocument]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for doc in docs {
        writeln!(out, "{}", serialize_document(doc)).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
