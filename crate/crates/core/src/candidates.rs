//! Candidate anaphors (spans whose surface form was a gold anaphor in
//! training) and candidate antecedents (the anaphor's utterance and the
//! preceding `window` utterances).

use std::collections::BTreeSet;

use log::warn;

use crate::corpus::{AnnotatedDocument, Document, SpanRef};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ANAPHOR_WIDTH: usize = 15;
pub const DEFAULT_WINDOW: usize = 10;

/// Lowercased token sequences observed as gold anaphors in training.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AnaphorLexicon {
    forms: BTreeSet<Vec<String>>,
    max_form_len: usize,
}

#[derive(Clone, Debug)]
pub struct LexiconBuild {
    pub lexicon: AnaphorLexicon,
    /// Surface forms dropped for exceeding the maximum anaphor width.
    pub excluded: Vec<String>,
}

impl AnaphorLexicon {
    pub fn from_forms<I, F>(forms: I) -> Self
    where
        I: IntoIterator<Item = F>,
        F: AsRef<str>,
    {
        let mut lex = AnaphorLexicon::default();
        for f in forms {
            lex.insert(
                f.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect(),
            );
        }
        lex
    }

    fn insert(&mut self, form: Vec<String>) {
        if form.is_empty() {
            return;
        }
        self.max_form_len = self.max_form_len.max(form.len());
        self.forms.insert(form);
    }

    pub fn build(training: &[AnnotatedDocument], max_width: usize) -> Result<LexiconBuild> {
        if training.is_empty() {
            return Err(Error::Invalid(
                "cannot build an anaphor lexicon from an empty training corpus".into(),
            ));
        }
        let mut lexicon = AnaphorLexicon::default();
        let mut excluded = Vec::new();
        for d in training {
            let Some(gold) = &d.clusters else { continue };
            for m in gold.anaphors() {
                let form: Vec<String> = d
                    .document
                    .tokens(m.span)
                    .iter()
                    .map(|t| t.lower())
                    .collect();
                if form.len() > max_width {
                    let surface = form.join(" ");
                    warn!(
                        "{}: anaphor {} ({} tokens) exceeds max width {}; excluded from lexicon",
                        d.doc_id(),
                        m.span,
                        form.len(),
                        max_width
                    );
                    excluded.push(surface);
                } else {
                    lexicon.insert(form);
                }
            }
        }
        if lexicon.is_empty() {
            return Err(Error::Invalid(
                "training corpus contains no usable gold anaphors".into(),
            ));
        }
        Ok(LexiconBuild { lexicon, excluded })
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn max_form_len(&self) -> usize {
        self.max_form_len
    }

    pub fn forms(&self) -> impl Iterator<Item = &[String]> {
        self.forms.iter().map(Vec::as_slice)
    }

    /// Membership of a space-joined lowercase surface form.
    pub fn contains(&self, surface: &str) -> bool {
        let form: Vec<String> = surface.split_whitespace().map(str::to_lowercase).collect();
        self.forms.contains(&form)
    }
}

/// Every intra-utterance span whose lowercased tokens form a lexicon entry,
/// sorted by (utterance, start, end). Overlapping matches are all kept.
pub fn extract_candidate_anaphors(doc: &Document, lexicon: &AnaphorLexicon) -> Vec<SpanRef> {
    let mut out = Vec::new();
    for u in &doc.utterances {
        let lower: Vec<String> = u.tokens.iter().map(|t| t.lower()).collect();
        for start in 0..lower.len() {
            let longest = lexicon.max_form_len.min(lower.len() - start);
            for len in 1..=longest {
                if lexicon.forms.contains(&lower[start..start + len]) {
                    out.push(SpanRef::new(u.index, start, start + len - 1));
                }
            }
        }
    }
    out
}

/// Candidate antecedents of one anaphor; the dummy antecedent is implicit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub anaphor: SpanRef,
    /// Utterance indices, ascending.
    pub antecedents: Vec<usize>,
}

impl CandidateSet {
    /// Number of choices including the dummy.
    pub fn len_with_dummy(&self) -> usize {
        self.antecedents.len() + 1
    }
}

pub fn candidate_antecedents(anaphor: SpanRef, window: usize) -> CandidateSet {
    let first = anaphor.utt.saturating_sub(window);
    CandidateSet {
        anaphor,
        antecedents: (first..=anaphor.utt).collect(),
    }
}
