use std::collections::HashSet;
use std::fmt;

use super::{AnnotatedDocument, Document, MentionKind};

/// Corpus-level counts; averages are per document except tokens per sentence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StatsReport {
    pub docs: usize,
    pub sentences: usize,
    pub turns: usize,
    pub tokens: usize,
    pub anaphors: usize,
    pub antecedents: usize,
    /// Sum over documents of the number of distinct speakers.
    pub speakers: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl StatsReport {
    pub fn avg_sentences(&self) -> f64 {
        ratio(self.sentences, self.docs)
    }

    pub fn avg_tokens_per_sentence(&self) -> f64 {
        ratio(self.tokens, self.sentences)
    }

    pub fn avg_turns(&self) -> f64 {
        ratio(self.turns, self.docs)
    }

    pub fn avg_anaphors(&self) -> f64 {
        ratio(self.anaphors, self.docs)
    }

    pub fn avg_antecedents(&self) -> f64 {
        ratio(self.antecedents, self.docs)
    }

    pub fn avg_speakers(&self) -> f64 {
        ratio(self.speakers, self.docs)
    }

    pub fn merge(&mut self, other: &StatsReport) {
        self.docs += other.docs;
        self.sentences += other.sentences;
        self.turns += other.turns;
        self.tokens += other.tokens;
        self.anaphors += other.anaphors;
        self.antecedents += other.antecedents;
        self.speakers += other.speakers;
    }

    pub const TSV_HEADER: &'static str = "docs\tsents\tturns\tavg_sents\tavg_toks_per_sent\tavg_turns\tavg_ana\tavg_ante\tavg_speakers";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}",
            self.docs,
            self.sentences,
            self.turns,
            self.avg_sentences(),
            self.avg_tokens_per_sentence(),
            self.avg_turns(),
            self.avg_anaphors(),
            self.avg_antecedents(),
            self.avg_speakers()
        )
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total docs              {}", self.docs)?;
        writeln!(f, "total sents             {}", self.sentences)?;
        writeln!(f, "total turns             {}", self.turns)?;
        writeln!(f, "avg sents per doc       {:.1}", self.avg_sentences())?;
        writeln!(
            f,
            "avg tokens per sent     {:.1}",
            self.avg_tokens_per_sentence()
        )?;
        writeln!(f, "avg turns per doc       {:.1}", self.avg_turns())?;
        writeln!(f, "avg anaphors per doc    {:.1}", self.avg_anaphors())?;
        writeln!(f, "avg antecedents per doc {:.1}", self.avg_antecedents())?;
        write!(f, "avg speakers per doc    {:.1}", self.avg_speakers())
    }
}

/// A turn is a maximal run of consecutive utterances by the same speaker.
pub fn count_turns(doc: &Document) -> usize {
    let mut turns = 0;
    let mut prev: Option<&str> = None;
    for u in &doc.utterances {
        if prev != Some(u.speaker.as_str()) {
            turns += 1;
            prev = Some(&u.speaker);
        }
    }
    turns
}

pub fn corpus_stats(corpus: &[AnnotatedDocument]) -> StatsReport {
    let mut report = StatsReport::default();
    for d in corpus {
        let doc = &d.document;
        report.docs += 1;
        report.sentences += doc.utterances.len();
        report.turns += count_turns(doc);
        report.tokens += doc.token_count();
        report.speakers += doc
            .utterances
            .iter()
            .map(|u| u.speaker.as_str())
            .collect::<HashSet<_>>()
            .len();
        if let Some(c) = &d.clusters {
            for m in c.mentions() {
                match m.kind {
                    MentionKind::Anaphor => report.anaphors += 1,
                    MentionKind::Utterance => report.antecedents += 1,
                }
            }
        }
    }
    report
}
