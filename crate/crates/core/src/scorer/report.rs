//! Corpus-level score reports.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use super::metrics::{CorefCounts, Counts, Prf};
use super::{conll_counts, recognition_counts};
use crate::corpus::{AnnotatedDocument, Clustering, Document, Mention, SpanRef};
use crate::error::{Error, Result};

/// How anaphors are read off a system clustering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RecognitionConvention {
    /// Mentions explicitly marked as anaphors.
    #[default]
    Marked,
    /// Every mention of a cluster except the earliest one.
    AllButFirst,
}

impl FromStr for RecognitionConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marked" => Ok(RecognitionConvention::Marked),
            "all-but-first" => Ok(RecognitionConvention::AllButFirst),
            _ => Err(Error::Config(format!(
                "unknown recognition convention {s:?} (expected marked or all-but-first)"
            ))),
        }
    }
}

/// Distances 0 through 5, then everything beyond.
pub const DISTANCE_BINS: usize = 7;

pub fn link_distance_bin(distance: usize) -> usize {
    distance.min(DISTANCE_BINS - 1)
}

/// Which anaphor forms get their own row in the per-anaphor table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum FormGrouping {
    /// One row per distinct lowercase surface form.
    #[default]
    Each,
    /// Listed forms get rows; everything else is pooled under `others`.
    Listed(BTreeSet<String>),
}

impl FormGrouping {
    pub const OTHERS: &'static str = "others";

    pub fn label(&self, form: &str) -> String {
        match self {
            FormGrouping::Each => form.to_string(),
            FormGrouping::Listed(keep) if keep.contains(form) => form.to_string(),
            FormGrouping::Listed(_) => Self::OTHERS.to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScoreOptions {
    pub convention: RecognitionConvention,
    pub per_anaphor: bool,
    pub per_distance: bool,
    pub grouping: FormGrouping,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormRow {
    pub form: String,
    /// Gold anaphors with this form.
    pub count: usize,
    pub coref: CorefCounts,
    pub conll: f64,
    pub recognition: Prf,
}

/// Link counts per distance bin.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DistanceRow {
    pub gold: [usize; DISTANCE_BINS],
    pub correct: [usize; DISTANCE_BINS],
    pub incorrect: [usize; DISTANCE_BINS],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub documents: usize,
    pub coref: CorefCounts,
    pub muc: Prf,
    pub b3: Prf,
    pub ceaf_e: Prf,
    pub conll: f64,
    pub recognition: Prf,
    pub per_anaphor: Option<Vec<FormRow>>,
    pub per_distance: Option<DistanceRow>,
}

fn forms_of(
    doc: &Document,
    spans: &BTreeSet<SpanRef>,
    grouping: &FormGrouping,
) -> Vec<(SpanRef, String)> {
    spans
        .iter()
        .map(|&s| (s, grouping.label(&doc.surface(s))))
        .collect()
}

fn restrict(c: &Clustering, doc: &Document, label: &str, grouping: &FormGrouping) -> Clustering {
    Clustering::new(
        c.doc_id.clone(),
        c.clusters
            .iter()
            .filter(|cluster| {
                cluster
                    .iter()
                    .any(|m| m.is_anaphor() && grouping.label(&doc.surface(m.span)) == label)
            })
            .cloned()
            .collect(),
    )
}

// (anaphor span, antecedent utterance) pairs of a clustering.
fn links(c: &Clustering) -> Vec<(SpanRef, usize)> {
    let mut out = Vec::new();
    for cluster in &c.clusters {
        let utterances: Vec<&Mention> = cluster.iter().filter(|m| !m.is_anaphor()).collect();
        for a in cluster.iter().filter(|m| m.is_anaphor()) {
            out.extend(utterances.iter().map(|u| (a.span, u.span.utt)));
        }
    }
    out
}

/// Scores aligned `(document, gold, system)` triples. System singletons are dropped first.
pub fn score_documents(
    docs: &[(&Document, &Clustering, &Clustering)],
    opts: &ScoreOptions,
) -> ScoreReport {
    let mut coref = CorefCounts::default();
    let mut recognition = Counts::default();
    let mut per_form: BTreeMap<String, (usize, CorefCounts, Counts)> = BTreeMap::new();
    let mut distance = DistanceRow::default();

    for &(doc, gold, sys) in docs {
        let sys = sys.without_singletons();
        coref += conll_counts(gold, &sys);
        recognition += recognition_counts(gold, &sys, opts.convention);

        if opts.per_anaphor {
            let gold_spans = super::anaphor_spans(gold, RecognitionConvention::Marked);
            let sys_spans = super::anaphor_spans(&sys, opts.convention);
            let gold_forms = forms_of(doc, &gold_spans, &opts.grouping);
            let sys_forms = forms_of(doc, &sys_spans, &opts.grouping);
            let labels: BTreeSet<&String> = gold_forms
                .iter()
                .chain(&sys_forms)
                .map(|(_, f)| f)
                .collect();
            for label in labels {
                let g = restrict(gold, doc, label, &opts.grouping);
                let s = restrict(&sys, doc, label, &opts.grouping);
                let gs: BTreeSet<SpanRef> = gold_forms
                    .iter()
                    .filter(|(_, f)| f == label)
                    .map(|(s, _)| *s)
                    .collect();
                let ss: BTreeSet<SpanRef> = sys_forms
                    .iter()
                    .filter(|(_, f)| f == label)
                    .map(|(s, _)| *s)
                    .collect();
                let correct = gs.intersection(&ss).count() as f64;
                let entry = per_form.entry(label.clone()).or_default();
                entry.0 += gs.len();
                entry.1 += conll_counts(&g, &s);
                entry.2 += Counts {
                    precision_num: correct,
                    precision_den: ss.len() as f64,
                    recall_num: correct,
                    recall_den: gs.len() as f64,
                };
            }
        }

        if opts.per_distance {
            let gold_links: HashMap<(SpanRef, usize), ()> =
                links(gold).into_iter().map(|l| (l, ())).collect();
            for &(a, y) in gold_links.keys() {
                distance.gold[link_distance_bin(a.utt.abs_diff(y))] += 1;
            }
            let sys_links: BTreeSet<(SpanRef, usize)> = links(&sys).into_iter().collect();
            for (a, y) in sys_links {
                let bin = link_distance_bin(a.utt.abs_diff(y));
                if gold_links.contains_key(&(a, y)) {
                    distance.correct[bin] += 1;
                } else {
                    distance.incorrect[bin] += 1;
                }
            }
        }
    }

    let per_anaphor = opts.per_anaphor.then(|| {
        let mut rows: Vec<FormRow> = per_form
            .into_iter()
            .map(|(form, (count, coref, rec))| FormRow {
                form,
                count,
                conll: coref.conll(),
                coref,
                recognition: rec.prf(),
            })
            .collect();
        rows.sort_by(|a, b| {
            let others = |r: &FormRow| r.form == FormGrouping::OTHERS;
            others(a)
                .cmp(&others(b))
                .then(b.count.cmp(&a.count))
                .then(a.form.cmp(&b.form))
        });
        rows
    });

    ScoreReport {
        documents: docs.len(),
        muc: coref.muc.prf(),
        b3: coref.b3.prf(),
        ceaf_e: coref.ceaf_e.prf(),
        conll: coref.conll(),
        coref,
        recognition: recognition.prf(),
        per_anaphor,
        per_distance: opts.per_distance.then_some(distance),
    }
}

/// Scores system records against gold records matched by `doc_id`.
///
/// Gold documents without a system record count as having no predictions.
pub fn score_corpus(
    gold: &[AnnotatedDocument],
    sys: &[AnnotatedDocument],
    opts: &ScoreOptions,
) -> Result<ScoreReport> {
    let gold_ids: BTreeSet<&str> = gold.iter().map(|d| d.doc_id()).collect();
    let mut by_id: HashMap<&str, Clustering> = HashMap::new();
    for s in sys {
        if !gold_ids.contains(s.doc_id()) {
            return Err(Error::validation(
                s.doc_id(),
                "system document has no gold counterpart",
            ));
        }
        by_id.insert(s.doc_id(), s.clustering());
    }
    let mut owned = Vec::with_capacity(gold.len());
    for g in gold {
        let gold_clusters = g
            .clusters
            .clone()
            .ok_or_else(|| Error::validation(g.doc_id(), "gold document has no clusters"))?;
        let sys_clusters = by_id
            .remove(g.doc_id())
            .unwrap_or_else(|| Clustering::new(g.doc_id(), Vec::new()));
        crate::corpus::validate_system_clustering(&g.document, &sys_clusters)?;
        owned.push((&g.document, gold_clusters, sys_clusters));
    }
    let triples: Vec<(&Document, &Clustering, &Clustering)> =
        owned.iter().map(|(d, g, s)| (*d, g, s)).collect();
    Ok(score_documents(&triples, opts))
}

impl ScoreReport {
    /// Machine-readable report: one `section<TAB>...` row per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tprecision\trecall\tf1\n");
        for (name, p) in [
            ("muc", self.muc),
            ("b3", self.b3),
            ("ceaf_e", self.ceaf_e),
            ("recognition", self.recognition),
        ] {
            let _ = writeln!(
                out,
                "{name}\t{:.4}\t{:.4}\t{:.4}",
                p.precision, p.recall, p.f1
            );
        }
        let _ = writeln!(out, "conll\t\t\t{:.4}", self.conll);
        if let Some(rows) = &self.per_anaphor {
            out.push_str("\nform\tcount\tconll\tprecision\trecall\tf1\n");
            for r in rows {
                let p = r.recognition;
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
                    r.form, r.count, r.conll, p.precision, p.recall, p.f1
                );
            }
        }
        if let Some(d) = &self.per_distance {
            out.push_str("\nlinks\t0\t1\t2\t3\t4\t5\t>5\n");
            for (name, row) in [
                ("gold", &d.gold),
                ("correct", &d.correct),
                ("incorrect", &d.incorrect),
            ] {
                let cells: Vec<String> = row.iter().map(usize::to_string).collect();
                let _ = writeln!(out, "{name}\t{}", cells.join("\t"));
            }
        }
        out
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents    {}", self.documents)?;
        writeln!(f, "MUC          {}", self.muc)?;
        writeln!(f, "B3           {}", self.b3)?;
        writeln!(f, "CEAF_e       {}", self.ceaf_e)?;
        writeln!(f, "CoNLL        {:.4}", self.conll)?;
        write!(f, "Recognition  {}", self.recognition)?;
        if let Some(rows) = &self.per_anaphor {
            writeln!(
                f,
                "\n\n{:<16} {:>6} {:>8} {:>8} {:>8} {:>8}",
                "anaphor", "count", "CoNLL", "P", "R", "F1"
            )?;
            for r in rows {
                let p = r.recognition;
                write!(
                    f,
                    "\n{:<16} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                    r.form, r.count, r.conll, p.precision, p.recall, p.f1
                )?;
            }
        }
        if let Some(d) = &self.per_distance {
            write!(f, "\n\n{:<10}", "distance")?;
            for h in ["0", "1", "2", "3", "4", "5", ">5"] {
                write!(f, " {h:>5}")?;
            }
            for (name, row) in [
                ("gold", &d.gold),
                ("correct", &d.correct),
                ("incorrect", &d.incorrect),
            ] {
                write!(f, "\n{name:<10}")?;
                for v in row {
                    write!(f, " {v:>5}")?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
