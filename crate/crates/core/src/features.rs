//! Pairwise features between a candidate anaphor and a candidate antecedent utterance.

use std::collections::HashSet;

use crate::candidates::CandidateSet;
use crate::corpus::{is_unimportant, Document, FilterLexicon, Pos, SpanRef, Token};
use crate::error::{Error, Result};

/// Tokens per segment of the flattened document when computing segment distance.
pub const SEGMENT_LEN: usize = 128;
pub const SEGMENT_BUCKETS: usize = 8;
pub const COUNT_BUCKETS: usize = 6;

const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "to", "of", "in", "on", "at", "for",
    "with", "by", "from", "as", "and", "or", "but", "if", "so", "not", "no", "is", "are", "was",
    "were", "be", "been", "being", "am", "do", "does", "did", "have", "has", "had", "will",
    "would", "shall", "should", "can", "could", "may", "might", "must", "i", "you", "he", "she",
    "it", "we", "they", "me", "him", "her", "us", "them", "my", "your", "his", "its", "our",
    "their", "there", "here", "what", "which", "who", "whom", "whose", "when", "where", "why",
    "how", "than", "then", "too", "very", "just", "also", "both", "all",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AntecedentFeatures {
    pub n_words: usize,
    pub n_nouns: usize,
    pub n_verbs: usize,
    pub n_adjs: usize,
    pub n_content_overlap: usize,
    pub is_longest: bool,
    pub is_max_overlap: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PairFeatures {
    pub same_speaker: bool,
    pub segment_distance_bucket: usize,
    pub utterance_distance: usize,
    pub filtered_utterance_distance: usize,
    pub antecedent: AntecedentFeatures,
}

impl PairFeatures {
    /// Sentinel bundle for the dummy antecedent.
    pub fn dummy() -> Self {
        PairFeatures::default()
    }
}

pub fn utterance_distance(anaphor: SpanRef, antecedent: usize) -> Result<usize> {
    anaphor.utt.checked_sub(antecedent).ok_or_else(|| {
        Error::Invalid(format!(
            "antecedent utterance {antecedent} follows anaphor {anaphor}"
        ))
    })
}

/// Utterance distance that does not count unimportant utterances strictly between the two.
pub fn filtered_utterance_distance(
    doc: &Document,
    anaphor: SpanRef,
    antecedent: usize,
    lex: &FilterLexicon,
) -> Result<usize> {
    let raw = utterance_distance(anaphor, antecedent)?;
    if raw == 0 {
        return Ok(0);
    }
    let skipped = doc.utterances[antecedent + 1..anaphor.utt]
        .iter()
        .filter(|u| is_unimportant(u, lex))
        .count();
    Ok(raw - skipped)
}

pub fn segment_bucket(distance: usize) -> usize {
    match distance {
        0..=4 => distance,
        5..=7 => 5,
        8..=15 => 6,
        _ => 7,
    }
}

pub fn count_bucket(n: usize) -> usize {
    n.min(COUNT_BUCKETS - 1)
}

/// Content word: a noun, verb or adjective outside the filter lexicon. Untagged
/// tokens fall back to "alphanumeric and not a function word".
pub fn is_content_word(token: &Token, lex: &FilterLexicon) -> bool {
    let lower = token.lower();
    if lex.contains(&lower) {
        return false;
    }
    match token.pos {
        Some(p) => matches!(p, Pos::Noun | Pos::Verb | Pos::Adj),
        None => {
            token.text.chars().any(char::is_alphanumeric)
                && !FUNCTION_WORDS.contains(&lower.as_str())
        }
    }
}

fn content_set<'a>(
    tokens: impl IntoIterator<Item = &'a Token>,
    lex: &FilterLexicon,
) -> HashSet<String> {
    tokens
        .into_iter()
        .filter(|t| is_content_word(t, lex))
        .map(Token::lower)
        .collect()
}

/// Per-document precomputation shared by all pairs in the document.
pub struct DocumentFeatures<'a> {
    doc: &'a Document,
    lex: &'a FilterLexicon,
    offsets: Vec<usize>,
    // unimportant_before[i] = number of unimportant utterances with index < i
    unimportant_before: Vec<usize>,
    content: Vec<HashSet<String>>,
}

impl<'a> DocumentFeatures<'a> {
    pub fn new(doc: &'a Document, lex: &'a FilterLexicon) -> Self {
        let mut unimportant_before = Vec::with_capacity(doc.utterances.len() + 1);
        let mut acc = 0;
        unimportant_before.push(0);
        for u in &doc.utterances {
            if is_unimportant(u, lex) {
                acc += 1;
            }
            unimportant_before.push(acc);
        }
        DocumentFeatures {
            doc,
            lex,
            offsets: doc.utterance_offsets(),
            unimportant_before,
            content: doc
                .utterances
                .iter()
                .map(|u| content_set(&u.tokens, lex))
                .collect(),
        }
    }

    pub fn filtered_distance(&self, anaphor: SpanRef, antecedent: usize) -> usize {
        let raw = anaphor.utt - antecedent;
        if raw <= 1 {
            return raw;
        }
        let between =
            self.unimportant_before[anaphor.utt] - self.unimportant_before[antecedent + 1];
        raw - between
    }

    pub fn segment_distance(&self, anaphor: SpanRef, antecedent: usize) -> usize {
        let x_seg = (self.offsets[anaphor.utt] + anaphor.start) / SEGMENT_LEN;
        let y_seg = self.offsets[antecedent] / SEGMENT_LEN;
        x_seg.saturating_sub(y_seg)
    }

    /// Features of every candidate utterance in `set`, in the set's order.
    pub fn antecedent_features(&self, set: &CandidateSet) -> Vec<AntecedentFeatures> {
        let x = set.anaphor;
        let prefix = content_set(&self.doc.utterances[x.utt].tokens[..x.start], self.lex);
        let mut feats: Vec<AntecedentFeatures> = set
            .antecedents
            .iter()
            .map(|&y| {
                let tokens = &self.doc.utterances[y].tokens;
                let count = |p: Pos| tokens.iter().filter(|t| t.pos == Some(p)).count();
                AntecedentFeatures {
                    n_words: tokens.len(),
                    n_nouns: count(Pos::Noun),
                    n_verbs: count(Pos::Verb),
                    n_adjs: count(Pos::Adj),
                    n_content_overlap: self.content[y].intersection(&prefix).count(),
                    is_longest: false,
                    is_max_overlap: false,
                }
            })
            .collect();
        // Candidates are ascending, so scanning from the back breaks ties toward the nearer one.
        if let Some(i) = argmax_last(feats.iter().map(|f| f.n_words)) {
            feats[i].is_longest = true;
        }
        if let Some(i) = argmax_last(feats.iter().map(|f| f.n_content_overlap)) {
            feats[i].is_max_overlap = true;
        }
        feats
    }

    /// Full bundle for every candidate utterance of `set`.
    pub fn pair_features(&self, set: &CandidateSet) -> Vec<PairFeatures> {
        let x = set.anaphor;
        let speaker = &self.doc.utterances[x.utt].speaker;
        self.antecedent_features(set)
            .into_iter()
            .zip(&set.antecedents)
            .map(|(antecedent, &y)| PairFeatures {
                same_speaker: self.doc.utterances[y].speaker == *speaker,
                segment_distance_bucket: segment_bucket(self.segment_distance(x, y)),
                utterance_distance: x.utt - y,
                filtered_utterance_distance: self.filtered_distance(x, y),
                antecedent,
            })
            .collect()
    }
}

/// Index of the maximum, preferring the last among ties.
fn argmax_last(values: impl Iterator<Item = usize>) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (i, v) in values.enumerate() {
        if best.is_none_or(|(_, b)| v >= b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::candidate_antecedents;
    use proptest::prelude::*;

    fn doc(utts: &[(&str, &str)]) -> Document {
        Document::new(
            "d",
            utts.iter()
                .map(|(s, text)| {
                    (
                        s.to_string(),
                        text.split_whitespace()
                            .map(|w| Token::new(w, None))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    fn tagged(words: &[(&str, Pos)]) -> Vec<Token> {
        words
            .iter()
            .map(|(w, p)| Token::new(*w, Some(*p)))
            .collect()
    }

    #[test]
    fn raw_distance() {
        assert_eq!(utterance_distance(SpanRef::new(5, 0, 0), 5).unwrap(), 0);
        assert_eq!(utterance_distance(SpanRef::new(5, 0, 0), 1).unwrap(), 4);
        assert!(utterance_distance(SpanRef::new(5, 0, 0), 6).is_err());
    }

    #[test]
    fn filtered_distance_examples() {
        let lex = FilterLexicon::default();
        let d = doc(&[
            ("A", "we should sell the house"),
            ("B", "Okay ."),
            ("A", "I think that works"),
            ("B", "yeah ."),
            ("A", "uh-huh"),
            ("A", "so that is it"),
        ]);
        let x = SpanRef::new(2, 2, 2);
        assert_eq!(filtered_utterance_distance(&d, x, 0, &lex).unwrap(), 1);
        assert_eq!(filtered_utterance_distance(&d, x, 2, &lex).unwrap(), 0);
        let x = SpanRef::new(5, 1, 1);
        // Brute-force recount of intervening unimportant utterances.
        for y in 0..=5 {
            let skipped = (y + 1..5)
                .filter(|&i| is_unimportant(&d.utterances[i], &lex))
                .count();
            let expected = 5 - y - skipped;
            assert_eq!(
                filtered_utterance_distance(&d, x, y, &lex).unwrap(),
                expected,
                "y={y}"
            );
            assert_eq!(
                DocumentFeatures::new(&d, &lex).filtered_distance(x, y),
                expected,
                "y={y}"
            );
        }
        assert_eq!(filtered_utterance_distance(&d, x, 2, &lex).unwrap(), 1);
    }

    #[test]
    fn overlap_excludes_function_words() {
        let lex = FilterLexicon::default();
        let d = Document::new(
            "d",
            vec![
                (
                    "B".into(),
                    tagged(&[
                        ("I", Pos::Pron),
                        ("will", Pos::Other),
                        ("do", Pos::Verb),
                        ("$10", Pos::Other),
                        ("to", Pos::Other),
                        ("both", Pos::Other),
                    ]),
                ),
                (
                    "A".into(),
                    tagged(&[
                        ("The", Pos::Other),
                        ("children", Pos::Noun),
                        ("will", Pos::Other),
                        ("appreciate", Pos::Verb),
                        ("it", Pos::Pron),
                    ]),
                ),
            ],
        );
        let set = candidate_antecedents(SpanRef::new(1, 4, 4), 10);
        let f = DocumentFeatures::new(&d, &lex).antecedent_features(&set);
        assert_eq!(f[0].n_content_overlap, 0);
        assert_eq!(f[0].n_verbs, 1);
        // Untagged fallback gives the same answer.
        let plain = doc(&[
            ("B", "I will do $10 to both"),
            ("A", "The children will appreciate it"),
        ]);
        let f = DocumentFeatures::new(&plain, &lex).antecedent_features(&set);
        assert_eq!(f[0].n_content_overlap, 0);
    }

    #[test]
    fn overlap_counts_shared_content() {
        let lex = FilterLexicon::default();
        let d = doc(&[
            ("A", "buy the red car"),
            ("B", "the car is red , that is fine"),
        ]);
        let set = candidate_antecedents(SpanRef::new(1, 5, 5), 10);
        let f = DocumentFeatures::new(&d, &lex).antecedent_features(&set);
        assert_eq!(f[0].n_content_overlap, 2);
        assert!(f[0].is_max_overlap || f[1].is_max_overlap);
    }

    #[test]
    fn single_candidate_wins_both_flags() {
        let lex = FilterLexicon::default();
        let d = doc(&[("A", "Umm")]);
        let set = candidate_antecedents(SpanRef::new(0, 0, 0), 10);
        let f = DocumentFeatures::new(&d, &lex).antecedent_features(&set);
        assert_eq!(f.len(), 1);
        assert!(f[0].is_longest && f[0].is_max_overlap);
        assert_eq!(
            (f[0].n_words, f[0].n_nouns, f[0].n_verbs, f[0].n_adjs),
            (1, 0, 0, 0)
        );
    }

    #[test]
    fn ties_go_to_nearer_candidate() {
        let lex = FilterLexicon::default();
        let d = doc(&[
            ("A", "one two three"),
            ("B", "four five six"),
            ("A", "so that"),
        ]);
        let set = candidate_antecedents(SpanRef::new(2, 1, 1), 10);
        let f = DocumentFeatures::new(&d, &lex).antecedent_features(&set);
        assert!(!f[0].is_longest && f[1].is_longest);
        // All overlaps zero: the nearest candidate (own utterance) carries the flag.
        assert!(f[2].is_max_overlap && !f[0].is_max_overlap && !f[1].is_max_overlap);
    }

    #[test]
    fn pair_bundle() {
        let lex = FilterLexicon::default();
        let d = doc(&[("A", "a b"), ("A", "c d"), ("B", "e f"), ("A", "so that")]);
        let set = candidate_antecedents(SpanRef::new(3, 1, 1), 10);
        let p = DocumentFeatures::new(&d, &lex).pair_features(&set);
        assert!(!p[2].same_speaker);
        assert_eq!(p[2].utterance_distance, 1);
        assert!(p[3].same_speaker);
        assert_eq!(p[3].utterance_distance, 0);
        assert_eq!(PairFeatures::dummy().utterance_distance, 0);
        assert!(!PairFeatures::dummy().same_speaker);
    }

    #[test]
    fn segment_distance_from_token_offsets() {
        let lex = FilterLexicon::default();
        let words: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let text = words.join(" ");
        let utts: Vec<(&str, &str)> = (0..16).map(|_| ("A", text.as_str())).collect();
        let d = doc(&utts);
        // Anaphor at flat token 300 = utterance 15, token 0; antecedent utterance 2 starts at token 40.
        let x = SpanRef::new(15, 0, 0);
        assert_eq!(d.utterance_offset(15), 300);
        assert_eq!(d.utterance_offset(2), 40);
        let df = DocumentFeatures::new(&d, &lex);
        // Token 300 sits in the third 128-token segment, token 40 in the first.
        assert_eq!(df.segment_distance(x, 2), 2);
        assert_eq!(segment_bucket(df.segment_distance(x, 2)), segment_bucket(2));
    }

    #[test]
    fn buckets() {
        let seg: Vec<usize> = [0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 100]
            .iter()
            .map(|&d| segment_bucket(d))
            .collect();
        assert_eq!(seg, vec![0, 1, 2, 3, 4, 5, 5, 6, 6, 7, 7]);
        assert_eq!(count_bucket(9), 5);
    }

    proptest! {
        #[test]
        fn filtered_never_exceeds_raw(kinds in proptest::collection::vec(0u8..3, 2..14), pick in any::<proptest::sample::Index>()) {
            let lex = FilterLexicon::default();
            let texts = ["okay .", "we bought a new boat", "I agree ."];
            let utts: Vec<(&str, &str)> = kinds.iter().map(|k| ("A", texts[*k as usize])).collect();
            let d = doc(&utts);
            let x = SpanRef::new(kinds.len() - 1, 0, 0);
            let y = pick.index(kinds.len());
            let raw = utterance_distance(x, y).unwrap();
            let filtered = filtered_utterance_distance(&d, x, y, &lex).unwrap();
            prop_assert!(filtered <= raw);
            let any_unimportant = (y + 1..x.utt).any(|i| is_unimportant(&d.utterances[i], &lex));
            if !any_unimportant {
                prop_assert_eq!(filtered, raw);
            }
            prop_assert_eq!(DocumentFeatures::new(&d, &lex).filtered_distance(x, y), filtered);
        }

        #[test]
        fn raw_distance_strictly_decreasing(utt in 0usize..30) {
            let x = SpanRef::new(utt, 0, 0);
            for y in 1..=utt {
                prop_assert!(utterance_distance(x, y).unwrap() < utterance_distance(x, y - 1).unwrap());
            }
        }
    }
}
