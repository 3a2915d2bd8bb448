//! Closed-form pieces of the pairwise score, independent of any tape.

use super::Hyperparams;
use crate::tape::softmax;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TypeLabel {
    Anaphor,
    NonAnaphor,
}

impl TypeLabel {
    /// Position of this label in the type-predictor output.
    pub fn index(self) -> usize {
        match self {
            TypeLabel::Anaphor => 0,
            TypeLabel::NonAnaphor => 1,
        }
    }
}

/// Raw type-predictor output `(ot(A), ot(NA))` and the label it implies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TypePrediction {
    pub ot: [f64; 2],
    pub label: TypeLabel,
}

impl TypePrediction {
    /// Anaphor only on a strict win; a tie is read as non-anaphoric.
    pub fn from_scores(ot: [f64; 2]) -> Self {
        let label = if ot[0] > ot[1] {
            TypeLabel::Anaphor
        } else {
            TypeLabel::NonAnaphor
        };
        TypePrediction { ot, label }
    }

    /// `(p1, p2)`: the margin by which the predicted label won, on its own side.
    pub fn penalties(&self) -> (f64, f64) {
        match self.label {
            TypeLabel::Anaphor => (self.ot[0] - self.ot[1], 0.0),
            TypeLabel::NonAnaphor => (0.0, self.ot[1] - self.ot[0]),
        }
    }
}

/// Learned score components for one non-dummy candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairComponents {
    pub mention_x: f64,
    pub mention_y: f64,
    pub coarse: f64,
    pub fine: f64,
}

/// One row of a [`ScoreBreakdown`]. For the dummy every learned term is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreEntry {
    /// `None` is the dummy antecedent.
    pub antecedent: Option<usize>,
    pub components: PairComponents,
    pub distance_penalty: f64,
    pub length_penalty: f64,
    /// `γ3·p1` on the dummy, `γ4·p2` elsewhere.
    pub type_penalty: f64,
    pub score: f64,
}

pub fn distance_penalty(distance: usize, hp: &Hyperparams) -> f64 {
    hp.gamma1 * distance as f64
}

pub fn length_penalty(length: usize, hp: &Hyperparams) -> f64 {
    hp.gamma2 / length.max(1) as f64
}

/// Score of a real candidate `y` at utterance `distance` with `length` tokens.
pub fn score_pair(
    antecedent: usize,
    components: PairComponents,
    distance: usize,
    length: usize,
    tp: &TypePrediction,
    hp: &Hyperparams,
) -> ScoreEntry {
    let distance_penalty = distance_penalty(distance, hp);
    let length_penalty = length_penalty(length, hp);
    let type_penalty = hp.gamma4 * tp.penalties().1;
    let c = components;
    ScoreEntry {
        antecedent: Some(antecedent),
        components,
        distance_penalty,
        length_penalty,
        type_penalty,
        score: c.mention_x + c.mention_y + c.coarse + c.fine
            - distance_penalty
            - length_penalty
            - type_penalty,
    }
}

pub fn score_dummy(tp: &TypePrediction, hp: &Hyperparams) -> ScoreEntry {
    let type_penalty = hp.gamma3 * tp.penalties().0;
    ScoreEntry {
        antecedent: None,
        components: PairComponents::default(),
        distance_penalty: 0.0,
        length_penalty: 0.0,
        type_penalty,
        score: -type_penalty,
    }
}

/// Every candidate's score with its parts, dummy first, and the resulting distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreBreakdown {
    pub type_prediction: TypePrediction,
    pub entries: Vec<ScoreEntry>,
    pub probabilities: Vec<f64>,
}

impl ScoreBreakdown {
    pub fn new(type_prediction: TypePrediction, entries: Vec<ScoreEntry>) -> Self {
        let scores: Vec<f64> = entries.iter().map(|e| e.score).collect();
        ScoreBreakdown {
            type_prediction,
            probabilities: antecedent_distribution(&scores),
            entries,
        }
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }

    pub fn dummy_probability(&self) -> f64 {
        self.entries
            .iter()
            .zip(&self.probabilities)
            .find(|(e, _)| e.antecedent.is_none())
            .map_or(0.0, |(_, p)| *p)
    }
}

/// Softmax over candidate scores.
pub fn antecedent_distribution(scores: &[f64]) -> Vec<f64> {
    softmax(scores)
}

/// Highest-scoring choice. Real candidates are ascending by utterance, so a tie
/// goes to the nearer one; the dummy (`None`) wins only outright.
pub fn select_antecedent(entries: &[ScoreEntry]) -> Option<usize> {
    let mut best: Option<&ScoreEntry> = None;
    for e in entries {
        let better = match best {
            None => true,
            Some(b) => match (e.antecedent, b.antecedent) {
                (None, _) => e.score > b.score,
                (Some(_), None) => e.score >= b.score,
                (Some(y), Some(by)) => e.score > b.score || (e.score == b.score && y > by),
            },
        };
        if better {
            best = Some(e);
        }
    }
    best.and_then(|e| e.antecedent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn type_label_follows_strict_inequality() {
        assert_eq!(
            TypePrediction::from_scores([0.7, 0.3]).label,
            TypeLabel::Anaphor
        );
        assert_eq!(
            TypePrediction::from_scores([0.3, 0.7]).label,
            TypeLabel::NonAnaphor
        );
        assert_eq!(
            TypePrediction::from_scores([0.5, 0.5]).label,
            TypeLabel::NonAnaphor
        );
    }

    #[test]
    fn penalty_values() {
        let (p1, p2) = TypePrediction::from_scores([0.7, 0.3]).penalties();
        assert!(close(p1, 0.4) && p2 == 0.0);
        let (p1, p2) = TypePrediction::from_scores([0.2, 0.8]).penalties();
        assert!(p1 == 0.0 && close(p2, 0.6));
        assert_eq!(
            TypePrediction::from_scores([0.5, 0.5]).penalties(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn distance_and_length_terms() {
        let hp = Hyperparams::default();
        assert_eq!(distance_penalty(3, &hp), 3.0);
        assert_eq!(length_penalty(4, &hp), 0.25);
        assert_eq!(length_penalty(0, &hp), 1.0);
    }

    #[test]
    fn dummy_score_under_c1() {
        let hp = Hyperparams::default();
        let tp = TypePrediction::from_scores([0.7, 0.3]);
        assert!(close(score_dummy(&tp, &hp).score, -2.0));
        let na = TypePrediction::from_scores([0.3, 0.7]);
        assert_eq!(score_dummy(&na, &hp).score, 0.0);
    }

    #[test]
    fn pair_score_sums_parts() {
        let hp = Hyperparams::default();
        let tp = TypePrediction::from_scores([0.2, 0.8]);
        let c = PairComponents {
            mention_x: 1.0,
            mention_y: 2.0,
            coarse: 0.5,
            fine: -0.25,
        };
        let e = score_pair(4, c, 3, 4, &tp, &hp);
        // 3.25 - 3 - 0.25 - 5 * 0.6
        assert!(close(e.score, -3.0), "{}", e.score);
    }

    #[test]
    fn distribution_examples() {
        let p = antecedent_distribution(&[0.0, 2f64.ln()]);
        assert!(close(p[0], 1.0 / 3.0) && close(p[1], 2.0 / 3.0));
        let p = antecedent_distribution(&[1.5; 4]);
        assert!(p.iter().all(|&v| close(v, 0.25)));
        let shifted = antecedent_distribution(&[1000.0, 1000.0 + 2f64.ln()]);
        assert!(close(shifted[1], 2.0 / 3.0));
    }

    fn entry(antecedent: Option<usize>, score: f64) -> ScoreEntry {
        ScoreEntry {
            antecedent,
            components: PairComponents::default(),
            distance_penalty: 0.0,
            length_penalty: 0.0,
            type_penalty: 0.0,
            score,
        }
    }

    #[test]
    fn selection_ties() {
        let tied = [entry(None, 1.0), entry(Some(2), 1.0), entry(Some(3), 1.0)];
        assert_eq!(select_antecedent(&tied), Some(3));
        let dummy_wins = [entry(None, 1.5), entry(Some(2), 1.0)];
        assert_eq!(select_antecedent(&dummy_wins), None);
        let far = [entry(None, 0.0), entry(Some(2), 2.0), entry(Some(3), 1.0)];
        assert_eq!(select_antecedent(&far), Some(2));
    }
}
