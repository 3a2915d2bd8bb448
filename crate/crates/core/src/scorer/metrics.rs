//! MUC, B³ and CEAF_e over generic mention partitions.
//!
//! Each metric yields a [`Counts`] of numerator/denominator sums so that
//! document-level results aggregate by plain addition.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use super::hungarian::max_weight_assignment;

/// Precision, recall and their harmonic mean.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }
}

impl fmt::Display for Prf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P {:.4}  R {:.4}  F1 {:.4}",
            self.precision, self.recall, self.f1
        )
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Summed numerators and denominators of precision and recall.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Counts {
    pub precision_num: f64,
    pub precision_den: f64,
    pub recall_num: f64,
    pub recall_den: f64,
}

impl Counts {
    pub fn prf(&self) -> Prf {
        Prf::new(
            ratio(self.precision_num, self.precision_den),
            ratio(self.recall_num, self.recall_den),
        )
    }

    /// The same counts with the roles of key and response exchanged.
    pub fn swapped(&self) -> Counts {
        Counts {
            precision_num: self.recall_num,
            precision_den: self.recall_den,
            recall_num: self.precision_num,
            recall_den: self.precision_den,
        }
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            precision_num: self.precision_num + o.precision_num,
            precision_den: self.precision_den + o.precision_den,
            recall_num: self.recall_num + o.recall_num,
            recall_den: self.recall_den + o.recall_den,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        *self = *self + o;
    }
}

fn cluster_index<M: Ord>(clusters: &[Vec<M>]) -> BTreeMap<&M, usize> {
    clusters
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |m| (m, i)))
        .collect()
}

// Σ(|K| − |p(K)|) and Σ(|K| − 1) of `key` partitioned by `response`.
fn muc_side<M: Ord>(key: &[Vec<M>], response: &[Vec<M>]) -> (f64, f64) {
    let index = cluster_index(response);
    let (mut num, mut den) = (0usize, 0usize);
    for k in key.iter().filter(|k| !k.is_empty()) {
        let mut parts = std::collections::BTreeSet::new();
        let mut unaligned = 0;
        for m in k {
            match index.get(m) {
                Some(&c) => {
                    parts.insert(c);
                }
                None => unaligned += 1,
            }
        }
        num += k.len() - (parts.len() + unaligned);
        den += k.len() - 1;
    }
    (num as f64, den as f64)
}

/// Link-based MUC counts.
pub fn muc<M: Ord>(gold: &[Vec<M>], sys: &[Vec<M>]) -> Counts {
    let (recall_num, recall_den) = muc_side(gold, sys);
    let (precision_num, precision_den) = muc_side(sys, gold);
    Counts {
        precision_num,
        precision_den,
        recall_num,
        recall_den,
    }
}

// Σ over key mentions of |K ∩ R(m)| / |K|, and the number of key mentions.
fn b3_side<M: Ord>(key: &[Vec<M>], response: &[Vec<M>]) -> (f64, f64) {
    let index = cluster_index(response);
    let mut num = 0.0;
    let mut den = 0usize;
    for k in key {
        let mut overlap: BTreeMap<usize, usize> = BTreeMap::new();
        for m in k {
            if let Some(&c) = index.get(m) {
                *overlap.entry(c).or_default() += 1;
            }
        }
        // Every mention of `k` that sits in response cluster c sees the same |K ∩ R|.
        let shared: usize = overlap.values().map(|&n| n * n).sum();
        num += shared as f64 / k.len() as f64;
        den += k.len();
    }
    (num, den as f64)
}

/// Mention-based B³ counts; mentions missing from the other side score 0.
pub fn b_cubed<M: Ord>(gold: &[Vec<M>], sys: &[Vec<M>]) -> Counts {
    let (recall_num, recall_den) = b3_side(gold, sys);
    let (precision_num, precision_den) = b3_side(sys, gold);
    Counts {
        precision_num,
        precision_den,
        recall_num,
        recall_den,
    }
}

/// Entity similarity φ4(K, R) = 2|K ∩ R| / (|K| + |R|).
pub fn phi4<M: Ord>(k: &[M], r: &[M]) -> f64 {
    if k.is_empty() && r.is_empty() {
        return 0.0;
    }
    let shared = k.iter().filter(|m| r.contains(m)).count();
    2.0 * shared as f64 / (k.len() + r.len()) as f64
}

/// Optimal one-to-one alignment of gold to system clusters under φ4.
pub fn ceaf_alignment<M: Ord>(gold: &[Vec<M>], sys: &[Vec<M>]) -> Vec<Option<usize>> {
    let weights: Vec<Vec<f64>> = gold
        .iter()
        .map(|k| sys.iter().map(|r| phi4(k, r)).collect())
        .collect();
    max_weight_assignment(&weights)
}

/// Entity-based CEAF_e counts.
pub fn ceaf_e<M: Ord>(gold: &[Vec<M>], sys: &[Vec<M>]) -> Counts {
    let alignment = ceaf_alignment(gold, sys);
    let total: f64 = alignment
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| phi4(&gold[i], &sys[j])))
        .sum();
    Counts {
        precision_num: total,
        precision_den: sys.len() as f64,
        recall_num: total,
        recall_den: gold.len() as f64,
    }
}

/// The three coreference metrics of one key/response pair.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorefCounts {
    pub muc: Counts,
    pub b3: Counts,
    pub ceaf_e: Counts,
}

impl CorefCounts {
    pub fn compute<M: Ord>(gold: &[Vec<M>], sys: &[Vec<M>]) -> Self {
        CorefCounts {
            muc: muc(gold, sys),
            b3: b_cubed(gold, sys),
            ceaf_e: ceaf_e(gold, sys),
        }
    }

    /// Unweighted mean of the three F1 scores.
    pub fn conll(&self) -> f64 {
        (self.muc.prf().f1 + self.b3.prf().f1 + self.ceaf_e.prf().f1) / 3.0
    }
}

impl AddAssign for CorefCounts {
    fn add_assign(&mut self, o: CorefCounts) {
        self.muc += o.muc;
        self.b3 += o.b3;
        self.ceaf_e += o.ceaf_e;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (Vec<Vec<char>>, Vec<Vec<char>>) {
        (
            vec![vec!['a', 'b', 'c'], vec!['d', 'e']],
            vec![vec!['a', 'b'], vec!['c', 'd', 'e']],
        )
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn worked_example() {
        let (g, s) = example();
        let c = CorefCounts::compute(&g, &s);
        let m = c.muc.prf();
        assert!(
            close(m.precision, 2.0 / 3.0) && close(m.recall, 2.0 / 3.0) && close(m.f1, 2.0 / 3.0)
        );
        let b = c.b3.prf();
        assert!(close(b.precision, 11.0 / 15.0) && close(b.recall, 11.0 / 15.0));
        let e = c.ceaf_e.prf();
        assert!(close(e.f1, 0.8));
        assert!(close(c.conll(), 11.0 / 15.0));
    }

    #[test]
    fn identity_and_empty() {
        let (g, _) = example();
        let c = CorefCounts::compute(&g, &g);
        assert!(close(c.conll(), 1.0));
        let empty: Vec<Vec<char>> = Vec::new();
        let c = CorefCounts::compute(&g, &empty);
        assert_eq!(c.muc.prf().recall, 0.0);
        assert_eq!(c.conll(), 0.0);
    }

    #[test]
    fn b3_singletons_against_pair() {
        let b = b_cubed(&[vec![1, 2]], &[vec![1], vec![2]]).prf();
        assert_eq!((b.precision, b.recall), (1.0, 0.5));
    }

    #[test]
    fn ceaf_disjoint() {
        let c = ceaf_e(&[vec![1, 2]], &[vec![3, 4]]).prf();
        assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn swapping_sides_swaps_precision_and_recall() {
        let (g, s) = example();
        let ab = CorefCounts::compute(&g, &s);
        let ba = CorefCounts::compute(&s, &g);
        assert_eq!(ab.muc, ba.muc.swapped());
        assert_eq!(ab.b3, ba.b3.swapped());
        assert_eq!(ab.ceaf_e, ba.ceaf_e.swapped());
    }

    #[test]
    fn prf_zero_when_both_zero() {
        assert_eq!(Prf::new(0.0, 0.0).f1, 0.0);
    }
}
