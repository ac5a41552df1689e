use alloc::vec;
use alloc::vec::Vec;

use super::{ScoringScheme, SequencePair};

/// The `(L+1)×(L+1)` Needleman–Wunsch table, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScoreMatrix {
    dim: usize,
    entries: Vec<i32>,
}

impl ScoreMatrix {
    pub fn from_rows(rows: &[&[i32]]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "score matrix must be square");
        Self { dim, entries: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    /// Side length, `L + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: i32) {
        self.entries[i * self.dim + j] = value;
    }

    pub fn row_major(&self) -> &[i32] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[i32] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }
}

/// Fills the score table: `M[i][0] = i·g`, `M[0][j] = j·g`, and each
/// interior cell takes the best of a diagonal step scored by substitution
/// or a gap step from above or from the left.
pub fn nw_matrix(pair: &SequencePair, scoring: &ScoringScheme) -> ScoreMatrix {
    let dim = pair.len() + 1;
    let gap = scoring.gap_penalty();
    let mut m = ScoreMatrix { dim, entries: vec![0; dim * dim] };
    for k in 1..dim {
        m.set(k, 0, k as i32 * gap);
        m.set(0, k, k as i32 * gap);
    }
    for i in 1..dim {
        let xi = pair.x()[i - 1];
        for j in 1..dim {
            let diag = m.get(i - 1, j - 1) + scoring.substitution(xi, pair.y()[j - 1]);
            let up = m.get(i - 1, j) + gap;
            let left = m.get(i, j - 1) + gap;
            m.set(i, j, diag.max(up).max(left));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Universe;
    use proptest::prelude::*;

    fn matrix(x: &str, y: &str) -> ScoreMatrix {
        nw_matrix(&SequencePair::parse(x, y).unwrap(), &ScoringScheme::default())
    }

    #[test]
    fn single_match() {
        assert_eq!(matrix("A", "A"), ScoreMatrix::from_rows(&[&[0, -5], &[-5, 5]]));
    }

    #[test]
    fn two_by_two_hand_values() {
        let expected = ScoreMatrix::from_rows(&[&[0, -5, -10], &[-5, 5, 0], &[-10, 0, 1]]);
        assert_eq!(matrix("AC", "AG"), expected);
    }

    #[test]
    fn length_five_is_six_by_six() {
        let m = matrix("ACGTA", "TTGCA");
        assert_eq!(m.dim(), 6);
        assert_eq!(m.row_major().len(), 36);
    }

    #[test]
    fn identical_strings_have_match_diagonal() {
        let m = matrix("GATTACA", "GATTACA");
        for i in 0..=7 {
            assert_eq!(m.get(i, i), 5 * i as i32);
        }
    }

    #[test]
    fn entries_stay_in_range_exhaustively() {
        let scoring = ScoringScheme::default();
        for len in 1..=3 {
            let (lo, hi) = scoring.value_range(len);
            let universe = Universe::new(len).unwrap();
            for pair in universe.iter() {
                let m = nw_matrix(&pair, &scoring);
                assert!(m.row_major().iter().all(|&v| lo <= v && v <= hi), "{pair}");
            }
        }
    }

    fn dna(len: usize) -> impl Strategy<Value = String> {
        proptest::collection::vec(prop_oneof![Just('A'), Just('C'), Just('G'), Just('T')], len)
            .prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn boundary_and_recurrence_hold(
            (x, y) in (1usize..9).prop_flat_map(|l| (dna(l), dna(l))),
            mm in -6i32..3, gap in -7i32..=0,
        ) {
            let scoring = ScoringScheme::new(5, mm, gap).unwrap();
            let pair = SequencePair::parse(&x, &y).unwrap();
            let m = nw_matrix(&pair, &scoring);
            let l = pair.len();
            for k in 0..=l {
                prop_assert_eq!(m.get(k, 0), k as i32 * gap);
                prop_assert_eq!(m.get(0, k), k as i32 * gap);
            }
            for i in 1..=l {
                for j in 1..=l {
                    let s = scoring.substitution(pair.x()[i - 1], pair.y()[j - 1]);
                    let best = (m.get(i - 1, j - 1) + s).max(m.get(i - 1, j) + gap).max(m.get(i, j - 1) + gap);
                    prop_assert_eq!(m.get(i, j), best);
                }
            }
            let (lo, hi) = scoring.value_range(l);
            prop_assert!(m.row_major().iter().all(|&v| lo <= v && v <= hi));
        }
    }
}
