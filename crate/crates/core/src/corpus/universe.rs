use alloc::vec::Vec;

use super::{Base, CorpusError, SequencePair};

/// All `4^(2L)` sequence pairs of length `L`, indexed by reading the
/// concatenation `x·y` as a base-4 numeral (A=0 … T=3, `x[0]` most
/// significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Universe {
    len: usize,
}

impl Universe {
    pub fn new(len: usize) -> Result<Self, CorpusError> {
        if len == 0 || len > 31 {
            return Err(CorpusError::InvalidTask(alloc::format!("sequence length {len} not in 1..=31")));
        }
        Ok(Self { len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn size(&self) -> u128 {
        1u128 << (4 * self.len)
    }

    pub fn pair(&self, index: u128) -> Result<SequencePair, CorpusError> {
        let size = self.size();
        if index >= size {
            return Err(CorpusError::IndexOutOfRange { index, size });
        }
        let total = 2 * self.len;
        let digits: Vec<Base> =
            (0..total).map(|k| Base::from_rank(((index >> (2 * (total - 1 - k))) & 3) as u8)).collect();
        let (x, y) = digits.split_at(self.len);
        SequencePair::new(x.to_vec(), y.to_vec())
    }

    pub fn index_of(&self, pair: &SequencePair) -> Result<u128, CorpusError> {
        if pair.len() != self.len {
            return Err(CorpusError::LengthMismatch(pair.len(), self.len));
        }
        Ok(pair.x().iter().chain(pair.y()).fold(0u128, |acc, b| (acc << 2) | b.rank() as u128))
    }

    /// Every pair exactly once, in index order.
    pub fn iter(&self) -> impl Iterator<Item = SequencePair> + '_ {
        (0..self.size()).map(move |i| self.pair(i).expect("index in range"))
    }
}
