use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::Rng;

use super::{CorpusError, Example, TaskSpec};
use crate::rng;

/// Universe indices of a train/validation split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<u128>,
    pub validation: Vec<u128>,
}

/// Draws `val_size` validation indices from `validation_seed` alone, then
/// `n` training indices from the remainder using `seed`. Both lists are
/// distinct and in draw order.
pub fn sample_split(
    universe: u128,
    n: usize,
    val_size: usize,
    seed: u64,
    validation_seed: u64,
) -> Result<SplitIndices, CorpusError> {
    let requested = n as u128 + val_size as u128;
    if requested > universe {
        return Err(CorpusError::Oversubscribed { requested, universe });
    }
    let mut taken = BTreeSet::new();
    let validation = draw_distinct(universe, val_size, &mut taken, &mut rng::stream(validation_seed, rng::VALIDATION));
    let train = draw_distinct(universe, n, &mut taken, &mut rng::stream(seed, rng::TRAIN));
    Ok(SplitIndices { train, validation })
}

fn draw_distinct(universe: u128, count: usize, taken: &mut BTreeSet<u128>, rng: &mut impl Rng) -> Vec<u128> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let candidate = rng.random_range(0..universe);
        if taken.insert(candidate) {
            out.push(candidate);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
    pub seed: u64,
    pub validation_seed: u64,
}

impl DatasetSplit {
    pub fn generate(
        spec: &TaskSpec,
        n: usize,
        val_size: usize,
        seed: u64,
        validation_seed: u64,
        suffix_seed: u64,
    ) -> Result<Self, CorpusError> {
        spec.validate()?;
        let indices = sample_split(spec.universe_size(), n, val_size, seed, validation_seed)?;
        let build = |list: &[u128]| -> Result<Vec<Example>, CorpusError> {
            list.iter().map(|&i| spec.example_with_suffix(i, suffix_seed)).collect()
        };
        Ok(Self { train: build(&indices.train)?, validation: build(&indices.validation)?, seed, validation_seed })
    }
}
