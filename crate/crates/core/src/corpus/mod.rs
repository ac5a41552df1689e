//! Task families and example generation.
//!
//! Three families share one example shape: Needleman–Wunsch score-matrix
//! generation over DNA pairs, and blank-padded decimal addition and
//! multiplication. Every task has a finite input universe addressed by a
//! `u128` index, which is what dataset splits sample from.

mod arithmetic;
mod nw;
mod oracle;
mod split;
mod suffix;
mod universe;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use arithmetic::{arithmetic_example, max_target_len};
pub use nw::{nw_matrix, ScoreMatrix};
pub use oracle::{nw_oracle_cell, DEFAULT_ORACLE_LIMIT};
pub use split::{sample_split, DatasetSplit, SplitIndices};
pub use suffix::{attach_suffix, suffix_bits};
pub use universe::Universe;

/// Default number of held-out validation examples.
pub const DEFAULT_VAL_SIZE: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("invalid scoring scheme: {0}")]
    InvalidScoring(String),
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("invalid symbol {0:?}")]
    InvalidSymbol(char),
    #[error("sequences must be non-empty and of equal length (got {0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("oversubscribed: {requested} examples requested from a universe of {universe}")]
    Oversubscribed { requested: u128, universe: u128 },
    #[error("operand {value} out of range for {digits}-digit arithmetic")]
    OperandOutOfRange { value: u128, digits: usize },
    #[error("index {index} outside universe of size {size}")]
    IndexOutOfRange { index: u128, size: u128 },
    #[error("oracle limited to L <= {limit}, got L = {len}")]
    OracleLimit { len: usize, limit: usize },
    #[error("cell ({i}, {j}) outside matrix for L = {len}")]
    CellOutOfRange { i: usize, j: usize, len: usize },
}

/// DNA alphabet, ordered A < C < G < T.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    A,
    C,
    G,
    T,
}

impl Base {
    pub const ALL: [Base; 4] = [Base::A, Base::C, Base::G, Base::T];

    pub fn from_char(c: char) -> Result<Self, CorpusError> {
        match c {
            'A' => Ok(Base::A),
            'C' => Ok(Base::C),
            'G' => Ok(Base::G),
            'T' => Ok(Base::T),
            other => Err(CorpusError::InvalidSymbol(other)),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
        }
    }

    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn from_rank(rank: u8) -> Self {
        Base::ALL[rank as usize & 3]
    }
}

/// Match/mismatch scores and the linear gap penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringScheme {
    match_score: i32,
    mismatch_score: i32,
    gap_penalty: i32,
}

impl ScoringScheme {
    /// Rejects schemes where a match does not beat a mismatch, and positive
    /// gap penalties (the cell-value range bound assumes gaps never help).
    pub fn new(match_score: i32, mismatch_score: i32, gap_penalty: i32) -> Result<Self, CorpusError> {
        if match_score <= mismatch_score {
            return Err(CorpusError::InvalidScoring(alloc::format!(
                "match score {match_score} must exceed mismatch score {mismatch_score}"
            )));
        }
        if gap_penalty > 0 {
            return Err(CorpusError::InvalidScoring(alloc::format!("gap penalty {gap_penalty} must not be positive")));
        }
        Ok(Self { match_score, mismatch_score, gap_penalty })
    }

    pub fn match_score(&self) -> i32 {
        self.match_score
    }

    pub fn mismatch_score(&self) -> i32 {
        self.mismatch_score
    }

    pub fn gap_penalty(&self) -> i32 {
        self.gap_penalty
    }

    pub fn substitution(&self, a: Base, b: Base) -> i32 {
        if a == b {
            self.match_score
        } else {
            self.mismatch_score
        }
    }

    /// Inclusive bound on every entry of an `(L+1)×(L+1)` score matrix:
    /// `[2L·min(mismatch, gap), L·match]`, widened to include zero.
    pub fn value_range(&self, len: usize) -> (i32, i32) {
        let len = len as i32;
        let lo = 2 * len * self.mismatch_score.min(self.gap_penalty);
        let hi = len * self.match_score;
        (lo.min(0), hi.max(0))
    }
}

impl Default for ScoringScheme {
    fn default() -> Self {
        Self { match_score: 5, mismatch_score: -4, gap_penalty: -5 }
    }
}

/// Two equal-length DNA strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequencePair {
    x: Vec<Base>,
    y: Vec<Base>,
}

impl SequencePair {
    pub fn new(x: Vec<Base>, y: Vec<Base>) -> Result<Self, CorpusError> {
        if x.is_empty() || x.len() != y.len() {
            return Err(CorpusError::LengthMismatch(x.len(), y.len()));
        }
        Ok(Self { x, y })
    }

    pub fn parse(x: &str, y: &str) -> Result<Self, CorpusError> {
        let x = x.chars().map(Base::from_char).collect::<Result<Vec<_>, _>>()?;
        let y = y.chars().map(Base::from_char).collect::<Result<Vec<_>, _>>()?;
        Self::new(x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self) -> &[Base] {
        &self.x
    }

    pub fn y(&self) -> &[Base] {
        &self.y
    }
}

impl fmt::Display for SequencePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.x {
            write!(f, "{}", b.as_char())?;
        }
        f.write_str("/")?;
        for b in &self.y {
            write!(f, "{}", b.as_char())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskFamily {
    Nw,
    Addition,
    Multiplication,
}

impl TaskFamily {
    pub fn name(self) -> &'static str {
        match self {
            TaskFamily::Nw => "nw",
            TaskFamily::Addition => "addition",
            TaskFamily::Multiplication => "multiplication",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "nw" => Some(TaskFamily::Nw),
            "addition" => Some(TaskFamily::Addition),
            "multiplication" => Some(TaskFamily::Multiplication),
            _ => None,
        }
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One task configuration. `size` is the sequence length `L` for NW and
/// the operand digit count `d` for arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskSpec {
    pub family: TaskFamily,
    pub size: usize,
    pub scoring: ScoringScheme,
    pub suffix_bits: usize,
}

impl TaskSpec {
    pub fn nw(len: usize) -> Self {
        Self { family: TaskFamily::Nw, size: len, scoring: ScoringScheme::default(), suffix_bits: 0 }
    }

    pub fn addition(digits: usize) -> Self {
        Self { family: TaskFamily::Addition, size: digits, scoring: ScoringScheme::default(), suffix_bits: 0 }
    }

    pub fn multiplication(digits: usize) -> Self {
        Self { family: TaskFamily::Multiplication, size: digits, scoring: ScoringScheme::default(), suffix_bits: 0 }
    }

    pub fn with_suffix(mut self, bits: usize) -> Self {
        self.suffix_bits = bits;
        self
    }

    pub fn with_scoring(mut self, scoring: ScoringScheme) -> Self {
        self.scoring = scoring;
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.size == 0 {
            return Err(CorpusError::InvalidTask(alloc::format!("{} requires size >= 1", self.family)));
        }
        let limit = match self.family {
            TaskFamily::Nw => 31,
            TaskFamily::Addition | TaskFamily::Multiplication => 19,
        };
        if self.size > limit {
            return Err(CorpusError::InvalidTask(alloc::format!(
                "{} size {} exceeds the supported maximum {limit}",
                self.family,
                self.size
            )));
        }
        if self.suffix_bits > 64 {
            return Err(CorpusError::InvalidTask(alloc::format!("suffix of {} bits is too long", self.suffix_bits)));
        }
        Ok(())
    }

    pub fn universe_size(&self) -> u128 {
        match self.family {
            TaskFamily::Nw => 1u128 << (4 * self.size),
            TaskFamily::Addition | TaskFamily::Multiplication => 10u128.pow(2 * self.size as u32),
        }
    }

    /// Length of the target region (matrix cells or padded result digits).
    pub fn target_len(&self) -> usize {
        match self.family {
            TaskFamily::Nw => (self.size + 1) * (self.size + 1),
            TaskFamily::Addition | TaskFamily::Multiplication => max_target_len(self.family, self.size),
        }
    }

    /// Builds the example at `index` of the task universe, without suffix.
    pub fn example(&self, index: u128) -> Result<Example, CorpusError> {
        let size = self.universe_size();
        if index >= size {
            return Err(CorpusError::IndexOutOfRange { index, size });
        }
        match self.family {
            TaskFamily::Nw => {
                let pair = Universe::new(self.size)?.pair(index)?;
                Ok(nw_example(&pair, &self.scoring, index))
            }
            TaskFamily::Addition | TaskFamily::Multiplication => {
                let modulus = 10u128.pow(self.size as u32);
                arithmetic_example(index / modulus, index % modulus, self)
            }
        }
    }

    /// Builds the example at `index` with its suffix attached when the
    /// task enables one.
    pub fn example_with_suffix(&self, index: u128, suffix_seed: u64) -> Result<Example, CorpusError> {
        let example = self.example(index)?;
        Ok(attach_suffix(example, self.suffix_bits, suffix_seed))
    }
}

/// One position of an example before tokenization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Base(Base),
    Digit(u8),
    Blank,
    Sep,
    Cell(i32),
}

/// A symbolic example. `input` holds both operands with a separator
/// between them; `target` is the matrix (row-major) or padded result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub input: Vec<Symbol>,
    pub target: Vec<Symbol>,
    pub suffix: Vec<bool>,
    pub universe_index: u128,
}

pub(crate) fn nw_example(pair: &SequencePair, scoring: &ScoringScheme, index: u128) -> Example {
    let matrix = nw_matrix(pair, scoring);
    let mut input = Vec::with_capacity(2 * pair.len() + 1);
    input.extend(pair.x().iter().map(|&b| Symbol::Base(b)));
    input.push(Symbol::Sep);
    input.extend(pair.y().iter().map(|&b| Symbol::Base(b)));
    let target = matrix.row_major().iter().map(|&v| Symbol::Cell(v)).collect();
    Example { input, target, suffix: Vec::new(), universe_index: index }
}
