//! Exhaustive comparison of the score-table generator with the brute-force
//! alignment oracle.

use sweetspot_core::corpus::{
    nw_matrix, nw_oracle_cell, ScoreMatrix, ScoringScheme, SequencePair, Universe, DEFAULT_ORACLE_LIMIT,
};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub x: String,
    pub y: String,
    pub i: usize,
    pub j: usize,
    pub generated: i32,
    pub oracle: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub len: usize,
    pub pairs: u128,
    pub cells: u128,
    pub mismatches: u128,
    /// The first few mismatches, for the error message.
    pub examples: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Checks every cell of every pair of length `len` produced by `generator`.
pub fn verify_with(
    len: usize,
    scoring: &ScoringScheme,
    max_len: usize,
    generator: impl Fn(&SequencePair, &ScoringScheme) -> ScoreMatrix,
) -> Result<VerifyReport> {
    if max_len > DEFAULT_ORACLE_LIMIT {
        return Err(LabError::Config(format!("oracle limit is {DEFAULT_ORACLE_LIMIT}, got {max_len}")));
    }
    if len == 0 || len > max_len {
        return Err(LabError::Config(format!("L = {len} outside the oracle range 1..={max_len}")));
    }
    let universe = Universe::new(len)?;
    let mut report = VerifyReport { len, pairs: 0, cells: 0, mismatches: 0, examples: Vec::new() };
    let text = |bases: &[sweetspot_core::corpus::Base]| bases.iter().map(|b| b.as_char()).collect::<String>();
    for pair in universe.iter() {
        let m = generator(&pair, scoring);
        report.pairs += 1;
        for i in 0..=len {
            for j in 0..=len {
                report.cells += 1;
                let oracle = nw_oracle_cell(&pair, scoring, i, j, max_len)?;
                let generated = if m.dim() == len + 1 { m.get(i, j) } else { i32::MIN };
                if generated != oracle {
                    report.mismatches += 1;
                    if report.examples.len() < 5 {
                        report.examples.push(Mismatch {
                            x: text(pair.x()),
                            y: text(pair.y()),
                            i,
                            j,
                            generated,
                            oracle,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

pub fn verify(len: usize, scoring: &ScoringScheme, max_len: usize) -> Result<VerifyReport> {
    verify_with(len, scoring, max_len, nw_matrix)
}

/// Turns a failed report into the verification error.
pub fn check(report: &VerifyReport) -> Result<()> {
    if report.passed() {
        return Ok(());
    }
    let first = report
        .examples
        .iter()
        .map(|m| format!("x={} y={} cell ({}, {}): generated {} oracle {}", m.x, m.y, m.i, m.j, m.generated, m.oracle))
        .collect::<Vec<_>>()
        .join("; ");
    Err(LabError::Verify(format!("{} mismatched cells at L = {}: {first}", report.mismatches, report.len)))
}
