//! Brute-force reference for the score table.
//!
//! Enumerates every global alignment of the prefixes `x[..i]` and `y[..j]`
//! as an explicit column sequence and keeps the best total score. It shares
//! no code with the dynamic program it checks.

use super::{Base, CorpusError, ScoringScheme, SequencePair};

pub const DEFAULT_ORACLE_LIMIT: usize = 4;

#[derive(Clone, Copy)]
enum Column {
    Pair(Base, Base),
    GapInY,
    GapInX,
}

/// Optimal global alignment score of `x[..i]` against `y[..j]`.
pub fn nw_oracle_cell(
    pair: &SequencePair,
    scoring: &ScoringScheme,
    i: usize,
    j: usize,
    limit: usize,
) -> Result<i32, CorpusError> {
    let len = pair.len();
    if len > limit {
        return Err(CorpusError::OracleLimit { len, limit });
    }
    if i > len || j > len {
        return Err(CorpusError::CellOutOfRange { i, j, len });
    }
    let mut columns = alloc::vec::Vec::with_capacity(i + j);
    let mut best = i32::MIN;
    enumerate(&pair.x()[..i], &pair.y()[..j], &mut columns, &mut |cols| {
        let score = cols
            .iter()
            .map(|c| match *c {
                Column::Pair(a, b) => scoring.substitution(a, b),
                Column::GapInX | Column::GapInY => scoring.gap_penalty(),
            })
            .sum::<i32>();
        best = best.max(score);
    });
    Ok(best)
}

fn enumerate(x: &[Base], y: &[Base], columns: &mut alloc::vec::Vec<Column>, visit: &mut dyn FnMut(&[Column])) {
    if x.is_empty() && y.is_empty() {
        visit(columns);
        return;
    }
    if let (Some((&a, xs)), Some((&b, ys))) = (x.split_first(), y.split_first()) {
        columns.push(Column::Pair(a, b));
        enumerate(xs, ys, columns, visit);
        columns.pop();
    }
    if let Some((_, xs)) = x.split_first() {
        columns.push(Column::GapInY);
        enumerate(xs, y, columns, visit);
        columns.pop();
    }
    if let Some((_, ys)) = y.split_first() {
        columns.push(Column::GapInX);
        enumerate(x, ys, columns, visit);
        columns.pop();
    }
}
