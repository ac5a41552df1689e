use alloc::vec::Vec;

use super::{CorpusError, Example, Symbol, TaskFamily, TaskSpec};

/// Widest possible result: `d + 1` digits for a sum, `2d` for a product.
pub fn max_target_len(family: TaskFamily, digits: usize) -> usize {
    match family {
        TaskFamily::Addition => digits + 1,
        TaskFamily::Multiplication => 2 * digits,
        TaskFamily::Nw => 0,
    }
}

/// Decimal digits of `value` without leading zeros; zero is a single `0`.
fn decimal(mut value: u128) -> Vec<Symbol> {
    let mut out = Vec::new();
    loop {
        out.push(Symbol::Digit((value % 10) as u8));
        value /= 10;
        if value == 0 {
            break;
        }
    }
    out.reverse();
    out
}

fn padded(value: u128, width: usize) -> Vec<Symbol> {
    let mut digits = decimal(value);
    debug_assert!(digits.len() <= width);
    digits.resize(width, Symbol::Blank);
    digits
}

/// `a ∘ b` as an example: each operand written without leading zeros and
/// blank-padded on the right to `d`, the result padded to the family's
/// maximum target length.
pub fn arithmetic_example(a: u128, b: u128, spec: &TaskSpec) -> Result<Example, CorpusError> {
    let digits = spec.size;
    let limit = 10u128.pow(digits as u32);
    for value in [a, b] {
        if value >= limit {
            return Err(CorpusError::OperandOutOfRange { value, digits });
        }
    }
    let result = match spec.family {
        TaskFamily::Addition => a + b,
        TaskFamily::Multiplication => a * b,
        TaskFamily::Nw => {
            return Err(CorpusError::InvalidTask("arithmetic example requested for an NW task".into()));
        }
    };
    let mut input = padded(a, digits);
    input.push(Symbol::Sep);
    input.extend(padded(b, digits));
    Ok(Example {
        input,
        target: padded(result, max_target_len(spec.family, digits)),
        suffix: Vec::new(),
        universe_index: a * limit + b,
    })
}
