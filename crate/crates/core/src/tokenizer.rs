//! Token vocabulary and the fixed sequence layout
//! `[x][sep][y][sep][bot][target][suffix]`.
//!
//! NW matrices get one token per possible cell value, so a target is
//! exactly `(L+1)²` tokens. Blank padding in arithmetic tasks shares id 0
//! with the pad token.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::corpus::{Base, Example, Symbol, TaskFamily, TaskSpec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error("out of vocabulary: {0}")]
    OutOfVocabulary(String),
    #[error("unknown token id {0}")]
    UnknownId(usize),
    #[error("malformed token sequence: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Token {
    Pad,
    Sep,
    Bot,
    Base(Base),
    Digit(u8),
    Cell(i32),
    Bit(bool),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Pad => f.write_str("<pad>"),
            Token::Sep => f.write_str("<sep>"),
            Token::Bot => f.write_str("<bot>"),
            Token::Base(b) => write!(f, "{}", b.as_char()),
            Token::Digit(d) => write!(f, "{d}"),
            Token::Cell(v) => write!(f, "#{v}"),
            Token::Bit(b) => write!(f, "b{}", *b as u8),
        }
    }
}

impl Token {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "<pad>" => Some(Token::Pad),
            "<sep>" => Some(Token::Sep),
            "<bot>" => Some(Token::Bot),
            "b0" => Some(Token::Bit(false)),
            "b1" => Some(Token::Bit(true)),
            _ => {
                if let Some(v) = s.strip_prefix('#') {
                    return v.parse().ok().map(Token::Cell);
                }
                let mut chars = s.chars();
                let c = chars.next()?;
                if chars.next().is_some() {
                    return None;
                }
                if let Some(d) = c.to_digit(10) {
                    return Some(Token::Digit(d as u8));
                }
                Base::from_char(c).ok().map(Token::Base)
            }
        }
    }

    fn from_symbol(symbol: Symbol) -> Self {
        match symbol {
            Symbol::Base(b) => Token::Base(b),
            Symbol::Digit(d) => Token::Digit(d),
            Symbol::Blank => Token::Pad,
            Symbol::Sep => Token::Sep,
            Symbol::Cell(v) => Token::Cell(v),
        }
    }

    fn to_symbol(self) -> Option<Symbol> {
        match self {
            Token::Base(b) => Some(Symbol::Base(b)),
            Token::Digit(d) => Some(Symbol::Digit(d)),
            Token::Pad => Some(Symbol::Blank),
            Token::Sep => Some(Symbol::Sep),
            Token::Cell(v) => Some(Symbol::Cell(v)),
            Token::Bot | Token::Bit(_) => None,
        }
    }
}

/// Bijection between tokens and ids. Id 0 is always the pad token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<Token>,
}

impl Vocabulary {
    pub fn build(spec: &TaskSpec) -> Self {
        let mut tokens = alloc::vec![Token::Pad, Token::Sep, Token::Bot];
        match spec.family {
            TaskFamily::Nw => {
                tokens.extend(Base::ALL.iter().map(|&b| Token::Base(b)));
                let (lo, hi) = spec.scoring.value_range(spec.size);
                tokens.extend((lo..=hi).map(Token::Cell));
            }
            TaskFamily::Addition | TaskFamily::Multiplication => {
                tokens.extend((0..10).map(Token::Digit));
            }
        }
        if spec.suffix_bits > 0 {
            tokens.extend([Token::Bit(false), Token::Bit(true)]);
        }
        Self { tokens }
    }

    pub fn from_tokens(tokens: Vec<Token>) -> Result<Self, TokenError> {
        if tokens.first() != Some(&Token::Pad) {
            return Err(TokenError::Malformed("id 0 must be <pad>".into()));
        }
        for (i, t) in tokens.iter().enumerate() {
            if tokens[..i].contains(t) {
                return Err(TokenError::Malformed(alloc::format!("duplicate token {t}")));
            }
        }
        Ok(Self { tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn id(&self, token: Token) -> Result<usize, TokenError> {
        self.lookup(token).ok_or_else(|| TokenError::OutOfVocabulary(token.to_string()))
    }

    fn lookup(&self, token: Token) -> Option<usize> {
        // Cell tokens are contiguous, so avoid a linear scan for them.
        if let Token::Cell(v) = token {
            let first = self.tokens.iter().position(|t| matches!(t, Token::Cell(_)))?;
            let Token::Cell(lo) = self.tokens[first] else { unreachable!() };
            let offset = v.checked_sub(lo)?;
            let id = first + usize::try_from(offset).ok()?;
            return (self.tokens.get(id) == Some(&token)).then_some(id);
        }
        self.tokens.iter().position(|&t| t == token)
    }

    pub fn token(&self, id: usize) -> Result<Token, TokenError> {
        self.tokens.get(id).copied().ok_or(TokenError::UnknownId(id))
    }

    pub fn pad(&self) -> usize {
        0
    }

    /// Number of cell-value tokens (zero for arithmetic tasks).
    pub fn cell_tokens(&self) -> usize {
        self.tokens.iter().filter(|t| matches!(t, Token::Cell(_))).count()
    }

    /// `token<TAB>id` lines.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (id, t) in self.tokens.iter().enumerate() {
            out.push_str(&alloc::format!("{t}\t{id}\n"));
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self, TokenError> {
        let mut tokens = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (name, id) = line
                .split_once('\t')
                .ok_or_else(|| TokenError::Malformed(alloc::format!("bad vocabulary line {line:?}")))?;
            let token = Token::parse(name).ok_or_else(|| TokenError::OutOfVocabulary(name.into()))?;
            if id.trim().parse::<usize>().ok() != Some(tokens.len()) {
                return Err(TokenError::Malformed(alloc::format!("ids out of order at {line:?}")));
            }
            tokens.push(token);
        }
        Self::from_tokens(tokens)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Where each part of an example sits in its token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Regions {
    pub input: Span,
    pub target: Span,
    pub suffix: Span,
}

impl Regions {
    /// The layout of a task's examples, which is the same for all of them.
    pub fn for_task(spec: &TaskSpec) -> Self {
        let input_len = 2 * spec.size + 1;
        let target_start = input_len + 2;
        let target_end = target_start + spec.target_len();
        Self {
            input: Span::new(0, input_len),
            target: Span::new(target_start, target_end),
            suffix: Span::new(target_end, target_end + spec.suffix_bits),
        }
    }

    /// Spans are ordered input < target < suffix and do not overlap.
    pub fn is_consistent(&self) -> bool {
        self.input.start <= self.input.end
            && self.input.end <= self.target.start
            && self.target.start <= self.target.end
            && self.target.end <= self.suffix.start
            && self.suffix.start <= self.suffix.end
    }

    pub fn total_len(&self) -> usize {
        self.suffix.end
    }

    /// Tokens fed to the model before generation starts (through `<bot>`).
    pub fn prefix_len(&self) -> usize {
        self.target.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedExample {
    pub ids: Vec<usize>,
    pub regions: Regions,
    pub universe_index: u128,
}

impl TokenizedExample {
    pub fn prefix(&self) -> &[usize] {
        &self.ids[..self.regions.prefix_len()]
    }

    pub fn target(&self) -> &[usize] {
        &self.ids[self.regions.target.range()]
    }

    pub fn suffix(&self) -> &[usize] {
        &self.ids[self.regions.suffix.range()]
    }
}

pub fn encode(example: &Example, vocab: &Vocabulary) -> Result<TokenizedExample, TokenError> {
    let mut ids = Vec::with_capacity(example.input.len() + example.target.len() + example.suffix.len() + 2);
    let push = |t: Token, ids: &mut Vec<usize>| -> Result<(), TokenError> {
        ids.push(vocab.id(t)?);
        Ok(())
    };
    for &s in &example.input {
        push(Token::from_symbol(s), &mut ids)?;
    }
    let input = Span::new(0, ids.len());
    push(Token::Sep, &mut ids)?;
    push(Token::Bot, &mut ids)?;
    let target_start = ids.len();
    for &s in &example.target {
        push(Token::from_symbol(s), &mut ids)?;
    }
    let target = Span::new(target_start, ids.len());
    for &b in &example.suffix {
        push(Token::Bit(b), &mut ids)?;
    }
    let suffix = Span::new(target.end, ids.len());
    Ok(TokenizedExample { ids, regions: Regions { input, target, suffix }, universe_index: example.universe_index })
}

pub fn decode(tokenized: &TokenizedExample, vocab: &Vocabulary) -> Result<Example, TokenError> {
    let r = &tokenized.regions;
    if !r.is_consistent() || r.total_len() != tokenized.ids.len() {
        return Err(TokenError::Malformed("regions do not match the sequence".into()));
    }
    let symbols = |span: Span| -> Result<Vec<Symbol>, TokenError> {
        tokenized.ids[span.range()]
            .iter()
            .map(|&id| {
                let t = vocab.token(id)?;
                t.to_symbol().ok_or_else(|| TokenError::Malformed(alloc::format!("unexpected {t}")))
            })
            .collect()
    };
    let suffix = tokenized.ids[r.suffix.range()]
        .iter()
        .map(|&id| match vocab.token(id)? {
            Token::Bit(b) => Ok(b),
            t => Err(TokenError::Malformed(alloc::format!("expected a suffix bit, got {t}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Example {
        input: symbols(r.input)?,
        target: symbols(r.target)?,
        suffix,
        universe_index: tokenized.universe_index,
    })
}
