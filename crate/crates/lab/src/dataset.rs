//! Dataset files: one tab-separated record per example, a header with the
//! task and seeds, the vocabulary table, and SHA-256 checksums.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use sweetspot_core::corpus::{Base, DatasetSplit, Example, Symbol, TaskSpec};
use sweetspot_core::tokenizer::Vocabulary;

use crate::config::Config;
use crate::error::{LabError, Result};

pub const GENERATOR_VERSION: &str = "sweetspot-dataset/1";

fn symbol_text(s: Symbol) -> String {
    match s {
        Symbol::Base(b) => b.as_char().to_string(),
        Symbol::Digit(d) => d.to_string(),
        Symbol::Blank => "_".into(),
        Symbol::Sep => "|".into(),
        Symbol::Cell(v) => v.to_string(),
    }
}

fn parse_symbol(text: &str, cells: bool) -> Result<Symbol> {
    let bad = || LabError::Data(format!("bad symbol {text:?}"));
    Ok(match text {
        "_" => Symbol::Blank,
        "|" => Symbol::Sep,
        t if cells => Symbol::Cell(t.parse().map_err(|_| bad())?),
        t if t.len() == 1 && t.as_bytes()[0].is_ascii_digit() => Symbol::Digit(t.as_bytes()[0] - b'0'),
        t if t.chars().count() == 1 => {
            Symbol::Base(Base::from_char(t.chars().next().expect("one char")).map_err(|_| bad())?)
        }
        _ => return Err(bad()),
    })
}

fn symbols_text(xs: &[Symbol]) -> String {
    xs.iter().map(|&s| symbol_text(s)).collect::<Vec<_>>().join(" ")
}

/// `index \t input \t target \t suffix`, with `-` for an empty suffix.
pub fn example_line(e: &Example) -> String {
    let suffix: String =
        if e.suffix.is_empty() { "-".into() } else { e.suffix.iter().map(|&b| if b { '1' } else { '0' }).collect() };
    format!("{}\t{}\t{}\t{}", e.universe_index, symbols_text(&e.input), symbols_text(&e.target), suffix)
}

pub fn parse_example_line(line: &str, spec: &TaskSpec) -> Result<Example> {
    let bad = || LabError::Data(format!("malformed record {line:?}"));
    let fields: Vec<&str> = line.split('\t').collect();
    let [index, input, target, suffix] = fields[..] else { return Err(bad()) };
    let cells = spec.family == sweetspot_core::corpus::TaskFamily::Nw;
    let parse = |text: &str, cells: bool| text.split(' ').map(|t| parse_symbol(t, cells)).collect::<Result<Vec<_>>>();
    let suffix = match suffix {
        "-" => Vec::new(),
        bits => bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(bad()),
            })
            .collect::<Result<_>>()?,
    };
    Ok(Example {
        universe_index: index.parse().map_err(|_| bad())?,
        input: parse(input, false)?,
        target: parse(target, cells)?,
        suffix,
    })
}

pub fn examples_text(examples: &[Example]) -> String {
    let mut out = String::new();
    for e in examples {
        out.push_str(&example_line(e));
        out.push('\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub dir: PathBuf,
    pub universe: u128,
    pub train_sha256: String,
    pub validation_sha256: String,
}

pub fn header_text(config: &Config, spec: &TaskSpec, train_sha: &str, val_sha: &str) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "generator = \"{GENERATOR_VERSION}\"");
    let _ = writeln!(h, "task = \"{}\"", spec.family);
    let _ = writeln!(h, "size = {}", spec.size);
    let _ = writeln!(h, "match_score = {}", spec.scoring.match_score());
    let _ = writeln!(h, "mismatch_score = {}", spec.scoring.mismatch_score());
    let _ = writeln!(h, "gap_penalty = {}", spec.scoring.gap_penalty());
    let _ = writeln!(h, "suffix_bits = {}", spec.suffix_bits);
    let _ = writeln!(h, "universe_size = \"{}\"", spec.universe_size());
    let _ = writeln!(h, "n = {}", config.n);
    let _ = writeln!(h, "val_size = {}", config.val_size);
    let _ = writeln!(h, "seed = {}", config.seed);
    let _ = writeln!(h, "validation_seed = {}", config.validation_seed);
    let _ = writeln!(h, "suffix_seed = {}", config.suffix_seed);
    let _ = writeln!(h, "train_sha256 = \"{train_sha}\"");
    let _ = writeln!(h, "validation_sha256 = \"{val_sha}\"");
    h
}

/// Writes `header.toml`, `train.tsv`, `validation.tsv` and `vocab.tsv`
/// into `dir`.
pub fn write_dataset(config: &Config, dir: &Path) -> Result<Written> {
    let spec = config.task_spec()?;
    let split: DatasetSplit = config.split(&spec)?;
    let train = examples_text(&split.train);
    let val = examples_text(&split.validation);
    let (train_sha, val_sha) = (sha256_hex(train.as_bytes()), sha256_hex(val.as_bytes()));
    fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    let put = |name: &str, text: &str| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(LabError::io(&p))
    };
    put("train.tsv", &train)?;
    put("validation.tsv", &val)?;
    put("vocab.tsv", &Vocabulary::build(&spec).to_table())?;
    put("header.toml", &header_text(config, &spec, &train_sha, &val_sha))?;
    put("config.toml", &config.echo())?;
    Ok(Written {
        dir: dir.to_path_buf(),
        universe: spec.universe_size(),
        train_sha256: train_sha,
        validation_sha256: val_sha,
    })
}

pub fn read_examples(path: &Path, spec: &TaskSpec) -> Result<Vec<Example>> {
    let text = fs::read_to_string(path).map_err(LabError::io(path))?;
    text.lines().map(|l| parse_example_line(l, spec)).collect()
}
