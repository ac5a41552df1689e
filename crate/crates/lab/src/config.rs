//! The flat key-value config shared by every subcommand, `--set`
//! overrides, sweep grid expansion, and the config echo and hash.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sweetspot_core::corpus::{DatasetSplit, ScoringScheme, TaskFamily, TaskSpec};
use sweetspot_core::model::{AdamW, ModelConfig};
use sweetspot_core::tokenizer::{Regions, Vocabulary};
use sweetspot_core::train::{EarlyStop, TrainConfig};
use toml::{Table, Value};

use crate::error::{LabError, Result};

/// Keys that a sweep file may give as lists.
pub const GRID_KEYS: [&str; 3] = ["depth", "n", "seed"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// `nw`, `addition` or `multiplication`.
    pub task: String,
    /// Sequence length for `nw`, operand digits for arithmetic.
    pub size: usize,
    pub suffix_bits: usize,
    pub match_score: i32,
    pub mismatch_score: i32,
    pub gap_penalty: i32,

    pub n: usize,
    pub val_size: usize,
    /// Run seed: training sample, initialization, batch order and
    /// evaluation subsets.
    pub seed: u64,
    pub validation_seed: u64,
    pub suffix_seed: u64,

    pub depth: usize,

    pub micro_batch: usize,
    pub accumulation: usize,
    pub max_updates: u64,
    pub eval_every: u64,
    pub eval_train_subset: usize,
    pub eval_val_subset: usize,
    pub early_stop: bool,
    pub early_stop_threshold: f64,
    pub early_stop_patience: usize,
    pub lr_max: f64,
    pub lr_min: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub weight_decay: f64,
    /// Updates between checkpoints; a multiple of `eval_every`.
    pub checkpoint_every: u64,
    pub deterministic: bool,
}

impl Default for Config {
    fn default() -> Self {
        let train = TrainConfig::default();
        let adam = AdamW::default();
        let stop = EarlyStop::default();
        let scoring = ScoringScheme::default();
        Self {
            task: "nw".into(),
            size: 5,
            suffix_bits: 0,
            match_score: scoring.match_score(),
            mismatch_score: scoring.mismatch_score(),
            gap_penalty: scoring.gap_penalty(),
            n: 1000,
            val_size: sweetspot_core::corpus::DEFAULT_VAL_SIZE,
            seed: 0,
            validation_seed: 0,
            suffix_seed: 0,
            depth: 3,
            micro_batch: train.micro_batch,
            accumulation: train.accumulation,
            max_updates: train.max_updates,
            eval_every: train.eval_every,
            eval_train_subset: train.eval_train_subset,
            eval_val_subset: train.eval_val_subset,
            early_stop: true,
            early_stop_threshold: stop.threshold,
            early_stop_patience: stop.patience,
            lr_max: train.lr_max,
            lr_min: train.lr_min,
            beta1: adam.beta1,
            beta2: adam.beta2,
            adam_eps: adam.eps,
            weight_decay: adam.weight_decay,
            checkpoint_every: 1000,
            deterministic: true,
        }
    }
}

/// Parses `key=value` with `value` read as a TOML value, falling back to a
/// bare string.
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (key, raw) =
        text.split_once('=').ok_or_else(|| LabError::Config(format!("override {text:?} is not key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key, value))
}

pub fn read_table(path: &Path) -> Result<Table> {
    if !path.exists() {
        return Err(LabError::MissingInput(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(LabError::io(path))?;
    text.parse::<Table>().map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (k, v) = parse_override(o)?;
        table.insert(k, v);
    }
    Ok(())
}

/// `DETERMINISTIC=1` or `0` in the environment wins over the file.
pub fn apply_env(table: &mut Table) -> Result<()> {
    if let Ok(v) = std::env::var("DETERMINISTIC") {
        let on = match v.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(LabError::Config(format!("DETERMINISTIC={other:?}; expected 1 or 0"))),
        };
        table.insert("deterministic".into(), Value::Boolean(on));
    }
    Ok(())
}

impl Config {
    pub fn from_table(table: Table) -> Result<Self> {
        let config: Config = Value::Table(table).try_into().map_err(|e| LabError::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a single-run config, applying `--set` overrides and the
    /// environment.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let mut table = read_table(path)?;
        apply_overrides(&mut table, overrides)?;
        apply_env(&mut table)?;
        Self::from_table(table)
    }

    pub fn family(&self) -> Result<TaskFamily> {
        TaskFamily::parse(&self.task).ok_or_else(|| LabError::Config(format!("unknown task {:?}", self.task)))
    }

    pub fn task_spec(&self) -> Result<TaskSpec> {
        let scoring = ScoringScheme::new(self.match_score, self.mismatch_score, self.gap_penalty)?;
        let spec = TaskSpec { family: self.family()?, size: self.size, scoring, suffix_bits: self.suffix_bits };
        spec.validate()?;
        Ok(spec)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            micro_batch: self.micro_batch,
            accumulation: self.accumulation,
            max_updates: self.max_updates,
            eval_every: self.eval_every,
            eval_train_subset: self.eval_train_subset,
            eval_val_subset: self.eval_val_subset,
            early_stop: self
                .early_stop
                .then_some(EarlyStop { threshold: self.early_stop_threshold, patience: self.early_stop_patience }),
            optimizer: AdamW {
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.adam_eps,
                weight_decay: self.weight_decay,
            },
            lr_max: self.lr_max,
            lr_min: self.lr_min,
        }
    }

    pub fn model_config(&self, spec: &TaskSpec) -> ModelConfig {
        let vocab = Vocabulary::build(spec);
        ModelConfig::for_depth(self.depth, vocab.len(), Regions::for_task(spec).total_len(), self.seed)
    }

    pub fn split(&self, spec: &TaskSpec) -> Result<DatasetSplit> {
        Ok(DatasetSplit::generate(spec, self.n, self.val_size, self.seed, self.validation_seed, self.suffix_seed)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.family()?;
        if self.depth == 0 {
            return Err(LabError::Config("depth must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(LabError::Config("n must be at least 1".into()));
        }
        if self.val_size == 0 {
            return Err(LabError::Config("val_size must be at least 1".into()));
        }
        if self.checkpoint_every == 0 || !self.checkpoint_every.is_multiple_of(self.eval_every.max(1)) {
            return Err(LabError::Config(format!(
                "checkpoint_every {} must be a positive multiple of eval_every {}",
                self.checkpoint_every, self.eval_every
            )));
        }
        if !(self.lr_max > 0.0 && self.lr_min >= 0.0 && self.lr_min <= self.lr_max) {
            return Err(LabError::Config(format!("learning rates {} -> {}", self.lr_max, self.lr_min)));
        }
        self.train_config().validate()?;
        self.task_spec()?;
        Ok(())
    }

    /// The canonical echo: every key, in schema order.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the echo.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.echo().as_bytes()))[..16].to_string()
    }

    pub fn run_id(&self) -> String {
        let suffix = if self.suffix_bits > 0 { format!("r{}", self.suffix_bits) } else { String::new() };
        format!("{}{}{suffix}-n{}-d{}-s{}", self.task, self.size, self.n, self.depth, self.seed)
    }
}

impl std::str::FromStr for Config {
    type Err = LabError;

    fn from_str(text: &str) -> Result<Self> {
        let table = text.parse::<Table>().map_err(|e| LabError::Config(e.to_string()))?;
        Self::from_table(table)
    }
}

/// A sweep file: the config schema with `depth`, `n` and `seed` allowed to
/// be lists. Cells are ordered by depth, then size, then seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub table: Table,
    pub cells: Vec<Config>,
}

impl SweepSpec {
    pub fn from_table(table: Table) -> Result<Self> {
        let list = |key: &str| -> Result<Vec<Option<Value>>> {
            match table.get(key) {
                Some(Value::Array(items)) if items.is_empty() => {
                    Err(LabError::Config(format!("{key} is an empty list")))
                }
                Some(Value::Array(items)) => Ok(items.iter().cloned().map(Some).collect()),
                other => Ok(vec![other.cloned()]),
            }
        };
        let (depths, sizes, seeds) = (list("depth")?, list("n")?, list("seed")?);
        let mut cells = Vec::new();
        for d in &depths {
            for n in &sizes {
                for s in &seeds {
                    let mut cell = table.clone();
                    for (key, v) in GRID_KEYS.iter().zip([d, n, s]) {
                        if let Some(v) = v {
                            cell.insert((*key).to_string(), v.clone());
                        }
                    }
                    cells.push(Config::from_table(cell)?);
                }
            }
        }
        let mut ids: Vec<String> = cells.iter().map(Config::run_id).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(LabError::Config(format!("duplicate cell {}", w[0])));
        }
        Ok(Self { table, cells })
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let mut table = read_table(path)?;
        apply_overrides(&mut table, overrides)?;
        apply_env(&mut table)?;
        Self::from_table(table)
    }

    pub fn echo(&self) -> String {
        toml::to_string(&self.table).expect("table serializes")
    }
}
