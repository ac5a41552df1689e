//! Seeded training runs: gradient accumulation over shuffled epochs,
//! periodic exact-match evaluation, early stopping and budget censoring.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};

use crate::corpus::{CorpusError, DatasetSplit, TaskSpec};
use crate::model::{
    batch_loss, greedy_decode_with, teacher_forced, AdamW, LrSchedule, ModelConfig, ModelError, OptimizerState,
    Parameters,
};
use crate::rng;
use crate::tensor::Tape;
use crate::tokenizer::{encode, Regions, Token, TokenError, TokenizedExample, Vocabulary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("target and suffix regions overlap: {0:?}")]
    RegionOverlap(Regions),
    #[error("example regions {0:?} differ from the task layout")]
    RegionMismatch(Regions),
    #[error("snapshot does not match this run: {0}")]
    Snapshot(String),
    #[error("metrics sink failed: {0}")]
    Sink(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStop {
    pub threshold: f64,
    /// Consecutive evaluations at or above the threshold.
    pub patience: usize,
}

impl Default for EarlyStop {
    fn default() -> Self {
        Self { threshold: 0.999, patience: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub micro_batch: usize,
    pub accumulation: usize,
    pub max_updates: u64,
    pub eval_every: u64,
    pub eval_train_subset: usize,
    pub eval_val_subset: usize,
    pub early_stop: Option<EarlyStop>,
    pub optimizer: AdamW,
    pub lr_max: f64,
    pub lr_min: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            micro_batch: 8,
            accumulation: 20,
            max_updates: 50_000,
            eval_every: 100,
            eval_train_subset: 2000,
            eval_val_subset: 2000,
            early_stop: Some(EarlyStop::default()),
            optimizer: AdamW::default(),
            lr_max: 1e-3,
            lr_min: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn effective_batch(&self) -> usize {
        self.micro_batch * self.accumulation
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule { lr_max: self.lr_max, lr_min: self.lr_min, horizon: self.max_updates }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::InvalidConfig(m));
        if self.micro_batch == 0 || self.accumulation == 0 {
            return fail(format!("batch {} x {}", self.micro_batch, self.accumulation));
        }
        if self.eval_every == 0 || self.max_updates == 0 || !self.max_updates.is_multiple_of(self.eval_every) {
            return fail(format!("eval_every {} must divide max_updates {}", self.eval_every, self.max_updates));
        }
        if self.eval_train_subset == 0 || self.eval_val_subset == 0 {
            return fail("evaluation subsets must be non-empty".into());
        }
        if let Some(es) = self.early_stop {
            if es.patience == 0 || !(0.0..=1.0).contains(&es.threshold) {
                return fail(format!("early stop {es:?}"));
            }
        }
        Ok(())
    }
}

/// Tokenized train and validation sets sharing one region layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub train: Vec<TokenizedExample>,
    pub validation: Vec<TokenizedExample>,
    pub regions: Regions,
    /// Ids the suffix region is decoded over; empty without a suffix.
    pub bit_ids: Vec<usize>,
}

impl TrainData {
    pub fn from_split(spec: &TaskSpec, split: &DatasetSplit, vocab: &Vocabulary) -> Result<Self, TrainError> {
        let tok = |xs: &[crate::corpus::Example]| xs.iter().map(|e| encode(e, vocab)).collect::<Result<Vec<_>, _>>();
        let bit_ids = if spec.suffix_bits > 0 {
            vec![vocab.id(Token::Bit(false))?, vocab.id(Token::Bit(true))?]
        } else {
            Vec::new()
        };
        Ok(Self {
            train: tok(&split.train)?,
            validation: tok(&split.validation)?,
            regions: Regions::for_task(spec),
            bit_ids,
        })
    }
}

/// Exact-match and diagnostic accuracies on one split.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SplitMetrics {
    /// All target (matrix) tokens generated correctly.
    pub exact_match: f64,
    /// All suffix bits generated correctly; `None` without a suffix.
    pub suffix_exact_match: Option<f64>,
    pub suffix_bit_accuracy: Option<f64>,
    /// Fraction of target tokens correct in free-running generation.
    pub token_accuracy: f64,
    /// Fraction of target tokens predicted correctly given the true prefix.
    pub teacher_forced_accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub t: u64,
    pub train: SplitMetrics,
    pub validation: SplitMetrics,
    /// Mean training loss over the updates since the previous record.
    pub loss: f64,
    /// Learning rate of the latest update.
    pub lr: f64,
}

impl MetricsRecord {
    pub fn a_t(&self) -> f64 {
        self.train.exact_match
    }

    pub fn a_v(&self) -> f64 {
        self.validation.exact_match
    }

    pub fn a_r(&self) -> Option<f64> {
        self.train.suffix_exact_match
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<MetricsRecord>,
    /// The budget ran out before any end condition fired.
    pub censored: bool,
    pub early_stopped: bool,
    pub updates: u64,
}

/// Greedy-decodes target and suffix for every example and scores the two
/// regions independently. Suffix positions are decoded over `bit_ids` only
/// (the whole vocabulary when empty).
pub fn evaluate_exact_match(
    params: &Parameters<f32>,
    examples: &[&TokenizedExample],
    regions: &Regions,
    bit_ids: &[usize],
) -> Result<SplitMetrics, TrainError> {
    if !regions.is_consistent() {
        return Err(TrainError::RegionOverlap(*regions));
    }
    if examples.is_empty() {
        return Ok(SplitMetrics::default());
    }
    let prefixes: Vec<&[usize]> = examples.iter().map(|e| e.prefix()).collect();
    if let Some(ex) = examples.iter().find(|e| e.regions != *regions) {
        return Err(TrainError::RegionMismatch(ex.regions));
    }
    let mut allowed: Vec<Option<&[usize]>> = vec![None; regions.target.len()];
    allowed.resize(regions.target.len() + regions.suffix.len(), (!bit_ids.is_empty()).then_some(bit_ids));
    let generated = greedy_decode_with(params, &prefixes, allowed.len(), &allowed)?;
    let seqs: Vec<&[usize]> = examples.iter().map(|e| e.ids.as_slice()).collect();
    let forced = teacher_forced(params, &seqs)?;

    let (target, suffix) = (regions.target.range(), regions.suffix.range());
    let (mut exact, mut tokens, mut forced_hits, mut suffix_exact, mut bits) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for ((out, ex), pred) in generated.iter().zip(examples).zip(&forced) {
        let hits = target.clone().filter(|&p| out[p] == ex.ids[p]).count();
        tokens += hits;
        exact += usize::from(hits == target.len());
        forced_hits += target.clone().filter(|&p| pred[p - 1] == ex.ids[p]).count();
        let bit_hits = suffix.clone().filter(|&p| out[p] == ex.ids[p]).count();
        bits += bit_hits;
        suffix_exact += usize::from(bit_hits == suffix.len());
    }
    let n = examples.len() as f64;
    let cells = (examples.len() * target.len()).max(1) as f64;
    let has_suffix = !suffix.is_empty();
    Ok(SplitMetrics {
        exact_match: exact as f64 / n,
        suffix_exact_match: has_suffix.then(|| suffix_exact as f64 / n),
        suffix_bit_accuracy: has_suffix.then(|| bits as f64 / (examples.len() * suffix.len()) as f64),
        token_accuracy: tokens as f64 / cells,
        teacher_forced_accuracy: forced_hits as f64 / cells,
    })
}

/// Everything needed to continue a run after update `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: u64,
    pub params: Vec<f32>,
    pub m: Vec<f32>,
    pub v: Vec<f32>,
    pub records: Vec<MetricsRecord>,
    pub streak: usize,
    pub early_stopped: bool,
    pub loss_sum: f64,
    pub loss_count: u64,
}

/// One seeded optimization trajectory.
pub struct Trainer {
    config: TrainConfig,
    data: TrainData,
    seed: u64,
    params: Parameters<f32>,
    state: OptimizerState<f32>,
    eval_train: Vec<usize>,
    eval_val: Vec<usize>,
    records: Vec<MetricsRecord>,
    streak: usize,
    early_stopped: bool,
    loss_sum: f64,
    loss_count: u64,
    last_lr: f64,
    epoch: Option<(u64, Vec<usize>)>,
}

fn subset(len: usize, k: usize, seed: u64, purpose: u64) -> Vec<usize> {
    if k >= len {
        return (0..len).collect();
    }
    let mut picked = index::sample(&mut rng::stream(seed, purpose), len, k).into_vec();
    picked.sort_unstable();
    picked
}

impl Trainer {
    pub fn new(config: TrainConfig, model: &ModelConfig, data: TrainData, seed: u64) -> Result<Self, TrainError> {
        config.validate()?;
        if data.train.is_empty() {
            return Err(TrainError::InvalidConfig("empty training set".into()));
        }
        if data.regions.total_len() > model.max_seq_len {
            return Err(TrainError::InvalidConfig(format!(
                "sequences of {} tokens exceed max_seq_len {}",
                data.regions.total_len(),
                model.max_seq_len
            )));
        }
        let params = Parameters::init(model)?;
        let state = OptimizerState::new(&params);
        let eval_train = subset(data.train.len(), config.eval_train_subset, seed, rng::EVAL_SUBSET);
        let eval_val = subset(data.validation.len(), config.eval_val_subset, seed, rng::EVAL_VAL_SUBSET);
        let last_lr = config.lr_max;
        Ok(Self {
            config,
            data,
            seed,
            params,
            state,
            eval_train,
            eval_val,
            records: Vec::new(),
            streak: 0,
            early_stopped: false,
            loss_sum: 0.0,
            loss_count: 0,
            last_lr,
            epoch: None,
        })
    }

    pub fn t(&self) -> u64 {
        self.state.t
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn params(&self) -> &Parameters<f32> {
        &self.params
    }

    pub fn records(&self) -> &[MetricsRecord] {
        &self.records
    }

    pub fn data(&self) -> &TrainData {
        &self.data
    }

    pub fn eval_subsets(&self) -> (&[usize], &[usize]) {
        (&self.eval_train, &self.eval_val)
    }

    pub fn is_finished(&self) -> bool {
        self.early_stopped || self.state.t >= self.config.max_updates
    }

    /// Training-set position of the `c`-th example drawn since the start
    /// of the run. Epoch `e` visits a fresh permutation seeded by `e`.
    fn example_at(&mut self, c: u64) -> usize {
        let n = self.data.train.len() as u64;
        let (e, pos) = (c / n, (c % n) as usize);
        if self.epoch.as_ref().is_none_or(|(cur, _)| *cur != e) {
            let mut perm: Vec<usize> = (0..n as usize).collect();
            perm.shuffle(&mut rng::stream(self.seed, rng::SHUFFLE_BASE + e));
            self.epoch = Some((e, perm));
        }
        self.epoch.as_ref().expect("set above").1[pos]
    }

    /// One optimizer update over `accumulation` micro-batches; returns the
    /// mean micro-batch loss.
    pub fn update(&mut self) -> Result<f64, TrainError> {
        let (mb, acc) = (self.config.micro_batch, self.config.accumulation);
        let base = self.state.t * (mb * acc) as u64;
        let mut grads: Vec<Vec<f32>> = self.params.tensors.iter().map(|t| vec![0.0; t.numel()]).collect();
        let mut total = 0.0;
        for a in 0..acc {
            let idx: Vec<usize> = (0..mb).map(|i| self.example_at(base + (a * mb + i) as u64)).collect();
            let seqs: Vec<&[usize]> = idx.iter().map(|&i| self.data.train[i].ids.as_slice()).collect();
            let mut tape = Tape::new();
            let vars = self.params.on_tape(&mut tape);
            let loss = batch_loss(&mut tape, &self.params.config, &vars, &seqs, &self.data.regions)?;
            total += tape.value(loss).data()[0] as f64;
            let g = tape.backward(loss).map_err(ModelError::from)?;
            for (sum, &v) in grads.iter_mut().zip(&vars) {
                if let Some(gv) = g.get(v) {
                    sum.iter_mut().zip(gv).for_each(|(s, &x)| *s += x);
                }
            }
        }
        let inv = 1.0 / acc as f32;
        grads.iter_mut().for_each(|g| g.iter_mut().for_each(|x| *x *= inv));
        let lr = self.config.schedule().at(self.state.t);
        self.config.optimizer.step(&mut self.params, &grads, &mut self.state, lr)?;
        self.last_lr = lr;
        let mean = total / acc as f64;
        self.loss_sum += mean;
        self.loss_count += 1;
        Ok(mean)
    }

    pub fn evaluate(&self) -> Result<(SplitMetrics, SplitMetrics), TrainError> {
        fn pick<'a>(set: &'a [TokenizedExample], idx: &[usize]) -> Vec<&'a TokenizedExample> {
            idx.iter().map(|&i| &set[i]).collect()
        }
        let train = evaluate_exact_match(
            &self.params,
            &pick(&self.data.train, &self.eval_train),
            &self.data.regions,
            &self.data.bit_ids,
        )?;
        let val = evaluate_exact_match(
            &self.params,
            &pick(&self.data.validation, &self.eval_val),
            &self.data.regions,
            &self.data.bit_ids,
        )?;
        Ok((train, val))
    }

    fn record(&mut self) -> Result<MetricsRecord, TrainError> {
        let (train, validation) = self.evaluate()?;
        let loss = if self.loss_count == 0 { f64::NAN } else { self.loss_sum / self.loss_count as f64 };
        let rec = MetricsRecord { t: self.state.t, train, validation, loss, lr: self.last_lr };
        self.loss_sum = 0.0;
        self.loss_count = 0;
        if let Some(es) = self.config.early_stop {
            if rec.a_t() >= es.threshold && rec.a_v() >= es.threshold {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
            self.early_stopped = self.streak >= es.patience;
        }
        self.records.push(rec);
        Ok(rec)
    }

    /// Trains until the budget is spent or early stopping fires, handing
    /// every metrics record to `sink` as soon as it is produced.
    pub fn run(
        &mut self,
        mut sink: impl FnMut(&Trainer, &MetricsRecord) -> Result<(), TrainError>,
    ) -> Result<RunResult, TrainError> {
        while !self.is_finished() {
            self.update()?;
            if self.state.t.is_multiple_of(self.config.eval_every) {
                let rec = self.record()?;
                sink(self, &rec)?;
            }
        }
        Ok(self.result())
    }

    pub fn result(&self) -> RunResult {
        RunResult {
            records: self.records.clone(),
            censored: !self.early_stopped && self.state.t >= self.config.max_updates,
            early_stopped: self.early_stopped,
            updates: self.state.t,
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let flat = |xs: &[Vec<f32>]| xs.iter().flatten().copied().collect::<Vec<_>>();
        Snapshot {
            t: self.state.t,
            params: self.params.flat(),
            m: flat(&self.state.m),
            v: flat(&self.state.v),
            records: self.records.clone(),
            streak: self.streak,
            early_stopped: self.early_stopped,
            loss_sum: self.loss_sum,
            loss_count: self.loss_count,
        }
    }

    /// Rebuilds a trainer that continues exactly where `snapshot` left off.
    pub fn restore(
        config: TrainConfig,
        model: &ModelConfig,
        data: TrainData,
        seed: u64,
        snapshot: Snapshot,
    ) -> Result<Self, TrainError> {
        let mut trainer = Self::new(config, model, data, seed)?;
        let count = model.param_count();
        if snapshot.params.len() != count || snapshot.m.len() != count || snapshot.v.len() != count {
            return Err(TrainError::Snapshot(format!("expected {count} values per buffer")));
        }
        if snapshot.t > trainer.config.max_updates {
            return Err(TrainError::Snapshot(format!("step {} beyond budget", snapshot.t)));
        }
        trainer.params = Parameters::from_flat(model, &snapshot.params)?;
        let split = |flat: &[f32]| -> Vec<Vec<f32>> {
            let mut offset = 0;
            trainer
                .params
                .tensors
                .iter()
                .map(|t| {
                    let s = flat[offset..offset + t.numel()].to_vec();
                    offset += t.numel();
                    s
                })
                .collect()
        };
        let (m, v) = (split(&snapshot.m), split(&snapshot.v));
        trainer.state = OptimizerState { m, v, t: snapshot.t };
        trainer.records = snapshot.records;
        trainer.streak = snapshot.streak;
        trainer.early_stopped = snapshot.early_stopped;
        trainer.loss_sum = snapshot.loss_sum;
        trainer.loss_count = snapshot.loss_count;
        trainer.last_lr =
            if snapshot.t == 0 { trainer.config.lr_max } else { trainer.config.schedule().at(snapshot.t - 1) };
        Ok(trainer)
    }
}

#[cfg(test)]
mod tests;
