//! Decoder-only transformer: configuration, parameters, the traced forward
//! pass used for training, cached incremental inference, and AdamW.
//!
//! Blocks are pre-layernorm with learned absolute positions and no dropout.
//! Attention projections carry no bias; feed-forward layers do.

mod forward;
mod infer;
mod optim;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::rng;
use crate::tensor::{Real, Tape, Tensor, TensorError, Var};

pub use forward::{batch_loss, forward, loss_on_regions, region_targets, teacher_forced, RegionLoss, RegionTargets};
pub use infer::{argmax, argmax_among, greedy_decode, greedy_decode_with, Decoder};
pub use optim::{cosine_lr, AdamW, LrSchedule, OptimizerState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("sequence of length {len} exceeds max_seq_len {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("decoding {len} positions overflows max_seq_len {max}")]
    LengthOverflow { len: usize, max: usize },
    #[error("loss region is empty")]
    EmptyRegion,
    #[error("token id {id} outside vocabulary of {vocab}")]
    TokenOutOfRange { id: usize, vocab: usize },
    #[error("batch rows differ in length")]
    Ragged,
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Standard deviation of the normal weight initializer.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelConfig {
    pub depth: usize,
    pub n_heads: usize,
    pub d_emb: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub init_seed: u64,
}

impl ModelConfig {
    /// The depth-`D` family member: `D` heads of width 64, `d_ff = 4·d_emb`.
    pub fn for_depth(depth: usize, vocab_size: usize, max_seq_len: usize, init_seed: u64) -> Self {
        let d_emb = 64 * depth;
        Self { depth, n_heads: depth, d_emb, d_ff: 4 * d_emb, vocab_size, max_seq_len, init_seed }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: String| Err(ModelError::InvalidConfig(m));
        if self.depth == 0 || self.n_heads == 0 || self.d_emb == 0 || self.d_ff == 0 {
            return fail(format!("zero dimension in {self:?}"));
        }
        if !self.d_emb.is_multiple_of(self.n_heads) {
            return fail(format!("d_emb {} not divisible by {} heads", self.d_emb, self.n_heads));
        }
        if self.vocab_size == 0 || self.max_seq_len == 0 {
            return fail(format!("empty vocabulary or context in {self:?}"));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_emb / self.n_heads
    }

    pub fn param_specs(&self) -> Vec<ParamSpec> {
        let (d, f, v) = (self.d_emb, self.d_ff, self.vocab_size);
        let w = |name: String, shape: Vec<usize>| ParamSpec { name, shape, kind: ParamKind::Weight };
        let bias = |name: String, n: usize| ParamSpec { name, shape: vec![n], kind: ParamKind::Bias };
        let gain = |name: String, n: usize| ParamSpec { name, shape: vec![n], kind: ParamKind::Gain };
        let mut specs = vec![w("tok_emb".into(), vec![v, d]), w("pos_emb".into(), vec![self.max_seq_len, d])];
        for l in 0..self.depth {
            specs.extend([
                gain(format!("h{l}.ln1.g"), d),
                bias(format!("h{l}.ln1.b"), d),
                w(format!("h{l}.attn.q"), vec![d, d]),
                w(format!("h{l}.attn.k"), vec![d, d]),
                w(format!("h{l}.attn.v"), vec![d, d]),
                w(format!("h{l}.attn.o"), vec![d, d]),
                gain(format!("h{l}.ln2.g"), d),
                bias(format!("h{l}.ln2.b"), d),
                w(format!("h{l}.ff.w1"), vec![d, f]),
                bias(format!("h{l}.ff.b1"), f),
                w(format!("h{l}.ff.w2"), vec![f, d]),
                bias(format!("h{l}.ff.b2"), d),
            ]);
        }
        specs.extend([gain("ln_f.g".into(), d), bias("ln_f.b".into(), d), w("head".into(), vec![d, v])]);
        specs
    }

    pub fn param_count(&self) -> usize {
        self.param_specs().iter().map(|s| s.shape.iter().product::<usize>()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    Gain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub kind: ParamKind,
}

/// Positions of each tensor inside [`Parameters::tensors`].
pub(crate) mod slot {
    pub const TOK: usize = 0;
    pub const POS: usize = 1;
    pub const PER_LAYER: usize = 12;
    pub const LN1_G: usize = 0;
    pub const LN1_B: usize = 1;
    pub const WQ: usize = 2;
    pub const WK: usize = 3;
    pub const WV: usize = 4;
    pub const WO: usize = 5;
    pub const LN2_G: usize = 6;
    pub const LN2_B: usize = 7;
    pub const W1: usize = 8;
    pub const B1: usize = 9;
    pub const W2: usize = 10;
    pub const B2: usize = 11;

    pub fn layer(l: usize, k: usize) -> usize {
        2 + l * PER_LAYER + k
    }

    pub fn final_g(depth: usize) -> usize {
        2 + depth * PER_LAYER
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<F> {
    pub config: ModelConfig,
    pub tensors: Vec<Tensor<F>>,
}

impl<F: Real> Parameters<F> {
    /// Weights drawn from N(0, 0.02²) in spec order, biases zero, gains one.
    pub fn init(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = rng::stream(config.init_seed, rng::INIT);
        let normal = Normal::new(0.0, INIT_STD).expect("finite std");
        let tensors = config
            .param_specs()
            .into_iter()
            .map(|spec| match spec.kind {
                ParamKind::Weight => Tensor::from_fn(spec.shape, |_| F::from_f64(normal.sample(&mut rng))),
                ParamKind::Bias => Tensor::zeros(spec.shape),
                ParamKind::Gain => Tensor::from_fn(spec.shape, |_| F::ONE),
            })
            .collect();
        Ok(Self { config: config.clone(), tensors })
    }

    /// Rebuilds parameters from a flat buffer in spec order.
    pub fn from_flat(config: &ModelConfig, flat: &[F]) -> Result<Self, ModelError> {
        config.validate()?;
        if flat.len() != config.param_count() {
            return Err(ModelError::InvalidConfig(format!(
                "flat buffer of {} values for {} parameters",
                flat.len(),
                config.param_count()
            )));
        }
        let mut offset = 0;
        let tensors = config
            .param_specs()
            .into_iter()
            .map(|spec| {
                let n: usize = spec.shape.iter().product();
                let t = Tensor::new(spec.shape, flat[offset..offset + n].to_vec()).expect("sized from spec");
                offset += n;
                t
            })
            .collect();
        Ok(Self { config: config.clone(), tensors })
    }

    pub fn flat(&self) -> Vec<F> {
        self.tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Registers every tensor as a trainable leaf.
    pub fn on_tape(&self, tape: &mut Tape<F>) -> Vec<Var> {
        self.tensors.iter().map(|t| tape.param(t.clone())).collect()
    }

    pub(crate) fn get(&self, index: usize) -> &[F] {
        self.tensors[index].data()
    }
}
