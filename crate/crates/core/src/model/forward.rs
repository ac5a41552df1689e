use alloc::vec::Vec;

use super::{argmax, slot, ModelConfig, ModelError, Parameters};
use crate::tensor::{causal_mask, Real, Tape, TensorError, Traced, Var};
use crate::tokenizer::Regions;

/// Traces the model over `batch` rows of `inputs` (flattened, equal length)
/// and returns logits of shape `[batch · len, vocab]`.
pub fn forward<F: Real>(
    tape: &mut Tape<F>,
    config: &ModelConfig,
    params: &[Var],
    inputs: &[usize],
    batch: usize,
) -> Result<Var, ModelError> {
    if batch == 0 || !inputs.len().is_multiple_of(batch) {
        return Err(ModelError::Ragged);
    }
    let len = inputs.len() / batch;
    if len > config.max_seq_len {
        return Err(ModelError::SequenceTooLong { len, max: config.max_seq_len });
    }
    if let Some(&id) = inputs.iter().find(|&&id| id >= config.vocab_size) {
        return Err(ModelError::TokenOutOfRange { id, vocab: config.vocab_size });
    }
    let (d, heads, hd) = (config.d_emb, config.n_heads, config.head_dim());
    let rows = batch * len;

    let tok = tape.embedding(params[slot::TOK], inputs)?;
    let positions: Vec<usize> = (0..batch).flat_map(|_| 0..len).collect();
    let pos = tape.embedding(params[slot::POS], &positions)?;
    let mut x = tape.add(tok, pos)?;

    let mask = causal_mask::<F>(len);
    let scale = F::ONE / F::from_f64(hd as f64).sqrt();
    let split = |tape: &mut Tape<F>, t: Var| -> Result<Var, TensorError> {
        let t = tape.reshape(t, &[batch, len, heads, hd])?;
        let t = tape.permute(t, &[0, 2, 1, 3])?;
        tape.reshape(t, &[batch * heads, len, hd])
    };

    for l in 0..config.depth {
        let p = |k: usize| params[slot::layer(l, k)];
        let h = tape.layer_norm(x, p(slot::LN1_G), p(slot::LN1_B))?;
        let q = tape.matmul(h, p(slot::WQ), false, false)?;
        let k = tape.matmul(h, p(slot::WK), false, false)?;
        let v = tape.matmul(h, p(slot::WV), false, false)?;
        let (q, k, v) = (split(tape, q)?, split(tape, k)?, split(tape, v)?);
        let scores = tape.matmul(q, k, false, true)?;
        let scores = tape.scale(scores, scale);
        let probs = tape.softmax(scores, Some(&mask))?;
        let mixed = tape.matmul(probs, v, false, false)?;
        let mixed = tape.reshape(mixed, &[batch, heads, len, hd])?;
        let mixed = tape.permute(mixed, &[0, 2, 1, 3])?;
        let mixed = tape.reshape(mixed, &[rows, d])?;
        let attn = tape.matmul(mixed, p(slot::WO), false, false)?;
        x = tape.add(x, attn)?;

        let h = tape.layer_norm(x, p(slot::LN2_G), p(slot::LN2_B))?;
        let h = tape.matmul(h, p(slot::W1), false, false)?;
        let h = tape.add(h, p(slot::B1))?;
        let h = tape.gelu(h);
        let h = tape.matmul(h, p(slot::W2), false, false)?;
        let h = tape.add(h, p(slot::B2))?;
        x = tape.add(x, h)?;
    }

    let g = slot::final_g(config.depth);
    let x = tape.layer_norm(x, params[g], params[g + 1])?;
    Ok(tape.matmul(x, params[g + 2], false, false)?)
}

/// Argmax next-token predictions conditioned on the true tokens: entry `i`
/// of each output row predicts token `i + 1` of the input row.
pub fn teacher_forced<F: Real>(params: &Parameters<F>, seqs: &[&[usize]]) -> Result<Vec<Vec<usize>>, ModelError> {
    let len = seqs.first().map_or(0, |s| s.len());
    if len < 2 || seqs.iter().any(|s| s.len() != len) {
        return Err(ModelError::Ragged);
    }
    let vocab = params.config.vocab_size;
    let mut out = Vec::with_capacity(seqs.len());
    for chunk in seqs.chunks(64) {
        let mut tape = Tape::new();
        let vars: Vec<Var> = params.tensors.iter().map(|t| tape.constant(t.clone())).collect();
        let inputs: Vec<usize> = chunk.iter().flat_map(|s| s[..len - 1].iter().copied()).collect();
        let logits = forward(&mut tape, &params.config, &vars, &inputs, chunk.len())?;
        let preds: Vec<usize> = tape.value(logits).data().chunks(vocab).map(argmax).collect();
        out.extend(preds.chunks(len - 1).map(<[usize]>::to_vec));
    }
    Ok(out)
}

/// Inputs, next-token targets and per-target weights, all row-major.
pub type RegionTargets<F> = (Vec<usize>, Vec<usize>, Vec<F>);

/// Splits full sequences into model inputs (all but the last token) and
/// next-token targets, weighting only targets inside the target and suffix
/// regions.
pub fn region_targets<F: Real>(seqs: &[&[usize]], regions: &Regions) -> Result<RegionTargets<F>, ModelError> {
    let full = seqs.first().map_or(0, |s| s.len());
    if full < 2 || seqs.iter().any(|s| s.len() != full) {
        return Err(ModelError::Ragged);
    }
    let scored = |p: usize| regions.target.range().contains(&p) || regions.suffix.range().contains(&p);
    if !(1..full).any(scored) {
        return Err(ModelError::EmptyRegion);
    }
    let mut inputs = Vec::with_capacity(seqs.len() * (full - 1));
    let mut targets = Vec::with_capacity(inputs.capacity());
    let mut weights = Vec::with_capacity(inputs.capacity());
    for seq in seqs {
        inputs.extend_from_slice(&seq[..full - 1]);
        for p in 1..full {
            targets.push(seq[p]);
            weights.push(if scored(p) { F::ONE } else { F::ZERO });
        }
    }
    Ok((inputs, targets, weights))
}

/// Mean next-token cross-entropy of `logits` (from [`forward`] on the
/// inputs of `seqs`) over target and suffix positions.
pub fn loss_on_regions<F: Real>(
    tape: &mut Tape<F>,
    logits: Var,
    seqs: &[&[usize]],
    regions: &Regions,
) -> Result<Var, ModelError> {
    let (_, targets, weights) = region_targets::<F>(seqs, regions)?;
    Ok(tape.cross_entropy(logits, &targets, &weights)?)
}

pub fn batch_loss<F: Real>(
    tape: &mut Tape<F>,
    config: &ModelConfig,
    params: &[Var],
    seqs: &[&[usize]],
    regions: &Regions,
) -> Result<Var, ModelError> {
    let (inputs, targets, weights) = region_targets::<F>(seqs, regions)?;
    let logits = forward(tape, config, params, &inputs, seqs.len())?;
    Ok(tape.cross_entropy(logits, &targets, &weights)?)
}

/// The region loss of a fixed batch as a function of all parameters.
pub struct RegionLoss<'a> {
    pub config: &'a ModelConfig,
    pub seqs: &'a [&'a [usize]],
    pub regions: &'a Regions,
}

impl Traced for RegionLoss<'_> {
    fn trace<F: Real>(&self, tape: &mut Tape<F>, inputs: &[Var]) -> Result<Var, TensorError> {
        batch_loss(tape, self.config, inputs, self.seqs, self.regions).map_err(|e| match e {
            ModelError::Tensor(t) => t,
            other => TensorError::Invalid { op: "region_loss", detail: alloc::format!("{other}") },
        })
    }
}
