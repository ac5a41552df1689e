use alloc::vec;
use alloc::vec::Vec;

use super::{slot, ModelError, Parameters};
use crate::tensor::{gelu, gemm, softmax_row, Layout, Real, LAYER_NORM_EPS};

/// Rows per decoder pass; bounds the key/value cache footprint.
const CHUNK: usize = 256;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<F: Real>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Incremental forward pass over a batch of rows that advance in lockstep,
/// caching attention keys and values.
pub struct Decoder<'a, F> {
    params: &'a Parameters<F>,
    batch: usize,
    pos: usize,
    keys: Vec<Vec<F>>,
    values: Vec<Vec<F>>,
}

impl<'a, F: Real> Decoder<'a, F> {
    pub fn new(params: &'a Parameters<F>, batch: usize) -> Self {
        let c = &params.config;
        let cache = vec![F::ZERO; batch * c.max_seq_len * c.d_emb];
        Self { params, batch, pos: 0, keys: vec![cache.clone(); c.depth], values: vec![cache; c.depth] }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    /// Feeds one token per row at the current position and returns the
    /// next-token logits, `[batch, vocab]` row-major.
    pub fn step(&mut self, tokens: &[usize]) -> Result<Vec<F>, ModelError> {
        let c = &self.params.config;
        let (b, d, hd, cap) = (self.batch, c.d_emb, c.head_dim(), c.max_seq_len);
        if tokens.len() != b {
            return Err(ModelError::Ragged);
        }
        if self.pos >= cap {
            return Err(ModelError::SequenceTooLong { len: self.pos + 1, max: cap });
        }
        if let Some(&id) = tokens.iter().find(|&&id| id >= c.vocab_size) {
            return Err(ModelError::TokenOutOfRange { id, vocab: c.vocab_size });
        }
        let p = self.params;
        let pos = self.pos;

        let tok = p.get(slot::TOK);
        let pe = &p.get(slot::POS)[pos * d..(pos + 1) * d];
        let mut x: Vec<F> =
            tokens.iter().flat_map(|&id| tok[id * d..(id + 1) * d].iter().zip(pe).map(|(&a, &e)| a + e)).collect();

        let scale = F::ONE / F::from_f64(hd as f64).sqrt();
        let mut scores = vec![F::ZERO; pos + 1];
        for l in 0..c.depth {
            let w = |k: usize| p.get(slot::layer(l, k));
            let h = layer_norm(&x, d, w(slot::LN1_G), w(slot::LN1_B));
            let q = matmul(&h, b, d, w(slot::WQ), d);
            let k = matmul(&h, b, d, w(slot::WK), d);
            let v = matmul(&h, b, d, w(slot::WV), d);
            let (kc, vc) = (&mut self.keys[l], &mut self.values[l]);
            for r in 0..b {
                let at = (r * cap + pos) * d;
                kc[at..at + d].copy_from_slice(&k[r * d..(r + 1) * d]);
                vc[at..at + d].copy_from_slice(&v[r * d..(r + 1) * d]);
            }
            let mut mixed = vec![F::ZERO; b * d];
            for r in 0..b {
                for head in 0..c.n_heads {
                    let off = head * hd;
                    let qh = &q[r * d + off..r * d + off + hd];
                    for (j, s) in scores.iter_mut().enumerate() {
                        let kj = &kc[(r * cap + j) * d + off..][..hd];
                        *s = qh.iter().zip(kj).map(|(&a, &b)| a * b).sum::<F>() * scale;
                    }
                    softmax_row(&mut scores);
                    let out = &mut mixed[r * d + off..r * d + off + hd];
                    for (j, &s) in scores.iter().enumerate() {
                        let vj = &vc[(r * cap + j) * d + off..][..hd];
                        for (o, &vv) in out.iter_mut().zip(vj) {
                            *o += s * vv;
                        }
                    }
                }
            }
            let attn = matmul(&mixed, b, d, w(slot::WO), d);
            add_into(&mut x, &attn);

            let h = layer_norm(&x, d, w(slot::LN2_G), w(slot::LN2_B));
            let mut f = matmul(&h, b, d, w(slot::W1), c.d_ff);
            add_rows(&mut f, w(slot::B1));
            f.iter_mut().for_each(|v| *v = gelu(*v));
            let mut f = matmul(&f, b, c.d_ff, w(slot::W2), d);
            add_rows(&mut f, w(slot::B2));
            add_into(&mut x, &f);
        }
        let g = slot::final_g(c.depth);
        let h = layer_norm(&x, d, p.get(g), p.get(g + 1));
        self.pos += 1;
        Ok(matmul(&h, b, d, p.get(g + 2), c.vocab_size))
    }
}

/// Extends each equal-length prefix by `n` greedily chosen tokens.
pub fn greedy_decode<F: Real>(
    params: &Parameters<F>,
    prefixes: &[&[usize]],
    n: usize,
) -> Result<Vec<Vec<usize>>, ModelError> {
    greedy_decode_with(params, prefixes, n, &[])
}

/// Largest logit among the `allowed` ids (sorted ascending), ties toward
/// the lowest id.
pub fn argmax_among<F: Real>(row: &[F], allowed: &[usize]) -> usize {
    let mut best = allowed[0];
    for &i in &allowed[1..] {
        if row[i] > row[best] {
            best = i;
        }
    }
    best
}

/// [`greedy_decode`] where generated position `i` may be restricted to the
/// ids in `allowed[i]`. Positions past the end of `allowed`, or with `None`,
/// range over the whole vocabulary.
pub fn greedy_decode_with<F: Real>(
    params: &Parameters<F>,
    prefixes: &[&[usize]],
    n: usize,
    allowed: &[Option<&[usize]>],
) -> Result<Vec<Vec<usize>>, ModelError> {
    let plen = prefixes.first().map_or(0, |p| p.len());
    if plen == 0 || prefixes.iter().any(|p| p.len() != plen) {
        return Err(ModelError::Ragged);
    }
    let max = params.config.max_seq_len;
    if plen + n > max {
        return Err(ModelError::LengthOverflow { len: plen + n, max });
    }
    let vocab = params.config.vocab_size;
    let mut sets: Vec<Option<Vec<usize>>> = Vec::with_capacity(n);
    for i in 0..n {
        let set = allowed.get(i).copied().flatten().map(|ids| {
            let mut ids = ids.to_vec();
            ids.sort_unstable();
            ids.dedup();
            ids
        });
        if let Some(ids) = &set {
            match ids.iter().find(|&&id| id >= vocab) {
                Some(&id) => return Err(ModelError::TokenOutOfRange { id, vocab }),
                None if ids.is_empty() => return Err(ModelError::EmptyRegion),
                None => {}
            }
        }
        sets.push(set);
    }
    let mut out: Vec<Vec<usize>> = prefixes.iter().map(|p| p.to_vec()).collect();
    if n == 0 {
        return Ok(out);
    }
    for chunk in out.chunks_mut(CHUNK) {
        let mut dec = Decoder::new(params, chunk.len());
        let mut logits = Vec::new();
        for p in 0..plen {
            let col: Vec<usize> = chunk.iter().map(|s| s[p]).collect();
            logits = dec.step(&col)?;
        }
        for (i, set) in sets.iter().enumerate() {
            let next: Vec<usize> = match set {
                Some(ids) => logits.chunks(vocab).map(|row| argmax_among(row, ids)).collect(),
                None => logits.chunks(vocab).map(argmax).collect(),
            };
            for (seq, &t) in chunk.iter_mut().zip(&next) {
                seq.push(t);
            }
            if i + 1 < n {
                logits = dec.step(&next)?;
            }
        }
    }
    Ok(out)
}

fn matmul<F: Real>(x: &[F], rows: usize, k: usize, w: &[F], n: usize) -> Vec<F> {
    let mut out = vec![F::ZERO; rows * n];
    let (la, lb, lc) = (Layout::row_major(k, false), Layout::row_major(n, false), Layout::row_major(n, false));
    gemm(rows, k, n, F::ONE, x, la, w, lb, F::ZERO, &mut out, lc);
    out
}

fn layer_norm<F: Real>(x: &[F], d: usize, g: &[F], b: &[F]) -> Vec<F> {
    let eps = F::from_f64(LAYER_NORM_EPS);
    let inv_d = F::ONE / F::from_f64(d as f64);
    let mut out = Vec::with_capacity(x.len());
    for row in x.chunks(d) {
        let mean = row.iter().copied().sum::<F>() * inv_d;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() * inv_d;
        let s = F::ONE / (var + eps).sqrt();
        out.extend(row.iter().zip(g).zip(b).map(|((&v, &g), &b)| (v - mean) * s * g + b));
    }
    out
}

fn add_into<F: Real>(x: &mut [F], y: &[F]) {
    x.iter_mut().zip(y).for_each(|(a, &b)| *a += b);
}

fn add_rows<F: Real>(x: &mut [F], bias: &[F]) {
    for row in x.chunks_mut(bias.len()) {
        add_into(row, bias);
    }
}
