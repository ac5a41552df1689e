use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::linalg::{gemm, Layout};
use super::{mismatch, Real, Tensor, TensorError};

pub(crate) const LAYER_NORM_EPS: f64 = 1e-5;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<F> {
    Leaf,
    MatMul { a: Var, b: Var, ta: bool, tb: bool, m: usize, k: usize, n: usize, batch: usize, b_batched: bool },
    Add { a: Var, b: Var, broadcast: bool },
    Mul { a: Var, b: Var },
    Scale { a: Var, s: F },
    Gelu { a: Var, slope: Vec<F> },
    Softmax { a: Var },
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<F>, rstd: Vec<F> },
    Embedding { table: Var, ids: Vec<usize> },
    Reshape { a: Var },
    Permute { a: Var, perm: Vec<usize> },
    CrossEntropy { logits: Var, targets: Vec<usize>, weights: Vec<F>, probs: Vec<F> },
    Sum { a: Var },
}

struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
    requires_grad: bool,
}

/// Records a computation for one backward sweep.
pub struct Tape<F> {
    nodes: Vec<Node<F>>,
}

impl<F: Real> Default for Tape<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Tape<F> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// A leaf whose gradient is collected by [`Tape::backward`].
    pub fn param(&mut self, value: Tensor<F>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf treated as a constant.
    pub fn constant(&mut self, value: Tensor<F>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, var: Var) -> &Tensor<F> {
        &self.nodes[var.0].value
    }

    fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Matrix product over the last two axes, optionally transposing
    /// either operand. Leading axes of `a` are batch axes; `b` either has
    /// the same leading axes or is a single matrix shared by every batch.
    pub fn matmul(&mut self, a: Var, b: Var, ta: bool, tb: bool) -> Result<Var, TensorError> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        if sa.len() < 2 || sb.len() < 2 {
            return Err(mismatch("matmul", format!("operands must be at least 2-d, got {sa:?} and {sb:?}")));
        }
        let (ra, ca) = (sa[sa.len() - 2], sa[sa.len() - 1]);
        let (rb, cb) = (sb[sb.len() - 2], sb[sb.len() - 1]);
        let (m, k) = if ta { (ca, ra) } else { (ra, ca) };
        let (kb, n) = if tb { (cb, rb) } else { (rb, cb) };
        let batch: usize = sa[..sa.len() - 2].iter().product();
        let b_batched = sb.len() > 2;
        if k != kb || (b_batched && sb[..sb.len() - 2] != sa[..sa.len() - 2]) {
            return Err(mismatch(
                "matmul",
                format!("{sa:?}{} x {sb:?}{}", if ta { "^T" } else { "" }, if tb { "^T" } else { "" }),
            ));
        }
        let mut shape = sa[..sa.len() - 2].to_vec();
        shape.extend([m, n]);
        let mut out = vec![F::ZERO; batch * m * n];
        {
            let av = self.value(a).data();
            let bv = self.value(b).data();
            let la = Layout::row_major(ca, ta);
            let lb = Layout::row_major(cb, tb);
            for i in 0..batch {
                let boff = if b_batched { i * k * n } else { 0 };
                gemm(
                    m,
                    k,
                    n,
                    F::ONE,
                    &av[i * m * k..(i + 1) * m * k],
                    la,
                    &bv[boff..boff + k * n],
                    lb,
                    F::ZERO,
                    &mut out[i * m * n..(i + 1) * m * n],
                    Layout::row_major(n, false),
                );
            }
        }
        let rg = self.needs(&[a, b]);
        Ok(self.push(Tensor { shape, data: out }, Op::MatMul { a, b, ta, tb, m, k, n, batch, b_batched }, rg))
    }

    /// Elementwise sum; `b` may also be a vector added to every row of `a`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        let broadcast = if sa == sb {
            false
        } else if sb.len() == 1 && sa.last() == sb.last() {
            true
        } else {
            return Err(mismatch("add", format!("{sa:?} + {sb:?}")));
        };
        let av = self.value(a).data();
        let bv = self.value(b).data();
        let data = if broadcast {
            let n = bv.len();
            av.iter().enumerate().map(|(i, &x)| x + bv[i % n]).collect()
        } else {
            av.iter().zip(bv).map(|(&x, &y)| x + y).collect()
        };
        let rg = self.needs(&[a, b]);
        Ok(self.push(Tensor { shape: sa, data }, Op::Add { a, b, broadcast }, rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        if self.shape(a) != self.shape(b) {
            return Err(mismatch("mul", format!("{:?} * {:?}", self.shape(a), self.shape(b))));
        }
        let data = self.value(a).data().iter().zip(self.value(b).data()).map(|(&x, &y)| x * y).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.needs(&[a, b]);
        Ok(self.push(Tensor { shape, data }, Op::Mul { a, b }, rg))
    }

    pub fn scale(&mut self, a: Var, s: F) -> Var {
        let t = self.value(a);
        let value = Tensor { shape: t.shape.clone(), data: t.data.iter().map(|&x| x * s).collect() };
        let rg = self.needs(&[a]);
        self.push(value, Op::Scale { a, s }, rg)
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, a: Var) -> Var {
        let t = self.value(a);
        let rg = self.needs(&[a]);
        let mut data = Vec::with_capacity(t.numel());
        let mut slope = Vec::with_capacity(if rg { t.numel() } else { 0 });
        for &x in &t.data {
            let (y, dy) = gelu_with_slope(x);
            data.push(y);
            if rg {
                slope.push(dy);
            }
        }
        let value = Tensor { shape: t.shape.clone(), data };
        self.push(value, Op::Gelu { a, slope }, rg)
    }

    /// Softmax over the last axis of `a + mask`. The mask covers the last
    /// two axes and is broadcast over the leading ones; `-inf` entries get
    /// exactly zero probability.
    pub fn softmax(&mut self, a: Var, mask: Option<&Tensor<F>>) -> Result<Var, TensorError> {
        let t = self.value(a);
        let shape = t.shape.clone();
        let n = t.last_dim();
        let mut data = t.data.clone();
        if let Some(mask) = mask {
            if shape.len() < 2 || mask.shape() != &shape[shape.len() - 2..] {
                return Err(mismatch("softmax", format!("mask {:?} for input {shape:?}", mask.shape())));
            }
            let block = mask.numel();
            for (i, x) in data.iter_mut().enumerate() {
                *x += mask.data[i % block];
            }
        }
        for row in data.chunks_mut(n.max(1)) {
            softmax_row(row);
        }
        let rg = self.needs(&[a]);
        Ok(self.push(Tensor { shape, data }, Op::Softmax { a }, rg))
    }

    /// Normalizes over the last axis, then applies `gamma` and `beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Result<Var, TensorError> {
        let t = self.value(x);
        let d = t.last_dim();
        if self.shape(gamma) != [d] || self.shape(beta) != [d] {
            return Err(mismatch(
                "layer_norm",
                format!("input {:?} with gamma {:?}, beta {:?}", t.shape(), self.shape(gamma), self.shape(beta)),
            ));
        }
        let shape = t.shape.clone();
        let rows = t.rows();
        let eps = F::from_f64(LAYER_NORM_EPS);
        let inv_d = F::ONE / F::from_f64(d as f64);
        let mut xhat = vec![F::ZERO; t.numel()];
        let mut rstd = vec![F::ZERO; rows];
        for r in 0..rows {
            let row = &t.data[r * d..(r + 1) * d];
            let mean = row.iter().copied().sum::<F>() * inv_d;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() * inv_d;
            let s = F::ONE / (var + eps).sqrt();
            rstd[r] = s;
            for (o, &v) in xhat[r * d..(r + 1) * d].iter_mut().zip(row) {
                *o = (v - mean) * s;
            }
        }
        let g = self.value(gamma).data();
        let b = self.value(beta).data();
        let data = xhat.iter().enumerate().map(|(i, &h)| h * g[i % d] + b[i % d]).collect();
        let rg = self.needs(&[x, gamma, beta]);
        Ok(self.push(Tensor { shape, data }, Op::LayerNorm { x, gamma, beta, xhat, rstd }, rg))
    }

    /// Rows of a `[V, d]` table selected by `ids`, as `[ids.len(), d]`.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(table);
        if t.shape.len() != 2 {
            return Err(mismatch("embedding", format!("table must be 2-d, got {:?}", t.shape)));
        }
        let (rows, d) = (t.shape[0], t.shape[1]);
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= rows {
                return Err(mismatch("embedding", format!("id {id} outside table of {rows} rows")));
            }
            data.extend_from_slice(&t.data[id * d..(id + 1) * d]);
        }
        let rg = self.needs(&[table]);
        Ok(self.push(Tensor { shape: vec![ids.len(), d], data }, Op::Embedding { table, ids: ids.to_vec() }, rg))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(a);
        if shape.iter().product::<usize>() != t.numel() {
            return Err(mismatch("reshape", format!("{:?} -> {shape:?}", t.shape)));
        }
        let value = Tensor { shape: shape.to_vec(), data: t.data.clone() };
        let rg = self.needs(&[a]);
        Ok(self.push(value, Op::Reshape { a }, rg))
    }

    /// Reorders axes: output axis `i` is input axis `perm[i]`.
    pub fn permute(&mut self, a: Var, perm: &[usize]) -> Result<Var, TensorError> {
        let t = self.value(a);
        let rank = t.shape.len();
        let mut seen = vec![false; rank];
        if perm.len() != rank || perm.iter().any(|&p| p >= rank || core::mem::replace(&mut seen[p], true)) {
            return Err(mismatch("permute", format!("permutation {perm:?} for shape {:?}", t.shape)));
        }
        let (shape, data) = permute_data(&t.shape, &t.data, perm);
        let rg = self.needs(&[a]);
        Ok(self.push(Tensor { shape, data }, Op::Permute { a, perm: perm.to_vec() }, rg))
    }

    /// Weighted mean of `-log softmax(logits)[target]` over rows of a
    /// `[n, V]` logit matrix. Rows with zero weight are excluded.
    pub fn cross_entropy(&mut self, logits: Var, targets: &[usize], weights: &[F]) -> Result<Var, TensorError> {
        let t = self.value(logits);
        if t.shape.len() != 2 || t.shape[0] != targets.len() || weights.len() != targets.len() {
            return Err(mismatch(
                "cross_entropy",
                format!("logits {:?} with {} targets and {} weights", t.shape, targets.len(), weights.len()),
            ));
        }
        let v = t.shape[1];
        let total: F = weights.iter().copied().sum();
        if total.partial_cmp(&F::ZERO) != Some(core::cmp::Ordering::Greater) {
            return Err(TensorError::Invalid { op: "cross_entropy", detail: "no positions carry weight".into() });
        }
        let mut probs = t.data.clone();
        let mut loss = F::ZERO;
        for (r, row) in probs.chunks_mut(v).enumerate() {
            let target = targets[r];
            if target >= v {
                return Err(mismatch("cross_entropy", format!("target {target} outside {v} classes")));
            }
            let max = row.iter().copied().fold(F::NEG_INFINITY, F::max);
            let lse = row.iter().map(|&x| (x - max).exp()).sum::<F>().ln() + max;
            if weights[r] != F::ZERO {
                loss += weights[r] * (lse - row[target]);
            }
            for x in row.iter_mut() {
                *x = (*x - lse).exp();
            }
        }
        let rg = self.needs(&[logits]);
        Ok(self.push(
            Tensor::scalar(loss / total),
            Op::CrossEntropy { logits, targets: targets.to_vec(), weights: weights.to_vec(), probs },
            rg,
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().copied().sum();
        let rg = self.needs(&[a]);
        self.push(Tensor::scalar(s), Op::Sum { a }, rg)
    }

    /// Gradients of the scalar `loss` with respect to every recorded value
    /// that depends on a parameter leaf.
    pub fn backward(&self, loss: Var) -> Result<Gradients<F>, TensorError> {
        if self.value(loss).numel() != 1 {
            return Err(mismatch("backward", format!("loss must be scalar, got {:?}", self.shape(loss))));
        }
        let mut grads: Vec<Option<Vec<F>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![F::ONE]);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<F>, g: &[F], grads: &mut [Option<Vec<F>>]) {
        match &node.op {
            Op::Leaf => {}
            &Op::MatMul { a, b, ta, tb, m, k, n, batch, b_batched } => {
                let av = self.value(a).data();
                let bv = self.value(b).data();
                let sa = self.shape(a);
                let sb = self.shape(b);
                let la = Layout::row_major(sa[sa.len() - 1], ta);
                let lb = Layout::row_major(sb[sb.len() - 1], tb);
                let lg = Layout::row_major(n, false);
                if self.nodes[a.0].requires_grad {
                    let da = slot(grads, a, av.len());
                    for i in 0..batch {
                        let boff = if b_batched { i * k * n } else { 0 };
                        // dA = dC · Bᵀ
                        gemm(
                            m,
                            n,
                            k,
                            F::ONE,
                            &g[i * m * n..(i + 1) * m * n],
                            lg,
                            &bv[boff..boff + k * n],
                            lb.t(),
                            F::ONE,
                            &mut da[i * m * k..(i + 1) * m * k],
                            la,
                        );
                    }
                }
                if self.nodes[b.0].requires_grad {
                    let db = slot(grads, b, bv.len());
                    for i in 0..batch {
                        let boff = if b_batched { i * k * n } else { 0 };
                        // dB = Aᵀ · dC
                        gemm(
                            k,
                            m,
                            n,
                            F::ONE,
                            &av[i * m * k..(i + 1) * m * k],
                            la.t(),
                            &g[i * m * n..(i + 1) * m * n],
                            lg,
                            F::ONE,
                            &mut db[boff..boff + k * n],
                            lb,
                        );
                    }
                }
            }
            &Op::Add { a, b, broadcast } => {
                if self.nodes[a.0].requires_grad {
                    accumulate(slot(grads, a, g.len()), g);
                }
                if self.nodes[b.0].requires_grad {
                    if broadcast {
                        let db = slot(grads, b, self.value(b).numel());
                        let n = db.len();
                        for row in g.chunks(n) {
                            accumulate(db, row);
                        }
                    } else {
                        accumulate(slot(grads, b, g.len()), g);
                    }
                }
            }
            &Op::Mul { a, b } => {
                if self.nodes[a.0].requires_grad {
                    let bv = self.value(b).data();
                    for ((d, &gi), &y) in slot(grads, a, g.len()).iter_mut().zip(g).zip(bv) {
                        *d += gi * y;
                    }
                }
                if self.nodes[b.0].requires_grad {
                    let av = self.value(a).data();
                    for ((d, &gi), &x) in slot(grads, b, g.len()).iter_mut().zip(g).zip(av) {
                        *d += gi * x;
                    }
                }
            }
            &Op::Scale { a, s } => {
                for (d, &gi) in slot(grads, a, g.len()).iter_mut().zip(g) {
                    *d += gi * s;
                }
            }
            Op::Gelu { a, slope } => {
                for ((d, &gi), &s) in slot(grads, *a, g.len()).iter_mut().zip(g).zip(slope) {
                    *d += gi * s;
                }
            }
            &Op::Softmax { a } => {
                let y = node.value.data();
                let n = node.value.last_dim().max(1);
                let da = slot(grads, a, g.len());
                for ((dr, gr), yr) in da.chunks_mut(n).zip(g.chunks(n)).zip(y.chunks(n)) {
                    let dot: F = gr.iter().zip(yr).map(|(&gi, &yi)| gi * yi).sum();
                    for ((d, &gi), &yi) in dr.iter_mut().zip(gr).zip(yr) {
                        *d += yi * (gi - dot);
                    }
                }
            }
            Op::LayerNorm { x, gamma, beta, xhat, rstd } => {
                let d = node.value.last_dim();
                let gv = self.value(*gamma).data();
                if self.nodes[gamma.0].requires_grad {
                    let dg = slot(grads, *gamma, d);
                    for (gr, hr) in g.chunks(d).zip(xhat.chunks(d)) {
                        for ((o, &gi), &h) in dg.iter_mut().zip(gr).zip(hr) {
                            *o += gi * h;
                        }
                    }
                }
                if self.nodes[beta.0].requires_grad {
                    let db = slot(grads, *beta, d);
                    for gr in g.chunks(d) {
                        accumulate(db, gr);
                    }
                }
                if self.nodes[x.0].requires_grad {
                    let inv_d = F::ONE / F::from_f64(d as f64);
                    let dx = slot(grads, *x, g.len());
                    for (r, ((dr, gr), hr)) in dx.chunks_mut(d).zip(g.chunks(d)).zip(xhat.chunks(d)).enumerate() {
                        let mut mean_dh = F::ZERO;
                        let mut mean_dh_h = F::ZERO;
                        for ((&gi, &h), &gm) in gr.iter().zip(hr).zip(gv) {
                            let dh = gi * gm;
                            mean_dh += dh;
                            mean_dh_h += dh * h;
                        }
                        mean_dh *= inv_d;
                        mean_dh_h *= inv_d;
                        for (((o, &gi), &h), &gm) in dr.iter_mut().zip(gr).zip(hr).zip(gv) {
                            *o += rstd[r] * (gi * gm - mean_dh - h * mean_dh_h);
                        }
                    }
                }
            }
            Op::Embedding { table, ids } => {
                let d = node.value.last_dim();
                let dt = slot(grads, *table, self.value(*table).numel());
                for (&id, gr) in ids.iter().zip(g.chunks(d)) {
                    accumulate(&mut dt[id * d..(id + 1) * d], gr);
                }
            }
            &Op::Reshape { a } => accumulate(slot(grads, a, g.len()), g),
            Op::Permute { a, perm } => {
                let mut inverse = vec![0; perm.len()];
                for (i, &p) in perm.iter().enumerate() {
                    inverse[p] = i;
                }
                let (_, back) = permute_data(node.value.shape(), g, &inverse);
                accumulate(slot(grads, *a, g.len()), &back);
            }
            Op::CrossEntropy { logits, targets, weights, probs } => {
                let v = self.value(*logits).last_dim();
                let total: F = weights.iter().copied().sum();
                let scale = g[0] / total;
                let dl = slot(grads, *logits, probs.len());
                for (r, (dr, pr)) in dl.chunks_mut(v).zip(probs.chunks(v)).enumerate() {
                    let w = weights[r];
                    if w == F::ZERO {
                        continue;
                    }
                    for (o, &p) in dr.iter_mut().zip(pr) {
                        *o += scale * w * p;
                    }
                    dr[targets[r]] -= scale * w;
                }
            }
            &Op::Sum { a } => {
                for d in slot(grads, a, self.value(a).numel()).iter_mut() {
                    *d += g[0];
                }
            }
        }
    }
}

fn slot<F: Real>(grads: &mut [Option<Vec<F>>], var: Var, len: usize) -> &mut [F] {
    grads[var.0].get_or_insert_with(|| vec![F::ZERO; len])
}

fn accumulate<F: Real>(dst: &mut [F], src: &[F]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub(crate) fn softmax_row<F: Real>(row: &mut [F]) {
    let max = row.iter().copied().fold(F::NEG_INFINITY, F::max);
    let mut total = F::ZERO;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in row.iter_mut() {
        *x /= total;
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

// Written through sigmoids: 1 + tanh(u) = 2σ(2u) and 1 - tanh²(u) = 4σ(2u)σ(-2u)
// stay accurate where tanh(u) is close to -1.
fn gelu_with_slope<F: Real>(x: F) -> (F, F) {
    let c = F::from_f64(GELU_C);
    let a = F::from_f64(GELU_A);
    let e = (F::from_f64(-2.0) * c * (x + a * x * x * x)).exp();
    let (p, q) = if e.is_finite() { (F::ONE / (F::ONE + e), e / (F::ONE + e)) } else { (F::ZERO, F::ONE) };
    let du = c * (F::ONE + F::from_f64(3.0) * a * x * x);
    (x * p, p + F::from_f64(2.0) * x * p * q * du)
}

pub(crate) fn gelu<F: Real>(x: F) -> F {
    gelu_with_slope(x).0
}

fn permute_data<F: Real>(shape: &[usize], data: &[F], perm: &[usize]) -> (Vec<usize>, Vec<F>) {
    let rank = shape.len();
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let mut in_strides = vec![1; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * shape[i + 1];
    }
    let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut out = Vec::with_capacity(data.len());
    if rank > 1 && perm[rank - 1] == rank - 1 {
        // The innermost axis stays put: move contiguous runs.
        let run = shape[rank - 1];
        let outer = &out_shape[..rank - 1];
        let mut idx = vec![0usize; rank - 1];
        let mut offset = 0usize;
        for _ in 0..data.len() / run.max(1) {
            out.extend_from_slice(&data[offset..offset + run]);
            for axis in (0..rank - 1).rev() {
                idx[axis] += 1;
                offset += strides[axis];
                if idx[axis] < outer[axis] {
                    break;
                }
                offset -= strides[axis] * outer[axis];
                idx[axis] = 0;
            }
        }
        return (out_shape, out);
    }
    let mut idx = vec![0usize; rank];
    let mut offset = 0usize;
    for _ in 0..data.len() {
        out.push(data[offset]);
        for axis in (0..rank).rev() {
            idx[axis] += 1;
            offset += strides[axis];
            if idx[axis] < out_shape[axis] {
                break;
            }
            offset -= strides[axis] * out_shape[axis];
            idx[axis] = 0;
        }
    }
    (out_shape, out)
}

/// Per-value gradients produced by [`Tape::backward`].
pub struct Gradients<F> {
    grads: Vec<Option<Vec<F>>>,
}

impl<F: Real> Gradients<F> {
    /// `None` when `var` does not influence the loss.
    pub fn get(&self, var: Var) -> Option<&[F]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, var: Var) -> Option<Vec<F>> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}
