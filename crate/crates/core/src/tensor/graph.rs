//! Define-by-run tape. Ops execute eagerly and record what backward needs;
//! `backward` walks the tape in reverse, accumulating adjoints additively at
//! every fan-out. A graph lives for one forward/backward episode and is
//! confined to one execution context.

use super::ops;
use super::Tensor;
use crate::error::TensorError;

pub type NodeId = usize;

enum Op {
    Leaf,
    MatMul { m: usize, k: usize, n: usize },
    Add,
    /// rhs shape is a suffix of lhs shape; rhs is tiled over leading dims.
    AddBroadcast { rhs_len: usize },
    Mul,
    MulBroadcast { rhs_len: usize },
    Scale { factor: f32 },
    Exp,
    Gelu,
    Softmax { row: usize },
    LayerNorm { inv_std: Vec<f32> },
    Embedding { ids: Vec<usize>, dim: usize },
    Attention { spec: AttnSpec, cache: ops::AttentionCache },
    Dropout { mask: Vec<f32> },
    Sum,
    L1Norm,
    L2Norm { norm: f64 },
    Mse,
    CrossEntropy { classes: usize, targets: Vec<i64>, counted: usize, probs: Vec<f32> },
    KlStdNormal { dim: usize },
}

struct AttnSpec {
    batch: usize,
    seq: usize,
    d_model: usize,
    n_heads: usize,
}

struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    shape: Vec<usize>,
    value: Vec<f32>,
    needs_grad: bool,
}

pub struct Graph {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f32>>>,
    /// (node, caller-chosen binding key) for trainable leaves.
    bindings: Vec<(NodeId, u64)>,
    /// Dropout and other train-only masks are only generated when training.
    pub training: bool,
}

impl Default for Graph {
    fn default() -> Self {
        Self::new()
    }
}

impl Graph {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), grads: Vec::new(), bindings: Vec::new(), training: false }
    }

    pub fn train_mode(mut self, training: bool) -> Self {
        self.training = training;
        self
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, shape: Vec<usize>, value: Vec<f32>) -> NodeId {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        debug_assert!(
            value.iter().all(|v| v.is_finite()),
            "non-finite forward output"
        );
        let needs_grad = inputs.iter().any(|&i| self.nodes[i].needs_grad);
        self.nodes.push(Node { op, inputs, shape, value, needs_grad });
        self.grads.push(None);
        self.nodes.len() - 1
    }

    /// Register a constant leaf (no gradient tracking).
    pub fn input(&mut self, t: &Tensor) -> NodeId {
        self.leaf(t, false)
    }

    /// Register a leaf that should receive a gradient but is not a parameter
    /// (e.g. a received boundary activation whose gradient must be sent back).
    pub fn input_tracked(&mut self, t: &Tensor) -> NodeId {
        self.leaf(t, true)
    }

    /// Register a trainable parameter leaf under a caller-chosen key.
    /// Tracking follows `t.requires_grad`, so frozen parameters cost nothing.
    pub fn param(&mut self, key: u64, t: &Tensor) -> NodeId {
        let id = self.leaf(t, t.requires_grad);
        if t.requires_grad {
            self.bindings.push((id, key));
        }
        id
    }

    fn leaf(&mut self, t: &Tensor, tracked: bool) -> NodeId {
        let id = self.push(Op::Leaf, vec![], t.shape().to_vec(), t.data().to_vec());
        self.nodes[id].needs_grad = tracked;
        id
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id].shape
    }

    pub fn value(&self, id: NodeId) -> &[f32] {
        &self.nodes[id].value
    }

    pub fn scalar_value(&self, id: NodeId) -> f32 {
        self.nodes[id].value[0]
    }

    /// Snapshot a node as a detached tensor (this is how payloads leave a
    /// party's context).
    pub fn detach(&self, id: NodeId) -> Tensor {
        Tensor::new(self.nodes[id].shape.clone(), self.nodes[id].value.clone())
            .expect("graph nodes hold valid tensors")
    }

    pub fn grad(&self, id: NodeId) -> Option<&[f32]> {
        self.grads[id].as_deref()
    }

    /// Iterate (binding key, gradient) for every tracked parameter that
    /// received one in the last backward pass.
    pub fn param_grads(&self) -> impl Iterator<Item = (u64, &[f32])> {
        self.bindings
            .iter()
            .filter_map(|&(id, key)| self.grads[id].as_deref().map(|g| (key, g)))
    }

    // ---- op constructors ----

    fn check_same_shape(
        &self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
    ) -> Result<(), TensorError> {
        if self.nodes[a].shape != self.nodes[b].shape {
            return Err(TensorError::ShapeMismatch {
                op,
                left: self.nodes[a].shape.clone(),
                right: self.nodes[b].shape.clone(),
            });
        }
        Ok(())
    }

    fn check_suffix(
        &self,
        op: &'static str,
        lhs: NodeId,
        rhs: NodeId,
    ) -> Result<usize, TensorError> {
        let ls = &self.nodes[lhs].shape;
        let rs = &self.nodes[rhs].shape;
        if rs.len() > ls.len() || !ls.ends_with(rs) {
            return Err(TensorError::ShapeMismatch {
                op,
                left: ls.clone(),
                right: rs.clone(),
            });
        }
        Ok(self.nodes[rhs].value.len())
    }

    /// lhs [.., k] x rhs [k, n] -> [.., n]
    pub fn matmul(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, TensorError> {
        let ls = self.nodes[lhs].shape.clone();
        let rs = self.nodes[rhs].shape.clone();
        if rs.len() != 2 || *ls.last().unwrap_or(&0) != rs[0] {
            return Err(TensorError::ShapeMismatch { op: "matmul", left: ls, right: rs });
        }
        let k = rs[0];
        let n = rs[1];
        let m = self.nodes[lhs].value.len() / k;
        let out = ops::matmul(&self.nodes[lhs].value, &self.nodes[rhs].value, m, k, n);
        let mut shape = ls;
        *shape.last_mut().unwrap() = n;
        Ok(self.push(Op::MatMul { m, k, n }, vec![lhs, rhs], shape, out))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        self.check_same_shape("add", a, b)?;
        let out: Vec<f32> =
            self.nodes[a].value.iter().zip(&self.nodes[b].value).map(|(x, y)| x + y).collect();
        let shape = self.nodes[a].shape.clone();
        Ok(self.push(Op::Add, vec![a, b], shape, out))
    }

    /// lhs [.., suffix..] + rhs [suffix..], rhs tiled over leading dims.
    pub fn add_broadcast(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, TensorError> {
        let rhs_len = self.check_suffix("add_broadcast", lhs, rhs)?;
        let rv = &self.nodes[rhs].value;
        let out: Vec<f32> = self.nodes[lhs]
            .value
            .iter()
            .enumerate()
            .map(|(i, x)| x + rv[i % rhs_len])
            .collect();
        let shape = self.nodes[lhs].shape.clone();
        Ok(self.push(Op::AddBroadcast { rhs_len }, vec![lhs, rhs], shape, out))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        self.check_same_shape("mul", a, b)?;
        let out: Vec<f32> =
            self.nodes[a].value.iter().zip(&self.nodes[b].value).map(|(x, y)| x * y).collect();
        let shape = self.nodes[a].shape.clone();
        Ok(self.push(Op::Mul, vec![a, b], shape, out))
    }

    pub fn mul_broadcast(&mut self, lhs: NodeId, rhs: NodeId) -> Result<NodeId, TensorError> {
        let rhs_len = self.check_suffix("mul_broadcast", lhs, rhs)?;
        let rv = &self.nodes[rhs].value;
        let out: Vec<f32> = self.nodes[lhs]
            .value
            .iter()
            .enumerate()
            .map(|(i, x)| x * rv[i % rhs_len])
            .collect();
        let shape = self.nodes[lhs].shape.clone();
        Ok(self.push(Op::MulBroadcast { rhs_len }, vec![lhs, rhs], shape, out))
    }

    pub fn scale(&mut self, x: NodeId, factor: f32) -> NodeId {
        let out: Vec<f32> = self.nodes[x].value.iter().map(|v| v * factor).collect();
        let shape = self.nodes[x].shape.clone();
        self.push(Op::Scale { factor }, vec![x], shape, out)
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        let out: Vec<f32> = self.nodes[x].value.iter().map(|v| v.exp()).collect();
        let shape = self.nodes[x].shape.clone();
        self.push(Op::Exp, vec![x], shape, out)
    }

    pub fn gelu(&mut self, x: NodeId) -> NodeId {
        let out: Vec<f32> = self.nodes[x].value.iter().map(|&v| ops::gelu(v)).collect();
        let shape = self.nodes[x].shape.clone();
        self.push(Op::Gelu, vec![x], shape, out)
    }

    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let row = *self.nodes[x].shape.last().expect("softmax needs at least 1 dim");
        let out = ops::softmax_rows(&self.nodes[x].value, row);
        let shape = self.nodes[x].shape.clone();
        self.push(Op::Softmax { row }, vec![x], shape, out)
    }

    /// Pure normalization over the last dim; apply gain/bias with
    /// `mul_broadcast` / `add_broadcast`.
    pub fn layer_norm(&mut self, x: NodeId, eps: f32) -> NodeId {
        let row = *self.nodes[x].shape.last().expect("layer_norm needs at least 1 dim");
        let (out, inv_std) = ops::layer_norm_rows(&self.nodes[x].value, row, eps);
        let shape = self.nodes[x].shape.clone();
        self.push(Op::LayerNorm { inv_std }, vec![x], shape, out)
    }

    /// table [vocab, dim] gathered by ids; output [ids_shape.., dim].
    pub fn embedding(
        &mut self,
        table: NodeId,
        ids: &[usize],
        ids_shape: &[usize],
    ) -> Result<NodeId, TensorError> {
        let ts = &self.nodes[table].shape;
        if ts.len() != 2 {
            return Err(TensorError::BadShape {
                op: "embedding",
                expected: "2-d table".into(),
                got: ts.clone(),
            });
        }
        let (vocab, dim) = (ts[0], ts[1]);
        if let Some(&id) = ids.iter().find(|&&id| id >= vocab) {
            return Err(TensorError::TokenOutOfVocab { id, vocab });
        }
        let tv = &self.nodes[table].value;
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            out.extend_from_slice(&tv[id * dim..(id + 1) * dim]);
        }
        let mut shape = ids_shape.to_vec();
        shape.push(dim);
        Ok(self.push(Op::Embedding { ids: ids.to_vec(), dim }, vec![table], shape, out))
    }

    /// Fused multi-head scaled dot-product attention over projected q/k/v.
    pub fn attention(
        &mut self,
        q: NodeId,
        k: NodeId,
        v: NodeId,
        n_heads: usize,
        causal: bool,
        pad_mask: Option<&[f32]>,
    ) -> Result<NodeId, TensorError> {
        self.check_same_shape("attention", q, k)?;
        self.check_same_shape("attention", q, v)?;
        let shape = self.nodes[q].shape.clone();
        if shape.len() != 3 {
            return Err(TensorError::BadShape {
                op: "attention",
                expected: "[batch, seq, d_model]".into(),
                got: shape,
            });
        }
        let (batch, seq, d_model) = (shape[0], shape[1], shape[2]);
        if d_model % n_heads != 0 {
            return Err(TensorError::BadShape {
                op: "attention",
                expected: format!("d_model divisible by {n_heads} heads"),
                got: shape,
            });
        }
        let (out, cache) = ops::attention(
            &self.nodes[q].value,
            &self.nodes[k].value,
            &self.nodes[v].value,
            batch,
            seq,
            d_model,
            n_heads,
            causal,
            pad_mask,
        );
        let spec = AttnSpec { batch, seq, d_model, n_heads };
        Ok(self.push(Op::Attention { spec, cache }, vec![q, k, v], shape, out))
    }

    /// Inverted-scaling dropout with a caller-supplied keep pattern; the mask
    /// holds 0.0 or 1/(1-p) so inference needs no rescale. No-op when the
    /// graph is not in training mode.
    pub fn dropout<R: rand::Rng>(&mut self, x: NodeId, p: f32, rng: &mut R) -> NodeId {
        if !self.training || p <= 0.0 {
            return x;
        }
        let invkeep = 1.0 / (1.0 - p);
        let mask: Vec<f32> = (0..self.nodes[x].value.len())
            .map(|_| if rng.random::<f32>() < p { 0.0 } else { invkeep })
            .collect();
        let out: Vec<f32> =
            self.nodes[x].value.iter().zip(&mask).map(|(v, m)| v * m).collect();
        let shape = self.nodes[x].shape.clone();
        self.push(Op::Dropout { mask }, vec![x], shape, out)
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let total: f64 = self.nodes[x].value.iter().map(|&v| v as f64).sum();
        self.push(Op::Sum, vec![x], vec![1], vec![total as f32])
    }

    pub fn l1_norm(&mut self, x: NodeId) -> NodeId {
        let total: f64 = self.nodes[x].value.iter().map(|&v| (v as f64).abs()).sum();
        self.push(Op::L1Norm, vec![x], vec![1], vec![total as f32])
    }

    pub fn l2_norm(&mut self, x: NodeId) -> NodeId {
        let total: f64 = self.nodes[x].value.iter().map(|&v| v as f64 * v as f64).sum();
        let norm = total.sqrt();
        self.push(Op::L2Norm { norm }, vec![x], vec![1], vec![norm as f32])
    }

    /// Mean squared error between two same-shape nodes.
    pub fn mse(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        self.check_same_shape("mse", a, b)?;
        let n = self.nodes[a].value.len();
        let total: f64 = self.nodes[a]
            .value
            .iter()
            .zip(&self.nodes[b].value)
            .map(|(&x, &y)| {
                let d = x as f64 - y as f64;
                d * d
            })
            .sum();
        Ok(self.push(Op::Mse, vec![a, b], vec![1], vec![(total / n as f64) as f32]))
    }

    /// Mean token-level cross entropy from logits [.., classes]. Targets of
    /// -1 are ignored (padding).
    pub fn cross_entropy(
        &mut self,
        logits: NodeId,
        targets: &[i64],
    ) -> Result<NodeId, TensorError> {
        let shape = self.nodes[logits].shape.clone();
        let classes = *shape.last().unwrap();
        let rows = self.nodes[logits].value.len() / classes;
        if targets.len() != rows {
            return Err(TensorError::BadShape {
                op: "cross_entropy",
                expected: format!("{rows} targets"),
                got: vec![targets.len()],
            });
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= classes as i64) {
            return Err(TensorError::TokenOutOfVocab { id: t as usize, vocab: classes });
        }
        let (mean, probs, counted) = ops::cross_entropy(&self.nodes[logits].value, classes, targets);
        Ok(self.push(
            Op::CrossEntropy { classes, targets: targets.to_vec(), counted, probs },
            vec![logits],
            vec![1],
            vec![mean as f32],
        ))
    }

    /// KL( N(mu, exp(logvar)) || N(0, I) ), mean over rows of the last dim.
    pub fn kl_std_normal(&mut self, mu: NodeId, logvar: NodeId) -> Result<NodeId, TensorError> {
        self.check_same_shape("kl_std_normal", mu, logvar)?;
        let dim = *self.nodes[mu].shape.last().unwrap();
        let v = ops::kl_std_normal(&self.nodes[mu].value, &self.nodes[logvar].value, dim);
        Ok(self.push(Op::KlStdNormal { dim }, vec![mu, logvar], vec![1], vec![v as f32]))
    }

    // ---- backward ----

    /// Reverse-mode pass from a scalar loss.
    pub fn backward(&mut self, loss: NodeId) -> Result<(), TensorError> {
        if self.nodes[loss].value.len() != 1 {
            return Err(TensorError::NonScalarLoss { shape: self.nodes[loss].shape.clone() });
        }
        self.backward_seeded(loss, &[1.0])
    }

    /// Reverse-mode pass seeding `node` with an externally supplied adjoint
    /// (how a received boundary gradient enters a party's local graph).
    pub fn backward_seeded(&mut self, node: NodeId, seed: &[f32]) -> Result<(), TensorError> {
        if seed.len() != self.nodes[node].value.len() {
            return Err(TensorError::ShapeMismatch {
                op: "backward_seeded",
                left: self.nodes[node].shape.clone(),
                right: vec![seed.len()],
            });
        }
        for g in self.grads.iter_mut() {
            *g = None;
        }
        self.grads[node] = Some(seed.to_vec());
        for id in (0..=node).rev() {
            if !self.nodes[id].needs_grad {
                continue;
            }
            let Some(dout) = self.grads[id].take() else { continue };
            self.apply_op_grad(id, &dout);
            self.grads[id] = Some(dout);
        }
        Ok(())
    }

    fn apply_op_grad(&mut self, id: NodeId, dout: &[f32]) {
        // Disjoint field borrows: node metadata is read, adjoints are written.
        let nodes = &self.nodes;
        let grads = &mut self.grads;
        let acc = |grads: &mut Vec<Option<Vec<f32>>>, target: NodeId, contribution: Vec<f32>| {
            if !nodes[target].needs_grad {
                return;
            }
            match &mut grads[target] {
                Some(g) => {
                    for (dst, src) in g.iter_mut().zip(&contribution) {
                        *dst += *src;
                    }
                }
                slot => *slot = Some(contribution),
            }
        };
        let inputs = &nodes[id].inputs;
        match &nodes[id].op {
            Op::Leaf => {}
            Op::MatMul { m, k, n } => {
                let (m, k, n) = (*m, *k, *n);
                let (lhs, rhs) = (inputs[0], inputs[1]);
                if nodes[lhs].needs_grad {
                    let dl = ops::matmul_grad_lhs(dout, &nodes[rhs].value, m, k, n);
                    acc(grads, lhs, dl);
                }
                if nodes[rhs].needs_grad {
                    let dr = ops::matmul_grad_rhs(&nodes[lhs].value, dout, m, k, n);
                    acc(grads, rhs, dr);
                }
            }
            Op::Add => {
                acc(grads, inputs[0], dout.to_vec());
                acc(grads, inputs[1], dout.to_vec());
            }
            Op::AddBroadcast { rhs_len } => {
                let rhs_len = *rhs_len;
                acc(grads, inputs[0], dout.to_vec());
                if nodes[inputs[1]].needs_grad {
                    let mut dr = vec![0.0f32; rhs_len];
                    for (i, &d) in dout.iter().enumerate() {
                        dr[i % rhs_len] += d;
                    }
                    acc(grads, inputs[1], dr);
                }
            }
            Op::Mul => {
                let (a, b) = (inputs[0], inputs[1]);
                if nodes[a].needs_grad {
                    let da: Vec<f32> =
                        dout.iter().zip(&nodes[b].value).map(|(d, v)| d * v).collect();
                    acc(grads, a, da);
                }
                if nodes[b].needs_grad {
                    let db: Vec<f32> =
                        dout.iter().zip(&nodes[a].value).map(|(d, v)| d * v).collect();
                    acc(grads, b, db);
                }
            }
            Op::MulBroadcast { rhs_len } => {
                let rhs_len = *rhs_len;
                let (lhs, rhs) = (inputs[0], inputs[1]);
                if nodes[lhs].needs_grad {
                    let rv = &nodes[rhs].value;
                    let dl: Vec<f32> =
                        dout.iter().enumerate().map(|(i, d)| d * rv[i % rhs_len]).collect();
                    acc(grads, lhs, dl);
                }
                if nodes[rhs].needs_grad {
                    let lv = &nodes[lhs].value;
                    let mut dr = vec![0.0f32; rhs_len];
                    for (i, &d) in dout.iter().enumerate() {
                        dr[i % rhs_len] += d * lv[i];
                    }
                    acc(grads, rhs, dr);
                }
            }
            Op::Scale { factor } => {
                let f = *factor;
                let dx: Vec<f32> = dout.iter().map(|d| d * f).collect();
                acc(grads, inputs[0], dx);
            }
            Op::Exp => {
                let dx: Vec<f32> =
                    dout.iter().zip(&nodes[id].value).map(|(d, y)| d * y).collect();
                acc(grads, inputs[0], dx);
            }
            Op::Gelu => {
                let dx: Vec<f32> = dout
                    .iter()
                    .zip(&nodes[inputs[0]].value)
                    .map(|(d, &x)| d * ops::gelu_grad(x))
                    .collect();
                acc(grads, inputs[0], dx);
            }
            Op::Softmax { row } => {
                let dx = ops::softmax_grad_rows(&nodes[id].value, dout, *row);
                acc(grads, inputs[0], dx);
            }
            Op::LayerNorm { inv_std } => {
                let row = *nodes[id].shape.last().unwrap();
                let dx = ops::layer_norm_grad_rows(&nodes[id].value, inv_std, dout, row);
                acc(grads, inputs[0], dx);
            }
            Op::Embedding { ids, dim } => {
                let dim = *dim;
                if nodes[inputs[0]].needs_grad {
                    let vocab = nodes[inputs[0]].shape[0];
                    let mut dt = vec![0.0f32; vocab * dim];
                    for (row, &tok) in ids.iter().enumerate() {
                        let src = &dout[row * dim..(row + 1) * dim];
                        let dst = &mut dt[tok * dim..(tok + 1) * dim];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += *s;
                        }
                    }
                    acc(grads, inputs[0], dt);
                }
            }
            Op::Attention { spec, cache } => {
                let (dq, dk, dv) = ops::attention_grad(
                    &nodes[inputs[0]].value,
                    &nodes[inputs[1]].value,
                    &nodes[inputs[2]].value,
                    cache,
                    dout,
                    spec.batch,
                    spec.seq,
                    spec.d_model,
                    spec.n_heads,
                );
                acc(grads, inputs[0], dq);
                acc(grads, inputs[1], dk);
                acc(grads, inputs[2], dv);
            }
            Op::Dropout { mask } => {
                let dx: Vec<f32> = dout.iter().zip(mask).map(|(d, m)| d * m).collect();
                acc(grads, inputs[0], dx);
            }
            Op::Sum => {
                let n = nodes[inputs[0]].value.len();
                acc(grads, inputs[0], vec![dout[0]; n]);
            }
            Op::L1Norm => {
                let d = dout[0];
                let dx: Vec<f32> = nodes[inputs[0]]
                    .value
                    .iter()
                    .map(|&x| {
                        if x > 0.0 {
                            d
                        } else if x < 0.0 {
                            -d
                        } else {
                            0.0
                        }
                    })
                    .collect();
                acc(grads, inputs[0], dx);
            }
            Op::L2Norm { norm } => {
                let inv = 1.0 / norm.max(1e-12);
                let d = dout[0] as f64;
                let dx: Vec<f32> = nodes[inputs[0]]
                    .value
                    .iter()
                    .map(|&x| (x as f64 * inv * d) as f32)
                    .collect();
                acc(grads, inputs[0], dx);
            }
            Op::Mse => {
                let (a, b) = (inputs[0], inputs[1]);
                let n = nodes[a].value.len() as f32;
                let d = dout[0];
                if nodes[a].needs_grad {
                    let da: Vec<f32> = nodes[a]
                        .value
                        .iter()
                        .zip(&nodes[b].value)
                        .map(|(&x, &y)| 2.0 * (x - y) / n * d)
                        .collect();
                    acc(grads, a, da);
                }
                if nodes[b].needs_grad {
                    let db: Vec<f32> = nodes[a]
                        .value
                        .iter()
                        .zip(&nodes[b].value)
                        .map(|(&x, &y)| -2.0 * (x - y) / n * d)
                        .collect();
                    acc(grads, b, db);
                }
            }
            Op::CrossEntropy { classes, targets, counted, probs } => {
                let dx = ops::cross_entropy_grad(probs, *classes, targets, *counted, dout[0]);
                acc(grads, inputs[0], dx);
            }
            Op::KlStdNormal { dim } => {
                let rows = (nodes[inputs[0]].value.len() / dim) as f64;
                let d = dout[0] as f64 / rows;
                let (mu, lv) = (inputs[0], inputs[1]);
                if nodes[mu].needs_grad {
                    let dmu: Vec<f32> =
                        nodes[mu].value.iter().map(|&m| (m as f64 * d) as f32).collect();
                    acc(grads, mu, dmu);
                }
                if nodes[lv].needs_grad {
                    let dlv: Vec<f32> = nodes[lv]
                        .value
                        .iter()
                        .map(|&l| (0.5 * ((l as f64).exp() - 1.0) * d) as f32)
                        .collect();
                    acc(grads, lv, dlv);
                }
            }
        }
    }
}
