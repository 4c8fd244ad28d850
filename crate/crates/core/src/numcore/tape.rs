//! Reverse-mode automatic differentiation over dense tensors.
//!
//! A [`Tape`] owns every value computed during a forward pass. Nodes are
//! appended in evaluation order, so the node index is already a topological
//! order and [`Tape::backward`] is a single reverse sweep.

use super::{NumError, Tensor};

/// Fill value for masked-out attention scores. Finite, so no primitive ever
/// produces an infinity; `exp` of it underflows to exactly zero.
pub const MASK_FILL: f64 = -1e9;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_C: f64 = 0.044_715;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A differentiable primitive together with its non-tensor attributes.
#[derive(Clone, Debug, PartialEq)]
pub enum Primitive {
    /// `a · b`, or `a · bᵀ` when `transpose_rhs` is set.
    MatMul { transpose_rhs: bool },
    /// Elementwise sum; the right operand may be a row vector broadcast over
    /// the rows of the left.
    Add,
    Mul,
    Scale(f64),
    Concat { axis: usize },
    Slice { axis: usize, start: usize, len: usize },
    Softmax { axis: usize },
    /// Inputs `(x, gamma, beta)`; normalizes over the last axis.
    LayerNorm { eps: f64 },
    /// Tanh approximation.
    Gelu,
    /// Input is the `[vocab, dim]` table.
    EmbeddingGather { ids: Vec<usize> },
    /// Replaces scores at key positions after the query position with
    /// [`MASK_FILL`]. Keys beyond the queries are treated as a cached prefix.
    CausalMask,
    /// `Σ_i weights[i] · (−log softmax(logits_i)[targets[i]])`, a scalar.
    CrossEntropyWithLogits { targets: Vec<usize>, weights: Vec<f64> },
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::MatMul { .. } => "matmul",
            Primitive::Add => "add",
            Primitive::Mul => "mul",
            Primitive::Scale(_) => "scale",
            Primitive::Concat { .. } => "concat",
            Primitive::Slice { .. } => "slice",
            Primitive::Softmax { .. } => "softmax",
            Primitive::LayerNorm { .. } => "layer_norm",
            Primitive::Gelu => "gelu",
            Primitive::EmbeddingGather { .. } => "embedding_gather",
            Primitive::CausalMask => "causal_mask",
            Primitive::CrossEntropyWithLogits { .. } => "cross_entropy_with_logits",
        }
    }
}

enum Saved {
    None,
    /// Layer norm: normalized input and per-row reciprocal std.
    Norm { xhat: Vec<f64>, rstd: Vec<f64> },
    /// Cross entropy: row softmax of the logits.
    Probs(Vec<f64>),
}

struct Node {
    value: Tensor,
    prim: Option<Primitive>,
    inputs: Vec<usize>,
    requires_grad: bool,
    saved: Saved,
}

/// Records primitives applied to tensors.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to the leaves of a tape.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient for `v`, zero when `v` did not participate.
    pub fn wrt(&self, v: Var) -> Tensor {
        match self.get(v) {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }

    pub fn take(&mut self, v: Var) -> Tensor {
        match self.grads[v.0].take() {
            Some(g) => g,
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }
}

/// `c = op(a) · op(b) + beta·c` for row-major buffers, where `a` is logically
/// `[m, k]` and `b` is `[k, n]`.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_t: bool,
    b: &[f64],
    b_t: bool,
    c: &mut [f64],
    beta: f64,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserted buffer lengths cover every index reachable with
    // these dimensions and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Iteration geometry for reductions along one axis of a rank ≤ 2 tensor:
/// `(lanes, lane_len, lane_stride, base_of(lane))`.
fn lanes(shape: &[usize], axis: usize) -> (usize, usize, usize, usize) {
    match (shape.len(), axis) {
        (1, 0) => (1, shape[0], 1, 0),
        (2, 1) => (shape[0], shape[1], 1, shape[1]),
        (2, 0) => (shape[1], shape[0], shape[1], 1),
        _ => unreachable!("validated by caller"),
    }
}

fn shape_err(prim: &Primitive, shapes: &[&[usize]], detail: &str) -> NumError {
    NumError::Shape {
        kind: prim.name(),
        shapes: shapes.iter().map(|s| s.to_vec()).collect(),
        detail: detail.to_string(),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, None, vec![], requires_grad, Saved::None)
    }

    /// A trainable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(
        &mut self,
        value: Tensor,
        prim: Option<Primitive>,
        inputs: Vec<usize>,
        requires_grad: bool,
        saved: Saved,
    ) -> Var {
        self.nodes.push(Node {
            value,
            prim,
            inputs,
            requires_grad,
            saved,
        });
        Var(self.nodes.len() - 1)
    }

    /// Applies `prim` to `inputs`, recording it for the backward pass.
    pub fn apply(&mut self, prim: Primitive, inputs: &[Var]) -> Result<Var, NumError> {
        let arity = match prim {
            Primitive::MatMul { .. } | Primitive::Add | Primitive::Mul => Some(2),
            Primitive::LayerNorm { .. } => Some(3),
            Primitive::Concat { .. } => None,
            _ => Some(1),
        };
        if let Some(a) = arity {
            if inputs.len() != a {
                return Err(NumError::Arity {
                    kind: prim.name(),
                    expected: a,
                    got: inputs.len(),
                });
            }
        } else if inputs.is_empty() {
            return Err(NumError::Arity {
                kind: prim.name(),
                expected: 1,
                got: 0,
            });
        }
        let (value, saved) = self.forward(&prim, inputs)?;
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        let saved = if requires_grad { saved } else { Saved::None };
        Ok(self.push(
            value,
            Some(prim),
            inputs.iter().map(|v| v.0).collect(),
            requires_grad,
            saved,
        ))
    }

    fn forward(&self, prim: &Primitive, inputs: &[Var]) -> Result<(Tensor, Saved), NumError> {
        let val = |i: usize| &self.nodes[inputs[i].0].value;
        match prim {
            Primitive::MatMul { transpose_rhs } => {
                let (a, b) = (val(0), val(1));
                if a.shape().len() != 2 || b.shape().len() != 2 {
                    return Err(shape_err(prim, &[a.shape(), b.shape()], "operands must be rank 2"));
                }
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let (kb, n) = if *transpose_rhs {
                    (b.shape()[1], b.shape()[0])
                } else {
                    (b.shape()[0], b.shape()[1])
                };
                if k != kb {
                    return Err(shape_err(prim, &[a.shape(), b.shape()], "inner dimensions differ"));
                }
                let mut out = vec![0.0; m * n];
                gemm(m, k, n, a.data(), false, b.data(), *transpose_rhs, &mut out, 0.0);
                Ok((Tensor::new(vec![m, n], out)?, Saved::None))
            }
            Primitive::Add | Primitive::Mul => {
                let (a, b) = (val(0), val(1));
                if a.shape() == b.shape() {
                    let out: Vec<f64> = if matches!(prim, Primitive::Add) {
                        a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect()
                    } else {
                        a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect()
                    };
                    return Ok((Tensor::new(a.shape().to_vec(), out)?, Saved::None));
                }
                let broadcast_ok = matches!(prim, Primitive::Add)
                    && a.shape().len() == 2
                    && b.shape().len() == 1
                    && b.shape()[0] == a.shape()[1];
                if !broadcast_ok {
                    return Err(shape_err(prim, &[a.shape(), b.shape()], "shapes do not conform"));
                }
                let cols = a.shape()[1];
                let bd = b.data();
                let out = a
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(i, x)| x + bd[i % cols])
                    .collect();
                Ok((Tensor::new(a.shape().to_vec(), out)?, Saved::None))
            }
            Primitive::Scale(c) => {
                let a = val(0);
                let out = a.data().iter().map(|x| x * c).collect();
                Ok((Tensor::new(a.shape().to_vec(), out)?, Saved::None))
            }
            Primitive::Concat { axis } => {
                let parts: Vec<&Tensor> = (0..inputs.len()).map(val).collect();
                let shapes: Vec<&[usize]> = parts.iter().map(|t| t.shape()).collect();
                if parts.iter().any(|t| t.shape().len() != 2) || *axis > 1 {
                    return Err(shape_err(prim, &shapes, "concat needs rank-2 inputs and axis 0 or 1"));
                }
                let other = 1 - axis;
                let keep = parts[0].shape()[other];
                if parts.iter().any(|t| t.shape()[other] != keep) {
                    return Err(shape_err(prim, &shapes, "non-concatenated dimension differs"));
                }
                let total: usize = parts.iter().map(|t| t.shape()[*axis]).sum();
                if *axis == 0 {
                    let data = parts.iter().flat_map(|t| t.data().iter().copied()).collect();
                    Ok((Tensor::new(vec![total, keep], data)?, Saved::None))
                } else {
                    let mut data = Vec::with_capacity(keep * total);
                    for r in 0..keep {
                        for t in &parts {
                            data.extend_from_slice(t.row(r));
                        }
                    }
                    Ok((Tensor::new(vec![keep, total], data)?, Saved::None))
                }
            }
            Primitive::Slice { axis, start, len } => {
                let a = val(0);
                if a.shape().len() != 2 || *axis > 1 || start + len > a.shape()[*axis] {
                    return Err(shape_err(prim, &[a.shape()], "slice out of range"));
                }
                let (rows, cols) = (a.shape()[0], a.shape()[1]);
                if *axis == 0 {
                    let data = a.data()[start * cols..(start + len) * cols].to_vec();
                    Ok((Tensor::new(vec![*len, cols], data)?, Saved::None))
                } else {
                    let mut data = Vec::with_capacity(rows * len);
                    for r in 0..rows {
                        data.extend_from_slice(&a.row(r)[*start..start + len]);
                    }
                    Ok((Tensor::new(vec![rows, *len], data)?, Saved::None))
                }
            }
            Primitive::Softmax { axis } => {
                let a = val(0);
                let r = a.shape().len();
                if r == 0 || *axis >= r {
                    return Err(shape_err(prim, &[a.shape()], "axis out of range"));
                }
                let (nl, len, stride, base) = lanes(a.shape(), *axis);
                let x = a.data();
                let mut out = vec![0.0; x.len()];
                for l in 0..nl {
                    let b0 = l * base;
                    let mx = (0..len).map(|j| x[b0 + j * stride]).fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for j in 0..len {
                        let e = (x[b0 + j * stride] - mx).exp();
                        out[b0 + j * stride] = e;
                        sum += e;
                    }
                    for j in 0..len {
                        out[b0 + j * stride] /= sum;
                    }
                }
                Ok((Tensor::new(a.shape().to_vec(), out)?, Saved::None))
            }
            Primitive::LayerNorm { eps } => {
                let (x, g, b) = (val(0), val(1), val(2));
                let (rows, cols) = x.dims2();
                if x.shape().is_empty() || g.shape() != [cols] || b.shape() != [cols] {
                    return Err(shape_err(
                        prim,
                        &[x.shape(), g.shape(), b.shape()],
                        "gamma and beta must match the last axis",
                    ));
                }
                let mut xhat = vec![0.0; rows * cols];
                let mut rstd = vec![0.0; rows];
                let mut out = vec![0.0; rows * cols];
                for r in 0..rows {
                    let row = x.row(r);
                    let mean = row.iter().sum::<f64>() / cols as f64;
                    let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / cols as f64;
                    let rs = 1.0 / (var + eps).sqrt();
                    rstd[r] = rs;
                    for c in 0..cols {
                        let h = (row[c] - mean) * rs;
                        xhat[r * cols + c] = h;
                        out[r * cols + c] = h * g.data()[c] + b.data()[c];
                    }
                }
                Ok((
                    Tensor::new(x.shape().to_vec(), out)?,
                    Saved::Norm { xhat, rstd },
                ))
            }
            Primitive::Gelu => {
                let a = val(0);
                let out = a
                    .data()
                    .iter()
                    .map(|&x| 0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + GELU_C * x * x * x)).tanh()))
                    .collect();
                Ok((Tensor::new(a.shape().to_vec(), out)?, Saved::None))
            }
            Primitive::EmbeddingGather { ids } => {
                let table = val(0);
                if table.shape().len() != 2 {
                    return Err(shape_err(prim, &[table.shape()], "table must be rank 2"));
                }
                let (vocab, dim) = (table.shape()[0], table.shape()[1]);
                let mut data = Vec::with_capacity(ids.len() * dim);
                for &id in ids {
                    if id >= vocab {
                        return Err(NumError::IndexOutOfRange {
                            kind: prim.name(),
                            index: id,
                            bound: vocab,
                        });
                    }
                    data.extend_from_slice(table.row(id));
                }
                Ok((Tensor::new(vec![ids.len(), dim], data)?, Saved::None))
            }
            Primitive::CausalMask => {
                let a = val(0);
                if a.shape().len() != 2 || a.shape()[1] < a.shape()[0] {
                    return Err(shape_err(prim, &[a.shape()], "scores must be [queries, keys ≥ queries]"));
                }
                let (q, k) = (a.shape()[0], a.shape()[1]);
                let offset = k - q;
                let mut out = a.data().to_vec();
                for i in 0..q {
                    for j in (i + offset + 1)..k {
                        out[i * k + j] = MASK_FILL;
                    }
                }
                Ok((Tensor::new(a.shape().to_vec(), out)?, Saved::None))
            }
            Primitive::CrossEntropyWithLogits { targets, weights } => {
                let a = val(0);
                if a.shape().len() != 2 || targets.len() != a.shape()[0] || weights.len() != targets.len() {
                    return Err(shape_err(
                        prim,
                        &[a.shape(), &[targets.len()], &[weights.len()]],
                        "logits must be [rows, classes] with one target and weight per row",
                    ));
                }
                let (rows, cols) = (a.shape()[0], a.shape()[1]);
                let mut probs = vec![0.0; rows * cols];
                let mut loss = 0.0;
                for r in 0..rows {
                    let t = targets[r];
                    if t >= cols {
                        return Err(NumError::IndexOutOfRange {
                            kind: prim.name(),
                            index: t,
                            bound: cols,
                        });
                    }
                    let row = a.row(r);
                    let mx = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for c in 0..cols {
                        let e = (row[c] - mx).exp();
                        probs[r * cols + c] = e;
                        sum += e;
                    }
                    for c in 0..cols {
                        probs[r * cols + c] /= sum;
                    }
                    if weights[r] != 0.0 {
                        let lse = mx + sum.ln();
                        loss += weights[r] * (lse - row[t]);
                    }
                }
                Ok((Tensor::scalar(loss), Saved::Probs(probs)))
            }
        }
    }

    /// Back-propagates from a one-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients, NumError> {
        let lv = &self.nodes[loss.0].value;
        if lv.len() != 1 {
            return Err(NumError::NonScalarLoss {
                shape: lv.shape().to_vec(),
            });
        }
        let n = loss.0 + 1;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut leaf_grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..n).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let Some(prim) = &node.prim else {
                leaf_grads[i] = Some(Tensor::new(node.value.shape().to_vec(), g)?);
                continue;
            };
            let contributions = self.local_grads(node, prim, &g);
            for (slot, contrib) in node.inputs.iter().zip(contributions) {
                let Some(c) = contrib else { continue };
                if !self.nodes[*slot].requires_grad {
                    continue;
                }
                match &mut grads[*slot] {
                    Some(acc) => acc.iter_mut().zip(&c).for_each(|(a, b)| *a += b),
                    none => *none = Some(c),
                }
            }
        }
        Ok(Gradients {
            grads: leaf_grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    /// Vector–Jacobian products for each input of `node` given upstream `g`.
    /// Inputs that do not require gradients get `None`.
    fn local_grads(&self, node: &Node, prim: &Primitive, g: &[f64]) -> Vec<Option<Vec<f64>>> {
        let input = |k: usize| &self.nodes[node.inputs[k]];
        let wants = |k: usize| input(k).requires_grad;
        match prim {
            Primitive::MatMul { transpose_rhs } => {
                let (a, b) = (&input(0).value, &input(1).value);
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = node.value.shape()[1];
                let da = wants(0).then(|| {
                    let mut da = vec![0.0; m * k];
                    // dA = dC · op(B)ᵀ
                    gemm(m, n, k, g, false, b.data(), !transpose_rhs, &mut da, 0.0);
                    da
                });
                let db = wants(1).then(|| {
                    let mut db = vec![0.0; k * n];
                    if *transpose_rhs {
                        // B is [n, k]: dB = dCᵀ · A
                        gemm(n, m, k, g, true, a.data(), false, &mut db, 0.0);
                    } else {
                        gemm(k, m, n, a.data(), true, g, false, &mut db, 0.0);
                    }
                    db
                });
                vec![da, db]
            }
            Primitive::Add => {
                let b = &input(1).value;
                let db = wants(1).then(|| {
                    if b.len() == g.len() {
                        g.to_vec()
                    } else {
                        let cols = b.len();
                        let mut acc = vec![0.0; cols];
                        for (i, v) in g.iter().enumerate() {
                            acc[i % cols] += v;
                        }
                        acc
                    }
                });
                vec![wants(0).then(|| g.to_vec()), db]
            }
            Primitive::Mul => {
                let (a, b) = (input(0).value.data(), input(1).value.data());
                vec![
                    wants(0).then(|| g.iter().zip(b).map(|(x, y)| x * y).collect()),
                    wants(1).then(|| g.iter().zip(a).map(|(x, y)| x * y).collect()),
                ]
            }
            Primitive::Scale(c) => vec![Some(g.iter().map(|v| v * c).collect())],
            Primitive::Concat { axis } => {
                let total_cols = node.value.shape()[1];
                let mut out = Vec::with_capacity(node.inputs.len());
                let mut offset = 0;
                for k in 0..node.inputs.len() {
                    let s = input(k).value.shape();
                    let (r, c) = (s[0], s[1]);
                    if wants(k) {
                        let piece = if *axis == 0 {
                            g[offset * total_cols..(offset + r) * total_cols].to_vec()
                        } else {
                            let mut p = Vec::with_capacity(r * c);
                            for row in 0..r {
                                let base = row * total_cols + offset;
                                p.extend_from_slice(&g[base..base + c]);
                            }
                            p
                        };
                        out.push(Some(piece));
                    } else {
                        out.push(None);
                    }
                    offset += if *axis == 0 { r } else { c };
                }
                out
            }
            Primitive::Slice { axis, start, len } => {
                let s = input(0).value.shape();
                let (rows, cols) = (s[0], s[1]);
                let mut da = vec![0.0; rows * cols];
                if *axis == 0 {
                    da[start * cols..(start + len) * cols].copy_from_slice(g);
                } else {
                    for r in 0..rows {
                        da[r * cols + start..r * cols + start + len]
                            .copy_from_slice(&g[r * len..(r + 1) * len]);
                    }
                }
                vec![Some(da)]
            }
            Primitive::Softmax { axis } => {
                let y = node.value.data();
                let (nl, len, stride, base) = lanes(node.value.shape(), *axis);
                let mut dx = vec![0.0; y.len()];
                for l in 0..nl {
                    let b0 = l * base;
                    let dot: f64 = (0..len).map(|j| g[b0 + j * stride] * y[b0 + j * stride]).sum();
                    for j in 0..len {
                        let idx = b0 + j * stride;
                        dx[idx] = y[idx] * (g[idx] - dot);
                    }
                }
                vec![Some(dx)]
            }
            Primitive::LayerNorm { .. } => {
                let Saved::Norm { xhat, rstd } = &node.saved else {
                    unreachable!("layer norm saves its statistics")
                };
                let gamma = input(1).value.data();
                let (rows, cols) = node.value.dims2();
                let mut dx = vec![0.0; rows * cols];
                let mut dg = vec![0.0; cols];
                let mut db = vec![0.0; cols];
                let mut dxhat = vec![0.0; cols];
                for r in 0..rows {
                    let gr = &g[r * cols..(r + 1) * cols];
                    let xr = &xhat[r * cols..(r + 1) * cols];
                    let mut mean_d = 0.0;
                    let mut mean_dx = 0.0;
                    for c in 0..cols {
                        dg[c] += gr[c] * xr[c];
                        db[c] += gr[c];
                        dxhat[c] = gr[c] * gamma[c];
                        mean_d += dxhat[c];
                        mean_dx += dxhat[c] * xr[c];
                    }
                    mean_d /= cols as f64;
                    mean_dx /= cols as f64;
                    for c in 0..cols {
                        dx[r * cols + c] = rstd[r] * (dxhat[c] - mean_d - xr[c] * mean_dx);
                    }
                }
                vec![wants(0).then_some(dx), wants(1).then_some(dg), wants(2).then_some(db)]
            }
            Primitive::Gelu => {
                let x = input(0).value.data();
                let dx = x
                    .iter()
                    .zip(g)
                    .map(|(&x, &g)| {
                        let u = SQRT_2_OVER_PI * (x + GELU_C * x * x * x);
                        let t = u.tanh();
                        let du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_C * x * x);
                        g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)
                    })
                    .collect();
                vec![Some(dx)]
            }
            Primitive::EmbeddingGather { ids } => {
                let t = &input(0).value;
                let dim = t.shape()[1];
                let mut dt = vec![0.0; t.len()];
                for (row, &id) in ids.iter().enumerate() {
                    let dst = &mut dt[id * dim..(id + 1) * dim];
                    dst.iter_mut()
                        .zip(&g[row * dim..(row + 1) * dim])
                        .for_each(|(d, s)| *d += s);
                }
                vec![Some(dt)]
            }
            Primitive::CausalMask => {
                let s = node.value.shape();
                let (q, k) = (s[0], s[1]);
                let offset = k - q;
                let mut dx = g.to_vec();
                for i in 0..q {
                    for j in (i + offset + 1)..k {
                        dx[i * k + j] = 0.0;
                    }
                }
                vec![Some(dx)]
            }
            Primitive::CrossEntropyWithLogits { targets, weights } => {
                let Saved::Probs(p) = &node.saved else {
                    unreachable!("cross entropy saves its probabilities")
                };
                let cols = input(0).value.shape()[1];
                let up = g[0];
                let mut dx = vec![0.0; p.len()];
                for (r, (&t, &w)) in targets.iter().zip(weights).enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let s = up * w;
                    for c in 0..cols {
                        dx[r * cols + c] = s * p[r * cols + c];
                    }
                    dx[r * cols + t] -= s;
                }
                vec![Some(dx)]
            }
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.apply(Primitive::MatMul { transpose_rhs: false }, &[a, b])
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.apply(Primitive::MatMul { transpose_rhs: true }, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.apply(Primitive::Add, &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, NumError> {
        self.apply(Primitive::Mul, &[a, b])
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var, NumError> {
        self.apply(Primitive::Scale(c), &[a])
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var, NumError> {
        self.apply(Primitive::Concat { axis }, parts)
    }

    pub fn slice(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Result<Var, NumError> {
        self.apply(Primitive::Slice { axis, start, len }, &[a])
    }

    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var, NumError> {
        self.apply(Primitive::Softmax { axis }, &[a])
    }

    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var, NumError> {
        self.apply(Primitive::LayerNorm { eps }, &[x, gamma, beta])
    }

    pub fn gelu(&mut self, a: Var) -> Result<Var, NumError> {
        self.apply(Primitive::Gelu, &[a])
    }

    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var, NumError> {
        self.apply(Primitive::EmbeddingGather { ids: ids.to_vec() }, &[table])
    }

    pub fn causal_mask(&mut self, scores: Var) -> Result<Var, NumError> {
        self.apply(Primitive::CausalMask, &[scores])
    }

    pub fn cross_entropy(
        &mut self,
        logits: Var,
        targets: &[usize],
        weights: &[f64],
    ) -> Result<Var, NumError> {
        self.apply(
            Primitive::CrossEntropyWithLogits {
                targets: targets.to_vec(),
                weights: weights.to_vec(),
            },
            &[logits],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn identity_matmul() {
        let mut tape = Tape::new();
        let i = tape.constant(Tensor::identity(3));
        let x = tape.constant(t(&[3, 2], &[1., 2., 3., 4., 5., 6.]));
        let y = tape.matmul(i, x).unwrap();
        assert_eq!(tape.value(y), tape.value(x));
    }

    #[test]
    fn softmax_symmetric() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::vector(vec![0.0, 0.0]));
        let y = tape.softmax(x, 0).unwrap();
        assert_eq!(tape.value(y).data(), &[0.5, 0.5]);
    }

    #[test]
    fn uniform_cross_entropy_is_ln4() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(&[1, 4]));
        for target in 0..4 {
            let l = tape.cross_entropy(x, &[target], &[1.0]).unwrap();
            assert!((tape.value(l).item() - 4f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn square_derivative() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let y = tape.mul(x, x).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(x).item(), 6.0);
    }

    #[test]
    fn cross_entropy_grad_is_p_minus_onehot() {
        let mut tape = Tape::new();
        let x = tape.param(t(&[1, 3], &[0.3, -1.2, 2.0]));
        let l = tape.cross_entropy(x, &[1], &[1.0]).unwrap();
        let g = tape.backward(l).unwrap().wrt(x);
        assert!(g.data().iter().sum::<f64>().abs() < 1e-15);
        assert!(g.data()[1] < 0.0);
    }

    #[test]
    fn shape_mismatch_names_kind_and_shapes() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[2, 3]));
        let b = tape.constant(Tensor::zeros(&[2, 3]));
        let err = tape.matmul(a, b).unwrap_err().to_string();
        assert!(err.contains("matmul") && err.contains("[2, 3]"), "{err}");
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::zeros(&[2, 2]));
        assert!(matches!(tape.backward(a), Err(NumError::NonScalarLoss { .. })));
    }

    #[test]
    fn unused_leaf_gets_zero() {
        let mut tape = Tape::new();
        let a = tape.param(Tensor::scalar(2.0));
        let unused = tape.param(t(&[2], &[1.0, 1.0]));
        let y = tape.mul(a, a).unwrap();
        let g = tape.backward(y).unwrap();
        assert_eq!(g.wrt(unused).data(), &[0.0, 0.0]);
    }

    #[test]
    fn causal_mask_blocks_future() {
        let mut tape = Tape::new();
        let s = tape.constant(Tensor::zeros(&[3, 3]));
        let m = tape.causal_mask(s).unwrap();
        let p = tape.softmax(m, 1).unwrap();
        let p = tape.value(p);
        assert_eq!(p.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(p.row(1), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn cross_entropy_nonnegative_and_zero_only_at_point_mass() {
        let mut tape = Tape::new();
        let peaked = tape.constant(t(&[1, 3], &[0.0, 1000.0, 0.0]));
        let l = tape.cross_entropy(peaked, &[1], &[1.0]).unwrap();
        assert_eq!(tape.value(l).item(), 0.0);
        let soft = tape.constant(t(&[1, 3], &[0.0, 1.0, 0.0]));
        let l = tape.cross_entropy(soft, &[1], &[1.0]).unwrap();
        assert!(tape.value(l).item() > 0.0);
    }
}
