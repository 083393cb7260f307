//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] is an append-only arena of nodes. Every node stores its value,
//! the primitive that produced it and the handles of its inputs, so node
//! indices are already a topological order and [`Graph::backward`] is a single
//! reverse sweep.
//!
//! Elementwise binary primitives accept identical shapes, or a row-shaped
//! operand (`[n]` or `[1, n]`) broadcast over the leading batch axis of a
//! `[batch, n]` operand. No other broadcasting exists.

use crate::autodiff::Array;
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Primitive that produced a node.
#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    MatMul,
    Relu,
    Tanh,
    Sigmoid,
    Ln,
    Exp,
    Mean,
    Sum,
    /// `[b, n] -> [b, 1]`
    RowSum,
    /// Concatenation of rank-2 inputs along the feature axis.
    Concat,
    Scale(f64),
    Clamp {
        lo: f64,
        hi: f64,
    },
    /// Identity forward, `-lambda * upstream` backward.
    GradientReversal(f64),
}

impl Op {
    pub fn tag(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::MatMul => "matmul",
            Op::Relu => "relu",
            Op::Tanh => "tanh",
            Op::Sigmoid => "sigmoid",
            Op::Ln => "ln",
            Op::Exp => "exp",
            Op::Mean => "mean",
            Op::Sum => "sum",
            Op::RowSum => "row_sum",
            Op::Concat => "concat",
            Op::Scale(_) => "scale",
            Op::Clamp { .. } => "clamp",
            Op::GradientReversal(_) => "gradient_reversal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Broadcast {
    None,
    /// The right operand is one row, repeated over the batch of the left.
    Right,
    /// The left operand is one row, repeated over the batch of the right.
    Left,
}

#[derive(Debug)]
struct Node {
    value: Array,
    op: Op,
    parents: Vec<Var>,
    broadcast: Broadcast,
    grad: Option<Array>,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn is_row_of(row: &[usize], full: &[usize]) -> bool {
    if full.len() < 2 {
        return false;
    }
    let tail = &full[1..];
    row == tail || (row.len() == full.len() && row[0] == 1 && &row[1..] == tail)
}

fn broadcast_kind(op: &'static str, a: &Array, b: &Array) -> Result<Broadcast> {
    if a.shape() == b.shape() {
        Ok(Broadcast::None)
    } else if is_row_of(b.shape(), a.shape()) {
        Ok(Broadcast::Right)
    } else if is_row_of(a.shape(), b.shape()) {
        Ok(Broadcast::Left)
    } else {
        Err(Error::Shape {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        })
    }
}

fn zip_broadcast(a: &Array, b: &Array, kind: Broadcast, f: impl Fn(f64, f64) -> f64) -> Array {
    let (shape, data) = match kind {
        Broadcast::None => (
            a.shape().to_vec(),
            a.data()
                .iter()
                .zip(b.data())
                .map(|(&x, &y)| f(x, y))
                .collect(),
        ),
        Broadcast::Right => {
            let w = b.len();
            (
                a.shape().to_vec(),
                a.data()
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| f(x, b.data()[i % w]))
                    .collect(),
            )
        }
        Broadcast::Left => {
            let w = a.len();
            (
                b.shape().to_vec(),
                b.data()
                    .iter()
                    .enumerate()
                    .map(|(i, &y)| f(a.data()[i % w], y))
                    .collect(),
            )
        }
    };
    Array::new(shape, data).expect("broadcast preserves element count")
}

/// Sums a full-size gradient down to the shape of a broadcast operand.
fn reduce_rows(full: &[f64], row: &Array) -> Vec<f64> {
    let w = row.len();
    let mut out = vec![0.0; w];
    for (i, g) in full.iter().enumerate() {
        out[i % w] += g;
    }
    out
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf node (parameter, input or constant).
    pub fn leaf(&mut self, value: Array) -> Var {
        self.push(value, Op::Leaf, Vec::new(), Broadcast::None)
    }

    pub fn value(&self, v: Var) -> &Array {
        &self.nodes[v.0].value
    }

    pub fn op(&self, v: Var) -> &Op {
        &self.nodes[v.0].op
    }

    pub fn parents(&self, v: Var) -> &[Var] {
        &self.nodes[v.0].parents
    }

    /// Gradient of the last [`backward`](Self::backward) root with respect to `v`.
    ///
    /// Zero when `v` was not reachable from the root or no backward ran yet.
    pub fn grad(&self, v: Var) -> Array {
        let node = &self.nodes[v.0];
        match &node.grad {
            Some(g) => g.clone(),
            None => Array::zeros(node.value.shape()),
        }
    }

    fn push(&mut self, value: Array, op: Op, parents: Vec<Var>, broadcast: Broadcast) -> Var {
        self.nodes.push(Node {
            value,
            op,
            parents,
            broadcast,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    fn binary(&mut self, op: Op, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let kind = broadcast_kind(op.tag(), va, vb)?;
        let out = zip_broadcast(va, vb, kind, f);
        Ok(self.push(out, op, vec![a, b], kind))
    }

    fn unary(&mut self, op: Op, a: Var, f: impl Fn(f64) -> f64) -> Var {
        let out = self.nodes[a.0].value.map(f);
        self.push(out, op, vec![a], Broadcast::None)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Add, a, b, |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Sub, a, b, |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Op::Mul, a, b, |x, y| x * y)
    }

    /// `[b, k] x [k, n] -> [b, n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let (sa, sb) = (va.shape(), vb.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::Shape {
                op: "matmul",
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        let (rows, inner, cols) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; rows * cols];
        for i in 0..rows {
            for k in 0..inner {
                let x = va.data()[i * inner + k];
                for j in 0..cols {
                    out[i * cols + j] += x * vb.data()[k * cols + j];
                }
            }
        }
        let value = Array::matrix(rows, cols, out)?;
        Ok(self.push(value, Op::MatMul, vec![a, b], Broadcast::None))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(Op::Relu, a, |x| x.max(0.0))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(Op::Tanh, a, f64::tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(Op::Sigmoid, a, sigmoid)
    }

    /// Natural log. Every input value must be strictly positive.
    pub fn ln(&mut self, a: Var) -> Result<Var> {
        if let Some((index, &value)) = self.nodes[a.0]
            .value
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0))
        {
            return Err(Error::NonPositiveLog { index, value });
        }
        Ok(self.unary(Op::Ln, a, f64::ln))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(Op::Exp, a, f64::exp)
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        self.unary(Op::Scale(factor), a, |x| factor * x)
    }

    /// Clamps into `[lo, hi]`; the gradient is zero outside the interval.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.unary(Op::Clamp { lo, hi }, a, |x| x.clamp(lo, hi))
    }

    /// Mean of all entries, as a rank-0 scalar.
    pub fn mean(&mut self, a: Var) -> Var {
        let v = &self.nodes[a.0].value;
        let m = v.sum() / v.len() as f64;
        self.push(Array::scalar(m), Op::Mean, vec![a], Broadcast::None)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.sum();
        self.push(Array::scalar(s), Op::Sum, vec![a], Broadcast::None)
    }

    /// Per-row sum of a `[b, n]` matrix, giving `[b, 1]`.
    pub fn row_sum(&mut self, a: Var) -> Result<Var> {
        let v = &self.nodes[a.0].value;
        if v.shape().len() != 2 {
            return Err(Error::Shape {
                op: "row_sum",
                lhs: v.shape().to_vec(),
                rhs: vec![],
            });
        }
        let rows = v.rows();
        let data = (0..rows).map(|i| v.row(i).iter().sum()).collect();
        let value = Array::matrix(rows, 1, data)?;
        Ok(self.push(value, Op::RowSum, vec![a], Broadcast::None))
    }

    /// Concatenates `[b, n_i]` matrices along the feature axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat of zero inputs".into()))?;
        let rows = self.nodes[first.0].value.rows();
        let mut width = 0;
        for p in parts {
            let s = self.nodes[p.0].value.shape();
            if s.len() != 2 || s[0] != rows {
                return Err(Error::Shape {
                    op: "concat",
                    lhs: self.nodes[first.0].value.shape().to_vec(),
                    rhs: s.to_vec(),
                });
            }
            width += s[1];
        }
        let mut data = Vec::with_capacity(rows * width);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(self.nodes[p.0].value.row(i));
            }
        }
        let value = Array::matrix(rows, width, data)?;
        Ok(self.push(value, Op::Concat, parts.to_vec(), Broadcast::None))
    }

    /// Identity in the forward pass; scales the gradient by `-lambda` on the
    /// way back, so whatever downstream minimizes is maximized upstream.
    pub fn gradient_reversal(&mut self, a: Var, lambda: f64) -> Result<Var> {
        if !(lambda >= 0.0) {
            return Err(Error::NegativeLambda(lambda));
        }
        let value = self.nodes[a.0].value.clone();
        Ok(self.push(
            value,
            Op::GradientReversal(lambda),
            vec![a],
            Broadcast::None,
        ))
    }

    /// Fills every node's gradient with `d root / d node`.
    ///
    /// Gradients from a previous call are discarded first.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        let root_value = &self.nodes[root.0].value;
        if !root_value.is_scalar() {
            return Err(Error::NonScalarRoot(root_value.shape().to_vec()));
        }
        let seed = Array::full(root_value.shape(), 1.0);
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[root.0].grad = Some(seed);

        for idx in (0..=root.0).rev() {
            let Some(upstream) = self.nodes[idx].grad.take() else {
                continue;
            };
            let contributions = self.local_gradients(idx, &upstream);
            self.nodes[idx].grad = Some(upstream);
            for (parent, g) in contributions {
                let node = &mut self.nodes[parent.0];
                match &mut node.grad {
                    Some(acc) => {
                        for (a, v) in acc.data_mut().iter_mut().zip(g) {
                            *a += v;
                        }
                    }
                    None => {
                        node.grad = Some(
                            Array::new(node.value.shape().to_vec(), g)
                                .expect("gradient matches value shape"),
                        )
                    }
                }
            }
        }
        Ok(())
    }

    fn local_gradients(&self, idx: usize, up: &Array) -> Vec<(Var, Vec<f64>)> {
        let node = &self.nodes[idx];
        let g = up.data();
        let val = |v: Var| &self.nodes[v.0].value;
        let p = &node.parents;
        match &node.op {
            Op::Leaf => Vec::new(),
            Op::Add | Op::Sub | Op::Mul => {
                let (a, b) = (p[0], p[1]);
                let (va, vb) = (val(a), val(b));
                let (full_a, full_b): (Vec<f64>, Vec<f64>) = match node.op {
                    Op::Add => (g.to_vec(), g.to_vec()),
                    Op::Sub => (g.to_vec(), g.iter().map(|x| -x).collect()),
                    _ => {
                        let n = g.len();
                        let at = |arr: &Array, i: usize| arr.data()[i % arr.len()];
                        (
                            (0..n).map(|i| g[i] * at(vb, i)).collect(),
                            (0..n).map(|i| g[i] * at(va, i)).collect(),
                        )
                    }
                };
                let ga = if node.broadcast == Broadcast::Left {
                    reduce_rows(&full_a, va)
                } else {
                    full_a
                };
                let gb = if node.broadcast == Broadcast::Right {
                    reduce_rows(&full_b, vb)
                } else {
                    full_b
                };
                vec![(a, ga), (b, gb)]
            }
            Op::MatMul => {
                let (a, b) = (p[0], p[1]);
                let (va, vb) = (val(a), val(b));
                let (rows, inner, cols) = (va.shape()[0], va.shape()[1], vb.shape()[1]);
                let mut ga = vec![0.0; rows * inner];
                let mut gb = vec![0.0; inner * cols];
                for i in 0..rows {
                    for k in 0..inner {
                        let mut acc = 0.0;
                        for j in 0..cols {
                            let gij = g[i * cols + j];
                            acc += gij * vb.data()[k * cols + j];
                            gb[k * cols + j] += va.data()[i * inner + k] * gij;
                        }
                        ga[i * inner + k] = acc;
                    }
                }
                vec![(a, ga), (b, gb)]
            }
            Op::Relu => {
                let x = val(p[0]).data();
                let out = x
                    .iter()
                    .zip(g)
                    .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                    .collect();
                vec![(p[0], out)]
            }
            Op::Tanh => {
                let y = node.value.data();
                vec![(
                    p[0],
                    y.iter().zip(g).map(|(y, g)| g * (1.0 - y * y)).collect(),
                )]
            }
            Op::Sigmoid => {
                let y = node.value.data();
                vec![(
                    p[0],
                    y.iter().zip(g).map(|(y, g)| g * y * (1.0 - y)).collect(),
                )]
            }
            Op::Ln => {
                let x = val(p[0]).data();
                vec![(p[0], x.iter().zip(g).map(|(x, g)| g / x).collect())]
            }
            Op::Exp => {
                let y = node.value.data();
                vec![(p[0], y.iter().zip(g).map(|(y, g)| g * y).collect())]
            }
            Op::Scale(c) => vec![(p[0], g.iter().map(|g| c * g).collect())],
            // λ = 0 detaches the input instead of injecting signed zeros
            Op::GradientReversal(lambda) if *lambda == 0.0 => Vec::new(),
            Op::GradientReversal(lambda) => {
                vec![(p[0], g.iter().map(|g| -lambda * g).collect())]
            }
            Op::Clamp { lo, hi } => {
                let x = val(p[0]).data();
                let out = x
                    .iter()
                    .zip(g)
                    .map(|(&x, &g)| if x >= *lo && x <= *hi { g } else { 0.0 })
                    .collect();
                vec![(p[0], out)]
            }
            Op::Mean => {
                let n = val(p[0]).len();
                vec![(p[0], vec![g[0] / n as f64; n])]
            }
            Op::Sum => vec![(p[0], vec![g[0]; val(p[0]).len()])],
            Op::RowSum => {
                let x = val(p[0]);
                let w = x.row_len();
                vec![(p[0], (0..x.len()).map(|i| g[i / w]).collect())]
            }
            Op::Concat => {
                let rows = node.value.rows();
                let width = node.value.row_len();
                let mut offset = 0;
                let mut out = Vec::with_capacity(p.len());
                for &part in p {
                    let w = val(part).row_len();
                    let mut gp = Vec::with_capacity(rows * w);
                    for i in 0..rows {
                        gp.extend_from_slice(&g[i * width + offset..i * width + offset + w]);
                    }
                    offset += w;
                    out.push((part, gp));
                }
                out
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
