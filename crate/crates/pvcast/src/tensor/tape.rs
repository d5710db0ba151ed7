//! Recorded forward computations and reverse-mode backpropagation.
//!
//! Nodes are appended in evaluation order, so a single reverse sweep over
//! the tape visits every node after all of its consumers. Gradients of
//! parameter leaves are accumulated back into the owning [`ParamSet`].

use super::{ParamId, ParamSet, Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Debug, Clone)]
enum Op {
    /// Leaf copied from a parameter; gradient flows back to the ParamSet.
    Param(ParamId),
    /// Leaf with no gradient flow.
    Const,
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    MatVec { w: NodeId, x: NodeId },
    Conv1d {
        input: NodeId,
        weights: NodeId,
        bias: NodeId,
        padding: Padding,
    },
    Reshape(NodeId),
    MseLoss { pred: NodeId, target: Vec<f64> },
}

struct Node {
    op: Op,
    shape: Vec<usize>,
    value: Vec<f64>,
}

/// Tape of one forward computation. Confined to a single thread.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn check_finite(op: &'static str, data: &[f64]) -> Result<(), TensorError> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(TensorError::NonFinite { op, index }),
        None => Ok(()),
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, value: Vec<f64>) -> NodeId {
        self.nodes.push(Node { op, shape, value });
        NodeId(self.nodes.len() - 1)
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].shape
    }

    /// Scalar convenience accessor; panics if the node is not length 1.
    pub fn scalar(&self, id: NodeId) -> f64 {
        assert_eq!(self.nodes[id.0].value.len(), 1);
        self.nodes[id.0].value[0]
    }

    /// Enters a parameter leaf, copying its current value onto the tape.
    pub fn param(&mut self, set: &ParamSet, id: ParamId) -> NodeId {
        let t = set.tensor(id);
        self.push(Op::Param(id), t.shape.clone(), t.data.clone())
    }

    pub fn constant(&mut self, tensor: Tensor) -> NodeId {
        self.push(Op::Const, tensor.shape, tensor.data)
    }

    pub fn constant_from(&mut self, shape: &[usize], data: &[f64]) -> Result<NodeId, TensorError> {
        let t = Tensor::from_vec(shape, data.to_vec())?;
        Ok(self.constant(t))
    }

    fn binary_checked(
        &self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
    ) -> Result<(), TensorError> {
        if self.nodes[a.0].shape != self.nodes[b.0].shape {
            return Err(TensorError::ShapeMismatch {
                op,
                expected: format!("{:?}", self.nodes[a.0].shape),
                got: format!("{:?}", self.nodes[b.0].shape),
            });
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        self.binary_checked("add", a, b)?;
        let value: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x + y)
            .collect();
        check_finite("add", &value)?;
        let shape = self.nodes[a.0].shape.clone();
        Ok(self.push(Op::Add(a, b), shape, value))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        self.binary_checked("mul", a, b)?;
        let value: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x * y)
            .collect();
        check_finite("mul", &value)?;
        let shape = self.nodes[a.0].shape.clone();
        Ok(self.push(Op::Mul(a, b), shape, value))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let value: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .map(|&x| 1.0 / (1.0 + (-x).exp()))
            .collect();
        let shape = self.nodes[a.0].shape.clone();
        self.push(Op::Sigmoid(a), shape, value)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let value: Vec<f64> = self.nodes[a.0].value.iter().map(|&x| x.tanh()).collect();
        let shape = self.nodes[a.0].shape.clone();
        self.push(Op::Tanh(a), shape, value)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let value: Vec<f64> = self.nodes[a.0].value.iter().map(|&x| x.max(0.0)).collect();
        let shape = self.nodes[a.0].shape.clone();
        self.push(Op::Relu(a), shape, value)
    }

    /// W[m×n] · x[n] -> [m].
    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> Result<NodeId, TensorError> {
        let ws = &self.nodes[w.0].shape;
        let xs = &self.nodes[x.0].shape;
        if ws.len() != 2 || xs.len() != 1 || ws[1] != xs[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matvec",
                expected: "[m,n] · [n]".into(),
                got: format!("{ws:?} · {xs:?}"),
            });
        }
        let (m, n) = (ws[0], ws[1]);
        let wv = &self.nodes[w.0].value;
        let xv = &self.nodes[x.0].value;
        let mut value = vec![0.0; m];
        for i in 0..m {
            let row = &wv[i * n..(i + 1) * n];
            value[i] = row.iter().zip(xv).map(|(a, b)| a * b).sum();
        }
        check_finite("matvec", &value)?;
        Ok(self.push(Op::MatVec { w, x }, vec![m], value))
    }

    /// Fully connected layer: W·x + b.
    pub fn dense(&mut self, w: NodeId, x: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let y = self.matvec(w, x)?;
        self.add(y, b)
    }

    /// 1-D cross-correlation over [C_in × L] input with [C_out × C_in × k]
    /// weights and a per-output-channel bias broadcast over length.
    pub fn conv1d(
        &mut self,
        input: NodeId,
        weights: NodeId,
        bias: NodeId,
        padding: Padding,
    ) -> Result<NodeId, TensorError> {
        let xs = self.nodes[input.0].shape.clone();
        let ws = self.nodes[weights.0].shape.clone();
        let bs = self.nodes[bias.0].shape.clone();
        if xs.len() != 2 || ws.len() != 3 || bs.len() != 1 {
            return Err(TensorError::ShapeMismatch {
                op: "conv1d",
                expected: "input [C_in,L], weights [C_out,C_in,k], bias [C_out]".into(),
                got: format!("input {xs:?}, weights {ws:?}, bias {bs:?}"),
            });
        }
        let (c_in, len) = (xs[0], xs[1]);
        let (c_out, w_cin, k) = (ws[0], ws[1], ws[2]);
        if w_cin != c_in || bs[0] != c_out {
            return Err(TensorError::ShapeMismatch {
                op: "conv1d",
                expected: format!("weights [*,{c_in},*], bias [{c_out}]"),
                got: format!("weights {ws:?}, bias {bs:?}"),
            });
        }
        let (offset, out_len) = match padding {
            Padding::Same => {
                if k % 2 == 0 {
                    return Err(TensorError::EvenKernel(k));
                }
                ((k - 1) / 2, len)
            }
            Padding::Valid => {
                if k > len {
                    return Err(TensorError::ShapeMismatch {
                        op: "conv1d",
                        expected: format!("kernel width ≤ {len} for valid padding"),
                        got: format!("{k}"),
                    });
                }
                (0, len - k + 1)
            }
        };
        let xv = &self.nodes[input.0].value;
        let wv = &self.nodes[weights.0].value;
        let bv = &self.nodes[bias.0].value;
        let mut value = vec![0.0; c_out * out_len];
        for o in 0..c_out {
            for p in 0..out_len {
                let mut acc = bv[o];
                for i in 0..c_in {
                    for q in 0..k {
                        let s = (p + q) as isize - offset as isize;
                        if s >= 0 && (s as usize) < len {
                            acc += wv[(o * c_in + i) * k + q] * xv[i * len + s as usize];
                        }
                    }
                }
                value[o * out_len + p] = acc;
            }
        }
        check_finite("conv1d", &value)?;
        Ok(self.push(
            Op::Conv1d {
                input,
                weights,
                bias,
                padding,
            },
            vec![c_out, out_len],
            value,
        ))
    }

    pub fn reshape(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId, TensorError> {
        let n: usize = shape.iter().product();
        if n != self.nodes[a.0].value.len() {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                expected: format!("{} elements", self.nodes[a.0].value.len()),
                got: format!("shape {shape:?}"),
            });
        }
        let value = self.nodes[a.0].value.clone();
        Ok(self.push(Op::Reshape(a), shape.to_vec(), value))
    }

    /// Mean squared error against a fixed target.
    pub fn mse_loss(&mut self, pred: NodeId, target: &[f64]) -> Result<NodeId, TensorError> {
        if self.nodes[pred.0].value.len() != target.len() {
            return Err(TensorError::ShapeMismatch {
                op: "mse_loss",
                expected: format!("{} targets", self.nodes[pred.0].value.len()),
                got: format!("{}", target.len()),
            });
        }
        check_finite("mse_loss target", target)?;
        let n = target.len() as f64;
        let loss = self.nodes[pred.0]
            .value
            .iter()
            .zip(target)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n;
        check_finite("mse_loss", std::slice::from_ref(&loss))?;
        Ok(self.push(
            Op::MseLoss {
                pred,
                target: target.to_vec(),
            },
            vec![1],
            vec![loss],
        ))
    }

    /// Reverse sweep from a scalar root. Parameter gradients are
    /// accumulated (added) into `params`; tape-local gradients are exact
    /// analytic partials of the root.
    pub fn backward(&mut self, root: NodeId, params: &mut ParamSet) -> Result<(), TensorError> {
        if self.nodes.is_empty() {
            return Err(TensorError::NoForward);
        }
        if self.nodes[root.0].value.len() != 1 {
            return Err(TensorError::NonScalarRoot(self.nodes[root.0].shape.clone()));
        }
        let mut grads: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        grads[root.0][0] = 1.0;

        for idx in (0..=root.0).rev() {
            let g = std::mem::take(&mut grads[idx]);
            if g.iter().all(|&v| v == 0.0) {
                grads[idx] = g;
                continue;
            }
            match &self.nodes[idx].op {
                Op::Const => {}
                Op::Param(pid) => {
                    let t = params.tensor_mut(*pid);
                    for (pg, gi) in t.grad.iter_mut().zip(&g) {
                        *pg += gi;
                    }
                }
                Op::Add(a, b) => {
                    let (a, b) = (a.0, b.0);
                    for (i, gi) in g.iter().enumerate() {
                        grads[a][i] += gi;
                    }
                    for (i, gi) in g.iter().enumerate() {
                        grads[b][i] += gi;
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (a.0, b.0);
                    for i in 0..g.len() {
                        let av = self.nodes[a].value[i];
                        let bv = self.nodes[b].value[i];
                        grads[a][i] += g[i] * bv;
                        grads[b][i] += g[i] * av;
                    }
                }
                Op::Sigmoid(a) => {
                    let a = a.0;
                    for i in 0..g.len() {
                        let y = self.nodes[idx].value[i];
                        grads[a][i] += g[i] * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    let a = a.0;
                    for i in 0..g.len() {
                        let y = self.nodes[idx].value[i];
                        grads[a][i] += g[i] * (1.0 - y * y);
                    }
                }
                Op::Relu(a) => {
                    let a = a.0;
                    for i in 0..g.len() {
                        if self.nodes[a].value[i] > 0.0 {
                            grads[a][i] += g[i];
                        }
                    }
                }
                Op::MatVec { w, x } => {
                    let (w, x) = (w.0, x.0);
                    let n = self.nodes[x].value.len();
                    for i in 0..g.len() {
                        for j in 0..n {
                            grads[w][i * n + j] += g[i] * self.nodes[x].value[j];
                            grads[x][j] += g[i] * self.nodes[w].value[i * n + j];
                        }
                    }
                }
                Op::Conv1d {
                    input,
                    weights,
                    bias,
                    padding,
                } => {
                    let (xn, wn, bn) = (input.0, weights.0, bias.0);
                    let c_in = self.nodes[xn].shape[0];
                    let len = self.nodes[xn].shape[1];
                    let c_out = self.nodes[wn].shape[0];
                    let k = self.nodes[wn].shape[2];
                    let out_len = self.nodes[idx].shape[1];
                    let offset = match padding {
                        Padding::Same => (k - 1) / 2,
                        Padding::Valid => 0,
                    };
                    for o in 0..c_out {
                        for p in 0..out_len {
                            let go = g[o * out_len + p];
                            if go == 0.0 {
                                continue;
                            }
                            grads[bn][o] += go;
                            for i in 0..c_in {
                                for q in 0..k {
                                    let s = (p + q) as isize - offset as isize;
                                    if s >= 0 && (s as usize) < len {
                                        let s = s as usize;
                                        grads[wn][(o * c_in + i) * k + q] +=
                                            go * self.nodes[xn].value[i * len + s];
                                        grads[xn][i * len + s] +=
                                            go * self.nodes[wn].value[(o * c_in + i) * k + q];
                                    }
                                }
                            }
                        }
                    }
                }
                Op::Reshape(a) => {
                    let a = a.0;
                    for (i, gi) in g.iter().enumerate() {
                        grads[a][i] += gi;
                    }
                }
                Op::MseLoss { pred, target } => {
                    let p = pred.0;
                    let n = target.len() as f64;
                    for i in 0..target.len() {
                        grads[p][i] += g[0] * 2.0 * (self.nodes[p].value[i] - target[i]) / n;
                    }
                }
            }
            grads[idx] = g;
        }
        Ok(())
    }
}
