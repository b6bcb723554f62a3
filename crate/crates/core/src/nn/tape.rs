//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every forward operation appends a node holding its output value and the
//! handles of its inputs. [`Tape::backward`] walks the nodes in reverse
//! recording order and accumulates gradients into each input.

use std::sync::Arc;

use rand::Rng;

use super::param::{ParamId, ParamSet};
use super::sparse::SparseMatrix;
use super::tensor::{matmul_at_into, matmul_bt_into, Tensor};
use crate::error::{Error, Result};

/// Lower/upper clamp applied to probabilities inside the BCE loss.
pub const BCE_EPS: f64 = 1e-7;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    SliceCols { x: Var, start: usize },
    Dropout { x: Var, mask: Vec<f64> },
    Propagate { x: Var, adj: Arc<SparseMatrix> },
    MeanRows(Var),
    Sum(Var),
    Mse(Var, Var),
    Bce { prob: Var, labels: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    // `None` for parameters, whose value lives in the `ParamSet`.
    value: Option<Tensor>,
    op: Op,
    requires_grad: bool,
}

pub struct Tape<'p> {
    params: &'p ParamSet,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamSet) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(id)) => &self.params.get(*id).value,
            _ => unreachable!("only parameter nodes store no value"),
        }
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value: Some(value),
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Constant input; no gradient is computed for it.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input, false)
    }

    /// Input whose gradient is wanted (used by gradient checks).
    pub fn input_with_grad(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input, true)
    }

    /// Leaf for a parameter. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        self.nodes.push(Node {
            value: None,
            op: Op::Param(id),
            requires_grad: true,
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::MatMul(a, b), rg))
    }

    /// Adds a length-`d` bias to every row of an `n×d` matrix.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(b));
        if bv.len() != xv.cols() {
            return Err(Error::Shape {
                op: "add_bias",
                left: xv.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        let mut out = xv.clone();
        let d = bv.len();
        for row in out.data_mut().chunks_mut(d) {
            for (o, &bb) in row.iter_mut().zip(bv.data()) {
                *o += bb;
            }
        }
        let rg = self.rg(x) || self.rg(b);
        Ok(self.push(out, Op::AddBias(x, b), rg))
    }

    /// `x · w + b`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_bias(xw, b)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(Error::Shape {
                op,
                left: av.shape().to_vec(),
                right: bv.shape().to_vec(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let mut out = self.value(a).clone();
        for (o, &y) in out.data_mut().iter_mut().zip(self.value(b).data()) {
            *o = f(*o, y);
        }
        out
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.zip_with(a, b, |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.zip_with(a, b, |x, y| x - y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Sub(a, b), rg))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.zip_with(a, b, |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, Op::Mul(a, b), rg))
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let mut out = self.value(x).clone();
        out.data_mut().iter_mut().for_each(|v| *v = f(*v));
        let rg = self.rg(x);
        self.push(out, op, rg)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, |v| v.max(0.0), Op::Relu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, sigmoid, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.map(x, f64::tanh, Op::Tanh(x))
    }

    /// Columns `start..start+len` of an `n×d` matrix.
    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        let (n, d) = (xv.rows(), xv.cols());
        if len == 0 || start + len > d {
            return Err(Error::Shape {
                op: "slice_cols",
                left: xv.shape().to_vec(),
                right: vec![start, len],
            });
        }
        let mut data = Vec::with_capacity(n * len);
        for i in 0..n {
            data.extend_from_slice(&xv.data()[i * d + start..i * d + start + len]);
        }
        let out = Tensor::matrix(n, len, data)?;
        let rg = self.rg(x);
        Ok(self.push(out, Op::SliceCols { x, start }, rg))
    }

    /// Inverted dropout. With `training == false` or `p == 0` this is the identity.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, p: f64, training: bool, rng: &mut R) -> Var {
        if !training || p <= 0.0 {
            return x;
        }
        assert!(p < 1.0, "dropout probability must be < 1");
        let keep = 1.0 / (1.0 - p);
        let n = self.value(x).len();
        let mask: Vec<f64> = (0..n)
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let mut out = self.value(x).clone();
        for (o, m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        let rg = self.rg(x);
        self.push(out, Op::Dropout { x, mask }, rg)
    }

    /// `adj · x` for a square propagation matrix and `x: n×d`.
    pub fn propagate(&mut self, x: Var, adj: &Arc<SparseMatrix>) -> Result<Var> {
        let xv = self.value(x);
        if xv.rows() != adj.n() {
            return Err(Error::Shape {
                op: "propagate",
                left: vec![adj.n(), adj.n()],
                right: xv.shape().to_vec(),
            });
        }
        let (n, d) = (xv.rows(), xv.cols());
        let mut out = vec![0.0; n * d];
        adj.mul_into(xv.data(), d, &mut out);
        let out = Tensor::matrix(n, d, out)?;
        let rg = self.rg(x);
        Ok(self.push(
            out,
            Op::Propagate {
                x,
                adj: Arc::clone(adj),
            },
            rg,
        ))
    }

    /// Graph convolution `adj · x · w + b`.
    pub fn gcn_conv(&mut self, x: Var, adj: &Arc<SparseMatrix>, w: Var, b: Var) -> Result<Var> {
        let ax = self.propagate(x, adj)?;
        self.linear(ax, w, b)
    }

    /// Column means of an `n×d` matrix, as `1×d`.
    pub fn mean_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let (n, d) = (xv.rows(), xv.cols());
        let mut out = vec![0.0; d];
        for row in xv.data().chunks(d) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|v| *v /= n as f64);
        let out = Tensor::matrix(1, d, out).expect("d > 0");
        let rg = self.rg(x);
        self.push(out, Op::MeanRows(x), rg)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    /// Mean squared error over all elements.
    pub fn mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.same_shape("mse", pred, target)?;
        let (p, t) = (self.value(pred), self.value(target));
        let n = p.len() as f64;
        let s: f64 = p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum();
        let rg = self.rg(pred) || self.rg(target);
        Ok(self.push(Tensor::scalar(s / n), Op::Mse(pred, target), rg))
    }

    /// Mean binary cross-entropy; probabilities are clamped to `[ε, 1−ε]`.
    pub fn bce(&mut self, prob: Var, labels: &[f64]) -> Result<Var> {
        let p = self.value(prob);
        if p.len() != labels.len() {
            return Err(Error::Shape {
                op: "bce",
                left: p.shape().to_vec(),
                right: vec![labels.len()],
            });
        }
        let n = labels.len() as f64;
        let s: f64 = p
            .data()
            .iter()
            .zip(labels)
            .map(|(&q, &y)| {
                let q = q.clamp(BCE_EPS, 1.0 - BCE_EPS);
                -(y * q.ln() + (1.0 - y) * (1.0 - q).ln())
            })
            .sum();
        let rg = self.rg(prob);
        Ok(self.push(
            Tensor::scalar(s / n),
            Op::Bce {
                prob,
                labels: labels.to_vec(),
            },
            rg,
        ))
    }

    /// Back-propagates from a scalar `loss`, seeding its gradient with 1.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::invalid(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if matches!(node.op, Op::Input | Op::Param(_)) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let out = node.value.as_ref().expect("computed nodes store values");
            self.backprop_node(&node.op, out, &g, &mut grads);
        }

        let params = self
            .param_nodes
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (ParamId(i), v)))
            .map(|(id, v)| {
                let len = self.params.get(id).value.len();
                (id, grads[v.0].take().unwrap_or_else(|| vec![0.0; len]))
            })
            .collect();
        Ok(Gradients {
            nodes: grads,
            params,
        })
    }

    fn backprop_node(&self, op: &Op, out: &Tensor, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match op {
            Op::Input | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                let (n, k, m) = (av.rows(), av.cols(), bv.cols());
                if self.rg(*a) {
                    matmul_bt_into(g, bv.data(), self.slot(grads, *a), n, m, k);
                }
                if self.rg(*b) {
                    matmul_at_into(av.data(), g, self.slot(grads, *b), n, k, m);
                }
            }
            Op::AddBias(x, b) => {
                if self.rg(*x) {
                    add_into(self.slot(grads, *x), g);
                }
                if self.rg(*b) {
                    let d = self.value(*b).len();
                    let gb = self.slot(grads, *b);
                    for row in g.chunks(d) {
                        add_into(gb, row);
                    }
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if self.rg(v) {
                        add_into(self.slot(grads, v), g);
                    }
                }
            }
            Op::Sub(a, b) => {
                if self.rg(*a) {
                    add_into(self.slot(grads, *a), g);
                }
                if self.rg(*b) {
                    for (o, gv) in self.slot(grads, *b).iter_mut().zip(g) {
                        *o -= gv;
                    }
                }
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    let bv = self.value(*b).data();
                    for ((o, gv), y) in self.slot(grads, *a).iter_mut().zip(g).zip(bv) {
                        *o += gv * y;
                    }
                }
                if self.rg(*b) {
                    let av = self.value(*a).data();
                    for ((o, gv), x) in self.slot(grads, *b).iter_mut().zip(g).zip(av) {
                        *o += gv * x;
                    }
                }
            }
            Op::Relu(x) => {
                if self.rg(*x) {
                    let xv = self.value(*x).data();
                    for ((o, gv), v) in self.slot(grads, *x).iter_mut().zip(g).zip(xv) {
                        if *v > 0.0 {
                            *o += gv;
                        }
                    }
                }
            }
            Op::Sigmoid(x) => {
                if self.rg(*x) {
                    for ((o, gv), s) in self.slot(grads, *x).iter_mut().zip(g).zip(out.data()) {
                        *o += gv * s * (1.0 - s);
                    }
                }
            }
            Op::Tanh(x) => {
                if self.rg(*x) {
                    for ((o, gv), t) in self.slot(grads, *x).iter_mut().zip(g).zip(out.data()) {
                        *o += gv * (1.0 - t * t);
                    }
                }
            }
            Op::SliceCols { x, start } => {
                if self.rg(*x) {
                    let d = self.value(*x).cols();
                    let len = out.cols();
                    let gx = self.slot(grads, *x);
                    for (i, row) in g.chunks(len).enumerate() {
                        add_into(&mut gx[i * d + start..i * d + start + len], row);
                    }
                }
            }
            Op::Dropout { x, mask } => {
                if self.rg(*x) {
                    for ((o, gv), m) in self.slot(grads, *x).iter_mut().zip(g).zip(mask) {
                        *o += gv * m;
                    }
                }
            }
            Op::Propagate { x, adj } => {
                if self.rg(*x) {
                    let d = out.cols();
                    adj.mul_t_into(g, d, self.slot(grads, *x));
                }
            }
            Op::MeanRows(x) => {
                if self.rg(*x) {
                    let n = self.value(*x).rows() as f64;
                    let d = out.cols();
                    for row in self.slot(grads, *x).chunks_mut(d) {
                        for (o, gv) in row.iter_mut().zip(g) {
                            *o += gv / n;
                        }
                    }
                }
            }
            Op::Sum(x) => {
                if self.rg(*x) {
                    self.slot(grads, *x).iter_mut().for_each(|o| *o += g[0]);
                }
            }
            Op::Mse(p, t) => {
                let (pv, tv) = (self.value(*p).data(), self.value(*t).data());
                let scale = 2.0 * g[0] / pv.len() as f64;
                if self.rg(*p) {
                    for ((o, a), b) in self.slot(grads, *p).iter_mut().zip(pv).zip(tv) {
                        *o += scale * (a - b);
                    }
                }
                if self.rg(*t) {
                    for ((o, a), b) in self.slot(grads, *t).iter_mut().zip(pv).zip(tv) {
                        *o -= scale * (a - b);
                    }
                }
            }
            Op::Bce { prob, labels } => {
                if self.rg(*prob) {
                    let pv = self.value(*prob).data();
                    let n = labels.len() as f64;
                    for ((o, &q), &y) in self.slot(grads, *prob).iter_mut().zip(pv).zip(labels) {
                        // clamped region has zero derivative
                        if q < BCE_EPS || q > 1.0 - BCE_EPS {
                            continue;
                        }
                        *o += g[0] * (q - y) / (q * (1.0 - q)) / n;
                    }
                }
            }
        }
    }

    // Gradient buffer for `v`, created zeroed on first use.
    #[allow(clippy::mut_from_ref)]
    fn slot<'g>(&self, grads: &'g mut [Option<Vec<f64>>], v: Var) -> &'g mut Vec<f64> {
        let len = self.value(v).len();
        grads[v.0].get_or_insert_with(|| vec![0.0; len])
    }
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
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

/// Result of [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    nodes: Vec<Option<Vec<f64>>>,
    params: Vec<(ParamId, Vec<f64>)>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. an input created with
    /// [`Tape::input_with_grad`]. `None` when no gradient flowed.
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].as_deref()
    }

    pub fn param(&self, id: ParamId) -> Option<&[f64]> {
        self.params
            .iter()
            .find(|(p, _)| *p == id)
            .map(|(_, g)| g.as_slice())
    }

    pub fn param_grads(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.params.iter().map(|(id, g)| (*id, g.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::matrix(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn linear_identity_and_scalar_cases() {
        let mut ps = ParamSet::new();
        let w = ps.add("w", Tensor::identity(2));
        let b = ps.add("b", Tensor::zeros(&[2]));
        let w2 = ps.add("w2", m(2, 1, &[3.0, 4.0]));
        let b2 = ps.add("b2", Tensor::scalar(5.0));
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::identity(2));
        let (wv, bv) = (tape.param(w), tape.param(b));
        let y = tape.linear(x, wv, bv).unwrap();
        assert_eq!(tape.value(y), &Tensor::identity(2));

        let x2 = tape.input(m(1, 2, &[1.0, 2.0]));
        let (wv, bv) = (tape.param(w2), tape.param(b2));
        let y2 = tape.linear(x2, wv, bv).unwrap();
        assert_eq!(tape.value(y2).data(), &[16.0]);
    }

    #[test]
    fn linear_shape_error() {
        let mut ps = ParamSet::new();
        let w = ps.add("w", Tensor::zeros(&[3, 2]));
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::zeros(&[1, 2]));
        let wv = tape.param(w);
        let err = tape.matmul(x, wv).unwrap_err().to_string();
        assert!(err.contains("[1, 2]") && err.contains("[3, 2]"), "{err}");
    }

    #[test]
    fn activations() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::vector(vec![-1.0, 0.0, 2.0]).unwrap());
        let r = tape.relu(x);
        assert_eq!(tape.value(r).data(), &[0.0, 0.0, 2.0]);
        let s = tape.sigmoid(x);
        assert_eq!(tape.value(s).data()[1], 0.5);
        let t = tape.tanh(x);
        assert_eq!(tape.value(t).data()[2], 2f64.tanh());
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input_with_grad(Tensor::vector(vec![0.0, 1.0]).unwrap());
        let r = tape.relu(x);
        let s = tape.sum(r);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.wrt(x).unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn dropout_identity_cases() {
        let ps = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::filled(&[4, 4], 2.0));
        let a = tape.dropout(x, 0.0, true, &mut rng);
        let b = tape.dropout(x, 0.3, false, &mut rng);
        assert_eq!(tape.value(a), tape.value(x));
        assert_eq!(tape.value(b), tape.value(x));
    }

    #[test]
    fn dropout_statistics() {
        let ps = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tape = Tape::new(&ps);
        let n = 1_000_000;
        let x = tape.input(Tensor::filled(&[1, n], 1.0));
        let y = tape.dropout(x, 0.3, true, &mut rng);
        let data = tape.value(y).data();
        let zeros = data.iter().filter(|v| **v == 0.0).count() as f64 / n as f64;
        assert!((zeros - 0.3).abs() < 0.01, "zero fraction {zeros}");
        let survivors: Vec<f64> = data.iter().copied().filter(|v| *v != 0.0).collect();
        let mean = survivors.iter().sum::<f64>() / survivors.len() as f64;
        assert!((mean - 1.0 / 0.7).abs() < 1e-9);
        // overall mean is preserved in expectation
        let total = data.iter().sum::<f64>() / n as f64;
        assert!((total - 1.0).abs() < 0.01);
    }

    #[test]
    fn losses() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let p = tape.input(Tensor::vector(vec![0.2, 0.4]).unwrap());
        let l = tape.mse(p, p).unwrap();
        assert_eq!(tape.value(l).data(), &[0.0]);

        let half = tape.input(Tensor::scalar(0.5));
        let b = tape.bce(half, &[1.0]).unwrap();
        assert!((tape.value(b).data()[0] - std::f64::consts::LN_2).abs() < 1e-15);

        // clamping keeps log finite
        let one = tape.input(Tensor::vector(vec![1.0, 0.0]).unwrap());
        let b = tape.bce(one, &[0.0, 1.0]).unwrap();
        assert!(tape.value(b).data()[0].is_finite());
    }

    #[test]
    fn mean_pool_gradient_conserves_mass() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input_with_grad(Tensor::filled(&[5, 3], 0.25));
        let p = tape.mean_rows(x);
        let w = tape.input(Tensor::matrix(1, 3, vec![1.0, -2.0, 3.0]).unwrap());
        let y = tape.mul(p, w).unwrap();
        let s = tape.sum(y);
        let g = tape.backward(s).unwrap();
        let gx = g.wrt(x).unwrap();
        for c in 0..3 {
            let col: f64 = (0..5).map(|r| gx[r * 3 + c]).sum();
            assert!((col - [1.0, -2.0, 3.0][c]).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_requires_scalar() {
        let ps = ParamSet::new();
        let mut tape = Tape::new(&ps);
        let x = tape.input(Tensor::zeros(&[2]));
        assert!(tape.backward(x).is_err());
    }

    #[test]
    fn unused_param_gets_zero_grad() {
        let mut ps = ParamSet::new();
        let a = ps.add("a", Tensor::scalar(2.0));
        let b = ps.add("b", Tensor::scalar(3.0));
        let mut tape = Tape::new(&ps);
        let av = tape.param(a);
        let _ = tape.param(b);
        let s = tape.sum(av);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.param(a).unwrap(), &[1.0]);
        assert_eq!(g.param(b).unwrap(), &[0.0]);
    }
}
