//! Reverse-mode gradient tape over dense matrices.
//!
//! Every primitive pushes a node holding its output value and the ids of its
//! inputs. [`Tape::backward`] walks the nodes in reverse, accumulating
//! vector–Jacobian products, and hands back the gradients of the nodes that
//! were registered as parameters.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Lower and upper clamp applied to probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    OnePlusScale { x: Var, eps: Var },
    Relu(Var),
    Gram(Var),
    Sigmoid(Var),
    Sum(Var),
    /// Mean clamped binary cross-entropy over the strict upper triangle of
    /// the leading `target.rows()` block.
    BceBlock { p: Var, target: Matrix },
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of the parameters that took part in a forward pass, indexed by
/// the id given to [`Tape::param`].
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    by_param: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, id: usize) -> Option<&Matrix> {
        self.by_param.get(id).and_then(Option::as_ref)
    }

    pub fn len(&self) -> usize {
        self.by_param.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_param.iter().all(Option::is_none)
    }
}

fn require_shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left != right {
        return Err(Error::ShapeMismatch { op, left, right });
    }
    Ok(())
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

    fn push(&mut self, value: Matrix, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Records a value that gradients do not flow into.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    /// Records a learnable leaf. Its gradient is reported under `id`.
    pub fn param(&mut self, id: usize, value: Matrix) -> Var {
        self.push(value, Op::Param(id), true)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::MatMul(a, b), needs))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(value, Op::Add(a, b), needs))
    }

    /// Adds the `1 x c` row `bias` to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        require_shape("add_row", (1, xv.cols()), bv.shape())?;
        let mut value = xv.clone();
        for r in 0..value.rows() {
            for (o, b) in value.row_mut(r).iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        let needs = self.needs(x) || self.needs(bias);
        Ok(self.push(value, Op::AddRow(x, bias), needs))
    }

    /// `(1 + eps) * x` for a `1 x 1` variable `eps`.
    pub fn one_plus_scale(&mut self, x: Var, eps: Var) -> Result<Var> {
        require_shape("one_plus_scale", (1, 1), self.value(eps).shape())?;
        let s = 1.0 + self.value(eps)[(0, 0)];
        let value = self.value(x).scale(s);
        let needs = self.needs(x) || self.needs(eps);
        Ok(self.push(value, Op::OnePlusScale { x, eps }, needs))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| v.max(0.0));
        let needs = self.needs(x);
        self.push(value, Op::Relu(x), needs)
    }

    /// `h · hᵀ`, exactly symmetric.
    pub fn gram(&mut self, h: Var) -> Var {
        let value = self.value(h).gram();
        let needs = self.needs(h);
        self.push(value, Op::Gram(h), needs)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let value = self.value(x).map(sigmoid);
        let needs = self.needs(x);
        self.push(value, Op::Sigmoid(x), needs)
    }

    /// Sum of all entries, as a `1 x 1` value.
    pub fn sum(&mut self, x: Var) -> Var {
        let value = Matrix::filled(1, 1, self.value(x).sum());
        let needs = self.needs(x);
        self.push(value, Op::Sum(x), needs)
    }

    /// Mean binary cross-entropy between `p` and the square 0/1 `target`
    /// over unordered pairs `i < j < target.rows()`. Entries of `p` outside
    /// that triangle are never read.
    pub fn bce_block(&mut self, p: Var, target: &Matrix) -> Result<Var> {
        let k = target.rows();
        let pv = self.value(p);
        if target.cols() != k || k > pv.rows() || k > pv.cols() {
            return Err(Error::ShapeMismatch {
                op: "bce_block",
                left: pv.shape(),
                right: target.shape(),
            });
        }
        let pairs = k * k.saturating_sub(1) / 2;
        let mut total = 0.0;
        for i in 0..k {
            for j in (i + 1)..k {
                let q = pv[(i, j)].clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
                let t = target[(i, j)];
                total -= t * q.ln() + (1.0 - t) * (1.0 - q).ln();
            }
        }
        let loss = if pairs == 0 { 0.0 } else { total / pairs as f64 };
        if !loss.is_finite() {
            return Err(Error::NonFinite("cross-entropy loss".into()));
        }
        let needs = self.needs(p);
        Ok(self.push(
            Matrix::filled(1, 1, loss),
            Op::BceBlock {
                p,
                target: target.clone(),
            },
            needs,
        ))
    }

    /// Back-propagates from the scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let node = self
            .nodes
            .get(loss.0)
            .ok_or_else(|| Error::Tape(format!("variable {} is not on this tape", loss.0)))?;
        if node.value.shape() != (1, 1) {
            return Err(Error::Tape(format!(
                "backward needs a scalar, got {:?}",
                node.value.shape()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));
        let mut out = Gradients::default();

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let send = |v: Var, delta: Matrix, grads: &mut Vec<Option<Matrix>>| -> Result<()> {
                if v.0 >= idx {
                    return Err(Error::Tape(format!("node {idx} reads later node {}", v.0)));
                }
                if !self.nodes[v.0].needs_grad {
                    return Ok(());
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.add_scaled(&delta, 1.0)?,
                    slot @ None => *slot = Some(delta),
                }
                Ok(())
            };
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    if out.by_param.len() <= *id {
                        out.by_param.resize(*id + 1, None);
                    }
                    match &mut out.by_param[*id] {
                        Some(acc) => acc.add_scaled(&g, 1.0)?,
                        slot @ None => *slot = Some(g),
                    }
                }
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        send(*a, g.matmul_t(self.value(*b))?, &mut grads)?;
                    }
                    if self.needs(*b) {
                        send(*b, self.value(*a).t_matmul(&g)?, &mut grads)?;
                    }
                }
                Op::Add(a, b) => {
                    send(*a, g.clone(), &mut grads)?;
                    send(*b, g, &mut grads)?;
                }
                Op::AddRow(x, bias) => {
                    if self.needs(*bias) {
                        let mut col = Matrix::zeros(1, g.cols());
                        for r in 0..g.rows() {
                            for (c, v) in col.data_mut().iter_mut().zip(g.row(r)) {
                                *c += v;
                            }
                        }
                        send(*bias, col, &mut grads)?;
                    }
                    send(*x, g, &mut grads)?;
                }
                Op::OnePlusScale { x, eps } => {
                    if self.needs(*eps) {
                        let d = self.value(*x).dot(&g)?;
                        send(*eps, Matrix::filled(1, 1, d), &mut grads)?;
                    }
                    let s = 1.0 + self.value(*eps)[(0, 0)];
                    send(*x, g.scale(s), &mut grads)?;
                }
                Op::Relu(x) => {
                    let xv = self.value(*x);
                    let mut d = g;
                    for (dv, &v) in d.data_mut().iter_mut().zip(xv.data()) {
                        if v <= 0.0 {
                            *dv = 0.0;
                        }
                    }
                    send(*x, d, &mut grads)?;
                }
                Op::Gram(h) => {
                    let sym = g.add(&g.transpose())?;
                    send(*h, sym.matmul(self.value(*h))?, &mut grads)?;
                }
                Op::Sigmoid(x) => {
                    let y = &node.value;
                    let mut d = g;
                    for (dv, &s) in d.data_mut().iter_mut().zip(y.data()) {
                        *dv *= s * (1.0 - s);
                    }
                    send(*x, d, &mut grads)?;
                }
                Op::Sum(x) => {
                    let (r, c) = self.value(*x).shape();
                    send(*x, Matrix::filled(r, c, g[(0, 0)]), &mut grads)?;
                }
                Op::BceBlock { p, target } => {
                    let pv = self.value(*p);
                    let k = target.rows();
                    let pairs = k * k.saturating_sub(1) / 2;
                    let mut d = Matrix::zeros(pv.rows(), pv.cols());
                    if pairs > 0 {
                        let scale = g[(0, 0)] / pairs as f64;
                        for i in 0..k {
                            for j in (i + 1)..k {
                                let q = pv[(i, j)];
                                if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&q) {
                                    continue;
                                }
                                let t = target[(i, j)];
                                d[(i, j)] = -scale * (t / q - (1.0 - t) / (1.0 - q));
                            }
                        }
                    }
                    send(*p, d, &mut grads)?;
                }
            }
        }
        Ok(out)
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
