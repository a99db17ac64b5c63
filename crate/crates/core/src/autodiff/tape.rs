use std::sync::Arc;

use indexmap::IndexMap;
use ndarray::{s, Array2, Axis, Zip};
use rand::Rng;

use super::{AutodiffError, Gradients, Parameters};
use crate::linalg::CsrMatrix;
use crate::rng::seeded;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// Parameters recorded on a tape, looked up by name.
#[derive(Debug, Clone, Default)]
pub struct Bound {
    vars: IndexMap<String, Var>,
}

impl Bound {
    pub fn get(&self, name: &str) -> Result<Var, AutodiffError> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| AutodiffError::UnknownParameter(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl FromIterator<(String, Var)> for Bound {
    fn from_iter<I: IntoIterator<Item = (String, Var)>>(iter: I) -> Self {
        Self {
            vars: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SparseMatMul(Arc<CsrMatrix>, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Tanh(Var),
    ConcatRows(Vec<Var>),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Arc<Vec<usize>>),
    ScatterAddRows(Var, Arc<Vec<usize>>),
    Dropout(Var, Array2<f64>),
    Sum(Var),
    Mean(Var),
    SoftmaxCrossEntropy {
        logits: Var,
        targets: Array2<f64>,
        probs: Array2<f64>,
    },
    BceWithLogits {
        logits: Var,
        targets: Array2<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Array2<f64>,
    grad: Option<Array2<f64>>,
    requires_grad: bool,
    op: Op,
}

/// Records a computation for one forward/backward pass. Not shared across threads.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    backward_done: bool,
}

fn shape(a: &Array2<f64>) -> (usize, usize) {
    a.dim()
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

    fn push(&mut self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            requires_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A trainable input.
    pub fn leaf(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A constant input; no gradient is tracked.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        shape(&self.nodes[v.0].value)
    }

    pub fn grad(&self, v: Var) -> Option<&Array2<f64>> {
        self.nodes[v.0].grad.as_ref()
    }

    /// Records every parameter as a leaf.
    pub fn bind(&mut self, params: &Parameters) -> Bound {
        Bound {
            vars: params
                .iter()
                .map(|(name, value)| (name.to_string(), self.leaf(value.clone())))
                .collect(),
        }
    }

    /// Gradients of bound parameters; zeros where no gradient reached.
    pub fn gradients(&self, bound: &Bound) -> Gradients {
        let mut out = Gradients::new();
        for (name, v) in &bound.vars {
            let g = self
                .grad(*v)
                .cloned()
                .unwrap_or_else(|| Array2::zeros(self.shape(*v)));
            out.insert(name.clone(), g);
        }
        out
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
        self.backward_done = false;
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), AutodiffError> {
        let (l, r) = (self.shape(a), self.shape(b));
        if l != r {
            return Err(AutodiffError::ShapeMismatch {
                op,
                left: l,
                right: r,
            });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (l, r) = (self.shape(a), self.shape(b));
        if l.1 != r.0 {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                left: l,
                right: r,
            });
        }
        let value = self.value(a).dot(self.value(b));
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    /// `M x` for a constant sparse `M`.
    pub fn sparse_matmul(&mut self, m: &Arc<CsrMatrix>, x: Var) -> Result<Var, AutodiffError> {
        let value =
            m.mul_dense(&self.value(x).view())
                .map_err(|_| AutodiffError::ShapeMismatch {
                    op: "sparse_matmul",
                    left: m.shape(),
                    right: self.shape(x),
                })?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::SparseMatMul(Arc::clone(m), x), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("add", a, b)?;
        let value = self.value(a) + self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a) - self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a) * self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    /// Adds a `1×c` row (a bias) to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var, AutodiffError> {
        let (l, r) = (self.shape(x), self.shape(row));
        if r.0 != 1 || r.1 != l.1 {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row",
                left: l,
                right: r,
            });
        }
        let value = self.value(x) + self.value(row);
        let rg = self.rg(x) || self.rg(row);
        Ok(self.push(value, Op::AddRow(x, row), rg))
    }

    /// Scales row `i` of `x` by `w[i, 0]`.
    pub fn mul_col(&mut self, x: Var, w: Var) -> Result<Var, AutodiffError> {
        let (l, r) = (self.shape(x), self.shape(w));
        if r.1 != 1 || r.0 != l.0 {
            return Err(AutodiffError::ShapeMismatch {
                op: "mul_col",
                left: l,
                right: r,
            });
        }
        let value = self.value(x) * self.value(w);
        let rg = self.rg(x) || self.rg(w);
        Ok(self.push(value, Op::MulCol(x, w), rg))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let value = self.value(x) * s;
        let rg = self.rg(x);
        self.push(value, Op::Scale(x, s), rg)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).mapv(|v| v.max(0.0));
        let rg = self.rg(x);
        self.push(value, Op::Relu(x), rg)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let value = self.value(x).mapv(f64::tanh);
        let rg = self.rg(x);
        self.push(value, Op::Tanh(x), rg)
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let first = parts.first().ok_or(AutodiffError::InvalidArgument(
            "concat_rows of nothing".into(),
        ))?;
        let cols = self.shape(*first).1;
        for p in parts {
            if self.shape(*p).1 != cols {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_rows",
                    left: self.shape(*first),
                    right: self.shape(*p),
                });
            }
        }
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let value = ndarray::concatenate(Axis(0), &views).expect("columns checked");
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), rg))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, AutodiffError> {
        let first = parts.first().ok_or(AutodiffError::InvalidArgument(
            "concat_cols of nothing".into(),
        ))?;
        let rows = self.shape(*first).0;
        for p in parts {
            if self.shape(*p).0 != rows {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_cols",
                    left: self.shape(*first),
                    right: self.shape(*p),
                });
            }
        }
        let views: Vec<_> = parts.iter().map(|p| self.value(*p).view()).collect();
        let value = ndarray::concatenate(Axis(1), &views).expect("rows checked");
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Row `k` of the result is row `idx[k]` of `x`.
    pub fn gather_rows(&mut self, x: Var, idx: &Arc<Vec<usize>>) -> Result<Var, AutodiffError> {
        let n = self.shape(x).0;
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(AutodiffError::IndexOutOfRange { index: bad, len: n });
        }
        let value = gather(self.value(x), idx);
        let rg = self.rg(x);
        Ok(self.push(value, Op::GatherRows(x, Arc::clone(idx)), rg))
    }

    /// Sums row `k` of `x` into row `idx[k]` of an `n_out`-row result.
    pub fn scatter_add_rows(
        &mut self,
        x: Var,
        idx: &Arc<Vec<usize>>,
        n_out: usize,
    ) -> Result<Var, AutodiffError> {
        let (n, c) = self.shape(x);
        if idx.len() != n {
            return Err(AutodiffError::ShapeMismatch {
                op: "scatter_add_rows",
                left: (n, c),
                right: (idx.len(), 1),
            });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= n_out) {
            return Err(AutodiffError::IndexOutOfRange {
                index: bad,
                len: n_out,
            });
        }
        let value = scatter_add(self.value(x), idx, n_out);
        let rg = self.rg(x);
        Ok(self.push(value, Op::ScatterAddRows(x, Arc::clone(idx)), rg))
    }

    /// Inverted dropout: survivors are scaled by `1/(1-p)`. Identity when not training.
    pub fn dropout(
        &mut self,
        x: Var,
        p: f64,
        train: bool,
        seed: u64,
    ) -> Result<Var, AutodiffError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(AutodiffError::InvalidArgument(format!(
                "dropout rate {p} outside [0, 1]"
            )));
        }
        if !train || p == 0.0 {
            return Ok(x);
        }
        let mut rng = seeded(seed);
        let keep = 1.0 - p;
        let mask = Array2::from_shape_fn(self.shape(x), |_| {
            if keep > 0.0 && rng.random::<f64>() < keep {
                1.0 / keep
            } else {
                0.0
            }
        });
        let value = self.value(x) * &mask;
        let rg = self.rg(x);
        Ok(self.push(value, Op::Dropout(x, mask), rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Array2::from_elem((1, 1), self.value(x).sum());
        let rg = self.rg(x);
        self.push(value, Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let m = if v.is_empty() {
            0.0
        } else {
            v.sum() / v.len() as f64
        };
        let rg = self.rg(x);
        self.push(Array2::from_elem((1, 1), m), Op::Mean(x), rg)
    }

    /// Mean over rows of `−Σ_c t_c log softmax(z)_c`.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        targets: &Array2<f64>,
    ) -> Result<Var, AutodiffError> {
        let z = self.value(logits);
        if z.dim() != targets.dim() {
            return Err(AutodiffError::ShapeMismatch {
                op: "softmax_cross_entropy",
                left: z.dim(),
                right: targets.dim(),
            });
        }
        let n = z.nrows();
        if n == 0 {
            return Err(AutodiffError::InvalidArgument(
                "cross entropy over zero rows".into(),
            ));
        }
        let mut probs = Array2::zeros(z.dim());
        let mut loss = 0.0;
        for (r, row) in z.rows().into_iter().enumerate() {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
            let log_sum = sum.ln();
            for (c, &v) in row.iter().enumerate() {
                let log_p = v - max - log_sum;
                probs[[r, c]] = log_p.exp();
                loss -= targets[[r, c]] * log_p;
            }
        }
        let value = Array2::from_elem((1, 1), loss / n as f64);
        let rg = self.rg(logits);
        Ok(self.push(
            value,
            Op::SoftmaxCrossEntropy {
                logits,
                targets: targets.clone(),
                probs,
            },
            rg,
        ))
    }

    /// Mean binary cross entropy on raw logits, computed stably.
    pub fn bce_with_logits(
        &mut self,
        logits: Var,
        targets: &Array2<f64>,
    ) -> Result<Var, AutodiffError> {
        let z = self.value(logits);
        if z.dim() != targets.dim() {
            return Err(AutodiffError::ShapeMismatch {
                op: "bce_with_logits",
                left: z.dim(),
                right: targets.dim(),
            });
        }
        if z.is_empty() {
            return Err(AutodiffError::InvalidArgument(
                "cross entropy over zero entries".into(),
            ));
        }
        let mut loss = 0.0;
        Zip::from(z).and(targets).for_each(|&x, &t| {
            loss += x.max(0.0) - x * t + (-x.abs()).exp().ln_1p();
        });
        let value = Array2::from_elem((1, 1), loss / z.len() as f64);
        let rg = self.rg(logits);
        Ok(self.push(
            value,
            Op::BceWithLogits {
                logits,
                targets: targets.clone(),
            },
            rg,
        ))
    }

    fn accumulate(&mut self, v: Var, g: Array2<f64>) {
        let node = &mut self.nodes[v.0];
        if !node.requires_grad {
            return;
        }
        match &mut node.grad {
            Some(acc) => *acc += &g,
            None => node.grad = Some(g),
        }
    }

    /// Back-propagates from a `1×1` loss.
    pub fn backward(&mut self, loss: Var) -> Result<(), AutodiffError> {
        if self.backward_done {
            return Err(AutodiffError::BackwardTwice);
        }
        if self.shape(loss) != (1, 1) {
            return Err(AutodiffError::NonScalarLoss(self.shape(loss)));
        }
        self.backward_done = true;
        self.accumulate(loss, Array2::ones((1, 1)));
        for idx in (0..=loss.0).rev() {
            if !self.nodes[idx].requires_grad || self.nodes[idx].grad.is_none() {
                continue;
            }
            let g = self.nodes[idx].grad.take().expect("checked above");
            let op = std::mem::replace(&mut self.nodes[idx].op, Op::Leaf);
            self.propagate(&op, idx, &g);
            self.nodes[idx].op = op;
            self.nodes[idx].grad = Some(g);
        }
        Ok(())
    }

    fn propagate(&mut self, op: &Op, idx: usize, g: &Array2<f64>) {
        match op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    let ga = g.dot(&self.value(*b).t());
                    self.accumulate(*a, ga);
                }
                if self.rg(*b) {
                    let gb = self.value(*a).t().dot(g);
                    self.accumulate(*b, gb);
                }
            }
            Op::SparseMatMul(m, x) if self.rg(*x) => {
                let gx = m
                    .mul_dense_transposed(&g.view())
                    .expect("shapes fixed at forward time");
                self.accumulate(*x, gx);
            }
            Op::SparseMatMul(..) => {}
            Op::Add(a, b) => {
                self.accumulate(*a, g.clone());
                self.accumulate(*b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(*a, g.clone());
                self.accumulate(*b, -g);
            }
            Op::Mul(a, b) => {
                if self.rg(*a) {
                    let ga = g * self.value(*b);
                    self.accumulate(*a, ga);
                }
                if self.rg(*b) {
                    let gb = g * self.value(*a);
                    self.accumulate(*b, gb);
                }
            }
            Op::AddRow(x, row) => {
                self.accumulate(*x, g.clone());
                let gr = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                self.accumulate(*row, gr);
            }
            Op::MulCol(x, w) => {
                if self.rg(*x) {
                    let gx = g * self.value(*w);
                    self.accumulate(*x, gx);
                }
                if self.rg(*w) {
                    let gw = (g * self.value(*x)).sum_axis(Axis(1)).insert_axis(Axis(1));
                    self.accumulate(*w, gw);
                }
            }
            Op::Scale(x, s) => self.accumulate(*x, g * *s),
            Op::Relu(x) => {
                let gx =
                    Zip::from(g)
                        .and(self.value(*x))
                        .map_collect(|&g, &v| if v > 0.0 { g } else { 0.0 });
                self.accumulate(*x, gx);
            }
            Op::Tanh(x) => {
                let gx = Zip::from(g)
                    .and(&self.nodes[idx].value)
                    .map_collect(|&g, &y| g * (1.0 - y * y));
                self.accumulate(*x, gx);
            }
            Op::ConcatRows(parts) => {
                let mut start = 0;
                for p in parts {
                    let rows = self.shape(*p).0;
                    let gp = g.slice(s![start..start + rows, ..]).to_owned();
                    self.accumulate(*p, gp);
                    start += rows;
                }
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for p in parts {
                    let cols = self.shape(*p).1;
                    let gp = g.slice(s![.., start..start + cols]).to_owned();
                    self.accumulate(*p, gp);
                    start += cols;
                }
            }
            Op::GatherRows(x, rows) => {
                let gx = scatter_add(g, rows, self.shape(*x).0);
                self.accumulate(*x, gx);
            }
            Op::ScatterAddRows(x, rows) => {
                let gx = gather(g, rows);
                self.accumulate(*x, gx);
            }
            Op::Dropout(x, mask) => self.accumulate(*x, g * mask),
            Op::Sum(x) => {
                let gx = Array2::from_elem(self.shape(*x), g[[0, 0]]);
                self.accumulate(*x, gx);
            }
            Op::Mean(x) => {
                let (r, c) = self.shape(*x);
                let count = (r * c).max(1) as f64;
                self.accumulate(*x, Array2::from_elem((r, c), g[[0, 0]] / count));
            }
            Op::SoftmaxCrossEntropy {
                logits,
                targets,
                probs,
            } => {
                let n = probs.nrows() as f64;
                let row_mass = targets.sum_axis(Axis(1)).insert_axis(Axis(1));
                let gx = (probs * &row_mass - targets) * (g[[0, 0]] / n);
                self.accumulate(*logits, gx);
            }
            Op::BceWithLogits { logits, targets } => {
                let n = targets.len() as f64;
                let gx = Zip::from(self.value(*logits))
                    .and(targets)
                    .map_collect(|&x, &t| (sigmoid(x) - t) * g[[0, 0]] / n);
                self.accumulate(*logits, gx);
            }
        }
    }
}

fn gather(x: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    let c = x.ncols();
    let x = x.as_standard_layout();
    let src = x.as_slice().expect("standard layout");
    let mut out = Vec::with_capacity(rows.len() * c);
    for &i in rows {
        out.extend_from_slice(&src[i * c..(i + 1) * c]);
    }
    Array2::from_shape_vec((rows.len(), c), out).expect("row count times width")
}

fn scatter_add(x: &Array2<f64>, rows: &[usize], n_out: usize) -> Array2<f64> {
    let c = x.ncols();
    let x = x.as_standard_layout();
    let src = x.as_slice().expect("standard layout");
    let mut out = vec![0.0; n_out * c];
    for (k, &i) in rows.iter().enumerate() {
        for (o, v) in out[i * c..(i + 1) * c]
            .iter_mut()
            .zip(&src[k * c..(k + 1) * c])
        {
            *o += v;
        }
    }
    Array2::from_shape_vec((n_out, c), out).expect("row count times width")
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
