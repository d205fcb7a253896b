//! Reverse-mode automatic differentiation on a flat tape.
//!
//! Nodes only reference earlier nodes, so a single reverse sweep over the
//! tape propagates gradients. Values are `ArrayD<f64>`; shapes are checked
//! with assertions since the callers (the model forwards) validate their
//! inputs first.

use ndarray::{concatenate, Array1, Array2, ArrayD, Axis, Ix2, IxDyn, Slice};

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Step {
    Leaf,
    /// y = a . b, 2-D; with `trans_b`, y = a . b^T.
    Matmul { a: usize, b: usize, trans_b: bool },
    /// Batched over the leading axes of 4-D inputs.
    BatchMatmul { a: usize, b: usize, trans_b: bool },
    Add { a: usize, b: usize },
    Sub { a: usize, b: usize },
    Mul { a: usize, b: usize },
    /// y = a + bias with bias broadcast over leading axes.
    AddBias { a: usize, bias: usize },
    /// y = a + c for a constant tensor (already applied; gradient passes through).
    AddConst { a: usize },
    /// y = a * c for a constant tensor broadcastable to a.
    MulConst { a: usize, c: Tensor },
    Scale { a: usize, factor: f64 },
    Tanh { a: usize },
    Sigmoid { a: usize },
    Gelu { a: usize },
    SoftmaxLast { a: usize },
    LayerNorm { a: usize, gain: usize, bias: usize, eps: f64 },
    /// Row gather: table (V,E) indexed by ids (B,T) -> (B,T,E).
    Embedding { table: usize, ids: Array2<usize> },
    /// a (B,T,rest..) -> (B,rest..) at time index t.
    SelectAt { a: usize, t: usize },
    NarrowLast { a: usize, start: usize, len: usize },
    ConcatLast { a: usize, b: usize },
    Reshape { a: usize },
    Permute { a: usize, axes: Vec<usize> },
    /// Scalar dot product with a constant weight tensor.
    WeightedSum { a: usize, weights: Tensor },
    /// Mean softmax cross-entropy of (B,K) logits against class indices.
    CrossEntropy { logits: usize, labels: Vec<usize> },
}

pub struct Tape {
    values: Vec<Tensor>,
    steps: Vec<Step>,
}

/// Gradients of one backward sweep, indexed by `Var`.
pub struct Grads {
    grads: Vec<Option<Tensor>>,
}

impl Grads {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads[var.0].as_ref()
    }
}

fn to_2d(arr: &Tensor) -> Array2<f64> {
    let n = *arr.shape().last().expect("at least 1-D");
    let rows = arr.len() / n;
    Array2::from_shape_vec((rows, n), arr.iter().copied().collect()).unwrap()
}

fn reshape_dyn(arr: &Tensor, shape: &[usize]) -> Tensor {
    ArrayD::from_shape_vec(IxDyn(shape), arr.iter().copied().collect()).unwrap()
}

fn view_2d(arr: &Tensor) -> Array2<f64> {
    arr.view()
        .into_dimensionality::<Ix2>()
        .expect("2-D tensor")
        .to_owned()
}

/// Sum `g` down to the shape of a broadcast operand.
fn reduce_to_shape(g: &Tensor, shape: &[usize]) -> Tensor {
    let mut out = g.clone();
    while out.ndim() > shape.len() {
        out = out.sum_axis(Axis(0));
    }
    for (axis, (&have, &want)) in out.shape().to_vec().iter().zip(shape).enumerate() {
        if have != want {
            debug_assert_eq!(want, 1);
            let summed = out.sum_axis(Axis(axis)).insert_axis(Axis(axis));
            out = summed;
        }
    }
    out
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            values: Vec::new(),
            steps: Vec::new(),
        }
    }

    fn push(&mut self, value: Tensor, step: Step) -> Var {
        self.values.push(value);
        self.steps.push(step);
        Var(self.values.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.values[v.0]
    }

    pub fn scalar(&self, v: Var) -> f64 {
        debug_assert_eq!(self.values[v.0].len(), 1);
        *self.values[v.0].iter().next().unwrap()
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Step::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Var {
        let av = view_2d(&self.values[a.0]);
        let bv = view_2d(&self.values[b.0]);
        let y = if trans_b { av.dot(&bv.t()) } else { av.dot(&bv) };
        self.push(y.into_dyn(), Step::Matmul { a: a.0, b: b.0, trans_b })
    }

    pub fn batch_matmul(&mut self, a: Var, b: Var, trans_b: bool) -> Var {
        let av = &self.values[a.0];
        let bv = &self.values[b.0];
        assert_eq!(av.ndim(), 4);
        assert_eq!(bv.ndim(), 4);
        let (d0, d1) = (av.shape()[0], av.shape()[1]);
        let m = av.shape()[2];
        let n = if trans_b { bv.shape()[2] } else { bv.shape()[3] };
        let mut y = ArrayD::<f64>::zeros(IxDyn(&[d0, d1, m, n]));
        for i in 0..d0 {
            for j in 0..d1 {
                let ai = av.index_axis(Axis(0), i);
                let ai = ai.index_axis(Axis(0), j);
                let bi = bv.index_axis(Axis(0), i);
                let bi = bi.index_axis(Axis(0), j);
                let a2 = ai.into_dimensionality::<Ix2>().unwrap();
                let b2 = bi.into_dimensionality::<Ix2>().unwrap();
                let prod = if trans_b { a2.dot(&b2.t()) } else { a2.dot(&b2) };
                let mut yi = y.index_axis_mut(Axis(0), i);
                let mut yi = yi.index_axis_mut(Axis(0), j);
                yi.assign(&prod);
            }
        }
        self.push(y, Step::BatchMatmul { a: a.0, b: b.0, trans_b })
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = &self.values[a.0] + &self.values[b.0];
        self.push(y, Step::Add { a: a.0, b: b.0 })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let y = &self.values[a.0] - &self.values[b.0];
        self.push(y, Step::Sub { a: a.0, b: b.0 })
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let y = &self.values[a.0] * &self.values[b.0];
        self.push(y, Step::Mul { a: a.0, b: b.0 })
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Var {
        let y = &self.values[a.0] + &self.values[bias.0];
        self.push(y, Step::AddBias { a: a.0, bias: bias.0 })
    }

    pub fn add_const(&mut self, a: Var, c: &Tensor) -> Var {
        let shape = self.values[a.0].shape().to_vec();
        let broadcast = c.broadcast(IxDyn(&shape)).expect("broadcastable constant");
        let y = &self.values[a.0] + &broadcast;
        self.push(y, Step::AddConst { a: a.0 })
    }

    pub fn mul_const(&mut self, a: Var, c: &Tensor) -> Var {
        let shape = self.values[a.0].shape().to_vec();
        let broadcast = c.broadcast(IxDyn(&shape)).expect("broadcastable constant");
        let y = &self.values[a.0] * &broadcast;
        self.push(y, Step::MulConst { a: a.0, c: c.clone() })
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let y = &self.values[a.0] * factor;
        self.push(y, Step::Scale { a: a.0, factor })
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let y = self.values[a.0].mapv(f64::tanh);
        self.push(y, Step::Tanh { a: a.0 })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let y = self.values[a.0].mapv(|v| 1.0 / (1.0 + (-v).exp()));
        self.push(y, Step::Sigmoid { a: a.0 })
    }

    /// Tanh-approximation GELU, as used by the reference encoder stacks.
    pub fn gelu(&mut self, a: Var) -> Var {
        let y = self.values[a.0].mapv(gelu_value);
        self.push(y, Step::Gelu { a: a.0 })
    }

    pub fn softmax_last(&mut self, a: Var) -> Var {
        let shape = self.values[a.0].shape().to_vec();
        let y2 = softmax_rows(&to_2d(&self.values[a.0]));
        let y = reshape_dyn(&y2.into_dyn(), &shape);
        self.push(y, Step::SoftmaxLast { a: a.0 })
    }

    pub fn layer_norm(&mut self, a: Var, gain: Var, bias: Var, eps: f64) -> Var {
        let shape = self.values[a.0].shape().to_vec();
        let x = to_2d(&self.values[a.0]);
        let g = self.values[gain.0].view().into_dimensionality::<ndarray::Ix1>().unwrap();
        let b = self.values[bias.0].view().into_dimensionality::<ndarray::Ix1>().unwrap();
        let mut y = Array2::<f64>::zeros(x.raw_dim());
        for (xrow, mut yrow) in x.rows().into_iter().zip(y.rows_mut()) {
            let n = xrow.len() as f64;
            let mean = xrow.sum() / n;
            let var = xrow.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let inv = 1.0 / (var + eps).sqrt();
            for ((yv, &xv), (&gv, &bv)) in
                yrow.iter_mut().zip(xrow.iter()).zip(g.iter().zip(b.iter()))
            {
                *yv = (xv - mean) * inv * gv + bv;
            }
        }
        let y = reshape_dyn(&y.into_dyn(), &shape);
        self.push(y, Step::LayerNorm { a: a.0, gain: gain.0, bias: bias.0, eps })
    }

    pub fn embedding(&mut self, table: Var, ids: Array2<usize>) -> Var {
        let t = view_2d(&self.values[table.0]);
        let (b, s) = ids.dim();
        let e = t.ncols();
        let mut y = ArrayD::<f64>::zeros(IxDyn(&[b, s, e]));
        for i in 0..b {
            for j in 0..s {
                let mut yi = y.index_axis_mut(Axis(0), i);
                let mut yi = yi.index_axis_mut(Axis(0), j);
                yi.assign(&t.row(ids[[i, j]]));
            }
        }
        self.push(y, Step::Embedding { table: table.0, ids })
    }

    pub fn select_step(&mut self, a: Var, t: usize) -> Var {
        let y = self.values[a.0].index_axis(Axis(1), t).to_owned();
        self.push(y, Step::SelectAt { a: a.0, t })
    }

    pub fn narrow_last(&mut self, a: Var, start: usize, len: usize) -> Var {
        let last = self.values[a.0].ndim() - 1;
        let y = self.values[a.0]
            .slice_axis(Axis(last), Slice::from(start..start + len))
            .to_owned();
        self.push(y, Step::NarrowLast { a: a.0, start, len })
    }

    pub fn concat_last(&mut self, a: Var, b: Var) -> Var {
        let last = self.values[a.0].ndim() - 1;
        let y = concatenate(
            Axis(last),
            &[self.values[a.0].view(), self.values[b.0].view()],
        )
        .unwrap();
        self.push(y, Step::ConcatLast { a: a.0, b: b.0 })
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Var {
        let y = reshape_dyn(&self.values[a.0], shape);
        self.push(y, Step::Reshape { a: a.0 })
    }

    pub fn permute(&mut self, a: Var, axes: &[usize]) -> Var {
        let y = self.values[a.0]
            .view()
            .permuted_axes(IxDyn(axes))
            .as_standard_layout()
            .to_owned();
        self.push(y, Step::Permute { a: a.0, axes: axes.to_vec() })
    }

    pub fn weighted_sum(&mut self, a: Var, weights: &Tensor) -> Var {
        let y = (&self.values[a.0] * weights).sum();
        self.push(ndarray::arr0(y).into_dyn(), Step::WeightedSum { a: a.0, weights: weights.clone() })
    }

    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize]) -> Var {
        let x = view_2d(&self.values[logits.0]);
        debug_assert_eq!(x.nrows(), labels.len());
        let mut total = 0.0;
        for (row, &label) in x.rows().into_iter().zip(labels) {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += lse - row[label];
        }
        let mean = total / labels.len() as f64;
        self.push(
            ndarray::arr0(mean).into_dyn(),
            Step::CrossEntropy { logits: logits.0, labels: labels.to_vec() },
        )
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: Var) -> Grads {
        assert_eq!(self.values[root.0].len(), 1, "backward root must be scalar");
        let mut grads: Vec<Option<Tensor>> = vec![None; self.values.len()];
        grads[root.0] = Some(ArrayD::ones(self.values[root.0].raw_dim()));

        for idx in (0..=root.0).rev() {
            let g = match grads[idx].clone() {
                Some(g) => g,
                None => continue,
            };
            match &self.steps[idx] {
                Step::Leaf => {}
                Step::Matmul { a, b, trans_b } => {
                    let g2 = view_2d(&g);
                    let av = view_2d(&self.values[*a]);
                    let bv = view_2d(&self.values[*b]);
                    let (ga, gb) = if *trans_b {
                        (g2.dot(&bv), g2.t().dot(&av))
                    } else {
                        (g2.dot(&bv.t()), av.t().dot(&g2))
                    };
                    acc(&mut grads, *a, ga.into_dyn());
                    acc(&mut grads, *b, gb.into_dyn());
                }
                Step::BatchMatmul { a, b, trans_b } => {
                    let av = &self.values[*a];
                    let bv = &self.values[*b];
                    let mut ga = ArrayD::<f64>::zeros(av.raw_dim());
                    let mut gb = ArrayD::<f64>::zeros(bv.raw_dim());
                    let (d0, d1) = (av.shape()[0], av.shape()[1]);
                    for i in 0..d0 {
                        for j in 0..d1 {
                            let slice2 = |t: &Tensor| {
                                t.index_axis(Axis(0), i)
                                    .index_axis(Axis(0), j)
                                    .into_dimensionality::<Ix2>()
                                    .unwrap()
                                    .to_owned()
                            };
                            let gij = slice2(&g);
                            let aij = slice2(av);
                            let bij = slice2(bv);
                            let (gaij, gbij) = if *trans_b {
                                (gij.dot(&bij), gij.t().dot(&aij))
                            } else {
                                (gij.dot(&bij.t()), aij.t().dot(&gij))
                            };
                            ga.index_axis_mut(Axis(0), i)
                                .index_axis_mut(Axis(0), j)
                                .assign(&gaij);
                            gb.index_axis_mut(Axis(0), i)
                                .index_axis_mut(Axis(0), j)
                                .assign(&gbij);
                        }
                    }
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Step::Add { a, b } => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Step::Sub { a, b } => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, -g);
                }
                Step::Mul { a, b } => {
                    acc(&mut grads, *a, &g * &self.values[*b]);
                    acc(&mut grads, *b, &g * &self.values[*a]);
                }
                Step::AddBias { a, bias } => {
                    let bias_shape = self.values[*bias].shape().to_vec();
                    acc(&mut grads, *bias, reduce_to_shape(&g, &bias_shape));
                    acc(&mut grads, *a, g);
                }
                Step::AddConst { a } => acc(&mut grads, *a, g),
                Step::MulConst { a, c } => {
                    let shape = self.values[*a].shape().to_vec();
                    let broadcast = c.broadcast(IxDyn(&shape)).unwrap();
                    acc(&mut grads, *a, &g * &broadcast);
                }
                Step::Scale { a, factor } => acc(&mut grads, *a, &g * *factor),
                Step::Tanh { a } => {
                    let y = &self.values[idx];
                    acc(&mut grads, *a, &g * &y.mapv(|v| 1.0 - v * v));
                }
                Step::Sigmoid { a } => {
                    let y = &self.values[idx];
                    acc(&mut grads, *a, &g * &y.mapv(|v| v * (1.0 - v)));
                }
                Step::Gelu { a } => {
                    let x = &self.values[*a];
                    acc(&mut grads, *a, &g * &x.mapv(gelu_derivative));
                }
                Step::SoftmaxLast { a } => {
                    let shape = g.shape().to_vec();
                    let y2 = to_2d(&self.values[idx]);
                    let g2 = to_2d(&g);
                    let mut out = Array2::<f64>::zeros(y2.raw_dim());
                    for ((yrow, grow), mut orow) in
                        y2.rows().into_iter().zip(g2.rows()).zip(out.rows_mut())
                    {
                        let dot: f64 = yrow.iter().zip(grow.iter()).map(|(y, g)| y * g).sum();
                        for ((o, &y), &gv) in orow.iter_mut().zip(yrow.iter()).zip(grow.iter()) {
                            *o = y * (gv - dot);
                        }
                    }
                    acc(&mut grads, *a, reshape_dyn(&out.into_dyn(), &shape));
                }
                Step::LayerNorm { a, gain, bias, eps } => {
                    let shape = g.shape().to_vec();
                    let x2 = to_2d(&self.values[*a]);
                    let g2 = to_2d(&g);
                    let gv = self.values[*gain]
                        .view()
                        .into_dimensionality::<ndarray::Ix1>()
                        .unwrap()
                        .to_owned();
                    let n = x2.ncols() as f64;
                    let mut gx = Array2::<f64>::zeros(x2.raw_dim());
                    let mut ggain = Array1::<f64>::zeros(x2.ncols());
                    let mut gbias = Array1::<f64>::zeros(x2.ncols());
                    for ((xrow, grow), mut gxrow) in
                        x2.rows().into_iter().zip(g2.rows()).zip(gx.rows_mut())
                    {
                        let mean = xrow.sum() / n;
                        let var = xrow.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                        let inv = 1.0 / (var + eps).sqrt();
                        let xhat: Vec<f64> = xrow.iter().map(|v| (v - mean) * inv).collect();
                        let dxhat: Vec<f64> =
                            grow.iter().zip(gv.iter()).map(|(g, w)| g * w).collect();
                        let mean_dxhat = dxhat.iter().sum::<f64>() / n;
                        let mean_dxhat_xhat =
                            dxhat.iter().zip(&xhat).map(|(d, x)| d * x).sum::<f64>() / n;
                        for (k, gxv) in gxrow.iter_mut().enumerate() {
                            *gxv = inv * (dxhat[k] - mean_dxhat - xhat[k] * mean_dxhat_xhat);
                        }
                        for (k, (&grad, &xh)) in grow.iter().zip(&xhat).enumerate() {
                            ggain[k] += grad * xh;
                            gbias[k] += grad;
                        }
                    }
                    acc(&mut grads, *a, reshape_dyn(&gx.into_dyn(), &shape));
                    acc(&mut grads, *gain, ggain.into_dyn());
                    acc(&mut grads, *bias, gbias.into_dyn());
                }
                Step::Embedding { table, ids } => {
                    let mut gt = ArrayD::<f64>::zeros(self.values[*table].raw_dim());
                    let (b, s) = ids.dim();
                    for i in 0..b {
                        for j in 0..s {
                            let grow = g.index_axis(Axis(0), i);
                            let grow = grow.index_axis(Axis(0), j);
                            let mut trow = gt.index_axis_mut(Axis(0), ids[[i, j]]);
                            trow += &grow;
                        }
                    }
                    acc(&mut grads, *table, gt);
                }
                Step::SelectAt { a, t } => {
                    let mut ga = ArrayD::<f64>::zeros(self.values[*a].raw_dim());
                    ga.index_axis_mut(Axis(1), *t).assign(&g);
                    acc(&mut grads, *a, ga);
                }
                Step::NarrowLast { a, start, len } => {
                    let mut ga = ArrayD::<f64>::zeros(self.values[*a].raw_dim());
                    let last = ga.ndim() - 1;
                    ga.slice_axis_mut(Axis(last), Slice::from(*start..*start + *len))
                        .assign(&g);
                    acc(&mut grads, *a, ga);
                }
                Step::ConcatLast { a, b } => {
                    let last = g.ndim() - 1;
                    let split = *self.values[*a].shape().last().unwrap();
                    let total = g.shape()[last];
                    let ga = g.slice_axis(Axis(last), Slice::from(0..split)).to_owned();
                    let gb = g
                        .slice_axis(Axis(last), Slice::from(split..total))
                        .to_owned();
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Step::Reshape { a } => {
                    let shape = self.values[*a].shape().to_vec();
                    acc(&mut grads, *a, reshape_dyn(&g, &shape));
                }
                Step::Permute { a, axes } => {
                    let mut inverse = vec![0usize; axes.len()];
                    for (i, &ax) in axes.iter().enumerate() {
                        inverse[ax] = i;
                    }
                    let ga = g
                        .view()
                        .permuted_axes(IxDyn(&inverse))
                        .as_standard_layout()
                        .to_owned();
                    acc(&mut grads, *a, ga);
                }
                Step::WeightedSum { a, weights } => {
                    let scale = *g.iter().next().unwrap();
                    acc(&mut grads, *a, weights * scale);
                }
                Step::CrossEntropy { logits, labels } => {
                    let scale = *g.iter().next().unwrap() / labels.len() as f64;
                    let x = view_2d(&self.values[*logits]);
                    let mut gx = softmax_rows(&x);
                    for (mut row, &label) in gx.rows_mut().into_iter().zip(labels) {
                        row[label] -= 1.0;
                    }
                    gx *= scale;
                    acc(&mut grads, *logits, gx.into_dyn());
                }
            }
        }
        Grads { grads }
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

fn acc(grads: &mut [Option<Tensor>], idx: usize, delta: Tensor) {
    match &mut grads[idx] {
        Some(existing) => *existing += &delta,
        slot => *slot = Some(delta),
    }
}

const GELU_COEF: f64 = 0.044715;

fn gelu_value(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    0.5 * x * (1.0 + (c * (x + GELU_COEF * x.powi(3))).tanh())
}

fn gelu_derivative(x: f64) -> f64 {
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let u = c * (x + GELU_COEF * x.powi(3));
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * GELU_COEF * x * x)
}
