//! Tape-based reverse-mode differentiation.
//!
//! A `Graph` records one forward pass; `backward` runs the chain rule over
//! the recorded nodes in reverse and populates gradients for every node that
//! (transitively) depends on a gradient-tracked leaf. The graph is dropped
//! after each training step; calling `backward` twice is an error.
//!
//! Every op validates its output for NaN/Inf so numerical corruption fails
//! loudly at the op that produced it.

use crate::error::{Error, Result};
use crate::nn::conv;
use crate::nn::tensor::Tensor;

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Per-channel batch statistics returned by training-mode batch norm, used
/// by the caller to update running statistics.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Ln(Var),
    Abs(Var),
    Clamp { x: Var, lo: f64, hi: f64 },
    Relu(Var),
    LeakyRelu { x: Var, alpha: f64 },
    Tanh(Var),
    Sigmoid(Var),
    Linear { x: Var, w: Var, b: Var },
    Conv3d { x: Var, w: Var, b: Var, stride: usize, pad: usize },
    ConvT3d { x: Var, w: Var, b: Var, stride: usize, pad: usize },
    BatchNorm { x: Var, gamma: Var, beta: Var, eps: f64, mean: Vec<f64>, var: Vec<f64>, train: bool },
    Reshape(Var),
    Concat { a: Var, b: Var },
    Mean(Var),
    Sum(Var),
}

struct Node {
    value: Tensor,
    grad: Option<Tensor>,
    needs_grad: bool,
    op: Op,
}

/// One recorded forward pass.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
    backward_done: bool,
}

impl Graph {
    pub fn new() -> Graph {
        Graph {
            nodes: Vec::new(),
            backward_done: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Insert a leaf value. Gradients accumulate on it only when
    /// `needs_grad` is set.
    pub fn leaf(&mut self, value: Tensor, needs_grad: bool) -> Var {
        self.push(value, needs_grad, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn grad(&self, v: Var) -> Option<&Tensor> {
        self.nodes[v.0].grad.as_ref()
    }

    fn push(&mut self, value: Tensor, needs_grad: bool, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            needs_grad,
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn record(&mut self, value: Tensor, needs_grad: bool, op: Op, what: &str) -> Result<Var> {
        value.assert_finite(what)?;
        Ok(self.push(value, needs_grad, op))
    }

    fn binary_elementwise(
        &mut self,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
        what: &str,
    ) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape() != tb.shape() {
            return Err(Error::ShapeMismatch(format!(
                "{}: {:?} vs {:?}",
                what,
                ta.shape(),
                tb.shape()
            )));
        }
        let data = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| f(*x, *y))
            .collect();
        let value = Tensor::from_vec(ta.shape(), data)?;
        self.record(value, self.needs(a) || self.needs(b), op, what)
    }

    fn unary_elementwise(
        &mut self,
        x: Var,
        f: impl Fn(f64) -> f64,
        op: Op,
        what: &str,
    ) -> Result<Var> {
        let t = &self.nodes[x.0].value;
        let value = Tensor::from_vec(t.shape(), t.data().iter().map(|v| f(*v)).collect())?;
        self.record(value, self.needs(x), op, what)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_elementwise(a, b, |x, y| x + y, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_elementwise(a, b, |x, y| x - y, Op::Sub(a, b), "sub")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary_elementwise(a, b, |x, y| x * y, Op::Mul(a, b), "mul")
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Result<Var> {
        self.unary_elementwise(x, |v| v * c, Op::Scale(x, c), "scale")
    }

    pub fn add_scalar(&mut self, x: Var, c: f64) -> Result<Var> {
        self.unary_elementwise(x, |v| v + c, Op::AddScalar(x), "add_scalar")
    }

    pub fn ln(&mut self, x: Var) -> Result<Var> {
        self.unary_elementwise(x, f64::ln, Op::Ln(x), "ln")
    }

    pub fn abs(&mut self, x: Var) -> Result<Var> {
        self.unary_elementwise(x, f64::abs, Op::Abs(x), "abs")
    }

    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        self.unary_elementwise(x, |v| v.clamp(lo, hi), Op::Clamp { x, lo, hi }, "clamp")
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary_elementwise(x, |v| v.max(0.0), Op::Relu(x), "relu")
    }

    /// max(x, alpha*x) with 0 < alpha < 1.
    pub fn leaky_relu(&mut self, x: Var, alpha: f64) -> Result<Var> {
        self.unary_elementwise(
            x,
            |v| if v >= 0.0 { v } else { alpha * v },
            Op::LeakyRelu { x, alpha },
            "leaky_relu",
        )
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary_elementwise(x, f64::tanh, Op::Tanh(x), "tanh")
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary_elementwise(
            x,
            |v| 1.0 / (1.0 + (-v).exp()),
            Op::Sigmoid(x),
            "sigmoid",
        )
    }

    /// x [n, in] * w [out, in] + b [out] -> [n, out]
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xt, wt, bt) = (
            &self.nodes[x.0].value,
            &self.nodes[w.0].value,
            &self.nodes[b.0].value,
        );
        if xt.shape().len() != 2 || wt.shape().len() != 2 || xt.shape()[1] != wt.shape()[1] {
            return Err(Error::ShapeMismatch(format!(
                "linear: x {:?} w {:?}",
                xt.shape(),
                wt.shape()
            )));
        }
        let (n, in_f) = (xt.shape()[0], xt.shape()[1]);
        let out_f = wt.shape()[0];
        if bt.shape() != [out_f] {
            return Err(Error::ShapeMismatch(format!(
                "linear bias {:?}, expected [{}]",
                bt.shape(),
                out_f
            )));
        }
        let mut out = Tensor::zeros(&[n, out_f]);
        for ni in 0..n {
            let x_row = &xt.data()[ni * in_f..(ni + 1) * in_f];
            for o in 0..out_f {
                let w_row = &wt.data()[o * in_f..(o + 1) * in_f];
                let mut acc = bt.data()[o];
                for (xv, wv) in x_row.iter().zip(w_row) {
                    acc += xv * wv;
                }
                out.data_mut()[ni * out_f + o] = acc;
            }
        }
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        self.record(out, needs, Op::Linear { x, w, b }, "linear")
    }

    pub fn conv3d(&mut self, x: Var, w: Var, b: Var, stride: usize, pad: usize) -> Result<Var> {
        let out = conv::conv3d_forward(
            &self.nodes[x.0].value,
            &self.nodes[w.0].value,
            Some(&self.nodes[b.0].value),
            stride,
            pad,
        )?;
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        self.record(out, needs, Op::Conv3d { x, w, b, stride, pad }, "conv3d")
    }

    pub fn convt3d(
        &mut self,
        x: Var,
        w: Var,
        b: Var,
        stride: usize,
        pad: usize,
        output_padding: usize,
    ) -> Result<Var> {
        let out = conv::convt3d_forward(
            &self.nodes[x.0].value,
            &self.nodes[w.0].value,
            Some(&self.nodes[b.0].value),
            stride,
            pad,
            output_padding,
        )?;
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        self.record(
            out,
            needs,
            Op::ConvT3d { x, w, b, stride, pad },
            "convt3d",
        )
    }

    /// Training-mode batch normalization over channel axis 1 of an
    /// [n, c, d, h, w] tensor. Returns the output and the batch statistics
    /// so the caller can update running stats.
    pub fn batchnorm_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    ) -> Result<(Var, BatchStats)> {
        let (mean, var) = {
            let xt = &self.nodes[x.0].value;
            let (c, m) = bn_layout(xt)?;
            if m < 2 {
                return Err(Error::InvalidConfig(format!(
                    "batch norm in train mode needs at least 2 values per channel, got {}",
                    m
                )));
            }
            bn_batch_stats(xt, c)
        };
        let out = self.batchnorm_apply(x, gamma, beta, eps, &mean, &var, true)?;
        Ok((
            out,
            BatchStats {
                mean,
                var,
            },
        ))
    }

    /// Eval-mode batch normalization with fixed (running) statistics.
    pub fn batchnorm_eval(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
        running_mean: &[f64],
        running_var: &[f64],
    ) -> Result<Var> {
        self.batchnorm_apply(
            x,
            gamma,
            beta,
            eps,
            running_mean,
            running_var,
            false,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn batchnorm_apply(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
        mean: &[f64],
        var: &[f64],
        train: bool,
    ) -> Result<Var> {
        let out = {
            let xt = &self.nodes[x.0].value;
            let (c, _) = bn_layout(xt)?;
            let gt = &self.nodes[gamma.0].value;
            let bt = &self.nodes[beta.0].value;
            if gt.shape() != [c] || bt.shape() != [c] || mean.len() != c || var.len() != c {
                return Err(Error::ShapeMismatch(format!(
                    "batch norm params for {} channels: gamma {:?} beta {:?}",
                    c,
                    gt.shape(),
                    bt.shape()
                )));
            }
            if var.iter().any(|v| *v < 0.0) {
                return Err(Error::InvalidConfig("negative variance".into()));
            }
            let mut out = Tensor::zeros(xt.shape());
            bn_for_each_channel(xt.shape(), |ch, range_iter| {
                let inv_std = 1.0 / (var[ch] + eps).sqrt();
                let (g, b) = (gt.data()[ch], bt.data()[ch]);
                for i in range_iter {
                    out.data_mut()[i] = (xt.data()[i] - mean[ch]) * inv_std * g + b;
                }
            });
            out
        };
        let needs = self.needs(x) || self.needs(gamma) || self.needs(beta);
        self.record(
            out,
            needs,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                eps,
                mean: mean.to_vec(),
                var: var.to_vec(),
                train,
            },
            "batchnorm",
        )
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.nodes[x.0].value.reshaped(shape)?;
        let needs = self.needs(x);
        self.record(value, needs, Op::Reshape(x), "reshape")
    }

    /// Concatenate along the channel axis (axis 1) of 5-D tensors.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let (sa, sb) = (ta.shape(), tb.shape());
        if sa.len() != 5
            || sb.len() != 5
            || sa[0] != sb[0]
            || sa[2..] != sb[2..]
        {
            return Err(Error::ShapeMismatch(format!(
                "concat: {:?} vs {:?}",
                sa, sb
            )));
        }
        let (n, ca, cb) = (sa[0], sa[1], sb[1]);
        let slab: usize = sa[2..].iter().product();
        let mut out = Tensor::zeros(&[n, ca + cb, sa[2], sa[3], sa[4]]);
        for ni in 0..n {
            let dst = ni * (ca + cb) * slab;
            out.data_mut()[dst..dst + ca * slab]
                .copy_from_slice(&ta.data()[ni * ca * slab..(ni + 1) * ca * slab]);
            out.data_mut()[dst + ca * slab..dst + (ca + cb) * slab]
                .copy_from_slice(&tb.data()[ni * cb * slab..(ni + 1) * cb * slab]);
        }
        let needs = self.needs(a) || self.needs(b);
        self.record(out, needs, Op::Concat { a, b }, "concat")
    }

    /// Mean over all elements, scalar output.
    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let t = &self.nodes[x.0].value;
        let value = Tensor::scalar(t.data().iter().sum::<f64>() / t.len() as f64);
        self.record(value, self.needs(x), Op::Mean(x), "mean")
    }

    /// Sum over all elements, scalar output.
    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let t = &self.nodes[x.0].value;
        let value = Tensor::scalar(t.data().iter().sum());
        self.record(value, self.needs(x), Op::Sum(x), "sum")
    }

    /// Run reverse-mode accumulation from a scalar loss.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.backward_done {
            return Err(Error::GraphReuse);
        }
        self.backward_done = true;
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].value.shape()
            )));
        }
        if !self.nodes[loss.0].needs_grad {
            return Ok(()); // nothing tracks gradients
        }
        self.nodes[loss.0].grad = Some(Tensor::scalar(1.0));

        for i in (0..self.nodes.len()).rev() {
            if self.nodes[i].grad.is_none() || !self.nodes[i].needs_grad {
                continue;
            }
            let op = self.nodes[i].op.clone();
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &mut rest[0];
            let g = node.grad.as_ref().unwrap();
            let out_value = &node.value;
            backprop(op, g, out_value, before)?;
        }
        Ok(())
    }
}

/// (channels, values per channel) of a batch-norm input.
fn bn_layout(x: &Tensor) -> Result<(usize, usize)> {
    let s = x.shape();
    if s.len() != 5 {
        return Err(Error::ShapeMismatch(format!(
            "batch norm expects [n, c, d, h, w], got {:?}",
            s
        )));
    }
    let c = s[1];
    let m = s[0] * s[2] * s[3] * s[4];
    Ok((c, m))
}

fn bn_for_each_channel(shape: &[usize], mut f: impl FnMut(usize, Box<dyn Iterator<Item = usize>>)) {
    let (n, c) = (shape[0], shape[1]);
    let slab: usize = shape[2..].iter().product();
    for ch in 0..c {
        let iter = (0..n).flat_map(move |ni| {
            let base = (ni * c + ch) * slab;
            base..base + slab
        });
        f(ch, Box::new(iter));
    }
}

fn bn_batch_stats(x: &Tensor, c: usize) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    let m = x.len() / c;
    bn_for_each_channel(x.shape(), |ch, iter| {
        let mut acc = 0.0;
        for i in iter {
            acc += x.data()[i];
        }
        mean[ch] = acc / m as f64;
    });
    bn_for_each_channel(x.shape(), |ch, iter| {
        let mu = mean[ch];
        let mut acc = 0.0;
        for i in iter {
            let d = x.data()[i] - mu;
            acc += d * d;
        }
        var[ch] = acc / m as f64; // biased, like the normalization itself
    });
    (mean, var)
}

fn accumulate(nodes: &mut [Node], v: Var, delta: Tensor) {
    let node = &mut nodes[v.0];
    if !node.needs_grad {
        return;
    }
    match &mut node.grad {
        Some(g) => {
            for (a, b) in g.data_mut().iter_mut().zip(delta.data()) {
                *a += b;
            }
        }
        None => node.grad = Some(delta),
    }
}

fn unary_chain(nodes: &mut [Node], x: Var, g: &Tensor, f: impl Fn(f64, f64) -> f64) {
    // f(input_value, upstream_grad) -> input grad contribution
    let data: Vec<f64> = nodes[x.0]
        .value
        .data()
        .iter()
        .zip(g.data())
        .map(|(xv, gv)| f(*xv, *gv))
        .collect();
    let delta = Tensor::from_vec(nodes[x.0].value.shape(), data).unwrap();
    accumulate(nodes, x, delta);
}

fn backprop(op: Op, g: &Tensor, out_value: &Tensor, nodes: &mut [Node]) -> Result<()> {
    match op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            accumulate(nodes, a, g.clone());
            accumulate(nodes, b, g.clone());
        }
        Op::Sub(a, b) => {
            accumulate(nodes, a, g.clone());
            let neg = Tensor::from_vec(g.shape(), g.data().iter().map(|v| -v).collect())?;
            accumulate(nodes, b, neg);
        }
        Op::Mul(a, b) => {
            let ga = Tensor::from_vec(
                g.shape(),
                g.data()
                    .iter()
                    .zip(nodes[b.0].value.data())
                    .map(|(gv, bv)| gv * bv)
                    .collect(),
            )?;
            let gb = Tensor::from_vec(
                g.shape(),
                g.data()
                    .iter()
                    .zip(nodes[a.0].value.data())
                    .map(|(gv, av)| gv * av)
                    .collect(),
            )?;
            accumulate(nodes, a, ga);
            accumulate(nodes, b, gb);
        }
        Op::Scale(x, c) => unary_chain(nodes, x, g, |_, gv| gv * c),
        Op::AddScalar(x) => unary_chain(nodes, x, g, |_, gv| gv),
        Op::Ln(x) => unary_chain(nodes, x, g, |xv, gv| gv / xv),
        Op::Abs(x) => unary_chain(nodes, x, g, |xv, gv| {
            if xv >= 0.0 {
                gv
            } else {
                -gv
            }
        }),
        Op::Clamp { x, lo, hi } => unary_chain(nodes, x, g, |xv, gv| {
            if xv > lo && xv < hi {
                gv
            } else {
                0.0
            }
        }),
        Op::Relu(x) => unary_chain(nodes, x, g, |xv, gv| if xv > 0.0 { gv } else { 0.0 }),
        Op::LeakyRelu { x, alpha } => unary_chain(nodes, x, g, |xv, gv| {
            if xv >= 0.0 {
                gv
            } else {
                alpha * gv
            }
        }),
        Op::Tanh(x) => {
            let data: Vec<f64> = out_value
                .data()
                .iter()
                .zip(g.data())
                .map(|(y, gv)| gv * (1.0 - y * y))
                .collect();
            let delta = Tensor::from_vec(g.shape(), data)?;
            accumulate(nodes, x, delta);
        }
        Op::Sigmoid(x) => {
            let data: Vec<f64> = out_value
                .data()
                .iter()
                .zip(g.data())
                .map(|(y, gv)| gv * y * (1.0 - y))
                .collect();
            let delta = Tensor::from_vec(g.shape(), data)?;
            accumulate(nodes, x, delta);
        }
        Op::Linear { x, w, b } => {
            let (gx, gw, gb) = {
                let xt = &nodes[x.0].value;
                let wt = &nodes[w.0].value;
                let (n, in_f) = (xt.shape()[0], xt.shape()[1]);
                let out_f = wt.shape()[0];
                let gx = nodes[x.0].needs_grad.then(|| {
                    let mut gx = Tensor::zeros(&[n, in_f]);
                    for ni in 0..n {
                        for o in 0..out_f {
                            let gv = g.data()[ni * out_f + o];
                            let w_row = &wt.data()[o * in_f..(o + 1) * in_f];
                            let gx_row = &mut gx.data_mut()[ni * in_f..(ni + 1) * in_f];
                            for (gxv, wv) in gx_row.iter_mut().zip(w_row) {
                                *gxv += gv * wv;
                            }
                        }
                    }
                    gx
                });
                let gw = nodes[w.0].needs_grad.then(|| {
                    let mut gw = Tensor::zeros(&[out_f, in_f]);
                    for ni in 0..n {
                        let x_row = &xt.data()[ni * in_f..(ni + 1) * in_f];
                        for o in 0..out_f {
                            let gv = g.data()[ni * out_f + o];
                            let gw_row = &mut gw.data_mut()[o * in_f..(o + 1) * in_f];
                            for (gwv, xv) in gw_row.iter_mut().zip(x_row) {
                                *gwv += gv * xv;
                            }
                        }
                    }
                    gw
                });
                let gb = nodes[b.0].needs_grad.then(|| {
                    let mut gb = Tensor::zeros(&[out_f]);
                    for ni in 0..n {
                        for o in 0..out_f {
                            gb.data_mut()[o] += g.data()[ni * out_f + o];
                        }
                    }
                    gb
                });
                (gx, gw, gb)
            };
            if let Some(gx) = gx {
                accumulate(nodes, x, gx);
            }
            if let Some(gw) = gw {
                accumulate(nodes, w, gw);
            }
            if let Some(gb) = gb {
                accumulate(nodes, b, gb);
            }
        }
        Op::Conv3d { x, w, b, stride, pad } => {
            let in_sp = {
                let s = nodes[x.0].value.shape();
                [s[2], s[3], s[4]]
            };
            let k = nodes[w.0].value.shape()[2];
            if nodes[x.0].needs_grad {
                let gx = conv::conv3d_grad_input(g, &nodes[w.0].value, stride, pad, in_sp)?;
                accumulate(nodes, x, gx);
            }
            if nodes[w.0].needs_grad {
                let gw = conv::conv3d_grad_weight(g, &nodes[x.0].value, stride, pad, k)?;
                accumulate(nodes, w, gw);
            }
            if nodes[b.0].needs_grad {
                accumulate(nodes, b, conv::channel_sums(g)?);
            }
        }
        Op::ConvT3d { x, w, b, stride, pad } => {
            let in_sp = {
                let s = nodes[x.0].value.shape();
                [s[2], s[3], s[4]]
            };
            let k = nodes[w.0].value.shape()[2];
            if nodes[x.0].needs_grad {
                let gx = conv::convt3d_grad_input(g, &nodes[w.0].value, stride, pad, in_sp)?;
                accumulate(nodes, x, gx);
            }
            if nodes[w.0].needs_grad {
                let gw = conv::convt3d_grad_weight(g, &nodes[x.0].value, stride, pad, k)?;
                accumulate(nodes, w, gw);
            }
            if nodes[b.0].needs_grad {
                accumulate(nodes, b, conv::channel_sums(g)?);
            }
        }
        Op::BatchNorm {
            x,
            gamma,
            beta,
            eps,
            mean,
            var,
            train,
        } => {
            let xt = &nodes[x.0].value;
            let shape = xt.shape().to_vec();
            let c = shape[1];
            let m = (xt.len() / c) as f64;
            let gammas = nodes[gamma.0].value.data().to_vec();

            // per-channel reductions of the upstream gradient
            let mut sum_g = vec![0.0; c];
            let mut sum_g_xhat = vec![0.0; c];
            bn_for_each_channel(&shape, |ch, iter| {
                let inv_std = 1.0 / (var[ch] + eps).sqrt();
                for i in iter {
                    let xhat = (xt.data()[i] - mean[ch]) * inv_std;
                    sum_g[ch] += g.data()[i];
                    sum_g_xhat[ch] += g.data()[i] * xhat;
                }
            });

            if nodes[x.0].needs_grad {
                let mut gx = Tensor::zeros(&shape);
                bn_for_each_channel(&shape, |ch, iter| {
                    let inv_std = 1.0 / (var[ch] + eps).sqrt();
                    let gam = gammas[ch];
                    for i in iter {
                        let xhat = (xt.data()[i] - mean[ch]) * inv_std;
                        let gi = if train {
                            // batch statistics depend on x
                            gam * inv_std
                                * (g.data()[i]
                                    - sum_g[ch] / m
                                    - xhat * sum_g_xhat[ch] / m)
                        } else {
                            gam * inv_std * g.data()[i]
                        };
                        gx.data_mut()[i] = gi;
                    }
                });
                accumulate(nodes, x, gx);
            }
            if nodes[gamma.0].needs_grad {
                accumulate(nodes, gamma, Tensor::from_vec(&[c], sum_g_xhat)?);
            }
            if nodes[beta.0].needs_grad {
                accumulate(nodes, beta, Tensor::from_vec(&[c], sum_g)?);
            }
        }
        Op::Reshape(x) => {
            let delta = g.reshaped(nodes[x.0].value.shape())?;
            accumulate(nodes, x, delta);
        }
        Op::Concat { a, b } => {
            let (sa, sb) = (
                nodes[a.0].value.shape().to_vec(),
                nodes[b.0].value.shape().to_vec(),
            );
            let (n, ca, cb) = (sa[0], sa[1], sb[1]);
            let slab: usize = sa[2..].iter().product();
            let mut ga = Tensor::zeros(&sa);
            let mut gb = Tensor::zeros(&sb);
            for ni in 0..n {
                let src = ni * (ca + cb) * slab;
                ga.data_mut()[ni * ca * slab..(ni + 1) * ca * slab]
                    .copy_from_slice(&g.data()[src..src + ca * slab]);
                gb.data_mut()[ni * cb * slab..(ni + 1) * cb * slab]
                    .copy_from_slice(&g.data()[src + ca * slab..src + (ca + cb) * slab]);
            }
            accumulate(nodes, a, ga);
            accumulate(nodes, b, gb);
        }
        Op::Mean(x) => {
            let n = nodes[x.0].value.len() as f64;
            let gv = g.item() / n;
            let delta = Tensor::full(nodes[x.0].value.shape(), gv);
            accumulate(nodes, x, delta);
        }
        Op::Sum(x) => {
            let delta = Tensor::full(nodes[x.0].value.shape(), g.item());
            accumulate(nodes, x, delta);
        }
    }
    Ok(())
}
