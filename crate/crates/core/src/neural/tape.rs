//! Reverse-mode differentiation over matrix-valued operations.
//!
//! A [`Tape`] records every operation of a forward pass as a node holding its
//! output value. [`Tape::backward`] walks the nodes in reverse and returns the
//! adjoint of every node; [`Gradients::param_grads`] then folds the adjoints
//! of parameter leaves into per-parameter gradients.
//!
//! Besides the generic operations (matmul, bias, activations, concatenation)
//! the tape knows a handful of fused graph and image operations whose
//! adjoints are written out by hand: attention aggregation, normalized
//! propagation, pixel gather, 3x3 windowing, min-max scaling and softmax
//! cross-entropy.

use std::rc::Rc;

use super::activation::{leaky_relu, leaky_relu_derivative, Activation};
use super::graph::Adjacency;
use super::matrix::Matrix;
use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Activate(Var, Activation),
    HCat(Vec<Var>),
    Mean(Vec<Var>),
    Attention(AttentionCache),
    Propagate {
        x: Var,
        adj: Rc<Adjacency>,
        weights: Rc<Vec<Vec<f64>>>,
    },
    Gather {
        x: Var,
        index: Rc<Vec<usize>>,
    },
    MinMax {
        x: Var,
        argmin: usize,
        argmax: usize,
        range: f64,
    },
    Window3 {
        x: Var,
        width: usize,
        height: usize,
    },
    CrossEntropy {
        logits: Var,
        targets: Rc<Vec<usize>>,
        probs: Matrix,
    },
    WeightedSum {
        x: Var,
        weights: Matrix,
    },
}

#[derive(Debug)]
struct AttentionCache {
    r: Var,
    a: Var,
    adj: Rc<Adjacency>,
    /// Softmax weights, parallel to the flattened closed neighbourhoods.
    theta: Vec<f64>,
    /// Pre-LeakyReLU logits, same layout as `theta`.
    pre: Vec<f64>,
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
    scope: Rc<str>,
}

#[derive(Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    scope: Rc<str>,
}

impl Default for Tape {
    fn default() -> Self {
        Tape {
            nodes: Vec::new(),
            scope: Rc::from("root"),
        }
    }
}

fn shape_err(ctx: &str, a: &Matrix, b: &Matrix) -> Error {
    Error::shape(
        ctx,
        format!("{}x{} vs {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
    )
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Label subsequent nodes; used in diagnostics for non-finite values.
    pub fn set_scope(&mut self, scope: &str) {
        self.scope = Rc::from(scope);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn scope_of(&self, v: Var) -> &str {
        &self.nodes[v.0].scope
    }

    /// Smallest distance of any recorded value from a point where the graph
    /// is not twice differentiable: ReLU, leaky ReLU and ELU inputs at zero,
    /// attention logits at zero, and ties for the extremes of a min-max
    /// scaling. Central differences lose their second-order accuracy when
    /// the perturbation reaches past this margin. `INFINITY` when nothing is
    /// kinked.
    pub fn kink_margin(&self) -> f64 {
        let abs_min = |values: &[f64]| values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let mut margin = f64::INFINITY;
        for node in &self.nodes {
            let m = match &node.op {
                Op::Activate(x, Activation::Relu | Activation::LeakyRelu | Activation::Elu) => abs_min(self.value(*x).as_slice()),
                Op::Attention(c) => abs_min(&c.pre),
                Op::MinMax { x, argmin, argmax, .. } => {
                    let data = self.value(*x).as_slice();
                    // Exact copies of an extreme (as produced by a gather)
                    // move with it, so only distinct values count.
                    let (lo, hi) = (data[*argmin], data[*argmax]);
                    let mut gap = f64::INFINITY;
                    for &v in data {
                        if v != lo {
                            gap = gap.min(v - lo);
                        }
                        if v != hi {
                            gap = gap.min(hi - v);
                        }
                    }
                    gap
                }
                _ => f64::INFINITY,
            };
            margin = margin.min(m);
        }
        margin
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node {
            value,
            op,
            scope: self.scope.clone(),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant)
    }

    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> Var {
        self.push(store.get(id).clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    /// `x + 1·bᵀ`: adds a `1 x c` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(shape_err("add_row", xv, bv));
        }
        let mut out = xv.clone();
        let b = bv.row(0);
        for i in 0..out.rows() {
            for (o, bj) in out.row_mut(i).iter_mut().zip(b) {
                *o += bj;
            }
        }
        Ok(self.push(out, Op::AddRow(x, bias)))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).add(self.value(b))?;
        Ok(self.push(value, Op::Add(a, b)))
    }

    pub fn activate(&mut self, x: Var, act: Activation) -> Var {
        if act == Activation::Identity {
            return x;
        }
        let value = self.value(x).map(|v| act.apply(v));
        self.push(value, Op::Activate(x, act))
    }

    pub fn hcat(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&Matrix> = parts.iter().map(|&p| self.value(p)).collect();
        let value = Matrix::hcat(&mats)?;
        Ok(self.push(value, Op::HCat(parts.to_vec())))
    }

    /// Element-wise mean of equally shaped inputs.
    pub fn mean(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("mean", "no inputs"))?;
        let mut acc = self.value(*first).clone();
        for &p in &parts[1..] {
            acc.add_assign(self.value(p))?;
        }
        let value = acc.scale(1.0 / parts.len() as f64);
        Ok(self.push(value, Op::Mean(parts.to_vec())))
    }

    /// Attention-weighted neighbourhood sum for one head.
    ///
    /// `r` is the `n x q` transformed feature matrix, `a` the `2q x 1`
    /// attention vector. For each node `i` the logits
    /// `LeakyReLU(cat(r_i, r_j)·a)` over `j ∈ N(i) ∪ {i}` are softmax
    /// normalized into `θ_ij` and the output row is `Σ_j θ_ij r_j`.
    pub fn attention(&mut self, r: Var, a: Var, adj: Rc<Adjacency>) -> Result<Var> {
        let rv = self.value(r);
        let av = self.value(a);
        let (n, q) = rv.shape();
        if av.shape() != (2 * q, 1) {
            return Err(Error::shape(
                "attention",
                format!("attention vector {}x{}, expected {}x1", av.rows(), av.cols(), 2 * q),
            ));
        }
        if adj.node_count() != n {
            return Err(Error::shape(
                "attention",
                format!("{} feature rows for {} nodes", n, adj.node_count()),
            ));
        }
        let (a_src, a_dst) = av.as_slice().split_at(q);
        let s: Vec<f64> = (0..n).map(|i| dot(rv.row(i), a_src)).collect();
        let t: Vec<f64> = (0..n).map(|i| dot(rv.row(i), a_dst)).collect();

        let mut theta = Vec::with_capacity(adj.entry_count());
        let mut pre = Vec::with_capacity(adj.entry_count());
        let mut out = Matrix::zeros(n, q);
        for i in 0..n {
            let nb = adj.closed(i);
            let start = theta.len();
            let mut max = f64::NEG_INFINITY;
            for &j in nb {
                let u = s[i] + t[j];
                pre.push(u);
                let e = leaky_relu(u);
                theta.push(e);
                max = max.max(e);
            }
            let mut denom = 0.0;
            for w in &mut theta[start..] {
                *w = (*w - max).exp();
                denom += *w;
            }
            for w in &mut theta[start..] {
                *w /= denom;
            }
            let orow = out.row_mut(i);
            for (k, &j) in nb.iter().enumerate() {
                let w = theta[start + k];
                for (o, rj) in orow.iter_mut().zip(rv.row(j)) {
                    *o += w * rj;
                }
            }
        }
        Ok(self.push(
            out,
            Op::Attention(AttentionCache {
                r,
                a,
                adj,
                theta,
                pre,
            }),
        ))
    }

    /// Attention coefficients recorded by an [`Tape::attention`] node, one
    /// vector per node parallel to its closed neighbourhood.
    pub fn attention_weights(&self, v: Var) -> Option<Vec<Vec<f64>>> {
        match &self.nodes[v.0].op {
            Op::Attention(c) => {
                let mut out = Vec::with_capacity(c.adj.node_count());
                let mut offset = 0;
                for i in 0..c.adj.node_count() {
                    let len = c.adj.closed(i).len();
                    out.push(c.theta[offset..offset + len].to_vec());
                    offset += len;
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// `out_i = Σ_{j ∈ N(i) ∪ {i}} w_ij x_j` with fixed weights parallel to the
    /// closed neighbourhoods.
    pub fn propagate(
        &mut self,
        x: Var,
        adj: Rc<Adjacency>,
        weights: Rc<Vec<Vec<f64>>>,
    ) -> Result<Var> {
        let xv = self.value(x);
        if xv.rows() != adj.node_count() {
            return Err(Error::shape(
                "propagate",
                format!("{} rows for {} nodes", xv.rows(), adj.node_count()),
            ));
        }
        let mut out = Matrix::zeros(xv.rows(), xv.cols());
        for i in 0..adj.node_count() {
            let orow = out.row_mut(i);
            for (&j, &w) in adj.closed(i).iter().zip(&weights[i]) {
                for (o, v) in orow.iter_mut().zip(xv.row(j)) {
                    *o += w * v;
                }
            }
        }
        Ok(self.push(out, Op::Propagate { x, adj, weights }))
    }

    /// Row gather: output row `p` is row `index[p]` of `x`.
    pub fn gather(&mut self, x: Var, index: Rc<Vec<usize>>) -> Result<Var> {
        let xv = self.value(x);
        if let Some(&bad) = index.iter().find(|&&k| k >= xv.rows()) {
            return Err(Error::shape(
                "gather",
                format!("index {bad} out of {} rows", xv.rows()),
            ));
        }
        let mut out = Matrix::zeros(index.len(), xv.cols());
        for (p, &k) in index.iter().enumerate() {
            out.row_mut(p).copy_from_slice(xv.row(k));
        }
        Ok(self.push(out, Op::Gather { x, index }))
    }

    /// Global min-max scaling to `[0, 1]`; a constant input maps to zeros.
    pub fn min_max(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let data = xv.as_slice();
        let mut argmin = 0;
        let mut argmax = 0;
        for (k, &v) in data.iter().enumerate() {
            if v < data[argmin] {
                argmin = k;
            }
            if v > data[argmax] {
                argmax = k;
            }
        }
        let (lo, hi) = if data.is_empty() {
            (0.0, 0.0)
        } else {
            (data[argmin], data[argmax])
        };
        let range = hi - lo;
        let value = if range > 0.0 {
            xv.map(|v| (v - lo) / range)
        } else {
            Matrix::zeros(xv.rows(), xv.cols())
        };
        self.push(
            value,
            Op::MinMax {
                x,
                argmin,
                argmax,
                range,
            },
        )
    }

    /// 3x3 neighbourhood windows with edge clamping.
    ///
    /// Input is `(width·height) x c` in row-major pixel order; output row `p`
    /// holds the nine window positions (row-major, `dy` then `dx`) each
    /// contributing `c` channels, for `9c` columns.
    pub fn window3(&mut self, x: Var, width: usize, height: usize) -> Result<Var> {
        let xv = self.value(x);
        if xv.rows() != width * height {
            return Err(Error::shape(
                "window3",
                format!("{} rows for a {width}x{height} image", xv.rows()),
            ));
        }
        let c = xv.cols();
        let mut out = Matrix::zeros(xv.rows(), 9 * c);
        for y in 0..height {
            for xx in 0..width {
                let orow = out.row_mut(y * width + xx);
                for (w, src) in window_sources(xx, y, width, height).into_iter().enumerate() {
                    orow[w * c..(w + 1) * c].copy_from_slice(xv.row(src));
                }
            }
        }
        Ok(self.push(out, Op::Window3 { x, width, height }))
    }

    /// Mean softmax cross-entropy of `logits` (`N x C`) against class targets.
    pub fn cross_entropy(&mut self, logits: Var, targets: Rc<Vec<usize>>) -> Result<Var> {
        let lv = self.value(logits);
        if lv.rows() != targets.len() || lv.rows() == 0 {
            return Err(Error::shape(
                "cross_entropy",
                format!("{} logit rows for {} targets", lv.rows(), targets.len()),
            ));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= lv.cols()) {
            return Err(Error::shape(
                "cross_entropy",
                format!("target class {bad} with {} logits", lv.cols()),
            ));
        }
        let mut probs = Matrix::zeros(lv.rows(), lv.cols());
        let mut loss = 0.0;
        for i in 0..lv.rows() {
            let row = lv.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for (p, &z) in probs.row_mut(i).iter_mut().zip(row) {
                *p = (z - max).exp();
                denom += *p;
            }
            for p in probs.row_mut(i) {
                *p /= denom;
            }
            loss += denom.ln() + max - row[targets[i]];
        }
        loss /= lv.rows() as f64;
        Ok(self.push(
            Matrix::filled(1, 1, loss),
            Op::CrossEntropy {
                logits,
                targets,
                probs,
            },
        ))
    }

    /// Scalar `Σ w ⊙ x`; handy as a synthetic loss in gradient checks.
    pub fn weighted_sum(&mut self, x: Var, weights: Matrix) -> Result<Var> {
        let xv = self.value(x);
        if xv.shape() != weights.shape() {
            return Err(shape_err("weighted_sum", xv, &weights));
        }
        let s = dot(xv.as_slice(), weights.as_slice());
        Ok(self.push(Matrix::filled(1, 1, s), Op::WeightedSum { x, weights }))
    }

    /// Validation pass: the first node holding a NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        for (k, node) in self.nodes.iter().enumerate() {
            if let Some((i, j)) = node.value.first_non_finite() {
                return Err(Error::NonFinite {
                    scope: node.scope.to_string(),
                    detail: format!("node {k} entry ({i},{j})"),
                });
            }
        }
        Ok(())
    }

    /// Reverse sweep from a `1 x 1` loss node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::shape(
                "backward",
                format!("loss is {}x{}, expected 1x1", lv.rows(), lv.cols()),
            ));
        }
        if !lv.get(0, 0).is_finite() {
            return Err(Error::NonFinite {
                scope: self.nodes[loss.0].scope.to_string(),
                detail: "loss".into(),
            });
        }
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        for k in (0..=loss.0).rev() {
            let Some(g) = grads[k].take() else { continue };
            let node = &self.nodes[k];
            if let Some((i, j)) = g.first_non_finite() {
                return Err(Error::NonFinite {
                    scope: node.scope.to_string(),
                    detail: format!("gradient of node {k} entry ({i},{j})"),
                });
            }
            self.propagate_adjoint(node, &g, &mut grads)?;
            grads[k] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn propagate_adjoint(
        &self,
        node: &Node,
        g: &Matrix,
        grads: &mut [Option<Matrix>],
    ) -> Result<()> {
        match &node.op {
            Op::Constant | Op::Param(_) => {}
            Op::MatMul(a, b) => {
                let av = self.value(*a);
                let bv = self.value(*b);
                accumulate(grads, *a, g.matmul_t(bv)?)?;
                accumulate(grads, *b, av.t_matmul(g)?)?;
            }
            Op::AddRow(x, bias) => {
                accumulate(grads, *x, g.clone())?;
                accumulate(grads, *bias, g.column_sums())?;
            }
            Op::Add(a, b) => {
                accumulate(grads, *a, g.clone())?;
                accumulate(grads, *b, g.clone())?;
            }
            Op::Activate(x, act) => {
                let xv = self.value(*x);
                let mut dx = g.clone();
                for ((d, &pre), &post) in dx
                    .as_mut_slice()
                    .iter_mut()
                    .zip(xv.as_slice())
                    .zip(node.value.as_slice())
                {
                    *d *= act.derivative(pre, post);
                }
                accumulate(grads, *x, dx)?;
            }
            Op::HCat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).cols();
                    accumulate(grads, p, g.column_block(offset, w))?;
                    offset += w;
                }
            }
            Op::Mean(parts) => {
                let scaled = g.scale(1.0 / parts.len() as f64);
                for &p in parts {
                    accumulate(grads, p, scaled.clone())?;
                }
            }
            Op::Attention(cache) => self.attention_adjoint(cache, g, grads)?,
            Op::Propagate { x, adj, weights } => {
                let mut dx = Matrix::zeros(g.rows(), g.cols());
                for i in 0..adj.node_count() {
                    let gi = g.row(i).to_vec();
                    for (&j, &w) in adj.closed(i).iter().zip(&weights[i]) {
                        for (d, gv) in dx.row_mut(j).iter_mut().zip(&gi) {
                            *d += w * gv;
                        }
                    }
                }
                accumulate(grads, *x, dx)?;
            }
            Op::Gather { x, index } => {
                let xv = self.value(*x);
                let mut dx = Matrix::zeros(xv.rows(), xv.cols());
                for (p, &k) in index.iter().enumerate() {
                    for (d, gv) in dx.row_mut(k).iter_mut().zip(g.row(p)) {
                        *d += gv;
                    }
                }
                accumulate(grads, *x, dx)?;
            }
            Op::MinMax {
                x,
                argmin,
                argmax,
                range,
            } => {
                let xv = self.value(*x);
                let mut dx = Matrix::zeros(xv.rows(), xv.cols());
                if *range > 0.0 {
                    // out_k = (x_k - lo) / (hi - lo)
                    let mut d_lo = 0.0;
                    let mut d_hi = 0.0;
                    for ((d, &gk), &yk) in dx
                        .as_mut_slice()
                        .iter_mut()
                        .zip(g.as_slice())
                        .zip(node.value.as_slice())
                    {
                        *d = gk / range;
                        d_lo += gk * (yk - 1.0) / range;
                        d_hi -= gk * yk / range;
                    }
                    dx.as_mut_slice()[*argmin] += d_lo;
                    dx.as_mut_slice()[*argmax] += d_hi;
                }
                accumulate(grads, *x, dx)?;
            }
            Op::Window3 { x, width, height } => {
                let xv = self.value(*x);
                let c = xv.cols();
                let mut dx = Matrix::zeros(xv.rows(), c);
                for y in 0..*height {
                    for xx in 0..*width {
                        let grow = g.row(y * width + xx);
                        for (w, src) in window_sources(xx, y, *width, *height).into_iter().enumerate()
                        {
                            for (d, gv) in dx.row_mut(src).iter_mut().zip(&grow[w * c..(w + 1) * c])
                            {
                                *d += gv;
                            }
                        }
                    }
                }
                accumulate(grads, *x, dx)?;
            }
            Op::CrossEntropy {
                logits,
                targets,
                probs,
            } => {
                let scale = g.get(0, 0) / probs.rows() as f64;
                let mut dl = probs.clone();
                for (i, &t) in targets.iter().enumerate() {
                    let row = dl.row_mut(i);
                    row[t] -= 1.0;
                    for v in row.iter_mut() {
                        *v *= scale;
                    }
                }
                accumulate(grads, *logits, dl)?;
            }
            Op::WeightedSum { x, weights } => {
                accumulate(grads, *x, weights.scale(g.get(0, 0)))?;
            }
        }
        Ok(())
    }

    fn attention_adjoint(
        &self,
        cache: &AttentionCache,
        g: &Matrix,
        grads: &mut [Option<Matrix>],
    ) -> Result<()> {
        let rv = self.value(cache.r);
        let av = self.value(cache.a);
        let (n, q) = rv.shape();
        let (a_src, a_dst) = av.as_slice().split_at(q);

        let mut dr = Matrix::zeros(n, q);
        let mut ds = vec![0.0; n];
        let mut dt = vec![0.0; n];
        let mut offset = 0;
        let mut dtheta = Vec::new();
        for i in 0..n {
            let nb = cache.adj.closed(i);
            let gi = g.row(i);
            let theta = &cache.theta[offset..offset + nb.len()];
            let pre = &cache.pre[offset..offset + nb.len()];
            dtheta.clear();
            for (&j, &w) in nb.iter().zip(theta) {
                dtheta.push(dot(gi, rv.row(j)));
                for (d, gv) in dr.row_mut(j).iter_mut().zip(gi) {
                    *d += w * gv;
                }
            }
            let mean: f64 = theta.iter().zip(&dtheta).map(|(w, d)| w * d).sum();
            for (k, &j) in nb.iter().enumerate() {
                let de = theta[k] * (dtheta[k] - mean);
                let du = de * leaky_relu_derivative(pre[k]);
                ds[i] += du;
                dt[j] += du;
            }
            offset += nb.len();
        }

        let mut da = Matrix::zeros(2 * q, 1);
        for i in 0..n {
            let ri = rv.row(i);
            {
                let drow = dr.row_mut(i);
                for (c, d) in drow.iter_mut().enumerate() {
                    *d += ds[i] * a_src[c] + dt[i] * a_dst[c];
                }
            }
            let da_slice = da.as_mut_slice();
            for c in 0..q {
                da_slice[c] += ds[i] * ri[c];
                da_slice[q + c] += dt[i] * ri[c];
            }
        }
        accumulate(grads, cache.r, dr)?;
        accumulate(grads, cache.a, da)?;
        Ok(())
    }
}

/// Pixel indices feeding the 3x3 window centred on `(x, y)`, clamped at the
/// borders.
fn window_sources(x: usize, y: usize, width: usize, height: usize) -> [usize; 9] {
    let mut out = [0; 9];
    let mut k = 0;
    for dy in -1i64..=1 {
        let yy = (y as i64 + dy).clamp(0, height as i64 - 1) as usize;
        for dx in -1i64..=1 {
            let xx = (x as i64 + dx).clamp(0, width as i64 - 1) as usize;
            out[k] = yy * width + xx;
            k += 1;
        }
    }
    out
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) -> Result<()> {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

/// Adjoints of every node from one backward sweep.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn of(&self, v: Var) -> Option<&Matrix> {
        self.grads[v.0].as_ref()
    }

    /// Per-parameter gradients indexed by [`ParamId`]; parameters that did
    /// not take part in the pass get zeros.
    pub fn param_grads(&self, tape: &Tape, store: &ParamStore) -> ParamGrads {
        let mut out: Vec<Matrix> = store
            .entries()
            .iter()
            .map(|e| Matrix::zeros(e.value.rows(), e.value.cols()))
            .collect();
        for (node, g) in tape.nodes.iter().zip(&self.grads) {
            if let (Op::Param(id), Some(g)) = (&node.op, g) {
                out[id.0]
                    .add_assign(g)
                    .expect("parameter gradient shape matches its value");
            }
        }
        ParamGrads { grads: out }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    grads: Vec<Matrix>,
}

impl ParamGrads {
    pub fn zeros_like(store: &ParamStore) -> Self {
        ParamGrads {
            grads: store
                .entries()
                .iter()
                .map(|e| Matrix::zeros(e.value.rows(), e.value.cols()))
                .collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Matrix {
        &self.grads[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Matrix {
        &mut self.grads[id.0]
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Matrix)> {
        self.grads.iter().enumerate().map(|(i, g)| (ParamId(i), g))
    }

    /// Sum in gradients from another pass (e.g. another graph).
    pub fn accumulate(&mut self, other: &ParamGrads) -> Result<()> {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            a.add_assign(b)?;
        }
        Ok(())
    }
}
