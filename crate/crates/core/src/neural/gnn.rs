//! Graph layers: multi-head graph attention and symmetric-normalized graph
//! convolution.

use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::graph::Adjacency;
use super::matrix::Matrix;
use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadCombine {
    Concat,
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttentionHead {
    /// `p x q` feature transform.
    pub weight: ParamId,
    /// `2q x 1` attention vector; the first `q` entries score the centre
    /// node, the last `q` the neighbour.
    pub attention: ParamId,
}

/// Multi-head graph attention layer.
///
/// Per head: `r = H·W`, `θ_ij = softmax_{j ∈ N(i) ∪ {i}} LeakyReLU(cat(r_i, r_j)·a)`,
/// `h'_i = ELU(Σ_j θ_ij r_j)`. Heads are concatenated or averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatLayer {
    pub input: usize,
    /// Per-head output width `q`.
    pub head_width: usize,
    pub heads: Vec<AttentionHead>,
    pub combine: HeadCombine,
}

impl GatLayer {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        head_width: usize,
        heads: usize,
        combine: HeadCombine,
        rng: &mut R,
    ) -> Self {
        let heads = (0..heads)
            .map(|h| AttentionHead {
                weight: store.add_glorot(format!("{name}.head{h}.weight"), input, head_width, rng),
                attention: store.add_glorot(
                    format!("{name}.head{h}.attention"),
                    2 * head_width,
                    1,
                    rng,
                ),
            })
            .collect();
        GatLayer {
            input,
            head_width,
            heads,
            combine,
        }
    }

    pub fn output_width(&self) -> usize {
        match self.combine {
            HeadCombine::Concat => self.head_width * self.heads.len(),
            HeadCombine::Average => self.head_width,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.heads.len() * (self.input * self.head_width + 2 * self.head_width)
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        h: Var,
        adj: &Rc<Adjacency>,
    ) -> Result<Var> {
        let outs = self.head_outputs(tape, store, h, adj)?;
        let heads: Vec<Var> = outs.iter().map(|&(_, out)| out).collect();
        match self.combine {
            HeadCombine::Concat => tape.hcat(&heads),
            HeadCombine::Average => tape.mean(&heads),
        }
    }

    /// Per head: the attention node (for inspecting `θ`) and the activated
    /// head output.
    fn head_outputs(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        h: Var,
        adj: &Rc<Adjacency>,
    ) -> Result<Vec<(Var, Var)>> {
        let (rows, cols) = tape.value(h).shape();
        if cols != self.input {
            return Err(Error::shape(
                "gat layer",
                format!("input width {cols}, layer expects {}", self.input),
            ));
        }
        if rows != adj.node_count() {
            return Err(Error::shape(
                "gat layer",
                format!("{rows} feature rows for {} nodes", adj.node_count()),
            ));
        }
        if self.heads.is_empty() {
            return Err(Error::shape("gat layer", "no attention heads"));
        }
        let mut outs = Vec::with_capacity(self.heads.len());
        for head in &self.heads {
            let w = tape.param(store, head.weight);
            let a = tape.param(store, head.attention);
            let r = tape.matmul(h, w)?;
            let z = tape.attention(r, a, adj.clone())?;
            outs.push((z, tape.activate(z, Activation::Elu)));
        }
        Ok(outs)
    }

    /// Attention coefficients `θ` per head, per node, parallel to the node's
    /// closed neighbourhood in `adj`.
    pub fn attention_weights(
        &self,
        store: &ParamStore,
        h: &Matrix,
        adj: &Rc<Adjacency>,
    ) -> Result<Vec<Vec<Vec<f64>>>> {
        let mut tape = Tape::new();
        let hv = tape.constant(h.clone());
        let outs = self.head_outputs(&mut tape, store, hv, adj)?;
        Ok(outs
            .iter()
            .map(|&(z, _)| tape.attention_weights(z).expect("attention node"))
            .collect())
    }
}

/// Graph convolution `act(D̂^{-1/2} Â D̂^{-1/2} H W)` with `Â = A + I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcnLayer {
    pub weight: ParamId,
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
}

impl GcnLayer {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        GcnLayer {
            weight: store.add_glorot(format!("{name}.weight"), input, output, rng),
            input,
            output,
            activation,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.input * self.output
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        h: Var,
        adj: &Rc<Adjacency>,
    ) -> Result<Var> {
        let cols = tape.value(h).cols();
        if cols != self.input {
            return Err(Error::shape(
                "gcn layer",
                format!("input width {cols}, layer expects {}", self.input),
            ));
        }
        let w = tape.param(store, self.weight);
        let hw = tape.matmul(h, w)?;
        let weights = Rc::new(adj.symmetric_weights());
        let z = tape.propagate(hw, adj.clone(), weights)?;
        Ok(tape.activate(z, self.activation))
    }
}

/// Either kind of graph layer, so a model can swap one for the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphLayer {
    Gat(GatLayer),
    Gcn(GcnLayer),
}

impl GraphLayer {
    pub fn output_width(&self) -> usize {
        match self {
            GraphLayer::Gat(l) => l.output_width(),
            GraphLayer::Gcn(l) => l.output,
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            GraphLayer::Gat(l) => l.parameter_count(),
            GraphLayer::Gcn(l) => l.parameter_count(),
        }
    }

    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        h: Var,
        adj: &Rc<Adjacency>,
    ) -> Result<Var> {
        match self {
            GraphLayer::Gat(l) => l.forward(tape, store, h, adj),
            GraphLayer::Gcn(l) => l.forward(tape, store, h, adj),
        }
    }
}

pub fn gat_forward(
    layer: &GatLayer,
    store: &ParamStore,
    h: &Matrix,
    adj: &Rc<Adjacency>,
) -> Result<Matrix> {
    let mut tape = Tape::new();
    let v = tape.constant(h.clone());
    let out = layer.forward(&mut tape, store, v, adj)?;
    Ok(tape.value(out).clone())
}

pub fn gcn_forward(
    layer: &GcnLayer,
    store: &ParamStore,
    h: &Matrix,
    adj: &Rc<Adjacency>,
) -> Result<Matrix> {
    let mut tape = Tape::new();
    let v = tape.constant(h.clone());
    let out = layer.forward(&mut tape, store, v, adj)?;
    Ok(tape.value(out).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::activation::elu;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_node_attention_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let layer = GatLayer::new(&mut store, "g", 3, 2, 2, HeadCombine::Concat, &mut rng);
        let adj = Rc::new(Adjacency::from_edges(1, &[]).unwrap());
        let h = Matrix::from_rows(&[vec![0.3, -0.7, 1.1]]).unwrap();
        let theta = layer.attention_weights(&store, &h, &adj).unwrap();
        assert_eq!(theta, vec![vec![vec![1.0]]; 2]);
        let out = gat_forward(&layer, &store, &h, &adj).unwrap();
        for (k, head) in layer.heads.iter().enumerate() {
            let r = h.matmul(store.get(head.weight)).unwrap();
            for c in 0..2 {
                assert_eq!(out.get(0, k * 2 + c), elu(r.get(0, c)));
            }
        }
    }

    #[test]
    fn gat_parameter_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let layer = GatLayer::new(&mut store, "g", 5, 500, 5, HeadCombine::Concat, &mut rng);
        assert_eq!(layer.parameter_count(), 17_500);
        assert_eq!(store.scalar_count(), 17_500);
        assert_eq!(layer.output_width(), 2500);
    }

    #[test]
    fn gcn_single_node_and_zero_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut store = ParamStore::new();
        let layer = GcnLayer::new(&mut store, "c", 2, 3, Activation::Relu, &mut rng);
        let adj = Rc::new(Adjacency::from_edges(1, &[]).unwrap());
        let h = Matrix::from_rows(&[vec![0.5, -1.5]]).unwrap();
        let out = gcn_forward(&layer, &store, &h, &adj).unwrap();
        let expected = h.matmul(store.get(layer.weight)).unwrap().map(|v| v.max(0.0));
        assert_eq!(out, expected);
        store.zero_all();
        let adj3 = Rc::new(Adjacency::from_edges(3, &[(0, 1), (1, 2)]).unwrap());
        let out = gcn_forward(&layer, &store, &Matrix::filled(3, 2, 1.0), &adj3).unwrap();
        assert_eq!(out, Matrix::zeros(3, 3));
    }

    #[test]
    fn gcn_matches_dense_normalized_adjacency() {
        // 4-cycle: every node has closed degree 3.
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
        let adj = Rc::new(Adjacency::from_edges(4, &edges).unwrap());
        let mut store = ParamStore::new();
        let w = store.add("w", Matrix::identity(2));
        let layer = GcnLayer {
            weight: w,
            input: 2,
            output: 2,
            activation: Activation::Identity,
        };
        let h = Matrix::from_fn(4, 2, |i, j| (i * 2 + j) as f64 - 3.0);
        let out = gcn_forward(&layer, &store, &h, &adj).unwrap();

        let mut a_hat = Matrix::identity(4);
        for &(i, j) in &edges {
            a_hat.set(i, j, 1.0);
            a_hat.set(j, i, 1.0);
        }
        let deg: Vec<f64> = (0..4).map(|i| a_hat.row(i).iter().sum()).collect();
        let norm = Matrix::from_fn(4, 4, |i, j| a_hat.get(i, j) / (deg[i] * deg[j]).sqrt());
        let oracle = norm.matmul(&h).unwrap();
        assert!(out.max_abs_diff(&oracle) < 1e-14);
        // Regular graph: the closed-neighbourhood mean.
        for i in 0..4 {
            let nb = adj.closed(i);
            let mean: f64 = nb.iter().map(|&j| h.get(j, 0)).sum::<f64>() / 3.0;
            assert!((out.get(i, 0) - mean).abs() < 1e-14);
        }
    }
}
