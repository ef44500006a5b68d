//! Fully connected layers and the two interaction modules built from them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::matrix::Matrix;
use super::params::{ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::{Error, Result};

/// Affine map followed by an element-wise activation: `act(X·W + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let weight = store.add_glorot(format!("{name}.weight"), input, output, rng);
        let bias = store.add(format!("{name}.bias"), Matrix::zeros(1, output));
        DenseLayer {
            weight,
            bias,
            input,
            output,
            activation,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.input * self.output + self.output
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        let cols = tape.value(x).cols();
        if cols != self.input {
            return Err(Error::shape(
                "dense layer",
                format!("input width {cols}, layer expects {}", self.input),
            ));
        }
        let w = tape.param(store, self.weight);
        let b = tape.param(store, self.bias);
        let z = tape.matmul(x, w)?;
        let z = tape.add_row(z, b)?;
        Ok(tape.activate(z, self.activation))
    }
}

/// A chain of dense layers applied in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fcn {
    pub layers: Vec<DenseLayer>,
}

impl Fcn {
    /// Build `input → widths[0] → … → widths[last]`, using `hidden` on every
    /// layer except the last, which uses `last`.
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        widths: &[usize],
        hidden: Activation,
        last: Activation,
        rng: &mut R,
    ) -> Self {
        let mut layers = Vec::with_capacity(widths.len());
        let mut fan_in = input;
        for (k, &w) in widths.iter().enumerate() {
            let act = if k + 1 == widths.len() { last } else { hidden };
            layers.push(DenseLayer::new(store, &format!("{name}.{k}"), fan_in, w, act, rng));
            fan_in = w;
        }
        Fcn { layers }
    }

    pub fn output_width(&self) -> Option<usize> {
        self.layers.last().map(|l| l.output)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<Var> {
        fcn_forward_var(&self.layers, tape, store, x)
    }
}

pub(crate) fn fcn_forward_var(
    layers: &[DenseLayer],
    tape: &mut Tape,
    store: &ParamStore,
    x: Var,
) -> Result<Var> {
    let mut h = x;
    for layer in layers {
        h = layer.forward(tape, store, h)?;
    }
    Ok(h)
}

/// Evaluate a dense stack on a plain matrix.
pub fn fcn_forward(layers: &[DenseLayer], store: &ParamStore, x: &Matrix) -> Result<Matrix> {
    let mut tape = Tape::new();
    let v = tape.constant(x.clone());
    let out = fcn_forward_var(layers, &mut tape, store, v)?;
    Ok(tape.value(out).clone())
}

/// Residual block `O' = O + FCN(O)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfInteraction {
    pub fcn: DenseLayer,
}

impl SelfInteraction {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        width: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        SelfInteraction {
            fcn: DenseLayer::new(store, &format!("{name}.fcn"), width, width, activation, rng),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.fcn.parameter_count()
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, o: Var) -> Result<Var> {
        if self.fcn.input != self.fcn.output {
            return Err(Error::shape(
                "self interaction",
                format!("fcn maps {} → {}", self.fcn.input, self.fcn.output),
            ));
        }
        let r = self.fcn.forward(tape, store, o)?;
        tape.add(o, r)
    }
}

pub fn self_interaction(o: &Matrix, fcn: &DenseLayer, store: &ParamStore) -> Result<Matrix> {
    let mut tape = Tape::new();
    let v = tape.constant(o.clone());
    let out = SelfInteraction { fcn: *fcn }.forward(&mut tape, store, v)?;
    Ok(tape.value(out).clone())
}

/// Cross-stream residual exchange: `O1'' = FCN1(O2) + O1`,
/// `O2'' = FCN2(O1) + O2`, returned as `cat(O1'', O2'')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualInteraction {
    /// Maps the second stream onto the first stream's width.
    pub fcn1: DenseLayer,
    /// Maps the first stream onto the second stream's width.
    pub fcn2: DenseLayer,
}

impl MutualInteraction {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        width1: usize,
        width2: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        MutualInteraction {
            fcn1: DenseLayer::new(store, &format!("{name}.fcn1"), width2, width1, activation, rng),
            fcn2: DenseLayer::new(store, &format!("{name}.fcn2"), width1, width2, activation, rng),
        }
    }

    pub fn output_width(&self) -> usize {
        self.fcn1.output + self.fcn2.output
    }

    pub fn parameter_count(&self) -> usize {
        self.fcn1.parameter_count() + self.fcn2.parameter_count()
    }

    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, o1: Var, o2: Var) -> Result<Var> {
        let (r1, w1) = tape.value(o1).shape();
        let (r2, w2) = tape.value(o2).shape();
        if r1 != r2 {
            return Err(Error::shape(
                "mutual interaction",
                format!("stream row counts {r1} and {r2}"),
            ));
        }
        if self.fcn1.input != w2 || self.fcn1.output != w1 || self.fcn2.input != w1 || self.fcn2.output != w2 {
            return Err(Error::shape(
                "mutual interaction",
                format!(
                    "streams of width {w1} and {w2} with fcn1 {}→{} and fcn2 {}→{}",
                    self.fcn1.input, self.fcn1.output, self.fcn2.input, self.fcn2.output
                ),
            ));
        }
        let f1 = self.fcn1.forward(tape, store, o2)?;
        let o1n = tape.add(f1, o1)?;
        let f2 = self.fcn2.forward(tape, store, o1)?;
        let o2n = tape.add(f2, o2)?;
        tape.hcat(&[o1n, o2n])
    }
}

pub fn mutual_interaction(
    o1: &Matrix,
    o2: &Matrix,
    fcn1: &DenseLayer,
    fcn2: &DenseLayer,
    store: &ParamStore,
) -> Result<Matrix> {
    let mut tape = Tape::new();
    let a = tape.constant(o1.clone());
    let b = tape.constant(o2.clone());
    let module = MutualInteraction {
        fcn1: *fcn1,
        fcn2: *fcn2,
    };
    let out = module.forward(&mut tape, store, a, b)?;
    Ok(tape.value(out).clone())
}
