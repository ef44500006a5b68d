//! Joint training of the structural model and the classifier.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{GnnSegModel, PreparedSlice};
use crate::error::{Error, Result};
use crate::neural::{AdamConfig, AdamState, Tape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Seeds the per-epoch sample order.
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

/// Progress of one finished epoch, handed to the training callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSummary {
    pub epoch: usize,
    pub mean_loss: f64,
    pub elapsed_seconds: f64,
}

/// What the callback wants the trainer to do next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean per-sample loss of each epoch, measured before each sample's update.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

impl TrainReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for (k, l) in self.epoch_losses.iter().enumerate() {
            out.push_str(&format!("{},{l:?}\n", k + 1));
        }
        out
    }
}

/// Loss and gradient of one sample, with the Adam step applied.
fn train_step(model: &mut GnnSegModel, adam: &mut AdamState, prep: &PreparedSlice, mask: &[bool]) -> Result<f64> {
    let mut tape = Tape::new();
    let loss = model.loss_on_tape(&mut tape, &model.store, prep)?;
    tape.check_finite()?;
    let value = tape.value(loss).get(0, 0);
    let grads = tape.backward(loss)?.param_grads(&tape, &model.store);
    adam.step_masked(&mut model.store, &grads, mask)?;
    Ok(value)
}

/// Train with one slice per Adam step. `on_epoch` runs after every epoch
/// and may stop training early.
pub fn train(
    model: &mut GnnSegModel,
    dataset: &[PreparedSlice],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&GnnSegModel, &EpochSummary) -> Control,
) -> Result<TrainReport> {
    if config.epochs == 0 {
        return Err(Error::validation("epochs must be at least 1"));
    }
    if dataset.is_empty() {
        return Err(Error::validation("the training set is empty"));
    }
    if let Some(k) = dataset.iter().position(|p| p.targets.is_none()) {
        return Err(Error::validation(format!("training sample {k} has no label mask")));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = AdamState::new(config.adam, &model.store);
    let mask = model.trainable_mask();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(config.epochs),
        steps: 0,
    };
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &k in &order {
            let loss = train_step(model, &mut adam, &dataset[k], &mask).map_err(|e| match e {
                Error::NonFinite { scope, detail } => Error::NonFinite {
                    scope,
                    detail: format!("{detail} (training sample {k}, epoch {epoch})"),
                },
                other => other,
            })?;
            total += loss;
        }
        report.steps = adam.step;
        let mean_loss = total / dataset.len() as f64;
        report.epoch_losses.push(mean_loss);
        let summary = EpochSummary {
            epoch,
            mean_loss,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        };
        if on_epoch(model, &summary) == Control::Stop {
            break;
        }
    }
    Ok(report)
}
