//! Gradient training loop shared by the tape-backed models
//! (ConvLSTM/LSTM stacks, CNN, MLP).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::PreparedDataset;
use crate::tensor::{adam_step, AdamConfig, AdamState, NodeId, ParamSet, Tape, TensorError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("tensor: {0}")]
    Tensor(#[from] TensorError),
    #[error("non-finite training loss at epoch {epoch}: {detail}")]
    NonFiniteLoss { epoch: usize, detail: String },
    #[error("empty training split")]
    EmptyTrainingSplit,
}

/// A model whose forward pass is recorded on a [`Tape`], mapping one
/// normalized input window to a scalar normalized prediction node.
pub trait TapeModel {
    fn forward(&self, tape: &mut Tape, window: &[f64]) -> Result<NodeId, TensorError>;
    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;
}

/// Point forecaster over normalized windows.
pub trait Forecaster {
    /// Predicts the normalized next value from a normalized window.
    fn predict_norm(&self, window: &[f64]) -> Result<f64, TensorError>;
}

impl<M: TapeModel> Forecaster for M {
    fn predict_norm(&self, window: &[f64]) -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, window)?;
        Ok(tape.scalar(out))
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Chronological tail of the training windows held out for validation.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 42,
            patience: 20,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub stopped_early: bool,
}

fn mean_loss<M: TapeModel>(
    model: &M,
    dataset: &PreparedDataset,
    indices: &[usize],
) -> Result<f64, TensorError> {
    let mut acc = 0.0;
    for &i in indices {
        let p = model.predict_norm(dataset.window(i))?;
        let t = dataset.target(i, 1);
        acc += (p - t) * (p - t);
    }
    Ok(acc / indices.len() as f64)
}

/// Minimizes one-step MSE over the training windows with Adam. A
/// chronological validation tail drives early stopping; the
/// best-validation parameters are restored on return.
pub fn train<M: TapeModel>(
    model: &mut M,
    dataset: &PreparedDataset,
    cfg: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    if dataset.split_index == 0 {
        return Err(TrainError::EmptyTrainingSplit);
    }
    let n_val = ((dataset.split_index as f64) * cfg.validation_fraction).floor() as usize;
    let n_fit = dataset.split_index - n_val;
    let (fit_idx, val_idx): (Vec<usize>, Vec<usize>) = (
        (0..n_fit).collect(),
        (n_fit..dataset.split_index).collect(),
    );
    if fit_idx.is_empty() {
        return Err(TrainError::EmptyTrainingSplit);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam_state = AdamState::new(model.params());
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    let mut stale_epochs = 0usize;

    model.params_mut().zero_grads();
    for epoch in 0..cfg.epochs {
        let mut order = fit_idx.clone();
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            for &i in batch {
                let mut tape = Tape::new();
                let pred = model.forward(&mut tape, dataset.window(i))?;
                let loss = tape.mse_loss(pred, &[dataset.target(i, 1)])?;
                epoch_loss += tape.scalar(loss);
                tape.backward(loss, model.params_mut())?;
            }
            model.params_mut().scale_grads(1.0 / batch.len() as f64);
            adam_step(model.params_mut(), &mut adam_state, &cfg.adam);
        }
        epoch_loss /= order.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                epoch,
                detail: format!("training loss {epoch_loss}"),
            });
        }
        history.train_loss.push(epoch_loss);

        if !val_idx.is_empty() {
            let val_loss = mean_loss(model, dataset, &val_idx)?;
            history.validation_loss.push(val_loss);
            let improved = best.as_ref().map_or(true, |(b, _)| val_loss < *b);
            if improved {
                best = Some((val_loss, model.params().values()));
                stale_epochs = 0;
            } else {
                stale_epochs += 1;
                if stale_epochs >= cfg.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }
    if let Some((_, values)) = best {
        model.params_mut().restore_values(&values);
    }
    Ok(history)
}
