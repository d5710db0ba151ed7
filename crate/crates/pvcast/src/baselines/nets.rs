//! Gradient-trained network baselines: a two-layer 1-D CNN over the window
//! as a spatial axis, and a single-hidden-layer MLP.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PreparedDataset;
use crate::tensor::{NodeId, Padding, ParamId, ParamSet, Tape, TensorError};
use crate::training::{self, TapeModel, TrainConfig, TrainError, TrainHistory};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetConfig {
    pub window_length: usize,
    /// CNN: channels per conv layer. MLP: hidden units.
    pub hidden_size: usize,
    pub kernel_width: usize,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            window_length: crate::dataset::DEFAULT_WINDOW_LENGTH,
            hidden_size: 16,
            kernel_width: 3,
            seed: 42,
        }
    }
}

/// conv1d+ReLU ×2 (same padding) over [1 × L], flatten, linear head.
#[derive(Debug, Clone)]
pub struct CnnModel {
    pub config: NetConfig,
    params: ParamSet,
    conv1_w: ParamId,
    conv1_b: ParamId,
    conv2_w: ParamId,
    conv2_b: ParamId,
    head_w: ParamId,
    head_b: ParamId,
}

impl CnnModel {
    pub fn new(config: NetConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamSet::new();
        let (c, k, l) = (config.hidden_size, config.kernel_width, config.window_length);
        let conv1_w = params.add_glorot("conv1.w", &[c, 1, k], k, c * k, &mut rng);
        let conv1_b = params.add_zeros("conv1.b", &[c]);
        let conv2_w = params.add_glorot("conv2.w", &[c, c, k], c * k, c * k, &mut rng);
        let conv2_b = params.add_zeros("conv2.b", &[c]);
        let head_w = params.add_glorot("head.w", &[1, c * l], c * l, 1, &mut rng);
        let head_b = params.add_zeros("head.b", &[1]);
        CnnModel {
            config,
            params,
            conv1_w,
            conv1_b,
            conv2_w,
            conv2_b,
            head_w,
            head_b,
        }
    }

    pub fn with_params(config: NetConfig, params: ParamSet) -> Result<Self, TensorError> {
        let fresh = CnnModel::new(config);
        check_params_match(&fresh.params, &params)?;
        Ok(CnnModel { params, ..fresh })
    }
}

pub(crate) fn check_params_match(expected: &ParamSet, got: &ParamSet) -> Result<(), TensorError> {
    if expected.len() != got.len() {
        return Err(TensorError::BadCheckpoint(format!(
            "parameter count mismatch: config implies {}, checkpoint has {}",
            expected.len(),
            got.len()
        )));
    }
    for (a, b) in expected.ids().zip(got.ids()) {
        if expected.name(a) != got.name(b) || expected.tensor(a).shape != got.tensor(b).shape {
            return Err(TensorError::BadCheckpoint(format!(
                "parameter {} does not match the configured architecture",
                got.name(b)
            )));
        }
    }
    Ok(())
}

impl TapeModel for CnnModel {
    fn forward(&self, tape: &mut Tape, window: &[f64]) -> Result<NodeId, TensorError> {
        if window.len() != self.config.window_length {
            return Err(TensorError::ShapeMismatch {
                op: "cnn_forward",
                expected: format!("window of length {}", self.config.window_length),
                got: format!("{}", window.len()),
            });
        }
        let x = tape.constant_from(&[1, window.len()], window)?;
        let w1 = tape.param(&self.params, self.conv1_w);
        let b1 = tape.param(&self.params, self.conv1_b);
        let c1 = tape.conv1d(x, w1, b1, Padding::Same)?;
        let a1 = tape.relu(c1);
        let w2 = tape.param(&self.params, self.conv2_w);
        let b2 = tape.param(&self.params, self.conv2_b);
        let c2 = tape.conv1d(a1, w2, b2, Padding::Same)?;
        let a2 = tape.relu(c2);
        let flat_len: usize = tape.shape(a2).iter().product();
        let flat = tape.reshape(a2, &[flat_len])?;
        let hw = tape.param(&self.params, self.head_w);
        let hb = tape.param(&self.params, self.head_b);
        tape.dense(hw, flat, hb)
    }

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }
}

/// One ReLU hidden layer plus a linear head.
#[derive(Debug, Clone)]
pub struct MlpModel {
    pub config: NetConfig,
    params: ParamSet,
    hidden_w: ParamId,
    hidden_b: ParamId,
    head_w: ParamId,
    head_b: ParamId,
}

impl MlpModel {
    pub fn new(config: NetConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamSet::new();
        let (h, l) = (config.hidden_size, config.window_length);
        let hidden_w = params.add_glorot("hidden.w", &[h, l], l, h, &mut rng);
        let hidden_b = params.add_zeros("hidden.b", &[h]);
        let head_w = params.add_glorot("head.w", &[1, h], h, 1, &mut rng);
        let head_b = params.add_zeros("head.b", &[1]);
        MlpModel {
            config,
            params,
            hidden_w,
            hidden_b,
            head_w,
            head_b,
        }
    }

    pub fn with_params(config: NetConfig, params: ParamSet) -> Result<Self, TensorError> {
        let fresh = MlpModel::new(config);
        check_params_match(&fresh.params, &params)?;
        Ok(MlpModel { params, ..fresh })
    }
}

impl TapeModel for MlpModel {
    fn forward(&self, tape: &mut Tape, window: &[f64]) -> Result<NodeId, TensorError> {
        if window.len() != self.config.window_length {
            return Err(TensorError::ShapeMismatch {
                op: "mlp_forward",
                expected: format!("window of length {}", self.config.window_length),
                got: format!("{}", window.len()),
            });
        }
        let x = tape.constant_from(&[window.len()], window)?;
        let w = tape.param(&self.params, self.hidden_w);
        let b = tape.param(&self.params, self.hidden_b);
        let z = tape.dense(w, x, b)?;
        let a = tape.relu(z);
        let hw = tape.param(&self.params, self.head_w);
        let hb = tape.param(&self.params, self.head_b);
        tape.dense(hw, a, hb)
    }

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }
}

pub fn train_cnn(
    model: &mut CnnModel,
    dataset: &PreparedDataset,
    cfg: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    training::train(model, dataset, cfg)
}

pub fn train_mlp(
    model: &mut MlpModel,
    dataset: &PreparedDataset,
    cfg: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    training::train(model, dataset, cfg)
}
