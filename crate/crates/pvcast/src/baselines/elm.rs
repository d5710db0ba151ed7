//! Extreme learning machine: frozen random hidden layer, closed-form
//! ridge-regularized least-squares output weights.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::PreparedDataset;
use crate::tensor::TensorError;
use crate::training::Forecaster;

#[derive(Debug, Error)]
pub enum ElmError {
    #[error("no training windows")]
    EmptyTraining,
    #[error("singular normal equations; use a ridge penalty λ > 0")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Sigmoid,
    /// Hidden layer passes features through unchanged; used to cross-check
    /// the solver against ordinary least squares.
    Identity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElmConfig {
    pub hidden_size: usize,
    /// Ridge penalty λ on the output weights.
    pub ridge: f64,
    pub seed: u64,
    pub activation: Activation,
}

impl Default for ElmConfig {
    fn default() -> Self {
        ElmConfig {
            hidden_size: 200,
            ridge: 1e-6,
            seed: 42,
            activation: Activation::Sigmoid,
        }
    }
}

/// Random projection frozen at construction; only `output_weights` is
/// solved, never iterated.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElmModel {
    /// [hidden × input], row-major.
    pub input_weights: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub input_size: usize,
    pub hidden_size: usize,
    pub activation: Activation,
}

impl ElmModel {
    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        match self.activation {
            Activation::Identity => x.to_vec(),
            Activation::Sigmoid => (0..self.hidden_size)
                .map(|j| {
                    let row = &self.input_weights[j * self.input_size..(j + 1) * self.input_size];
                    let z: f64 =
                        row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.hidden_bias[j];
                    1.0 / (1.0 + (-z).exp())
                })
                .collect(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.hidden(x)
            .iter()
            .zip(&self.output_weights)
            .map(|(h, b)| h * b)
            .sum()
    }
}

impl Forecaster for ElmModel {
    fn predict_norm(&self, window: &[f64]) -> Result<f64, TensorError> {
        Ok(self.predict(window))
    }
}

/// Solves min ‖Hβ − y‖² + λ‖β‖² by the ridge normal equations
/// (HᵀH + λI)β = Hᵀy with a dense symmetric (Cholesky) solve.
pub(crate) fn ridge_solve(
    rows: &[Vec<f64>],
    targets: &[f64],
    ridge: f64,
) -> Result<Vec<f64>, ElmError> {
    let n = rows.len();
    let d = rows[0].len();
    let h = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(targets);
    let mut gram = h.transpose() * &h;
    for i in 0..d {
        gram[(i, i)] += ridge;
    }
    let rhs = h.transpose() * y;
    match gram.cholesky() {
        Some(chol) => Ok(chol.solve(&rhs).as_slice().to_vec()),
        None => Err(ElmError::Singular),
    }
}

/// Trains an ELM on the dataset's training windows.
pub fn train_elm(dataset: &PreparedDataset, cfg: &ElmConfig) -> Result<ElmModel, ElmError> {
    let (xs, ys) = super::training_rows(dataset);
    train_elm_on(&xs, &ys, dataset.window_length, cfg)
}

pub fn train_elm_on(
    xs: &[Vec<f64>],
    ys: &[f64],
    input_size: usize,
    cfg: &ElmConfig,
) -> Result<ElmModel, ElmError> {
    if xs.is_empty() {
        return Err(ElmError::EmptyTraining);
    }
    let hidden_size = match cfg.activation {
        Activation::Identity => input_size,
        Activation::Sigmoid => cfg.hidden_size,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // uniform init in ±1 for the frozen projection
    let input_weights: Vec<f64> = (0..hidden_size * input_size)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let hidden_bias: Vec<f64> = (0..hidden_size).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut model = ElmModel {
        input_weights,
        hidden_bias,
        output_weights: Vec::new(),
        input_size,
        hidden_size,
        activation: cfg.activation,
    };
    let h_rows: Vec<Vec<f64>> = xs.iter().map(|x| model.hidden(x)).collect();
    model.output_weights = ridge_solve(&h_rows, ys, cfg.ridge)?;
    Ok(model)
}
