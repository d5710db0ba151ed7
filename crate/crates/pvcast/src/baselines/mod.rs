//! Comparison regressors: CNN, MLP, ELM, CART, GBDT and a persistence
//! reference. All consume the same [`PreparedDataset`] windows and split as
//! the ConvLSTM forecaster.
//!
//! SVR is deliberately absent; comparison reports print "not implemented"
//! for its column.

pub mod elm;
pub mod nets;
pub mod tree;

pub use elm::{train_elm, Activation, ElmConfig, ElmModel};
pub use nets::{train_cnn, train_mlp, CnnModel, MlpModel, NetConfig};
pub use tree::{train_cart, train_gbdt, CartConfig, GbdtConfig, GbdtModel, RegressionTree};

use crate::dataset::PreparedDataset;
use crate::tensor::TensorError;
use crate::training::Forecaster;

/// Naive reference: predicts the last observed window value.
#[derive(Debug, Clone, Copy, Default)]
pub struct Persistence;

impl Forecaster for Persistence {
    fn predict_norm(&self, window: &[f64]) -> Result<f64, TensorError> {
        assert!(!window.is_empty(), "persistence needs a nonempty window");
        Ok(*window.last().unwrap())
    }
}

/// Training windows of a dataset as (features, target) rows, shared by the
/// closed-form and tree baselines.
pub(crate) fn training_rows(dataset: &PreparedDataset) -> (Vec<Vec<f64>>, Vec<f64>) {
    let xs = (0..dataset.split_index)
        .map(|i| dataset.window(i).to_vec())
        .collect();
    let ys = (0..dataset.split_index)
        .map(|i| dataset.target(i, 1))
        .collect();
    (xs, ys)
}
