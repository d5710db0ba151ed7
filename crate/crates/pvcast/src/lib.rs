//! Short-term probabilistic photovoltaic power forecasting.
//!
//! The crate trains a convolutional LSTM point forecaster over windowed PV
//! power series, post-processes the point forecasts with a joint kernel
//! density estimate of (predicted, actual) power, and extracts conditional
//! 95% prediction intervals. Baseline regressors (CNN, MLP, ELM, CART, GBDT,
//! persistence) share the same data pipeline for comparison runs.
//!
//! Entry points:
//! - [`dataset`]: CSV ingestion, daylight filtering, windowing, splitting.
//! - [`tensor`]: shape-tagged arrays with reverse-mode gradients and Adam.
//! - [`recurrent`]: LSTM / peephole-ConvLSTM cells, deep stacks, training.
//! - [`baselines`]: comparison regressors.
//! - [`kde`]: joint density estimation and interval extraction.
//! - [`metrics`]: point and interval evaluation quantities.
//! - [`pipeline`]: end-to-end experiments, depth sweeps, model comparison.
//!
//! See the `examples/` directory for runnable demonstrations of each
//! capability; the `pvcast` binary exposes the same flows as subcommands.

pub mod baselines;
pub mod dataset;
pub mod kde;
pub mod metrics;
pub mod pipeline;
pub mod recurrent;
pub mod synth;
pub mod tensor;
pub mod training;

pub mod cli;
