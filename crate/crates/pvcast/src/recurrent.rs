//! LSTM and peephole-ConvLSTM cells, deep stacking and training.
//!
//! Gate equations follow the classic formulation: input/forget/output gates
//! are sigmoids of affine (or convolutional) maps, the cell state mixes the
//! previous state with a tanh candidate, and the hidden output gates a tanh
//! of the cell state. The ConvLSTM replaces the matrix products with 1-D
//! same-padding convolutions and adds Hadamard peephole terms: the input
//! and forget gates observe C_{t-1}, the output gate observes the freshly
//! updated C_t.
//!
//! A univariate window is presented to the ConvLSTM as a sequence whose
//! per-step input is one channel of spatial length 1 (the sequence axis
//! carries time); the alternative `WindowAsSpace` mapping feeds the whole
//! window as a single spatial axis in one step.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PreparedDataset;
use crate::tensor::{NodeId, Padding, ParamId, ParamSet, Tape, Tensor, TensorError};
use crate::training::{self, TapeModel, TrainConfig, TrainError, TrainHistory};

/// Hidden/cell state pair flowing between steps of one layer.
#[derive(Debug, Clone, Copy)]
pub struct CellState {
    pub h: NodeId,
    pub c: NodeId,
}

/// All weight and bias handles of a fully connected LSTM cell.
#[derive(Debug, Clone)]
pub struct LstmCellParams {
    pub w_xi: ParamId,
    pub w_hi: ParamId,
    pub w_xf: ParamId,
    pub w_hf: ParamId,
    pub w_xc: ParamId,
    pub w_hc: ParamId,
    pub w_xo: ParamId,
    pub w_ho: ParamId,
    pub b_i: ParamId,
    pub b_f: ParamId,
    pub b_c: ParamId,
    pub b_o: ParamId,
    pub input_size: usize,
    pub hidden_size: usize,
}

impl LstmCellParams {
    pub fn init(
        set: &mut ParamSet,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let wx = |name: &str, set: &mut ParamSet, rng: &mut ChaCha8Rng| {
            set.add_glorot(
                &format!("{prefix}.{name}"),
                &[hidden_size, input_size],
                input_size,
                hidden_size,
                rng,
            )
        };
        let w_xi = wx("w_xi", set, rng);
        let w_xf = wx("w_xf", set, rng);
        let w_xc = wx("w_xc", set, rng);
        let w_xo = wx("w_xo", set, rng);
        let wh = |name: &str, set: &mut ParamSet, rng: &mut ChaCha8Rng| {
            set.add_glorot(
                &format!("{prefix}.{name}"),
                &[hidden_size, hidden_size],
                hidden_size,
                hidden_size,
                rng,
            )
        };
        let w_hi = wh("w_hi", set, rng);
        let w_hf = wh("w_hf", set, rng);
        let w_hc = wh("w_hc", set, rng);
        let w_ho = wh("w_ho", set, rng);
        let b_i = set.add_zeros(&format!("{prefix}.b_i"), &[hidden_size]);
        let b_f = set.add_zeros(&format!("{prefix}.b_f"), &[hidden_size]);
        let b_c = set.add_zeros(&format!("{prefix}.b_c"), &[hidden_size]);
        let b_o = set.add_zeros(&format!("{prefix}.b_o"), &[hidden_size]);
        LstmCellParams {
            w_xi,
            w_hi,
            w_xf,
            w_hf,
            w_xc,
            w_hc,
            w_xo,
            w_ho,
            b_i,
            b_f,
            b_c,
            b_o,
            input_size,
            hidden_size,
        }
    }
}

/// Convolution kernels, peephole tensors and biases of a ConvLSTM cell.
#[derive(Debug, Clone)]
pub struct ConvLstmCellParams {
    pub w_xi: ParamId,
    pub w_hi: ParamId,
    pub w_xf: ParamId,
    pub w_hf: ParamId,
    pub w_xc: ParamId,
    pub w_hc: ParamId,
    pub w_xo: ParamId,
    pub w_ho: ParamId,
    /// Peephole weights, elementwise over the cell state [channels × spatial].
    pub w_ci: ParamId,
    pub w_cf: ParamId,
    pub w_co: ParamId,
    pub b_i: ParamId,
    pub b_f: ParamId,
    pub b_c: ParamId,
    pub b_o: ParamId,
    pub in_channels: usize,
    pub channels: usize,
    pub kernel_width: usize,
    pub spatial_len: usize,
}

impl ConvLstmCellParams {
    pub fn init(
        set: &mut ParamSet,
        prefix: &str,
        in_channels: usize,
        channels: usize,
        kernel_width: usize,
        spatial_len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let kx = |name: &str, set: &mut ParamSet, rng: &mut ChaCha8Rng| {
            set.add_glorot(
                &format!("{prefix}.{name}"),
                &[channels, in_channels, kernel_width],
                in_channels * kernel_width,
                channels * kernel_width,
                rng,
            )
        };
        let w_xi = kx("w_xi", set, rng);
        let w_xf = kx("w_xf", set, rng);
        let w_xc = kx("w_xc", set, rng);
        let w_xo = kx("w_xo", set, rng);
        let kh = |name: &str, set: &mut ParamSet, rng: &mut ChaCha8Rng| {
            set.add_glorot(
                &format!("{prefix}.{name}"),
                &[channels, channels, kernel_width],
                channels * kernel_width,
                channels * kernel_width,
                rng,
            )
        };
        let w_hi = kh("w_hi", set, rng);
        let w_hf = kh("w_hf", set, rng);
        let w_hc = kh("w_hc", set, rng);
        let w_ho = kh("w_ho", set, rng);
        let w_ci = set.add_zeros(&format!("{prefix}.w_ci"), &[channels, spatial_len]);
        let w_cf = set.add_zeros(&format!("{prefix}.w_cf"), &[channels, spatial_len]);
        let w_co = set.add_zeros(&format!("{prefix}.w_co"), &[channels, spatial_len]);
        let b_i = set.add_zeros(&format!("{prefix}.b_i"), &[channels]);
        let b_f = set.add_zeros(&format!("{prefix}.b_f"), &[channels]);
        let b_c = set.add_zeros(&format!("{prefix}.b_c"), &[channels]);
        let b_o = set.add_zeros(&format!("{prefix}.b_o"), &[channels]);
        ConvLstmCellParams {
            w_xi,
            w_hi,
            w_xf,
            w_hf,
            w_xc,
            w_hc,
            w_xo,
            w_ho,
            w_ci,
            w_cf,
            w_co,
            b_i,
            b_f,
            b_c,
            b_o,
            in_channels,
            channels,
            kernel_width,
            spatial_len,
        }
    }
}

/// One fully connected LSTM step.
pub fn lstm_step(
    tape: &mut Tape,
    set: &ParamSet,
    p: &LstmCellParams,
    x: NodeId,
    prev: CellState,
) -> Result<CellState, TensorError> {
    let gate = |tape: &mut Tape, w_x: ParamId, w_h: ParamId, b: ParamId| -> Result<NodeId, TensorError> {
        let wx = tape.param(set, w_x);
        let wh = tape.param(set, w_h);
        let bn = tape.param(set, b);
        let a = tape.matvec(wx, x)?;
        let hpart = tape.matvec(wh, prev.h)?;
        let s = tape.add(a, hpart)?;
        tape.add(s, bn)
    };
    let i_pre = gate(tape, p.w_xi, p.w_hi, p.b_i)?;
    let i = tape.sigmoid(i_pre);
    let f_pre = gate(tape, p.w_xf, p.w_hf, p.b_f)?;
    let f = tape.sigmoid(f_pre);
    let cand_pre = gate(tape, p.w_xc, p.w_hc, p.b_c)?;
    let cand = tape.tanh(cand_pre);
    let keep = tape.mul(f, prev.c)?;
    let write = tape.mul(i, cand)?;
    let c = tape.add(keep, write)?;
    let o_pre = gate(tape, p.w_xo, p.w_ho, p.b_o)?;
    let o = tape.sigmoid(o_pre);
    let c_act = tape.tanh(c);
    let h = tape.mul(o, c_act)?;
    Ok(CellState { h, c })
}

/// One ConvLSTM step with peephole connections. The input and forget gates
/// see the previous cell state; the output gate sees the updated one.
pub fn convlstm_step(
    tape: &mut Tape,
    set: &ParamSet,
    p: &ConvLstmCellParams,
    x: NodeId,
    prev: CellState,
) -> Result<CellState, TensorError> {
    let zero_bias = tape.constant(Tensor::zeros(&[p.channels]));
    let conv_pair = |tape: &mut Tape, w_x: ParamId, w_h: ParamId, b: ParamId| -> Result<NodeId, TensorError> {
        let wx = tape.param(set, w_x);
        let wh = tape.param(set, w_h);
        let bn = tape.param(set, b);
        let from_x = tape.conv1d(x, wx, bn, Padding::Same)?;
        let from_h = tape.conv1d(prev.h, wh, zero_bias, Padding::Same)?;
        tape.add(from_x, from_h)
    };

    let i_conv = conv_pair(tape, p.w_xi, p.w_hi, p.b_i)?;
    let w_ci = tape.param(set, p.w_ci);
    let i_peep = tape.mul(w_ci, prev.c)?;
    let i_pre = tape.add(i_conv, i_peep)?;
    let i = tape.sigmoid(i_pre);

    let f_conv = conv_pair(tape, p.w_xf, p.w_hf, p.b_f)?;
    let w_cf = tape.param(set, p.w_cf);
    let f_peep = tape.mul(w_cf, prev.c)?;
    let f_pre = tape.add(f_conv, f_peep)?;
    let f = tape.sigmoid(f_pre);

    let cand_pre = conv_pair(tape, p.w_xc, p.w_hc, p.b_c)?;
    let cand = tape.tanh(cand_pre);
    let keep = tape.mul(f, prev.c)?;
    let write = tape.mul(i, cand)?;
    let c = tape.add(keep, write)?;

    let o_conv = conv_pair(tape, p.w_xo, p.w_ho, p.b_o)?;
    let w_co = tape.param(set, p.w_co);
    let o_peep = tape.mul(w_co, c)?;
    let o_pre = tape.add(o_conv, o_peep)?;
    let o = tape.sigmoid(o_pre);

    let c_act = tape.tanh(c);
    let h = tape.mul(o, c_act)?;
    Ok(CellState { h, c })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    ConvLstm,
    Lstm,
}

/// How a univariate window maps onto the cell's sequence/spatial axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputMapping {
    /// Sequence axis carries time; each step is one sample of spatial length 1.
    #[default]
    TimeSequence,
    /// The whole window is one spatial axis, consumed in a single step.
    WindowAsSpace,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackConfig {
    pub cell_kind: CellKind,
    pub num_layers: usize,
    /// Channels per ConvLSTM layer / units per LSTM layer.
    pub hidden_size: usize,
    pub kernel_width: usize,
    pub window_length: usize,
    pub mapping: InputMapping,
    pub seed: u64,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig {
            cell_kind: CellKind::ConvLstm,
            num_layers: 2,
            hidden_size: 16,
            kernel_width: 3,
            window_length: crate::dataset::DEFAULT_WINDOW_LENGTH,
            mapping: InputMapping::TimeSequence,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
enum LayerParams {
    ConvLstm(ConvLstmCellParams),
    Lstm(LstmCellParams),
}

/// Deep recurrent stack with a linear dense head mapping the final hidden
/// state to one normalized prediction.
#[derive(Debug, Clone)]
pub struct StackModel {
    pub config: StackConfig,
    params: ParamSet,
    layers: Vec<LayerParams>,
    head_w: ParamId,
    head_b: ParamId,
}

impl StackModel {
    pub fn new(config: StackConfig) -> Self {
        assert!(config.num_layers >= 1, "stack needs at least one layer");
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamSet::new();
        let mut layers = Vec::new();
        let spatial = match config.mapping {
            InputMapping::TimeSequence => 1,
            InputMapping::WindowAsSpace => config.window_length,
        };
        for layer in 0..config.num_layers {
            let prefix = format!("layer{layer}");
            match config.cell_kind {
                CellKind::ConvLstm => {
                    let in_channels = if layer == 0 { 1 } else { config.hidden_size };
                    layers.push(LayerParams::ConvLstm(ConvLstmCellParams::init(
                        &mut params,
                        &prefix,
                        in_channels,
                        config.hidden_size,
                        config.kernel_width,
                        spatial,
                        &mut rng,
                    )));
                }
                CellKind::Lstm => {
                    let input_size = if layer == 0 { spatial } else { config.hidden_size };
                    layers.push(LayerParams::Lstm(LstmCellParams::init(
                        &mut params,
                        &prefix,
                        input_size,
                        config.hidden_size,
                        &mut rng,
                    )));
                }
            }
        }
        let head_in = match config.cell_kind {
            CellKind::ConvLstm => config.hidden_size * spatial,
            CellKind::Lstm => config.hidden_size,
        };
        let head_w = params.add_glorot("head.w", &[1, head_in], head_in, 1, &mut rng);
        let head_b = params.add_zeros("head.b", &[1]);
        StackModel {
            config,
            params,
            layers,
            head_w,
            head_b,
        }
    }

    /// Rebuilds a model around previously checkpointed parameters.
    pub fn with_params(config: StackConfig, params: ParamSet) -> Result<Self, TensorError> {
        let fresh = StackModel::new(config);
        if fresh.params.len() != params.len() {
            return Err(TensorError::BadCheckpoint(format!(
                "parameter count mismatch: config implies {}, checkpoint has {}",
                fresh.params.len(),
                params.len()
            )));
        }
        for (a, b) in fresh.params.ids().zip(params.ids()) {
            if fresh.params.name(a) != params.name(b)
                || fresh.params.tensor(a).shape != params.tensor(b).shape
            {
                return Err(TensorError::BadCheckpoint(format!(
                    "parameter {} does not match the configured architecture",
                    params.name(b)
                )));
            }
        }
        Ok(StackModel {
            params,
            ..fresh
        })
    }

    fn spatial_len(&self) -> usize {
        match self.config.mapping {
            InputMapping::TimeSequence => 1,
            InputMapping::WindowAsSpace => self.config.window_length,
        }
    }

    fn zero_state(&self, tape: &mut Tape) -> CellState {
        let shape = match self.config.cell_kind {
            CellKind::ConvLstm => vec![self.config.hidden_size, self.spatial_len()],
            CellKind::Lstm => vec![self.config.hidden_size],
        };
        CellState {
            h: tape.constant(Tensor::zeros(&shape)),
            c: tape.constant(Tensor::zeros(&shape)),
        }
    }

    fn step_inputs<'a>(&self, window: &'a [f64]) -> Vec<&'a [f64]> {
        match self.config.mapping {
            InputMapping::TimeSequence => window.chunks(1).collect(),
            InputMapping::WindowAsSpace => vec![window],
        }
    }
}

impl TapeModel for StackModel {
    fn forward(&self, tape: &mut Tape, window: &[f64]) -> Result<NodeId, TensorError> {
        if window.len() != self.config.window_length {
            return Err(TensorError::ShapeMismatch {
                op: "stack_forward",
                expected: format!("window of length {}", self.config.window_length),
                got: format!("{}", window.len()),
            });
        }
        let mut states: Vec<CellState> =
            (0..self.layers.len()).map(|_| self.zero_state(tape)).collect();

        for step in self.step_inputs(window) {
            let mut x = match self.config.cell_kind {
                CellKind::ConvLstm => tape.constant_from(&[1, step.len()], step)?,
                CellKind::Lstm => tape.constant_from(&[step.len()], step)?,
            };
            for (layer, state) in self.layers.iter().zip(states.iter_mut()) {
                let next = match layer {
                    LayerParams::ConvLstm(p) => convlstm_step(tape, &self.params, p, x, *state)?,
                    LayerParams::Lstm(p) => {
                        // Hidden output of a conv layer below is [C×S]; an
                        // LSTM stack is homogeneous so x is already a vector.
                        lstm_step(tape, &self.params, p, x, *state)?
                    }
                };
                x = next.h;
                *state = next;
            }
        }

        let top_h = states.last().expect("at least one layer").h;
        let flat_len: usize = tape.shape(top_h).iter().product();
        let flat = tape.reshape(top_h, &[flat_len])?;
        let w = tape.param(&self.params, self.head_w);
        let b = tape.param(&self.params, self.head_b);
        tape.dense(w, flat, b)
    }

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }
}

/// Backpropagation-through-time training over the full window (no
/// truncation). Returns per-epoch loss history; the best-validation
/// parameters are retained.
pub fn bptt_train(
    model: &mut StackModel,
    dataset: &PreparedDataset,
    cfg: &TrainConfig,
) -> Result<TrainHistory, TrainError> {
    training::train(model, dataset, cfg)
}
