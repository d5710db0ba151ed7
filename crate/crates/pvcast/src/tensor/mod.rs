//! Shape-tagged numeric arrays with reverse-mode automatic differentiation.
//!
//! A [`Tensor`] is a row-major `f64` grid with a paired gradient buffer.
//! Trainable tensors live in a [`ParamSet`]; forward computations are
//! recorded on a [`Tape`](tape::Tape), whose `backward` fills the gradient
//! buffers with exact analytic partial derivatives of a scalar loss.
//!
//! Everything is 64-bit. Non-finite values are a hard error at every
//! operation boundary rather than silently propagated.

pub mod adam;
pub mod checkpoint;
pub mod tape;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use tape::{NodeId, Padding, Tape};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },
    #[error("non-finite value produced by {op} at flat index {index}")]
    NonFinite { op: &'static str, index: usize },
    #[error("kernel width must be odd for same padding, got {0}")]
    EvenKernel(usize),
    #[error("backward called without a recorded forward computation")]
    NoForward,
    #[error("backward root must be a scalar, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

/// Row-major numeric grid with a same-shape gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, TensorError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(TensorError::ShapeMismatch {
                op: "from_vec",
                expected: format!("{n} elements for shape {shape:?}"),
                got: format!("{}", data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(TensorError::NonFinite {
                op: "from_vec",
                index: i,
            });
        }
        let grad = vec![0.0; n];
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
            grad,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Handle into a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// Named collection of trainable tensors owned by one model.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> ParamId {
        self.entries.push((name.to_string(), tensor));
        ParamId(self.entries.len() - 1)
    }

    /// Glorot-uniform initialized parameter: U(±sqrt(6/(fan_in+fan_out))).
    pub fn add_glorot(
        &mut self,
        name: &str,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut impl rand::Rng,
    ) -> ParamId {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        self.add(name, Tensor::from_vec(shape, data).expect("finite init"))
    }

    pub fn add_zeros(&mut self, name: &str, shape: &[usize]) -> ParamId {
        self.add(name, Tensor::zeros(shape))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].1
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].1
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].0
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn zero_grads(&mut self) {
        for (_, t) in &mut self.entries {
            t.zero_grad();
        }
    }

    /// Scales every gradient buffer, used for minibatch averaging.
    pub fn scale_grads(&mut self, factor: f64) {
        for (_, t) in &mut self.entries {
            t.grad.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Snapshot of all parameter values (no grads).
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|(_, t)| t.data.clone()).collect()
    }

    pub fn restore_values(&mut self, values: &[Vec<f64>]) {
        assert_eq!(values.len(), self.entries.len());
        for ((_, t), v) in self.entries.iter_mut().zip(values) {
            assert_eq!(t.data.len(), v.len());
            t.data.copy_from_slice(v);
        }
    }
}
