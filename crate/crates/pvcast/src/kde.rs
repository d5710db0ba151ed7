//! Kernel density estimation of the joint PDF of (predicted, actual) power
//! and extraction of central prediction intervals.
//!
//! All densities use the Gaussian kernel with a product form in two
//! dimensions. Bandwidths come from Silverman's rule, the closed-form
//! stand-in for MISE minimization under approximate Gaussianity. Intervals
//! are conditional column quantiles with equal tails, evaluated on a
//! uniform grid over the sample range plus a bandwidth margin.
//!
//! KDE operates in MW (denormalized) space so intervals are directly
//! reportable.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KdeError {
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("zero spread in samples; jitter the data or supply a fixed bandwidth")]
    ZeroSpread,
    #[error("no density support at this prediction")]
    NoSupport,
    #[error("coverage level must be in (0, 1], got {0}")]
    BadLevel(f64),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

const SQRT_2PI: f64 = 2.5066282746310002;

/// Standard Gaussian kernel: e^{−z²/2}/√(2π).
pub fn gaussian_kernel(z: f64) -> f64 {
    (-z * z / 2.0).exp() / SQRT_2PI
}

/// 1-D kernel density estimate at `x`: (1/(N·h)) Σ Ker((x−x_i)/h).
pub fn estimate_1d(samples: &[f64], h: f64, x: f64) -> Result<f64, KdeError> {
    if h <= 0.0 {
        return Err(KdeError::NonPositiveBandwidth(h));
    }
    if samples.is_empty() {
        return Err(KdeError::TooFewSamples { need: 1, got: 0 });
    }
    let sum: f64 = samples.iter().map(|&xi| gaussian_kernel((x - xi) / h)).sum();
    Ok(sum / (samples.len() as f64 * h))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    // linear interpolation between order statistics (type 7)
    let n = sorted.len();
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Silverman's rule: h = 1.06 · min(σ, IQR/1.34) · N^{−1/5}.
pub fn select_bandwidth(samples: &[f64]) -> Result<f64, KdeError> {
    if samples.len() < 2 {
        return Err(KdeError::TooFewSamples {
            need: 2,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    let sigma = var.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 {
        sigma.min(iqr / 1.34)
    } else {
        sigma
    };
    if spread <= 0.0 {
        return Err(KdeError::ZeroSpread);
    }
    Ok(1.06 * spread * n.powf(-0.2))
}

/// Stored (predicted, actual) pairs with per-dimension bandwidths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityModel {
    pub samples: Vec<(f64, f64)>,
    pub h_pred: f64,
    pub h_actual: f64,
}

impl DensityModel {
    /// Builds a model with Silverman bandwidths per dimension.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, KdeError> {
        if samples.len() < 2 {
            return Err(KdeError::TooFewSamples {
                need: 2,
                got: samples.len(),
            });
        }
        let preds: Vec<f64> = samples.iter().map(|p| p.0).collect();
        let actuals: Vec<f64> = samples.iter().map(|p| p.1).collect();
        let h_pred = select_bandwidth(&preds)?;
        let h_actual = select_bandwidth(&actuals)?;
        Ok(DensityModel {
            samples,
            h_pred,
            h_actual,
        })
    }

    pub fn with_bandwidths(
        samples: Vec<(f64, f64)>,
        h_pred: f64,
        h_actual: f64,
    ) -> Result<Self, KdeError> {
        if h_pred <= 0.0 {
            return Err(KdeError::NonPositiveBandwidth(h_pred));
        }
        if h_actual <= 0.0 {
            return Err(KdeError::NonPositiveBandwidth(h_actual));
        }
        if samples.len() < 2 {
            return Err(KdeError::TooFewSamples {
                need: 2,
                got: samples.len(),
            });
        }
        Ok(DensityModel {
            samples,
            h_pred,
            h_actual,
        })
    }

    /// Product-kernel joint density at one point.
    pub fn density_at(&self, pred: f64, actual: f64) -> f64 {
        let n = self.samples.len() as f64;
        let mut sum = 0.0;
        for &(p, a) in &self.samples {
            sum += gaussian_kernel((pred - p) / self.h_pred)
                * gaussian_kernel((actual - a) / self.h_actual);
        }
        sum / (n * self.h_pred * self.h_actual)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_pred: usize,
    pub n_actual: usize,
    /// Bandwidth multiples the grid extends beyond the sample range.
    pub margin_bandwidths: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_pred: 256,
            n_actual: 256,
            margin_bandwidths: 5.0,
        }
    }
}

/// Joint density evaluated on a uniform (pred × actual) grid.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub pred_axis: Vec<f64>,
    pub actual_axis: Vec<f64>,
    /// Row-major [pred][actual].
    pub density: Vec<f64>,
}

fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
    let step = (max - min) / (n - 1) as f64;
    (0..n).map(|i| min + step * i as f64).collect()
}

/// Evaluates the joint PDF at every grid node.
pub fn estimate_joint(model: &DensityModel, spec: &GridSpec) -> DensityGrid {
    let pmin = model.samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let pmax = model.samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let amin = model.samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let amax = model.samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let pm = spec.margin_bandwidths * model.h_pred;
    let am = spec.margin_bandwidths * model.h_actual;
    let pred_axis = axis(pmin - pm, pmax + pm, spec.n_pred);
    let actual_axis = axis(amin - am, amax + am, spec.n_actual);

    // Separable kernel: precompute per-axis kernel tables, then combine.
    let n = model.samples.len() as f64;
    let norm = 1.0 / (n * model.h_pred * model.h_actual);
    let kp: Vec<Vec<f64>> = pred_axis
        .iter()
        .map(|&x| {
            model
                .samples
                .iter()
                .map(|s| gaussian_kernel((x - s.0) / model.h_pred))
                .collect()
        })
        .collect();
    let ka: Vec<Vec<f64>> = actual_axis
        .iter()
        .map(|&y| {
            model
                .samples
                .iter()
                .map(|s| gaussian_kernel((y - s.1) / model.h_actual))
                .collect()
        })
        .collect();
    let mut density = vec![0.0; spec.n_pred * spec.n_actual];
    for (pi, kpi) in kp.iter().enumerate() {
        for (ai, kai) in ka.iter().enumerate() {
            let sum: f64 = kpi.iter().zip(kai).map(|(a, b)| a * b).sum();
            density[pi * spec.n_actual + ai] = norm * sum;
        }
    }
    DensityGrid {
        pred_axis,
        actual_axis,
        density,
    }
}

impl DensityGrid {
    pub fn cell_area(&self) -> f64 {
        let dp = self.pred_axis[1] - self.pred_axis[0];
        let da = self.actual_axis[1] - self.actual_axis[0];
        dp * da
    }

    /// Riemann-sum total mass; ≈ 1 on adequately wide grids.
    pub fn integrated_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_area()
    }

    pub fn nearest_pred_column(&self, predicted: f64) -> usize {
        let min = self.pred_axis[0];
        let step = self.pred_axis[1] - self.pred_axis[0];
        let idx = ((predicted - min) / step).round();
        (idx.max(0.0) as usize).min(self.pred_axis.len() - 1)
    }

    pub fn column(&self, pi: usize) -> &[f64] {
        &self.density[pi * self.actual_axis.len()..(pi + 1) * self.actual_axis.len()]
    }
}

/// Per-horizon prediction interval in MW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

/// Central [α/2, 1−α/2] quantile interval of the conditional density of the
/// actual value given the grid column nearest `predicted`.
pub fn conditional_interval(
    grid: &DensityGrid,
    predicted: f64,
    level: f64,
) -> Result<Interval, KdeError> {
    if !(0.0 < level && level <= 1.0) {
        return Err(KdeError::BadLevel(level));
    }
    let column = grid.column(grid.nearest_pred_column(predicted));
    let axis = &grid.actual_axis;
    // trapezoidal CDF over the column
    let mut cdf = vec![0.0; axis.len()];
    for i in 1..axis.len() {
        let da = axis[i] - axis[i - 1];
        cdf[i] = cdf[i - 1] + 0.5 * (column[i] + column[i - 1]) * da;
    }
    let total = cdf[axis.len() - 1];
    if total <= 0.0 {
        return Err(KdeError::NoSupport);
    }
    let invert = |q: f64| -> f64 {
        let target = q * total;
        if target <= 0.0 {
            return axis[0];
        }
        for i in 1..axis.len() {
            if cdf[i] >= target {
                let span = cdf[i] - cdf[i - 1];
                if span <= 0.0 {
                    return axis[i];
                }
                let frac = (target - cdf[i - 1]) / span;
                return axis[i - 1] + frac * (axis[i] - axis[i - 1]);
            }
        }
        axis[axis.len() - 1]
    };
    let alpha = (1.0 - level) / 2.0;
    Ok(Interval {
        lower: invert(alpha),
        upper: invert(1.0 - alpha),
        level,
    })
}

/// Writes the long-format density CSV: `pred_mw,actual_mw,density`.
pub fn export_density(grid: &DensityGrid, path: &Path) -> Result<(), KdeError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "pred_mw,actual_mw,density")?;
    for (pi, &p) in grid.pred_axis.iter().enumerate() {
        for (ai, &a) in grid.actual_axis.iter().enumerate() {
            writeln!(f, "{p},{a},{}", grid.density[pi * grid.actual_axis.len() + ai])?;
        }
    }
    Ok(())
}
