//! End-to-end experiment orchestration: data preparation, model training,
//! rolling multi-horizon forecasts, density-based intervals, metrics, and
//! run-directory persistence. Also hosts the depth sweep and the multi-model
//! comparison.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    self, train_cart, train_cnn, train_elm, train_gbdt, train_mlp, CartConfig, CnnModel,
    ElmConfig, ElmModel, GbdtConfig, GbdtModel, MlpModel, NetConfig, Persistence, RegressionTree,
};
use crate::dataset::{
    self, filter_daylight, load_csv, parse_time_of_day, DatasetError, PreparedDataset, RawSeries,
};
use crate::kde::{
    conditional_interval, estimate_joint, export_density, DensityGrid, DensityModel, GridSpec,
    Interval, KdeError,
};
use crate::metrics::{improvement, IntervalMetrics, MetricError, PointMetrics};
use crate::recurrent::{bptt_train, CellKind, InputMapping, StackConfig, StackModel};
use crate::synth::{self, SynthConfig};
use crate::tensor::checkpoint::{load_params, save_params};
use crate::tensor::TensorError;
use crate::training::{Forecaster, TapeModel, TrainConfig, TrainError, TrainHistory};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("training: {0}")]
    Train(#[from] TrainError),
    #[error("tensor: {0}")]
    Tensor(#[from] TensorError),
    #[error("elm: {0}")]
    Elm(#[from] baselines::elm::ElmError),
    #[error("kde: {0}")]
    Kde(#[from] KdeError),
    #[error("metrics: {0}")]
    Metric(#[from] MetricError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which forecaster to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    ConvLstm,
    Lstm,
    Cnn,
    Mlp,
    Elm,
    Cart,
    Gbdt,
    Persistence,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::ConvLstm => "conv_lstm",
            ModelKind::Lstm => "lstm",
            ModelKind::Cnn => "cnn",
            ModelKind::Mlp => "mlp",
            ModelKind::Elm => "elm",
            ModelKind::Cart => "cart",
            ModelKind::Gbdt => "gbdt",
            ModelKind::Persistence => "persistence",
        }
    }

    pub fn parse(s: &str) -> Result<Self, PipelineError> {
        match s {
            "conv_lstm" => Ok(ModelKind::ConvLstm),
            "lstm" => Ok(ModelKind::Lstm),
            "cnn" => Ok(ModelKind::Cnn),
            "mlp" => Ok(ModelKind::Mlp),
            "elm" => Ok(ModelKind::Elm),
            "cart" => Ok(ModelKind::Cart),
            "gbdt" => Ok(ModelKind::Gbdt),
            "persistence" => Ok(ModelKind::Persistence),
            "svr" => Err(PipelineError::Config("svr: not implemented".into())),
            other => Err(PipelineError::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

fn default_capacity() -> f64 {
    100.0
}
fn default_synth_days() -> usize {
    60
}
fn default_synth_samples() -> usize {
    96
}
fn default_seed() -> u64 {
    42
}
fn default_noise() -> f64 {
    0.05
}

/// Where the raw series comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum DataConfig {
    /// Deterministic generated series; good for tests and demos.
    Synth {
        #[serde(default = "default_synth_days")]
        days: usize,
        #[serde(default = "default_synth_samples")]
        samples_per_day: usize,
        #[serde(default = "default_capacity")]
        capacity_mw: f64,
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_noise")]
        noise_fraction: f64,
    },
    /// CSV with header `timestamp,power_mw`.
    Csv {
        path: PathBuf,
        capacity_mw: f64,
        /// Inclusive start of the daylight filter, e.g. "07:30".
        daylight_start: Option<String>,
        /// Exclusive end of the daylight filter.
        daylight_end: Option<String>,
    },
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Synth {
            days: default_synth_days(),
            samples_per_day: default_synth_samples(),
            capacity_mw: default_capacity(),
            seed: default_seed(),
            noise_fraction: default_noise(),
        }
    }
}

fn default_window_length() -> usize {
    dataset::DEFAULT_WINDOW_LENGTH
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_max_horizon() -> usize {
    4
}
fn default_level() -> f64 {
    0.95
}

/// Full experiment description; serializes to/from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default = "default_window_length")]
    pub window_length: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub stack: StackSettings,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default = "default_max_horizon")]
    pub max_horizon: usize,
    #[serde(default = "default_level")]
    pub interval_level: f64,
    #[serde(default)]
    pub grid: GridSettings,
}

/// Subset of [`StackConfig`] the user controls; window length and seed come
/// from the surrounding experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSettings {
    pub num_layers: usize,
    pub hidden_size: usize,
    pub kernel_width: usize,
    #[serde(default)]
    pub mapping: InputMapping,
}

impl Default for StackSettings {
    fn default() -> Self {
        let d = StackConfig::default();
        StackSettings {
            num_layers: d.num_layers,
            hidden_size: d.hidden_size,
            kernel_width: d.kernel_width,
            mapping: d.mapping,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSettings {
    pub n_pred: usize,
    pub n_actual: usize,
    pub margin_bandwidths: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        let d = GridSpec::default();
        GridSettings {
            n_pred: d.n_pred,
            n_actual: d.n_actual,
            margin_bandwidths: d.margin_bandwidths,
        }
    }
}

impl From<GridSettings> for GridSpec {
    fn from(g: GridSettings) -> GridSpec {
        GridSpec {
            n_pred: g.n_pred,
            n_actual: g.n_actual,
            margin_bandwidths: g.margin_bandwidths,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataConfig::default(),
            window_length: default_window_length(),
            train_fraction: default_train_fraction(),
            model: ModelKind::default(),
            stack: StackSettings::default(),
            training: TrainConfig::default(),
            max_horizon: default_max_horizon(),
            interval_level: default_level(),
            grid: GridSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, PipelineError> {
        toml::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_horizon == 0 {
            return Err(PipelineError::Config("max_horizon must be ≥ 1".into()));
        }
        if !(0.0 < self.interval_level && self.interval_level <= 1.0) {
            return Err(PipelineError::Config(format!(
                "interval_level must be in (0, 1], got {}",
                self.interval_level
            )));
        }
        Ok(())
    }

    fn stack_config(&self) -> StackConfig {
        StackConfig {
            cell_kind: if self.model == ModelKind::Lstm {
                CellKind::Lstm
            } else {
                CellKind::ConvLstm
            },
            num_layers: self.stack.num_layers,
            hidden_size: self.stack.hidden_size,
            kernel_width: self.stack.kernel_width,
            window_length: self.window_length,
            mapping: self.stack.mapping,
            seed: self.training.seed,
        }
    }

    fn net_config(&self) -> NetConfig {
        NetConfig {
            window_length: self.window_length,
            hidden_size: self.stack.hidden_size,
            kernel_width: self.stack.kernel_width,
            seed: self.training.seed,
        }
    }
}

/// Loads (or generates) the raw series per the data section of the config.
pub fn load_data(cfg: &DataConfig) -> Result<RawSeries, PipelineError> {
    match cfg {
        DataConfig::Synth {
            days,
            samples_per_day,
            capacity_mw,
            seed,
            noise_fraction,
        } => Ok(synth::generate(&SynthConfig {
            days: *days,
            samples_per_day: *samples_per_day,
            capacity_mw: *capacity_mw,
            seed: *seed,
            noise_fraction: *noise_fraction,
            ..SynthConfig::default()
        })),
        DataConfig::Csv {
            path,
            capacity_mw,
            daylight_start,
            daylight_end,
        } => {
            let series = load_csv(path, *capacity_mw)?;
            match (daylight_start, daylight_end) {
                (Some(s), Some(e)) => {
                    let start = parse_time_of_day(s)?;
                    let end = parse_time_of_day(e)?;
                    Ok(filter_daylight(&series, start, end)?)
                }
                (None, None) => Ok(series),
                _ => Err(PipelineError::Config(
                    "daylight_start and daylight_end must be given together".into(),
                )),
            }
        }
    }
}

/// Prepares the dataset per the config (load + window + split).
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedDataset, PipelineError> {
    let series = load_data(&cfg.data)?;
    Ok(dataset::prepare(&series, cfg.window_length, cfg.train_fraction)?)
}

/// A trained forecaster of any supported kind.
pub enum TrainedModel {
    Stack(StackModel),
    Cnn(CnnModel),
    Mlp(MlpModel),
    Elm(ElmModel),
    Cart(RegressionTree),
    Gbdt(GbdtModel),
    Persistence(Persistence),
}

impl TrainedModel {
    pub fn predict_norm(&self, window: &[f64]) -> Result<f64, TensorError> {
        match self {
            TrainedModel::Stack(m) => m.predict_norm(window),
            TrainedModel::Cnn(m) => m.predict_norm(window),
            TrainedModel::Mlp(m) => m.predict_norm(window),
            TrainedModel::Elm(m) => m.predict_norm(window),
            TrainedModel::Cart(m) => m.predict_norm(window),
            TrainedModel::Gbdt(m) => m.predict_norm(window),
            TrainedModel::Persistence(m) => m.predict_norm(window),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TrainedModel::Stack(m) => match m.config.cell_kind {
                CellKind::ConvLstm => "conv_lstm",
                CellKind::Lstm => "lstm",
            },
            TrainedModel::Cnn(_) => "cnn",
            TrainedModel::Mlp(_) => "mlp",
            TrainedModel::Elm(_) => "elm",
            TrainedModel::Cart(_) => "cart",
            TrainedModel::Gbdt(_) => "gbdt",
            TrainedModel::Persistence(_) => "persistence",
        }
    }
}

impl Forecaster for TrainedModel {
    fn predict_norm(&self, window: &[f64]) -> Result<f64, TensorError> {
        TrainedModel::predict_norm(self, window)
    }
}

/// Trains the configured model on the training split. Gradient-free models
/// return no loss history.
pub fn train_model(
    cfg: &ExperimentConfig,
    dataset: &PreparedDataset,
) -> Result<(TrainedModel, Option<TrainHistory>), PipelineError> {
    match cfg.model {
        ModelKind::ConvLstm | ModelKind::Lstm => {
            let mut model = StackModel::new(cfg.stack_config());
            let history = bptt_train(&mut model, dataset, &cfg.training)?;
            Ok((TrainedModel::Stack(model), Some(history)))
        }
        ModelKind::Cnn => {
            let mut model = CnnModel::new(cfg.net_config());
            let history = train_cnn(&mut model, dataset, &cfg.training)?;
            Ok((TrainedModel::Cnn(model), Some(history)))
        }
        ModelKind::Mlp => {
            let mut model = MlpModel::new(cfg.net_config());
            let history = train_mlp(&mut model, dataset, &cfg.training)?;
            Ok((TrainedModel::Mlp(model), Some(history)))
        }
        ModelKind::Elm => {
            let elm_cfg = ElmConfig {
                hidden_size: cfg.stack.hidden_size.max(20) * 10,
                seed: cfg.training.seed,
                ..ElmConfig::default()
            };
            Ok((TrainedModel::Elm(train_elm(dataset, &elm_cfg)?), None))
        }
        ModelKind::Cart => Ok((
            TrainedModel::Cart(train_cart(dataset, &CartConfig::default())),
            None,
        )),
        ModelKind::Gbdt => Ok((
            TrainedModel::Gbdt(train_gbdt(dataset, &GbdtConfig::default())),
            None,
        )),
        ModelKind::Persistence => Ok((TrainedModel::Persistence(Persistence), None)),
    }
}

/// Per-horizon rolling forecast series, in MW.
#[derive(Debug, Clone)]
pub struct HorizonSeries {
    pub horizon: usize,
    pub timestamps: Vec<chrono::NaiveDateTime>,
    pub pred_mw: Vec<f64>,
    pub actual_mw: Vec<f64>,
}

/// Rolls one trained one-step model forward autoregressively: each horizon
/// beyond the first feeds the model's own previous prediction back into the
/// window. Only observed values at or before the forecast origin enter the
/// input, so no future information leaks.
pub fn rolling_forecast(
    model: &dyn Forecaster,
    dataset: &PreparedDataset,
    start: usize,
    end: usize,
    max_horizon: usize,
) -> Result<Vec<HorizonSeries>, PipelineError> {
    let mut out: Vec<HorizonSeries> = (1..=max_horizon)
        .map(|h| HorizonSeries {
            horizon: h,
            timestamps: Vec::new(),
            pred_mw: Vec::new(),
            actual_mw: Vec::new(),
        })
        .collect();
    for i in start..end {
        let mut window = dataset.window(i).to_vec();
        for h in 1..=max_horizon {
            let p = model.predict_norm(&window)?;
            let series = &mut out[h - 1];
            series.timestamps.push(dataset.target_time(i, h));
            series.pred_mw.push(dataset.denormalize(p));
            series.actual_mw.push(dataset.denormalize(dataset.target(i, h)));
            window.rotate_left(1);
            *window.last_mut().unwrap() = p;
        }
    }
    Ok(out)
}

/// Fits one joint-density model per horizon from rolling forecasts over the
/// training windows (in MW). Test data never enters the density fit.
pub fn fit_interval_models(
    model: &dyn Forecaster,
    dataset: &PreparedDataset,
    max_horizon: usize,
) -> Result<Vec<DensityModel>, PipelineError> {
    let end = dataset.split_index.saturating_sub(max_horizon - 1);
    if end < 2 {
        return Err(PipelineError::Config(
            "training split too small for a density fit".into(),
        ));
    }
    let series = rolling_forecast(model, dataset, 0, end, max_horizon)?;
    series
        .iter()
        .map(|s| {
            let pairs: Vec<(f64, f64)> = s
                .pred_mw
                .iter()
                .zip(&s.actual_mw)
                .map(|(&p, &a)| (p, a))
                .collect();
            Ok(DensityModel::new(pairs)?)
        })
        .collect()
}

/// One horizon's evaluated results.
#[derive(Debug, Clone)]
pub struct HorizonReport {
    pub horizon: usize,
    pub point: PointMetrics,
    pub interval: IntervalMetrics,
    pub series: HorizonSeries,
    pub intervals: Vec<Interval>,
}

/// Everything `run_experiment` produces in memory.
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub model: TrainedModel,
    pub history: Option<TrainHistory>,
    pub horizons: Vec<HorizonReport>,
    pub densities: Vec<(DensityModel, DensityGrid)>,
}

/// Trains, forecasts the test split at every horizon, fits density-based
/// intervals, and computes the metric battery. If `out_dir` is given the
/// run artifacts are written there.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport, PipelineError> {
    cfg.validate()?;
    let dataset = prepare_data(cfg)?;
    let (model, history) = train_model(cfg, &dataset)?;
    evaluate_trained(cfg, &dataset, model, history, out_dir)
}

/// The evaluation half of [`run_experiment`], reusable with an already
/// trained model (e.g. one loaded from disk).
pub fn evaluate_trained(
    cfg: &ExperimentConfig,
    dataset: &PreparedDataset,
    model: TrainedModel,
    history: Option<TrainHistory>,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport, PipelineError> {
    let density_models = fit_interval_models(&model, dataset, cfg.max_horizon)?;
    let spec: GridSpec = cfg.grid.into();
    let densities: Vec<(DensityModel, DensityGrid)> = density_models
        .into_iter()
        .map(|m| {
            let g = estimate_joint(&m, &spec);
            (m, g)
        })
        .collect();

    let end = dataset.last_window_for_horizon(cfg.max_horizon);
    if dataset.split_index >= end {
        return Err(PipelineError::Config(
            "test split too small for the requested horizon".into(),
        ));
    }
    let series = rolling_forecast(&model, dataset, dataset.split_index, end, cfg.max_horizon)?;

    let mut horizons = Vec::with_capacity(cfg.max_horizon);
    for s in series {
        let grid = &densities[s.horizon - 1].1;
        let intervals: Vec<Interval> = s
            .pred_mw
            .iter()
            .map(|&p| conditional_interval(grid, p, cfg.interval_level))
            .collect::<Result<_, _>>()?;
        let point = PointMetrics::compute(&s.pred_mw, &s.actual_mw, dataset.capacity_mw)?;
        let interval = IntervalMetrics::compute(&intervals, &s.actual_mw)?;
        horizons.push(HorizonReport {
            horizon: s.horizon,
            point,
            interval,
            series: s,
            intervals,
        });
    }

    let report = ExperimentReport {
        config: cfg.clone(),
        model,
        history,
        horizons,
        densities,
    };
    if let Some(dir) = out_dir {
        persist_run(&report, dir)?;
    }
    Ok(report)
}

fn persist_run(report: &ExperimentReport, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    // TOML text under the fixed snapshot name expected by downstream tooling
    std::fs::write(dir.join("config.snapshot"), report.config.to_toml_string())?;
    save_model(&report.model, dir)?;

    if let Some(h) = &report.history {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("loss_history.csv"))?);
        writeln!(f, "epoch,train_loss,validation_loss")?;
        for (i, (t, v)) in h.train_loss.iter().zip(&h.validation_loss).enumerate() {
            writeln!(f, "{},{t},{v}", i + 1)?;
        }
    }

    let mut mf = std::io::BufWriter::new(std::fs::File::create(dir.join("metrics.csv"))?);
    writeln!(mf, "horizon,mae,mare_pct,rmse,pearson,r2,picp_pct,piaw")?;
    for h in &report.horizons {
        writeln!(
            mf,
            "{},{},{},{},{},{},{},{}",
            h.horizon,
            h.point.mae,
            h.point.mare_pct,
            h.point.rmse,
            h.point.pearson,
            h.point.r2,
            h.interval.picp_pct,
            h.interval.piaw
        )?;
    }

    for h in &report.horizons {
        let path = dir.join(format!("forecast_h{}.csv", h.horizon));
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "timestamp,actual_mw,pred_mw,lower_mw,upper_mw")?;
        for i in 0..h.series.pred_mw.len() {
            writeln!(
                f,
                "{},{},{},{},{}",
                h.series.timestamps[i].format("%Y-%m-%dT%H:%M:%S"),
                h.series.actual_mw[i],
                h.series.pred_mw[i],
                h.intervals[i].lower,
                h.intervals[i].upper
            )?;
        }
        export_density(
            &report.densities[h.horizon - 1].1,
            &dir.join(format!("density_h{}.csv", h.horizon)),
        )?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    kind: ModelKind,
    stack: Option<StackConfig>,
    net: Option<NetConfig>,
}

/// Saves a trained model into `dir`: `model_meta.json` plus either a binary
/// parameter checkpoint (`model.ckpt`) or a JSON body (`model.json`).
pub fn save_model(model: &TrainedModel, dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    let meta = match model {
        TrainedModel::Stack(m) => ModelMeta {
            kind: ModelKind::parse(model.kind_name())?,
            stack: Some(m.config.clone()),
            net: None,
        },
        TrainedModel::Cnn(m) => ModelMeta {
            kind: ModelKind::Cnn,
            stack: None,
            net: Some(m.config.clone()),
        },
        TrainedModel::Mlp(m) => ModelMeta {
            kind: ModelKind::Mlp,
            stack: None,
            net: Some(m.config.clone()),
        },
        _ => ModelMeta {
            kind: ModelKind::parse(model.kind_name())?,
            stack: None,
            net: None,
        },
    };
    std::fs::write(dir.join("model_meta.json"), serde_json::to_vec_pretty(&meta)?)?;
    match model {
        TrainedModel::Stack(m) => save_params(m.params(), &dir.join("model.ckpt"))?,
        TrainedModel::Cnn(m) => save_params(m.params(), &dir.join("model.ckpt"))?,
        TrainedModel::Mlp(m) => save_params(m.params(), &dir.join("model.ckpt"))?,
        TrainedModel::Elm(m) => {
            std::fs::write(dir.join("model.json"), serde_json::to_vec(m)?)?
        }
        TrainedModel::Cart(m) => {
            std::fs::write(dir.join("model.json"), serde_json::to_vec(m)?)?
        }
        TrainedModel::Gbdt(m) => {
            std::fs::write(dir.join("model.json"), serde_json::to_vec(m)?)?
        }
        TrainedModel::Persistence(_) => {}
    }
    Ok(())
}

/// Inverse of [`save_model`].
pub fn load_model(dir: &Path) -> Result<TrainedModel, PipelineError> {
    let meta: ModelMeta =
        serde_json::from_slice(&std::fs::read(dir.join("model_meta.json"))?)?;
    let json = |name: &str| -> Result<Vec<u8>, PipelineError> {
        Ok(std::fs::read(dir.join(name))?)
    };
    Ok(match meta.kind {
        ModelKind::ConvLstm | ModelKind::Lstm => {
            let cfg = meta.stack.ok_or_else(|| {
                PipelineError::Config("stack model meta missing stack config".into())
            })?;
            let params = load_params(&dir.join("model.ckpt"))?;
            TrainedModel::Stack(StackModel::with_params(cfg, params)?)
        }
        ModelKind::Cnn => {
            let cfg = meta
                .net
                .ok_or_else(|| PipelineError::Config("cnn meta missing net config".into()))?;
            let params = load_params(&dir.join("model.ckpt"))?;
            TrainedModel::Cnn(CnnModel::with_params(cfg, params)?)
        }
        ModelKind::Mlp => {
            let cfg = meta
                .net
                .ok_or_else(|| PipelineError::Config("mlp meta missing net config".into()))?;
            let params = load_params(&dir.join("model.ckpt"))?;
            TrainedModel::Mlp(MlpModel::with_params(cfg, params)?)
        }
        ModelKind::Elm => TrainedModel::Elm(serde_json::from_slice(&json("model.json")?)?),
        ModelKind::Cart => TrainedModel::Cart(serde_json::from_slice(&json("model.json")?)?),
        ModelKind::Gbdt => TrainedModel::Gbdt(serde_json::from_slice(&json("model.json")?)?),
        ModelKind::Persistence => TrainedModel::Persistence(Persistence),
    })
}

/// Forecast CSV contents for one horizon, as persisted by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct StoredForecast {
    pub horizon: usize,
    pub actual_mw: Vec<f64>,
    pub pred_mw: Vec<f64>,
    pub intervals: Vec<Interval>,
}

/// Reads one `forecast_h{k}.csv` back.
pub fn read_forecast_csv(path: &Path, horizon: usize, level: f64) -> Result<StoredForecast, PipelineError> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "timestamp,actual_mw,pred_mw,lower_mw,upper_mw" {
        return Err(PipelineError::Config(format!(
            "unexpected forecast header {header:?} in {}",
            path.display()
        )));
    }
    let mut out = StoredForecast {
        horizon,
        actual_mw: Vec::new(),
        pred_mw: Vec::new(),
        intervals: Vec::new(),
    };
    for (lineno, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(PipelineError::Config(format!(
                "line {}: expected 5 columns",
                lineno + 2
            )));
        }
        let num = |s: &str| -> Result<f64, PipelineError> {
            s.parse().map_err(|_| {
                PipelineError::Config(format!("line {}: bad number {s:?}", lineno + 2))
            })
        };
        out.actual_mw.push(num(cols[1])?);
        out.pred_mw.push(num(cols[2])?);
        out.intervals.push(Interval {
            lower: num(cols[3])?,
            upper: num(cols[4])?,
            level,
        });
    }
    Ok(out)
}

/// Recomputes the full metric battery from the forecast CSVs in a run
/// directory. Uses the persisted config snapshot for capacity and level.
pub fn evaluate_run_dir(
    dir: &Path,
) -> Result<Vec<(usize, PointMetrics, IntervalMetrics)>, PipelineError> {
    let cfg = ExperimentConfig::from_toml_str(&std::fs::read_to_string(
        dir.join("config.snapshot"),
    )?)?;
    let capacity = match cfg.data {
        DataConfig::Synth { capacity_mw, .. } => capacity_mw,
        DataConfig::Csv { capacity_mw, .. } => capacity_mw,
    };
    let mut rows = Vec::new();
    for h in 1..=cfg.max_horizon {
        let path = dir.join(format!("forecast_h{h}.csv"));
        if !path.exists() {
            break;
        }
        let stored = read_forecast_csv(&path, h, cfg.interval_level)?;
        let point = PointMetrics::compute(&stored.pred_mw, &stored.actual_mw, capacity)?;
        let interval = IntervalMetrics::compute(&stored.intervals, &stored.actual_mw)?;
        rows.push((h, point, interval));
    }
    if rows.is_empty() {
        return Err(PipelineError::Config(format!(
            "no forecast_h*.csv files in {}",
            dir.display()
        )));
    }
    Ok(rows)
}

/// One depth-sweep row: metrics at horizon 1 for a given stack depth.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub depth: usize,
    pub point: PointMetrics,
}

pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub best_depth: usize,
}

/// Trains the recurrent stack at each depth (other hyperparameters held
/// fixed; seed offset by depth) and ranks by horizon-1 MAE.
pub fn depth_sweep(
    base: &ExperimentConfig,
    depths: &[usize],
) -> Result<SweepReport, PipelineError> {
    if depths.is_empty() {
        return Err(PipelineError::Config("empty depth list".into()));
    }
    if !matches!(base.model, ModelKind::ConvLstm | ModelKind::Lstm) {
        return Err(PipelineError::Config(
            "depth sweep applies to the recurrent stack models".into(),
        ));
    }
    let mut rows = Vec::with_capacity(depths.len());
    for &depth in depths {
        let mut cfg = base.clone();
        cfg.stack.num_layers = depth;
        cfg.training.seed = base.training.seed + depth as u64;
        let report = run_experiment(&cfg, None)?;
        rows.push(SweepRow {
            depth,
            point: report.horizons[0].point,
        });
    }
    let best_depth = rows
        .iter()
        .min_by(|a, b| a.point.mae.total_cmp(&b.point.mae))
        .unwrap()
        .depth;
    Ok(SweepReport { rows, best_depth })
}

/// One model's row in a comparison.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub model: ModelKind,
    pub point: PointMetrics,
    /// MAE improvement of the reference (first) model over this one, in
    /// percent; `None` for the reference row itself.
    pub reference_gain_pct: Option<f64>,
}

pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

/// Trains each model kind on the identical dataset/split and reports
/// horizon-1 test metrics plus the reference model's relative gain.
pub fn compare_models(
    base: &ExperimentConfig,
    kinds: &[ModelKind],
) -> Result<CompareReport, PipelineError> {
    if kinds.len() < 2 {
        return Err(PipelineError::Config(
            "comparison needs at least two models".into(),
        ));
    }
    let dataset = prepare_data(base)?;
    let mut rows = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let mut cfg = base.clone();
        cfg.model = kind;
        let (model, _) = train_model(&cfg, &dataset)?;
        let end = dataset.last_window_for_horizon(1);
        let series = rolling_forecast(&model, &dataset, dataset.split_index, end, 1)?;
        let s = &series[0];
        let point = PointMetrics::compute(&s.pred_mw, &s.actual_mw, dataset.capacity_mw)?;
        rows.push(CompareRow {
            model: kind,
            point,
            reference_gain_pct: None,
        });
    }
    let ref_mae = rows[0].point.mae;
    for row in rows.iter_mut().skip(1) {
        row.reference_gain_pct = Some(improvement(row.point.mae, ref_mae)?);
    }
    Ok(CompareReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(model: ModelKind) -> ExperimentConfig {
        ExperimentConfig {
            data: DataConfig::Synth {
                days: 6,
                samples_per_day: 24,
                capacity_mw: 50.0,
                seed: 9,
                noise_fraction: 0.05,
            },
            window_length: 12,
            train_fraction: 0.8,
            model,
            stack: StackSettings {
                num_layers: 1,
                hidden_size: 4,
                kernel_width: 3,
                mapping: InputMapping::TimeSequence,
            },
            training: TrainConfig {
                epochs: 2,
                ..TrainConfig::default()
            },
            max_horizon: 2,
            interval_level: 0.95,
            grid: GridSettings {
                n_pred: 64,
                n_actual: 64,
                margin_bandwidths: 5.0,
            },
        }
    }

    #[test]
    fn config_toml_round_trip() {
        let cfg = tiny_config(ModelKind::Elm);
        let text = cfg.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.window_length, 12);
        assert_eq!(back.model, ModelKind::Elm);
        assert_eq!(back.max_horizon, 2);
    }

    #[test]
    fn config_defaults_fill_in() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.window_length, dataset::DEFAULT_WINDOW_LENGTH);
        assert_eq!(cfg.model, ModelKind::ConvLstm);
        assert_eq!(cfg.max_horizon, 4);
        assert!((cfg.interval_level - 0.95).abs() < 1e-12);
    }

    #[test]
    fn config_rejects_unknown_field() {
        assert!(ExperimentConfig::from_toml_str("windw_length = 3").is_err());
    }

    #[test]
    fn default_struct_matches_empty_toml() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(a.to_toml_string(), b.to_toml_string());
    }

    #[test]
    fn rolling_forecast_matches_hand_trace() {
        // persistence model: prediction always equals the window's last
        // value, so every horizon repeats it; trace two origins by hand
        let cfg = tiny_config(ModelKind::Persistence);
        let dataset = prepare_data(&cfg).unwrap();
        let out = rolling_forecast(
            &Persistence,
            &dataset,
            dataset.split_index,
            dataset.split_index + 2,
            2,
        )
        .unwrap();
        for h in 0..2 {
            assert_eq!(out[h].pred_mw.len(), 2);
            for (j, i) in (dataset.split_index..dataset.split_index + 2).enumerate() {
                let last = *dataset.window(i).last().unwrap();
                assert!((out[h].pred_mw[j] - dataset.denormalize(last)).abs() < 1e-12);
                assert!(
                    (out[h].actual_mw[j]
                        - dataset.denormalize(dataset.target(i, h + 1)))
                    .abs()
                        < 1e-12
                );
            }
        }
    }

    #[test]
    fn horizon_one_rolling_equals_direct_prediction() {
        let cfg = tiny_config(ModelKind::Elm);
        let dataset = prepare_data(&cfg).unwrap();
        let (model, _) = train_model(&cfg, &dataset).unwrap();
        let end = dataset.last_window_for_horizon(1);
        let out = rolling_forecast(&model, &dataset, dataset.split_index, end, 1).unwrap();
        for (j, i) in (dataset.split_index..end).enumerate() {
            let direct = dataset.denormalize(model.predict_norm(dataset.window(i)).unwrap());
            assert!((out[0].pred_mw[j] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_fit_excludes_test_windows() {
        // truncating the dataset after the training split must not change
        // the fitted densities
        let cfg = tiny_config(ModelKind::Persistence);
        let dataset = prepare_data(&cfg).unwrap();
        let models = fit_interval_models(&Persistence, &dataset, 2).unwrap();
        let end = dataset.split_index.saturating_sub(1);
        let series = rolling_forecast(&Persistence, &dataset, 0, end, 2).unwrap();
        for (m, s) in models.iter().zip(&series) {
            assert_eq!(m.samples.len(), s.pred_mw.len());
        }
    }

    #[test]
    fn run_experiment_produces_all_artifacts() {
        let cfg = tiny_config(ModelKind::Elm);
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&cfg, Some(dir.path())).unwrap();
        assert_eq!(report.horizons.len(), 2);
        for name in [
            "config.snapshot",
            "model_meta.json",
            "model.json",
            "metrics.csv",
            "forecast_h1.csv",
            "forecast_h2.csv",
            "density_h1.csv",
            "density_h2.csv",
        ] {
            assert!(dir.path().join(name).exists(), "missing {name}");
        }
        let fc = std::fs::read_to_string(dir.path().join("forecast_h1.csv")).unwrap();
        assert!(fc.starts_with("timestamp,actual_mw,pred_mw,lower_mw,upper_mw\n"));
        let mc = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert!(mc.starts_with("horizon,mae,mare_pct,rmse,pearson,r2,picp_pct,piaw\n"));
    }

    #[test]
    fn model_save_load_round_trip_stack() {
        let mut cfg = tiny_config(ModelKind::ConvLstm);
        cfg.training.epochs = 1;
        let dataset = prepare_data(&cfg).unwrap();
        let (model, _) = train_model(&cfg, &dataset).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        let loaded = load_model(dir.path()).unwrap();
        let w = dataset.window(0);
        assert_eq!(
            model.predict_norm(w).unwrap(),
            loaded.predict_norm(w).unwrap()
        );
    }

    #[test]
    fn model_save_load_round_trip_gbdt() {
        let cfg = tiny_config(ModelKind::Gbdt);
        let dataset = prepare_data(&cfg).unwrap();
        let (model, _) = train_model(&cfg, &dataset).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_model(&model, dir.path()).unwrap();
        let loaded = load_model(dir.path()).unwrap();
        let w = dataset.window(3);
        assert_eq!(
            model.predict_norm(w).unwrap(),
            loaded.predict_norm(w).unwrap()
        );
    }

    #[test]
    fn stored_metrics_recomputable_from_stored_series() {
        let cfg = tiny_config(ModelKind::Persistence);
        let dir = tempfile::tempdir().unwrap();
        let report = run_experiment(&cfg, Some(dir.path())).unwrap();
        let rows = evaluate_run_dir(dir.path()).unwrap();
        assert_eq!(rows.len(), report.horizons.len());
        for (row, h) in rows.iter().zip(&report.horizons) {
            assert_eq!(row.0, h.horizon);
            // CSV round trip goes through shortest-f64 formatting, which is lossless
            assert!((row.1.mae - h.point.mae).abs() < 1e-12);
            assert!((row.1.rmse - h.point.rmse).abs() < 1e-12);
            assert!((row.2.picp_pct - h.interval.picp_pct).abs() < 1e-12);
            assert!((row.2.piaw - h.interval.piaw).abs() < 1e-12);
        }
    }

    #[test]
    fn compare_requires_two_models() {
        let cfg = tiny_config(ModelKind::Elm);
        assert!(matches!(
            compare_models(&cfg, &[ModelKind::Elm]),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn compare_reports_reference_gain() {
        let cfg = tiny_config(ModelKind::Elm);
        let report = compare_models(&cfg, &[ModelKind::Elm, ModelKind::Persistence]).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[0].reference_gain_pct.is_none());
        assert!(report.rows[1].reference_gain_pct.is_some());
    }

    #[test]
    fn svr_is_rejected_with_clear_message() {
        let err = ModelKind::parse("svr").unwrap_err();
        assert!(err.to_string().contains("not implemented"));
    }
}
