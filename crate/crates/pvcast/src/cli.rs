//! Command-line surface over the pipeline.
//!
//! Configuration comes from one TOML file (`--config`, or the
//! `PVCAST_CONFIG` environment variable) with per-flag overrides; flags win.
//! Progress goes to stderr, machine-readable results go to files. Exit
//! codes: 0 success, 1 runtime failure, 2 usage error.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{self, PreparedDataset};
use crate::pipeline::{
    self, compare_models, depth_sweep, evaluate_run_dir, evaluate_trained, load_data, load_model,
    prepare_data, DataConfig, ExperimentConfig, ModelKind, PipelineError,
};

#[derive(Parser)]
#[command(name = "pvcast", version, about = "Probabilistic short-term PV power forecasting")]
pub struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true, env = "PVCAST_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Clone, Default)]
pub struct Overrides {
    /// Input CSV with header `timestamp,power_mw` (switches the data source).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Rated plant capacity in MW (required with --csv).
    #[arg(long)]
    pub capacity_mw: Option<f64>,
    /// Inclusive daylight filter start, e.g. 05:00.
    #[arg(long)]
    pub daylight_start: Option<String>,
    /// Exclusive daylight filter end, e.g. 20:00.
    #[arg(long)]
    pub daylight_end: Option<String>,
    /// Input window length in samples.
    #[arg(long)]
    pub window_length: Option<usize>,
    /// Chronological training fraction in (0, 1).
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Model kind: conv_lstm, lstm, cnn, mlp, elm, cart, gbdt, persistence.
    #[arg(long)]
    pub model: Option<String>,
    /// Training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recurrent stack depth.
    #[arg(long)]
    pub num_layers: Option<usize>,
    /// Hidden channels/units per layer.
    #[arg(long)]
    pub hidden_size: Option<usize>,
    /// Largest forecast horizon (rolling steps ahead).
    #[arg(long)]
    pub horizons: Option<usize>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Load, daylight-filter, window, and split the data; write a dataset cache.
    Prepare {
        /// Cache file to write.
        #[arg(long, default_value = "dataset.cache")]
        output: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train the configured model and save it with its loss history.
    Train {
        /// Directory for the model checkpoint and loss history.
        #[arg(long, default_value = "run")]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Roll a trained model over the test split and write per-horizon
    /// forecast, interval, and density files.
    Forecast {
        /// Directory holding a saved model (from `train`).
        #[arg(long)]
        model_dir: PathBuf,
        /// Directory for the forecast artifacts.
        #[arg(long, default_value = "run")]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Recompute the metric battery from persisted forecast CSVs.
    Evaluate {
        /// Run directory holding forecast_h{k}.csv and config.snapshot.
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Train the recurrent stack at several depths and rank them.
    Sweep {
        /// Comma-separated layer counts, e.g. 1,2,3,4.
        #[arg(long, value_delimiter = ',', required = true)]
        depths: Vec<usize>,
        /// Output CSV table.
        #[arg(long, default_value = "sweep.csv")]
        output: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train several model kinds on the same split and tabulate improvements.
    Compare {
        /// Comma-separated model kinds; the first is the reference.
        #[arg(long, value_delimiter = ',', required = true)]
        models: Vec<String>,
        /// Output CSV table.
        #[arg(long, default_value = "compare.csv")]
        output: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Export the fitted joint density grid of one horizon as CSV.
    ExportDensity {
        /// Directory holding a saved model (from `train`).
        #[arg(long)]
        model_dir: PathBuf,
        /// Horizon whose density to export (1-based).
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        /// Output CSV (`pred_mw,actual_mw,density`).
        #[arg(long, default_value = "density.csv")]
        output: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Runs the parsed invocation; the Err value is the process exit code.
pub fn run(cli: Cli) -> Result<(), i32> {
    let cfg = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return Err(report(&e)),
    };
    let result = match cli.command {
        Command::Prepare { output, overrides } => cmd_prepare(cfg, &overrides, &output),
        Command::Train { out_dir, overrides } => cmd_train(cfg, &overrides, &out_dir),
        Command::Forecast {
            model_dir,
            out_dir,
            overrides,
        } => cmd_forecast(cfg, &overrides, &model_dir, &out_dir),
        Command::Evaluate { run_dir } => cmd_evaluate(&run_dir),
        Command::Sweep {
            depths,
            output,
            overrides,
        } => cmd_sweep(cfg, &overrides, &depths, &output),
        Command::Compare {
            models,
            output,
            overrides,
        } => cmd_compare(cfg, &overrides, &models, &output),
        Command::ExportDensity {
            model_dir,
            horizon,
            output,
            overrides,
        } => cmd_export_density(cfg, &overrides, &model_dir, horizon, &output),
    };
    result.map_err(|e| report(&e))
}

/// Usage-shaped failures (bad config, missing input files) exit 2; anything
/// that failed while computing exits 1.
fn report(e: &PipelineError) -> i32 {
    eprintln!("error: {e}");
    match e {
        PipelineError::Config(_) => 2,
        PipelineError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
        PipelineError::Dataset(dataset::DatasetError::Io(io))
            if io.kind() == std::io::ErrorKind::NotFound =>
        {
            2
        }
        PipelineError::Dataset(dataset::DatasetError::Csv(e)) => match e.kind() {
            csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => 2,
            _ => 1,
        },
        _ => 1,
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, PipelineError> {
    match path {
        Some(p) => {
            if !p.exists() {
                return Err(PipelineError::Config(format!(
                    "config file not found: {}",
                    p.display()
                )));
            }
            ExperimentConfig::load(p)
        }
        None => Ok(ExperimentConfig::default()),
    }
}

fn apply_overrides(
    mut cfg: ExperimentConfig,
    ov: &Overrides,
) -> Result<ExperimentConfig, PipelineError> {
    if let Some(csv) = &ov.csv {
        let capacity_mw = ov.capacity_mw.or(match cfg.data {
            DataConfig::Csv { capacity_mw, .. } => Some(capacity_mw),
            DataConfig::Synth { .. } => None,
        });
        let capacity_mw = capacity_mw.ok_or_else(|| {
            PipelineError::Config("--csv requires --capacity-mw (or a csv config)".into())
        })?;
        let (mut start, mut end) = match &cfg.data {
            DataConfig::Csv {
                daylight_start,
                daylight_end,
                ..
            } => (daylight_start.clone(), daylight_end.clone()),
            DataConfig::Synth { .. } => (None, None),
        };
        if ov.daylight_start.is_some() {
            start = ov.daylight_start.clone();
        }
        if ov.daylight_end.is_some() {
            end = ov.daylight_end.clone();
        }
        cfg.data = DataConfig::Csv {
            path: csv.clone(),
            capacity_mw,
            daylight_start: start,
            daylight_end: end,
        };
    } else if ov.capacity_mw.is_some() || ov.daylight_start.is_some() || ov.daylight_end.is_some()
    {
        match &mut cfg.data {
            DataConfig::Csv {
                capacity_mw,
                daylight_start,
                daylight_end,
                ..
            } => {
                if let Some(c) = ov.capacity_mw {
                    *capacity_mw = c;
                }
                if ov.daylight_start.is_some() {
                    *daylight_start = ov.daylight_start.clone();
                }
                if ov.daylight_end.is_some() {
                    *daylight_end = ov.daylight_end.clone();
                }
            }
            DataConfig::Synth { capacity_mw, .. } => {
                if let Some(c) = ov.capacity_mw {
                    *capacity_mw = c;
                }
                if ov.daylight_start.is_some() || ov.daylight_end.is_some() {
                    return Err(PipelineError::Config(
                        "daylight flags apply to csv data only".into(),
                    ));
                }
            }
        }
    }
    if let Some(w) = ov.window_length {
        cfg.window_length = w;
    }
    if let Some(f) = ov.train_fraction {
        cfg.train_fraction = f;
    }
    if let Some(m) = &ov.model {
        cfg.model = ModelKind::parse(m)?;
    }
    if let Some(e) = ov.epochs {
        cfg.training.epochs = e;
    }
    if let Some(s) = ov.seed {
        cfg.training.seed = s;
    }
    if let Some(n) = ov.num_layers {
        cfg.stack.num_layers = n;
    }
    if let Some(h) = ov.hidden_size {
        cfg.stack.hidden_size = h;
    }
    if let Some(h) = ov.horizons {
        cfg.max_horizon = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_prepare(
    cfg: ExperimentConfig,
    ov: &Overrides,
    output: &Path,
) -> Result<(), PipelineError> {
    let cfg = apply_overrides(cfg, ov)?;
    // the daylight filter runs inside load_data for csv sources
    let series = load_data(&cfg.data)?;
    let prepared = dataset::prepare(&series, cfg.window_length, cfg.train_fraction)?;
    PreparedDataset::save_cache(&series, cfg.window_length, cfg.train_fraction, output)?;
    eprintln!(
        "prepared {} samples → {} windows ({} train / {} test), norm offset {:.6} scale {:.6}",
        series.len(),
        prepared.num_windows(),
        prepared.split_index,
        prepared.num_test_windows(),
        prepared.norm.offset,
        prepared.norm.scale,
    );
    eprintln!("cache written to {}", output.display());
    Ok(())
}

fn cmd_train(cfg: ExperimentConfig, ov: &Overrides, out_dir: &Path) -> Result<(), PipelineError> {
    let cfg = apply_overrides(cfg, ov)?;
    let dataset = prepare_data(&cfg)?;
    eprintln!(
        "training {} on {} windows...",
        cfg.model.name(),
        dataset.split_index
    );
    let (model, history) = pipeline::train_model(&cfg, &dataset)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("config.snapshot"), cfg.to_toml_string())?;
    pipeline::save_model(&model, out_dir)?;
    if let Some(h) = &history {
        let mut f = std::io::BufWriter::new(std::fs::File::create(
            out_dir.join("loss_history.csv"),
        )?);
        writeln!(f, "epoch,train_loss,validation_loss").map_err(PipelineError::Io)?;
        for (i, (t, v)) in h.train_loss.iter().zip(&h.validation_loss).enumerate() {
            writeln!(f, "{},{t},{v}", i + 1).map_err(PipelineError::Io)?;
        }
        eprintln!(
            "done: {} epochs, final train loss {:.6e}{}",
            h.train_loss.len(),
            h.train_loss.last().unwrap_or(&f64::NAN),
            if h.stopped_early { " (early stop)" } else { "" }
        );
    } else {
        eprintln!("done (closed-form fit, no loss history)");
    }
    eprintln!("model saved to {}", out_dir.display());
    Ok(())
}

fn cmd_forecast(
    cfg: ExperimentConfig,
    ov: &Overrides,
    model_dir: &Path,
    out_dir: &Path,
) -> Result<(), PipelineError> {
    if !model_dir.join("model_meta.json").exists() {
        return Err(PipelineError::Config(format!(
            "no saved model in {}",
            model_dir.display()
        )));
    }
    // prefer the training-time config so the data/windowing match the model
    let snapshot = model_dir.join("config.snapshot");
    let cfg = if snapshot.exists() {
        apply_overrides(ExperimentConfig::load(&snapshot)?, ov)?
    } else {
        apply_overrides(cfg, ov)?
    };
    let dataset = prepare_data(&cfg)?;
    let model = load_model(model_dir)?;
    eprintln!(
        "forecasting horizons 1..={} over {} test windows...",
        cfg.max_horizon,
        dataset.num_test_windows()
    );
    let report = evaluate_trained(&cfg, &dataset, model, None, Some(out_dir))?;
    for h in &report.horizons {
        eprintln!(
            "h{}: MAE {:.4} MW, RMSE {:.4} MW, PICP {:.1}%",
            h.horizon, h.point.mae, h.point.rmse, h.interval.picp_pct
        );
    }
    eprintln!("artifacts written to {}", out_dir.display());
    Ok(())
}

fn cmd_evaluate(run_dir: &Path) -> Result<(), PipelineError> {
    if !run_dir.join("config.snapshot").exists() {
        return Err(PipelineError::Config(format!(
            "no config.snapshot in {}",
            run_dir.display()
        )));
    }
    let rows = evaluate_run_dir(run_dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(run_dir.join("metrics.csv"))?);
    writeln!(f, "horizon,mae,mare_pct,rmse,pearson,r2,picp_pct,piaw").map_err(PipelineError::Io)?;
    for (h, p, iv) in &rows {
        writeln!(
            f,
            "{h},{},{},{},{},{},{},{}",
            p.mae, p.mare_pct, p.rmse, p.pearson, p.r2, iv.picp_pct, iv.piaw
        )
        .map_err(PipelineError::Io)?;
        eprintln!(
            "h{h}: MAE {:.4}, MARE {:.3}%, RMSE {:.4}, r {:.4}, R2 {:.4}, PICP {:.1}%, PIAW {:.4}",
            p.mae, p.mare_pct, p.rmse, p.pearson, p.r2, iv.picp_pct, iv.piaw
        );
    }
    eprintln!("metrics.csv rewritten in {}", run_dir.display());
    Ok(())
}

fn cmd_sweep(
    cfg: ExperimentConfig,
    ov: &Overrides,
    depths: &[usize],
    output: &Path,
) -> Result<(), PipelineError> {
    let cfg = apply_overrides(cfg, ov)?;
    eprintln!("sweeping stack depths {depths:?}...");
    let report = depth_sweep(&cfg, depths)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(output)?);
    writeln!(f, "depth,mae,mare_pct,rmse,pearson,r2").map_err(PipelineError::Io)?;
    for row in &report.rows {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            row.depth, row.point.mae, row.point.mare_pct, row.point.rmse, row.point.pearson,
            row.point.r2
        )
        .map_err(PipelineError::Io)?;
        eprintln!(
            "depth {}: MAE {:.4} MW, RMSE {:.4} MW",
            row.depth, row.point.mae, row.point.rmse
        );
    }
    eprintln!("best depth by MAE: {}", report.best_depth);
    eprintln!("table written to {}", output.display());
    Ok(())
}

fn cmd_compare(
    cfg: ExperimentConfig,
    ov: &Overrides,
    models: &[String],
    output: &Path,
) -> Result<(), PipelineError> {
    let cfg = apply_overrides(cfg, ov)?;
    // svr is accepted in the list but reported as unavailable
    let mut kinds = Vec::new();
    let mut svr_requested = false;
    for name in models {
        if name == "svr" {
            svr_requested = true;
        } else {
            kinds.push(ModelKind::parse(name)?);
        }
    }
    if kinds.len() < 2 {
        return Err(PipelineError::Config(
            "comparison needs at least two trainable models".into(),
        ));
    }
    eprintln!(
        "comparing {:?} (reference: {})...",
        models,
        kinds[0].name()
    );
    let report = compare_models(&cfg, &kinds)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(output)?);
    writeln!(f, "model,mae,mare_pct,rmse,pearson,r2,reference_gain_pct").map_err(PipelineError::Io)?;
    for row in &report.rows {
        let gain = row
            .reference_gain_pct
            .map_or(String::new(), |g| format!("{g}"));
        writeln!(
            f,
            "{},{},{},{},{},{},{gain}",
            row.model.name(),
            row.point.mae,
            row.point.mare_pct,
            row.point.rmse,
            row.point.pearson,
            row.point.r2
        )
        .map_err(PipelineError::Io)?;
        eprintln!(
            "{}: MAE {:.4} MW{}",
            row.model.name(),
            row.point.mae,
            row.reference_gain_pct
                .map_or(String::from(" (reference)"), |g| {
                    format!(" (reference gain {g:+.2}%)")
                })
        );
    }
    if svr_requested {
        writeln!(f, "svr,not implemented,,,,,").map_err(PipelineError::Io)?;
        eprintln!("svr: not implemented");
    }
    eprintln!("table written to {}", output.display());
    Ok(())
}

fn cmd_export_density(
    cfg: ExperimentConfig,
    ov: &Overrides,
    model_dir: &Path,
    horizon: usize,
    output: &Path,
) -> Result<(), PipelineError> {
    if !model_dir.join("model_meta.json").exists() {
        return Err(PipelineError::Config(format!(
            "no saved model in {}",
            model_dir.display()
        )));
    }
    let snapshot = model_dir.join("config.snapshot");
    let cfg = if snapshot.exists() {
        apply_overrides(ExperimentConfig::load(&snapshot)?, ov)?
    } else {
        apply_overrides(cfg, ov)?
    };
    if horizon == 0 {
        return Err(PipelineError::Config("horizon must be ≥ 1".into()));
    }
    let dataset = prepare_data(&cfg)?;
    let model = load_model(model_dir)?;
    eprintln!("fitting joint density for horizon {horizon}...");
    let models = pipeline::fit_interval_models(&model, &dataset, horizon)?;
    let grid = crate::kde::estimate_joint(&models[horizon - 1], &cfg.grid.into());
    crate::kde::export_density(&grid, output)?;
    eprintln!("density grid written to {}", output.display());
    Ok(())
}
