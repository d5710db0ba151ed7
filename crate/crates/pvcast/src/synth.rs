//! Deterministic synthetic PV-like series for examples and tests.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::RawSeries;

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub days: usize,
    pub samples_per_day: usize,
    pub capacity_mw: f64,
    /// Multiplicative noise amplitude as a fraction of the clear-sky value.
    pub noise_fraction: f64,
    pub seed: u64,
    pub start_date: NaiveDate,
    pub step_minutes: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            days: 30,
            samples_per_day: 96,
            capacity_mw: 100.0,
            noise_fraction: 0.05,
            seed: 42,
            start_date: NaiveDate::from_ymd_opt(2024, 6, 1).unwrap(),
            step_minutes: 15,
        }
    }
}

/// Generates a half-sine daily power profile with multiplicative noise and a
/// slow day-to-day amplitude drift. Same config → same series.
pub fn generate(cfg: &SynthConfig) -> RawSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.days * cfg.samples_per_day;
    let mut timestamps: Vec<NaiveDateTime> = Vec::with_capacity(n);
    let mut values: Vec<f64> = Vec::with_capacity(n);
    let start = cfg.start_date.and_hms_opt(0, 0, 0).unwrap();
    for day in 0..cfg.days {
        // weather-like amplitude between 60% and 100% of capacity
        let amplitude = cfg.capacity_mw * rng.gen_range(0.6..1.0);
        for s in 0..cfg.samples_per_day {
            let idx = day * cfg.samples_per_day + s;
            let t = start + Duration::minutes(cfg.step_minutes * idx as i64);
            let phase = s as f64 / cfg.samples_per_day as f64; // [0, 1)
            let clear = amplitude * (std::f64::consts::PI * phase).sin().max(0.0);
            let noisy = if clear > 0.0 {
                let eps = rng.gen_range(-cfg.noise_fraction..cfg.noise_fraction);
                (clear * (1.0 + eps)).clamp(0.0, cfg.capacity_mw)
            } else {
                0.0
            };
            timestamps.push(t);
            values.push(noisy);
        }
    }
    RawSeries::new(
        timestamps,
        values,
        cfg.capacity_mw,
        Duration::minutes(cfg.step_minutes),
    )
        .expect("generator produces a valid series by construction")
}
