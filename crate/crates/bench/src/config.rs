use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use topotrack::batch::RecoveryParams;
use topotrack::online::Loss;
use topotrack::RetentionPolicy;

/// Daily load shape: `day_factor * (mean + amplitude * sin(2π (h - peak_hour + 6) / 24))`
/// plus a fixed per-bus offset in `[-bus_spread, bus_spread]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DailyShape {
    pub mean: f64,
    pub amplitude: f64,
    /// Hour of the daily maximum.
    pub peak_hour: f64,
    /// Half-width of the uniform day-to-day factor around 1.
    pub day_spread: f64,
    pub bus_spread: f64,
}

impl Default for DailyShape {
    fn default() -> Self {
        DailyShape {
            mean: 1.07,
            amplitude: 0.13,
            peak_hour: 15.0,
            day_spread: 0.05,
            bus_spread: 0.02,
        }
    }
}

impl DailyShape {
    pub fn at_hour(&self, hour: f64) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * (hour - self.peak_hour + 6.0) / 24.0;
        self.mean + self.amplitude * phase.sin()
    }
}

/// A rewiring of one line: the line joining `remove` is reconnected to join
/// `add`, keeping its reactance and rating. Buses are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineSwap {
    pub remove: [usize; 2],
    pub add: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackingConfig {
    pub days: usize,
    /// Day on whose first interval the swaps take effect.
    pub event_day: usize,
    pub swaps: Vec<LineSwap>,
    /// Extra bus pairs to trace besides the swapped lines.
    pub watch: Vec<[usize; 2]>,
    /// Days of prices used for the warm-start batch solve.
    pub warm_start_days: usize,
    pub loss: Loss,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// `ρ` and `η`; `None` means `sqrt(T)` with `T` the streamed horizon.
    pub rho: Option<f64>,
    pub eta: Option<f64>,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            days: 31,
            event_day: 14,
            swaps: vec![
                LineSwap {
                    remove: [1, 5],
                    add: [1, 6],
                },
                LineSwap {
                    remove: [22, 23],
                    add: [22, 25],
                },
            ],
            watch: vec![[9, 16]],
            warm_start_days: 1,
            loss: Loss::Huber,
            kappa1: 1.0,
            kappa2: 1.0,
            kappa3: 1.0,
            rho: None,
            eta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Grid JSON; the bundled IEEE 30-bus grid when absent.
    pub grid_file: Option<PathBuf>,
    /// Offer JSON; the bundled IEEE 30-bus offers when absent.
    pub offers_file: Option<PathBuf>,
    /// Raw loads as CSV (one row per interval, one column per bus). Replaces
    /// the synthetic profile when given; still divided by `load_scale`.
    pub loads_file: Option<PathBuf>,
    pub intervals_per_day: usize,
    pub days: usize,
    /// Half-width in $/MWh of the uniform offer-price jitter.
    pub cost_jitter: f64,
    /// Standard deviation of the per-interval load noise, relative to the
    /// noiseless value.
    pub load_sigma_ratio: f64,
    /// Divisor applied to the raw loads of `loads_file`.
    pub load_scale: f64,
    /// Offer prices are multiplied by `cost_scale / 10`.
    pub cost_scale: f64,
    pub seed: u64,
    /// Standard deviation in $/MWh of additive loss noise on congestion prices.
    pub mlc_sigma: f64,
    /// When set, loads are rescaled so that each bus peaks at this multiple
    /// of its benchmark demand.
    pub peak_ratio: Option<f64>,
    pub daily_shape: DailyShape,
    pub retention: RetentionPolicy,
    pub recovery: RecoveryParams,
    pub kappa_grid: Vec<f64>,
    pub target_degree: f64,
    pub tracking: TrackingConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            grid_file: None,
            offers_file: None,
            loads_file: None,
            intervals_per_day: 288,
            days: 1,
            cost_jitter: 2.5,
            load_sigma_ratio: 0.1,
            load_scale: 7.0,
            cost_scale: 10.0,
            seed: 1,
            mlc_sigma: 0.0,
            peak_ratio: None,
            daily_shape: DailyShape::default(),
            retention: RetentionPolicy::DropUncongested,
            recovery: RecoveryParams::default(),
            kappa_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            target_degree: 2.68,
            tracking: TrackingConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: ScenarioConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative data paths are taken relative to the config file.
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut config.grid_file,
            &mut config.offers_file,
            &mut config.loads_file,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.intervals_per_day == 0 || self.days == 0 {
            bail!("intervals_per_day and days must be positive");
        }
        if !(self.load_scale > 0.0 && self.cost_scale > 0.0) {
            bail!("load_scale and cost_scale must be positive");
        }
        if !(0.0..1.0).contains(&self.load_sigma_ratio) {
            bail!(
                "load_sigma_ratio must lie in [0, 1), got {}",
                self.load_sigma_ratio
            );
        }
        if !(self.cost_jitter >= 0.0 && self.mlc_sigma >= 0.0) {
            bail!("cost_jitter and mlc_sigma must be nonnegative");
        }
        if let Some(r) = self.peak_ratio {
            if !(r > 0.0) {
                bail!("peak_ratio must be positive, got {r}");
            }
        }
        let shape = &self.daily_shape;
        if !(0.0..1.0).contains(&shape.day_spread) || shape.bus_spread < 0.0 {
            bail!("daily_shape spreads out of range");
        }
        self.recovery.validate()?;
        let t = &self.tracking;
        if t.event_day >= t.days || t.warm_start_days == 0 || t.warm_start_days > t.event_day.max(1)
        {
            bail!(
                "tracking needs warm_start_days <= event_day < days (got {}, {}, {})",
                t.warm_start_days,
                t.event_day,
                t.days
            );
        }
        Ok(())
    }
}
