//! Per-interval market inputs: synthetic or file-driven loads and jittered
//! offers.

use std::path::Path;

use anyhow::{bail, Context};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use topotrack::market::load_offers;
use topotrack::{GridTopology, OfferCurve};

use crate::config::ScenarioConfig;
use crate::rng::{stream, StreamKind};

const IEEE30_OFFERS: &str = include_str!("../data/ieee30_offers.json");
const IEEE30_LOADS: &str = include_str!("../data/ieee30_loads.csv");

/// The six generators of the IEEE 30-bus benchmark with their block offers.
pub fn ieee30_offers() -> Vec<OfferCurve> {
    serde_json::from_str(IEEE30_OFFERS).expect("bundled offers parse")
}

/// Benchmark demand per bus (MW) for the IEEE 30-bus grid.
pub fn ieee30_base_loads() -> Vec<f64> {
    parse_base_loads(IEEE30_LOADS, 30).expect("bundled loads parse")
}

fn parse_base_loads(text: &str, buses: usize) -> anyhow::Result<Vec<f64>> {
    let mut loads = vec![0.0; buses];
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for record in reader.deserialize::<(usize, f64)>() {
        let (bus, mw) = record?;
        if bus >= buses {
            bail!("load at bus {bus} outside a {buses}-bus grid");
        }
        loads[bus] = mw;
    }
    Ok(loads)
}

/// Reads raw loads: a header row of bus indices, then one row per interval.
pub fn read_load_table(path: &Path, buses: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let columns = reader
        .headers()?
        .iter()
        .map(|h| {
            h.trim()
                .parse::<usize>()
                .with_context(|| format!("bus id {h:?} in {}", path.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if let Some(bad) = columns.iter().find(|&&b| b >= buses) {
        bail!("load column for bus {bad} outside a {buses}-bus grid");
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let mut row = vec![0.0; buses];
        for (value, &bus) in record.iter().zip(&columns) {
            row[bus] = value
                .trim()
                .parse()
                .with_context(|| format!("load {value:?}"))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Market inputs for one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalInputs {
    pub interval: usize,
    pub loads: Vec<f64>,
    pub offers: Vec<OfferCurve>,
}

/// A configured data source.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub topology: GridTopology,
    pub offers: Vec<OfferCurve>,
    pub base_loads: Vec<f64>,
    raw_loads: Option<Vec<Vec<f64>>>,
    bus_offsets: Vec<f64>,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> anyhow::Result<Self> {
        config.validate()?;
        let topology = match &config.grid_file {
            Some(p) => {
                GridTopology::load(p).with_context(|| format!("loading grid {}", p.display()))?
            }
            None => GridTopology::ieee30(),
        };
        let offers = match &config.offers_file {
            Some(p) => load_offers(p).with_context(|| format!("loading offers {}", p.display()))?,
            None => ieee30_offers(),
        };
        let buses = topology.bus_count();
        if let Some(o) = offers.iter().find(|o| o.bus >= buses) {
            bail!("offer at bus {} outside a {buses}-bus grid", o.bus);
        }
        let base_loads = if buses == 30 {
            ieee30_base_loads()
        } else {
            vec![0.0; buses]
        };
        let raw_loads = match &config.loads_file {
            Some(p) => Some(read_load_table(p, buses)?),
            None => None,
        };
        if raw_loads.is_none() && config.grid_file.is_some() && buses != 30 {
            bail!("synthetic loads need the 30-bus benchmark demands; pass loads_file for other grids");
        }
        let bus_offsets = (0..buses)
            .map(|b| stream(config.seed, StreamKind::BusOffset, 0, b).random_range(-1.0..=1.0))
            .collect();
        Ok(Scenario {
            config,
            topology,
            offers,
            base_loads,
            raw_loads,
            bus_offsets,
        })
    }

    /// Replaces the grid, e.g. with a synthetic one, keeping everything else.
    pub fn with_topology(mut self, topology: GridTopology) -> Self {
        self.topology = topology;
        self
    }

    pub fn intervals(&self) -> usize {
        self.config.days * self.config.intervals_per_day
    }

    /// Day-level multiplier of the synthetic shape.
    pub fn day_factor(&self, day: usize) -> f64 {
        let spread = self.config.daily_shape.day_spread;
        if spread == 0.0 {
            return 1.0;
        }
        stream(self.config.seed, StreamKind::DayFactor, day, 0)
            .random_range(1.0 - spread..=1.0 + spread)
    }

    /// Loads before noise. File loads are divided by `load_scale`; the
    /// synthetic profile is already at benchmark size.
    pub fn nominal_loads(&self, interval: usize) -> anyhow::Result<Vec<f64>> {
        let c = &self.config;
        if let Some(rows) = &self.raw_loads {
            let row = rows.get(interval).with_context(|| {
                format!(
                    "loads file has {} rows, interval {interval} requested",
                    rows.len()
                )
            })?;
            return Ok(row.iter().map(|v| v / c.load_scale).collect());
        }
        let shape = &c.daily_shape;
        let day = interval / c.intervals_per_day;
        let hour = (interval % c.intervals_per_day) as f64 * 24.0 / c.intervals_per_day as f64;
        let level = self.day_factor(day) * shape.at_hour(hour);
        let peak = c
            .peak_ratio
            .map_or(1.0, |r| r / (shape.mean + shape.amplitude));
        Ok(self
            .base_loads
            .iter()
            .zip(&self.bus_offsets)
            .map(|(&base, &offset)| base * peak * (level + shape.bus_spread * offset))
            .collect())
    }

    pub fn interval_inputs(&self, interval: usize) -> anyhow::Result<IntervalInputs> {
        let c = &self.config;
        let loads = self
            .nominal_loads(interval)?
            .into_iter()
            .enumerate()
            .map(|(bus, v)| {
                if v == 0.0 || c.load_sigma_ratio == 0.0 {
                    return v;
                }
                let e: f64 = StandardNormal.sample(&mut stream(
                    c.seed,
                    StreamKind::LoadNoise,
                    interval,
                    bus,
                ));
                (v * (1.0 + c.load_sigma_ratio * e)).max(0.0)
            })
            .collect();
        let mut block = 0;
        let offers = self
            .offers
            .iter()
            .map(|offer| {
                let mut pairs: Vec<(f64, f64)> = offer
                    .blocks
                    .iter()
                    .map(|b| {
                        let mut price = b.price * c.cost_scale / 10.0;
                        if c.cost_jitter > 0.0 {
                            let mut rng = stream(c.seed, StreamKind::CostJitter, interval, block);
                            price += rng.random_range(-c.cost_jitter..=c.cost_jitter);
                        }
                        block += 1;
                        (b.quantity, price)
                    })
                    .collect();
                // Jitter can reorder neighbouring blocks. The LP fills the
                // cheaper block first either way, so sorting by price leaves
                // the dispatch unchanged and keeps the curve increasing.
                pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
                OfferCurve::new(offer.bus, &pairs)
            })
            .collect();
        Ok(IntervalInputs {
            interval,
            loads,
            offers,
        })
    }

    /// Inputs for every interval of `day`.
    pub fn generate_day(&self, day: usize) -> anyhow::Result<Vec<IntervalInputs>> {
        let ipd = self.config.intervals_per_day;
        (day * ipd..(day + 1) * ipd)
            .map(|t| self.interval_inputs(t))
            .collect()
    }

    /// Additive congestion-price noise for an interval, one entry per
    /// non-reference bus; `None` when `mlc_sigma` is zero.
    pub fn loss_noise(&self, interval: usize) -> Option<Vec<f64>> {
        let sigma = self.config.mlc_sigma;
        if sigma == 0.0 {
            return None;
        }
        let n = self.topology.bus_count() - 1;
        Some(
            (0..n)
                .map(|b| {
                    let e: f64 = StandardNormal.sample(&mut stream(
                        self.config.seed,
                        StreamKind::LossNoise,
                        interval,
                        b,
                    ));
                    sigma * e
                })
                .collect(),
        )
    }
}
