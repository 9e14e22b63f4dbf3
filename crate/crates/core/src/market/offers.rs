use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One block of a stepwise offer: up to `quantity` MWh at `price` $/MWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfferBlock {
    pub quantity: f64,
    pub price: f64,
}

/// A generator's stepwise offer curve at one bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferCurve {
    pub bus: usize,
    pub blocks: Vec<OfferBlock>,
}

impl OfferCurve {
    pub fn new(bus: usize, blocks: &[(f64, f64)]) -> Self {
        OfferCurve {
            bus,
            blocks: blocks
                .iter()
                .map(|&(quantity, price)| OfferBlock { quantity, price })
                .collect(),
        }
    }

    /// Total offered capacity.
    pub fn capacity(&self) -> f64 {
        self.blocks.iter().map(|b| b.quantity).sum()
    }

    fn validate(&self) -> Result<()> {
        for block in &self.blocks {
            if !(block.quantity > 0.0 && block.quantity.is_finite()) {
                return Err(Error::InvalidOffer(format!(
                    "bus {} has block quantity {}",
                    self.bus, block.quantity
                )));
            }
            if !block.price.is_finite() {
                return Err(Error::InvalidOffer(format!(
                    "bus {} has price {}",
                    self.bus, block.price
                )));
            }
        }
        for pair in self.blocks.windows(2) {
            if pair[1].price < pair[0].price {
                return Err(Error::NonConvexOffer {
                    bus: self.bus,
                    previous: pair[0].price,
                    next: pair[1].price,
                });
            }
        }
        Ok(())
    }
}

/// Reads a JSON array of offer curves.
pub fn load_offers(path: impl AsRef<Path>) -> Result<Vec<OfferCurve>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Kind of a dispatch variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariableKind {
    /// Block `block` of the offer at position `offer` in the input list.
    Offer { offer: usize, block: usize },
    /// Fixed demand, encoded as an injection with equal bounds.
    Load,
}

/// Per-variable dispatch data for one interval.
///
/// Each offer block becomes one variable with incremental bounds
/// `0 <= p <= quantity`; each nonzero load becomes a variable fixed at
/// `-load`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketInstance {
    pub costs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub block_to_bus: Vec<usize>,
    pub kinds: Vec<VariableKind>,
}

impl MarketInstance {
    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// `(N+1) x K` aggregation matrix with `G[bus(k), k] = 1`.
    pub fn aggregation(&self, bus_count: usize) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(bus_count, self.len());
        for (k, &bus) in self.block_to_bus.iter().enumerate() {
            g[(bus, k)] = 1.0;
        }
        g
    }

    /// Sums variable values into per-bus injections.
    pub fn bus_injections(&self, values: &[f64], bus_count: usize) -> Vec<f64> {
        let mut out = vec![0.0; bus_count];
        for (&bus, &v) in self.block_to_bus.iter().zip(values) {
            out[bus] += v;
        }
        out
    }

    pub fn validate(&self, bus_count: usize) -> Result<()> {
        let k = self.len();
        if self.lower.len() != k
            || self.upper.len() != k
            || self.block_to_bus.len() != k
            || self.kinds.len() != k
        {
            return Err(Error::InvalidOffer(
                "market instance vectors differ in length".into(),
            ));
        }
        for i in 0..k {
            if self.block_to_bus[i] >= bus_count {
                return Err(Error::InvalidOffer(format!(
                    "variable {i} sits at bus {} outside the grid",
                    self.block_to_bus[i]
                )));
            }
            if !(self.lower[i] <= self.upper[i]) || !self.costs[i].is_finite() {
                return Err(Error::InvalidOffer(format!(
                    "variable {i} has bounds [{}, {}] and cost {}",
                    self.lower[i], self.upper[i], self.costs[i]
                )));
            }
        }
        Ok(())
    }
}

/// Turns offer curves and per-bus loads (MW, index = bus) into LP variables.
pub fn expand_blocks(offers: &[OfferCurve], loads: &[f64]) -> Result<MarketInstance> {
    let mut instance = MarketInstance {
        costs: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        block_to_bus: Vec::new(),
        kinds: Vec::new(),
    };
    for (o, offer) in offers.iter().enumerate() {
        offer.validate()?;
        for (b, block) in offer.blocks.iter().enumerate() {
            instance.costs.push(block.price);
            instance.lower.push(0.0);
            instance.upper.push(block.quantity);
            instance.block_to_bus.push(offer.bus);
            instance
                .kinds
                .push(VariableKind::Offer { offer: o, block: b });
        }
    }
    for (bus, &load) in loads.iter().enumerate() {
        if !load.is_finite() {
            return Err(Error::InvalidOffer(format!("load at bus {bus} is {load}")));
        }
        if load != 0.0 {
            instance.costs.push(0.0);
            instance.lower.push(-load);
            instance.upper.push(-load);
            instance.block_to_bus.push(bus);
            instance.kinds.push(VariableKind::Load);
        }
    }
    Ok(instance)
}
