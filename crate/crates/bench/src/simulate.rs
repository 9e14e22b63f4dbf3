//! Interval-by-interval market simulation.

use std::collections::BTreeSet;
use std::ops::Range;

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use topotrack::{
    assemble_price_matrix, build_matrices, clear_market, expand_blocks, DispatchOutcome,
    DispatchStatus, GridMatrices, GridTopology, PriceMatrix,
};

use crate::scenario::Scenario;

/// Topologies in force from given intervals on.
#[derive(Debug, Clone)]
pub struct TopologySchedule {
    entries: Vec<(usize, GridTopology, GridMatrices)>,
}

impl TopologySchedule {
    pub fn fixed(topology: &GridTopology) -> anyhow::Result<Self> {
        Self::new(vec![(0, topology.clone())])
    }

    /// `changes` lists `(first interval, topology)`; the first entry must
    /// start at interval 0.
    pub fn new(mut changes: Vec<(usize, GridTopology)>) -> anyhow::Result<Self> {
        changes.sort_by_key(|(start, _)| *start);
        anyhow::ensure!(
            changes.first().is_some_and(|(s, _)| *s == 0),
            "schedule must start at interval 0"
        );
        let entries = changes
            .into_iter()
            .map(|(start, topo)| {
                let m = build_matrices(&topo)
                    .with_context(|| format!("topology from interval {start}"))?;
                Ok((start, topo, m))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(TopologySchedule { entries })
    }

    pub fn at(&self, interval: usize) -> (&GridTopology, &GridMatrices) {
        let (_, topo, m) = self
            .entries
            .iter()
            .rev()
            .find(|(start, _, _)| *start <= interval)
            .expect("starts at 0");
        (topo, m)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub intervals: usize,
    pub infeasible: usize,
    pub uncongested: usize,
    pub congested: usize,
    pub degenerate: usize,
    /// Bus pairs of every line that was binding in some interval.
    pub congested_lines: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub outcomes: Vec<(usize, DispatchOutcome)>,
    pub summary: SimulationSummary,
}

impl Simulation {
    pub fn price_matrix(&self, scenario: &Scenario) -> topotrack::Result<PriceMatrix> {
        assemble_price_matrix(&self.outcomes, scenario.config.retention)
    }
}

/// Clears every interval in `range` (in parallel) under `schedule`.
pub fn simulate_range(
    scenario: &Scenario,
    schedule: &TopologySchedule,
    range: Range<usize>,
) -> anyhow::Result<Simulation> {
    let outcomes = range
        .into_par_iter()
        .map(|t| {
            let inputs = scenario.interval_inputs(t)?;
            let (_, matrices) = schedule.at(t);
            let instance = expand_blocks(&inputs.offers, &inputs.loads)?;
            let noise = scenario.loss_noise(t);
            let outcome = clear_market(&instance, matrices, noise.as_deref())
                .with_context(|| format!("clearing interval {t}"))?;
            Ok((t, outcome))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut summary = SimulationSummary {
        intervals: outcomes.len(),
        ..Default::default()
    };
    for (t, o) in &outcomes {
        match o.status {
            DispatchStatus::Infeasible => summary.infeasible += 1,
            DispatchStatus::Uncongested => summary.uncongested += 1,
            DispatchStatus::Feasible => summary.congested += 1,
        }
        summary.degenerate += o.degenerate as usize;
        let (topo, _) = schedule.at(*t);
        summary
            .congested_lines
            .extend(o.congested.iter().map(|&l| topo.lines()[l].endpoints()));
    }
    Ok(Simulation { outcomes, summary })
}

/// Clears every interval of the scenario on its own topology.
pub fn simulate(scenario: &Scenario) -> anyhow::Result<Simulation> {
    let schedule = TopologySchedule::fixed(&scenario.topology)?;
    simulate_range(scenario, &schedule, 0..scenario.intervals())
}
