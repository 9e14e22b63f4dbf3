//! Batch and tracking experiments and the metrics they report.

use std::collections::BTreeSet;

use anyhow::Context;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use topotrack::batch::{normalize_and_threshold, run_batch, tune_kappas, BatchStatus, KappaSweep};
use topotrack::online::{OnlineParams, OnlineTracker, TraceRecord};
use topotrack::{build_matrices, Error, GridTopology, PriceMatrix};

use crate::config::LineSwap;
use crate::scenario::Scenario;
use crate::simulate::{simulate, simulate_range, SimulationSummary, TopologySchedule};

/// Threshold at which a normalized entry counts as a line.
pub const DETECTION_THRESHOLD: f64 = 0.01;

/// Support and value accuracy of an estimate against the true grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub edge_precision: f64,
    pub edge_recall: f64,
    pub edge_f1: f64,
    pub average_degree: f64,
    pub true_average_degree: f64,
    /// `‖B̂ - B‖_F / ‖B‖_F` after dividing each by its largest diagonal entry.
    pub frobenius_error: f64,
    pub degree_table: Option<KappaSweep>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub iterations: Option<usize>,
    pub status: Option<BatchStatus>,
    pub primal_residual: Option<f64>,
    pub degeneracy_count: usize,
    /// Wall time in seconds; left out of the serialized report so that
    /// reports of identical runs are identical.
    #[serde(skip)]
    pub runtime: f64,
}

/// Reduced-grid edges of a topology: pairs of reduced indices, `i < j`.
pub fn reduced_edges(topology: &GridTopology) -> BTreeSet<(usize, usize)> {
    let reduced = reduced_index_map(topology);
    topology
        .edge_set()
        .into_iter()
        .filter_map(|(a, b)| Some((reduced[a]?, reduced[b]?)))
        .map(|(i, j)| (i.min(j), i.max(j)))
        .collect()
}

/// Reduced index of every bus, `None` for the reference.
pub fn reduced_index_map(topology: &GridTopology) -> Vec<Option<usize>> {
    let r = topology.reference_bus();
    (0..topology.bus_count())
        .map(|b| {
            if b == r {
                None
            } else {
                Some(if b < r { b } else { b - 1 })
            }
        })
        .collect()
}

/// Compares `b_hat` with the reduced Laplacian of `truth` after
/// normalization and thresholding at `tau`.
pub fn evaluate(
    b_hat: &DMatrix<f64>,
    truth: &GridTopology,
    tau: f64,
) -> topotrack::Result<RecoveryReport> {
    let n = truth.bus_count() - 1;
    if b_hat.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            found: format!("{}x{}", b_hat.nrows(), b_hat.ncols()),
        });
    }
    let b_true = build_matrices(truth)?.reduced_laplacian;
    let support = normalize_and_threshold(b_hat, tau)?;
    let true_edges = reduced_edges(truth);
    let hits = support.edges.intersection(&true_edges).count() as f64;
    let precision = if support.edges.is_empty() {
        1.0
    } else {
        hits / support.edges.len() as f64
    };
    let recall = if true_edges.is_empty() {
        1.0
    } else {
        hits / true_edges.len() as f64
    };
    let f1 = if hits == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let normalize = |m: &DMatrix<f64>| m / topotrack::linalg::max_diagonal(m);
    let true_norm = normalize(&b_true);
    let frobenius_error = (normalize(b_hat) - &true_norm).norm() / true_norm.norm();
    Ok(RecoveryReport {
        edge_precision: precision,
        edge_recall: recall,
        edge_f1: f1,
        average_degree: support.average_degree(),
        true_average_degree: 2.0 * true_edges.len() as f64 / n as f64,
        frobenius_error,
        degree_table: None,
        kappa1: None,
        kappa2: None,
        iterations: None,
        status: None,
        primal_residual: None,
        degeneracy_count: 0,
        runtime: 0.0,
    })
}

#[derive(Debug, Clone)]
pub struct BatchExperiment {
    pub summary: SimulationSummary,
    pub prices: PriceMatrix,
    pub sweep: KappaSweep,
    pub b_hat: DMatrix<f64>,
    pub report: RecoveryReport,
}

/// Simulates the scenario, sweeps `grid × grid` for `(κ1, κ2)`, and
/// evaluates the estimate at the pair whose degree is closest to the
/// configured target.
pub fn run_batch_experiment(scenario: &Scenario, grid: &[f64]) -> anyhow::Result<BatchExperiment> {
    let start = std::time::Instant::now();
    let sim = simulate(scenario)?;
    let prices = sim.price_matrix(scenario)?;
    let config = &scenario.config;
    let sweep = tune_kappas(&prices.values, grid, config.target_degree, &config.recovery)?;
    let (k1, k2) = sweep.best;
    let params = config.recovery.with_kappas(k1, k2);
    let outcome = run_batch(&prices.values, &params)?;
    let mut report = evaluate(&outcome.b_hat, &scenario.topology, params.threshold_tau)?;
    report.kappa1 = Some(k1);
    report.kappa2 = Some(k2);
    report.iterations = Some(outcome.iterations());
    report.status = Some(outcome.status);
    report.primal_residual = outcome.last_residuals().map(|r| r.primal());
    report.degeneracy_count = sim.summary.degenerate;
    report.degree_table = Some(sweep.clone());
    report.runtime = start.elapsed().as_secs_f64();
    Ok(BatchExperiment {
        summary: sim.summary,
        prices,
        sweep,
        b_hat: outcome.b_hat,
        report,
    })
}

/// Applies line rewirings to a topology.
pub fn apply_swaps(topology: &GridTopology, swaps: &[LineSwap]) -> anyhow::Result<GridTopology> {
    let mut topo = topology.clone();
    for swap in swaps {
        let [a, b] = swap.remove;
        let index = topo
            .find_line(a, b)
            .with_context(|| format!("no line between buses {a} and {b}"))?;
        let [c, d] = swap.add;
        anyhow::ensure!(
            topo.find_line(c, d).is_none(),
            "buses {c} and {d} are already joined"
        );
        topo = topo.with_rewired_line(index, c, d)?;
    }
    Ok(topo)
}

/// Threshold crossings of one watched entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WatchSummary {
    pub buses: [usize; 2],
    /// Value after the last pre-event step.
    pub pre_event: f64,
    /// Post-event steps until the entry first fell below (removed line) or
    /// rose above (added line) the threshold; `None` if it never did.
    pub first_crossing: Option<usize>,
    pub final_value: f64,
    /// Smallest value over the whole stream.
    pub minimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub horizon: usize,
    pub event_interval: usize,
    pub post_event_steps: usize,
    pub rho: f64,
    pub eta: f64,
    pub removed: Vec<WatchSummary>,
    pub added: Vec<WatchSummary>,
    pub persistent: Vec<WatchSummary>,
    pub summary: SimulationSummary,
}

impl TrackingReport {
    /// Whether every removed line fell below and every added line rose
    /// above the threshold within `fraction` of the post-event steps.
    pub fn detected_within(&self, fraction: f64) -> bool {
        let limit = fraction * self.post_event_steps as f64;
        self.removed
            .iter()
            .chain(&self.added)
            .all(|w| w.first_crossing.is_some_and(|k| (k as f64) <= limit))
    }

    /// Whether every persistent watch stayed above the threshold throughout.
    pub fn persistent_held(&self) -> bool {
        self.persistent
            .iter()
            .all(|w| w.minimum > DETECTION_THRESHOLD)
    }
}

#[derive(Debug, Clone)]
pub struct TrackingExperiment {
    pub report: TrackingReport,
    pub tracker: OnlineTracker,
    pub prices: PriceMatrix,
    pub warm_start: DMatrix<f64>,
}

/// Streams a multi-day simulation with a topology change on
/// `tracking.event_day` through the online tracker, warm-started from a
/// batch solve on the first `tracking.warm_start_days` days.
pub fn run_tracking_experiment(scenario: &Scenario) -> anyhow::Result<TrackingExperiment> {
    let c = &scenario.config;
    let tc = &c.tracking;
    let ipd = c.intervals_per_day;
    let event = tc.event_day * ipd;
    let base = &scenario.topology;
    let swapped = apply_swaps(base, &tc.swaps)?;
    let schedule = TopologySchedule::new(vec![(0, base.clone()), (event, swapped)])?;
    let sim = simulate_range(scenario, &schedule, 0..tc.days * ipd)?;
    let prices = sim.price_matrix(scenario)?;

    let warm_cols: Vec<usize> = (0..prices.horizon())
        .filter(|&k| prices.interval_ids[k] < tc.warm_start_days * ipd)
        .collect();
    anyhow::ensure!(
        !warm_cols.is_empty(),
        "no retained intervals in the warm-start window"
    );
    let warm_pi = prices.values.select_columns(&warm_cols);
    let warm = run_batch(&warm_pi, &c.recovery)?;
    let warm_start = &warm.b_hat / topotrack::linalg::max_diagonal(&warm.b_hat);

    let horizon = prices.horizon();
    let mut params = OnlineParams::for_horizon(horizon);
    params.kappa1 = tc.kappa1;
    params.kappa2 = tc.kappa2;
    params.kappa3 = tc.kappa3;
    params.loss = tc.loss;
    params.skip_zero_prices = c.retention == topotrack::RetentionPolicy::KeepUncongested;
    if let Some(rho) = tc.rho {
        params.rho = rho;
    }
    if let Some(eta) = tc.eta {
        params.eta = eta;
    }

    let index = reduced_index_map(base);
    let to_reduced = |[a, b]: [usize; 2]| -> anyhow::Result<(usize, usize)> {
        let i = index
            .get(a)
            .copied()
            .flatten()
            .with_context(|| format!("bus {a} cannot be watched"))?;
        let j = index
            .get(b)
            .copied()
            .flatten()
            .with_context(|| format!("bus {b} cannot be watched"))?;
        Ok((i, j))
    };
    let mut watch_buses: Vec<[usize; 2]> = Vec::new();
    watch_buses.extend(tc.swaps.iter().map(|s| s.remove));
    watch_buses.extend(tc.swaps.iter().map(|s| s.add));
    watch_buses.extend(tc.watch.iter().copied());
    let watch = watch_buses
        .iter()
        .map(|&p| to_reduced(p))
        .collect::<anyhow::Result<Vec<_>>>()?;

    let mut tracker = OnlineTracker::new(base.bus_count() - 1, params, Some(&warm_start), watch)?;
    for k in 0..horizon {
        let price = DVector::from_column_slice(prices.values.column(k).as_slice());
        tracker.push(prices.interval_ids[k], &price)?;
    }

    let trace = &tracker.trace;
    let post_start = trace
        .iter()
        .position(|r| r.interval >= event)
        .unwrap_or(trace.len());
    let summarize = |col: usize, falling: bool| -> WatchSummary {
        let series: Vec<f64> = trace.iter().map(|r: &TraceRecord| r.values[col]).collect();
        let pre_event = if post_start == 0 {
            warm_start[tracker.watch[col]].abs()
        } else {
            series[post_start - 1]
        };
        let first_crossing = series[post_start..].iter().position(|&v| {
            if falling {
                v < DETECTION_THRESHOLD
            } else {
                v > DETECTION_THRESHOLD
            }
        });
        WatchSummary {
            buses: watch_buses[col],
            pre_event,
            first_crossing,
            final_value: series.last().copied().unwrap_or(f64::NAN),
            minimum: series.iter().copied().fold(f64::INFINITY, f64::min),
        }
    };
    let n_swaps = tc.swaps.len();
    let report = TrackingReport {
        horizon,
        event_interval: event,
        post_event_steps: trace.len() - post_start,
        rho: params.rho,
        eta: params.eta,
        removed: (0..n_swaps).map(|k| summarize(k, true)).collect(),
        added: (0..n_swaps)
            .map(|k| summarize(n_swaps + k, false))
            .collect(),
        persistent: (2 * n_swaps..watch_buses.len())
            .map(|k| summarize(k, true))
            .collect(),
        summary: sim.summary,
    };
    Ok(TrackingExperiment {
        report,
        tracker,
        prices,
        warm_start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_truth_is_perfect() {
        let topo = GridTopology::ieee30();
        let b = build_matrices(&topo).unwrap().reduced_laplacian;
        let r = evaluate(&b, &topo, 0.01).unwrap();
        assert_eq!(
            (r.edge_precision, r.edge_recall, r.edge_f1),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(r.frobenius_error, 0.0);
        assert!((r.true_average_degree - 78.0 / 29.0).abs() < 1e-12);
        let scaled = evaluate(&(&b * 3.5), &topo, 0.01).unwrap();
        assert_eq!(scaled.edge_f1, 1.0);
        assert!(scaled.frobenius_error < 1e-12);
    }

    #[test]
    fn evaluate_identity_has_no_recall() {
        let topo = GridTopology::ieee30();
        let r = evaluate(&DMatrix::identity(29, 29), &topo, 0.01).unwrap();
        assert_eq!(r.edge_recall, 0.0);
        assert_eq!(r.edge_f1, 0.0);
    }

    #[test]
    fn evaluate_rejects_wrong_size() {
        let r = evaluate(&DMatrix::identity(3, 3), &GridTopology::ieee30(), 0.01);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn swaps_rewire_lines() {
        let topo = GridTopology::ieee30();
        let swapped = apply_swaps(
            &topo,
            &[LineSwap {
                remove: [22, 23],
                add: [22, 25],
            }],
        )
        .unwrap();
        assert!(swapped.find_line(22, 23).is_none());
        assert!(swapped.find_line(22, 25).is_some());
        assert!(apply_swaps(
            &topo,
            &[LineSwap {
                remove: [0, 29],
                add: [1, 2]
            }]
        )
        .is_err());
    }
}
