use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::offers::MarketInstance;
use super::simplex::{solve_bounded, BoundedLp, SimplexOptions};
use crate::error::{Error, Result};
use crate::grid::GridMatrices;

/// Absolute slack below which a line counts as binding, scaled by `1 + f̄`.
pub const CONGESTION_TOLERANCE: f64 = 1e-7;

/// Economic dispatch over `K` variables:
/// `min c'p  s.t.  1'p = 0,  -f̄ <= H p <= f̄,  lower <= p <= upper`,
/// where `H = T G` maps variables to line flows.
#[derive(Debug, Clone)]
pub struct DispatchLp {
    pub costs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `L x K` flow sensitivities.
    pub flow_rows: DMatrix<f64>,
    pub flow_limits: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct DispatchSolution {
    pub dispatch: DVector<f64>,
    /// Price of the balance constraint.
    pub lambda0: f64,
    /// Multipliers of the lower flow limits, nonnegative.
    pub mu_lower: DVector<f64>,
    /// Multipliers of the upper flow limits, nonnegative.
    pub mu_upper: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub degenerate: bool,
}

impl DispatchSolution {
    /// `μ = μ̲ - μ̄`.
    pub fn mu(&self) -> DVector<f64> {
        &self.mu_lower - &self.mu_upper
    }
}

/// Optimality diagnostics of a dispatch solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    /// Worst violation of balance, flow limits and variable bounds.
    pub primal: f64,
    /// Worst sign violation of the reduced costs given where each variable
    /// sits relative to its bounds.
    pub stationarity: f64,
    /// `max_l |μ_l| (f̄_l - |f_l|)`, plus any flow multiplier whose sign
    /// points at the wrong limit.
    pub complementarity: f64,
    /// Primal minus Lagrangian dual objective.
    pub duality_gap: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
}

impl DispatchLp {
    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    /// `c - λ0 1 - H'μ`.
    pub fn reduced_costs(&self, lambda0: f64, mu: &DVector<f64>) -> DVector<f64> {
        let ht_mu = self.flow_rows.tr_mul(mu);
        DVector::from_iterator(
            self.len(),
            (0..self.len()).map(|k| self.costs[k] - lambda0 - ht_mu[k]),
        )
    }

    /// Lagrangian dual objective at `(λ0, μ)`.
    pub fn dual_objective(&self, lambda0: f64, mu: &DVector<f64>) -> f64 {
        let d = self.reduced_costs(lambda0, mu);
        let box_part: f64 = (0..self.len())
            .map(|k| {
                if d[k] > 0.0 {
                    d[k] * self.lower[k]
                } else {
                    d[k] * self.upper[k]
                }
            })
            .sum();
        box_part - mu.abs().dot(&self.flow_limits)
    }
}

/// Solves the dispatch LP and reads prices off the optimal basis.
///
/// Line flows enter the LP through slack variables `s = H p` bounded by
/// `±f̄`, so the multipliers of the flow rows are exactly `μ`.
pub fn solve_lp_with_duals(problem: &DispatchLp) -> Result<DispatchSolution> {
    let k = problem.len();
    let l = problem.flow_limits.len();
    if problem.flow_rows.shape() != (l, k) {
        return Err(Error::dims(
            format!("{l}x{k} flow rows"),
            format!("{:?}", problem.flow_rows.shape()),
        ));
    }
    let mut constraints = DMatrix::zeros(1 + l, k + l);
    constraints.row_mut(0).columns_mut(0, k).fill(1.0);
    constraints
        .view_mut((1, 0), (l, k))
        .copy_from(&problem.flow_rows);
    for i in 0..l {
        constraints[(1 + i, k + i)] = -1.0;
    }
    let mut costs = problem.costs.clone();
    costs.extend(std::iter::repeat_n(0.0, l));
    let mut lower = problem.lower.clone();
    lower.extend(problem.flow_limits.iter().map(|f| -f));
    let mut upper = problem.upper.clone();
    upper.extend(problem.flow_limits.iter().copied());
    let lp = BoundedLp {
        costs: DVector::from_vec(costs),
        constraints,
        rhs: DVector::zeros(1 + l),
        lower,
        upper,
    };
    let sol = solve_bounded(&lp, SimplexOptions::default())?;
    let mu = sol.duals.rows(1, l).into_owned();
    Ok(DispatchSolution {
        dispatch: sol.x.rows(0, k).into_owned(),
        lambda0: sol.duals[0],
        mu_lower: mu.map(|v| v.max(0.0)),
        mu_upper: mu.map(|v| (-v).max(0.0)),
        objective: sol.objective,
        iterations: sol.iterations,
        degenerate: sol.degenerate,
    })
}

/// Checks primal feasibility, reduced-cost signs, complementary slackness
/// and the duality gap.
pub fn kkt_residuals(problem: &DispatchLp, solution: &DispatchSolution) -> KktReport {
    let p = &solution.dispatch;
    let mu = solution.mu();
    let flows = &problem.flow_rows * p;

    let mut primal = p.sum().abs();
    for k in 0..problem.len() {
        primal = primal
            .max(problem.lower[k] - p[k])
            .max(p[k] - problem.upper[k]);
    }
    for i in 0..flows.len() {
        primal = primal.max(flows[i].abs() - problem.flow_limits[i]);
    }

    let d = problem.reduced_costs(solution.lambda0, &mu);
    let mut stationarity: f64 = 0.0;
    for k in 0..problem.len() {
        let (lo, hi) = (problem.lower[k], problem.upper[k]);
        if lo == hi {
            continue;
        }
        let scale = 1.0 + lo.abs().max(hi.abs());
        let at_lower = p[k] - lo <= 1e-9 * scale;
        let at_upper = hi - p[k] <= 1e-9 * scale;
        let violation = match (at_lower, at_upper) {
            (true, false) => (-d[k]).max(0.0),
            (false, true) => d[k].max(0.0),
            (true, true) => 0.0,
            (false, false) => d[k].abs(),
        };
        stationarity = stationarity.max(violation);
    }

    let mut complementarity: f64 = 0.0;
    for i in 0..flows.len() {
        let fmax = problem.flow_limits[i];
        let wrong_side = if mu[i] > 0.0 {
            fmax + flows[i]
        } else {
            fmax - flows[i]
        };
        complementarity = complementarity.max(mu[i].abs() * wrong_side.max(0.0));
    }

    let primal_objective: f64 = problem.costs.iter().zip(p.iter()).map(|(c, x)| c * x).sum();
    let dual_objective = problem.dual_objective(solution.lambda0, &mu);
    KktReport {
        primal,
        stationarity,
        complementarity,
        duality_gap: primal_objective - dual_objective,
        primal_objective,
        dual_objective,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispatchStatus {
    Feasible,
    Infeasible,
    Uncongested,
}

/// Market clearing result for one interval. Vectors are empty when the
/// interval is infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchOutcome {
    pub status: DispatchStatus,
    /// Net injection per bus.
    pub injections: Vec<f64>,
    /// Dispatch per LP variable.
    pub dispatch: Vec<f64>,
    pub lambda0: f64,
    /// `μ̲ - μ̄` per line.
    pub mu: Vec<f64>,
    pub flows: Vec<f64>,
    /// Nodal prices `λ0 1 + T'μ`, one per bus.
    pub lmp: Vec<f64>,
    /// Congestion component plus loss noise, one per non-reference bus.
    pub mcc: Vec<f64>,
    /// Loss noise added to `mcc`; zeros when none.
    pub noise: Vec<f64>,
    pub congested: BTreeSet<usize>,
    pub objective: f64,
    pub degenerate: bool,
}

impl DispatchOutcome {
    fn infeasible() -> Self {
        DispatchOutcome {
            status: DispatchStatus::Infeasible,
            injections: Vec::new(),
            dispatch: Vec::new(),
            lambda0: f64::NAN,
            mu: Vec::new(),
            flows: Vec::new(),
            lmp: Vec::new(),
            mcc: Vec::new(),
            noise: Vec::new(),
            congested: BTreeSet::new(),
            objective: f64::NAN,
            degenerate: false,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status != DispatchStatus::Infeasible
    }
}

/// Builds the dispatch LP for an interval.
pub fn dispatch_lp(instance: &MarketInstance, matrices: &GridMatrices) -> Result<DispatchLp> {
    instance.validate(matrices.bus_count())?;
    let flow_rows = DMatrix::from_fn(matrices.line_count(), instance.len(), |l, k| {
        matrices.shift_factors[(l, instance.block_to_bus[k])]
    });
    Ok(DispatchLp {
        costs: instance.costs.clone(),
        lower: instance.lower.clone(),
        upper: instance.upper.clone(),
        flow_rows,
        flow_limits: matrices.flow_limits.clone(),
    })
}

/// Clears one interval. `mlc`, if given, is added to the congestion
/// component (length `N`). Infeasible intervals yield an outcome with
/// status [`DispatchStatus::Infeasible`] instead of an error.
pub fn clear_market(
    instance: &MarketInstance,
    matrices: &GridMatrices,
    mlc: Option<&[f64]>,
) -> Result<DispatchOutcome> {
    let n = matrices.reduced_dim();
    if let Some(noise) = mlc {
        if noise.len() != n {
            return Err(Error::dims(n, noise.len()));
        }
    }
    let problem = dispatch_lp(instance, matrices)?;
    let solution = match solve_lp_with_duals(&problem) {
        Ok(s) => s,
        Err(Error::Infeasible { .. }) => return Ok(DispatchOutcome::infeasible()),
        Err(e) => return Err(e),
    };
    let mu = solution.mu();
    let flows = &problem.flow_rows * &solution.dispatch;
    let congested: BTreeSet<usize> = (0..flows.len())
        .filter(|&l| {
            let fmax = problem.flow_limits[l];
            flows[l].abs() >= fmax - CONGESTION_TOLERANCE * (1.0 + fmax)
        })
        .collect();
    let lmp = matrices
        .shift_factors
        .tr_mul(&mu)
        .add_scalar(solution.lambda0);
    let noise = mlc.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let mcc = matrices.congestion_component(&mu) + DVector::from_column_slice(&noise);
    let status = if congested.is_empty() {
        DispatchStatus::Uncongested
    } else {
        DispatchStatus::Feasible
    };
    Ok(DispatchOutcome {
        status,
        injections: instance.bus_injections(solution.dispatch.as_slice(), matrices.bus_count()),
        dispatch: solution.dispatch.iter().copied().collect(),
        lambda0: solution.lambda0,
        mu: mu.iter().copied().collect(),
        flows: flows.iter().copied().collect(),
        lmp: lmp.iter().copied().collect(),
        mcc: mcc.iter().copied().collect(),
        noise,
        congested,
        objective: solution.objective,
        degenerate: solution.degenerate,
    })
}
