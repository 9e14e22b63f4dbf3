//! Batch ADMM recovery of the reduced Laplacian from a price matrix.
//!
//! Solves
//!
//! ```text
//! min  ‖B Π‖₁ + κ1 tr(P B) - κ2 log det B   s.t.  B <= I entrywise
//! ```
//!
//! with `P = I - 11'`, by splitting `B` into three copies (`B1` for the
//! data fit, `B2` for the entrywise bound, `B3` for the log-det barrier)
//! and `S = B1 Π` for the ℓ1 term.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::prox::{psd_logdet_prox, soft_threshold_matrix};

/// Primal tolerance per unit of `‖Π‖_F` when none is given.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryParams {
    pub kappa1: f64,
    pub kappa2: f64,
    pub rho: f64,
    pub max_iters: usize,
    /// Bound on all three consensus residuals; `None` means
    /// `DEFAULT_RELATIVE_TOL * ‖Π‖_F`.
    pub primal_tol: Option<f64>,
    /// Bound on the per-iteration change of `B2` and `B3`; the primal
    /// residuals alone are already tiny after the first step from the
    /// identity, so both must hold to stop.
    pub dual_tol: f64,
    pub threshold_tau: f64,
    pub target_degree: Option<f64>,
}

impl Default for RecoveryParams {
    fn default() -> Self {
        RecoveryParams {
            kappa1: 1.0,
            kappa2: 1.0,
            rho: 1e4,
            max_iters: 5000,
            primal_tol: None,
            dual_tol: 1e-6,
            threshold_tau: 0.01,
            target_degree: None,
        }
    }
}

impl RecoveryParams {
    pub fn with_kappas(self, kappa1: f64, kappa2: f64) -> Self {
        RecoveryParams {
            kappa1,
            kappa2,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("rho", self.rho),
            ("dual_tol", self.dual_tol),
            ("threshold_tau", self.threshold_tau),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if let Some(tol) = self.primal_tol {
            if !(tol > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "primal_tol must be positive, got {tol}"
                )));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be positive".into()));
        }
        Ok(())
    }

    /// The primal tolerance in effect for a given price matrix.
    pub fn primal_tol_for(&self, pi: &DMatrix<f64>) -> f64 {
        self.primal_tol.unwrap_or(DEFAULT_RELATIVE_TOL * pi.norm())
    }
}

/// Consensus residuals `(‖B1-B2‖, ‖B1-B3‖, ‖B1Π-S‖)` and the iterate change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub b1_b2: f64,
    pub b1_b3: f64,
    pub data: f64,
    pub change: f64,
}

impl Residuals {
    pub fn primal(&self) -> f64 {
        self.b1_b2.max(self.b1_b3).max(self.data)
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub b3: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub m12: DMatrix<f64>,
    pub m13: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub iter: usize,
    pub residuals: Vec<Residuals>,
}

/// Identity copies, `S = Π`, zero multipliers.
pub fn init_state(pi: &DMatrix<f64>) -> AdmmState {
    let n = pi.nrows();
    let eye = DMatrix::identity(n, n);
    AdmmState {
        b1: eye.clone(),
        b2: eye.clone(),
        b3: eye,
        s: pi.clone(),
        m12: DMatrix::zeros(n, n),
        m13: DMatrix::zeros(n, n),
        m: DMatrix::zeros(n, pi.ncols()),
        iter: 0,
        residuals: Vec::new(),
    }
}

/// Price matrix with the cached inverse of `2I + ΠΠ'`.
#[derive(Debug, Clone)]
pub struct BatchProblem {
    pub pi: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    selector: DMatrix<f64>,
}

impl BatchProblem {
    pub fn new(pi: DMatrix<f64>) -> Result<Self> {
        let n = pi.nrows();
        if n == 0 || pi.ncols() == 0 {
            return Err(Error::EmptyHorizon);
        }
        let gram = DMatrix::identity(n, n) * 2.0 + &pi * pi.transpose();
        let gram_inv = gram
            .cholesky()
            .ok_or(Error::Singular {
                condition: f64::INFINITY,
                cap: f64::INFINITY,
            })?
            .inverse();
        Ok(BatchProblem {
            gram_inv,
            selector: linalg::off_diagonal_selector(n),
            pi,
        })
    }

    pub fn bus_count(&self) -> usize {
        self.pi.nrows()
    }

    /// Closed-form minimizer of the augmented Lagrangian in `B1`.
    pub fn update_b1(&self, state: &AdmmState, params: &RecoveryParams) -> DMatrix<f64> {
        let rhs = &state.b2 - &state.m12 + &state.b3 - &state.m13
            + (&state.s - &state.m) * self.pi.transpose()
            - &self.selector * (params.kappa1 / params.rho);
        rhs * &self.gram_inv
    }

    /// One full iteration; returns the residuals it produced.
    pub fn step(&self, state: &mut AdmmState, params: &RecoveryParams) -> Residuals {
        let b1 = self.update_b1(state, params);
        let b2 = update_b2(&b1, &state.m12);
        let b3 = update_b3(&b1, &state.m13, params);
        let b1_pi = &b1 * &self.pi;
        let s = update_s(&b1_pi, &state.m, params);
        let change = (&b2 - &state.b2).norm().max((&b3 - &state.b3).norm());
        state.b1 = b1;
        state.b2 = b2;
        state.b3 = b3;
        state.s = s;
        let residuals = update_multipliers(state, &b1_pi);
        let residuals = Residuals {
            change,
            ..residuals
        };
        state.iter += 1;
        state.residuals.push(residuals);
        residuals
    }
}

/// `min(B1 + M12, I)` entrywise.
pub fn update_b2(b1: &DMatrix<f64>, m12: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(b1.nrows(), b1.ncols(), |i, j| {
        let cap = if i == j { 1.0 } else { 0.0 };
        (b1[(i, j)] + m12[(i, j)]).min(cap)
    })
}

/// Log-det prox of `B1 + M13` with weight `κ2/ρ`.
pub fn update_b3(b1: &DMatrix<f64>, m13: &DMatrix<f64>, params: &RecoveryParams) -> DMatrix<f64> {
    psd_logdet_prox(&(b1 + m13), params.kappa2 / params.rho)
}

/// Soft threshold of `B1Π + M` at `1/ρ`.
pub fn update_s(b1_pi: &DMatrix<f64>, m: &DMatrix<f64>, params: &RecoveryParams) -> DMatrix<f64> {
    soft_threshold_matrix(&(b1_pi + m), 1.0 / params.rho)
}

/// Dual ascent on the three consensus constraints. `b1_pi` is `B1 Π` for
/// the current `B1`. The returned residuals have `change = 0`.
pub fn update_multipliers(state: &mut AdmmState, b1_pi: &DMatrix<f64>) -> Residuals {
    let r12 = &state.b1 - &state.b2;
    let r13 = &state.b1 - &state.b3;
    let rs = b1_pi - &state.s;
    let residuals = Residuals {
        b1_b2: r12.norm(),
        b1_b3: r13.norm(),
        data: rs.norm(),
        change: 0.0,
    };
    state.m12 += r12;
    state.m13 += r13;
    state.m += rs;
    residuals
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchStatus {
    Converged,
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    /// `½(B1 + B1')` at the last iterate.
    pub b_hat: DMatrix<f64>,
    pub s_hat: DMatrix<f64>,
    pub state: AdmmState,
    pub status: BatchStatus,
    pub primal_tol: f64,
}

impl BatchOutcome {
    pub fn iterations(&self) -> usize {
        self.state.iter
    }

    pub fn last_residuals(&self) -> Option<Residuals> {
        self.state.residuals.last().copied()
    }

    /// Turns a run that hit the iteration cap into an error.
    pub fn require_converged(&self) -> Result<()> {
        match self.status {
            BatchStatus::Converged => Ok(()),
            BatchStatus::MaxIters => Err(Error::MaxItersExceeded {
                iters: self.state.iter,
                primal: self.last_residuals().map_or(f64::NAN, |r| r.primal()),
                tol: self.primal_tol,
            }),
        }
    }
}

/// Runs the batch ADMM until the primal residuals are within tolerance and
/// the iterates have settled, or `max_iters` is reached. Reaching the cap is
/// reported through [`BatchOutcome::status`], not as an error.
pub fn run_batch(pi: &DMatrix<f64>, params: &RecoveryParams) -> Result<BatchOutcome> {
    params.validate()?;
    let problem = BatchProblem::new(pi.clone())?;
    let mut state = init_state(pi);
    run_from(&problem, &mut state, params);
    let tol = params.primal_tol_for(pi);
    let status = match state.residuals.last() {
        Some(r) if r.primal() <= tol && r.change <= params.dual_tol => BatchStatus::Converged,
        _ => BatchStatus::MaxIters,
    };
    Ok(BatchOutcome {
        b_hat: linalg::symmetrize(&state.b1),
        s_hat: state.s.clone(),
        state,
        status,
        primal_tol: tol,
    })
}

fn run_from(problem: &BatchProblem, state: &mut AdmmState, params: &RecoveryParams) {
    let tol = params.primal_tol_for(&problem.pi);
    while state.iter < params.max_iters {
        let r = problem.step(state, params);
        debug_assert!(state.b2.iter().all(|v| *v <= 1.0));
        if r.primal() <= tol && r.change <= params.dual_tol {
            break;
        }
    }
}

/// Normalized, thresholded estimate and its edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportEstimate {
    /// Estimate divided by its largest diagonal entry, small entries zeroed.
    pub normalized: DMatrix<f64>,
    /// Unordered index pairs `(i, j)`, `i < j`, with a nonzero entry in
    /// either `(i, j)` or `(j, i)`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl SupportEstimate {
    /// Mean number of neighbours per row.
    pub fn average_degree(&self) -> f64 {
        let n = self.normalized.nrows();
        if n == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / n as f64
        }
    }
}

/// Scales by the maximum diagonal entry and zeroes entries below `tau` in
/// magnitude.
pub fn normalize_and_threshold(b_hat: &DMatrix<f64>, tau: f64) -> Result<SupportEstimate> {
    let max_diag = linalg::max_diagonal(b_hat);
    if !(max_diag > 0.0) {
        return Err(Error::DegenerateEstimate(max_diag));
    }
    let normalized = b_hat.map(|v| {
        let v = v / max_diag;
        if v.abs() < tau {
            0.0
        } else {
            v
        }
    });
    let n = normalized.nrows();
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if normalized[(i, j)] != 0.0 || normalized[(j, i)] != 0.0 {
                edges.insert((i, j));
            }
        }
    }
    Ok(SupportEstimate { normalized, edges })
}

/// Result of one grid point of a κ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub kappa1: f64,
    pub kappa2: f64,
    pub average_degree: f64,
    pub iterations: usize,
    pub status: BatchStatus,
    pub primal_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSweep {
    pub grid: Vec<f64>,
    /// Row-major over `(κ1, κ2)`: cell `(i, j)` sits at `i * grid.len() + j`.
    pub cells: Vec<SweepCell>,
    pub best: (f64, f64),
}

impl KappaSweep {
    pub fn cell(&self, i: usize, j: usize) -> &SweepCell {
        &self.cells[i * self.grid.len() + j]
    }

    pub fn degree_table(&self) -> Vec<Vec<f64>> {
        self.cells
            .chunks(self.grid.len())
            .map(|row| row.iter().map(|c| c.average_degree).collect())
            .collect()
    }
}

/// Runs [`run_batch`] for every `(κ1, κ2)` in `grid × grid` in parallel and
/// picks the pair whose recovered average degree is closest to `target`
/// (ties go to the earlier cell).
pub fn tune_kappas(
    pi: &DMatrix<f64>,
    grid: &[f64],
    target: f64,
    base: &RecoveryParams,
) -> Result<KappaSweep> {
    if grid.is_empty() {
        return Err(Error::InvalidParams("empty kappa grid".into()));
    }
    let pairs: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&k1| grid.iter().map(move |&k2| (k1, k2)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(k1, k2)| {
            let params = base.with_kappas(k1, k2);
            let out = run_batch(pi, &params)?;
            let support = normalize_and_threshold(&out.b_hat, params.threshold_tau)?;
            Ok(SweepCell {
                kappa1: k1,
                kappa2: k2,
                average_degree: support.average_degree(),
                iterations: out.iterations(),
                status: out.status,
                primal_residual: out.last_residuals().map_or(f64::NAN, |r| r.primal()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = cells
        .iter()
        .fold(None::<&SweepCell>, |best, c| match best {
            Some(b) if (b.average_degree - target).abs() <= (c.average_degree - target).abs() => {
                Some(b)
            }
            _ => Some(c),
        })
        .map(|c| (c.kappa1, c.kappa2))
        .expect("grid is nonempty");
    Ok(KappaSweep {
        grid: grid.to_vec(),
        cells,
        best,
    })
}
