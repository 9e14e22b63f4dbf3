//! Dense bounded-variable revised simplex.
//!
//! Solves `min c'x  s.t.  A x = b,  l <= x <= u` with a two-phase method
//! (artificial variables in phase one) and Bland's smallest-index rule for
//! both the entering and the leaving variable. The basis inverse is kept
//! explicitly, updated by elementary row operations and refactorized
//! periodically. Bounds may be infinite.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BoundedLp {
    pub costs: DVector<f64>,
    pub constraints: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iters: usize,
    pub refactor_every: usize,
    /// Reduced-cost tolerance for optimality.
    pub optimality_tol: f64,
    /// Bound-violation tolerance, relative to `1 + |b|_inf`.
    pub feasibility_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_iters: 50_000,
            refactor_every: 64,
            optimality_tol: 1e-9,
            feasibility_tol: 1e-9,
            pivot_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    /// Row duals `y` with `c - A'y` the reduced costs.
    pub duals: DVector<f64>,
    pub reduced_costs: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Some basic variable sits at one of its bounds, so the duals of the
    /// terminating basis need not be unique.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Position {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

struct Tableau<'a> {
    lp: &'a BoundedLp,
    opts: SimplexOptions,
    m: usize,
    n: usize,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    pos: Vec<Position>,
    basis: Vec<usize>,
    binv: DMatrix<f64>,
    iterations: usize,
}

impl<'a> Tableau<'a> {
    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.n {
            self.lp.constraints.column(j).into_owned()
        } else {
            let mut e = DVector::zeros(self.m);
            e[j - self.n] = self.art_sign[j - self.n];
            e
        }
    }

    fn dot_column(&self, row: &DVector<f64>, j: usize) -> f64 {
        if j < self.n {
            self.lp.constraints.column(j).dot(row)
        } else {
            row[j - self.n] * self.art_sign[j - self.n]
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let mut basis_matrix = DMatrix::zeros(self.m, self.m);
        for (i, &j) in self.basis.iter().enumerate() {
            basis_matrix.set_column(i, &self.column(j));
        }
        self.binv = basis_matrix.try_inverse().ok_or(Error::Singular {
            condition: f64::INFINITY,
            cap: f64::INFINITY,
        })?;
        // Recompute basic values from the nonbasic ones.
        let mut r = self.lp.rhs.clone();
        for j in 0..self.n + self.m {
            if self.pos[j] != Position::Basic && self.x[j] != 0.0 {
                r -= self.column(j) * self.x[j];
            }
        }
        let xb = &self.binv * r;
        for (i, &j) in self.basis.iter().enumerate() {
            self.x[j] = xb[i];
        }
        Ok(())
    }

    fn duals(&self, costs: &[f64]) -> DVector<f64> {
        let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&j| costs[j]));
        self.binv.tr_mul(&cb)
    }

    /// Runs simplex iterations for the given cost vector until optimal.
    fn optimize(&mut self, costs: &[f64]) -> Result<()> {
        let total = self.n + self.m;
        let mut since_refactor = 0;
        loop {
            if since_refactor >= self.opts.refactor_every {
                self.refactor()?;
                since_refactor = 0;
            }
            let y = self.duals(costs);
            let mut entering = None;
            for j in 0..total {
                if self.pos[j] == Position::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = costs[j] - self.dot_column(&y, j);
                if d < -self.opts.optimality_tol && self.x[j] < self.upper[j] {
                    entering = Some((j, 1.0));
                    break;
                }
                if d > self.opts.optimality_tol && self.x[j] > self.lower[j] {
                    entering = Some((j, -1.0));
                    break;
                }
            }
            let Some((q, dir)) = entering else {
                return Ok(());
            };
            if self.iterations >= self.opts.max_iters {
                return Err(Error::IterationLimit(self.opts.max_iters));
            }
            self.iterations += 1;
            since_refactor += 1;

            let w = &self.binv * self.column(q);
            // Moving x_q by dir * theta changes x_B by -dir * theta * w.
            let mut theta = self.upper[q] - self.lower[q];
            let mut leaving: Option<(usize, Position)> = None;
            for i in 0..self.m {
                let delta = -dir * w[i];
                let j = self.basis[i];
                let (limit, bound) = if delta < -self.opts.pivot_tol {
                    ((self.x[j] - self.lower[j]) / -delta, Position::Lower)
                } else if delta > self.opts.pivot_tol {
                    ((self.upper[j] - self.x[j]) / delta, Position::Upper)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let better = match leaving {
                    None => limit < theta,
                    Some((r, _)) => limit < theta || (limit == theta && j < self.basis[r]),
                };
                if better {
                    theta = limit;
                    leaving = Some((i, bound));
                }
            }
            if theta.is_infinite() {
                return Err(Error::Unbounded { variable: q });
            }

            self.x[q] += dir * theta;
            for i in 0..self.m {
                let j = self.basis[i];
                self.x[j] -= dir * theta * w[i];
            }
            match leaving {
                None => {
                    self.pos[q] = if dir > 0.0 {
                        Position::Upper
                    } else {
                        Position::Lower
                    };
                    self.x[q] = if dir > 0.0 {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                }
                Some((r, bound)) => {
                    let out = self.basis[r];
                    self.x[out] = if bound == Position::Lower {
                        self.lower[out]
                    } else {
                        self.upper[out]
                    };
                    self.pos[out] = bound;
                    self.pos[q] = Position::Basic;
                    self.basis[r] = q;
                    self.pivot(r, &w);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, w: &DVector<f64>) {
        let pivot = w[r];
        let row_r = self.binv.row(r) / pivot;
        for i in 0..self.m {
            if i != r && w[i] != 0.0 {
                let scaled = &row_r * w[i];
                let mut row = self.binv.row_mut(i);
                row -= scaled;
            }
        }
        self.binv.set_row(r, &row_r);
    }

    /// Swaps basic artificials at zero for structural columns where possible.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if self.basis[r] < self.n {
                continue;
            }
            let row = self.binv.row(r).transpose();
            let candidate = (0..self.n)
                .filter(|&j| self.pos[j] != Position::Basic)
                .find(|&j| self.dot_column(&row, j).abs() > 1e-7);
            if let Some(q) = candidate {
                let w = &self.binv * self.column(q);
                let out = self.basis[r];
                self.pos[out] = Position::Lower;
                self.x[out] = 0.0;
                self.pos[q] = Position::Basic;
                self.basis[r] = q;
                self.pivot(r, &w);
            }
        }
    }
}

/// Solves a bounded LP. Returns [`Error::Infeasible`] when phase one cannot
/// reach a feasible point and [`Error::Unbounded`] when phase two finds an
/// improving ray.
pub fn solve_bounded(lp: &BoundedLp, opts: SimplexOptions) -> Result<LpSolution> {
    let (m, n) = lp.constraints.shape();
    if lp.costs.len() != n || lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::dims(
            format!("{n} columns"),
            format!("{} costs", lp.costs.len()),
        ));
    }
    if lp.rhs.len() != m {
        return Err(Error::dims(
            format!("{m} rows"),
            format!("{} right-hand sides", lp.rhs.len()),
        ));
    }
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return Err(Error::Infeasible {
                residual: lp.lower[j] - lp.upper[j],
            });
        }
    }

    let mut x = vec![0.0; n + m];
    let mut pos = vec![Position::Basic; n + m];
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        (x[j], pos[j]) = if l.is_finite() {
            (l, Position::Lower)
        } else if u.is_finite() {
            (u, Position::Upper)
        } else {
            (0.0, Position::Zero)
        };
    }
    let mut residual = lp.rhs.clone();
    for j in 0..n {
        if x[j] != 0.0 {
            residual -= lp.constraints.column(j) * x[j];
        }
    }
    let art_sign: Vec<f64> = residual
        .iter()
        .map(|&r| if r >= 0.0 { 1.0 } else { -1.0 })
        .collect();
    for i in 0..m {
        x[n + i] = residual[i].abs();
    }
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    lower.extend(std::iter::repeat_n(0.0, m));
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));

    let mut tab = Tableau {
        lp,
        opts,
        m,
        n,
        binv: DMatrix::from_diagonal(&DVector::from_vec(art_sign.clone())),
        art_sign,
        lower,
        upper,
        x,
        pos,
        basis: (n..n + m).collect(),
        iterations: 0,
    };

    let scale = 1.0 + lp.rhs.amax() + lp.constraints.amax();
    let phase_one: Vec<f64> = (0..n + m).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    tab.optimize(&phase_one)?;
    tab.refactor()?;
    let infeasibility: f64 = tab.x[n..].iter().sum();
    if infeasibility > opts.feasibility_tol * scale * (m.max(1) as f64) {
        return Err(Error::Infeasible {
            residual: infeasibility,
        });
    }
    tab.drive_out_artificials();
    for i in 0..m {
        tab.upper[n + i] = 0.0;
        if tab.pos[n + i] != Position::Basic {
            tab.x[n + i] = 0.0;
            tab.pos[n + i] = Position::Lower;
        }
    }
    tab.refactor()?;

    let mut phase_two: Vec<f64> = lp.costs.iter().copied().collect();
    phase_two.extend(std::iter::repeat_n(0.0, m));
    tab.optimize(&phase_two)?;
    tab.refactor()?;

    let duals = tab.duals(&phase_two);
    let x = DVector::from_iterator(n, tab.x[..n].iter().copied());
    let reduced_costs = &lp.costs - lp.constraints.tr_mul(&duals);
    let degenerate = tab.basis.iter().any(|&j| {
        let v = tab.x[j];
        let tol = opts.feasibility_tol * scale;
        (v - tab.lower[j]).abs() <= tol || (tab.upper[j] - v).abs() <= tol
    });
    Ok(LpSolution {
        objective: lp.costs.dot(&x),
        x,
        duals,
        reduced_costs,
        iterations: tab.iterations,
        degenerate,
    })
}
