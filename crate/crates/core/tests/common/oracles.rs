//! Independent reference computations for the integration and acceptance
//! tests. Nothing here calls the solvers under test; the closed forms are
//! checked against generic numerical minimization of the raw objectives.

#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use topotrack::{GridTopology, Line, OfferCurve};

// ---------------------------------------------------------------------------
// Scalar soft threshold

/// Minimizer of `β|u| + ½(u - x)²` by a grid scan followed by golden-section
/// refinement.
pub fn scalar_soft_oracle(x: f64, beta: f64) -> f64 {
    let f = |u: f64| beta * u.abs() + 0.5 * (u - x) * (u - x);
    let span = x.abs() + beta + 1.0;
    let steps = 4000;
    let mut best = -span;
    for i in 0..=steps {
        let u = -span + 2.0 * span * i as f64 / steps as f64;
        if f(u) < f(best) {
            best = u;
        }
    }
    let h = 2.0 * span / steps as f64;
    golden(f, best - h, best + h, 1e-13)
}

pub fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > tol {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

// ---------------------------------------------------------------------------
// Objectives of the form
//   Σ_i w_i/2 ‖X - C_i‖²_F + ⟨L, X⟩ + Σ_m ψ((X z)_m)

#[derive(Debug, Clone, Copy)]
pub enum RowLoss {
    /// `weight * |u|`.
    Abs { weight: f64 },
    /// `weight * h_κ(u)`.
    Huber { weight: f64, kappa: f64 },
}

impl RowLoss {
    pub fn value(&self, u: f64) -> f64 {
        match *self {
            RowLoss::Abs { weight } => weight * u.abs(),
            RowLoss::Huber { weight, kappa } => weight * huber(u, kappa),
        }
    }

    /// Value, first and second derivative of the smoothed loss. `|u|` is
    /// replaced by `sqrt(u² + ε²) - ε`.
    fn smooth(&self, u: f64, eps: f64) -> (f64, f64, f64) {
        match *self {
            RowLoss::Abs { weight } => {
                let r = (u * u + eps * eps).sqrt();
                (
                    weight * (r - eps),
                    weight * u / r,
                    weight * eps * eps / (r * r * r),
                )
            }
            RowLoss::Huber { weight, kappa } => {
                if u.abs() <= kappa {
                    (weight * 0.5 * u * u, weight * u, weight)
                } else {
                    (
                        weight * (kappa * u.abs() - 0.5 * kappa * kappa),
                        weight * kappa * u.signum(),
                        0.0,
                    )
                }
            }
        }
    }
}

pub fn huber(u: f64, kappa: f64) -> f64 {
    if u.abs() <= kappa {
        0.5 * u * u
    } else {
        kappa * u.abs() - 0.5 * kappa * kappa
    }
}

#[derive(Debug, Clone)]
pub struct RankOneObjective {
    pub quadratic: Vec<(f64, DMatrix<f64>)>,
    pub linear: DMatrix<f64>,
    pub z: DVector<f64>,
    pub loss: RowLoss,
}

impl RankOneObjective {
    pub fn value(&self, x: &DMatrix<f64>) -> f64 {
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|(w, c)| 0.5 * w * (x - c).norm_squared())
            .sum();
        let lin = self.linear.component_mul(x).sum();
        let loss: f64 = (x * &self.z).iter().map(|&u| self.loss.value(u)).sum();
        quad + lin + loss
    }

    fn smooth_value(&self, x: &DMatrix<f64>, eps: f64) -> f64 {
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|(w, c)| 0.5 * w * (x - c).norm_squared())
            .sum();
        let lin = self.linear.component_mul(x).sum();
        let loss: f64 = (x * &self.z)
            .iter()
            .map(|&u| self.loss.smooth(u, eps).0)
            .sum();
        quad + lin + loss
    }

    fn smooth_gradient(&self, x: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
        let mut g = self.linear.clone();
        for (w, c) in &self.quadratic {
            g += (x - c) * *w;
        }
        let d = (x * &self.z).map(|u| self.loss.smooth(u, eps).1);
        g + d * self.z.transpose()
    }

    /// Dense Hessian over the column-major vectorization of `X`.
    fn smooth_hessian(&self, x: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
        let (m, n) = x.shape();
        let wsum: f64 = self.quadratic.iter().map(|(w, _)| w).sum();
        let curv = (x * &self.z).map(|u| self.loss.smooth(u, eps).2);
        let mut h = DMatrix::identity(m * n, m * n) * wsum;
        // Entry X[(r, j)] sits at j * m + r; the loss couples entries of the
        // same row r through z z'.
        for r in 0..m {
            for j in 0..n {
                for k in 0..n {
                    h[(j * m + r, k * m + r)] += curv[r] * self.z[j] * self.z[k];
                }
            }
        }
        h
    }

    /// Damped Newton on the (smoothed) objective with backtracking, tightening
    /// the smoothing from 1e-2 to 1e-13. Huber needs no smoothing and runs a
    /// single stage.
    pub fn minimize(&self, start: &DMatrix<f64>) -> DMatrix<f64> {
        let stages: Vec<f64> = match self.loss {
            RowLoss::Abs { .. } => (2..=13).map(|k| 10f64.powi(-k)).collect(),
            RowLoss::Huber { .. } => vec![0.0],
        };
        let (m, n) = start.shape();
        let mut x = start.clone();
        for eps in stages {
            for _ in 0..200 {
                let g = self.smooth_gradient(&x, eps);
                if g.norm() < 1e-13 * (1.0 + x.norm()) {
                    break;
                }
                let h = self.smooth_hessian(&x, eps);
                let gv = DVector::from_column_slice(g.as_slice());
                let dir = match h.clone().cholesky() {
                    Some(ch) => -ch.solve(&gv),
                    None => -gv.clone(),
                };
                let dir = DMatrix::from_column_slice(m, n, dir.as_slice());
                let f0 = self.smooth_value(&x, eps);
                let slope = g.component_mul(&dir).sum();
                let mut t = 1.0;
                let mut moved = false;
                while t > 1e-16 {
                    let cand = &x + &dir * t;
                    if self.smooth_value(&cand, eps) <= f0 + 1e-4 * t * slope {
                        x = cand;
                        moved = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !moved {
                    break;
                }
            }
        }
        x
    }

    /// Plain gradient descent with step `1 / L`, for smooth losses only.
    pub fn gradient_descent(&self, start: &DMatrix<f64>, iters: usize) -> DMatrix<f64> {
        let wsum: f64 = self.quadratic.iter().map(|(w, _)| w).sum();
        let curv = match self.loss {
            RowLoss::Huber { weight, .. } => weight,
            RowLoss::Abs { .. } => panic!("gradient descent needs a smooth loss"),
        };
        let step = 1.0 / (wsum + curv * self.z.norm_squared());
        let mut x = start.clone();
        for _ in 0..iters {
            let g = self.smooth_gradient(&x, 0.0);
            if g.norm() < 1e-14 {
                break;
            }
            x -= g * step;
        }
        x
    }
}

/// The ℓ1 row prox objective `‖X z‖₁ + ½‖X - Y‖²`.
pub fn l1_prox_objective(y: &DMatrix<f64>, z: &DVector<f64>) -> RankOneObjective {
    RankOneObjective {
        quadratic: vec![(1.0, y.clone())],
        linear: DMatrix::zeros(y.nrows(), y.ncols()),
        z: z.clone(),
        loss: RowLoss::Abs { weight: 1.0 },
    }
}

/// The Huber row prox objective `α Σ h_κ((Xz)_m) + ½‖X - Y‖²`.
pub fn huber_prox_objective(
    y: &DMatrix<f64>,
    z: &DVector<f64>,
    kappa: f64,
    alpha: f64,
) -> RankOneObjective {
    RankOneObjective {
        quadratic: vec![(1.0, y.clone())],
        linear: DMatrix::zeros(y.nrows(), y.ncols()),
        z: z.clone(),
        loss: RowLoss::Huber {
            weight: alpha,
            kappa,
        },
    }
}

/// Raw per-step objective of the online solver:
///
/// `f(B π) + (κ1/T) tr(P B) + ρ/2‖B - B2 + M12‖² + ρ/2‖B - B3 + M13‖² + η/2‖B - B1‖²`
///
/// with `P = I - 11'`. `loss = None` drops `f`.
#[allow(clippy::too_many_arguments)]
pub fn online_step_objective(
    b1: &DMatrix<f64>,
    b2: &DMatrix<f64>,
    b3: &DMatrix<f64>,
    m12: &DMatrix<f64>,
    m13: &DMatrix<f64>,
    price: &DVector<f64>,
    kappa1: f64,
    horizon: f64,
    rho: f64,
    eta: f64,
    loss: RowLoss,
) -> RankOneObjective {
    let n = b1.nrows();
    let p = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0);
    RankOneObjective {
        quadratic: vec![(rho, b2 - m12), (rho, b3 - m13), (eta, b1.clone())],
        // d/dB tr(P B) = P'.
        linear: p.transpose() * (kappa1 / horizon),
        z: price.clone(),
        loss,
    }
}

/// `|a - b| / max(1, |b|)`.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

// ---------------------------------------------------------------------------
// Log-det prox

/// `‖B - ½(X + X') - α B⁻¹‖_F`, zero exactly at the log-det prox of `X`.
pub fn logdet_stationarity(b: &DMatrix<f64>, x: &DMatrix<f64>, alpha: f64) -> f64 {
    let inv = b.clone().try_inverse().expect("prox output is invertible");
    (b - (x + x.transpose()) * 0.5 - inv * alpha).norm()
}

// ---------------------------------------------------------------------------
// DC network

/// Reduced Laplacian, its inverse and the full-bus shift factors, built
/// edge by edge with reference bus 0 and inverted by LU.
pub struct DcNetwork {
    pub laplacian: DMatrix<f64>,
    pub laplacian_inv: DMatrix<f64>,
    /// `L x (N+1)`; column 0 is zero.
    pub shift: DMatrix<f64>,
}

pub fn dc_network(topology: &GridTopology) -> DcNetwork {
    assert_eq!(
        topology.reference_bus(),
        0,
        "oracle assumes bus 0 as reference"
    );
    let n = topology.bus_count() - 1;
    let mut lap = DMatrix::zeros(n, n);
    for line in topology.lines() {
        let y = 1.0 / line.reactance;
        let (a, b) = (line.from, line.to);
        if a > 0 {
            lap[(a - 1, a - 1)] += y;
        }
        if b > 0 {
            lap[(b - 1, b - 1)] += y;
        }
        if a > 0 && b > 0 {
            lap[(a - 1, b - 1)] -= y;
            lap[(b - 1, a - 1)] -= y;
        }
    }
    let inv = lap.clone().lu().try_inverse().expect("connected grid");
    let mut shift = DMatrix::zeros(topology.line_count(), n + 1);
    for (l, line) in topology.lines().iter().enumerate() {
        let y = 1.0 / line.reactance;
        for bus in 1..=n {
            let ta = if line.from > 0 {
                inv[(line.from - 1, bus - 1)]
            } else {
                0.0
            };
            let tb = if line.to > 0 {
                inv[(line.to - 1, bus - 1)]
            } else {
                0.0
            };
            shift[(l, bus)] = y * (ta - tb);
        }
    }
    DcNetwork {
        laplacian: lap,
        laplacian_inv: inv,
        shift,
    }
}

/// Congestion prices `B⁻¹ A' D μ` computed as `T'μ` restricted to the
/// non-reference buses.
pub fn congestion_prices(net: &DcNetwork, mu: &DVector<f64>) -> DVector<f64> {
    let full = net.shift.tr_mul(mu);
    full.rows(1, full.len() - 1).into_owned()
}

// ---------------------------------------------------------------------------
// Random instances

/// A connected grid: random spanning tree plus `extra` distinct chords.
pub fn random_connected_grid<R: Rng>(rng: &mut R, buses: usize, extra: usize) -> GridTopology {
    let mut order: Vec<usize> = (0..buses).collect();
    order.shuffle(rng);
    let mut edges = BTreeSet::new();
    for i in 1..buses {
        let j = order[rng.random_range(0..i)];
        let (a, b) = (order[i].min(j), order[i].max(j));
        edges.insert((a, b));
    }
    let max_edges = buses * (buses - 1) / 2;
    let target = (edges.len() + extra).min(max_edges);
    while edges.len() < target {
        let a = rng.random_range(0..buses);
        let b = rng.random_range(0..buses);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let lines = edges
        .into_iter()
        .map(|(a, b)| {
            let (from, to) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
            Line::new(
                from,
                to,
                rng.random_range(0.05..1.0),
                rng.random_range(5.0..50.0),
            )
        })
        .collect();
    GridTopology::new(buses, lines, 0).expect("generated grid is valid")
}

/// Offers (1-3 increasing blocks at 1-3 distinct buses) and loads whose
/// total stays below the offered capacity.
pub fn random_market<R: Rng>(
    rng: &mut R,
    buses: usize,
    max_generators: usize,
) -> (Vec<OfferCurve>, Vec<f64>) {
    let mut sites: Vec<usize> = (0..buses).collect();
    sites.shuffle(rng);
    let gens = rng.random_range(1..=max_generators.min(buses));
    let mut offers = Vec::new();
    let mut capacity = 0.0;
    for &bus in &sites[..gens] {
        let blocks = rng.random_range(1..=3);
        let mut price = rng.random_range(5.0..30.0);
        let mut pairs = Vec::new();
        for _ in 0..blocks {
            let q = rng.random_range(5.0..60.0);
            capacity += q;
            pairs.push((q, price));
            price += rng.random_range(0.5..15.0);
        }
        offers.push(OfferCurve::new(bus, &pairs));
    }
    let total = capacity * rng.random_range(0.2..0.9);
    let weights: Vec<f64> = (0..buses)
        .map(|_| {
            if rng.random_bool(0.6) {
                rng.random_range(0.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    let wsum: f64 = weights.iter().sum();
    let loads = if wsum > 0.0 {
        weights.iter().map(|w| total * w / wsum).collect()
    } else {
        vec![0.0; buses]
    };
    (offers, loads)
}

// ---------------------------------------------------------------------------
// LP checks

/// Flat description of a dispatch problem.
#[derive(Debug, Clone)]
pub struct DispatchData {
    pub costs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub bus: Vec<usize>,
}

/// Offer blocks as `[0, q]` variables, loads as fixed `-d` variables.
pub fn dispatch_data(offers: &[OfferCurve], loads: &[f64]) -> DispatchData {
    let mut d = DispatchData {
        costs: vec![],
        lower: vec![],
        upper: vec![],
        bus: vec![],
    };
    for o in offers {
        for b in &o.blocks {
            d.costs.push(b.price);
            d.lower.push(0.0);
            d.upper.push(b.quantity);
            d.bus.push(o.bus);
        }
    }
    for (bus, &v) in loads.iter().enumerate() {
        if v != 0.0 {
            d.costs.push(0.0);
            d.lower.push(-v);
            d.upper.push(-v);
            d.bus.push(bus);
        }
    }
    d
}

/// Optimal cost by enumerating basic solutions of the dispatch LP; `None`
/// when infeasible. Fixed variables are substituted out first.
pub fn vertex_enumeration(data: &DispatchData, net: &DcNetwork, limits: &[f64]) -> Option<f64> {
    let k_all = data.costs.len();
    let free: Vec<usize> = (0..k_all)
        .filter(|&k| data.upper[k] > data.lower[k])
        .collect();
    let fixed: Vec<usize> = (0..k_all)
        .filter(|&k| data.upper[k] <= data.lower[k])
        .collect();
    let l = limits.len();
    let fixed_sum: f64 = fixed.iter().map(|&k| data.lower[k]).sum();
    let fixed_cost: f64 = fixed.iter().map(|&k| data.costs[k] * data.lower[k]).sum();
    let fixed_flow: Vec<f64> = (0..l)
        .map(|r| {
            fixed
                .iter()
                .map(|&k| net.shift[(r, data.bus[k])] * data.lower[k])
                .sum()
        })
        .collect();
    let k = free.len();

    // Inequalities a'p <= b over the free variables.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in 0..l {
        let a: Vec<f64> = free.iter().map(|&v| net.shift[(r, data.bus[v])]).collect();
        rows.push((a.clone(), limits[r] - fixed_flow[r]));
        rows.push((a.iter().map(|x| -x).collect(), limits[r] + fixed_flow[r]));
    }
    for (i, &v) in free.iter().enumerate() {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        rows.push((e.clone(), data.upper[v]));
        e[i] = -1.0;
        rows.push((e, -data.lower[v]));
    }
    let feasible = |p: &[f64]| {
        let bal: f64 = p.iter().sum::<f64>() + fixed_sum;
        bal.abs() <= 1e-7
            && rows
                .iter()
                .all(|(a, b)| a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>() <= b + 1e-7)
    };
    let cost = |p: &[f64]| {
        fixed_cost
            + free
                .iter()
                .zip(p)
                .map(|(&v, x)| data.costs[v] * x)
                .sum::<f64>()
    };

    if k == 0 {
        return feasible(&[]).then_some(fixed_cost);
    }
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(k - 1);
    enumerate_subsets(rows.len(), k - 1, 0, &mut pick, &mut |subset| {
        let mut m = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        m.row_mut(0).fill(1.0);
        rhs[0] = -fixed_sum;
        for (i, &r) in subset.iter().enumerate() {
            for j in 0..k {
                m[(i + 1, j)] = rows[r].0[j];
            }
            rhs[i + 1] = rows[r].1;
        }
        let lu = m.lu();
        if lu.determinant().abs() < 1e-10 {
            return;
        }
        if let Some(p) = lu.solve(&rhs) {
            if feasible(p.as_slice()) {
                let c = cost(p.as_slice());
                best = Some(best.map_or(c, |b: f64| b.min(c)));
            }
        }
    });
    best
}

fn enumerate_subsets(
    n: usize,
    size: usize,
    start: usize,
    pick: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if pick.len() == size {
        visit(pick);
        return;
    }
    for i in start..n {
        if n - i < size - pick.len() {
            break;
        }
        pick.push(i);
        enumerate_subsets(n, size, i + 1, pick, visit);
        pick.pop();
    }
}

/// Worst violations of the optimality conditions of a claimed dispatch
/// solution, computed from scratch.
#[derive(Debug, Clone, Copy, Default)]
pub struct KktCheck {
    pub balance: f64,
    pub bounds: f64,
    pub flow_limits: f64,
    /// Reduced-cost sign violations given each variable's position.
    pub stationarity: f64,
    /// `max |μ_l| (f̄_l - |f_l|)`.
    pub complementarity: f64,
    /// Flow multipliers pointing at the wrong limit.
    pub multiplier_sign: f64,
}

impl KktCheck {
    pub fn worst(&self) -> f64 {
        [
            self.balance,
            self.bounds,
            self.flow_limits,
            self.stationarity,
            self.complementarity,
            self.multiplier_sign,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `mu` follows the convention `μ = μ̲ - μ̄`: positive when the lower limit
/// `-f̄` binds.
pub fn check_kkt(
    data: &DispatchData,
    net: &DcNetwork,
    limits: &[f64],
    dispatch: &[f64],
    lambda0: f64,
    mu: &[f64],
) -> KktCheck {
    let buses = net.shift.ncols();
    let mut inj = DVector::zeros(buses);
    for (k, &p) in dispatch.iter().enumerate() {
        inj[data.bus[k]] += p;
    }
    let flows = &net.shift * &inj;
    let mu_v = DVector::from_column_slice(mu);
    let lmp = net.shift.tr_mul(&mu_v).add_scalar(lambda0);
    let mut c = KktCheck {
        balance: inj.sum().abs(),
        ..Default::default()
    };
    let scale = 1.0 + data.costs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for k in 0..dispatch.len() {
        let p = dispatch[k];
        c.bounds = c.bounds.max(data.lower[k] - p).max(p - data.upper[k]);
        if data.upper[k] <= data.lower[k] {
            continue;
        }
        let d = data.costs[k] - lmp[data.bus[k]];
        let span = data.upper[k] - data.lower[k];
        let at_lower = p - data.lower[k] <= 1e-7 * (1.0 + span);
        let at_upper = data.upper[k] - p <= 1e-7 * (1.0 + span);
        let viol = match (at_lower, at_upper) {
            (true, _) => (-d).max(0.0),
            (_, true) => d.max(0.0),
            _ => d.abs(),
        };
        c.stationarity = c.stationarity.max(viol / scale);
    }
    for (l, &f) in flows.iter().enumerate() {
        let fmax = limits[l];
        c.flow_limits = c.flow_limits.max(f.abs() - fmax);
        c.complementarity = c
            .complementarity
            .max(mu[l].abs() * (fmax - f.abs()).max(0.0));
        let tight = 1e-6 * (1.0 + fmax);
        if mu[l] > 1e-9 && f > -fmax + tight {
            c.multiplier_sign = c.multiplier_sign.max(mu[l]);
        }
        if mu[l] < -1e-9 && f < fmax - tight {
            c.multiplier_sign = c.multiplier_sign.max(-mu[l]);
        }
    }
    c
}

// ---------------------------------------------------------------------------
// Synthetic congestion prices

/// `T` price vectors driven by `congested` lines: in each interval every
/// congested line is active with probability 0.7 (at least one always is)
/// with a multiplier of random sign and magnitude in `[1, 30]`.
pub fn synthetic_congestion_prices<R: Rng>(
    rng: &mut R,
    topology: &GridTopology,
    congested: &[usize],
    horizon: usize,
) -> DMatrix<f64> {
    let net = dc_network(topology);
    let n = topology.bus_count() - 1;
    let mut pi = DMatrix::zeros(n, horizon);
    for t in 0..horizon {
        let mut mu = DVector::zeros(topology.line_count());
        let mut active: Vec<usize> = congested
            .iter()
            .copied()
            .filter(|_| rng.random_bool(0.7))
            .collect();
        if active.is_empty() {
            active.push(congested[0]);
        }
        for l in active {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            mu[l] = sign * rng.random_range(1.0..30.0);
        }
        pi.set_column(t, &congestion_prices(&net, &mu));
    }
    pi
}

/// Off-diagonal support of a reduced Laplacian as unordered pairs.
pub fn support(b: &DMatrix<f64>, tol: f64) -> BTreeSet<(usize, usize)> {
    let n = b.nrows();
    let mut s = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if b[(i, j)].abs() > tol || b[(j, i)].abs() > tol {
                s.insert((i, j));
            }
        }
    }
    s
}

/// Precision, recall and F1 of `predicted` against `truth`. An empty
/// prediction has precision 1.
pub fn f1_score(
    predicted: &BTreeSet<(usize, usize)>,
    truth: &BTreeSet<(usize, usize)>,
) -> (f64, f64, f64) {
    let tp = predicted.intersection(truth).count() as f64;
    let precision = if predicted.is_empty() {
        1.0
    } else {
        tp / predicted.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        tp / truth.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}
