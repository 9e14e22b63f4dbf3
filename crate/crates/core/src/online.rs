//! Online ADMM: one proximal step per incoming price vector.
//!
//! Each step minimizes
//!
//! ```text
//! f_π(B1) + (κ1/T) tr(P B1) + ρ/2 ‖B1 - B2 + M12‖² + ρ/2 ‖B1 - B3 + M13‖² + η/2 ‖B1 - B1_prev‖²
//! ```
//!
//! over `B1`, where `f_π` is `‖B π‖₁` or the Huber loss of `B π`. All terms
//! but `f_π` collapse to `(2ρ+η)/2 ‖B1 - B̌1‖²` around an anchor `B̌1`, so the
//! update is a rank-one correction of the anchor along `π`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::batch::update_b2;
use crate::error::{Error, Result};
use crate::linalg;
use crate::prox::{huber_row_prox, huber_total, l1_row_prox, psd_logdet_prox, HuberParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    L1,
    Huber,
}

/// Coefficient of `P` in the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kappa1Scaling {
    /// `κ1 / (T (2ρ+η))`, obtained by completing the square.
    #[default]
    Derived,
    /// `κ1 / (2T (2ρ+η))`, half the derived value.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineParams {
    pub kappa1: f64,
    pub kappa2: f64,
    /// Huber knee; ignored by the ℓ1 loss.
    pub kappa3: f64,
    pub rho: f64,
    pub eta: f64,
    /// Nominal horizon `T` used in the `κ/T` scalings.
    pub horizon: usize,
    pub loss: Loss,
    /// Skip all-zero price vectors instead of stepping on them.
    pub skip_zero_prices: bool,
    pub kappa1_scaling: Kappa1Scaling,
}

impl OnlineParams {
    /// `ρ = η = sqrt(T)` with unit κ's and the Huber loss.
    pub fn for_horizon(horizon: usize) -> Self {
        let root = (horizon.max(1) as f64).sqrt();
        OnlineParams {
            kappa1: 1.0,
            kappa2: 1.0,
            kappa3: 1.0,
            rho: root,
            eta: root,
            horizon,
            loss: Loss::Huber,
            skip_zero_prices: false,
            kappa1_scaling: Kappa1Scaling::Derived,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("kappa3", self.kappa3),
            ("rho", self.rho),
            ("eta", self.eta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParams("horizon must be positive".into()));
        }
        Ok(())
    }

    fn denominator(&self) -> f64 {
        2.0 * self.rho + self.eta
    }

    /// Weight on `P` inside the anchor.
    pub fn anchor_kappa1_coefficient(&self) -> f64 {
        let derived = self.kappa1 / (self.horizon as f64 * self.denominator());
        match self.kappa1_scaling {
            Kappa1Scaling::Derived => derived,
            Kappa1Scaling::Printed => 0.5 * derived,
        }
    }

    /// Per-step loss `f_π(B)`.
    pub fn loss_value(&self, b: &DMatrix<f64>, price: &DVector<f64>) -> f64 {
        let residual = DMatrix::from_column_slice(b.nrows(), 1, (b * price).as_slice());
        match self.loss {
            Loss::L1 => residual.lp_norm(1),
            Loss::Huber => huber_total(&residual, self.kappa3),
        }
    }

    /// Full per-step objective at `b1` for the given state, i.e. the
    /// function whose minimizer the step returns.
    pub fn step_objective(
        &self,
        state: &OnlineState,
        price: &DVector<f64>,
        b1: &DMatrix<f64>,
    ) -> f64 {
        let n = b1.nrows();
        let p = linalg::off_diagonal_selector(n);
        let t = self.horizon as f64;
        self.loss_value(b1, price)
            + self.kappa1 / t * (&p * b1).trace()
            + 0.5 * self.rho * (b1 - &state.b2 + &state.m12).norm_squared()
            + 0.5 * self.rho * (b1 - &state.b3 + &state.m13).norm_squared()
            + 0.5 * self.eta * (b1 - &state.b1).norm_squared()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineState {
    pub b1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub b3: DMatrix<f64>,
    pub m12: DMatrix<f64>,
    pub m13: DMatrix<f64>,
    /// Number of price vectors consumed.
    pub t: usize,
}

/// Identity start, or all three copies set to `warm_start`.
pub fn init_online(n: usize, warm_start: Option<&DMatrix<f64>>) -> Result<OnlineState> {
    let b = match warm_start {
        Some(w) if w.shape() != (n, n) => {
            return Err(Error::dims(
                format!("{n}x{n}"),
                format!("{}x{}", w.nrows(), w.ncols()),
            ));
        }
        Some(w) => w.clone(),
        None => DMatrix::identity(n, n),
    };
    Ok(OnlineState {
        b1: b.clone(),
        b2: b.clone(),
        b3: b,
        m12: DMatrix::zeros(n, n),
        m13: DMatrix::zeros(n, n),
        t: 0,
    })
}

/// `B̌1 = [ρ(B2 + B3 - M12 - M13) + η B1 - (κ1/T) P] / (2ρ + η)`, up to the
/// chosen `κ1` scaling.
pub fn compute_anchor(state: &OnlineState, params: &OnlineParams) -> DMatrix<f64> {
    let n = state.b1.nrows();
    let denom = params.denominator();
    let consensus = &state.b2 + &state.b3 - &state.m12 - &state.m13;
    consensus * (params.rho / denom) + &state.b1 * (params.eta / denom)
        - linalg::off_diagonal_selector(n) * params.anchor_kappa1_coefficient()
}

fn finish_step(state: &mut OnlineState, b1: DMatrix<f64>, params: &OnlineParams) {
    let b2 = update_b2(&b1, &state.m12);
    let alpha = params.kappa2 / (params.horizon as f64 * params.rho);
    let b3 = psd_logdet_prox(&(&b1 + &state.m13), alpha);
    state.m12 += &b1 - &b2;
    state.m13 += &b1 - &b3;
    state.b1 = b1;
    state.b2 = b2;
    state.b3 = b3;
    state.t += 1;
}

fn check_price(state: &OnlineState, price: &DVector<f64>) -> Result<()> {
    if price.len() != state.b1.nrows() {
        return Err(Error::dims(state.b1.nrows(), price.len()));
    }
    Ok(())
}

/// One step with `f_π(B) = ‖B π‖₁`.
pub fn step_l1(state: &mut OnlineState, price: &DVector<f64>, params: &OnlineParams) -> Result<()> {
    check_price(state, price)?;
    let anchor = compute_anchor(state, params);
    let b1 = l1_row_prox(&anchor, &(price / params.denominator()));
    finish_step(state, b1, params);
    Ok(())
}

/// One step with `f_π(B) = Σ h_κ3((B π)_m)`.
pub fn step_huber(
    state: &mut OnlineState,
    price: &DVector<f64>,
    params: &OnlineParams,
) -> Result<()> {
    check_price(state, price)?;
    let anchor = compute_anchor(state, params);
    let huber = HuberParams::new(params.kappa3, 1.0 / params.denominator())?;
    let b1 = huber_row_prox(&anchor, price, huber);
    finish_step(state, b1, params);
    Ok(())
}

/// Steps with the loss selected in `params`.
pub fn step(state: &mut OnlineState, price: &DVector<f64>, params: &OnlineParams) -> Result<()> {
    match params.loss {
        Loss::L1 => step_l1(state, price, params),
        Loss::Huber => step_huber(state, price, params),
    }
}

/// Magnitudes of the watched entries of `B1` after dividing by its largest
/// diagonal entry.
pub fn snapshot(state: &OnlineState, watch: &[(usize, usize)]) -> Vec<f64> {
    let scale = linalg::max_diagonal(&state.b1);
    watch
        .iter()
        .map(|&(i, j)| (state.b1[(i, j)] / scale).abs())
        .collect()
}

/// One row of a tracking trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub interval: usize,
    pub values: Vec<f64>,
}

/// Streams prices through the online ADMM and records watched entries
/// after every step.
#[derive(Debug, Clone)]
pub struct OnlineTracker {
    pub state: OnlineState,
    pub params: OnlineParams,
    pub watch: Vec<(usize, usize)>,
    pub trace: Vec<TraceRecord>,
}

impl OnlineTracker {
    pub fn new(
        n: usize,
        params: OnlineParams,
        warm_start: Option<&DMatrix<f64>>,
        watch: Vec<(usize, usize)>,
    ) -> Result<Self> {
        params.validate()?;
        if let Some(&(i, j)) = watch.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(Error::InvalidParams(format!(
                "watched entry ({i}, {j}) outside a {n}x{n} matrix"
            )));
        }
        Ok(OnlineTracker {
            state: init_online(n, warm_start)?,
            params,
            watch,
            trace: Vec::new(),
        })
    }

    /// Consumes one price vector. Returns `false` if it was skipped.
    pub fn push(&mut self, interval: usize, price: &DVector<f64>) -> Result<bool> {
        if self.params.skip_zero_prices && price.iter().all(|&v| v == 0.0) {
            check_price(&self.state, price)?;
            return Ok(false);
        }
        step(&mut self.state, price, &self.params)?;
        self.trace.push(TraceRecord {
            interval,
            values: snapshot(&self.state, &self.watch),
        });
        Ok(true)
    }

    /// Writes the trace as CSV with an `interval` column followed by one
    /// column per watched entry, labelled `b_i_j`.
    pub fn write_trace_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["interval".to_string()];
        header.extend(self.watch.iter().map(|(i, j)| format!("b_{i}_{j}")));
        w.write_record(&header)?;
        for rec in &self.trace {
            let mut row = vec![rec.interval.to_string()];
            row.extend(rec.values.iter().map(|v| format!("{v:?}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
