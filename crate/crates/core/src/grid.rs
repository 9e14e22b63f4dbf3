//! DC network model: incidence matrices, the reactance-weighted Laplacian and
//! the injection-to-flow shift factors.
//!
//! Buses are indexed from zero. Line `l` is oriented from `from` to `to`: its
//! row of the incidence matrix carries `+1` at `from` and `-1` at `to`, and a
//! positive flow runs from `from` to `to`.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Condition-number cap above which the reduced Laplacian is declared singular.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

/// Tolerance on `|1'p|` for [`GridMatrices::flows_from_injections`].
pub const BALANCE_TOLERANCE: f64 = 1e-8;

/// A transmission line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Series reactance in per unit; must be positive.
    #[serde(rename = "x")]
    pub reactance: f64,
    /// Thermal rating in MW; must be positive.
    #[serde(rename = "fmax")]
    pub flow_limit: f64,
}

impl Line {
    pub fn new(from: usize, to: usize, reactance: f64, flow_limit: f64) -> Self {
        Line {
            from,
            to,
            reactance,
            flow_limit,
        }
    }

    /// Endpoints as an ordered pair `(min, max)`.
    pub fn endpoints(&self) -> (usize, usize) {
        (self.from.min(self.to), self.from.max(self.to))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GridFile {
    buses: usize,
    #[serde(default)]
    reference: usize,
    lines: Vec<Line>,
}

/// Buses, lines and the reference bus of a connected transmission grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridFile", into = "GridFile")]
pub struct GridTopology {
    bus_count: usize,
    lines: Vec<Line>,
    reference_bus: usize,
}

impl TryFrom<GridFile> for GridTopology {
    type Error = Error;

    fn try_from(file: GridFile) -> Result<Self> {
        GridTopology::new(file.buses, file.lines, file.reference)
    }
}

impl From<GridTopology> for GridFile {
    fn from(topology: GridTopology) -> Self {
        GridFile {
            buses: topology.bus_count,
            reference: topology.reference_bus,
            lines: topology.lines,
        }
    }
}

const IEEE30_JSON: &str = include_str!("../data/ieee30.json");

impl GridTopology {
    /// Validates and builds a topology. Fails on bad endpoints, self loops,
    /// nonpositive reactances or ratings, and disconnected graphs.
    pub fn new(bus_count: usize, lines: Vec<Line>, reference_bus: usize) -> Result<Self> {
        if bus_count < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least two buses, got {bus_count}"
            )));
        }
        if reference_bus >= bus_count {
            return Err(Error::InvalidGrid(format!(
                "reference bus {reference_bus} out of range for {bus_count} buses"
            )));
        }
        for (l, line) in lines.iter().enumerate() {
            if line.from >= bus_count || line.to >= bus_count {
                return Err(Error::InvalidGrid(format!(
                    "line {l} endpoint out of range: ({}, {})",
                    line.from, line.to
                )));
            }
            if line.from == line.to {
                return Err(Error::InvalidGrid(format!(
                    "line {l} is a self loop at bus {}",
                    line.from
                )));
            }
            if !(line.reactance > 0.0 && line.reactance.is_finite()) {
                return Err(Error::InvalidGrid(format!(
                    "line {l} has reactance {}",
                    line.reactance
                )));
            }
            if !(line.flow_limit > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "line {l} has flow limit {}",
                    line.flow_limit
                )));
            }
        }
        let topology = GridTopology {
            bus_count,
            lines,
            reference_bus,
        };
        topology.check_connected()?;
        Ok(topology)
    }

    /// The IEEE 30-bus benchmark (41 lines, ratings 16 to 130 MW).
    pub fn ieee30() -> Self {
        serde_json::from_str(IEEE30_JSON).expect("bundled IEEE 30-bus grid is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("topology serializes")
    }

    pub fn bus_count(&self) -> usize {
        self.bus_count
    }

    pub fn line_count(&self) -> usize {
        self.lines.len()
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn reference_bus(&self) -> usize {
        self.reference_bus
    }

    /// Index of the line joining `a` and `b`, in either orientation.
    pub fn find_line(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.lines.iter().position(|l| l.endpoints() == key)
    }

    /// Unordered bus pairs joined by at least one line.
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        self.lines.iter().map(Line::endpoints).collect()
    }

    /// Average number of neighbours per bus after removing `bus`, i.e. the
    /// degree statistic of the reduced Laplacian with `bus` deleted.
    pub fn reduced_average_degree(&self, bus: usize) -> f64 {
        let edges = self
            .edge_set()
            .into_iter()
            .filter(|&(a, b)| a != bus && b != bus)
            .count();
        2.0 * edges as f64 / (self.bus_count - 1) as f64
    }

    /// Returns a copy in which line `index` is rewired to join `from` and
    /// `to`, keeping its reactance and rating.
    pub fn with_rewired_line(&self, index: usize, from: usize, to: usize) -> Result<Self> {
        let mut lines = self.lines.clone();
        let line = lines
            .get_mut(index)
            .ok_or_else(|| Error::InvalidGrid(format!("no line with index {index}")))?;
        line.from = from;
        line.to = to;
        GridTopology::new(self.bus_count, lines, self.reference_bus)
    }

    /// Returns a copy with every flow limit multiplied by `factor`.
    pub fn with_scaled_limits(&self, factor: f64) -> Result<Self> {
        let lines = self
            .lines
            .iter()
            .map(|l| Line {
                flow_limit: l.flow_limit * factor,
                ..*l
            })
            .collect();
        GridTopology::new(self.bus_count, lines, self.reference_bus)
    }

    fn check_connected(&self) -> Result<()> {
        let mut adjacency = vec![Vec::new(); self.bus_count];
        for line in &self.lines {
            adjacency[line.from].push(line.to);
            adjacency[line.to].push(line.from);
        }
        let root = self.reference_bus;
        let mut seen = vec![false; self.bus_count];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(bus) = queue.pop_front() {
            for &next in &adjacency[bus] {
                if !seen[next] {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(unreached) => Err(Error::DisconnectedGrid { root, unreached }),
            None => Ok(()),
        }
    }
}

/// Matrices derived from a [`GridTopology`].
///
/// The reduced quantities drop the column (or row and column) of the
/// reference bus; `non_reference` lists the full-grid bus behind each
/// reduced index.
#[derive(Debug, Clone)]
pub struct GridMatrices {
    /// `L x (N+1)` branch-bus incidence matrix.
    pub full_incidence: DMatrix<f64>,
    /// `L x N` incidence matrix without the reference column.
    pub reduced_incidence: DMatrix<f64>,
    /// Diagonal of `D`, i.e. line susceptances `1 / x_l`.
    pub susceptances: DVector<f64>,
    /// `N x N` reduced Laplacian `A' D A`.
    pub reduced_laplacian: DMatrix<f64>,
    /// Inverse of the reduced Laplacian.
    pub reduced_laplacian_inv: DMatrix<f64>,
    /// `(N+1) x (N+1)` weighted Laplacian `Ã' D Ã`.
    pub full_laplacian: DMatrix<f64>,
    /// `L x (N+1)` shift factors; the reference column is zero.
    pub shift_factors: DMatrix<f64>,
    pub flow_limits: DVector<f64>,
    pub reference_bus: usize,
    pub non_reference: Vec<usize>,
}

/// Builds all network matrices with the default condition cap.
pub fn build_matrices(topology: &GridTopology) -> Result<GridMatrices> {
    build_matrices_with_cap(topology, DEFAULT_CONDITION_CAP)
}

pub fn build_matrices_with_cap(
    topology: &GridTopology,
    condition_cap: f64,
) -> Result<GridMatrices> {
    topology.check_connected()?;
    let n_full = topology.bus_count;
    let n_lines = topology.lines.len();
    let reference = topology.reference_bus;
    let non_reference: Vec<usize> = (0..n_full).filter(|&b| b != reference).collect();

    let mut full_incidence = DMatrix::zeros(n_lines, n_full);
    for (l, line) in topology.lines.iter().enumerate() {
        full_incidence[(l, line.from)] = 1.0;
        full_incidence[(l, line.to)] = -1.0;
    }
    let susceptances =
        DVector::from_iterator(n_lines, topology.lines.iter().map(|l| 1.0 / l.reactance));
    let flow_limits = DVector::from_iterator(n_lines, topology.lines.iter().map(|l| l.flow_limit));
    let reduced_incidence = full_incidence.select_columns(&non_reference);

    let weighted = |a: &DMatrix<f64>| {
        let mut da = a.clone();
        for (mut row, d) in da.row_iter_mut().zip(susceptances.iter()) {
            row *= *d;
        }
        da
    };
    let d_full = weighted(&full_incidence);
    let d_reduced = weighted(&reduced_incidence);
    let full_laplacian = full_incidence.transpose() * &d_full;
    let reduced_laplacian = reduced_incidence.transpose() * &d_reduced;

    let eig = linalg::sym_eigen(&reduced_laplacian);
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > condition_cap {
        return Err(Error::Singular {
            condition,
            cap: condition_cap,
        });
    }
    let reduced_laplacian_inv = reduced_laplacian
        .clone()
        .cholesky()
        .ok_or(Error::Singular {
            condition,
            cap: condition_cap,
        })?
        .inverse();
    // Symmetrize away round-off so that downstream symmetric checks are exact.
    let reduced_laplacian_inv = linalg::symmetrize(&reduced_laplacian_inv);

    let reduced_shift = &d_reduced * &reduced_laplacian_inv;
    let mut shift_factors = DMatrix::zeros(n_lines, n_full);
    for (k, &bus) in non_reference.iter().enumerate() {
        shift_factors.set_column(bus, &reduced_shift.column(k));
    }

    Ok(GridMatrices {
        full_incidence,
        reduced_incidence,
        susceptances,
        reduced_laplacian,
        reduced_laplacian_inv,
        full_laplacian,
        shift_factors,
        flow_limits,
        reference_bus: reference,
        non_reference,
    })
}

impl GridMatrices {
    pub fn bus_count(&self) -> usize {
        self.full_incidence.ncols()
    }

    pub fn line_count(&self) -> usize {
        self.full_incidence.nrows()
    }

    /// Dimension `N` of the reduced Laplacian.
    pub fn reduced_dim(&self) -> usize {
        self.non_reference.len()
    }

    /// `D` as a dense diagonal matrix.
    pub fn reactance_diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.susceptances)
    }

    /// Line flows `f = T p` for a balanced injection vector.
    pub fn flows_from_injections(&self, injections: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_injections(injections)?;
        Ok(&self.shift_factors * injections)
    }

    /// Bus angles with the reference angle pinned at zero, from the reduced
    /// system `B θ = p` (reference entry dropped).
    pub fn angles_from_injections(&self, injections: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_injections(injections)?;
        let reduced = DVector::from_iterator(
            self.reduced_dim(),
            self.non_reference.iter().map(|&b| injections[b]),
        );
        let theta_reduced = &self.reduced_laplacian_inv * reduced;
        let mut theta = DVector::zeros(self.bus_count());
        for (k, &bus) in self.non_reference.iter().enumerate() {
            theta[bus] = theta_reduced[k];
        }
        Ok(theta)
    }

    /// Flows `D Ã θ` from bus angles.
    pub fn flows_from_angles(&self, theta: &DVector<f64>) -> DVector<f64> {
        (&self.full_incidence * theta).component_mul(&self.susceptances)
    }

    /// Congestion component `B⁻¹ A' D μ` of the nodal prices, per
    /// non-reference bus.
    pub fn congestion_component(&self, mu: &DVector<f64>) -> DVector<f64> {
        &self.reduced_laplacian_inv
            * (self.reduced_incidence.transpose() * mu.component_mul(&self.susceptances))
    }

    fn check_injections(&self, injections: &DVector<f64>) -> Result<()> {
        if injections.len() != self.bus_count() {
            return Err(Error::dims(self.bus_count(), injections.len()));
        }
        let net = injections.sum();
        let scale = 1.0 + injections.amax();
        if net.abs() > BALANCE_TOLERANCE * scale {
            return Err(Error::Unbalanced { net });
        }
        Ok(())
    }
}

/// Rebuilds the full Laplacian from a reduced one whose deleted row and
/// column belonged to bus 0, using zero row and column sums.
pub fn reduced_to_full_laplacian(reduced: &DMatrix<f64>) -> DMatrix<f64> {
    let n = reduced.nrows();
    let mut full = DMatrix::zeros(n + 1, n + 1);
    full.view_mut((1, 1), (n, n)).copy_from(reduced);
    for i in 0..n {
        let row_sum: f64 = reduced.row(i).sum();
        let col_sum: f64 = reduced.column(i).sum();
        full[(i + 1, 0)] = -row_sum;
        full[(0, i + 1)] = -col_sum;
    }
    full[(0, 0)] = reduced.sum();
    full
}
