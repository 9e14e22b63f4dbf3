use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::clearing::{DispatchOutcome, DispatchStatus};
use crate::error::{Error, Result};

/// Prices relative to the first bus: `π_n - π_0` for every other bus.
pub fn subtract_reference(lmp: &[f64]) -> Vec<f64> {
    match lmp.split_first() {
        Some((first, rest)) => rest.iter().map(|p| p - first).collect(),
        None => Vec::new(),
    }
}

/// Which feasible intervals enter the price matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetentionPolicy {
    #[default]
    DropUncongested,
    KeepUncongested,
}

/// `N x T` matrix of congestion prices, one column per retained interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceMatrix {
    pub values: DMatrix<f64>,
    pub interval_ids: Vec<usize>,
}

impl PriceMatrix {
    pub fn new(values: DMatrix<f64>, interval_ids: Vec<usize>) -> Result<Self> {
        if values.ncols() != interval_ids.len() {
            return Err(Error::dims(
                format!("{} interval ids", values.ncols()),
                interval_ids.len(),
            ));
        }
        Ok(PriceMatrix {
            values,
            interval_ids,
        })
    }

    /// Builds a matrix from columns, numbering intervals `0..T`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::dims(n, "columns of differing length"));
        }
        let values = DMatrix::from_fn(n, columns.len(), |i, t| columns[t][i]);
        Ok(PriceMatrix {
            values,
            interval_ids: (0..columns.len()).collect(),
        })
    }

    pub fn bus_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.values.ncols()
    }

    /// Writes one row per bus under a header of interval ids.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.interval_ids.iter().map(usize::to_string))?;
        for row in self.values.row_iter() {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let interval_ids = r
            .headers()?
            .iter()
            .filter(|h| !h.is_empty())
            .map(|h| {
                h.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("interval id {h:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("price {v:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != interval_ids.len() {
                return Err(Error::dims(interval_ids.len(), row.len()));
            }
            rows.push(row);
        }
        let values = DMatrix::from_fn(rows.len(), interval_ids.len(), |i, t| rows[i][t]);
        Ok(PriceMatrix {
            values,
            interval_ids,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Stacks the congestion prices of retained intervals into a matrix.
/// Infeasible intervals are always dropped.
pub fn assemble_price_matrix(
    outcomes: &[(usize, DispatchOutcome)],
    policy: RetentionPolicy,
) -> Result<PriceMatrix> {
    let retained: Vec<&(usize, DispatchOutcome)> = outcomes
        .iter()
        .filter(|(_, o)| match o.status {
            DispatchStatus::Feasible => true,
            DispatchStatus::Uncongested => policy == RetentionPolicy::KeepUncongested,
            DispatchStatus::Infeasible => false,
        })
        .collect();
    if retained.is_empty() {
        return Err(Error::EmptyHorizon);
    }
    let n = retained[0].1.mcc.len();
    if let Some((id, o)) = retained.iter().find(|(_, o)| o.mcc.len() != n) {
        return Err(Error::dims(
            n,
            format!("{} prices in interval {id}", o.mcc.len()),
        ));
    }
    let values = DMatrix::from_fn(n, retained.len(), |i, t| retained[t].1.mcc[i]);
    Ok(PriceMatrix {
        values,
        interval_ids: retained.iter().map(|(id, _)| *id).collect(),
    })
}
