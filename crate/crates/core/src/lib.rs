//! Recovering and tracking the reduced grid Laplacian from real-time
//! electricity prices.
//!
//! The crate has two halves. The *forward* side builds the DC network
//! matrices ([`grid`]) and clears a network-constrained economic dispatch
//! to produce nodal prices ([`market`]). The *inverse* side takes the matrix
//! of congestion prices and estimates the reduced Laplacian `B`, either from
//! a full horizon with a batch ADMM solver ([`batch`]) or one interval at a
//! time with an online ADMM tracker ([`online`]). Closed-form proximal maps
//! shared by both solvers live in [`prox`].

pub mod batch;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod market;
pub mod online;
pub mod prox;

pub use error::{Error, Result};
pub use grid::{build_matrices, reduced_to_full_laplacian, GridMatrices, GridTopology, Line};
pub use market::{
    assemble_price_matrix, clear_market, expand_blocks, subtract_reference, DispatchOutcome,
    DispatchStatus, MarketInstance, OfferBlock, OfferCurve, PriceMatrix, RetentionPolicy,
};
