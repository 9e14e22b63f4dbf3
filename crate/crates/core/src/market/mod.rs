//! Network-constrained economic dispatch and the nodal prices it produces.

mod clearing;
mod offers;
mod prices;
pub mod simplex;

pub use clearing::{
    clear_market, dispatch_lp, kkt_residuals, solve_lp_with_duals, DispatchLp, DispatchOutcome,
    DispatchSolution, DispatchStatus, KktReport, CONGESTION_TOLERANCE,
};
pub use offers::{
    expand_blocks, load_offers, MarketInstance, OfferBlock, OfferCurve, VariableKind,
};
pub use prices::{assemble_price_matrix, subtract_reference, PriceMatrix, RetentionPolicy};
