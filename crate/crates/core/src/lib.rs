//! Insurance contracts between a renewable producer and a storage owner in a
//! two-settlement electricity market.
//!
//! The crate covers the single-node analytics (optimal bids, reserve price
//! interval, profitability classes, two-way commitments), a Monte Carlo
//! settlement lab, and a multi-period DC dispatch used to test contract
//! feasibility under congestion.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contract;
pub mod error;
pub mod io;
pub mod lp;
pub mod market;
pub mod network;
pub mod normal;
pub mod quadrature;
pub mod renewable;
pub mod scenario;
pub mod storage;
pub mod svg;

pub use contract::{
    feasibility_interval, optimal_bid, profitability_classify, renewable_price_cap,
    standard_contract, storage_price_floor, two_way_commitment, FeasibilityInterval, ProfitClass,
    ProfitabilityBounds, TwoWayBid,
};
pub use error::{Error, Result};
pub use lp::{solve_lp, LinearProgram, LpError, LpSolution};
pub use market::{
    renewable_expected_profit, settle_realized, storage_expected_profit, Contract, MarketPrices,
    PlayerLedger, SettlementResult,
};
pub use network::{feasibility_matrix, multi_period_dispatch, DispatchResult, FeasibilityMatrix, NetworkCase};
pub use renewable::{fit_hourly_gaussian, FittedModel, RenewableModel, Scenario, SlotGaussian};
pub use scenario::{peak_share_delta, profitability_calendar, run_profit_study, StudyConfig, StudyReport};
pub use storage::{
    arbitrage_policy, check_feasible, kkt_certificate, operating_cost, step_state,
    FeasibilityReport, KktCertificate, StateTrajectory, StorageParams, StoragePolicy,
};
