//! Closed-form bounds, Monte Carlo estimators, overhead accounting and
//! case-study ingestion.

pub mod bounds;
pub mod casestudy;
pub mod grid;
pub mod montecarlo;
pub mod overhead;

pub use bounds::{epsilon_equilibrium, p_k_lambda, revenue_tail_bound, BoundQuery};
pub use casestudy::{ingest_profit_csv, CaseStudySummary, SandwichDataset, DEFAULT_ETH_USD, FIXTURE_PROFITS};
pub use grid::{emit_grid, write_grid_csv, GridRow};
pub use montecarlo::{advantage_samples, montecarlo_tail, SandwichCalibration, TailEstimate};
pub use overhead::{block_overhead_bits, OverheadBreakdown};
