//! Growth-optimal (Kelly) leverage in a world with fat tails.
//!
//! The crate models a period's return as a small discrete distribution (a
//! two-point core plus optional tail loss and tail win) and provides:
//!
//! * [`single`]: binary and two-point Kelly fractions, closed-form fat-tail
//!   approximations and an exact optimizer of the log-growth rate;
//! * [`parity`]: multi-asset Kelly allocation `f = C^-1 M`, its equivalence
//!   with the tangency and risk-parity portfolios, and a two-asset model with
//!   joint tail events;
//! * [`simulate`]: seeded, worker-count independent Monte Carlo of wealth
//!   paths with drawdown statistics;
//! * [`frontier`]: drawdown protection cost and the concave efficient
//!   frontier;
//! * [`estimate`]: tail and core parameters from a return series.

// negated float comparisons are used to reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod frontier;
pub mod model;
pub mod numeric;
pub mod parity;
pub mod simulate;
pub mod single;

pub use error::{KellyError, Result};
pub use estimate::{estimate_params, read_returns_csv, ReturnSeries};
pub use frontier::{ddva, frontier_curve, DdvaQuote, FrontierPoint};
pub use model::{
    build_discrete_model, calibrate_center, calibrate_center_two_sided, model_moments, DiscreteModel, GaussianCore,
    Outcome, TailSpec,
};
pub use parity::{kelly_allocation, max_sharpe_tangency, AllocationResult, PortfolioSpec};
pub use simulate::{simulate_paths, PathStats, SimConfig};
pub use single::{growth_at, kelly_fat_closed, kelly_fat_exact, kelly_simple, KellyPoint};
