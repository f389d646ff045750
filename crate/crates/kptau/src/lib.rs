//! Exact symbolic engine for the Kontsevich-Penner tau-function.
//!
//! The tau-function is built as a graded series in the time variables
//! `t_1, t_2, ...` with coefficients polynomial in the deformation parameter
//! `N`, by two independent routes:
//!
//! * the cut-and-join recursion `tau^(g) = (W1 tau^(g-1) + W2 tau^(g-2)) / g`,
//! * order-by-order solution of the Virasoro and W constraints as an exact
//!   linear system.
//!
//! All arithmetic is exact (arbitrary-precision rationals); the two routes are
//! mutual oracles, and the operator algebra (commutation relations, free-field
//! representations, Miura construction) is verified on truncated polynomial
//! spaces.
//!
//! Entry points:
//! * [`tau::compute_tau_cutjoin`] / [`tau::compute_tau_linear`] — the series,
//! * [`constraints::build`] — every named constraint operator,
//! * [`correlator`] — free energy, geometric times, open intersection numbers,
//! * [`checks`] — the verification suites,
//! * [`store`] — exact JSON persistence.

pub mod checks;
pub mod constraints;
pub mod correlator;
pub mod current;
pub mod npoly;
pub mod oper;
pub mod solve;
pub mod sqrt;
pub mod store;
pub mod tau;
pub mod tpoly;

pub use npoly::{rat, rint, NPoly, Rational};
pub use oper::OperatorExpr;
pub use tpoly::{TMonomial, TPoly};

/// Boundary-index convention stamped into persisted files: wherever a
/// displayed operator produces `t_k` or `d/dt_k` with `k <= 0`, the engine
/// sets it to zero.
pub const CONVENTION: &str = "dt0=0";
