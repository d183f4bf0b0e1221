//! Operator-norm behaviour of the Trotter product formula for the shift generator
//! `D0` on `L^p([0, 1])` perturbed by a bounded non-negative multiplication
//! potential `Q`.
//!
//! For this pair the sup-over-`τ` operator-norm error of
//! `(e^{-τD0/n} e^{-τQ/n})^n` against `e^{-τ(D0+Q)}` is pinned between
//! `e^{-||q||∞} R_n(q)` and `R_n(q)`, where `R_n(q)` is the worst left Darboux sum
//! error of `q` over the triangle `{0 < s <= t <= 1}`. The crate provides
//!
//! * [`potential`]: the potential families (constant, linear, piecewise constant,
//!   Hölder-Weierstrass, dyadic tent trains, fat Cantor indicators),
//! * [`quadrature`]: integrals, left sums and the two propagators,
//! * [`sup_search`]: the supremum `R_n(q)` with certified upper bounds,
//! * [`semigroup`]: discretised semigroups on a midpoint grid and a test-function
//!   oracle for the operator norm,
//! * [`matrix_lie`]: the finite-dimensional Lie product formula,
//! * [`rates`]: log-log rate fits and convergence verdicts,
//! * [`experiments`]: report-producing drivers behind the `trotter-lab` binary.

pub mod error;
pub mod experiments;
pub mod matrix_lie;
pub mod potential;
pub mod quadrature;
pub mod rates;
pub mod semigroup;
pub mod sup_search;

pub use error::{Error, Result};
pub use potential::{build_cantor, CantorConstruction, Potential, PotentialSpec};
pub use quadrature::{
    integrate, left_darboux_sum, propagators, riemann_error, DeltaPair, PropagatorGap,
};
pub use sup_search::{sup_riemann_error, trotter_error_sandwich, RiemannReport, SearchConfig};
