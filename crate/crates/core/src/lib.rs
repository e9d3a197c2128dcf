//! Pathwise solvers built on splitting: a rough differential equation is
//! rewritten as one equation driven by two reparametrized signals, so a
//! single second-order stepper handles plain, split and alternating runs,
//! and the same idea alternates a monotone grid operator with a rough
//! transport sweep for PDEs.
//!
//! The crate is organized around a few small types: [`SampledPath`] for
//! piecewise linear signals, [`TimeChange`] for the clocks that switch
//! phases on and off, [`RoughPath`] for a signal enriched with its second
//! order increments, and [`Grid`]/[`Operator`]/[`RoughTransport`] for the
//! PDE side. Solvers are free functions over those types.

// Validation guards are written `!(x > y)` on purpose so NaN fails them,
// and kernels index several arrays in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod apps;
mod error;
mod field;
mod grid;
pub mod io;
mod lift;
pub mod noise;
mod path;
mod pde;
mod rde;
mod splitting;
mod study;
mod time_change;
mod transport;

/// Crate version, recorded in run manifests so artifacts name the code
/// that produced them.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use field::{AffineField, VectorField};
pub use grid::{Boundary, Grid};
pub use lift::{Level2, RoughPath};
pub use noise::{brownian_path, fractional_brownian_path, PRNG_ALGORITHM};
pub use path::SampledPath;
pub use pde::{deterministic_step, evolve_checked, LinearOperator, Operator};
pub use rde::{davie_step, solve_level2, split_solve, PhaseOrder, Splitting};
pub use splitting::{split_evolve, SplitEvolution};
pub use study::{run_study, Comparable, Reference, StudyReport, StudyRow, Timing};
pub use time_change::{rescale_to_horizon, TimeChange, TimeChangeDecomposition};
pub use transport::{rough_transport_step, Coeff, RoughTransport, TransportOutcome};
