//! Locational marginal and average carbon emission metrics from DC-OPF
//! market clearing.
//!
//! The crate clears a bid-cost-minimizing DC optimal power flow per
//! period, differentiates the KKT conditions of the clearing LP with
//! respect to nodal demand, and solves the resulting linear system with a
//! truncated SVD pseudoinverse to obtain dispatch sensitivities. From
//! those it derives:
//!
//! * **LMCE** — locational marginal carbon emission, the change in total
//!   system emission per marginal MW of load at a bus, decomposable into
//!   energy-dependent and network-dependent parts;
//! * **LACE** — locational average carbon emission, the average of LMCE
//!   along the load ray from zero to the actual demand, whose allocations
//!   sum exactly to the generation-side emission;
//! * **CEF** — the classical proportional-sharing carbon-emission-flow
//!   allocation, as a comparison baseline.
//!
//! Start with [`grid::builtin_case`] and [`pipeline::run`], or see the
//! runnable programs under `examples/`.

pub mod cef;
pub mod clearing;
pub mod emissions;
pub mod error;
pub mod grid;
pub mod kkt;
pub mod linalg;
pub mod oracle;
pub mod pipeline;
pub mod report;
pub mod simplex;

pub use error::{CarbonError, Result};
