//! Linear hybridizable discontinuous Galerkin (HDG) method for the
//! Helmholtz equation with impedance boundary conditions.
//!
//! The element-interior unknowns `(u_h, q_h)` are eliminated element by
//! element (static condensation), leaving a global complex system over the
//! edge traces only. On top of the solver the crate provides:
//!
//! - element-local P2 postprocessing of `u_h`,
//! - the HDG projection and relative L2 error reports,
//! - dispersion analysis: exact 1D discrete-wavenumber formulas and a 2D
//!   Bloch-lattice computation on equilateral triangulations,
//! - batch study drivers (convergence, pollution, critical mesh size) with
//!   CSV and SVG output.
//!
//! Penalty-parameter selection is the central theme: the per-edge constant
//! `tau` in `q_hat = q_h + tau (u_h - u_hat) n` controls both stability and
//! the phase error of propagating waves.
//!
//! ```
//! use hdg_helmholtz::exact::plane_wave_1d;
//! use hdg_helmholtz::hdg::{solve_hdg_1d, GhDegree, PenaltyRule};
//! use hdg_helmholtz::mesh::build_uniform_1d;
//! use hdg_helmholtz::norms::{relative_errors_1d, NormConfig};
//!
//! let k = 10.0;
//! let mesh = build_uniform_1d(0.0, 1.0, 64)?;
//! let data = plane_wave_1d(k)?;
//! let sol = solve_hdg_1d(&mesh, k, PenaltyRule::Corrected1d, &data, GhDegree::P1)?;
//! let report = relative_errors_1d(&sol, &data, None, NormConfig::default())?;
//! assert!(report.e_u < 2e-3);
//! assert!(sol.trace_residual < 1e-10);
//! # Ok::<(), hdg_helmholtz::Error>(())
//! ```

// index arithmetic spelled as row*stride + col, frozen high-precision
// reference constants, and NaN-rejecting comparisons are all deliberate here
#![allow(clippy::needless_range_loop)]
#![allow(clippy::identity_op)]
#![allow(clippy::excessive_precision)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::manual_range_contains)]

pub mod basis;
pub mod dispersion;
pub mod error;
pub mod exact;
pub mod forms;
pub mod hdg;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod postprocess;
pub mod projection;
pub mod study;

pub use error::{Error, Result};
