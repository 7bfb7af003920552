//! Modal Runge-Kutta discontinuous Galerkin solver for the compressible Euler
//! equations with a gravity source term, in one and two space dimensions.
//!
//! Two discretisations share the same kernels:
//! * a classical RKDG scheme evolving the conserved state `w`, and
//! * a well-balanced scheme evolving the deviation `dw = w - w_eq` from a
//!   known equilibrium, where every surface, volume and source contribution
//!   is assembled as a difference against the discrete equilibrium terms so
//!   that `dw == 0` yields a residual that is exactly zero in floating point.
//!
//! The crate is organised bottom-up: quadrature and basis tables, the Euler
//! model, an equilibrium catalogue, the two residual assemblies, strong
//! stability preserving time integration, a positivity limiter, and the
//! diagnostics (errors, convergence tables, closed-form update cross-checks)
//! used by the benchmark driver.

pub mod basis;
pub mod diagnostics;
pub mod dg;
pub mod equilibria;
pub mod error;
pub mod euler;
pub mod field;
pub mod limiter;
pub mod mesh;
pub mod quadrature;
pub mod runner;
pub mod snapshot;
pub mod time;
pub mod wb;

pub use error::SolverError;
pub use field::Field;
pub use mesh::Mesh;
