//! Nonlocal-to-local convergence laboratory for Cahn-Hilliard and Allen-Cahn
//! gradient flows on boxes.
//!
//! The nonlocal operator `L_eps c(x) = int J_eps(|x - y|) (c(x) - c(y)) dy`
//! restricted to a box converges to `-Delta` as `eps -> 0`. The crate builds
//! the kernel family, applies `L_eps` on uniform grids (FFT and direct), runs
//! the four gradient flows, and measures convergence rates.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernel;
pub mod local_op;
pub mod nonlocal_op;
pub mod norms;
pub mod potentials;
pub mod quadrature;
pub mod report;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
pub use experiments::{fit_rate, Band, RateTable, SolutionStudy, TestFunction};
pub use grid::{Boundary, Field, UniformGrid};
pub use kernel::{Kernel, MollifierSpec, Profile};
pub use nonlocal_op::NonlocalOperator;
pub use potentials::Potential;
pub use solvers::{Equation, Scheme, Solver, SolverConfig, TrajectoryRecord};
pub use spectral::Spectral;
