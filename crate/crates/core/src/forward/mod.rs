//! Explicit second-order FDTD solver for `c⁻²u_tt − Δu = 0`, `u(0) = f`, `u_t(0) = 0`,
//! boundary-trace recording, and a constant-speed Kirchhoff oracle.
//!
//! The lattice is cell-centred with a 7-point Laplacian and sharp (unsmoothed)
//! `c²` sampling. The box is closed by a zero Dirichlet wall behind a quadratic
//! sponge layer.

pub mod grid;
pub mod kirchhoff;
pub mod shell;
pub mod solver;
pub mod trace;

pub use grid::{cfl_timestep, Grid, MIN_SPONGE_WIDTH};
pub use kirchhoff::{kirchhoff_oracle, kirchhoff_series, spherical_mean};
pub use shell::SensorShell;
pub use solver::{energy, simulate, step, SimulationReport, WaveState};
pub use trace::{write_atomic, BoundaryTrace, TRACE_MAGIC};
