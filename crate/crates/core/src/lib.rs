//! Windowed time averages of limit-cycle outputs and their tangent and
//! discrete-adjoint sensitivities for a BDF2 dual-time-stepping solver.

pub mod adjoint;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod models;
pub mod optim;
pub mod primal;
pub mod quadrature;
pub mod tangent;
pub mod windows;

pub use adjoint::{adjoint_sweep, AdjointConfig, AdjointMode, AdjointSweep};
pub use error::{Error, Result};
pub use models::{DesignVector, Model, Output};
pub use primal::{estimate_period, simulate, PseudoTimeConfig, TimeGrid, Trajectory};
pub use tangent::{tangent, windowed_tangent_sensitivity, TangentTrajectory};
pub use windows::{discrete_weights, DiscreteWeights, Normalization, WindowKind};
