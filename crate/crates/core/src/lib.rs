//! Nonlinear task-dynamic models of articulatory gestures.
//!
//! * [`model`]: gesture ODEs, critical damping and restoring forces
//! * [`scaling`]: proportional, local and global scaling of the nonlinear coefficient
//! * [`solver`]: adaptive Dormand–Prince 5(4) integration on a uniform output grid
//! * [`kinematics`]: peak velocity, movement window, settling and symmetry
//! * [`analysis`]: parameter sweeps and power-law regression
//! * [`fit`]: parameter estimation by bounded Nelder–Mead
//! * [`cli`]: configuration, commands and figure datasets behind the `taskdyn` binary

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fit;
pub mod kinematics;
pub mod model;
pub mod scaling;
pub mod solver;

pub use error::{Error, Result};
pub use kinematics::KinematicSummary;
pub use model::{GestureParams, State};
pub use scaling::{EffectiveCoefficient, ScalingMode};
pub use solver::{SimConfig, Status, Trajectory};
