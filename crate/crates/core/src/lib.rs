//! Grid-based level-set reachability for hybrid systems with controlled and
//! forced mode switches.

pub mod cli;
pub mod error;
pub mod grid;
pub mod hji;
pub mod io;
pub mod model;
pub mod policy;
pub mod solver;
pub mod systems;

pub use error::{Error, Result};
pub use grid::{GridSpec, OutOfBounds, ValueField};
pub use hji::GameRole;
pub use model::{Dynamics, HybridSystem, InputBox, Mode, Owner, Switch, SwitchKind};
pub use solver::{solve, solve_with_dissipation, SolveResult, SolverConfig};
pub use policy::{query, rollout, DisturbancePolicy, RolloutConfig, RolloutStatus, Trajectory};
