//! Time-optimal control of linear evolution equations through the root of
//! the minimal-distance value function.
//!
//! For a horizon `nu`, `delta(nu)` is the smallest reachable distance
//! `|y(1) - y_d| - delta0` after rescaling time to `(0, 1)`. The optimal
//! time is the first root of `delta`. [`newton_solve`] finds it with a
//! damped Newton method whose inner problems are solved by the conditional
//! gradient method [`cg_solve`], optionally fully corrective.
//!
//! The core is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.
//!
//! ```no_run
//! use topt_core::{newton_solve, pendulum_preset, NewtonOptions, TimeGrid, PENDULUM_OPTIMAL_TIME};
//!
//! let system = pendulum_preset::<f64>();
//! let opts = NewtonOptions::for_radius(0.6 * PENDULUM_OPTIMAL_TIME, 1e-6);
//! let trace = newton_solve(&system, TimeGrid::new(10_000).unwrap(), &opts).unwrap();
//! println!("T = {}", trace.final_nu());
//! ```

pub mod cg;
mod error;
pub mod evolution;
pub mod fem;
pub mod linalg;
pub mod newton;
pub mod ode;
pub mod oracles;
mod preset;
mod scalar;

pub use cg::{cg_solve, CgIterate, CgOptions, ConvergenceFlag, DistanceSolution};
pub use error::{Error, Result};
pub use evolution::{
    adjoint_sensitivity, distance_value, hamiltonian_integral, AdjointData, Control, EvolutionSystem,
    LinearEvolution, ProblemData, StateTrajectory, TimeGrid,
};
pub use fem::{heat_distributed_preset, heat_neumann_preset, BoundaryCondition, ControlRegion, HeatSystem};
pub use newton::{
    delta_eval, newton_solve, sample_value_function, structural_diagnostic, DeltaEvaluation, NewtonOptions,
    NewtonStatus, NewtonStep, NewtonTrace, ValueSample,
};
pub use ode::{pendulum_preset, pendulum_with_radius, DenseLinearSystem, PENDULUM_OPTIMAL_TIME};
pub use preset::Preset;
pub use scalar::Scalar;

pub type Pendulum = DenseLinearSystem<f64>;
pub type HeatSystemF64 = HeatSystem<f64>;
pub type ControlF64 = Control<f64>;
pub type CgOptionsF64 = CgOptions<f64>;
pub type NewtonOptionsF64 = NewtonOptions<f64>;
pub type NewtonTraceF64 = NewtonTrace<f64>;
pub type DistanceSolutionF64 = DistanceSolution<f64>;
