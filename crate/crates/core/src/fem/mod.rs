//! P1 finite elements for the heat equation on the unit square.

mod heat;
mod mesh;

pub use heat::{
    build_heat_system, heat_distributed_preset, heat_neumann_preset, BoundaryCondition, ControlRegion,
    FemOperators, HeatSystem, HEAT_DIFFUSIVITY,
};
pub use mesh::UniformMesh;
