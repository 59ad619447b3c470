//! P1 finite elements on a rectangle and the time-dependent problem definition.

pub mod assembly;
pub mod mesh;
pub mod problem;
pub mod raster;

pub use assembly::{
    assemble_load, assemble_mass, assemble_mass_full, assemble_stiffness, assemble_stiffness_full,
    boundary_load_full, h1_inner_product, BoundaryFlux, CoefficientField,
};
pub use mesh::{BoundarySegment, DirichletSides, RectangleMesh, Side};
pub use problem::{AffineDiffusion, DataKind, DataMatrix, Signal, TimeGrid, TransientProblem};
pub use raster::Raster;
