//! P1 finite elements: meshes, operator assembly, Neumann map and export.

mod assembly;
pub mod export;
mod mesh;
mod neumann;
mod params;

pub use assembly::{assemble_operators, boundary_mass, stiffness, weighted_mass, OperatorBundle};
pub use mesh::{Facet, Mesh};
pub use neumann::NeumannMap;
pub use params::{MaterialParams, Profile, SpatialField};
