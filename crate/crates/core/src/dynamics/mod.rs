//! Semi-discrete MGT dynamics: state variables, the first-order system and
//! its time integration.

mod compat;
mod simulate;
mod source;
mod state;
mod stepper;
mod system;

pub use compat::{boundary_residual, check_compatibility, CompatibilityReport};
pub use simulate::{reconstruct_u, simulate, SimulationOptions, Trajectory};
pub use source::{FnSource, NoSource, SeparableSource, SourceTerm, Temporal};
pub use state::{StateU, StateZ};
pub use stepper::{Resolvent, Scheme, Stepper};
pub use system::MgtSystem;
