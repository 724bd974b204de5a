//! Multiplier identities checked on manufactured fields, and the E1
//! reconstruction diagnostic on computed trajectories.

mod identities;
mod manufactured;
mod quadrature;
mod reconstruction;

pub use identities::{
    hgradz_residual, hgradz_residual_with, zdivh_residual, zmul_residual, ConvergenceStudy,
    IdentityReport, Multiplier, Perturbed, Window,
};
pub use manufactured::{ManufacturedField, RobinField1d, Scaled, TrigField};
pub use quadrature::{boundary_points, domain_points, interval_points, time_points, Rule};
pub use reconstruction::{reconstruction_diagnostic, ReconstructionReport, DEFAULT_DELTA};
