//! Observability-type estimate of E1 over an interior window from boundary
//! and interior dissipation, lower-order terms and forcing.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::{MgtSystem, SourceTerm, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{generalized_symmetric_eigen, quad, to_dense};

/// Fractional order above which the lower-order terms are measured:
/// |z|_{1 - delta} and |z_t|_{-delta}.
pub const DEFAULT_DELTA: f64 = 0.25;

/// Dense cap for the eigenbasis used by the fractional norms.
const MAX_DENSE: usize = 2500;

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub window: (f64, f64),
    /// int over the window of E1
    pub lhs: f64,
    /// E1 at the window ends
    pub endpoints: f64,
    pub boundary_dissipation: f64,
    pub interior_dissipation: f64,
    pub lower_order: f64,
    pub forcing: f64,
    /// Smallest C with lhs <= endpoints + C (sum of the integrals).
    pub implied_c: f64,
    pub delta: f64,
}

fn trapezoid(t: &[f64], v: &[f64]) -> f64 {
    t.windows(2).zip(v.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Needs a trajectory with stored states and a defined E1.
pub fn reconstruction_diagnostic(
    sys: &MgtSystem,
    traj: &Trajectory,
    src: &dyn SourceTerm,
    margin: f64,
    delta: f64,
) -> Result<ReconstructionReport> {
    if !traj.e1_defined {
        return Err(Error::Precondition("E1 is undefined when gamma < 0 somewhere".into()));
    }
    if traj.states.len() != traj.samples.len() || traj.samples.len() < 3 {
        return Err(Error::Precondition("reconstruction needs stored states at every sample".into()));
    }
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must lie in [0, 1/2), got {delta}")));
    }
    let n = sys.dim();
    if n > MAX_DENSE {
        return Err(Error::InvalidArgument(format!(
            "reconstruction uses a dense eigenbasis; {n} unknowns exceed the cap {MAX_DENSE}"
        )));
    }
    let times = traj.times();
    let t_final = *times.last().unwrap();
    if !(margin >= 0.0 && 2.0 * margin < t_final) {
        return Err(Error::InvalidArgument(format!("margin {margin} leaves an empty window")));
    }
    let eps = 1e-9 * t_final.max(1.0);
    let i0 = times.iter().position(|&t| t >= margin - eps).unwrap();
    let i1 = times.iter().rposition(|&t| t <= t_final - margin + eps).unwrap();
    if i1 <= i0 {
        return Err(Error::InvalidArgument("window contains fewer than two samples".into()));
    }
    let e1: Vec<f64> = traj.samples.iter().map(|s| s.e1).collect();
    let lhs = trapezoid(&times[i0..=i1], &e1[i0..=i1]);
    let endpoints = e1[i0] + e1[i1];

    let db: Vec<f64> = traj.samples.iter().map(|s| s.d_boundary).collect();
    let di: Vec<f64> = traj.samples.iter().map(|s| s.d_interior).collect();

    let k = to_dense(&sys.ops.ktilde);
    let m = to_dense(&sys.ops.mass);
    let (vals, vecs) = generalized_symmetric_eigen(&k, &m)?;
    if vals[0] <= 0.0 {
        return Err(Error::Precondition("K~ is not positive definite".into()));
    }
    // coefficients c = Phi^T M y, so |y|_s^2 = sum lambda^s c^2
    let proj: DMatrix<f64> = vecs.transpose() * &m;
    let frac = |y: &[f64], s: f64| {
        let c = &proj * DVector::from_column_slice(y);
        c.iter().zip(&vals).map(|(c, l)| l.powf(s) * c * c).sum::<f64>()
    };
    let lot: Vec<f64> = traj
        .states
        .iter()
        .map(|y| frac(&y.z, 1.0 - delta) + frac(&y.z_t, -delta))
        .collect();
    let forcing: Vec<f64> = times
        .iter()
        .map(|&t| {
            if src.is_zero() {
                0.0
            } else {
                let f: Vec<f64> = src.nodal(t, &sys.mesh.nodes).iter().map(|v| v / sys.tau()).collect();
                quad(&sys.ops.mass, &f)
            }
        })
        .collect();

    let boundary_dissipation = trapezoid(&times, &db);
    let interior_dissipation = trapezoid(&times, &di);
    let lower_order = trapezoid(&times, &lot);
    let forcing = trapezoid(&times, &forcing);
    let bracket = boundary_dissipation + interior_dissipation + lower_order + forcing;
    let excess = lhs - endpoints;
    let implied_c = if excess <= 0.0 {
        0.0
    } else if bracket > 0.0 {
        excess / bracket
    } else {
        f64::INFINITY
    };
    Ok(ReconstructionReport {
        window: (times[i0], times[i1]),
        lhs,
        endpoints,
        boundary_dissipation,
        interior_dissipation,
        lower_order,
        forcing,
        implied_c,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{MaterialParams, Mesh};
    use crate::dynamics::{simulate, NoSource, SimulationOptions, StateU};
    use crate::geometry::{Geometry, Tag};

    fn run(kappa1: f64) -> (MgtSystem, Trajectory) {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let sys = MgtSystem::new(Mesh::generate(&g, 32).unwrap(), MaterialParams::constant(1.0, 1.0, 1.0, 1.5, 1.0, kappa1))
            .unwrap();
        let mut ic = StateU::zeros(sys.dim());
        for (i, x) in sys.mesh.nodes.iter().enumerate() {
            ic.u_tt[i] = (-(x.x - 0.5).powi(2) / 0.02).exp();
        }
        let mut o = SimulationOptions::new(8.0, 0.01);
        o.output_stride = 5;
        o.store_states = true;
        let tr = simulate(&sys, &ic, &NoSource, &o).unwrap();
        (sys, tr)
    }

    #[test]
    fn implied_constant_is_moderate() {
        let (sys, tr) = run(1.0);
        let r = reconstruction_diagnostic(&sys, &tr, &NoSource, 1.0, DEFAULT_DELTA).unwrap();
        assert!(r.lhs > 0.0 && r.boundary_dissipation > 0.0 && r.lower_order > 0.0);
        assert!(r.implied_c.is_finite() && r.implied_c < 100.0, "{r:?}");
    }

    #[test]
    fn needs_states() {
        let (sys, mut tr) = run(1.0);
        tr.states.clear();
        assert!(matches!(
            reconstruction_diagnostic(&sys, &tr, &NoSource, 1.0, DEFAULT_DELTA),
            Err(Error::Precondition(_))
        ));
    }
}
