use super::assembly::OperatorBundle;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, quad, spmv, SpdSolver};

/// Discrete Neumann map: Gamma0 boundary data phi to the solution psi of
/// (K + B0) psi = T phi, where T is the Gamma0 trace pairing.
#[derive(Debug, Clone)]
pub struct NeumannMap {
    solver: SpdSolver,
    trace: crate::linalg::SpMat,
}

impl NeumannMap {
    pub fn new(ops: &OperatorBundle) -> Result<Self> {
        let ones = vec![1.0; ops.dim()];
        let boundary_weight = quad(&ops.b0, &ones);
        let scale = quad(&ops.trace_gamma0, &ones).max(f64::MIN_POSITIVE);
        if !(boundary_weight > 1e-12 * scale) {
            return Err(Error::IllPosedMap);
        }
        let solver = SpdSolver::new(&ops.ktilde)?;
        Ok(Self { solver, trace: ops.trace_gamma0.clone() })
    }

    /// psi = N phi; `phi` is a nodal vector of which only the Gamma0 trace matters.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        self.solver.solve(&spmv(&self.trace, phi))
    }

    /// |xi^T (K + B0) N phi - <xi, phi>_Gamma0| / (|xi| |phi|)
    pub fn adjoint_identity_residual(&self, phi: &[f64], xi: &[f64]) -> f64 {
        let psi = self.apply(phi);
        let lhs = dot(xi, &spmv(self.solver.matrix(), &psi));
        let rhs = dot(xi, &spmv(&self.trace, phi));
        let s = norm(xi) * norm(phi);
        if s == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{assemble_operators, MaterialParams, Mesh};
    use crate::geometry::{Geometry, Tag};

    #[test]
    fn interval_closed_form() {
        // -psi'' = 0, -psi'(0) + k0 psi(0) = phi, psi'(1) + 0 = 0  => psi = phi / k0
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let mesh = Mesh::interval(&g, 16).unwrap();
        let p = MaterialParams::constant(1.0, 1.0, 1.0, 1.0, 2.0, 1.0);
        let ops = assemble_operators(&mesh, &p).unwrap();
        let map = NeumannMap::new(&ops).unwrap();
        let mut phi = vec![0.0; mesh.node_count()];
        phi[0] = 3.0;
        let psi = map.apply(&phi);
        for v in psi {
            assert!((v - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn vanishing_kappa0_is_ill_posed() {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let mesh = Mesh::interval(&g, 8).unwrap();
        let p = MaterialParams::constant(1.0, 1.0, 1.0, 1.0, 0.0, 1.0);
        let ops = assemble_operators(&mesh, &p).unwrap();
        assert!(matches!(NeumannMap::new(&ops), Err(Error::IllPosedMap)));
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let mesh = Mesh::interval(&g, 8).unwrap();
        let p = MaterialParams::constant(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let ops = assemble_operators(&mesh, &p).unwrap();
        let map = NeumannMap::new(&ops).unwrap();
        assert!(map.apply(&vec![0.0; mesh.node_count()]).iter().all(|v| *v == 0.0));
    }
}
