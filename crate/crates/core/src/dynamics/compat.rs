use serde::Serialize;

use crate::discretization::Mesh;
use crate::geometry::Tag;

/// Weak residuals of the boundary conditions satisfied by the initial data:
/// d_nu u0 + kappa0 u0 on Gamma0 and d_nu u0 + kappa1 u1 on Gamma1.
#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub gamma0_residual: f64,
    pub gamma1_residual: f64,
    pub tolerance: f64,
    pub compatible: bool,
}

/// Facet moments of `d_nu u + kappa w` against the boundary hat functions,
/// measured by sqrt(sum m_i^2 / w_i) with w_i the lumped facet weights.
/// Normal derivatives are taken from the facet's owner element.
pub fn boundary_residual(mesh: &Mesh, tag: Tag, u: &[f64], kappa: &[f64], w: &[f64]) -> f64 {
    let n = mesh.node_count();
    let mut moment = vec![0.0; n];
    let mut weight = vec![0.0; n];
    for f in mesh.facets_with(tag) {
        let flux = mesh.element_gradient(f.owner, u).dot(&f.normal);
        if f.is_point() {
            let i = f.nodes[0];
            moment[i] += f.measure * (flux + kappa[i] * w[i]);
            weight[i] += f.measure;
        } else {
            let (i, j) = (f.nodes[0], f.nodes[1]);
            let l = f.measure;
            // int (flux + kappa w) phi_i with kappa w linear on the facet
            let (ki, kj) = (kappa[i] * w[i], kappa[j] * w[j]);
            moment[i] += l * (flux / 2.0 + ki / 3.0 + kj / 6.0);
            moment[j] += l * (flux / 2.0 + kj / 3.0 + ki / 6.0);
            weight[i] += l / 2.0;
            weight[j] += l / 2.0;
        }
    }
    moment
        .iter()
        .zip(&weight)
        .filter(|(_, w)| **w > 0.0)
        .map(|(m, w)| m * m / w)
        .sum::<f64>()
        .sqrt()
}

pub fn check_compatibility(
    mesh: &Mesh,
    kappa0: &[f64],
    kappa1: &[f64],
    u0: &[f64],
    u1: &[f64],
    tolerance: f64,
) -> CompatibilityReport {
    let g0 = boundary_residual(mesh, Tag::Gamma0, u0, kappa0, u0);
    let g1 = boundary_residual(mesh, Tag::Gamma1, u0, kappa1, u1);
    CompatibilityReport {
        gamma0_residual: g0,
        gamma1_residual: g1,
        tolerance,
        compatible: g0 <= tolerance && g1 <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Geometry, Point};

    #[test]
    fn zero_data_compatible() {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let m = Mesh::interval(&g, 8).unwrap();
        let z = vec![0.0; 9];
        let k = vec![1.0; 9];
        let r = check_compatibility(&m, &k, &k, &z, &z, 1e-12);
        assert!(r.compatible);
        assert_eq!(r.gamma0_residual, 0.0);
    }

    #[test]
    fn linear_data_satisfying_conditions() {
        // u0 = 1 + x on (0,1): -u0'(0) + k0 u0(0) = 0 with k0 = 1;
        // u0'(1) + k1 u1(1) = 0 with u1 = -1/k1
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let m = Mesh::interval(&g, 8).unwrap();
        let u0: Vec<f64> = m.nodes.iter().map(|p| 1.0 + p.x).collect();
        let u1 = vec![-0.5; 9];
        let k0 = vec![1.0; 9];
        let k1 = vec![2.0; 9];
        let r = check_compatibility(&m, &k0, &k1, &u0, &u1, 1e-12);
        assert!(r.compatible, "{r:?}");
        let r = check_compatibility(&m, &k0, &k1, &u0, &[0.0; 9], 1e-12);
        assert!(!r.compatible);
        assert!((r.gamma1_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_linear_data() {
        // u0 = y on the unit square, Gamma0 bottom (nu = -y): -1 + k0 * 0 != 0
        let g = Geometry::rectangle(
            (0.0, 1.0),
            (0.0, 1.0),
            [Tag::Gamma0, Tag::Gamma1, Tag::Gamma1, Tag::Gamma1],
            Point::new(0.5, -1.0),
        )
        .unwrap();
        let m = Mesh::generate(&g, 4).unwrap();
        let u0: Vec<f64> = m.nodes.iter().map(|p| p.y).collect();
        let k = vec![1.0; m.node_count()];
        let r0 = boundary_residual(&m, Tag::Gamma0, &u0, &k, &u0);
        // moments -int phi_i, norm sqrt(sum w_i) = sqrt(|Gamma0|) = 1
        assert!((r0 - 1.0).abs() < 1e-12);
    }
}
