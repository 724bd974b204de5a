use sprs::{CsMat, TriMat};

use super::mesh::Mesh;
use super::params::MaterialParams;
use crate::error::{Error, Result};
use crate::geometry::{Dim, Tag};
use crate::linalg::{combine, symmetrize, SpMat};

/// Sparse operators of the P1 discretization.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    /// Consistent mass matrix M.
    pub mass: SpMat,
    /// Stiffness matrix K.
    pub stiffness: SpMat,
    /// kappa0-weighted boundary mass on Gamma0.
    pub b0: SpMat,
    /// kappa1-weighted boundary mass on Gamma1.
    pub b1: SpMat,
    /// K + B0.
    pub ktilde: SpMat,
    /// alpha-weighted mass.
    pub mass_alpha: SpMat,
    /// gamma-weighted mass.
    pub mass_gamma: SpMat,
    /// Unweighted boundary mass on Gamma0 (trace pairing).
    pub trace_gamma0: SpMat,
    pub alpha_nodal: Vec<f64>,
    pub gamma_nodal: Vec<f64>,
    pub kappa0_nodal: Vec<f64>,
    pub kappa1_nodal: Vec<f64>,
}

impl OperatorBundle {
    pub fn dim(&self) -> usize {
        self.mass.rows()
    }

    pub fn gamma_nonnegative(&self) -> bool {
        self.gamma_nodal.iter().all(|g| *g >= 0.0)
    }

    pub fn gamma_identically_zero(&self) -> bool {
        self.gamma_nodal.iter().all(|g| *g == 0.0)
    }

    pub fn alpha_nonnegative(&self) -> bool {
        self.alpha_nodal.iter().all(|a| *a >= 0.0)
    }
}

fn nodal(mesh: &Mesh, name: &str, f: impl Fn(crate::geometry::Point) -> f64) -> Result<Vec<f64>> {
    mesh.nodes
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let v = f(*p);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::UndefinedWeight(format!("{name} is {v} at node {i}")))
            }
        })
        .collect()
}

/// Mass matrix weighted by the P1 interpolant of nodal `w`.
pub fn weighted_mass(mesh: &Mesh, w: &[f64]) -> SpMat {
    let n = mesh.node_count();
    let mut t = TriMat::new((n, n));
    for e in 0..mesh.element_count() {
        let ns = mesh.element_nodes(e);
        let a = mesh.element_measure(e);
        match mesh.dim {
            Dim::One => {
                let (i, j) = (ns[0], ns[1]);
                let (wi, wj) = (w[i], w[j]);
                t.add_triplet(i, i, a * (wi / 4.0 + wj / 12.0));
                t.add_triplet(j, j, a * (wj / 4.0 + wi / 12.0));
                let off = a * (wi + wj) / 12.0;
                t.add_triplet(i, j, off);
                t.add_triplet(j, i, off);
            }
            Dim::Two => {
                for p in 0..3 {
                    for q in 0..3 {
                        let (i, j) = (ns[p], ns[q]);
                        let v = if p == q {
                            let (k1, k2) = (ns[(p + 1) % 3], ns[(p + 2) % 3]);
                            a * (w[i] / 10.0 + (w[k1] + w[k2]) / 30.0)
                        } else {
                            let k = ns[3 - p - q];
                            a * (w[i] / 30.0 + w[j] / 30.0 + w[k] / 60.0)
                        };
                        t.add_triplet(i, j, v);
                    }
                }
            }
        }
    }
    symmetrize(&t.to_csr())
}

pub fn stiffness(mesh: &Mesh) -> SpMat {
    let n = mesh.node_count();
    let mut t = TriMat::new((n, n));
    for e in 0..mesh.element_count() {
        let ns = mesh.element_nodes(e);
        let g = mesh.basis_gradients(e);
        let a = mesh.element_measure(e);
        for p in 0..ns.len() {
            for q in 0..ns.len() {
                t.add_triplet(ns[p], ns[q], a * g[p].dot(&g[q]));
            }
        }
    }
    symmetrize(&t.to_csr())
}

/// Boundary mass on facets with the given tag, weighted by nodal `w`.
pub fn boundary_mass(mesh: &Mesh, tag: Tag, w: &[f64]) -> SpMat {
    let n = mesh.node_count();
    let mut t = TriMat::new((n, n));
    for f in mesh.facets_with(tag) {
        if f.is_point() {
            let i = f.nodes[0];
            t.add_triplet(i, i, w[i] * f.measure);
        } else {
            let (i, j) = (f.nodes[0], f.nodes[1]);
            let l = f.measure;
            t.add_triplet(i, i, l * (w[i] / 4.0 + w[j] / 12.0));
            t.add_triplet(j, j, l * (w[j] / 4.0 + w[i] / 12.0));
            let off = l * (w[i] + w[j]) / 12.0;
            t.add_triplet(i, j, off);
            t.add_triplet(j, i, off);
        }
    }
    let m: CsMat<f64> = t.to_csr();
    symmetrize(&m)
}

pub fn assemble_operators(mesh: &Mesh, params: &MaterialParams) -> Result<OperatorBundle> {
    params.validate()?;
    let alpha = nodal(mesh, "alpha", |x| params.alpha.eval(x))?;
    let kappa0 = nodal(mesh, "kappa0", |x| params.kappa0.eval(x))?;
    let kappa1 = nodal(mesh, "kappa1", |x| params.kappa1.eval(x))?;
    for (name, k) in [("kappa0", &kappa0), ("kappa1", &kappa1)] {
        if let Some(i) = k.iter().position(|v| *v < 0.0) {
            return Err(Error::Params(format!("{name} is negative ({}) at node {i}", k[i])));
        }
    }
    let shift = params.tau * params.ratio();
    let gamma: Vec<f64> = alpha.iter().map(|a| a - shift).collect();
    let ones = vec![1.0; mesh.node_count()];

    let mass = weighted_mass(mesh, &ones);
    let k = stiffness(mesh);
    let b0 = boundary_mass(mesh, Tag::Gamma0, &kappa0);
    let b1 = boundary_mass(mesh, Tag::Gamma1, &kappa1);
    let ktilde = symmetrize(&combine(&[(1.0, &k), (1.0, &b0)]));
    Ok(OperatorBundle {
        mass_alpha: weighted_mass(mesh, &alpha),
        mass_gamma: weighted_mass(mesh, &gamma),
        trace_gamma0: boundary_mass(mesh, Tag::Gamma0, &ones),
        mass,
        stiffness: k,
        b0,
        b1,
        ktilde,
        alpha_nodal: alpha,
        gamma_nodal: gamma,
        kappa0_nodal: kappa0,
        kappa1_nodal: kappa1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::params::{Profile, SpatialField};
    use crate::geometry::{Geometry, Point};
    use crate::linalg::{asymmetry, bilinear, quad, to_dense};

    fn interval_mesh(n: usize) -> Mesh {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        Mesh::interval(&g, n).unwrap()
    }

    fn square_mesh(m: usize) -> Mesh {
        let g = Geometry::rectangle(
            (0.0, 1.0),
            (0.0, 1.0),
            [Tag::Gamma0, Tag::Gamma1, Tag::Gamma1, Tag::Gamma1],
            Point::new(0.5, -1.0),
        )
        .unwrap();
        Mesh::generate(&g, m).unwrap()
    }

    #[test]
    fn interval_two_elements_frozen() {
        let mesh = interval_mesh(2);
        let p = MaterialParams::constant(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let ops = assemble_operators(&mesh, &p).unwrap();
        let m = to_dense(&ops.mass);
        let h = 0.5;
        let expect = [[h / 3.0, h / 6.0, 0.0], [h / 6.0, 2.0 * h / 3.0, h / 6.0], [0.0, h / 6.0, h / 3.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[(i, j)] - expect[i][j]).abs() < 1e-15);
            }
        }
        let k = to_dense(&ops.stiffness);
        let ek = [[2.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[(i, j)] - ek[i][j]).abs() < 1e-14);
            }
        }
        let b0 = to_dense(&ops.b0);
        let b1 = to_dense(&ops.b1);
        assert_eq!(b0[(0, 0)], 1.0);
        assert_eq!(b1[(2, 2)], 1.0);
        assert_eq!(b0.sum(), 1.0);
        assert_eq!(b1.sum(), 1.0);
    }

    #[test]
    fn mass_reproduces_area_and_linear_moments() {
        let mesh = square_mesh(6);
        let p = MaterialParams::constant(1.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let ops = assemble_operators(&mesh, &p).unwrap();
        let ones = vec![1.0; mesh.node_count()];
        assert!((quad(&ops.mass, &ones) - 1.0).abs() < 1e-13);
        let x: Vec<f64> = mesh.nodes.iter().map(|p| p.x).collect();
        // int x dx = 1/2, int x^2 = 1/3 (exact for P1 functions)
        assert!((bilinear(&ops.mass, &ones, &x) - 0.5).abs() < 1e-13);
        assert!((quad(&ops.mass, &x) - 1.0 / 3.0).abs() < 1e-13);
        // stiffness annihilates constants, int |grad x|^2 = 1
        assert!(quad(&ops.stiffness, &ones).abs() < 1e-12);
        assert!((quad(&ops.stiffness, &x) - 1.0).abs() < 1e-12);
        // Gamma0 is the bottom edge, length 1
        assert!((quad(&ops.b0, &ones) - 1.0).abs() < 1e-13);
        assert!((quad(&ops.b1, &ones) - 3.0).abs() < 1e-13);
    }

    #[test]
    fn weighted_mass_exact_for_linear_weight() {
        let mesh = square_mesh(4);
        let mut p = MaterialParams::constant(1.0, 1.0, 1.0, 0.0, 1.0, 1.0);
        p.alpha = SpatialField::Profile(Profile::Linear { value: 1.0, gradient: [2.0, 0.0] });
        let ops = assemble_operators(&mesh, &p).unwrap();
        let ones = vec![1.0; mesh.node_count()];
        // int (1 + 2x) = 2
        assert!((quad(&ops.mass_alpha, &ones) - 2.0).abs() < 1e-13);
        // gamma = alpha - 1 -> int 2x = 1
        assert!((quad(&ops.mass_gamma, &ones) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn matrices_symmetric_and_psd() {
        let mesh = square_mesh(5);
        let p = MaterialParams::constant(1.0, 1.0, 2.0, 0.7, 0.5, 1.5);
        let ops = assemble_operators(&mesh, &p).unwrap();
        for m in [&ops.mass, &ops.stiffness, &ops.b0, &ops.b1, &ops.ktilde, &ops.mass_gamma] {
            assert_eq!(asymmetry(m), 0.0);
        }
        let mut rng = 12345u64;
        for _ in 0..20 {
            let v: Vec<f64> = (0..mesh.node_count())
                .map(|_| {
                    rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (rng >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect();
            assert!(quad(&ops.mass, &v) > 0.0);
            assert!(quad(&ops.stiffness, &v) >= -1e-14);
            assert!(quad(&ops.ktilde, &v) > 0.0);
        }
    }

    #[test]
    fn non_finite_weight_rejected() {
        let mesh = interval_mesh(4);
        let p = MaterialParams::constant(1.0, 1.0, 1.0, f64::NAN, 1.0, 1.0);
        assert!(matches!(assemble_operators(&mesh, &p), Err(Error::UndefinedWeight(_))));
    }

    #[test]
    fn negative_kappa_rejected() {
        let mesh = interval_mesh(4);
        let p = MaterialParams::constant(1.0, 1.0, 1.0, 1.0, -1.0, 1.0);
        assert!(matches!(assemble_operators(&mesh, &p), Err(Error::Params(_))));
    }
}
