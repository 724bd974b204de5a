use nalgebra::DMatrix;

use crate::discretization::{assemble_operators, MaterialParams, Mesh, OperatorBundle};
use crate::error::{Error, Result};
use crate::linalg::{combine, to_dense, SpMat, SpdSolver};

/// Semi-discrete MGT system divided through by tau:
///
/// ```text
/// M u_ttt + (Ma + b B1) u_tt + (b K~ + c2 B1) u_t + c2 K~ u = M f
/// M z_tt + b K~ z + b B1 z_t = -Mg u_tt + M f,   z = u_t + r u
/// ```
///
/// where `b`, `c2`, `Ma`, `Mg` and `f` already carry the factor 1/tau.
#[derive(Debug, Clone)]
pub struct MgtSystem {
    pub mesh: Mesh,
    pub params: MaterialParams,
    pub ops: OperatorBundle,
    /// b / tau
    pub b: f64,
    /// c^2 / tau
    pub c2: f64,
    /// c^2 / b
    pub r: f64,
    /// alpha-weighted mass / tau
    pub m_alpha: SpMat,
    /// gamma-weighted mass / tau
    pub m_gamma: SpMat,
    mass_solver: SpdSolver,
}

impl MgtSystem {
    pub fn new(mesh: Mesh, params: MaterialParams) -> Result<Self> {
        let ops = assemble_operators(&mesh, &params)?;
        Self::from_operators(mesh, params, ops)
    }

    pub fn from_operators(mesh: Mesh, params: MaterialParams, ops: OperatorBundle) -> Result<Self> {
        params.validate()?;
        let tau = params.tau;
        let mass_solver = SpdSolver::new(&ops.mass)?;
        Ok(Self {
            b: params.b / tau,
            c2: params.c * params.c / tau,
            r: params.ratio(),
            m_alpha: ops.mass_alpha.map(|v| v / tau),
            m_gamma: ops.mass_gamma.map(|v| v / tau),
            mass_solver,
            mesh,
            params,
            ops,
        })
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    pub fn tau(&self) -> f64 {
        self.params.tau
    }

    pub fn mass_solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.mass_solver.solve(rhs)
    }

    /// Dense generator of the first-order system in (u, z, z_t).
    pub fn generator_z(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let minv = self.dense_mass_inverse()?;
        let kt = to_dense(&self.ops.ktilde);
        let b1 = to_dense(&self.ops.b1);
        let mg = to_dense(&self.m_gamma);
        let (r, b) = (self.r, self.b);
        let mut a = DMatrix::zeros(3 * n, 3 * n);
        for i in 0..n {
            a[(i, i)] = -r;
            a[(i, n + i)] = 1.0;
            a[(n + i, 2 * n + i)] = 1.0;
        }
        let g = &minv * &mg;
        let row_u = &g * (-r * r);
        let row_z = &minv * &kt * (-b) + &g * r;
        let row_v = &minv * &b1 * (-b) - &g;
        a.view_mut((2 * n, 0), (n, n)).copy_from(&row_u);
        a.view_mut((2 * n, n), (n, n)).copy_from(&row_z);
        a.view_mut((2 * n, 2 * n), (n, n)).copy_from(&row_v);
        Ok(a)
    }

    /// Dense generator of the first-order system in (u, u_t, u_tt).
    pub fn generator_u(&self) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let minv = self.dense_mass_inverse()?;
        let kt = to_dense(&self.ops.ktilde);
        let b1 = to_dense(&self.ops.b1);
        let ma = to_dense(&self.m_alpha);
        let (b, c2) = (self.b, self.c2);
        let mut a = DMatrix::zeros(3 * n, 3 * n);
        for i in 0..n {
            a[(i, n + i)] = 1.0;
            a[(n + i, 2 * n + i)] = 1.0;
        }
        let row_u = &minv * &kt * (-c2);
        let row_w = &minv * (&kt * (-b) - &b1 * c2);
        let row_a = &minv * (-&ma - &b1 * b);
        a.view_mut((2 * n, 0), (n, n)).copy_from(&row_u);
        a.view_mut((2 * n, n), (n, n)).copy_from(&row_w);
        a.view_mut((2 * n, 2 * n), (n, n)).copy_from(&row_a);
        Ok(a)
    }

    /// Nodal change of variables (u, u_t, u_tt) -> (u, z, z_t).
    pub fn transform(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut t = DMatrix::identity(3 * n, 3 * n);
        for i in 0..n {
            t[(n + i, i)] = self.r;
            t[(2 * n + i, n + i)] = self.r;
        }
        t
    }

    pub fn transform_inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let r = self.r;
        let mut t = DMatrix::identity(3 * n, 3 * n);
        for i in 0..n {
            t[(n + i, i)] = -r;
            t[(2 * n + i, n + i)] = -r;
            t[(2 * n + i, i)] = r * r;
        }
        t
    }

    fn dense_mass_inverse(&self) -> Result<DMatrix<f64>> {
        let m = to_dense(&self.ops.mass);
        let chol = nalgebra::Cholesky::new(m)
            .ok_or_else(|| Error::Singular("mass matrix is not positive definite".into()))?;
        Ok(chol.inverse())
    }

    /// M + theta b B1 + theta^2 b K~ + theta/(1 + theta r) Mg
    pub(crate) fn resolvent_matrix(&self, theta: f64) -> SpMat {
        let s = theta / (1.0 + theta * self.r);
        combine(&[
            (1.0, &self.ops.mass),
            (theta * self.b, &self.ops.b1),
            (theta * theta * self.b, &self.ops.ktilde),
            (s, &self.m_gamma),
        ])
    }
}
