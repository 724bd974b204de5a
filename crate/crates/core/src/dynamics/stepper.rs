use serde::{Deserialize, Serialize};

use super::source::SourceTerm;
use super::state::StateZ;
use super::system::MgtSystem;
use crate::error::{Error, Result};
use crate::linalg::{spmv, spmv_acc, SpdSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Implicit midpoint: second order, conserves quadratic invariants.
    #[default]
    Midpoint,
    /// Two-step backward differentiation, started by one midpoint step.
    Bdf2,
}

/// Solver for y = g + theta (L y + F) with L the (u, z, z_t) generator,
/// reduced to one symmetric system in z_t.
#[derive(Debug, Clone)]
pub struct Resolvent {
    theta: f64,
    solver: SpdSolver,
}

impl Resolvent {
    pub fn new(sys: &MgtSystem, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid implicit weight {theta}")));
        }
        let solver = SpdSolver::new_symmetric(&sys.resolvent_matrix(theta))?;
        Ok(Self { theta, solver })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `load` is M f / tau at the implicit time, if any.
    pub fn solve(&self, sys: &MgtSystem, g: &StateZ, load: Option<&[f64]>) -> StateZ {
        let (th, r, b) = (self.theta, sys.r, sys.b);
        let s = th / (1.0 + th * r);
        let mut rhs = spmv(&sys.ops.mass, &g.z_t);
        spmv_acc(&sys.ops.ktilde, &g.z, -th * b, &mut rhs);
        let w: Vec<f64> = g.u.iter().zip(&g.z).map(|(u, z)| r * r * u - r * z).collect();
        spmv_acc(&sys.m_gamma, &w, -s, &mut rhs);
        if let Some(l) = load {
            for (x, y) in rhs.iter_mut().zip(l) {
                *x += th * y;
            }
        }
        let v = self.solver.solve(&rhs);
        let z: Vec<f64> = g.z.iter().zip(&v).map(|(gz, vi)| gz + th * vi).collect();
        let u: Vec<f64> = g.u.iter().zip(&z).map(|(gu, zi)| (gu + th * zi) / (1.0 + th * r)).collect();
        StateZ { u, z, z_t: v }
    }
}

/// Time integrator for the (u, z, z_t) system.
pub struct Stepper<'a> {
    sys: &'a MgtSystem,
    scheme: Scheme,
    dt: f64,
    mid: Resolvent,
    bdf: Option<Resolvent>,
    prev: Option<StateZ>,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a MgtSystem, scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let mid = Resolvent::new(sys, 0.5 * dt)?;
        let bdf = match scheme {
            Scheme::Midpoint => None,
            Scheme::Bdf2 => Some(Resolvent::new(sys, 2.0 * dt / 3.0)?),
        };
        Ok(Self { sys, scheme, dt, mid, bdf, prev: None })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn load(&self, src: &dyn SourceTerm, t: f64) -> Option<Vec<f64>> {
        if src.is_zero() {
            return None;
        }
        let f = src.nodal(t, &self.sys.mesh.nodes);
        let tau = self.sys.tau();
        Some(spmv(&self.sys.ops.mass, &f).into_iter().map(|v| v / tau).collect())
    }

    /// Advance `y` from time `t` to `t + dt`.
    pub fn step(&mut self, y: &StateZ, t: f64, src: &dyn SourceTerm) -> StateZ {
        let next = match (self.scheme, &self.prev, &self.bdf) {
            (Scheme::Bdf2, Some(prev), Some(bdf)) => {
                let g = StateZ::combine(4.0 / 3.0, y, -1.0 / 3.0, prev);
                let load = self.load(src, t + self.dt);
                bdf.solve(self.sys, &g, load.as_deref())
            }
            _ => {
                let load = self.load(src, t + 0.5 * self.dt);
                let ystar = self.mid.solve(self.sys, y, load.as_deref());
                StateZ::combine(2.0, &ystar, -1.0, y)
            }
        };
        if self.scheme == Scheme::Bdf2 {
            self.prev = Some(y.clone());
        }
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{MaterialParams, Mesh};
    use crate::dynamics::source::NoSource;
    use crate::geometry::{Geometry, Tag};
    use crate::linalg::{axpby, norm};

    fn system(alpha: f64, kappa1: f64) -> MgtSystem {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let mesh = Mesh::interval(&g, 10).unwrap();
        MgtSystem::new(mesh, MaterialParams::constant(1.0, 1.0, 1.0, alpha, 1.0, kappa1)).unwrap()
    }

    fn initial(sys: &MgtSystem) -> StateZ {
        let n = sys.dim();
        let mut y = StateZ::zeros(n);
        for (i, p) in sys.mesh.nodes.iter().enumerate() {
            y.u[i] = (3.0 * p.x).sin();
            y.z[i] = p.x * (1.0 - p.x);
            y.z_t[i] = (2.0 * p.x).cos();
        }
        y
    }

    #[test]
    fn resolvent_satisfies_implicit_equation() {
        let sys = system(1.3, 0.7);
        let res = Resolvent::new(&sys, 0.05).unwrap();
        let g = initial(&sys);
        let y = res.solve(&sys, &g, None);
        let l = sys.generator_z().unwrap();
        let yv = nalgebra::DVector::from_vec(y.to_vec());
        let lhs = &yv - (&l * &yv) * 0.05;
        let err = (lhs - nalgebra::DVector::from_vec(g.to_vec())).norm();
        assert!(err < 1e-10 * yv.norm(), "{err}");
    }

    #[test]
    fn midpoint_and_bdf2_agree_to_second_order() {
        let sys = system(1.2, 0.5);
        let y0 = initial(&sys);
        let t_end = 0.5;
        let run = |scheme, n: usize| {
            let dt = t_end / n as f64;
            let mut st = Stepper::new(&sys, scheme, dt).unwrap();
            let mut y = y0.clone();
            for k in 0..n {
                y = st.step(&y, k as f64 * dt, &NoSource);
            }
            y.to_vec()
        };
        let mut prev: Option<f64> = None;
        for n in [50, 100, 200] {
            let d = norm(&axpby(1.0, &run(Scheme::Midpoint, n), -1.0, &run(Scheme::Bdf2, n)));
            if let Some(p) = prev {
                let rate: f64 = (p / d).log2();
                assert!(rate > 1.8, "rate {rate}");
            }
            prev = Some(d);
        }
    }
}
