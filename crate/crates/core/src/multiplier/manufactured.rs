//! Closed-form space-time fields for checking the multiplier identities.

use crate::discretization::SpatialField;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// z with its derivatives, together with gamma and u_tt. The source f is
/// chosen so that z_tt - b Lap z = -gamma u_tt + f holds exactly.
pub trait ManufacturedField {
    fn b(&self) -> f64;
    fn z(&self, t: f64, x: Point) -> f64;
    fn z_t(&self, t: f64, x: Point) -> f64;
    fn z_tt(&self, t: f64, x: Point) -> f64;
    fn grad_z(&self, t: f64, x: Point) -> Point;
    fn laplacian_z(&self, t: f64, x: Point) -> f64;
    fn gamma(&self, x: Point) -> f64;
    fn u_tt(&self, t: f64, x: Point) -> f64;

    fn f(&self, t: f64, x: Point) -> f64 {
        self.z_tt(t, x) - self.b() * self.laplacian_z(t, x) + self.gamma(x) * self.u_tt(t, x)
    }
}

/// z = A cos(k1 x + p1) cos(k2 y + p2) sin(omega t + phase), u_tt = z_t.
#[derive(Debug, Clone)]
pub struct TrigField {
    pub b: f64,
    pub amplitude: f64,
    pub k: [f64; 2],
    pub p: [f64; 2],
    pub omega: f64,
    pub phase: f64,
    pub gamma: SpatialField,
}

impl TrigField {
    fn space(&self, x: Point) -> (f64, Point, f64) {
        let (cx, sx) = ((self.k[0] * x.x + self.p[0]).cos(), (self.k[0] * x.x + self.p[0]).sin());
        let (cy, sy) = ((self.k[1] * x.y + self.p[1]).cos(), (self.k[1] * x.y + self.p[1]).sin());
        let v = cx * cy;
        let g = Point::new(-self.k[0] * sx * cy, -self.k[1] * cx * sy);
        let lap = -(self.k[0].powi(2) + self.k[1].powi(2)) * v;
        (v, g, lap)
    }
    fn time(&self, t: f64) -> (f64, f64, f64) {
        let a = self.omega * t + self.phase;
        (a.sin(), self.omega * a.cos(), -self.omega * self.omega * a.sin())
    }
}

impl ManufacturedField for TrigField {
    fn b(&self) -> f64 {
        self.b
    }
    fn z(&self, t: f64, x: Point) -> f64 {
        self.amplitude * self.space(x).0 * self.time(t).0
    }
    fn z_t(&self, t: f64, x: Point) -> f64 {
        self.amplitude * self.space(x).0 * self.time(t).1
    }
    fn z_tt(&self, t: f64, x: Point) -> f64 {
        self.amplitude * self.space(x).0 * self.time(t).2
    }
    fn grad_z(&self, t: f64, x: Point) -> Point {
        self.space(x).1 * (self.amplitude * self.time(t).0)
    }
    fn laplacian_z(&self, t: f64, x: Point) -> f64 {
        self.amplitude * self.space(x).2 * self.time(t).0
    }
    fn gamma(&self, x: Point) -> f64 {
        self.gamma.eval(x)
    }
    fn u_tt(&self, t: f64, x: Point) -> f64 {
        self.z_t(t, x)
    }
}

/// z = A cos(k x + phi) exp(lambda t) on (0, 1), satisfying
/// -z_x + kappa0 z = 0 at x = 0 and z_x + kappa1 z_t = 0 at x = 1.
#[derive(Debug, Clone)]
pub struct RobinField1d {
    pub b: f64,
    pub amplitude: f64,
    pub k: f64,
    pub phi: f64,
    pub lambda: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub gamma: SpatialField,
}

impl RobinField1d {
    /// Fix k, kappa0 and lambda; the phase and kappa1 follow.
    pub fn new(b: f64, k: f64, kappa0: f64, lambda: f64, gamma: SpatialField) -> Result<Self> {
        if !(k > 0.0 && lambda != 0.0 && kappa0 >= 0.0) {
            return Err(Error::InvalidArgument("need k > 0, lambda != 0, kappa0 >= 0".into()));
        }
        let phi = (-kappa0 / k).atan();
        let kappa1 = k * (k + phi).tan() / lambda;
        if !(kappa1 >= 0.0 && kappa1.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "parameters give kappa1 = {kappa1}; choose k so that it is nonnegative"
            )));
        }
        Ok(Self { b, amplitude: 1.0, k, phi, lambda, kappa0, kappa1, gamma })
    }
}

impl ManufacturedField for RobinField1d {
    fn b(&self) -> f64 {
        self.b
    }
    fn z(&self, t: f64, x: Point) -> f64 {
        self.amplitude * (self.k * x.x + self.phi).cos() * (self.lambda * t).exp()
    }
    fn z_t(&self, t: f64, x: Point) -> f64 {
        self.lambda * self.z(t, x)
    }
    fn z_tt(&self, t: f64, x: Point) -> f64 {
        self.lambda * self.lambda * self.z(t, x)
    }
    fn grad_z(&self, t: f64, x: Point) -> Point {
        Point::new(
            -self.amplitude * self.k * (self.k * x.x + self.phi).sin() * (self.lambda * t).exp(),
            0.0,
        )
    }
    fn laplacian_z(&self, t: f64, x: Point) -> f64 {
        -self.k * self.k * self.z(t, x)
    }
    fn gamma(&self, x: Point) -> f64 {
        self.gamma.eval(x)
    }
    fn u_tt(&self, t: f64, x: Point) -> f64 {
        self.z_t(t, x)
    }
}

/// Multiplies another field by a constant (for homogeneity checks).
pub struct Scaled<'a, F: ManufacturedField>(pub &'a F, pub f64);

impl<F: ManufacturedField> ManufacturedField for Scaled<'_, F> {
    fn b(&self) -> f64 {
        self.0.b()
    }
    fn z(&self, t: f64, x: Point) -> f64 {
        self.1 * self.0.z(t, x)
    }
    fn z_t(&self, t: f64, x: Point) -> f64 {
        self.1 * self.0.z_t(t, x)
    }
    fn z_tt(&self, t: f64, x: Point) -> f64 {
        self.1 * self.0.z_tt(t, x)
    }
    fn grad_z(&self, t: f64, x: Point) -> Point {
        self.0.grad_z(t, x) * self.1
    }
    fn laplacian_z(&self, t: f64, x: Point) -> f64 {
        self.1 * self.0.laplacian_z(t, x)
    }
    fn gamma(&self, x: Point) -> f64 {
        self.0.gamma(x)
    }
    fn u_tt(&self, t: f64, x: Point) -> f64 {
        self.1 * self.0.u_tt(t, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn robin_field_satisfies_boundary_conditions() {
        let f = RobinField1d::new(1.0, 2.5, 1.0, -0.5, SpatialField::Constant(0.2)).unwrap();
        for t in [0.0, 0.3, 1.7] {
            let x0 = Point::new(0.0, 0.0);
            let x1 = Point::new(1.0, 0.0);
            assert!((-f.grad_z(t, x0).x + f.kappa0 * f.z(t, x0)).abs() < 1e-13);
            assert!((f.grad_z(t, x1).x + f.kappa1 * f.z_t(t, x1)).abs() < 1e-13);
        }
        assert!(f.kappa1 > 0.0);
    }

    #[test]
    fn trig_derivatives_consistent() {
        let f = TrigField {
            b: 1.3,
            amplitude: 0.7,
            k: [2.0, 1.1],
            p: [0.3, -0.2],
            omega: 1.7,
            phase: 0.4,
            gamma: SpatialField::Constant(0.0),
        };
        let (t, x) = (0.45, Point::new(0.3, 0.6));
        let e = 1e-5;
        let fd_t = (f.z(t + e, x) - f.z(t - e, x)) / (2.0 * e);
        assert!((fd_t - f.z_t(t, x)).abs() < 1e-9);
        let fd_x = (f.z(t, x + Point::new(e, 0.0)) - f.z(t, x - Point::new(e, 0.0))) / (2.0 * e);
        assert!((fd_x - f.grad_z(t, x).x).abs() < 1e-9);
        let lap = (f.z(t, x + Point::new(e, 0.0)) + f.z(t, x - Point::new(e, 0.0))
            + f.z(t, x + Point::new(0.0, e)) + f.z(t, x - Point::new(0.0, e))
            - 4.0 * f.z(t, x))
            / (e * e);
        assert!((lap - f.laplacian_z(t, x)).abs() < 1e-4);
    }
}
