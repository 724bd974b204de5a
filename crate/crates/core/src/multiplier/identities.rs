//! Discrete checks of the three multiplier identities on manufactured fields.
//!
//! Each identity is written as LHS = RHS with every term integrated by the
//! same composite rule, so the residual |LHS - RHS| is a pure quadrature error.

use nalgebra::Matrix2;
use serde::Serialize;

use super::manufactured::ManufacturedField;
use super::quadrature::{boundary_points, domain_points, time_points, Rule};
use crate::discretization::{Mesh, SpatialField};
use crate::error::{Error, Result};
use crate::geometry::{Point, Tag, VectorFieldH};

/// Smooth vector field used as a multiplier.
pub trait Multiplier {
    fn value(&self, x: Point) -> Point;
    /// Entries (i, j) = d h_i / d x_j.
    fn jacobian(&self, x: Point) -> Matrix2<f64>;
    fn divergence(&self, x: Point) -> f64;
    fn grad_divergence(&self, x: Point) -> Point;
}

impl Multiplier for VectorFieldH {
    fn value(&self, x: Point) -> Point {
        VectorFieldH::value(self, x)
    }
    fn jacobian(&self, x: Point) -> Matrix2<f64> {
        VectorFieldH::jacobian(self, x)
    }
    fn divergence(&self, x: Point) -> f64 {
        VectorFieldH::divergence(self, x)
    }
    fn grad_divergence(&self, x: Point) -> Point {
        VectorFieldH::grad_divergence(self, x)
    }
}

/// h + eps * (p1(x), p2(y)) with p(s) = s^2, a perturbation that breaks the
/// tangency of h on Gamma0.
pub struct Perturbed<'a, H: Multiplier> {
    pub base: &'a H,
    pub eps: f64,
    pub planar: bool,
}

impl<H: Multiplier> Multiplier for Perturbed<'_, H> {
    fn value(&self, x: Point) -> Point {
        let y = if self.planar { x.y * x.y } else { 0.0 };
        self.base.value(x) + Point::new(x.x * x.x, y) * self.eps
    }
    fn jacobian(&self, x: Point) -> Matrix2<f64> {
        let y = if self.planar { 2.0 * x.y } else { 0.0 };
        self.base.jacobian(x) + Matrix2::new(2.0 * x.x, 0.0, 0.0, y) * self.eps
    }
    fn divergence(&self, x: Point) -> f64 {
        let y = if self.planar { 2.0 * x.y } else { 0.0 };
        self.base.divergence(x) + self.eps * (2.0 * x.x + y)
    }
    fn grad_divergence(&self, x: Point) -> Point {
        let y = if self.planar { 2.0 } else { 0.0 };
        self.base.grad_divergence(x) + Point::new(2.0, y) * self.eps
    }
}

/// Time window [s, T - s] and its resolution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
    pub intervals: usize,
    pub rule: Rule,
}

impl Window {
    pub fn new(start: f64, end: f64, intervals: usize, rule: Rule) -> Result<Self> {
        if !(end > start) || intervals == 0 {
            return Err(Error::InvalidArgument(format!("empty time window [{start}, {end}]")));
        }
        Ok(Self { start, end, intervals, rule })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub identity: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// |lhs - rhs|
    pub residual: f64,
    /// Largest term magnitude, for relative comparisons.
    pub scale: f64,
    /// Named contributions to the right-hand side.
    pub terms: Vec<(String, f64)>,
}

impl IdentityReport {
    fn new(identity: &'static str, lhs: Vec<(&str, f64)>, rhs: Vec<(&str, f64)>) -> Self {
        let l: f64 = lhs.iter().map(|t| t.1).sum();
        let r: f64 = rhs.iter().map(|t| t.1).sum();
        let scale = lhs.iter().chain(rhs.iter()).map(|t| t.1.abs()).fold(0.0, f64::max);
        let terms = lhs
            .into_iter()
            .map(|(n, v)| (format!("lhs:{n}"), v))
            .chain(rhs.into_iter().map(|(n, v)| (format!("rhs:{n}"), v)))
            .collect();
        Self { identity, lhs: l, rhs: r, residual: (l - r).abs(), scale, terms }
    }

    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| n == name).map(|t| t.1)
    }
}

struct Quad {
    domain: Vec<(Point, f64)>,
    g0: Vec<(Point, Point, f64)>,
    g1: Vec<(Point, Point, f64)>,
    times: Vec<(f64, f64)>,
}

impl Quad {
    fn new(mesh: &Mesh, window: &Window, rule: Rule) -> Self {
        Self {
            domain: domain_points(mesh, rule),
            g0: boundary_points(mesh, Tag::Gamma0, rule),
            g1: boundary_points(mesh, Tag::Gamma1, rule),
            times: time_points(window.start, window.end, window.intervals, window.rule),
        }
    }

    fn space_time(&self, f: impl Fn(f64, Point) -> f64) -> f64 {
        self.times
            .iter()
            .map(|&(t, wt)| wt * self.domain.iter().map(|&(x, w)| w * f(t, x)).sum::<f64>())
            .sum()
    }

    fn boundary_time(&self, pts: &[(Point, Point, f64)], f: impl Fn(f64, Point, Point) -> f64) -> f64 {
        self.times
            .iter()
            .map(|&(t, wt)| wt * pts.iter().map(|&(x, n, w)| w * f(t, x, n)).sum::<f64>())
            .sum()
    }

    fn space(&self, f: impl Fn(Point) -> f64) -> f64 {
        self.domain.iter().map(|&(x, w)| w * f(x)).sum()
    }

    fn boundary(&self, pts: &[(Point, Point, f64)], f: impl Fn(Point) -> f64) -> f64 {
        pts.iter().map(|&(x, _, w)| w * f(x)).sum()
    }
}

fn require_certified(h: &VectorFieldH) -> Result<()> {
    if h.is_certified() {
        Ok(())
    } else {
        Err(Error::Certification(format!(
            "vector field not certified (c0 = {:.3e}, max |h.nu| on Gamma0 = {:.3e})",
            h.report.certified_c0, h.report.max_normal_trace
        )))
    }
}

/// h.grad z multiplier with a certified field.
pub fn hgradz_residual<F: ManufacturedField>(
    field: &F,
    mesh: &Mesh,
    h: &VectorFieldH,
    window: &Window,
    rule: Rule,
) -> Result<IdentityReport> {
    require_certified(h)?;
    Ok(hgradz_residual_with(field, mesh, h, window, rule))
}

/// h.grad z multiplier for any smooth h.
///
/// b int J(h)grad z.grad z + 1/2 int (z_t^2 - b|grad z|^2) div h
///   = int F h.grad z - [int z_t h.grad z] + 1/2 int_G (z_t^2 - b|grad z|^2) h.nu
///     + b int_G d_nu z h.grad z
pub fn hgradz_residual_with<F: ManufacturedField, H: Multiplier>(
    field: &F,
    mesh: &Mesh,
    h: &H,
    window: &Window,
    rule: Rule,
) -> IdentityReport {
    let q = Quad::new(mesh, window, rule);
    let b = field.b();
    let lag = |t, x| field.z_t(t, x).powi(2) - b * field.grad_z(t, x).norm_squared();
    let j = q.space_time(|t, x| {
        let g = field.grad_z(t, x);
        b * g.dot(&(h.jacobian(x) * g))
    });
    let d = q.space_time(|t, x| 0.5 * lag(t, x) * h.divergence(x));
    let f = q.space_time(|t, x| field.f(t, x) * h.value(x).dot(&field.grad_z(t, x)));
    let g = q.space_time(|t, x| -field.gamma(x) * field.u_tt(t, x) * h.value(x).dot(&field.grad_z(t, x)));
    let at = |t| q.space(|x| field.z_t(t, x) * h.value(x).dot(&field.grad_z(t, x)));
    let ends = -(at(window.end) - at(window.start));
    let bnd = |pts| {
        q.boundary_time(pts, |t, x, n| {
            let gz = field.grad_z(t, x);
            0.5 * lag(t, x) * h.value(x).dot(&n) + b * gz.dot(&n) * h.value(x).dot(&gz)
        })
    };
    // the Gamma0 trace term is reported on its own: it vanishes when h.nu = 0 there
    let g0_trace = q.boundary_time(&q.g0, |t, x, n| 0.5 * lag(t, x) * h.value(x).dot(&n));
    let g0_flux = q.boundary_time(&q.g0, |t, x, n| {
        let gz = field.grad_z(t, x);
        b * gz.dot(&n) * h.value(x).dot(&gz)
    });
    IdentityReport::new(
        "hgradz",
        vec![("jacobian", j), ("divergence", d)],
        vec![
            ("source", f),
            ("gamma", g),
            ("endpoints", ends),
            ("gamma1_boundary", bnd(&q.g1)),
            ("gamma0_trace", g0_trace),
            ("gamma0_flux", g0_flux),
        ],
    )
}

/// z (div h) multiplier with weight g = div h, halved:
///
/// 1/2 int (b|grad z|^2 - z_t^2) g = b/2 int_G d_nu z z g - 1/2 [int z_t z g]
///   - b/2 int z grad z.grad g + 1/2 int F z g
pub fn zdivh_residual<F: ManufacturedField, H: Multiplier>(
    field: &F,
    mesh: &Mesh,
    h: &H,
    window: &Window,
    rule: Rule,
) -> IdentityReport {
    let q = Quad::new(mesh, window, rule);
    let b = field.b();
    let lhs = q.space_time(|t, x| {
        0.5 * (b * field.grad_z(t, x).norm_squared() - field.z_t(t, x).powi(2)) * h.divergence(x)
    });
    let bnd = |pts: &[(Point, Point, f64)]| {
        q.boundary_time(pts, |t, x, n| 0.5 * b * field.grad_z(t, x).dot(&n) * field.z(t, x) * h.divergence(x))
    };
    let at = |t| q.space(|x| field.z_t(t, x) * field.z(t, x) * h.divergence(x));
    let ends = -0.5 * (at(window.end) - at(window.start));
    let cross = q.space_time(|t, x| -0.5 * b * field.z(t, x) * field.grad_z(t, x).dot(&h.grad_divergence(x)));
    let f = q.space_time(|t, x| 0.5 * field.f(t, x) * field.z(t, x) * h.divergence(x));
    let g = q.space_time(|t, x| -0.5 * field.gamma(x) * field.u_tt(t, x) * field.z(t, x) * h.divergence(x));
    IdentityReport::new(
        "zdivh",
        vec![("energy", lhs)],
        vec![
            ("gamma0_boundary", bnd(&q.g0)),
            ("gamma1_boundary", bnd(&q.g1)),
            ("endpoints", ends),
            ("cross", cross),
            ("source", f),
            ("gamma", g),
        ],
    )
}

/// Plain z multiplier with the Robin data folded in:
///
/// int (b|grad z|^2 - z_t^2) + b int_G0 kappa0 z^2
///   = int F z - [int z_t z] - b/2 [int_G1 kappa1 z^2] + defect
///
/// with defect = b int_G0 (d_nu z + kappa0 z) z + b int_G1 (d_nu z + kappa1 z_t) z,
/// which is zero when z satisfies the boundary conditions.
pub fn zmul_residual<F: ManufacturedField>(
    field: &F,
    mesh: &Mesh,
    kappa0: &SpatialField,
    kappa1: &SpatialField,
    window: &Window,
    rule: Rule,
) -> IdentityReport {
    let q = Quad::new(mesh, window, rule);
    let b = field.b();
    let bulk = q.space_time(|t, x| b * field.grad_z(t, x).norm_squared() - field.z_t(t, x).powi(2));
    let robin0 = q.boundary_time(&q.g0, |t, x, _| b * kappa0.eval(x) * field.z(t, x).powi(2));
    let f = q.space_time(|t, x| field.f(t, x) * field.z(t, x));
    let g = q.space_time(|t, x| -field.gamma(x) * field.u_tt(t, x) * field.z(t, x));
    let at = |t| q.space(|x| field.z_t(t, x) * field.z(t, x));
    let ends = -(at(window.end) - at(window.start));
    let g1 = |t| q.boundary(&q.g1, |x| kappa1.eval(x) * field.z(t, x).powi(2));
    let robin1 = -0.5 * b * (g1(window.end) - g1(window.start));
    let d0 = q.boundary_time(&q.g0, |t, x, n| {
        b * (field.grad_z(t, x).dot(&n) + kappa0.eval(x) * field.z(t, x)) * field.z(t, x)
    });
    let d1 = q.boundary_time(&q.g1, |t, x, n| {
        b * (field.grad_z(t, x).dot(&n) + kappa1.eval(x) * field.z_t(t, x)) * field.z(t, x)
    });
    IdentityReport::new(
        "zmul",
        vec![("bulk", bulk), ("gamma0_robin", robin0)],
        vec![
            ("source", f),
            ("gamma", g),
            ("endpoints", ends),
            ("gamma1_robin", robin1),
            ("defect_gamma0", d0),
            ("defect_gamma1", d1),
        ],
    )
}

/// Residuals on a sequence of meshes (time intervals should scale with 1/h)
/// and the least-squares slope of log residual against log mesh size.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceStudy {
    pub mesh_sizes: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
}

impl ConvergenceStudy {
    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.len() < 2 || pairs.iter().any(|&(h, r)| !(h > 0.0 && r > 0.0)) {
            return Err(Error::Fit("convergence study needs two or more positive residuals".into()));
        }
        let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        Ok(Self {
            mesh_sizes: pairs.iter().map(|p| p.0).collect(),
            residuals: pairs.iter().map(|p| p.1).collect(),
            slope: sxy / sxx,
        })
    }
}
