//! The bent radial multiplier field h: equal to x - x0 away from Gamma0 and
//! tangential on Gamma0, with a symmetric Jacobian bounded below.

use nalgebra::{Matrix2, SymmetricEigen};
use serde::Serialize;

use super::{convexity_check, star_shaped_check, Dim, Geometry, Point, Tag};
use crate::discretization::Mesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FieldOptions {
    /// Width of the bending collar along Gamma0; a default is derived from
    /// the geometry when absent.
    pub collar_width: Option<f64>,
    /// Tolerance on |h . nu| at the Gamma0 quadrature points.
    pub trace_tol: f64,
    /// Tolerance of the star-shapedness and convexity tests.
    pub geometry_tol: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { collar_width: None, trace_tol: 1e-10, geometry_tol: 1e-12 }
    }
}

/// Shape of Gamma0 supported by the construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma0Shape {
    Empty,
    /// Straight Gamma0 with outward normal `normal` through `anchor`.
    Flat { normal: Point, anchor: Point },
    /// Gamma0 is a polyline inscribed in a circle with equal chords; `radius`
    /// is the common chord-midpoint distance from `center`.
    Arc { center: Point, radius: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldReport {
    pub star_shaped: bool,
    /// max over Gamma0 of (x - x0) . nu (null when Gamma0 is empty)
    pub star_max: f64,
    pub convex: bool,
    pub convex_min_turn: f64,
    pub gamma0_shape: String,
    pub collar_width: f64,
    pub mesh_size: f64,
    pub certified_c0: f64,
    pub max_normal_trace: f64,
    pub certified: bool,
}

#[derive(Debug, Clone)]
pub struct VectorFieldH {
    pub dim: Dim,
    pub x0: Point,
    pub shape: Gamma0Shape,
    pub collar_width: f64,
    pub report: FieldReport,
}

fn chi(s: f64) -> (f64, f64, f64) {
    // (1 - s)^3 on s < 1 and its first two s-derivatives
    if s >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let q = 1.0 - s;
        (q * q * q, -3.0 * q * q, 6.0 * q)
    }
}

impl VectorFieldH {
    fn space_dim(&self) -> f64 {
        match self.dim {
            Dim::One => 1.0,
            Dim::Two => 2.0,
        }
    }

    /// Cutoff and its derivatives with respect to the distance d.
    fn cutoff(&self, d: f64) -> (f64, f64, f64) {
        let w = self.collar_width;
        let (c, c1, c2) = chi(d / w);
        (c, c1 / w, c2 / (w * w))
    }

    pub fn value(&self, x: Point) -> Point {
        let r = x - self.x0;
        match self.shape {
            Gamma0Shape::Empty => r,
            Gamma0Shape::Flat { normal, anchor } => {
                let d = -(x - anchor).dot(&normal);
                let a = -(anchor - self.x0).dot(&normal);
                r + normal * (self.cutoff(d).0 * a)
            }
            Gamma0Shape::Arc { center, radius } => {
                let rho = (x - center).norm();
                let n = (x - center) / rho;
                let a = -(center - self.x0).dot(&n) - radius;
                r + n * (self.cutoff(radius - rho).0 * a)
            }
        }
    }

    /// Dh with entries (i, j) = d h_i / d x_j.
    pub fn jacobian(&self, x: Point) -> Matrix2<f64> {
        let id = match self.dim {
            Dim::One => Matrix2::new(1.0, 0.0, 0.0, 0.0),
            Dim::Two => Matrix2::identity(),
        };
        match self.shape {
            Gamma0Shape::Empty => id,
            Gamma0Shape::Flat { normal, anchor } => {
                let d = -(x - anchor).dot(&normal);
                let a = -(anchor - self.x0).dot(&normal);
                let (_, c1, _) = self.cutoff(d);
                id + normal * normal.transpose() * (-a * c1)
            }
            Gamma0Shape::Arc { center, radius } => {
                let rho = (x - center).norm();
                let n = (x - center) / rho;
                let p = Matrix2::identity() - n * n.transpose();
                let a = -(center - self.x0).dot(&n) - radius;
                let (c, c1, _) = self.cutoff(radius - rho);
                let grad_a = -(p * (center - self.x0)) / rho;
                id + n * n.transpose() * (-a * c1) + n * grad_a.transpose() * c + p * (c * a / rho)
            }
        }
    }

    pub fn divergence(&self, x: Point) -> f64 {
        match self.shape {
            Gamma0Shape::Empty => self.space_dim(),
            Gamma0Shape::Flat { normal, anchor } => {
                let d = -(x - anchor).dot(&normal);
                let a = -(anchor - self.x0).dot(&normal);
                self.space_dim() - a * self.cutoff(d).1
            }
            Gamma0Shape::Arc { center, radius } => {
                let rho = (x - center).norm();
                let n = (x - center) / rho;
                let a = -(center - self.x0).dot(&n) - radius;
                let (c, c1, _) = self.cutoff(radius - rho);
                2.0 - a * c1 + c * a / rho
            }
        }
    }

    pub fn grad_divergence(&self, x: Point) -> Point {
        match self.shape {
            Gamma0Shape::Empty => Point::zeros(),
            Gamma0Shape::Flat { normal, anchor } => {
                let d = -(x - anchor).dot(&normal);
                let a = -(anchor - self.x0).dot(&normal);
                normal * (a * self.cutoff(d).2)
            }
            Gamma0Shape::Arc { center, radius } => {
                let rho = (x - center).norm();
                let n = (x - center) / rho;
                let p = Matrix2::identity() - n * n.transpose();
                let a = -(center - self.x0).dot(&n) - radius;
                let grad_a = -(p * (center - self.x0)) / rho;
                let (c, c1, c2) = self.cutoff(radius - rho);
                -grad_a * c1 + n * (a * c2) - n * (c1 * a / rho) + grad_a * (c / rho)
                    - n * (c * a / (rho * rho))
            }
        }
    }

    pub fn is_certified(&self) -> bool {
        self.report.certified
    }
}

struct Chord {
    a: Point,
    b: Point,
    normal: Point,
}

impl Chord {
    fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
    fn midpoint(&self) -> Point {
        0.5 * (self.a + self.b)
    }
}

/// Classify Gamma0 from the mesh facets, which carry the quadrature points.
fn detect_shape(geom: &Geometry, mesh: &Mesh, tol: f64) -> Result<Gamma0Shape> {
    let segs: Vec<Chord> = mesh
        .facets_with(Tag::Gamma0)
        .map(|f| Chord { a: mesh.nodes[f.nodes[0]], b: mesh.nodes[f.nodes[1]], normal: f.normal })
        .collect();
    if segs.is_empty() {
        return Ok(Gamma0Shape::Empty);
    }
    let n0 = segs[0].normal;
    if segs.iter().all(|s| (s.normal - n0).norm() <= 1e-12) {
        return Ok(Gamma0Shape::Flat { normal: n0, anchor: segs[0].a });
    }
    if geom.dim == Dim::One {
        return Err(Error::UnsupportedGeometry("both interval endpoints on Gamma0".into()));
    }
    // least-squares circle centre from perpendicular bisectors
    let mut ata = Matrix2::zeros();
    let mut atb = Point::zeros();
    for s in &segs {
        let d = s.b - s.a;
        let rhs = 0.5 * (s.b.norm_squared() - s.a.norm_squared());
        ata += d * d.transpose();
        atb += d * rhs;
    }
    let center = ata
        .try_inverse()
        .map(|inv| inv * atb)
        .ok_or_else(|| Error::UnsupportedGeometry("Gamma0 chord bisectors do not meet".into()))?;
    let scale = geom.diameter();
    let r0 = (segs[0].a - center).norm();
    let l0 = segs[0].length();
    let rm = (segs[0].midpoint() - center).norm();
    for s in &segs {
        let ok = ((s.a - center).norm() - r0).abs() <= tol.max(1e-9) * scale
            && ((s.b - center).norm() - r0).abs() <= tol.max(1e-9) * scale
            && (s.length() - l0).abs() <= 1e-9 * scale
            && s.normal.dot(&(s.midpoint() - center)) > 0.0;
        if !ok {
            return Err(Error::UnsupportedGeometry(
                "curved Gamma0 facets must be equal chords inscribed in a circle"
                    .into(),
            ));
        }
    }
    Ok(Gamma0Shape::Arc { center, radius: rm })
}

/// Build the multiplier field for `geom` and certify it on `mesh`.
///
/// Fails with a precondition error when Gamma0 violates the star-shaped or
/// convexity hypotheses. A field that is built but misses the certificate
/// (c0 <= 0 or h . nu not small on Gamma0) is returned with `certified = false`.
pub fn build_vector_field_h(geom: &Geometry, mesh: &Mesh, opts: &FieldOptions) -> Result<VectorFieldH> {
    let star = star_shaped_check(geom, opts.geometry_tol);
    if !star.holds {
        return Err(Error::Precondition(format!(
            "Gamma0 is not star-shaped with respect to x0: max (x - x0).nu = {:e}",
            star.max_value
        )));
    }
    let convex = convexity_check(geom, opts.geometry_tol)?;
    if !convex.convex {
        return Err(Error::Precondition(format!(
            "Gamma0 is not convex: min turn {:e}",
            convex.min_turn
        )));
    }
    let shape = detect_shape(geom, mesh, opts.geometry_tol)?;
    let default_width = match shape {
        Gamma0Shape::Arc { radius, .. } => 0.5 * radius.min(geom.diameter()),
        _ => 0.5 * geom.diameter(),
    };
    let w = opts.collar_width.unwrap_or(default_width);
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidArgument(format!("collar width must be positive, got {w}")));
    }
    if let Gamma0Shape::Arc { radius, .. } = shape {
        if w >= radius {
            return Err(Error::InvalidArgument(format!(
                "collar width {w} must be below the Gamma0 radius {radius}"
            )));
        }
    }
    let shape_name = match shape {
        Gamma0Shape::Empty => "empty",
        Gamma0Shape::Flat { .. } => "flat",
        Gamma0Shape::Arc { .. } => "arc",
    };
    let mut field = VectorFieldH {
        dim: geom.dim,
        x0: geom.x0,
        shape,
        collar_width: w,
        report: FieldReport {
            star_shaped: star.holds,
            star_max: star.max_value,
            convex: convex.convex,
            convex_min_turn: convex.min_turn,
            gamma0_shape: shape_name.into(),
            collar_width: w,
            mesh_size: mesh.mesh_size(),
            certified_c0: f64::NAN,
            max_normal_trace: f64::NAN,
            certified: false,
        },
    };
    let (c0, trace) = verify_field_properties(&field, mesh);
    field.report.certified_c0 = c0;
    field.report.max_normal_trace = trace;
    field.report.certified = c0 > 0.0 && trace <= opts.trace_tol;
    Ok(field)
}

/// (c0, max |h . nu|): the smallest eigenvalue of sym(Dh) over element
/// quadrature points and the largest normal trace at Gamma0 quadrature points.
pub fn verify_field_properties(h: &VectorFieldH, mesh: &Mesh) -> (f64, f64) {
    let mut c0 = f64::INFINITY;
    for e in 0..mesh.element_count() {
        let x = mesh.element_centroid(e);
        let j = h.jacobian(x);
        let lam = match h.dim {
            Dim::One => j[(0, 0)],
            Dim::Two => {
                let s = (j + j.transpose()) * 0.5;
                SymmetricEigen::new(s).eigenvalues.min()
            }
        };
        c0 = c0.min(lam);
    }
    let mut trace: f64 = 0.0;
    for f in mesh.facets_with(Tag::Gamma0) {
        let x = mesh.facet_midpoint(f);
        trace = trace.max(h.value(x).dot(&f.normal).abs());
    }
    (c0, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sector(x0: Point) -> Geometry {
        Geometry::annular_sector(1.0, 0.3, 30f64.to_radians(), 16, 8, x0).unwrap()
    }

    fn fd_jacobian(h: &VectorFieldH, x: Point) -> Matrix2<f64> {
        let e = 1e-6;
        let mut j = Matrix2::zeros();
        for k in 0..2 {
            let mut dx = Point::zeros();
            dx[k] = e;
            let col = (h.value(x + dx) - h.value(x - dx)) / (2.0 * e);
            j[(0, k)] = col.x;
            j[(1, k)] = col.y;
        }
        j
    }

    #[test]
    fn interval_field_is_radial() {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let mesh = Mesh::interval(&g, 16).unwrap();
        let h = build_vector_field_h(&g, &mesh, &FieldOptions::default()).unwrap();
        for k in 0..=10 {
            let x = Point::new(k as f64 / 10.0, 0.0);
            assert!((h.value(x).x - x.x).abs() < 1e-15);
            assert_eq!(h.divergence(x), 1.0);
        }
        assert!(h.is_certified());
        assert_eq!(h.report.certified_c0, 1.0);
        assert_eq!(h.report.max_normal_trace, 0.0);
    }

    #[test]
    fn sector_field_certified_and_tangential() {
        let g = sector(Point::new(2.0, 0.0));
        let mesh = Mesh::generate(&g, 1).unwrap();
        let h = build_vector_field_h(&g, &mesh, &FieldOptions::default()).unwrap();
        assert!(h.is_certified(), "{:?}", h.report);
        assert!(h.report.certified_c0 > 0.0);
        assert!(h.report.max_normal_trace <= 1e-12);
        assert!(matches!(h.shape, Gamma0Shape::Arc { .. }));
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let g = sector(Point::new(2.0, 0.3));
        let mesh = Mesh::generate(&g, 1).unwrap();
        let h = build_vector_field_h(&g, &mesh, &FieldOptions::default()).unwrap();
        for x in [Point::new(0.9, 0.1), Point::new(0.7, -0.2), Point::new(0.99, 0.0), Point::new(0.4, 0.05)] {
            let j = h.jacobian(x);
            assert!((j - fd_jacobian(&h, x)).norm() < 1e-7, "{x:?}");
            assert!((j.trace() - h.divergence(x)).abs() < 1e-12);
            let e = 1e-6;
            let gd = Point::new(
                (h.divergence(x + Point::new(e, 0.0)) - h.divergence(x - Point::new(e, 0.0))) / (2.0 * e),
                (h.divergence(x + Point::new(0.0, e)) - h.divergence(x - Point::new(0.0, e))) / (2.0 * e),
            );
            assert!((gd - h.grad_divergence(x)).norm() < 1e-6);
        }
    }

    #[test]
    fn flat_gamma0_field() {
        let g = Geometry::half_disk(1.0, 13, 4, Tag::Gamma0, Point::new(0.0, -1.0)).unwrap();
        let mesh = Mesh::with_max_size(&g, 1.0 / 64.0).unwrap();
        let h = build_vector_field_h(&g, &mesh, &FieldOptions::default()).unwrap();
        assert!(h.report.certified_c0 > 0.0 && h.report.certified_c0 <= 1.0);
        assert!(h.report.max_normal_trace <= 1e-10);
        for x in [Point::new(0.1, 0.2), Point::new(-0.5, 0.6)] {
            assert!((h.jacobian(x) - fd_jacobian(&h, x)).norm() < 1e-7);
        }
    }

    #[test]
    fn c0_stable_under_refinement() {
        let x0 = Point::new(2.0, 0.0);
        let ga = Geometry::annular_sector(1.0, 0.3, 30f64.to_radians(), 16, 8, x0).unwrap();
        let gb = Geometry::annular_sector(1.0, 0.3, 30f64.to_radians(), 32, 16, x0).unwrap();
        let a = Mesh::generate(&ga, 1).unwrap();
        let b = Mesh::generate(&gb, 1).unwrap();
        let ha = build_vector_field_h(&ga, &a, &FieldOptions::default()).unwrap();
        let hb = build_vector_field_h(&gb, &b, &FieldOptions::default()).unwrap();
        assert!((ha.report.certified_c0 - hb.report.certified_c0).abs() <= 2.0 * a.mesh_size());
    }

    #[test]
    fn star_violation_is_precondition_error() {
        let g = sector(Point::new(0.5, 0.0));
        let mesh = Mesh::generate(&g, 1).unwrap();
        let r = build_vector_field_h(&g, &mesh, &FieldOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn unequal_curved_gamma0_unsupported() {
        let g = Geometry::rectangle(
            (0.0, 2.0),
            (0.0, 1.0),
            [Tag::Gamma0, Tag::Gamma0, Tag::Gamma1, Tag::Gamma1],
            Point::new(3.0, -1.0),
        )
        .unwrap();
        let mesh = Mesh::generate(&g, 2).unwrap();
        let r = build_vector_field_h(&g, &mesh, &FieldOptions::default());
        assert!(matches!(r, Err(Error::UnsupportedGeometry(_))), "{r:?}");
    }
}
