//! Domain description, boundary tagging and the geometric hypotheses used by
//! the multiplier analysis.

mod field;

pub use field::{
    build_vector_field_h, verify_field_properties, FieldOptions, FieldReport, Gamma0Shape,
    VectorFieldH,
};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Boundary part label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    /// Robin part with coefficient kappa0 (reflecting).
    Gamma0,
    /// Dissipative part with coefficient kappa1.
    Gamma1,
}

impl Tag {
    pub fn index(self) -> u8 {
        match self {
            Tag::Gamma0 => 0,
            Tag::Gamma1 => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    One,
    Two,
}

/// A straight boundary piece with its outward unit normal.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySegment {
    pub a: Point,
    pub b: Point,
    pub normal: Point,
    pub tag: Tag,
}

impl BoundarySegment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
    pub fn midpoint(&self) -> Point {
        0.5 * (self.a + self.b)
    }
}

/// Interval or simple polygon with tagged boundary and a reference point x0.
///
/// Polygons are stored counter-clockwise; `tags[i]` labels the edge from
/// vertex `i` to vertex `i + 1`. Intervals store the two endpoints and one
/// tag per endpoint.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub dim: Dim,
    pub vertices: Vec<Point>,
    pub tags: Vec<Tag>,
    pub x0: Point,
    /// Structured polar grid whose boundary nodes are the polygon vertices.
    pub grid: Option<PolarGrid>,
}

/// Polar grid of an annular sector centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid {
    pub inner_radius: f64,
    pub radius: f64,
    pub half_angle: f64,
    pub n_phi: usize,
    pub n_r: usize,
}

impl PolarGrid {
    /// Node on ring `i` (0 = inner) and ray `j` (0 = lower side).
    pub fn node(&self, i: usize, j: usize) -> Point {
        let rho = self.inner_radius + (self.radius - self.inner_radius) * i as f64 / self.n_r as f64;
        let phi = -self.half_angle + 2.0 * self.half_angle * j as f64 / self.n_phi as f64;
        Point::new(rho * phi.cos(), rho * phi.sin())
    }
}

impl Geometry {
    pub fn interval(left: f64, right: f64, left_tag: Tag, right_tag: Tag, x0: f64) -> Result<Self> {
        if !(left.is_finite() && right.is_finite() && right > left) {
            return Err(Error::Geometry(format!("empty interval ({left}, {right})")));
        }
        let g = Self {
            dim: Dim::One,
            vertices: vec![Point::new(left, 0.0), Point::new(right, 0.0)],
            tags: vec![left_tag, right_tag],
            x0: Point::new(x0, 0.0),
            grid: None,
        };
        g.validate_tags()?;
        Ok(g)
    }

    /// Simple polygon; clockwise input is reoriented.
    pub fn polygon(vertices: Vec<Point>, tags: Vec<Tag>, x0: Point) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Geometry("polygon needs at least three vertices".into()));
        }
        if tags.len() != vertices.len() {
            return Err(Error::Geometry(format!(
                "{} edge tags for {} polygon edges",
                tags.len(),
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) || !x0.iter().all(|c| c.is_finite()) {
            return Err(Error::Geometry("non-finite coordinate".into()));
        }
        let (mut vertices, mut tags) = (vertices, tags);
        let area = signed_area(&vertices);
        if area.abs() < 1e-14 {
            return Err(Error::Geometry("degenerate polygon (zero area)".into()));
        }
        if area < 0.0 {
            // reversing vertex order maps edge i -> i+1 onto edge n-2-i
            vertices.reverse();
            let n = tags.len();
            let old = tags.clone();
            for i in 0..n {
                tags[i] = old[(2 * n - 2 - i) % n];
            }
        }
        let g = Self { dim: Dim::Two, vertices, tags, x0, grid: None };
        g.check_simple()?;
        g.validate_tags()?;
        Ok(g)
    }

    /// Axis-aligned rectangle; tags in order bottom, right, top, left.
    pub fn rectangle(x: (f64, f64), y: (f64, f64), tags: [Tag; 4], x0: Point) -> Result<Self> {
        let v = vec![
            Point::new(x.0, y.0),
            Point::new(x.1, y.0),
            Point::new(x.1, y.1),
            Point::new(x.0, y.1),
        ];
        Self::polygon(v, tags.to_vec(), x0)
    }

    /// Upper half disk of the given radius centred at the origin. The
    /// diameter carries `diameter_tag`, the arc carries the other tag.
    pub fn half_disk(
        radius: f64,
        arc_segments: usize,
        diameter_segments: usize,
        diameter_tag: Tag,
        x0: Point,
    ) -> Result<Self> {
        if arc_segments < 2 || diameter_segments < 1 || !(radius > 0.0) {
            return Err(Error::Geometry("half disk needs radius > 0, >= 2 arc segments".into()));
        }
        let arc_tag = match diameter_tag {
            Tag::Gamma0 => Tag::Gamma1,
            Tag::Gamma1 => Tag::Gamma0,
        };
        let mut v = Vec::new();
        let mut tags = Vec::new();
        for k in 0..diameter_segments {
            let s = k as f64 / diameter_segments as f64;
            v.push(Point::new(-radius + 2.0 * radius * s, 0.0));
            tags.push(diameter_tag);
        }
        for k in 0..arc_segments {
            let th = std::f64::consts::PI * k as f64 / arc_segments as f64;
            v.push(Point::new(radius * th.cos(), radius * th.sin()));
            tags.push(arc_tag);
        }
        Self::polygon(v, tags, x0)
    }

    /// Annular sector centred at the origin and opening along +x, with its
    /// boundary sampled exactly as the polar grid that meshes it. The outer
    /// arc (radius `radius`, half opening `half_angle`, `arc_segments` equal
    /// chords) is Gamma0; the radial sides and the inner arc are Gamma1.
    pub fn annular_sector(
        radius: f64,
        inner_radius: f64,
        half_angle: f64,
        arc_segments: usize,
        radial_segments: usize,
        x0: Point,
    ) -> Result<Self> {
        if !(radius > inner_radius && inner_radius > 0.0)
            || !(half_angle > 0.0 && half_angle < std::f64::consts::FRAC_PI_2)
            || arc_segments < 2
            || radial_segments < 1
        {
            return Err(Error::Geometry("invalid annular sector parameters".into()));
        }
        let grid = PolarGrid { inner_radius, radius, half_angle, n_phi: arc_segments, n_r: radial_segments };
        let mut v = Vec::new();
        let mut tags = Vec::new();
        for i in 0..radial_segments {
            v.push(grid.node(i, 0));
            tags.push(Tag::Gamma1);
        }
        for j in 0..arc_segments {
            v.push(grid.node(radial_segments, j));
            tags.push(Tag::Gamma0);
        }
        for i in (1..=radial_segments).rev() {
            v.push(grid.node(i, arc_segments));
            tags.push(Tag::Gamma1);
        }
        for j in (1..=arc_segments).rev() {
            v.push(grid.node(0, j));
            tags.push(Tag::Gamma1);
        }
        let mut g = Self::polygon(v, tags, x0)?;
        g.grid = Some(grid);
        Ok(g)
    }

    fn validate_tags(&self) -> Result<()> {
        if !self.tags.contains(&Tag::Gamma1) {
            return Err(Error::Geometry("Gamma1 must be nonempty".into()));
        }
        Ok(())
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            if (b - a).norm() < 1e-14 {
                return Err(Error::Geometry(format!("repeated vertex {i}")));
            }
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (self.vertices[j], self.vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::Geometry(format!("edges {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    /// All boundary pieces (edges in 2D, endpoint "facets" in 1D).
    pub fn segments(&self) -> Vec<BoundarySegment> {
        match self.dim {
            Dim::One => vec![
                BoundarySegment {
                    a: self.vertices[0],
                    b: self.vertices[0],
                    normal: Point::new(-1.0, 0.0),
                    tag: self.tags[0],
                },
                BoundarySegment {
                    a: self.vertices[1],
                    b: self.vertices[1],
                    normal: Point::new(1.0, 0.0),
                    tag: self.tags[1],
                },
            ],
            Dim::Two => {
                let n = self.vertices.len();
                (0..n)
                    .map(|i| {
                        let a = self.vertices[i];
                        let b = self.vertices[(i + 1) % n];
                        let d = b - a;
                        BoundarySegment {
                            a,
                            b,
                            normal: Point::new(d.y, -d.x) / d.norm(),
                            tag: self.tags[i],
                        }
                    })
                    .collect()
            }
        }
    }

    pub fn gamma0_segments(&self) -> Vec<BoundarySegment> {
        self.segments().into_iter().filter(|s| s.tag == Tag::Gamma0).collect()
    }

    pub fn area(&self) -> f64 {
        match self.dim {
            Dim::One => self.vertices[1].x - self.vertices[0].x,
            Dim::Two => signed_area(&self.vertices),
        }
    }

    pub fn centroid(&self) -> Point {
        match self.dim {
            Dim::One => 0.5 * (self.vertices[0] + self.vertices[1]),
            Dim::Two => {
                let n = self.vertices.len();
                let mut c = Point::zeros();
                let mut a = 0.0;
                for i in 0..n {
                    let p = self.vertices[i];
                    let q = self.vertices[(i + 1) % n];
                    let cr = p.x * q.y - q.x * p.y;
                    a += cr;
                    c += (p + q) * cr;
                }
                c / (3.0 * a)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for p in &self.vertices {
            for q in &self.vertices {
                d = d.max((p - q).norm());
            }
        }
        d
    }
}

pub(crate) fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let p = v[i];
            let q = v[(i + 1) % n];
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
}

pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Result of the star-shapedness test (x - x0) . nu <= 0 on Gamma0.
#[derive(Debug, Clone, Serialize)]
pub struct StarReport {
    pub holds: bool,
    /// max over Gamma0 of (x - x0) . nu; -inf when Gamma0 is empty.
    pub max_value: f64,
}

pub fn star_shaped_check(geom: &Geometry, tol: f64) -> StarReport {
    let mut worst = f64::NEG_INFINITY;
    for s in geom.gamma0_segments() {
        for p in [s.a, s.midpoint(), s.b] {
            worst = worst.max((p - geom.x0).dot(&s.normal));
        }
    }
    StarReport { holds: worst <= tol, max_value: worst }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexReport {
    pub convex: bool,
    /// smallest turn (cross product of consecutive unit edge directions)
    pub min_turn: f64,
}

/// Convexity of Gamma0 as a boundary arc of the domain: every interior joint
/// of the Gamma0 chain must turn left. Gamma0 must be one connected chain.
pub fn convexity_check(geom: &Geometry, tol: f64) -> Result<ConvexReport> {
    if geom.dim == Dim::One {
        return Ok(ConvexReport { convex: true, min_turn: 0.0 });
    }
    let chains = gamma0_chains(geom);
    if chains.is_empty() {
        return Ok(ConvexReport { convex: true, min_turn: 0.0 });
    }
    if chains.len() > 1 {
        return Err(Error::UnsupportedGeometry(format!(
            "Gamma0 has {} connected components; one is required",
            chains.len()
        )));
    }
    let n = geom.vertices.len();
    let chain = &chains[0];
    let mut min_turn = f64::INFINITY;
    for w in chain.windows(2) {
        let (i, j) = (w[0], w[1]);
        let e1 = (geom.vertices[(i + 1) % n] - geom.vertices[i]).normalize();
        let e2 = (geom.vertices[(j + 1) % n] - geom.vertices[j]).normalize();
        min_turn = min_turn.min(cross(e1, e2));
    }
    if chain.len() < 2 {
        min_turn = 0.0;
    }
    Ok(ConvexReport { convex: min_turn >= -tol, min_turn })
}

/// Edge indices of Gamma0 grouped into maximal consecutive chains, each in
/// boundary order.
pub(crate) fn gamma0_chains(geom: &Geometry) -> Vec<Vec<usize>> {
    let n = geom.tags.len();
    let is0 = |i: usize| geom.tags[i % n] == Tag::Gamma0;
    if (0..n).all(is0) {
        return vec![(0..n).collect()];
    }
    // start right after some Gamma1 edge so chains do not wrap
    let start = (0..n).find(|&i| !is0(i)).unwrap() + 1;
    let mut chains = Vec::new();
    let mut cur = Vec::new();
    for k in 0..n {
        let i = (start + k) % n;
        if is0(i) {
            cur.push(i);
        } else if !cur.is_empty() {
            chains.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        chains.push(cur);
    }
    chains
}
