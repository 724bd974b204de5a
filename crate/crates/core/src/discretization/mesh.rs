use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{cross, Dim, Geometry, Point, PolarGrid, Tag};

/// Boundary facet: an edge in 2D, an endpoint in 1D.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Facet {
    /// End nodes; both entries equal the boundary node in 1D.
    pub nodes: [usize; 2],
    pub tag: Tag,
    #[serde(skip)]
    pub normal: Point,
    /// Length in 2D, 1 in 1D.
    pub measure: f64,
    /// Element adjacent to the facet.
    pub owner: usize,
}

impl Facet {
    pub fn is_point(&self) -> bool {
        self.nodes[0] == self.nodes[1]
    }
}

/// Conforming P1 simplex mesh. Coordinates are stored in 2D with y = 0 for
/// interval meshes.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: Dim,
    pub nodes: Vec<Point>,
    /// Element connectivity; only the first `cell_size()` entries are used.
    pub cells: Vec<[usize; 3]>,
    pub facets: Vec<Facet>,
}

impl Mesh {
    /// Uniform partition of an interval into `n` elements.
    pub fn interval(geom: &Geometry, n: usize) -> Result<Self> {
        if geom.dim != Dim::One {
            return Err(Error::Mesh("interval mesh needs a 1D geometry".into()));
        }
        if n < 1 {
            return Err(Error::Mesh("at least one element required".into()));
        }
        let (a, b) = (geom.vertices[0].x, geom.vertices[1].x);
        let nodes = (0..=n)
            .map(|i| Point::new(a + (b - a) * i as f64 / n as f64, 0.0))
            .collect();
        let cells = (0..n).map(|i| [i, i + 1, usize::MAX]).collect();
        let facets = vec![
            Facet { nodes: [0, 0], tag: geom.tags[0], normal: Point::new(-1.0, 0.0), measure: 1.0, owner: 0 },
            Facet { nodes: [n, n], tag: geom.tags[1], normal: Point::new(1.0, 0.0), measure: 1.0, owner: n - 1 },
        ];
        Ok(Self { dim: Dim::One, nodes, cells, facets })
    }

    /// Refinement level `m`: uniform interval mesh with `m` elements in 1D,
    /// a structured (m+1)^2 grid on axis-aligned rectangles, otherwise a fan
    /// triangulation around the centroid with each fan triangle split m^2 times.
    pub fn generate(geom: &Geometry, m: usize) -> Result<Self> {
        match geom.dim {
            Dim::One => Self::interval(geom, m),
            Dim::Two => {
                if m < 1 {
                    return Err(Error::Mesh("refinement level must be >= 1".into()));
                }
                if let Some(grid) = geom.grid {
                    if m != 1 {
                        return Err(Error::Mesh(
                            "polar geometries fix their own resolution; use refinement level 1".into(),
                        ));
                    }
                    Self::polar(geom, grid)
                } else if is_axis_rectangle(geom) {
                    Self::rectangle_grid(geom, m)
                } else {
                    Self::fan(geom, m)
                }
            }
        }
    }

    /// Smallest refinement level whose mesh size does not exceed `h`.
    pub fn with_max_size(geom: &Geometry, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Mesh("mesh size must be positive".into()));
        }
        let coarse = Self::generate(geom, 1)?;
        if geom.grid.is_some() {
            return if coarse.mesh_size() <= h * (1.0 + 1e-12) {
                Ok(coarse)
            } else {
                Err(Error::Mesh("polar geometry is coarser than the requested mesh size".into()))
            };
        }
        let mut m = ((coarse.mesh_size() / h).ceil() as usize).max(1);
        loop {
            let mesh = Self::generate(geom, m)?;
            if mesh.mesh_size() <= h * (1.0 + 1e-12) {
                return Ok(mesh);
            }
            m += 1;
        }
    }

    fn rectangle_grid(geom: &Geometry, m: usize) -> Result<Self> {
        let xs: Vec<f64> = geom.vertices.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = geom.vertices.iter().map(|p| p.y).collect();
        let (x0, x1) = (xs.iter().cloned().fold(f64::INFINITY, f64::min), xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let (y0, y1) = (ys.iter().cloned().fold(f64::INFINITY, f64::min), ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let id = |i: usize, j: usize| j * (m + 1) + i;
        let mut nodes = Vec::with_capacity((m + 1) * (m + 1));
        for j in 0..=m {
            for i in 0..=m {
                nodes.push(Point::new(
                    x0 + (x1 - x0) * i as f64 / m as f64,
                    y0 + (y1 - y0) * j as f64 / m as f64,
                ));
            }
        }
        let mut cells = Vec::with_capacity(2 * m * m);
        for j in 0..m {
            for i in 0..m {
                cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                cells.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let cell = |i: usize, j: usize, k: usize| 2 * (j * m + i) + k;
        let mut raw = Vec::with_capacity(4 * m);
        for i in 0..m {
            raw.push(([id(i, 0), id(i + 1, 0)], cell(i, 0, 0)));
        }
        for j in 0..m {
            raw.push(([id(m, j), id(m, j + 1)], cell(m - 1, j, 0)));
        }
        for i in (0..m).rev() {
            raw.push(([id(i + 1, m), id(i, m)], cell(i, m - 1, 1)));
        }
        for j in (0..m).rev() {
            raw.push(([id(0, j + 1), id(0, j)], cell(0, j, 1)));
        }
        let facets = tag_facets(geom, &nodes, raw)?;
        let mesh = Self { dim: Dim::Two, nodes, cells, facets };
        mesh.check_elements()?;
        Ok(mesh)
    }

    fn polar(geom: &Geometry, grid: PolarGrid) -> Result<Self> {
        let (nr, np) = (grid.n_r, grid.n_phi);
        let id = |i: usize, j: usize| i * (np + 1) + j;
        let mut nodes = Vec::with_capacity((nr + 1) * (np + 1));
        for i in 0..=nr {
            for j in 0..=np {
                nodes.push(grid.node(i, j));
            }
        }
        let mut cells = Vec::with_capacity(2 * nr * np);
        for i in 0..nr {
            for j in 0..np {
                cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                cells.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let cell = |i: usize, j: usize, k: usize| 2 * (i * np + j) + k;
        let mut raw = Vec::with_capacity(2 * (nr + np));
        for i in 0..nr {
            raw.push(([id(i, 0), id(i + 1, 0)], cell(i, 0, 0)));
        }
        for j in 0..np {
            raw.push(([id(nr, j), id(nr, j + 1)], cell(nr - 1, j, 0)));
        }
        for i in (0..nr).rev() {
            raw.push(([id(i + 1, np), id(i, np)], cell(i, np - 1, 1)));
        }
        for j in (0..np).rev() {
            raw.push(([id(0, j + 1), id(0, j)], cell(0, j, 1)));
        }
        let facets = tag_facets(geom, &nodes, raw)?;
        let mesh = Self { dim: Dim::Two, nodes, cells, facets };
        mesh.check_elements()?;
        Ok(mesh)
    }

    fn fan(geom: &Geometry, m: usize) -> Result<Self> {
        let c = geom.centroid();
        let v = &geom.vertices;
        let s = v.len();
        for i in 0..s {
            if cross(v[i] - c, v[(i + 1) % s] - c) <= 1e-12 * geom.diameter().powi(2) {
                return Err(Error::UnsupportedGeometry(
                    "polygon is not star-shaped with respect to its centroid; supply a mesh table"
                        .into(),
                ));
            }
        }
        // node numbering: centre, then spokes (m nodes each), then fan interiors
        let spoke_base = 1;
        let interior_base = 1 + s * m;
        let per_interior = m * (m.saturating_sub(1)) / 2;
        // interior lattice points (a, b >= 1, a + b <= m), row b holds m - b points
        let interior_index = |a: usize, b: usize| -> usize {
            let before: usize = (1..b).map(|bb| m - bb).sum();
            before + a - 1
        };
        let node_of = |i: usize, a: usize, b: usize| -> usize {
            if a == 0 && b == 0 {
                0
            } else if b == 0 {
                spoke_base + i * m + (a - 1)
            } else if a == 0 {
                spoke_base + ((i + 1) % s) * m + (b - 1)
            } else {
                interior_base + i * per_interior + interior_index(a, b)
            }
        };
        let total = 1 + s * m + s * per_interior;
        let mut nodes = vec![Point::zeros(); total];
        for i in 0..s {
            let (p, q) = (v[i] - c, v[(i + 1) % s] - c);
            for b in 0..=m {
                for a in 0..=(m - b) {
                    let x = c + p * (a as f64 / m as f64) + q * (b as f64 / m as f64);
                    nodes[node_of(i, a, b)] = x;
                }
            }
        }
        let mut cells = Vec::with_capacity(s * m * m);
        let mut raw = Vec::with_capacity(s * m);
        for i in 0..s {
            for b in 0..m {
                for a in 0..(m - b) {
                    let up = cells.len();
                    cells.push([node_of(i, a, b), node_of(i, a + 1, b), node_of(i, a, b + 1)]);
                    if a + b == m - 1 {
                        raw.push(([node_of(i, a + 1, b), node_of(i, a, b + 1)], up));
                    }
                    if a + b + 2 <= m {
                        cells.push([node_of(i, a + 1, b), node_of(i, a + 1, b + 1), node_of(i, a, b + 1)]);
                    }
                }
            }
        }
        let facets = tag_facets(geom, &nodes, raw)?;
        let mesh = Self { dim: Dim::Two, nodes, cells, facets };
        mesh.check_elements()?;
        Ok(mesh)
    }

    /// Build a mesh from node and triangle tables; boundary facets are
    /// detected and tagged from the geometry's edges.
    pub fn from_tables(geom: &Geometry, nodes: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if geom.dim != Dim::Two {
            return Err(Error::Mesh("triangle tables need a 2D geometry".into()));
        }
        for t in &triangles {
            if t.iter().any(|&k| k >= nodes.len()) {
                return Err(Error::Mesh("element references a missing node".into()));
            }
        }
        // edge (sorted endpoints) -> owning elements with the oriented edge
        type EdgeOwners = std::collections::BTreeMap<(usize, usize), Vec<(usize, [usize; 2])>>;
        let mut edges: EdgeOwners = Default::default();
        for (e, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((e, [a, b]));
            }
        }
        let mut raw = Vec::new();
        for list in edges.values() {
            match list.len() {
                1 => raw.push((list[0].1, list[0].0)),
                2 => {}
                _ => return Err(Error::Mesh("non-manifold edge".into())),
            }
        }
        let facets = tag_facets(geom, &nodes, raw)?;
        let mesh = Self { dim: Dim::Two, nodes, cells: triangles, facets };
        mesh.check_elements()?;
        Ok(mesh)
    }

    fn check_elements(&self) -> Result<()> {
        let h = self.mesh_size();
        for e in 0..self.element_count() {
            let a = self.signed_measure(e);
            if !(a > 1e-12 * h.powi(2)) {
                return Err(Error::Mesh(format!(
                    "element {e} is degenerate or inverted (signed area {a:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn cell_size(&self) -> usize {
        match self.dim {
            Dim::One => 2,
            Dim::Two => 3,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.cells.len()
    }

    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.cells[e][..self.cell_size()]
    }

    fn signed_measure(&self, e: usize) -> f64 {
        let c = &self.cells[e];
        match self.dim {
            Dim::One => self.nodes[c[1]].x - self.nodes[c[0]].x,
            Dim::Two => {
                let (p0, p1, p2) = (self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]);
                0.5 * cross(p1 - p0, p2 - p0)
            }
        }
    }

    /// Length (1D) or area (2D) of element `e`.
    pub fn element_measure(&self, e: usize) -> f64 {
        self.signed_measure(e).abs()
    }

    pub fn element_centroid(&self, e: usize) -> Point {
        let ns = self.element_nodes(e);
        ns.iter().map(|&k| self.nodes[k]).sum::<Point>() / ns.len() as f64
    }

    /// Gradients of the element's barycentric basis functions.
    pub fn basis_gradients(&self, e: usize) -> [Point; 3] {
        let c = &self.cells[e];
        match self.dim {
            Dim::One => {
                let h = self.nodes[c[1]].x - self.nodes[c[0]].x;
                [Point::new(-1.0 / h, 0.0), Point::new(1.0 / h, 0.0), Point::zeros()]
            }
            Dim::Two => {
                let p = [self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]]];
                let two_a = cross(p[1] - p[0], p[2] - p[0]);
                let g = |j: usize, k: usize| Point::new(p[j].y - p[k].y, p[k].x - p[j].x) / two_a;
                [g(1, 2), g(2, 0), g(0, 1)]
            }
        }
    }

    /// Gradient of the P1 interpolant of nodal values on element `e`.
    pub fn element_gradient(&self, e: usize, values: &[f64]) -> Point {
        let g = self.basis_gradients(e);
        self.element_nodes(e)
            .iter()
            .zip(g.iter())
            .map(|(&k, gk)| gk * values[k])
            .sum()
    }

    /// Largest element edge length.
    pub fn mesh_size(&self) -> f64 {
        let mut h: f64 = 0.0;
        for e in 0..self.element_count() {
            let ns = self.element_nodes(e);
            for i in 0..ns.len() {
                for j in (i + 1)..ns.len() {
                    h = h.max((self.nodes[ns[i]] - self.nodes[ns[j]]).norm());
                }
            }
        }
        h
    }

    pub fn facet_midpoint(&self, f: &Facet) -> Point {
        0.5 * (self.nodes[f.nodes[0]] + self.nodes[f.nodes[1]])
    }

    pub fn boundary_nodes(&self, tag: Tag) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .facets
            .iter()
            .filter(|f| f.tag == tag)
            .flat_map(|f| f.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn facets_with(&self, tag: Tag) -> impl Iterator<Item = &Facet> {
        self.facets.iter().filter(move |f| f.tag == tag)
    }
}

fn is_axis_rectangle(geom: &Geometry) -> bool {
    if geom.vertices.len() != 4 {
        return false;
    }
    let n = 4;
    (0..n).all(|i| {
        let d = geom.vertices[(i + 1) % n] - geom.vertices[i];
        d.x.abs() < 1e-14 * d.norm() || d.y.abs() < 1e-14 * d.norm()
    })
}

/// Assign tags and normals by locating the polygon edge carrying each facet.
fn tag_facets(geom: &Geometry, nodes: &[Point], raw: Vec<([usize; 2], usize)>) -> Result<Vec<Facet>> {
    let segs = geom.segments();
    let tol = 1e-9 * geom.diameter();
    let on = |p: Point, a: Point, b: Point| -> bool {
        let d = b - a;
        let t = (p - a).dot(&d) / d.norm_squared();
        (-1e-9..=1.0 + 1e-9).contains(&t) && (a + d * t - p).norm() <= tol
    };
    raw.into_iter()
        .map(|(ns, owner)| {
            let (p, q) = (nodes[ns[0]], nodes[ns[1]]);
            let seg = segs
                .iter()
                .find(|s| on(p, s.a, s.b) && on(q, s.a, s.b))
                .ok_or_else(|| Error::Mesh(format!("boundary facet {ns:?} is not on the domain boundary")))?;
            Ok(Facet { nodes: ns, tag: seg.tag, normal: seg.normal, measure: (q - p).norm(), owner })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Geometry {
        Geometry::rectangle(
            (0.0, 1.0),
            (0.0, 1.0),
            [Tag::Gamma0, Tag::Gamma1, Tag::Gamma1, Tag::Gamma1],
            Point::new(0.5, -1.0),
        )
        .unwrap()
    }

    #[test]
    fn interval_counts() {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let m = Mesh::interval(&g, 10).unwrap();
        assert_eq!(m.node_count(), 11);
        assert_eq!(m.element_count(), 10);
        assert_eq!(m.facets.len(), 2);
        assert_eq!(m.facets[0].tag, Tag::Gamma0);
        assert!((m.mesh_size() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn unit_square_counts() {
        let m = Mesh::generate(&square(), 8).unwrap();
        assert_eq!(m.node_count(), 81);
        assert_eq!(m.element_count(), 128);
        assert_eq!(m.facets.len(), 32);
        assert_eq!(m.facets_with(Tag::Gamma0).count(), 8);
        let total: f64 = (0..m.element_count()).map(|e| m.element_measure(e)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for f in &m.facets {
            // owner element contains both facet nodes
            let ns = m.element_nodes(f.owner);
            assert!(ns.contains(&f.nodes[0]) && ns.contains(&f.nodes[1]));
        }
    }

    #[test]
    fn fan_counts_and_area() {
        let g = Geometry::half_disk(1.0, 9, 3, Tag::Gamma0, Point::new(0.0, -1.0)).unwrap();
        let s = g.vertices.len();
        for m in [1, 2, 5] {
            let mesh = Mesh::generate(&g, m).unwrap();
            assert_eq!(mesh.node_count(), 1 + s * m * (m + 1) / 2);
            assert_eq!(mesh.element_count(), s * m * m);
            assert_eq!(mesh.facets.len(), s * m);
            let total: f64 = (0..mesh.element_count()).map(|e| mesh.element_measure(e)).sum();
            assert!((total - g.area()).abs() < 1e-12);
            let perim: f64 = mesh.facets.iter().map(|f| f.measure).sum();
            let exact: f64 = g.segments().iter().map(|s| s.length()).sum();
            assert!((perim - exact).abs() < 1e-12);
            // owners contain their facets
            for f in &mesh.facets {
                let ns = mesh.element_nodes(f.owner);
                assert!(ns.contains(&f.nodes[0]) && ns.contains(&f.nodes[1]));
            }
        }
    }

    #[test]
    fn polar_counts() {
        let g = Geometry::annular_sector(1.0, 0.3, 0.5, 6, 4, Point::new(2.0, 0.0)).unwrap();
        let mesh = Mesh::generate(&g, 1).unwrap();
        assert_eq!(mesh.node_count(), 5 * 7);
        assert_eq!(mesh.element_count(), 2 * 24);
        assert_eq!(mesh.facets.len(), 2 * (6 + 4));
        assert_eq!(mesh.facets_with(Tag::Gamma0).count(), 6);
        let total: f64 = (0..mesh.element_count()).map(|e| mesh.element_measure(e)).sum();
        assert!((total - g.area()).abs() < 1e-12);
        assert!(Mesh::generate(&g, 2).is_err());
    }

    #[test]
    fn from_tables_detects_boundary() {
        let g = square();
        let nodes = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let m = Mesh::from_tables(&g, nodes, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        assert_eq!(m.facets.len(), 4);
        assert_eq!(m.facets_with(Tag::Gamma0).count(), 1);
    }

    #[test]
    fn degenerate_element_rejected() {
        let g = square();
        let nodes = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(0.5, 0.0),
        ];
        let r = Mesh::from_tables(&g, nodes, vec![[0, 4, 1], [0, 1, 2], [0, 2, 3]]);
        assert!(r.is_err());
    }

    #[test]
    fn gradients_reproduce_linear_function() {
        let g = Geometry::half_disk(1.0, 5, 2, Tag::Gamma0, Point::new(0.0, -1.0)).unwrap();
        let mesh = Mesh::generate(&g, 3).unwrap();
        let vals: Vec<f64> = mesh.nodes.iter().map(|p| 2.0 * p.x - 3.0 * p.y + 1.0).collect();
        for e in 0..mesh.element_count() {
            let gr = mesh.element_gradient(e, &vals);
            assert!((gr - Point::new(2.0, -3.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn max_size_mesh() {
        let m = Mesh::with_max_size(&square(), 0.1).unwrap();
        assert!(m.mesh_size() <= 0.1 + 1e-12);
    }
}
