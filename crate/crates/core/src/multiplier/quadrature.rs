use serde::{Deserialize, Serialize};

use crate::discretization::Mesh;
use crate::geometry::{Dim, Point, Tag};

/// Composite quadrature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    /// One point per element, facet and time interval (second order).
    #[default]
    Midpoint,
    /// Gauss rules: three points on segments and intervals, seven on triangles.
    Gauss,
}

const G3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Points and weights on [a, b].
pub fn interval_points(a: f64, b: f64, rule: Rule) -> Vec<(f64, f64)> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    match rule {
        Rule::Midpoint => vec![(c, b - a)],
        Rule::Gauss => G3.iter().map(|(x, w)| (c + h * x, h * w)).collect(),
    }
}

fn triangle_points(p: [Point; 3], area: f64, rule: Rule) -> Vec<(Point, f64)> {
    let at = |l: [f64; 3]| p[0] * l[0] + p[1] * l[1] + p[2] * l[2];
    match rule {
        Rule::Midpoint => vec![(at([1.0 / 3.0; 3]), area)],
        Rule::Gauss => {
            let s15 = 15f64.sqrt();
            let a1 = (6.0 - s15) / 21.0;
            let a2 = (6.0 + s15) / 21.0;
            let w1 = (155.0 - s15) / 1200.0;
            let w2 = (155.0 + s15) / 1200.0;
            let mut v = vec![(at([1.0 / 3.0; 3]), area * 9.0 / 40.0)];
            for (a, w) in [(a1, w1), (a2, w2)] {
                let b = 1.0 - 2.0 * a;
                for l in [[a, a, b], [a, b, a], [b, a, a]] {
                    v.push((at(l), area * w));
                }
            }
            v
        }
    }
}

/// Domain quadrature points with weights.
pub fn domain_points(mesh: &Mesh, rule: Rule) -> Vec<(Point, f64)> {
    let mut out = Vec::new();
    for e in 0..mesh.element_count() {
        let ns = mesh.element_nodes(e);
        match mesh.dim {
            Dim::One => {
                let (a, b) = (mesh.nodes[ns[0]].x, mesh.nodes[ns[1]].x);
                for (x, w) in interval_points(a, b, rule) {
                    out.push((Point::new(x, 0.0), w));
                }
            }
            Dim::Two => {
                let p = [mesh.nodes[ns[0]], mesh.nodes[ns[1]], mesh.nodes[ns[2]]];
                out.extend(triangle_points(p, mesh.element_measure(e), rule));
            }
        }
    }
    out
}

/// Boundary quadrature points on facets with `tag`: (point, outward normal, weight).
pub fn boundary_points(mesh: &Mesh, tag: Tag, rule: Rule) -> Vec<(Point, Point, f64)> {
    let mut out = Vec::new();
    for f in mesh.facets_with(tag) {
        if f.is_point() {
            out.push((mesh.nodes[f.nodes[0]], f.normal, f.measure));
        } else {
            let (a, b) = (mesh.nodes[f.nodes[0]], mesh.nodes[f.nodes[1]]);
            for (s, w) in interval_points(0.0, 1.0, rule) {
                out.push((a + (b - a) * s, f.normal, w * f.measure));
            }
        }
    }
    out
}

/// Composite rule over [t0, t1] with `n` intervals.
pub fn time_points(t0: f64, t1: f64, n: usize, rule: Rule) -> Vec<(f64, f64)> {
    let n = n.max(1);
    let d = (t1 - t0) / n as f64;
    (0..n)
        .flat_map(|k| interval_points(t0 + k as f64 * d, t0 + (k + 1) as f64 * d, rule))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;

    #[test]
    fn gauss_rules_exact_for_quartics() {
        let g = Geometry::rectangle(
            (0.0, 1.0),
            (0.0, 1.0),
            [Tag::Gamma0, Tag::Gamma1, Tag::Gamma1, Tag::Gamma1],
            Point::new(0.5, -1.0),
        )
        .unwrap();
        let mesh = Mesh::generate(&g, 2).unwrap();
        let v: f64 = domain_points(&mesh, Rule::Gauss).iter().map(|(x, w)| w * x.x.powi(4) * x.y).sum();
        assert!((v - 0.1).abs() < 1e-14);
        let b: f64 = boundary_points(&mesh, Tag::Gamma0, Rule::Gauss).iter().map(|(x, _, w)| w * x.x.powi(5)).sum();
        assert!((b - 1.0 / 6.0).abs() < 1e-14);
        let t: f64 = time_points(0.0, 2.0, 3, Rule::Gauss).iter().map(|(t, w)| w * t.powi(5)).sum();
        assert!((t - 64.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn midpoint_second_order() {
        let err = |n| {
            let v: f64 = time_points(0.0, 1.0, n, Rule::Midpoint).iter().map(|(t, w)| w * t.exp()).sum();
            (v - (1f64.exp() - 1.0)).abs()
        };
        let rate = (err(10) / err(20)).log2();
        assert!((rate - 2.0).abs() < 0.05);
    }
}
