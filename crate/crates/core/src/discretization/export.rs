use std::fmt::Write as _;

use super::mesh::Mesh;
use crate::linalg::SpMat;

/// Triplet text: header `# rows cols nnz`, then `row col value` per line.
pub fn matrix_triplets(a: &SpMat) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} {} {}", a.rows(), a.cols(), a.nnz());
    let csr = a.to_csr();
    for (i, row) in csr.outer_iterator().enumerate() {
        for (j, v) in row.iter() {
            let _ = writeln!(s, "{i} {j} {v:e}");
        }
    }
    s
}

pub fn nodes_csv(mesh: &Mesh) -> String {
    let mut s = String::from("id,x,y\n");
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{}", p.x, p.y);
    }
    s
}

pub fn elements_csv(mesh: &Mesh) -> String {
    let mut s = match mesh.cell_size() {
        2 => String::from("id,n0,n1\n"),
        _ => String::from("id,n0,n1,n2\n"),
    };
    for e in 0..mesh.element_count() {
        let ns: Vec<String> = mesh.element_nodes(e).iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "{e},{}", ns.join(","));
    }
    s
}

pub fn facets_csv(mesh: &Mesh) -> String {
    let mut s = String::from("id,n0,n1,tag,nx,ny,measure,owner\n");
    for (i, f) in mesh.facets.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{}",
            f.nodes[0],
            f.nodes[1],
            f.tag.index(),
            f.normal.x,
            f.normal.y,
            f.measure,
            f.owner
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Geometry, Tag};
    use sprs::TriMat;

    #[test]
    fn triplets_roundtrip() {
        let mut t = TriMat::new((2, 3));
        t.add_triplet(0, 2, 1.5);
        t.add_triplet(1, 0, -2.0);
        let text = matrix_triplets(&t.to_csr());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# 2 3 2");
        let parsed: Vec<(usize, usize, f64)> = lines[1..]
            .iter()
            .map(|l| {
                let p: Vec<&str> = l.split_whitespace().collect();
                (p[0].parse().unwrap(), p[1].parse().unwrap(), p[2].parse().unwrap())
            })
            .collect();
        assert_eq!(parsed, vec![(0, 2, 1.5), (1, 0, -2.0)]);
    }

    #[test]
    fn mesh_tables_have_rows() {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let m = Mesh::interval(&g, 4).unwrap();
        assert_eq!(nodes_csv(&m).lines().count(), 6);
        assert_eq!(elements_csv(&m).lines().count(), 5);
        assert_eq!(facets_csv(&m).lines().count(), 3);
    }
}
