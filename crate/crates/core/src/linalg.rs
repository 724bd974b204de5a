//! Small sparse/dense helpers on top of `sprs` and `nalgebra`.

use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::error::{Error, Result};

pub type SpMat = CsMat<f64>;

/// y = A x for a CSR matrix.
pub fn spmv(a: &SpMat, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    spmv_acc(a, x, 1.0, &mut y);
    y
}

/// y += s A x.
pub fn spmv_acc(a: &SpMat, x: &[f64], s: f64, y: &mut [f64]) {
    debug_assert_eq!(a.cols(), x.len());
    debug_assert_eq!(a.rows(), y.len());
    if a.is_csr() {
        for (i, row) in a.outer_iterator().enumerate() {
            let mut acc = 0.0;
            for (j, &v) in row.iter() {
                acc += v * x[j];
            }
            y[i] += s * acc;
        }
    } else {
        for (j, col) in a.outer_iterator().enumerate() {
            for (i, &v) in col.iter() {
                y[i] += s * v * x[j];
            }
        }
    }
}

/// x^T A y.
pub fn bilinear(a: &SpMat, x: &[f64], y: &[f64]) -> f64 {
    dot(x, &spmv(a, y))
}

/// x^T A x.
pub fn quad(a: &SpMat, x: &[f64]) -> f64 {
    bilinear(a, x, x)
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// a x + b y
pub fn axpby(a: f64, x: &[f64], b: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
}

pub fn scale(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

/// Linear combination of sparse matrices of equal shape.
pub fn combine(terms: &[(f64, &SpMat)]) -> SpMat {
    let (rows, cols) = terms[0].1.shape();
    let mut tri = TriMat::new((rows, cols));
    for (s, m) in terms {
        if *s == 0.0 {
            continue;
        }
        for (v, (i, j)) in m.iter() {
            tri.add_triplet(i, j, s * v);
        }
    }
    tri.to_csr()
}

/// 0.5 (A + A^T), removing round-off asymmetry from assembly.
pub fn symmetrize(a: &SpMat) -> SpMat {
    let n = a.rows();
    let mut tri = TriMat::new((n, a.cols()));
    for (v, (i, j)) in a.iter() {
        tri.add_triplet(i, j, 0.5 * v);
        tri.add_triplet(j, i, 0.5 * v);
    }
    tri.to_csr()
}

pub fn identity(n: usize) -> SpMat {
    CsMat::eye(n)
}

pub fn to_dense(a: &SpMat) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.rows(), a.cols());
    for (v, (i, j)) in a.iter() {
        d[(i, j)] += *v;
    }
    d
}

/// Largest |A_ij - A_ji|.
pub fn asymmetry(a: &SpMat) -> f64 {
    let t = a.transpose_view().to_csr();
    let mut worst: f64 = 0.0;
    for (v, (i, j)) in a.iter() {
        let w = t.get(i, j).copied().unwrap_or(0.0);
        worst = worst.max((v - w).abs());
    }
    for (v, (i, j)) in t.iter() {
        if a.get(i, j).is_none() {
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// Sparse LDL^T factorization of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    mat: SpMat,
    ldl: LdlNumeric<f64, usize>,
}

impl SpdSolver {
    pub fn new(mat: &SpMat) -> Result<Self> {
        Self::factor(mat, true)
    }

    /// Symmetric, possibly indefinite, nonsingular matrix.
    pub fn new_symmetric(mat: &SpMat) -> Result<Self> {
        Self::factor(mat, false)
    }

    fn factor(mat: &SpMat, require_pd: bool) -> Result<Self> {
        let mat = if mat.is_csr() { mat.clone() } else { mat.to_csr() };
        let ldl = Ldl::new()
            .fill_in_reduction(sprs::FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .numeric(mat.view())
            .map_err(|e| Error::Singular(format!("LDL factorization failed: {e}")))?;
        let scale = ldl.d().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let bad = |d: f64| if require_pd { !(d > 1e-14 * scale) } else { !(d.abs() > 1e-14 * scale) };
        if let Some(d) = ldl.d().iter().find(|d| bad(**d)) {
            return Err(Error::Singular(format!(
                "matrix is singular or not positive definite (pivot {d:e})"
            )));
        }
        Ok(Self { mat, ldl })
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Solve with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.ldl.solve(rhs);
        let ax = spmv(&self.mat, &x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let dx: Vec<f64> = self.ldl.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        x
    }

    pub fn matrix(&self) -> &SpMat {
        &self.mat
    }
}

/// Generalized symmetric eigenproblem A x = lambda B x with B SPD, dense.
/// Returns ascending eigenvalues and B-orthonormal eigenvectors (columns).
pub fn generalized_symmetric_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = nalgebra::Cholesky::new(b.clone())
        .ok_or_else(|| Error::Singular("mass-type matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Cholesky factor not invertible".into()))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs_sorted = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    let vecs = linv.transpose() * vecs_sorted;
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SpMat {
        let mut t = TriMat::new((n, n));
        for i in 0..n {
            t.add_triplet(i, i, 2.0);
            if i + 1 < n {
                t.add_triplet(i, i + 1, -1.0);
                t.add_triplet(i + 1, i, -1.0);
            }
        }
        t.to_csr()
    }

    #[test]
    fn spd_solve_recovers_vector() {
        let a = tridiag(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = spmv(&a, &x);
        let s = SpdSolver::new(&a).unwrap();
        let y = s.solve(&b);
        let err = axpby(1.0, &x, -1.0, &y);
        assert!(norm(&err) < 1e-12);
    }

    #[test]
    fn indefinite_rejected() {
        let a = combine(&[(1.0, &tridiag(5)), (-3.0, &identity(5))]);
        assert!(SpdSolver::new(&a).is_err());
    }

    #[test]
    fn symmetrize_is_symmetric() {
        let mut t = TriMat::new((3, 3));
        t.add_triplet(0, 1, 1.0);
        t.add_triplet(1, 0, 1.0 + 1e-15);
        t.add_triplet(2, 2, 4.0);
        let s = symmetrize(&t.to_csr());
        assert_eq!(asymmetry(&s), 0.0);
    }

    #[test]
    fn generalized_eigen_b_orthonormal() {
        let a = to_dense(&tridiag(6));
        let b = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 1.0, 3.0, 1.0, 2.0]));
        let (vals, v) = generalized_symmetric_eigen(&a, &b).unwrap();
        let g = v.transpose() * &b * &v;
        assert!((g - DMatrix::identity(6, 6)).norm() < 1e-12);
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }
}
