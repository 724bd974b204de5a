//! Spectra of the first-order generator, the modal cubic and the
//! Routh-Hurwitz test.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::dynamics::{MgtSystem, Resolvent, StateZ};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    /// Largest generator dimension (3N) handled by the dense eigensolver.
    pub dense_cap: usize,
    /// Number of eigenvalues returned in partial mode.
    pub partial_count: usize,
    /// Implicit weight of the resolvent used in partial mode.
    pub partial_theta: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { dense_cap: 6000, partial_count: 40, partial_theta: 1.0 }
    }
}

fn pairs<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let p: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
    p.serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Sorted by decreasing real part, then increasing imaginary part.
    #[serde(serialize_with = "pairs")]
    pub eigenvalues: Vec<Complex64>,
    pub abscissa: f64,
    pub stable: bool,
    /// True when only the eigenvalues nearest the origin were computed.
    pub partial: bool,
    pub dimension: usize,
}

impl Spectrum {
    pub fn from_eigenvalues(mut ev: Vec<Complex64>, partial: bool, dimension: usize) -> Self {
        sort_eigenvalues(&mut ev);
        let abscissa = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let radius = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let stable = abscissa < -1e-10 * (1.0 + radius);
        Self { eigenvalues: ev, abscissa, stable, partial, dimension }
    }
}

fn sort_eigenvalues(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
}

pub fn dense_eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    a.complex_eigenvalues().iter().copied().collect()
}

/// Spectrum of the (u, z, z_t) generator; dense up to the size cap, otherwise
/// a partial Arnoldi computation on the resolvent.
pub fn compute_spectrum(sys: &MgtSystem, opts: &SpectrumOptions) -> Result<Spectrum> {
    let dim = 3 * sys.dim();
    if dim <= opts.dense_cap {
        let a = sys.generator_z()?;
        let ev = dense_eigenvalues(&a);
        if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("eigensolver returned non-finite values".into()));
        }
        Ok(Spectrum::from_eigenvalues(ev, false, dim))
    } else {
        let ev = partial_eigenvalues(sys, opts.partial_count, opts.partial_theta)?;
        Ok(Spectrum::from_eigenvalues(ev, true, dim))
    }
}

/// Eigenvalues of the generator closest to the origin, from Arnoldi on the
/// resolvent (I - theta L)^{-1}, whose eigenvalues are 1 / (1 - theta lambda).
pub fn partial_eigenvalues(sys: &MgtSystem, count: usize, theta: f64) -> Result<Vec<Complex64>> {
    let res = Resolvent::new(sys, theta)?;
    let n = 3 * sys.dim();
    let k = n.min((2 * count).max(count + 40));
    let op = |x: &DVector<f64>| -> DVector<f64> {
        let y = res.solve(sys, &StateZ::from_slice(x.as_slice()), None);
        DVector::from_vec(y.to_vec())
    };
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(k + 1);
    let start = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7).sin());
    q.push(&start / start.norm());
    let mut h = DMatrix::<f64>::zeros(k + 1, k);
    let mut m = k;
    for j in 0..k {
        let mut w = op(&q[j]);
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = qi.dot(&w);
                h[(i, j)] += c;
                w -= qi * c;
            }
        }
        let beta = w.norm();
        h[(j + 1, j)] = beta;
        if beta < 1e-14 {
            m = j + 1;
            break;
        }
        q.push(w / beta);
    }
    let hm = h.view((0, 0), (m, m)).into_owned();
    let beta = if m < k + 1 { h[(m, m - 1)] } else { 0.0 };
    let mus = dense_eigenvalues(&hm);
    let hc = hm.map(|v| Complex64::new(v, 0.0));
    let mut ritz: Vec<(f64, Complex64)> = Vec::new();
    for mu in mus {
        if mu.norm() < 1e-300 {
            continue;
        }
        // Ritz vector of H by inverse iteration
        let shift = mu * (1.0 + 1e-10) + Complex64::new(1e-14, 0.0);
        let a = &hc - DMatrix::<Complex64>::identity(m, m) * shift;
        let lu = a.lu();
        let mut y = DVector::<Complex64>::from_element(m, Complex64::new(1.0, 0.0));
        for _ in 0..3 {
            if let Some(s) = lu.solve(&y) {
                let nrm = s.norm();
                y = s / Complex64::new(nrm, 0.0);
            }
        }
        let resid = beta * y[m - 1].norm() / mu.norm();
        ritz.push((resid, mu));
    }
    ritz.sort_by(|a, b| b.1.norm().total_cmp(&a.1.norm()));
    let lambdas: Vec<Complex64> = ritz
        .iter()
        .filter(|(r, _)| *r < 1e-6)
        .take(count)
        .map(|(_, mu)| (Complex64::new(1.0, 0.0) - mu.inv()) / theta)
        .collect();
    if lambdas.is_empty() {
        return Err(Error::Numerical("no converged Ritz values".into()));
    }
    Ok(lambdas)
}

/// Roots of tau l^3 + alpha l^2 + b mu l + c^2 mu.
pub fn modal_cubic_roots(mu: f64, tau: f64, alpha: f64, b: f64, c: f64) -> Result<[Complex64; 3]> {
    if !(tau > 0.0 && b > 0.0 && mu >= 0.0 && c.is_finite() && alpha.is_finite()) {
        return Err(Error::InvalidArgument("modal cubic needs tau > 0, b > 0, mu >= 0".into()));
    }
    let a2 = alpha / tau;
    let a1 = b * mu / tau;
    let a0 = c * c * mu / tau;
    let comp = DMatrix::from_row_slice(3, 3, &[-a2, -a1, -a0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let ev = dense_eigenvalues(&comp);
    let p = |l: Complex64| ((l + a2) * l + a1) * l + a0;
    let dp = |l: Complex64| (l * 3.0 + 2.0 * a2) * l + a1;
    let mut roots = [ev[0], ev[1], ev[2]];
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = dp(*r);
            if d.norm() == 0.0 {
                break;
            }
            let step = p(*r) / d;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            let cand = *r - step;
            if p(cand).norm() <= p(*r).norm() {
                *r = cand;
            } else {
                break;
            }
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

/// Routh-Hurwitz criterion for the modal cubic with mu > 0: all coefficients
/// positive and alpha b > tau c^2, i.e. gamma > 0.
pub fn routh_hurwitz_stable(mu: f64, tau: f64, alpha: f64, b: f64, c: f64) -> bool {
    let (a3, a2, a1, a0) = (tau, alpha, b * mu, c * c * mu);
    a3 > 0.0 && a2 > 0.0 && a1 > 0.0 && a0 > 0.0 && a2 * a1 > a3 * a0
}

/// Relative Frobenius distance between the z-form generator and the
/// u-form generator conjugated by the nodal transform.
pub fn conjugacy_residual(sys: &MgtSystem) -> Result<f64> {
    let az = sys.generator_z()?;
    let au = sys.generator_u()?;
    let conj = sys.transform() * au * sys.transform_inverse();
    Ok((&az - conj).norm() / az.norm())
}

/// Largest distance between matched eigenvalues of two multisets, each
/// pair weighted by 1 / max(1, |lambda|). Greedy nearest matching.
pub fn spectral_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let mut best = None;
        let mut bd = f64::INFINITY;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < bd {
                    bd = d;
                    best = Some(j);
                }
            }
        }
        if let Some(j) = best {
            used[j] = true;
        }
        worst = worst.max(bd / x.norm().max(1.0));
    }
    worst
}

/// fitted omega / (2 |abscissa|); near 1 when the dominant mode sets the decay.
pub fn abscissa_vs_decay(abscissa: f64, fitted_omega: f64) -> f64 {
    fitted_omega / (2.0 * abscissa.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{MaterialParams, Mesh};
    use crate::geometry::{Geometry, Tag};

    fn sys(alpha: f64, kappa1: f64, n: usize) -> MgtSystem {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let mesh = Mesh::interval(&g, n).unwrap();
        MgtSystem::new(mesh, MaterialParams::constant(1.0, 1.0, 1.0, alpha, 1.0, kappa1)).unwrap()
    }

    #[test]
    fn cubic_known_roots() {
        // (l + 1)(l + 2)(l + 3) = l^3 + 6 l^2 + 11 l + 6 with mu = 1, b = 11, c^2 = 6
        let r = modal_cubic_roots(1.0, 1.0, 6.0, 11.0, 6f64.sqrt()).unwrap();
        let want = [-1.0, -2.0, -3.0];
        for (z, w) in r.iter().zip(want) {
            assert!((z.re - w).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn critical_cubic_on_axis() {
        let (tau, b, c, mu) = (0.7, 1.3, 0.9, 5.0);
        let alpha = tau * c * c / b;
        let r = modal_cubic_roots(mu, tau, alpha, b, c).unwrap();
        let w = (b * mu / tau).sqrt();
        let mut expect = [
            Complex64::new(0.0, -w),
            Complex64::new(0.0, w),
            Complex64::new(-alpha / tau, 0.0),
        ];
        expect.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
        assert!(spectral_distance(&r, &expect) < 1e-9);
        assert!(r.iter().map(|z| z.re).fold(f64::MIN, f64::max) <= 1e-9);
    }

    #[test]
    fn conjugacy_small() {
        let s = sys(1.3, 0.6, 8);
        assert!(conjugacy_residual(&s).unwrap() < 1e-12);
    }

    #[test]
    fn gamma_zero_spectrum_contains_relaxation_mode() {
        let s = sys(1.0, 0.5, 8);
        let sp = compute_spectrum(&s, &SpectrumOptions::default()).unwrap();
        let hits = sp
            .eigenvalues
            .iter()
            .filter(|z| (**z - Complex64::new(-s.r, 0.0)).norm() < 1e-6)
            .count();
        assert_eq!(hits, s.dim());
        assert!(sp.stable);
    }

    #[test]
    fn partial_mode_matches_dense() {
        let s = sys(1.2, 0.4, 32);
        let dense = compute_spectrum(&s, &SpectrumOptions::default()).unwrap();
        let part = compute_spectrum(&s, &SpectrumOptions { dense_cap: 10, partial_count: 6, partial_theta: 1.0 }).unwrap();
        assert!(part.partial);
        for z in &part.eigenvalues {
            let d = dense.eigenvalues.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-6, "{z} off by {d}");
        }
        // eigenvalues nearest the origin bound the abscissa from below
        assert!(part.abscissa <= dense.abscissa + 1e-6);
    }

    #[test]
    fn spectrum_json_shape() {
        let sp = Spectrum::from_eigenvalues(vec![Complex64::new(-1.0, 2.0)], false, 1);
        let v = serde_json::to_value(&sp).unwrap();
        assert_eq!(v["eigenvalues"][0][1], 2.0);
        assert_eq!(v["stable"], true);
    }
}
