//! Energies E0, E1 and E = E0 + E1, their dissipation balance and decay fits.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::dynamics::{MgtSystem, SourceTerm, StateZ, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::{bilinear, generalized_symmetric_eigen, quad, spmv, to_dense};

/// Energies and dissipation rates at one instant. Undefined energies are NaN.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergySample {
    pub t: f64,
    /// 1/2 |alpha^1/2 u_t|^2 + c^2/2 |u|_K~^2 (NaN if alpha < 0 somewhere)
    pub e0: f64,
    /// b/2 |z|_K~^2 + 1/2 |z_t|^2 + r/2 |gamma^1/2 u_t|^2 (NaN if gamma < 0 somewhere)
    pub e1: f64,
    /// E0 + E1, with undefined parts replaced by their gamma-free wave part.
    pub e: f64,
    /// b/2 |z|_K~^2 + 1/2 |z_t|^2
    pub e1_wave: f64,
    /// b z_t^T B1 z_t
    pub d_boundary: f64,
    /// u_tt^T Mg u_tt
    pub d_interior: f64,
    /// z_t^T M f
    pub work: f64,
    /// int_0^t (D_b + D_i - W), accumulated step by step with the trapezoid rule.
    pub dissipated: f64,
    pub u_l2: f64,
    pub z_l2: f64,
    pub zt_l2: f64,
}

pub fn energy_sample(sys: &MgtSystem, y: &StateZ, t: f64, src: &dyn SourceTerm) -> EnergySample {
    let r = sys.r;
    let ut = y.u_t(r);
    let utt = y.u_tt(r);
    let ops = &sys.ops;
    let e1_wave = 0.5 * sys.b * quad(&ops.ktilde, &y.z) + 0.5 * quad(&ops.mass, &y.z_t);
    let e1 = if ops.gamma_nonnegative() {
        e1_wave + 0.5 * r * quad(&sys.m_gamma, &ut)
    } else {
        f64::NAN
    };
    let e0 = if ops.alpha_nonnegative() {
        0.5 * quad(&sys.m_alpha, &ut) + 0.5 * sys.c2 * quad(&ops.ktilde, &y.u)
    } else {
        f64::NAN
    };
    let e = if e0.is_nan() { 0.0 } else { e0 } + if e1.is_nan() { e1_wave } else { e1 };
    let work = if src.is_zero() {
        0.0
    } else {
        let f = src.nodal(t, &sys.mesh.nodes);
        bilinear(&ops.mass, &y.z_t, &f) / sys.tau()
    };
    EnergySample {
        t,
        e0,
        e1,
        e,
        e1_wave,
        d_boundary: sys.b * quad(&ops.b1, &y.z_t),
        d_interior: quad(&sys.m_gamma, &utt),
        work,
        dissipated: 0.0,
        u_l2: quad(&ops.mass, &y.u).max(0.0).sqrt(),
        z_l2: quad(&ops.mass, &y.z).max(0.0).sqrt(),
        zt_l2: quad(&ops.mass, &y.z_t).max(0.0).sqrt(),
    }
}

/// D_b + D_i - W at one state.
pub fn dissipation_rate(sys: &MgtSystem, y: &StateZ, t: f64, src: &dyn SourceTerm) -> f64 {
    let utt = y.u_tt(sys.r);
    let mut rate = sys.b * quad(&sys.ops.b1, &y.z_t) + quad(&sys.m_gamma, &utt);
    if !src.is_zero() {
        let f = src.nodal(t, &sys.mesh.nodes);
        rate -= bilinear(&sys.ops.mass, &y.z_t, &f) / sys.tau();
    }
    rate
}

/// |E1(t) - E1(0) + int_0^t (D_b + D_i - W)| relative to the peak of E1.
/// Empty when E1 is undefined.
pub fn energy_identity_residual(samples: &[EnergySample]) -> Vec<f64> {
    if samples.is_empty() || samples.iter().any(|s| s.e1.is_nan()) {
        return Vec::new();
    }
    let scale = samples.iter().map(|s| s.e1).fold(0.0_f64, f64::max) + f64::MIN_POSITIVE;
    let e10 = samples[0].e1;
    samples.iter().map(|s| (s.e1 - e10 + s.dissipated).abs() / scale).collect()
}

pub fn max_identity_residual(samples: &[EnergySample]) -> f64 {
    energy_identity_residual(samples).into_iter().fold(f64::NAN, f64::max)
}

/// Exponential fit E(t) ~ M E(0) exp(-omega t) on the tail of a series.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub omega: f64,
    #[serde(rename = "M")]
    pub m: f64,
    /// RMS deviation of log E from the fitted line.
    pub fit_residual: f64,
    pub tail_start: f64,
}

pub fn decay_fit(times: &[f64], energy: &[f64], tail_fraction: f64) -> Result<DecayFit> {
    if times.len() != energy.len() || times.len() < 3 {
        return Err(Error::Fit("need at least three samples".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::Fit(format!("tail fraction {tail_fraction} outside (0, 1]")));
    }
    let e0 = energy[0];
    if !(e0 > 0.0 && e0.is_finite()) {
        return Err(Error::Fit("initial energy must be positive".into()));
    }
    let t_end = *times.last().unwrap();
    let t_start = t_end - tail_fraction * (t_end - times[0]);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(energy)
        .filter(|(t, _)| **t >= t_start)
        .map(|(t, e)| (*t, *e))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Fit("tail holds fewer than two samples".into()));
    }
    if pts.iter().any(|(_, e)| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::Fit("energy not positive on the fit window".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1.ln() - ml)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate time window".into()));
    }
    let slope = sxy / sxx;
    let intercept = ml - slope * mt;
    let rms = (pts.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit {
        omega: -slope,
        m: (intercept.exp() / e0).max(1.0),
        fit_residual: rms,
        tail_start: t_start,
    })
}

/// Summary written with each simulation.
#[derive(Debug, Clone, Serialize)]
pub struct EnergySummary {
    pub omega: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub fit_residual: Option<f64>,
    pub max_identity_residual: Option<f64>,
    pub monotone: Option<bool>,
    pub e1_defined: bool,
    pub e0_defined: bool,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_energy: f64,
}

/// Summarize a trajectory; the decay fit uses E and is skipped when it fails.
pub fn summarize(traj: &Trajectory, tail_fraction: f64) -> EnergySummary {
    let s = &traj.samples;
    let times: Vec<f64> = s.iter().map(|x| x.t).collect();
    let e: Vec<f64> = s.iter().map(|x| x.e).collect();
    let fit = decay_fit(&times, &e, tail_fraction).ok();
    let identity = if traj.e1_defined && traj.compatibility.compatible {
        Some(max_identity_residual(s))
    } else {
        None
    };
    let monotone = if traj.e1_defined && !traj.forced {
        Some(s.windows(2).all(|w| w[1].e1 <= w[0].e1 * (1.0 + 1e-10) + 1e-300))
    } else {
        None
    };
    EnergySummary {
        omega: fit.map(|f| f.omega),
        m: fit.map(|f| f.m),
        fit_residual: fit.map(|f| f.fit_residual),
        max_identity_residual: identity,
        monotone,
        e1_defined: traj.e1_defined,
        e0_defined: traj.e0_defined,
        initial_energy: e.first().copied().unwrap_or(0.0),
        final_energy: e.last().copied().unwrap_or(0.0),
        max_energy: e.iter().cloned().fold(0.0, f64::max),
    }
}

/// CSV with columns t,E0,E1,E,D_boundary,D_interior,dissipated,u_L2,z_L2,zt_L2.
pub fn trajectory_csv(samples: &[EnergySample]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("t,E0,E1,E,D_boundary,D_interior,dissipated,u_L2,z_L2,zt_L2\n");
    for s in samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            s.t, s.e0, s.e1, s.e, s.d_boundary, s.d_interior, s.dissipated, s.u_l2, s.z_l2, s.zt_l2
        );
    }
    out
}

fn add_block(q: &mut DMatrix<f64>, at: (usize, usize), m: &DMatrix<f64>) {
    let mut v = q.view_mut(at, m.shape());
    v += m;
}

/// Quadratic form of E = E0 + E1 in (u, u_t, u_tt) coordinates.
pub fn energy_form(sys: &MgtSystem) -> DMatrix<f64> {
    let n = sys.dim();
    let kt = to_dense(&sys.ops.ktilde);
    let m = to_dense(&sys.ops.mass);
    let ma = to_dense(&sys.m_alpha);
    let mg = to_dense(&sys.m_gamma);
    let (b, c2, r) = (sys.b, sys.c2, sys.r);
    let mut q = DMatrix::zeros(3 * n, 3 * n);
    // E0
    add_block(&mut q, (0, 0), &(&kt * (0.5 * c2)));
    add_block(&mut q, (n, n), &(&ma * 0.5));
    // b/2 (w + r u)^T K~ (w + r u)
    add_block(&mut q, (0, 0), &(&kt * (0.5 * b * r * r)));
    add_block(&mut q, (0, n), &(&kt * (0.5 * b * r)));
    add_block(&mut q, (n, 0), &(&kt * (0.5 * b * r)));
    add_block(&mut q, (n, n), &(&kt * (0.5 * b)));
    // 1/2 (a + r w)^T M (a + r w)
    add_block(&mut q, (n, n), &(&m * (0.5 * r * r)));
    add_block(&mut q, (n, 2 * n), &(&m * (0.5 * r)));
    add_block(&mut q, (2 * n, n), &(&m * (0.5 * r)));
    add_block(&mut q, (2 * n, 2 * n), &(&m * 0.5));
    // r/2 w^T Mg w
    add_block(&mut q, (n, n), &(&mg * (0.5 * r)));
    q
}

/// Constants (lower, upper) with lower |Y|^2 <= E(Y) <= upper |Y|^2 for the
/// phase-space norm |Y|^2 = u^T K~ u + u_t^T K~ u_t + u_tt^T M u_tt.
pub fn norm_equivalence_constants(sys: &MgtSystem) -> Result<(f64, f64)> {
    let n = sys.dim();
    let kt = to_dense(&sys.ops.ktilde);
    let m = to_dense(&sys.ops.mass);
    let mut h = DMatrix::zeros(3 * n, 3 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&kt);
    h.view_mut((n, n), (n, n)).copy_from(&kt);
    h.view_mut((2 * n, 2 * n), (n, n)).copy_from(&m);
    let (vals, _) = generalized_symmetric_eigen(&energy_form(sys), &h)?;
    Ok((vals[0], *vals.last().unwrap()))
}

/// E evaluated directly from the quadratic form (used in tests).
pub fn energy_from_form(q: &DMatrix<f64>, y: &[f64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(y);
    (v.transpose() * q * &v)[(0, 0)]
}

/// M-weighted inner product helper.
pub fn mass_inner(sys: &MgtSystem, a: &[f64], b: &[f64]) -> f64 {
    crate::linalg::dot(a, &spmv(&sys.ops.mass, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{MaterialParams, Mesh};
    use crate::dynamics::{simulate, NoSource, SimulationOptions, StateU};
    use crate::geometry::{Geometry, Tag};

    fn sys(alpha: f64, kappa1: f64, n: usize) -> MgtSystem {
        let g = Geometry::interval(0.0, 1.0, Tag::Gamma0, Tag::Gamma1, 0.0).unwrap();
        let mesh = Mesh::interval(&g, n).unwrap();
        MgtSystem::new(mesh, MaterialParams::constant(1.0, 1.0, 1.0, alpha, 1.0, kappa1)).unwrap()
    }

    #[test]
    fn fit_recovers_exponential() {
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let e: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let f = decay_fit(&t, &e, 0.5).unwrap();
        assert!((f.omega - 0.7).abs() < 1e-12);
        assert!((f.m - 1.0).abs() < 1e-10);
        assert!(f.fit_residual < 1e-12);
    }

    #[test]
    fn fit_rejects_zero_energy() {
        let t = vec![0.0, 1.0, 2.0, 3.0];
        assert!(decay_fit(&t, &[0.0; 4], 0.5).is_err());
    }

    #[test]
    fn gamma_negative_flags_e1() {
        let s = sys(0.5, 0.1, 8);
        let y = StateZ::zeros(s.dim());
        let e = energy_sample(&s, &y, 0.0, &NoSource);
        assert!(e.e1.is_nan());
        assert!(!e.e.is_nan());
    }

    #[test]
    fn form_matches_sampled_energy() {
        let s = sys(1.4, 0.5, 6);
        let n = s.dim();
        let mut st = StateU::zeros(n);
        for i in 0..n {
            st.u[i] = (i as f64).sin();
            st.u_t[i] = (i as f64 * 0.7).cos();
            st.u_tt[i] = 0.1 * i as f64;
        }
        let e = energy_sample(&s, &st.to_z(s.r), 0.0, &NoSource);
        let mut y = st.u.clone();
        y.extend(&st.u_t);
        y.extend(&st.u_tt);
        let q = energy_form(&s);
        assert!((energy_from_form(&q, &y) - e.e).abs() < 1e-12 * e.e);
        let (lo, hi) = norm_equivalence_constants(&s).unwrap();
        assert!(lo > 0.0 && hi >= lo);
    }

    #[test]
    fn undamped_constant_energy_midpoint() {
        let s = sys(1.0, 0.0, 32);
        let mut ic = StateU::zeros(s.dim());
        for (i, p) in s.mesh.nodes.iter().enumerate() {
            ic.u_tt[i] = (std::f64::consts::PI * p.x).cos();
        }
        let t = simulate(&s, &ic, &NoSource, &SimulationOptions::new(5.0, 0.01)).unwrap();
        let e10 = t.samples[0].e1;
        for x in &t.samples {
            assert!((x.e1 - e10).abs() <= 1e-11 * e10);
        }
    }
}
