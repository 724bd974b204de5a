use log::warn;

use super::compat::{check_compatibility, CompatibilityReport};
use super::source::SourceTerm;
use super::state::{StateU, StateZ};
use super::stepper::{Scheme, Stepper};
use super::system::MgtSystem;
use crate::energy::{dissipation_rate, energy_sample, EnergySample};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub t_final: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// Record every `output_stride`-th step (the final step is always recorded).
    pub output_stride: usize,
    pub store_states: bool,
    pub compat_tol: f64,
}

impl SimulationOptions {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self { t_final, dt, scheme: Scheme::Midpoint, output_stride: 1, store_states: false, compat_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub scheme: Scheme,
    /// Step actually used (t_final divided into whole steps).
    pub dt: f64,
    pub steps: usize,
    pub samples: Vec<EnergySample>,
    /// States at the sample times when requested.
    pub states: Vec<StateZ>,
    pub compatibility: CompatibilityReport,
    pub e1_defined: bool,
    pub e0_defined: bool,
    pub forced: bool,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn final_state(&self) -> Option<&StateZ> {
        self.states.last()
    }
}

pub fn simulate(
    sys: &MgtSystem,
    initial: &StateU,
    src: &dyn SourceTerm,
    opts: &SimulationOptions,
) -> Result<Trajectory> {
    let n = sys.dim();
    if initial.u.len() != n || initial.u_t.len() != n || initial.u_tt.len() != n {
        return Err(Error::InvalidArgument(format!("initial data must have {n} nodal values")));
    }
    if !(opts.t_final >= 0.0 && opts.t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid final time {}", opts.t_final)));
    }
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {}", opts.dt)));
    }
    let stride = opts.output_stride.max(1);
    let ratio = opts.t_final / opts.dt;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let dt = if steps > 0 { opts.t_final / steps as f64 } else { opts.dt };

    let compat = check_compatibility(
        &sys.mesh,
        &sys.ops.kappa0_nodal,
        &sys.ops.kappa1_nodal,
        &initial.u,
        &initial.u_t,
        opts.compat_tol,
    );
    if !compat.compatible {
        warn!(
            "initial data violate the boundary compatibility conditions (Gamma0 {:e}, Gamma1 {:e})",
            compat.gamma0_residual, compat.gamma1_residual
        );
    }

    let mut y = initial.to_z(sys.r);
    if !y.is_finite() {
        return Err(Error::NonFinite { time: 0.0 });
    }
    let mut samples = vec![energy_sample(sys, &y, 0.0, src)];
    let mut states = Vec::new();
    if opts.store_states {
        states.push(y.clone());
    }
    let mut stepper = Stepper::new(sys, opts.scheme, dt)?;
    let mut rate = dissipation_rate(sys, &y, 0.0, src);
    let mut dissipated = 0.0;
    for k in 0..steps {
        let t = k as f64 * dt;
        y = stepper.step(&y, t, src);
        let t1 = (k + 1) as f64 * dt;
        if !y.is_finite() {
            return Err(Error::NonFinite { time: t1 });
        }
        let next = dissipation_rate(sys, &y, t1, src);
        dissipated += 0.5 * dt * (rate + next);
        rate = next;
        if (k + 1) % stride == 0 || k + 1 == steps {
            let mut s = energy_sample(sys, &y, t1, src);
            s.dissipated = dissipated;
            samples.push(s);
            if opts.store_states {
                states.push(y.clone());
            }
        }
    }
    Ok(Trajectory {
        scheme: opts.scheme,
        dt,
        steps,
        samples,
        states,
        compatibility: compat,
        e1_defined: sys.ops.gamma_nonnegative(),
        e0_defined: sys.ops.alpha_nonnegative(),
        forced: !src.is_zero(),
    })
}

/// Recover u from samples of z = u_t + r u by integrating u_t = -r u + z
/// exactly for the exponential part and with the trapezoid rule for z.
pub fn reconstruct_u(times: &[f64], z: &[Vec<f64>], u0: &[f64], r: f64) -> Result<Vec<Vec<f64>>> {
    if times.len() != z.len() || times.is_empty() {
        return Err(Error::InvalidArgument("need one z sample per time".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    out.push(u0.to_vec());
    for k in 1..times.len() {
        let d = times[k] - times[k - 1];
        let e = (-r * d).exp();
        let prev = &out[k - 1];
        let next: Vec<f64> = prev
            .iter()
            .zip(&z[k - 1])
            .zip(&z[k])
            .map(|((u, za), zb)| e * u + 0.5 * d * (e * za + zb))
            .collect();
        out.push(next);
    }
    Ok(out)
}
