use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{GeometrySpec, InitialField, ScenarioConfig};
use crate::discretization::export::{elements_csv, facets_csv, matrix_triplets, nodes_csv};
use crate::discretization::{Mesh, NeumannMap};
use crate::dynamics::{
    reconstruct_u, simulate, MgtSystem, NoSource, SeparableSource, SimulationOptions, SourceTerm, StateU, Trajectory,
};
use crate::energy::{summarize, trajectory_csv};
use crate::error::{Error, Result};
use crate::geometry::{
    build_vector_field_h, convexity_check, star_shaped_check, Dim, FieldOptions, Geometry, Point, VectorFieldH,
};
use crate::multiplier::{
    hgradz_residual, reconstruction_diagnostic, zdivh_residual, zmul_residual, ConvergenceStudy, IdentityReport,
    Rule, TrigField, Window, DEFAULT_DELTA,
};
use crate::spectral::{abscissa_vs_decay, compute_spectrum, Spectrum, SpectrumOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Spectrum,
    CertifyGeometry,
    MultiplierCheck,
    Full,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Spectrum => "spectrum",
            Command::CertifyGeometry => "certify-geometry",
            Command::MultiplierCheck => "multiplier-check",
            Command::Full => "full",
        }
    }
}

/// Writes artifacts atomically and stamps JSON ones with the config hash.
pub struct ArtifactWriter {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hash, written: Vec::new() })
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, content)?;
        fs::rename(&tmp, &path)?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, mut value: Value) -> Result<()> {
        if let Value::Object(m) = &mut value {
            m.insert("config_hash".into(), Value::String(self.hash.clone()));
        }
        let mut s = serde_json::to_string_pretty(&value)?;
        s.push('\n');
        self.text(name, &s)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

/// Geometry and mesh, with the mesh refined by `factor`.
pub fn build_domain(cfg: &ScenarioConfig, factor: usize) -> Result<(Geometry, Mesh)> {
    let res = cfg.mesh.resolution * factor;
    match &cfg.geometry {
        GeometrySpec::Interval { left, right, left_tag, right_tag, x0 } => {
            let g = Geometry::interval(*left, *right, *left_tag, *right_tag, *x0)?;
            let m = Mesh::generate(&g, res)?;
            Ok((g, m))
        }
        GeometrySpec::Transducer { radius, inner_radius, half_angle_deg, arc_segments, radial_segments, x0 } => {
            let g = Geometry::annular_sector(
                *radius,
                *inner_radius,
                half_angle_deg.to_radians(),
                arc_segments * factor,
                radial_segments * factor,
                point(*x0),
            )?;
            let m = Mesh::generate(&g, 1)?;
            Ok((g, m))
        }
        other => {
            let g = match other {
                GeometrySpec::HalfDisk { radius, arc_segments, diameter_segments, diameter_tag, x0 } => {
                    Geometry::half_disk(*radius, *arc_segments, *diameter_segments, *diameter_tag, point(*x0))?
                }
                GeometrySpec::UnitSquare { tags, x0 } => Geometry::rectangle((0.0, 1.0), (0.0, 1.0), *tags, point(*x0))?,
                GeometrySpec::Polygon { vertices, tags, x0 } => {
                    Geometry::polygon(vertices.iter().map(|v| point(*v)).collect(), tags.clone(), point(*x0))?
                }
                _ => unreachable!(),
            };
            let m = Mesh::generate(&g, res)?;
            Ok((g, m))
        }
    }
}

/// Domain whose mesh size does not exceed `h`.
fn certification_domain(cfg: &ScenarioConfig, h: f64) -> Result<(Geometry, Mesh)> {
    if let GeometrySpec::Transducer { .. } = cfg.geometry {
        let mut k = 1;
        loop {
            let (g, m) = build_domain(cfg, k)?;
            if m.mesh_size() <= h * (1.0 + 1e-12) {
                return Ok((g, m));
            }
            if k > 4096 {
                return Err(Error::Mesh("cannot reach the certification mesh size".into()));
            }
            k += 1;
        }
    }
    let (g, _) = build_domain(cfg, 1)?;
    let m = Mesh::with_max_size(&g, h)?;
    Ok((g, m))
}

fn nodal(field: &InitialField, mesh: &Mesh) -> Result<Vec<f64>> {
    match field {
        InitialField::Field(f) => Ok(mesh.nodes.iter().map(|x| f.eval(*x)).collect()),
        InitialField::File { file } => {
            let text = fs::read_to_string(file)
                .map_err(|e| Error::Config(format!("cannot read initial data {}: {e}", file.display())))?;
            let v: Vec<f64> = text
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Config(format!("{}: {e}", file.display())))?;
            if v.len() != mesh.node_count() {
                return Err(Error::Config(format!(
                    "{} holds {} values, the mesh has {} nodes",
                    file.display(),
                    v.len(),
                    mesh.node_count()
                )));
            }
            Ok(v)
        }
    }
}

pub fn initial_state(cfg: &ScenarioConfig, mesh: &Mesh) -> Result<StateU> {
    Ok(StateU {
        u: nodal(&cfg.initial.u0, mesh)?,
        u_t: nodal(&cfg.initial.u1, mesh)?,
        u_tt: nodal(&cfg.initial.u2, mesh)?,
    })
}

pub fn source(cfg: &ScenarioConfig) -> Box<dyn SourceTerm> {
    match &cfg.source {
        Some(s) => Box::new(SeparableSource { spatial: s.spatial.clone(), temporal: s.temporal.clone() }),
        None => Box::new(NoSource),
    }
}

/// Simulation of the configured scenario with states stored at every sample.
pub fn simulate_scenario(cfg: &ScenarioConfig, mesh: Mesh) -> Result<(MgtSystem, Trajectory)> {
    let ic = initial_state(cfg, &mesh)?;
    let sys = MgtSystem::new(mesh, cfg.material.clone())?;
    let mut opts = SimulationOptions::new(cfg.time.t_final, cfg.time.dt);
    opts.scheme = cfg.time.scheme;
    opts.output_stride = cfg.time.output_stride;
    opts.store_states = true;
    let src = source(cfg);
    let traj = simulate(&sys, &ic, src.as_ref(), &opts)?;
    Ok((sys, traj))
}

fn max_e1_drift(traj: &Trajectory) -> Option<f64> {
    let e = traj.samples.first()?.e1;
    if !traj.e1_defined || !(e > 0.0) {
        return None;
    }
    Some(traj.samples.iter().map(|s| (s.e1 - e).abs() / e).fold(0.0, f64::max))
}

fn reconstruction_error(sys: &MgtSystem, traj: &Trajectory) -> Result<f64> {
    let z: Vec<Vec<f64>> = traj.states.iter().map(|s| s.z.clone()).collect();
    let u = reconstruct_u(&traj.times(), &z, &traj.states[0].u, sys.r)?;
    Ok(u.iter()
        .zip(&traj.states)
        .flat_map(|(a, s)| a.iter().zip(&s.u).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max))
}

fn mesh_info(mesh: &Mesh) -> Value {
    json!({
        "nodes": mesh.node_count(),
        "elements": mesh.element_count(),
        "facets": mesh.facets.len(),
        "mesh_size": mesh.mesh_size(),
    })
}

fn simulation_summary(cfg: &ScenarioConfig, sys: &MgtSystem, traj: &Trajectory) -> Result<Value> {
    let summary = summarize(traj, cfg.analysis.tail_fraction);
    let energy = serde_json::to_value(&summary)?;
    let energy = if cfg.analysis.decay_fit {
        energy
    } else {
        let mut e = energy;
        for k in ["omega", "M", "fit_residual"] {
            e[k] = Value::Null;
        }
        e
    };
    Ok(json!({
        "name": cfg.name,
        "mesh": mesh_info(&sys.mesh),
        "time": {
            "t_final": cfg.time.t_final,
            "dt": traj.dt,
            "steps": traj.steps,
            "scheme": traj.scheme,
            "samples": traj.samples.len(),
        },
        "compatibility": traj.compatibility,
        "energy": energy,
        "e1_max_relative_drift": max_e1_drift(traj),
        "u_reconstruction_max_error": reconstruction_error(sys, traj)?,
    }))
}

fn spectrum_value(sp: &Spectrum, sys: &MgtSystem) -> Result<Value> {
    let gamma: Vec<f64> = sys.ops.gamma_nodal.clone();
    let mut v = serde_json::to_value(sp)?;
    v["gamma_min"] = json!(gamma.iter().cloned().fold(f64::INFINITY, f64::min));
    v["gamma_max"] = json!(gamma.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    Ok(v)
}

fn spectrum_csv(sp: &Spectrum) -> String {
    let mut s = String::from("re,im\n");
    for z in &sp.eigenvalues {
        s.push_str(&format!("{:.15e},{:.15e}\n", z.re, z.im));
    }
    s
}

#[derive(Debug, Serialize)]
struct Certification {
    star_shaped: Value,
    convexity: Value,
    mesh: Value,
    c0: Option<f64>,
    max_normal_trace: Option<f64>,
    field: Option<crate::geometry::FieldReport>,
    certified: bool,
    failure: Option<String>,
}

fn field_options(cfg: &ScenarioConfig) -> FieldOptions {
    FieldOptions { collar_width: cfg.analysis.collar_width, ..FieldOptions::default() }
}

/// Star-shape, convexity and field certification at the configured mesh size.
fn certify(cfg: &ScenarioConfig) -> Result<(Certification, Option<Error>)> {
    let (geom, mesh) = certification_domain(cfg, cfg.analysis.certify_mesh_size)?;
    let tol = field_options(cfg).geometry_tol;
    let star = star_shaped_check(&geom, tol);
    let star_v = json!({ "holds": star.holds, "max_violation": finite_or_null(star.max_value) });
    let convex = convexity_check(&geom, tol);
    let convex_v = match &convex {
        Ok(c) => json!({ "convex": c.convex, "min_turn": c.min_turn }),
        Err(e) => json!({ "convex": false, "error": e.to_string() }),
    };
    let mut cert = Certification {
        star_shaped: star_v,
        convexity: convex_v,
        mesh: mesh_info(&mesh),
        c0: None,
        max_normal_trace: None,
        field: None,
        certified: false,
        failure: None,
    };
    let field = match convex {
        Err(e) => Err(e),
        Ok(_) => build_vector_field_h(&geom, &mesh, &field_options(cfg)),
    };
    let err = match field {
        Ok(h) => {
            cert.c0 = Some(h.report.certified_c0);
            cert.max_normal_trace = Some(h.report.max_normal_trace);
            cert.certified = h.is_certified();
            cert.field = Some(h.report.clone());
            if cert.certified {
                None
            } else {
                Some(Error::Certification(format!(
                    "c0 = {:.3e}, max |h.nu| on Gamma0 = {:.3e}",
                    h.report.certified_c0, h.report.max_normal_trace
                )))
            }
        }
        Err(e) => Some(e),
    };
    cert.failure = err.as_ref().map(|e| e.to_string());
    Ok((cert, err))
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn manufactured(cfg: &ScenarioConfig, dim: Dim) -> TrigField {
    let m = &cfg.material;
    let (k, p) = match dim {
        Dim::One => ([3.1, 0.0], [0.4, 0.0]),
        Dim::Two => ([2.3, 1.7], [0.4, 0.3]),
    };
    TrigField {
        b: m.b / m.tau,
        amplitude: 1.0,
        k,
        p,
        omega: 1.3,
        phase: 0.2,
        gamma: m.alpha.shifted(-m.tau * m.c * m.c / m.b),
    }
}

fn identity_levels(cfg: &ScenarioConfig) -> Result<Value> {
    let mut studies: Vec<(&str, Vec<(f64, IdentityReport)>)> = vec![("hgradz", vec![]), ("zdivh", vec![]), ("zmul", vec![])];
    let mut gamma0_max: f64 = 0.0;
    for factor in [1, 2, 4] {
        let (geom, mesh) = build_domain(cfg, factor)?;
        let h: VectorFieldH = build_vector_field_h(&geom, &mesh, &field_options(cfg))?;
        let field = manufactured(cfg, mesh.dim);
        let nt = 8 * factor * cfg.mesh.resolution.max(2);
        let w = Window::new(0.1, 1.1, nt, Rule::Midpoint)?;
        let a = hgradz_residual(&field, &mesh, &h, &w, Rule::Midpoint)?;
        gamma0_max = gamma0_max.max(a.term("rhs:gamma0_trace").unwrap_or(0.0).abs());
        let b = zdivh_residual(&field, &mesh, &h, &w, Rule::Midpoint);
        let c = zmul_residual(&field, &mesh, &cfg.material.kappa0, &cfg.material.kappa1, &w, Rule::Midpoint);
        let hs = mesh.mesh_size();
        for (s, r) in studies.iter_mut().zip([a, b, c]) {
            s.1.push((hs, r));
        }
    }
    let mut out = serde_json::Map::new();
    for (name, levels) in studies {
        let pairs: Vec<(f64, f64)> = levels.iter().map(|(h, r)| (*h, r.residual)).collect();
        let slope = ConvergenceStudy::from_pairs(pairs).ok().map(|s| s.slope);
        out.insert(
            name.into(),
            json!({
                "levels": levels.iter().map(|(h, r)| json!({
                    "mesh_size": h, "lhs": r.lhs, "rhs": r.rhs, "residual": r.residual, "relative": r.relative(),
                })).collect::<Vec<_>>(),
                "slope": slope,
            }),
        );
    }
    out.insert("gamma0_annihilation".into(), json!(gamma0_max));
    Ok(Value::Object(out))
}

fn neumann_adjoint(cfg: &ScenarioConfig, sys: &MgtSystem) -> Value {
    let map = match NeumannMap::new(&sys.ops) {
        Ok(m) => m,
        Err(e) => return json!({ "error": e.to_string() }),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = sys.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.analysis.adjoint_pairs {
        let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        worst = worst.max(map.adjoint_identity_residual(&phi, &xi));
    }
    json!({ "pairs": cfg.analysis.adjoint_pairs, "seed": cfg.seed, "max_residual": worst })
}

fn multiplier_report(cfg: &ScenarioConfig, sys: &MgtSystem, traj: &Trajectory) -> Result<Value> {
    let identities = identity_levels(cfg)?;
    let src = source(cfg);
    let recon = match reconstruction_diagnostic(sys, traj, src.as_ref(), cfg.analysis.reconstruction_margin, DEFAULT_DELTA) {
        Ok(r) => serde_json::to_value(r)?,
        Err(e @ (Error::Precondition(_) | Error::InvalidArgument(_))) => json!({ "skipped": e.to_string() }),
        Err(e) => return Err(e),
    };
    Ok(json!({
        "identities": identities,
        "neumann_adjoint": neumann_adjoint(cfg, sys),
        "reconstruction": recon,
    }))
}

fn export(cfg: &ScenarioConfig, sys: &MgtSystem, w: &mut ArtifactWriter) -> Result<()> {
    if cfg.output.export_mesh {
        w.text("nodes.csv", &nodes_csv(&sys.mesh))?;
        w.text("elements.csv", &elements_csv(&sys.mesh))?;
        w.text("facets.csv", &facets_csv(&sys.mesh))?;
    }
    if cfg.output.export_operators {
        let o = &sys.ops;
        for (name, m) in [
            ("mass", &o.mass),
            ("stiffness", &o.stiffness),
            ("b0", &o.b0),
            ("b1", &o.b1),
            ("ktilde", &o.ktilde),
            ("mass_alpha", &o.mass_alpha),
            ("mass_gamma", &o.mass_gamma),
        ] {
            w.text(&format!("{name}.txt"), &matrix_triplets(m))?;
        }
    }
    Ok(())
}

fn final_state_csv(sys: &MgtSystem, traj: &Trajectory) -> String {
    let mut s = String::from("x,y,u,u_t,u_tt\n");
    if let Some(y) = traj.final_state() {
        let u = y.to_u(sys.r);
        for (i, x) in sys.mesh.nodes.iter().enumerate() {
            s.push_str(&format!("{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n", x.x, x.y, u.u[i], u.u_t[i], u.u_tt[i]));
        }
    }
    s
}

/// Runs one subcommand and writes its artifacts into `out`.
pub fn run(cfg: &ScenarioConfig, cmd: Command, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let mut w = ArtifactWriter::new(out, cfg.hash())?;
    w.json("config.json", json!({ "command": cmd.name(), "config": cfg }))?;
    let spectrum_opts = SpectrumOptions { dense_cap: cfg.analysis.dense_cap, ..SpectrumOptions::default() };
    let wants = |c: Command| cmd == c || cmd == Command::Full;

    let mut certified_ok = true;
    if wants(Command::CertifyGeometry) {
        info!("certifying geometry");
        let (cert, err) = certify(cfg)?;
        w.json("geometry.json", serde_json::to_value(&cert)?)?;
        if let Some(e) = err {
            let fatal = cmd == Command::CertifyGeometry || cfg.analysis.multipliers;
            if fatal {
                return Err(e);
            }
            certified_ok = false;
        }
    }

    let needs_dynamics = cmd != Command::CertifyGeometry;
    if needs_dynamics {
        let (_, mesh) = build_domain(cfg, 1)?;
        if cmd == Command::Spectrum {
            let sys = MgtSystem::new(mesh, cfg.material.clone())?;
            let sp = compute_spectrum(&sys, &spectrum_opts)?;
            w.json("spectrum.json", spectrum_value(&sp, &sys)?)?;
            w.text("spectrum.csv", &spectrum_csv(&sp))?;
            export(cfg, &sys, &mut w)?;
            return Ok(w.written().to_vec());
        }
        info!("simulating {} steps", (cfg.time.t_final / cfg.time.dt).round());
        let (sys, traj) = simulate_scenario(cfg, mesh)?;
        let mut summary = simulation_summary(cfg, &sys, &traj)?;
        if cmd == Command::Full && cfg.analysis.spectrum {
            let sp = compute_spectrum(&sys, &spectrum_opts)?;
            let ratio = summary["energy"]["omega"].as_f64().map(|o| abscissa_vs_decay(sp.abscissa, o));
            summary["abscissa_vs_decay"] = json!(ratio);
            w.json("spectrum.json", spectrum_value(&sp, &sys)?)?;
            w.text("spectrum.csv", &spectrum_csv(&sp))?;
        }
        if cmd != Command::MultiplierCheck {
            w.text("energy.csv", &trajectory_csv(&traj.samples))?;
            w.text("final_state.csv", &final_state_csv(&sys, &traj))?;
            w.json("summary.json", summary)?;
            export(cfg, &sys, &mut w)?;
        }
        let run_multipliers = cmd == Command::MultiplierCheck || (cmd == Command::Full && cfg.analysis.multipliers);
        if run_multipliers && certified_ok {
            info!("checking multiplier identities");
            w.json("multiplier.json", multiplier_report(cfg, &sys, &traj)?)?;
        }
    }
    Ok(w.written().to_vec())
}

/// Machine-readable error record.
pub fn error_value(err: &Error, hash: Option<&str>) -> Value {
    json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
        "config_hash": hash,
    })
}
