use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::discretization::{MaterialParams, SpatialField};
use crate::dynamics::{Scheme, Temporal};
use crate::error::{Error, Result};
use crate::geometry::Tag;

pub const SCHEMA_VERSION: u32 = 1;

/// Full description of one run. Unknown keys are rejected everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    /// Seed for the randomized checks (Neumann-map adjoint pairs).
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub mesh: MeshSpec,
    pub material: MaterialParams,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default)]
    pub source: Option<SourceSpec>,
    pub time: TimeSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// (left, right) with one tag per endpoint.
    Interval {
        #[serde(default)]
        left: f64,
        #[serde(default = "one")]
        right: f64,
        #[serde(default = "gamma0")]
        left_tag: Tag,
        #[serde(default = "gamma1")]
        right_tag: Tag,
        x0: f64,
    },
    /// Upper half disk centred at the origin.
    HalfDisk {
        radius: f64,
        arc_segments: usize,
        diameter_segments: usize,
        diameter_tag: Tag,
        x0: [f64; 2],
    },
    /// Transducer cross-section: annular sector with the outer arc as Gamma0.
    Transducer {
        radius: f64,
        inner_radius: f64,
        half_angle_deg: f64,
        arc_segments: usize,
        radial_segments: usize,
        x0: [f64; 2],
    },
    /// [0, 1]^2 with tags listed as [bottom, right, top, left].
    UnitSquare { tags: [Tag; 4], x0: [f64; 2] },
    /// Closed polyline, counterclockwise, tag i on the edge from vertex i to i + 1.
    Polygon { vertices: Vec<[f64; 2]>, tags: Vec<Tag>, x0: [f64; 2] },
}

fn one() -> f64 {
    1.0
}
fn gamma0() -> Tag {
    Tag::Gamma0
}
fn gamma1() -> Tag {
    Tag::Gamma1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Elements on the interval, or subdivisions per boundary edge in 2D.
    /// Ignored by the transducer, whose segment counts set the grid.
    pub resolution: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self { resolution: 16 }
    }
}

/// Nodal initial values: a closed-form field or a file with one value per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialField {
    Field(SpatialField),
    File {
        file: PathBuf,
    },
}

impl Default for InitialField {
    fn default() -> Self {
        InitialField::Field(SpatialField::Constant(0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default)]
    pub u0: InitialField,
    #[serde(default)]
    pub u1: InitialField,
    #[serde(default)]
    pub u2: InitialField,
}

/// f(t, x) = spatial(x) temporal(t)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub spatial: SpatialField,
    pub temporal: Temporal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub t_final: f64,
    pub dt: f64,
    #[serde(default = "stride")]
    pub output_stride: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

fn stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSpec {
    pub spectrum: bool,
    pub multipliers: bool,
    pub decay_fit: bool,
    /// Fraction of the horizon used by the decay fit.
    pub tail_fraction: f64,
    /// Largest generator dimension solved densely; above it only the
    /// eigenvalues nearest the origin are computed.
    pub dense_cap: usize,
    pub collar_width: Option<f64>,
    /// Mesh size at which the transducer field is certified.
    pub certify_mesh_size: f64,
    /// Time margin s of the reconstruction window [s, T - s].
    pub reconstruction_margin: f64,
    /// Random Neumann-map adjoint pairs drawn in multiplier-check.
    pub adjoint_pairs: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            spectrum: true,
            multipliers: true,
            decay_fit: true,
            tail_fraction: 0.5,
            dense_cap: 6000,
            collar_width: None,
            certify_mesh_size: 1.0 / 64.0,
            reconstruction_margin: 0.1,
            adjoint_pairs: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Write nodes.csv, elements.csv and facets.csv.
    pub export_mesh: bool,
    /// Write the assembled matrices as triplet files.
    pub export_operators: bool,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file and resolves relative initial-data paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for f in [&mut cfg.initial.u0, &mut cfg.initial.u1, &mut cfg.initial.u2] {
            if let InitialField::File { file } = f {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.material.validate()?;
        let t = &self.time;
        if !(t.t_final > 0.0 && t.t_final.is_finite()) {
            return Err(Error::Config(format!("time.t_final must be positive, got {}", t.t_final)));
        }
        if !(t.dt > 0.0 && t.dt <= t.t_final) {
            return Err(Error::Config(format!("time.dt must lie in (0, t_final], got {}", t.dt)));
        }
        if t.output_stride == 0 {
            return Err(Error::Config("time.output_stride must be at least 1".into()));
        }
        if self.mesh.resolution == 0 {
            return Err(Error::Config("mesh.resolution must be at least 1".into()));
        }
        let a = &self.analysis;
        if !(a.tail_fraction > 0.0 && a.tail_fraction <= 1.0) {
            return Err(Error::Config("analysis.tail_fraction must lie in (0, 1]".into()));
        }
        if !(a.certify_mesh_size > 0.0) {
            return Err(Error::Config("analysis.certify_mesh_size must be positive".into()));
        }
        if !(a.reconstruction_margin >= 0.0 && 2.0 * a.reconstruction_margin < t.t_final) {
            return Err(Error::Config("analysis.reconstruction_margin must lie in [0, t_final / 2)".into()));
        }
        if let Some(w) = a.collar_width {
            if !(w > 0.0) {
                return Err(Error::Config("analysis.collar_width must be positive".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1
[geometry]
kind = "interval"
x0 = 0.0
[material]
tau = 1.0
c = 1.0
b = 1.0
alpha = 1.5
kappa0 = 1.0
kappa1 = { profile = "linear", value = 1.0, gradient = [0.5, 0.0] }
[time]
t_final = 1.0
dt = 0.01
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.mesh.resolution, 16);
        assert!(c.analysis.spectrum);
        assert_eq!(c.time.scheme, Scheme::Midpoint);
        let back = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("dt = 0.01", "dt = 0.01\nsteps = 4");
        assert!(matches!(ScenarioConfig::from_toml(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("x0 = 0.0", "x0 = 0.0\ncenter = 1");
        assert!(ScenarioConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn nonpositive_constants_rejected() {
        let bad = MINIMAL.replace("tau = 1.0", "tau = -1.0");
        assert_eq!(ScenarioConfig::from_toml(&bad).unwrap_err().exit_code(), 2);
        let bad = MINIMAL.replace("schema_version = 1", "schema_version = 7");
        assert_eq!(ScenarioConfig::from_toml(&bad).unwrap_err().exit_code(), 2);
    }
}
