use super::config::*;
use crate::discretization::{MaterialParams, Profile, SpatialField};
use crate::dynamics::Scheme;
use crate::error::{Error, Result};
use crate::geometry::Tag;

pub const PRESETS: [&str; 6] = [
    "interval-1d-conserved",
    "interval-1d-damped",
    "interval-1d-unstable",
    "transducer-2d",
    "half-disk-2d",
    "unit-square",
];

fn bump(center: [f64; 2], width: f64) -> InitialSpec {
    InitialSpec {
        u0: InitialField::default(),
        u1: InitialField::default(),
        u2: InitialField::Field(SpatialField::Profile(Profile::Gaussian {
            offset: 0.0,
            amplitude: 1.0,
            center,
            width,
        })),
    }
}

fn interval(resolution: usize) -> (GeometrySpec, MeshSpec) {
    (
        GeometrySpec::Interval { left: 0.0, right: 1.0, left_tag: Tag::Gamma0, right_tag: Tag::Gamma1, x0: 0.0 },
        MeshSpec { resolution },
    )
}

fn base(name: &str, geometry: GeometrySpec, mesh: MeshSpec, material: MaterialParams, time: TimeSpec) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        seed: 0,
        geometry,
        mesh,
        material,
        initial: bump([0.5, 0.0], 0.15),
        source: None,
        time,
        analysis: AnalysisSpec::default(),
        output: OutputSpec::default(),
    }
}

/// Initial data are zero except for u_tt, so the boundary compatibility
/// conditions hold exactly in every preset.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let time = |t_final, dt, output_stride| TimeSpec { t_final, dt, output_stride, scheme: Scheme::Midpoint };
    let cfg = match name {
        // gamma = 0 and no boundary feedback: E1 is conserved
        "interval-1d-conserved" => {
            let (g, m) = interval(128);
            base(name, g, m, MaterialParams::constant(1.0, 1.0, 1.0, 1.0, 1.0, 0.0), time(10.0, 1e-3, 100))
        }
        // r = 0.1 and gamma = 0.3: the real mode near -r controls the decay
        "interval-1d-damped" => {
            let (g, m) = interval(64);
            base(name, g, m, MaterialParams::constant(1.0, 0.1f64.sqrt(), 1.0, 0.4, 1.0, 0.5), time(60.0, 0.01, 10))
        }
        // gamma = -0.5
        "interval-1d-unstable" => {
            let (g, m) = interval(64);
            let mut c = base(name, g, m, MaterialParams::constant(1.0, 1.0, 1.0, 0.5, 1.0, 0.1), time(30.0, 0.01, 10));
            c.analysis.multipliers = false;
            c
        }
        // convex Gamma0 cap, absorbing Gamma1, gamma = 0
        "transducer-2d" => {
            let g = GeometrySpec::Transducer {
                radius: 1.0,
                inner_radius: 0.3,
                half_angle_deg: 30.0,
                arc_segments: 12,
                radial_segments: 8,
                x0: [2.0, 0.0],
            };
            base(name, g, MeshSpec { resolution: 1 }, MaterialParams::constant(1.0, 1.0, 1.0, 1.0, 1.0, 1.0), time(30.0, 0.01, 10))
        }
        // flat Gamma0 along the diameter, observed from below
        "half-disk-2d" => {
            let g = GeometrySpec::HalfDisk {
                radius: 1.0,
                arc_segments: 16,
                diameter_segments: 4,
                diameter_tag: Tag::Gamma0,
                x0: [0.0, -1.0],
            };
            let mut c = base(name, g, MeshSpec { resolution: 4 }, MaterialParams::constant(1.0, 1.0, 1.0, 1.2, 1.0, 1.0), time(20.0, 0.01, 10));
            c.initial = bump([0.0, 0.5], 0.2);
            c
        }
        "unit-square" => {
            let g = GeometrySpec::UnitSquare {
                tags: [Tag::Gamma0, Tag::Gamma1, Tag::Gamma1, Tag::Gamma1],
                x0: [0.5, -1.0],
            };
            let mut c = base(name, g, MeshSpec { resolution: 16 }, MaterialParams::constant(1.0, 1.0, 1.0, 1.1, 1.0, 1.0), time(20.0, 0.01, 10));
            c.initial = bump([0.5, 0.5], 0.15);
            c
        }
        _ => {
            return Err(Error::Config(format!("unknown preset {name:?}; known: {}", PRESETS.join(", "))));
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_roundtrip_through_toml() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            assert_eq!(ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c, "{name}");
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn preset_gamma_signs() {
        let g = |n: &str| {
            let m = preset(n).unwrap().material;
            m.gamma(Default::default())
        };
        assert_eq!(g("interval-1d-conserved"), 0.0);
        assert!((g("interval-1d-unstable") + 0.5).abs() < 1e-15);
        assert_eq!(g("transducer-2d"), 0.0);
        assert!(g("interval-1d-damped") > 0.0);
    }
}
