use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Closed-form spatial coefficient. A bare number in a config file is a
/// constant; tables select a named profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpatialField {
    Constant(f64),
    Profile(Profile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    /// value + gradient . x
    Linear { value: f64, gradient: [f64; 2] },
    /// offset + amplitude exp(-|x - center|^2 / width^2)
    Gaussian { offset: f64, amplitude: f64, center: [f64; 2], width: f64 },
    /// offset + amplitude cos(k . x)
    Cosine { offset: f64, amplitude: f64, wavenumber: [f64; 2] },
}

impl SpatialField {
    pub fn constant(v: f64) -> Self {
        SpatialField::Constant(v)
    }

    pub fn eval(&self, x: Point) -> f64 {
        match self {
            SpatialField::Constant(v) => *v,
            SpatialField::Profile(p) => match p {
                Profile::Linear { value, gradient } => value + gradient[0] * x.x + gradient[1] * x.y,
                Profile::Gaussian { offset, amplitude, center, width } => {
                    let d2 = (x.x - center[0]).powi(2) + (x.y - center[1]).powi(2);
                    offset + amplitude * (-d2 / (width * width)).exp()
                }
                Profile::Cosine { offset, amplitude, wavenumber } => {
                    offset + amplitude * (wavenumber[0] * x.x + wavenumber[1] * x.y).cos()
                }
            },
        }
    }

    /// Gradient of the profile.
    pub fn gradient(&self, x: Point) -> Point {
        match self {
            SpatialField::Constant(_) => Point::zeros(),
            SpatialField::Profile(p) => match p {
                Profile::Linear { gradient, .. } => Point::new(gradient[0], gradient[1]),
                Profile::Gaussian { amplitude, center, width, .. } => {
                    let d = x - Point::new(center[0], center[1]);
                    let e = (-d.norm_squared() / (width * width)).exp();
                    d * (-2.0 * amplitude * e / (width * width))
                }
                Profile::Cosine { amplitude, wavenumber, .. } => {
                    let k = Point::new(wavenumber[0], wavenumber[1]);
                    k * (-amplitude * k.dot(&x).sin())
                }
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SpatialField::Constant(_))
    }

    /// The same field plus a constant.
    pub fn shifted(&self, delta: f64) -> Self {
        match self.clone() {
            SpatialField::Constant(v) => SpatialField::Constant(v + delta),
            SpatialField::Profile(p) => SpatialField::Profile(match p {
                Profile::Linear { value, gradient } => Profile::Linear { value: value + delta, gradient },
                Profile::Gaussian { offset, amplitude, center, width } => {
                    Profile::Gaussian { offset: offset + delta, amplitude, center, width }
                }
                Profile::Cosine { offset, amplitude, wavenumber } => {
                    Profile::Cosine { offset: offset + delta, amplitude, wavenumber }
                }
            }),
        }
    }
}

/// Physical coefficients of the MGT model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub tau: f64,
    pub c: f64,
    pub b: f64,
    pub alpha: SpatialField,
    pub kappa0: SpatialField,
    pub kappa1: SpatialField,
}

impl MaterialParams {
    pub fn constant(tau: f64, c: f64, b: f64, alpha: f64, kappa0: f64, kappa1: f64) -> Self {
        Self {
            tau,
            c,
            b,
            alpha: SpatialField::Constant(alpha),
            kappa0: SpatialField::Constant(kappa0),
            kappa1: SpatialField::Constant(kappa1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau", self.tau), ("c", self.c), ("b", self.b)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Params(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// r = c^2 / b
    pub fn ratio(&self) -> f64 {
        self.c * self.c / self.b
    }

    /// gamma(x) = alpha(x) - tau c^2 / b
    pub fn gamma(&self, x: Point) -> f64 {
        self.alpha.eval(x) - self.tau * self.ratio()
    }

    /// Alpha giving gamma = 0.
    pub fn critical_alpha(tau: f64, c: f64, b: f64) -> f64 {
        tau * c * c / b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_parse() {
        #[derive(Deserialize)]
        struct W {
            a: SpatialField,
            g: SpatialField,
        }
        let w: W = toml::from_str(
            "a = 1.5\ng = { profile = \"gaussian\", offset = 0.0, amplitude = 2.0, center = [0.5, 0.0], width = 0.1 }",
        )
        .unwrap();
        assert_eq!(w.a.eval(Point::zeros()), 1.5);
        assert!((w.g.eval(Point::new(0.5, 0.0)) - 2.0).abs() < 1e-15);
        let bad: std::result::Result<W, _> =
            toml::from_str("a = 1\ng = { profile = \"linear\", value = 1.0, gradient = [0, 0], extra = 1 }");
        assert!(bad.is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let f = SpatialField::Profile(Profile::Gaussian {
            offset: 0.3,
            amplitude: 1.2,
            center: [0.2, -0.1],
            width: 0.4,
        });
        let x = Point::new(0.35, 0.1);
        let h = 1e-6;
        let fd = Point::new(
            (f.eval(x + Point::new(h, 0.0)) - f.eval(x - Point::new(h, 0.0))) / (2.0 * h),
            (f.eval(x + Point::new(0.0, h)) - f.eval(x - Point::new(0.0, h))) / (2.0 * h),
        );
        assert!((fd - f.gradient(x)).norm() < 1e-8);
    }

    #[test]
    fn gamma_zero_at_critical_alpha() {
        let a = MaterialParams::critical_alpha(0.5, 2.0, 3.0);
        let p = MaterialParams::constant(0.5, 2.0, 3.0, a, 1.0, 1.0);
        assert!(p.gamma(Point::zeros()).abs() < 1e-15);
    }
}
