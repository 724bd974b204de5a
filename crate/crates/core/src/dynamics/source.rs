use serde::{Deserialize, Serialize};

use crate::discretization::SpatialField;
use crate::geometry::Point;

/// Right-hand side f(t, x) of the MGT equation.
pub trait SourceTerm: Send + Sync {
    fn eval(&self, t: f64, x: Point) -> f64;

    /// True when f vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }

    fn nodal(&self, t: f64, nodes: &[Point]) -> Vec<f64> {
        nodes.iter().map(|x| self.eval(t, *x)).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoSource;

impl SourceTerm for NoSource {
    fn eval(&self, _t: f64, _x: Point) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// Time profile of a separable source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Temporal {
    Constant,
    /// sin(omega t + phase)
    Sine { omega: f64, phase: f64 },
    /// exp(-((t - center) / width)^2)
    Pulse { center: f64, width: f64 },
}

impl Temporal {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Temporal::Constant => 1.0,
            Temporal::Sine { omega, phase } => (omega * t + phase).sin(),
            Temporal::Pulse { center, width } => (-((t - center) / width).powi(2)).exp(),
        }
    }
}

/// f(t, x) = g(x) T(t)
#[derive(Debug, Clone)]
pub struct SeparableSource {
    pub spatial: SpatialField,
    pub temporal: Temporal,
}

impl SourceTerm for SeparableSource {
    fn eval(&self, t: f64, x: Point) -> f64 {
        self.spatial.eval(x) * self.temporal.eval(t)
    }
}

/// Source from a closure.
pub struct FnSource<F>(pub F);

impl<F: Fn(f64, Point) -> f64 + Send + Sync> SourceTerm for FnSource<F> {
    fn eval(&self, t: f64, x: Point) -> f64 {
        (self.0)(t, x)
    }
}
