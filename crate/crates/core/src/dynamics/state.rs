/// Physical state (u, u_t, u_tt).
#[derive(Debug, Clone, PartialEq)]
pub struct StateU {
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    pub u_tt: Vec<f64>,
}

/// Auxiliary state (u, z, z_t) with z = u_t + r u.
#[derive(Debug, Clone, PartialEq)]
pub struct StateZ {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub z_t: Vec<f64>,
}

impl StateU {
    pub fn zeros(n: usize) -> Self {
        Self { u: vec![0.0; n], u_t: vec![0.0; n], u_tt: vec![0.0; n] }
    }

    /// z = u_t + r u, z_t = u_tt + r u_t.
    pub fn to_z(&self, r: f64) -> StateZ {
        StateZ {
            u: self.u.clone(),
            z: self.u_t.iter().zip(&self.u).map(|(ut, u)| ut + r * u).collect(),
            z_t: self.u_tt.iter().zip(&self.u_t).map(|(utt, ut)| utt + r * ut).collect(),
        }
    }
}

impl StateZ {
    pub fn zeros(n: usize) -> Self {
        Self { u: vec![0.0; n], z: vec![0.0; n], z_t: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn u_t(&self, r: f64) -> Vec<f64> {
        self.z.iter().zip(&self.u).map(|(z, u)| z - r * u).collect()
    }

    pub fn u_tt(&self, r: f64) -> Vec<f64> {
        self.z_t
            .iter()
            .zip(&self.z)
            .zip(&self.u)
            .map(|((v, z), u)| v - r * z + r * r * u)
            .collect()
    }

    pub fn to_u(&self, r: f64) -> StateU {
        StateU { u: self.u.clone(), u_t: self.u_t(r), u_tt: self.u_tt(r) }
    }

    /// Stacked (u, z, z_t).
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.len());
        v.extend_from_slice(&self.u);
        v.extend_from_slice(&self.z);
        v.extend_from_slice(&self.z_t);
        v
    }

    pub fn from_slice(y: &[f64]) -> Self {
        let n = y.len() / 3;
        Self { u: y[..n].to_vec(), z: y[n..2 * n].to_vec(), z_t: y[2 * n..].to_vec() }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.z).chain(&self.z_t).all(|v| v.is_finite())
    }

    /// a x + b y componentwise.
    pub fn combine(a: f64, x: &StateZ, b: f64, y: &StateZ) -> StateZ {
        let f = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(s, t)| a * s + b * t).collect();
        StateZ { u: f(&x.u, &y.u), z: f(&x.z, &y.z), z_t: f(&x.z_t, &y.z_t) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn roundtrip(u in prop::collection::vec(-10.0f64..10.0, 3),
                     ut in prop::collection::vec(-10.0f64..10.0, 3),
                     utt in prop::collection::vec(-10.0f64..10.0, 3),
                     r in 0.01f64..5.0) {
            let s = StateU { u, u_t: ut, u_tt: utt };
            let back = s.to_z(r).to_u(r);
            for (a, b) in s.u_tt.iter().zip(&back.u_tt) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()) * (1.0 + r * r));
            }
            for (a, b) in s.u_t.iter().zip(&back.u_t) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()) * (1.0 + r));
            }
        }
    }
}
