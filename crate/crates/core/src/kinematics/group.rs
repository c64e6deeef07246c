//! Haar-distributed elements of SO(3) and windowed SE(2).

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bodies::spherical::Mat3;
use crate::bodies::P2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GroupElement {
    /// Unit quaternion `(w, x, y, z)` and its rotation matrix.
    So3 { q: [f64; 4], m: Mat3 },
    /// `x ↦ R(angle) x + shift`.
    Se2 { shift: P2, angle: f64 },
}

/// Translation window `[lo, hi]` for SE(2); the measure is `dx dy dθ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: P2,
    pub hi: P2,
}

impl Window {
    pub fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    /// Total `dx dy dθ` measure.
    pub fn measure(&self) -> f64 {
        self.area() * TAU
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GroupSpace {
    So3,
    Se2(Window),
}

pub fn quaternion_matrix(q: &[f64; 4]) -> Mat3 {
    let [w, x, y, z] = *q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Normalized 4-dimensional standard Gaussian.
pub fn sample_so3<R: Rng + ?Sized>(rng: &mut R) -> GroupElement {
    loop {
        let v: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            let q = [v[0] / n, v[1] / n, v[2] / n, v[3] / n];
            return GroupElement::So3 { q, m: quaternion_matrix(&q) };
        }
    }
}

pub fn sample_se2<R: Rng + ?Sized>(rng: &mut R, w: &Window) -> GroupElement {
    let shift = [rng.gen_range(w.lo[0]..w.hi[0]), rng.gen_range(w.lo[1]..w.hi[1])];
    GroupElement::Se2 { shift, angle: rng.gen_range(0.0..TAU) }
}

pub fn sample_group<R: Rng + ?Sized>(space: &GroupSpace, rng: &mut R) -> GroupElement {
    match space {
        GroupSpace::So3 => sample_so3(rng),
        GroupSpace::Se2(w) => sample_se2(rng, w),
    }
}

impl GroupElement {
    /// `max |q| − 1` and `max |MᵀM − I|`; zero for SE(2).
    pub fn defects(&self) -> (f64, f64) {
        match self {
            GroupElement::So3 { q, m } => {
                let qn = (q.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs();
                let mut orth: f64 = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let s: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                        orth = orth.max((s - if i == j { 1.0 } else { 0.0 }).abs());
                    }
                }
                (qn, orth)
            }
            GroupElement::Se2 { .. } => (0.0, 0.0),
        }
    }
}
