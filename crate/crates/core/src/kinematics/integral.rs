//! Monte-Carlo kinematic integrals `∫_G μ(P₁ ∩ gP₂) dg`.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::region::{constraints_of, measure_region};
use crate::bodies::spherical::intersect_measures;
use crate::bodies::{Body, Constraint, PlanarBody, RegionMeasures};
use crate::error::{Error, Result};
use crate::valuations::{InvariantValuation, Space};

use super::group::{sample_group, GroupElement, GroupSpace, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub batch: usize,
    pub seed: u64,
    /// Sub-stream of the seed, so that different integrals use independent draws.
    pub stream: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 100_000, batch: 1_000, seed: 1, stream: 0 }
    }
}

/// Estimates of `∫ φ_k(P₁ ∩ gP₂) dg` for the three basis valuations from one set of draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisIntegrals {
    pub estimate: [f64; 3],
    pub stderr: [f64; 3],
    pub samples: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Planar bodies rotate about the origin; the window holds every translation for
/// which `P₁ ∩ gP₂` can be nonempty.
pub fn se2_window(p1: &PlanarBody, p2: &PlanarBody) -> Window {
    let (lo, hi) = p1.bbox();
    let (lo2, hi2) = p2.bbox();
    let reach = [lo2, hi2, [lo2[0], hi2[1]], [hi2[0], lo2[1]]]
        .iter()
        .map(|p| p[0].hypot(p[1]))
        .fold(0.0, f64::max);
    Window { lo: [lo[0] - reach, lo[1] - reach], hi: [hi[0] + reach, hi[1] + reach] }
}

enum Setup {
    Sphere(crate::bodies::SphericalBody, crate::bodies::SphericalBody),
    Plane(Vec<Constraint>, Vec<Constraint>),
}

fn draw(setup: &Setup, g: &GroupElement) -> Result<RegionMeasures> {
    match (setup, g) {
        (Setup::Sphere(a, b), GroupElement::So3 { m, .. }) => intersect_measures(a, &b.rotated(m)),
        (Setup::Plane(a, b), GroupElement::Se2 { shift, angle }) => {
            let mut cs = a.clone();
            cs.extend(b.iter().map(|c| c.transformed(*angle, *shift)));
            measure_region(&cs)
        }
        _ => unreachable!("group matches the space by construction"),
    }
}

/// Basis values of a region on `space`.
pub fn basis_of(space: Space, m: &RegionMeasures) -> [f64; 3] {
    InvariantValuation::basis_values(space, m)
}

/// Per-batch sums of the basis values, with accepted and rejected counts.
pub struct Batches {
    space: Space,
    scale: f64,
    sums: Vec<([f64; 3], usize, usize)>,
}

impl Batches {
    pub fn rejected(&self) -> usize {
        self.sums.iter().map(|b| b.2).sum()
    }

    pub fn accepted(&self) -> usize {
        self.sums.iter().map(|b| b.1).sum()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    /// Estimate and standard error of `∫ Σ_k a_k φ_k(P₁ ∩ gP₂) dg`, from the spread of batch means.
    pub fn combine(&self, a: &[f64; 3]) -> (f64, f64) {
        let value = |s: &[f64; 3]| (0..3).map(|k| a[k] * s[k]).sum::<f64>();
        let total = self.accepted().max(1) as f64;
        let mean = self.sums.iter().map(|b| value(&b.0)).sum::<f64>() / total;
        let means: Vec<f64> = self.sums.iter().filter(|b| b.1 > 0).map(|b| value(&b.0) / b.1 as f64).collect();
        let nb = means.len() as f64;
        let var = if means.len() > 1 {
            means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (nb - 1.0) / nb
        } else {
            0.0
        };
        (self.scale * mean, self.scale * var.sqrt())
    }
}

/// Draws `cfg.samples` group elements in batches of `cfg.batch`. Batch `b` uses its own
/// ChaCha stream, so results do not depend on the number of worker threads.
pub fn run_batches(p1: &Body, p2: &Body, cfg: &McConfig) -> Result<Batches> {
    if cfg.samples == 0 || cfg.batch == 0 {
        return Err(Error::SamplingDegeneracy { rejected: 0, total: 0 });
    }
    let (space, setup, group, scale) = match (p1, p2) {
        (Body::Spherical(a), Body::Spherical(b)) => {
            (Space::Sphere, Setup::Sphere(a.clone(), b.clone()), GroupSpace::So3, 1.0)
        }
        (Body::Planar(a), Body::Planar(b)) => {
            let w = se2_window(a, b);
            (Space::Plane, Setup::Plane(constraints_of(a)?, constraints_of(b)?), GroupSpace::Se2(w), w.measure())
        }
        _ => return Err(Error::InvalidBody("kinematic integral of bodies on different spaces".into())),
    };
    let nb = cfg.samples.div_ceil(cfg.batch);
    let sums = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream((cfg.stream << 32) ^ b as u64);
            let n = cfg.batch.min(cfg.samples - b * cfg.batch);
            let mut sum = [0.0; 3];
            let mut ok = 0;
            for _ in 0..n {
                let g = sample_group(&group, &mut rng);
                match draw(&setup, &g) {
                    Ok(m) => {
                        let v = basis_of(space, &m);
                        for k in 0..3 {
                            sum[k] += v[k];
                        }
                        ok += 1;
                    }
                    Err(e) => warn!("rejected draw {g:?}: {e}"),
                }
            }
            (sum, ok, n - ok)
        })
        .collect();
    let out = Batches { space, scale, sums };
    let rejected = out.rejected();
    if rejected * 100 > cfg.samples {
        return Err(Error::SamplingDegeneracy { rejected, total: cfg.samples });
    }
    Ok(out)
}

/// `∫_G φ_k(P₁ ∩ gP₂) dg` for all three basis valuations. On S², `dg` is the Haar
/// probability; on ℝ², `dx dy dθ` over [`se2_window`].
pub fn mc_basis_integrals(p1: &Body, p2: &Body, cfg: &McConfig) -> Result<BasisIntegrals> {
    let b = run_batches(p1, p2, cfg)?;
    let mut estimate = [0.0; 3];
    let mut stderr = [0.0; 3];
    for k in 0..3 {
        let mut e = [0.0; 3];
        e[k] = 1.0;
        (estimate[k], stderr[k]) = b.combine(&e);
    }
    Ok(BasisIntegrals { estimate, stderr, samples: b.accepted(), rejected: b.rejected() })
}

/// `∫_G μ(P₁ ∩ gP₂) dg` for an invariant valuation `μ`.
pub fn mc_kinematic_integral(mu: &InvariantValuation, p1: &Body, p2: &Body, cfg: &McConfig) -> Result<Estimate> {
    let b = run_batches(p1, p2, cfg)?;
    if mu.space != b.space() {
        return Err(Error::InvalidBody(format!("valuation on {:?}, bodies on {:?}", mu.space, b.space())));
    }
    let (estimate, stderr) = b.combine(&mu.coords);
    Ok(Estimate { estimate, stderr, samples: b.accepted() })
}
