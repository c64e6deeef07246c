//! The normal cycle of a transversal intersection assembled from the two normal cycles.
//!
//! For transversal polygons `P₁, P₂` the current
//! `GT(q₁^*N(P₁) ∩ q₂^*N(P₂)) + π^*P₁ ∩ N(P₂) + N(P₁) ∩ π^*P₂`
//! consists of new corner arcs over the boundary crossings plus the parts of each
//! normal cycle lying over the other body.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::boolean::{crossings, Crossing};
use crate::bodies::normal_cycle::corner_arc;
use crate::bodies::planar::wrap_angle;
use crate::bodies::{
    is_transversal, BoundaryPiece, CycleCurve, CyclePiece, NormalCycle, PlanarBody, TransversalityTol,
    P2,
};
use crate::contact::plane;
use crate::error::{Error, Result};
use crate::forms::DifferentialForm;
use crate::quadrature::QuadConfig;

/// A point of `q₁^*N(P₁) ∩ q₂^*N(P₂)`: a boundary crossing with both outward normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoint {
    pub x: P2,
    pub theta1: f64,
    pub theta2: f64,
    pub weight: i32,
}

pub type WeightedPointSet = Vec<WeightedPoint>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    GtArc,
    RestrictedN1,
    RestrictedN2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaggedPiece {
    pub piece: CyclePiece,
    pub provenance: Provenance,
}

/// A normal-cycle-like current whose pieces remember which term produced them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCurrent {
    pub pieces: Vec<TaggedPiece>,
}

impl PiecewiseCurrent {
    pub fn as_cycle(&self) -> NormalCycle {
        NormalCycle::new(self.pieces.iter().map(|p| p.piece).collect())
    }

    pub fn count(&self, tag: Provenance) -> usize {
        self.pieces.iter().filter(|p| p.provenance == tag).count()
    }

    pub fn is_closed(&self) -> bool {
        self.as_cycle().is_closed()
    }

    pub fn integrate(&self, omega: &DifferentialForm, cfg: &QuadConfig) -> Result<f64> {
        self.as_cycle().integrate(omega, cfg)
    }
}

impl From<NormalCycle> for PiecewiseCurrent {
    fn from(n: NormalCycle) -> Self {
        Self {
            pieces: n.pieces.into_iter().map(|piece| TaggedPiece { piece, provenance: Provenance::RestrictedN1 }).collect(),
        }
    }
}

fn ensure_transversal(p1: &PlanarBody, p2: &PlanarBody) -> Result<()> {
    let report = is_transversal(p1, p2, &TransversalityTol::default())?;
    if !report.transversal {
        return Err(Error::NotTransversal(report.violations.join("; ")));
    }
    Ok(())
}

fn crossing_point(p1: &PlanarBody, p2: &PlanarBody, c: &Crossing) -> WeightedPoint {
    let theta1 = p1.pieces()[c.edge1].normal_angle(c.s1);
    let theta2 = p2.pieces()[c.edge2].normal_angle(c.s2);
    // det of the edge tangents (normals turned by +π/2)
    let det = (theta2 - theta1).sin();
    WeightedPoint { x: c.point, theta1, theta2, weight: if det > 0.0 { 1 } else { -1 } }
}

/// One entry per boundary crossing of transversal polygons.
pub fn fiber_intersection(p1: &PlanarBody, p2: &PlanarBody) -> Result<WeightedPointSet> {
    ensure_transversal(p1, p2)?;
    Ok(crossings(p1, p2)?.iter().map(|c| crossing_point(p1, p2, c)).collect())
}

/// The fiber arc over `x` running along the minor arc `θ₁ → θ₂`, with multiplicity `w`.
pub fn gt_arcs(pts: &[WeightedPoint]) -> Result<Vec<CyclePiece>> {
    pts.iter()
        .map(|p| {
            let delta = wrap_angle(p.theta2 - p.theta1);
            if (delta.abs() - PI).abs() < 1e-12 {
                return Err(Error::AntipodalCrossing { point: p.x });
            }
            let (curve, sign) = if delta >= 0.0 {
                (CycleCurve::FiberArc { point: p.x, theta0: p.theta1, sweep: delta }, 1)
            } else {
                (CycleCurve::FiberArc { point: p.x, theta0: p.theta2, sweep: -delta }, -1)
            };
            Ok(CyclePiece { curve, sign, multiplicity: p.weight })
        })
        .collect()
}

/// Pieces of `N(own)` lying over `other`; edges are split at the crossing parameters `cuts[edge]`.
fn restricted(own: &PlanarBody, other: &PlanarBody, cuts: &[Vec<f64>], tag: Provenance) -> Vec<TaggedPiece> {
    let mut out = Vec::new();
    let verts = own.vertices();
    for (i, piece) in own.pieces().iter().enumerate() {
        if let Some(v) = verts.get(i) {
            if other.contains(v.point) {
                let piece = corner_arc(v.point, v.theta_in, v.jump);
                out.push(TaggedPiece { piece, provenance: tag });
            }
        }
        let mut params = vec![0.0];
        params.extend(cuts[i].iter().copied());
        params.push(1.0);
        for w in params.windows(2) {
            let sub: BoundaryPiece = piece.restrict(w[0], w[1]);
            if other.contains(sub.point(0.5)) {
                out.push(TaggedPiece { piece: CyclePiece::new(CycleCurve::Lift(sub), 1), provenance: tag });
            }
        }
    }
    out
}

/// `GT(q₁^*N(P₁) ∩ q₂^*N(P₂)) + π^*P₁ ∩ N(P₂) + N(P₁) ∩ π^*P₂`.
pub fn three_term_product(p1: &PlanarBody, p2: &PlanarBody) -> Result<PiecewiseCurrent> {
    ensure_transversal(p1, p2)?;
    let xs = crossings(p1, p2)?;
    let pts: Vec<WeightedPoint> = xs.iter().map(|c| crossing_point(p1, p2, c)).collect();
    let mut pieces: Vec<TaggedPiece> =
        gt_arcs(&pts)?.into_iter().map(|piece| TaggedPiece { piece, provenance: Provenance::GtArc }).collect();

    let mut cuts1 = vec![Vec::new(); p1.pieces().len()];
    let mut cuts2 = vec![Vec::new(); p2.pieces().len()];
    for c in &xs {
        cuts1[c.edge1].push(c.s1);
        cuts2[c.edge2].push(c.s2);
    }
    for c in cuts1.iter_mut().chain(cuts2.iter_mut()) {
        c.sort_by(f64::total_cmp);
    }
    pieces.extend(restricted(p2, p1, &cuts2, Provenance::RestrictedN2));
    pieces.extend(restricted(p1, p2, &cuts1, Provenance::RestrictedN1));
    Ok(PiecewiseCurrent { pieces })
}

/// A random 1-form on `S*ℝ²` with coefficients
/// `(quadratic in x, y) × (trigonometric polynomial of degree 2 in θ)`.
pub fn random_test_form(rng: &mut ChaCha8Rng) -> DifferentialForm {
    let mut coef = [[[0.0; 5]; 6]; 3];
    for c in coef.iter_mut() {
        for row in c.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
    }
    DifferentialForm::new(&plane().chart, 1, move |p| {
        let (x, y, t) = (p[0], p[1], p[2]);
        let mono = [1.0, x, y, x * x, x * y, y * y];
        let trig = [1.0, t.cos(), t.sin(), (2.0 * t).cos(), (2.0 * t).sin()];
        Ok(coef
            .iter()
            .map(|c| {
                let mut s = 0.0;
                for (m, row) in mono.iter().zip(c) {
                    for (g, v) in trig.iter().zip(row) {
                        s += m * g * v;
                    }
                }
                s
            })
            .collect())
    })
}

/// `max |A(ω) − B(ω)| / (1 + |B(ω)|)` over `k` seeded random test forms.
pub fn compare_currents(a: &NormalCycle, b: &NormalCycle, k: usize, seed: u64, cfg: &QuadConfig) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..k {
        let w = random_test_form(&mut rng);
        let (va, vb) = (a.integrate(&w, cfg)?, b.integrate(&w, cfg)?);
        worst = worst.max((va - vb).abs() / (1.0 + vb.abs()));
    }
    Ok(worst)
}

/// A random convex polygon: `n` sorted angles on an ellipse, rotated and shifted.
pub fn random_convex_polygon(rng: &mut ChaCha8Rng, n: usize) -> Result<PlanarBody> {
    let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let (a, b) = (rng.gen_range(0.6..1.4), rng.gen_range(0.6..1.4));
    let rot = rng.gen_range(0.0..TAU);
    let shift = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    let pts: Vec<P2> = angles
        .iter()
        .map(|t| {
            let (x, y) = (a * t.cos(), b * t.sin());
            [rot.cos() * x - rot.sin() * y + shift[0], rot.sin() * x + rot.cos() * y + shift[1]]
        })
        .collect();
    PlanarBody::polygon(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_arc_from_one_crossing() {
        let pts = [WeightedPoint { x: [0.0, 0.0], theta1: 0.0, theta2: PI / 2.0, weight: 1 }];
        let arcs = gt_arcs(&pts).unwrap();
        assert_eq!(arcs.len(), 1);
        match arcs[0].curve {
            CycleCurve::FiberArc { sweep, .. } => assert!((sweep - PI / 2.0).abs() < 1e-15),
            _ => panic!("expected a fiber arc"),
        }
        assert!(gt_arcs(&[]).unwrap().is_empty());
        let rev = gt_arcs(&[WeightedPoint { weight: -1, ..pts[0] }]).unwrap();
        assert_eq!(rev[0].weight(), -1.0);
        let anti = [WeightedPoint { x: [0.0, 0.0], theta1: 0.0, theta2: PI, weight: 1 }];
        assert!(matches!(gt_arcs(&anti), Err(Error::AntipodalCrossing { .. })));
    }
}
