//! Normal cycles as oriented piecewise-parametrized 1-currents in `S*ℝ²`.

use std::cell::Cell;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::planar::{dist, BoundaryPiece, PlanarBody, P2};
use crate::error::{Error, Result};
use crate::forms::DifferentialForm;
use crate::quadrature::{integrate, integrate_unit_square, QuadConfig, Vals};

/// A curve `[0, 1] → S*ℝ²` with coordinates `(x, y, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CycleCurve {
    /// A boundary piece lifted by its outward normal.
    Lift(BoundaryPiece),
    /// The fiber over `point`, θ running from `theta0` to `theta0 + sweep` (`sweep > 0`).
    FiberArc { point: P2, theta0: f64, sweep: f64 },
}

impl CycleCurve {
    pub fn point(&self, s: f64) -> [f64; 3] {
        match *self {
            CycleCurve::Lift(p) => {
                let q = p.point(s);
                [q[0], q[1], p.normal_angle(s)]
            }
            CycleCurve::FiberArc { point, theta0, sweep } => [point[0], point[1], theta0 + s * sweep],
        }
    }

    pub fn velocity(&self, s: f64) -> [f64; 3] {
        match *self {
            CycleCurve::Lift(p) => {
                let v = p.velocity(s);
                [v[0], v[1], p.normal_rate()]
            }
            CycleCurve::FiberArc { sweep, .. } => [0.0, 0.0, sweep],
        }
    }

    /// Base projection of the velocity.
    fn base_velocity(&self, s: f64) -> P2 {
        let v = self.velocity(s);
        [v[0], v[1]]
    }
}

/// A weighted oriented piece of a normal cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclePiece {
    pub curve: CycleCurve,
    /// Orientation relative to the curve parametrization: `+1` or `−1`.
    pub sign: i32,
    pub multiplicity: i32,
}

impl CyclePiece {
    pub fn new(curve: CycleCurve, sign: i32) -> Self {
        Self { curve, sign, multiplicity: 1 }
    }

    pub fn weight(&self) -> f64 {
        (self.sign * self.multiplicity) as f64
    }

    /// `∫` of a 1-form on `S*ℝ²` along the piece, without the weight.
    pub fn integrate_raw(&self, omega: &DifferentialForm, cfg: &QuadConfig) -> Result<f64> {
        if omega.is_zero() {
            return Ok(0.0);
        }
        let r = integrate(
            |s| {
                let p = self.curve.point(s);
                let v = self.curve.velocity(s);
                let mut out = Vals::new();
                out.push(omega.eval(&p, &[&v])?);
                Ok(out)
            },
            0.0,
            1.0,
            cfg,
        )?;
        Ok(r.value[0])
    }
}

/// An oriented 1-current given as a list of weighted pieces.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormalCycle {
    pub pieces: Vec<CyclePiece>,
}

/// Vertex fiber arc from the incoming to the outgoing normal; negatively oriented at reflex corners.
pub fn corner_arc(point: P2, theta_in: f64, jump: f64) -> CyclePiece {
    if jump >= 0.0 {
        CyclePiece::new(CycleCurve::FiberArc { point, theta0: theta_in, sweep: jump }, 1)
    } else {
        CyclePiece::new(CycleCurve::FiberArc { point, theta0: theta_in + jump, sweep: -jump }, -1)
    }
}

impl NormalCycle {
    pub fn new(pieces: Vec<CyclePiece>) -> Self {
        Self { pieces }
    }

    /// Normal cycle of a single point: the full fiber circle.
    pub fn of_point(p: P2) -> Self {
        Self::new(vec![CyclePiece::new(CycleCurve::FiberArc { point: p, theta0: 0.0, sweep: TAU }, 1)])
    }

    /// Normal cycle of the segment `[a, b]`: both edge lifts and two half circles.
    pub fn of_segment(a: P2, b: P2) -> Result<Self> {
        if dist(a, b) < 1e-12 {
            return Err(Error::DegenerateBody("segment of zero length".into()));
        }
        let fwd = BoundaryPiece::Segment { start: a, end: b };
        let back = BoundaryPiece::Segment { start: b, end: a };
        let t = fwd.normal_angle(0.0);
        Ok(Self::new(vec![
            CyclePiece::new(CycleCurve::Lift(fwd), 1),
            CyclePiece::new(CycleCurve::FiberArc { point: b, theta0: t, sweep: PI }, 1),
            CyclePiece::new(CycleCurve::Lift(back), 1),
            CyclePiece::new(CycleCurve::FiberArc { point: a, theta0: t + PI, sweep: PI }, 1),
        ]))
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// The same current with the opposite orientation.
    pub fn reversed(&self) -> Self {
        Self::new(self.pieces.iter().map(|p| CyclePiece { sign: -p.sign, ..*p }).collect())
    }

    /// `∫_N ω` for a 1-form on `S*ℝ²`.
    pub fn integrate(&self, omega: &DifferentialForm, cfg: &QuadConfig) -> Result<f64> {
        let mut total = 0.0;
        for p in &self.pieces {
            total += p.weight() * p.integrate_raw(omega, cfg)?;
        }
        Ok(total)
    }

    /// `∫_N π^*ω` for a 1-form on the base.
    pub fn integrate_base(&self, omega: &DifferentialForm, cfg: &QuadConfig) -> Result<f64> {
        let mut total = 0.0;
        for p in &self.pieces {
            if let CycleCurve::Lift(_) = p.curve {
                let r = integrate(
                    |s| {
                        let q = p.curve.point(s);
                        let v = p.curve.base_velocity(s);
                        let mut out = Vals::new();
                        out.push(omega.eval(&q[..2], &[&v])?);
                        Ok(out)
                    },
                    0.0,
                    1.0,
                    cfg,
                )?;
                total += p.weight() * r.value[0];
            }
        }
        Ok(total)
    }

    /// Total weight left over after cancelling piece endpoints (`θ` compared mod 2π).
    /// Zero for a closed current.
    pub fn boundary_defect(&self, tol: f64) -> f64 {
        let mut events: Vec<([f64; 3], f64)> = Vec::with_capacity(2 * self.pieces.len());
        for p in &self.pieces {
            events.push((p.curve.point(1.0), p.weight()));
            events.push((p.curve.point(0.0), -p.weight()));
        }
        let same = |a: &[f64; 3], b: &[f64; 3]| {
            (a[0] - b[0]).abs() < tol && (a[1] - b[1]).abs() < tol && {
                let d = (a[2] - b[2]).rem_euclid(TAU);
                d.min(TAU - d) < tol
            }
        };
        let mut used = vec![false; events.len()];
        let mut defect: f64 = 0.0;
        for i in 0..events.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let mut w = events[i].1;
            for j in i + 1..events.len() {
                if !used[j] && same(&events[i].0, &events[j].0) {
                    used[j] = true;
                    w += events[j].1;
                }
            }
            defect += w.abs();
        }
        defect
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_defect(1e-9) < 0.5
    }

    /// Sup of `|α(c')|` over `samples` points per piece.
    pub fn legendrian_residual(&self, samples: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for p in &self.pieces {
            for k in 0..=samples {
                let s = k as f64 / samples.max(1) as f64;
                let q = p.curve.point(s);
                let v = p.curve.velocity(s);
                worst = worst.max((q[2].cos() * v[0] + q[2].sin() * v[1]).abs());
            }
        }
        worst
    }
}

/// The normal cycle of a body: corner arcs followed by edge lifts, in boundary order.
pub fn normal_cycle(body: &PlanarBody) -> NormalCycle {
    let mut pieces = Vec::with_capacity(2 * body.pieces().len());
    let verts = body.vertices();
    for (i, piece) in body.pieces().iter().enumerate() {
        if let Some(v) = verts.get(i) {
            pieces.push(corner_arc(v.point, v.theta_in, v.jump));
        }
        pieces.push(CyclePiece::new(CycleCurve::Lift(*piece), 1));
    }
    NormalCycle::new(pieces)
}

/// `∫_N ω` for the normal cycle of `body`.
pub fn integrate_over_cycle(n: &NormalCycle, omega: &DifferentialForm, cfg: &QuadConfig) -> Result<f64> {
    n.integrate(omega, cfg)
}

/// `∫_{∂P} ω` for a 1-form on the base, directly from the boundary pieces.
pub fn integrate_over_boundary(body: &PlanarBody, omega: &DifferentialForm, cfg: &QuadConfig) -> Result<f64> {
    let mut total = 0.0;
    for piece in body.pieces() {
        let r = integrate(
            |s| {
                let q = piece.point(s);
                let v = piece.velocity(s);
                let mut out = Vals::new();
                out.push(omega.eval(&q, &[&v])?);
                Ok(out)
            },
            0.0,
            1.0,
            cfg,
        )?;
        total += r.value[0];
    }
    Ok(total)
}

/// `∫_P φ` for a 2-form on the base.
///
/// Fan from the vertex centroid: each boundary piece `c` sweeps the cone
/// `o + t (c(s) − o)` with Jacobian `t · det(c(s) − o, c'(s))`. Signed cells make this
/// exact for non-star-shaped bodies as well.
pub fn integrate_density(body: &PlanarBody, phi: &DifferentialForm, cfg: &QuadConfig) -> Result<f64> {
    if phi.degree() != 2 {
        return Err(Error::DegreeError(format!("density must be a 2-form, got degree {}", phi.degree())));
    }
    if phi.is_zero() {
        return Ok(0.0);
    }
    let pts: Vec<P2> = body.pieces().iter().map(|p| p.start()).collect();
    let o = if body.pieces().len() == 1 {
        match body.pieces()[0] {
            BoundaryPiece::Arc { center, .. } => center,
            BoundaryPiece::Segment { start, .. } => start,
        }
    } else {
        let n = pts.len() as f64;
        [pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n]
    };
    let counter = Cell::new(0);
    let mut total = 0.0;
    for piece in body.pieces() {
        let r = integrate_unit_square(
            |s, t| {
                let c = piece.point(s);
                let dc = piece.velocity(s);
                let rel = [c[0] - o[0], c[1] - o[1]];
                let jac = t * (rel[0] * dc[1] - rel[1] * dc[0]);
                let q = [o[0] + t * rel[0], o[1] + t * rel[1]];
                let mut out = Vals::new();
                out.push(phi.coeffs_at(&q)?[0] * jac);
                Ok(out)
            },
            cfg,
            &counter,
        )?;
        total += r.value[0];
    }
    Ok(total)
}
