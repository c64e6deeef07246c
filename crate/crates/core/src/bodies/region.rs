//! Intrinsic measures of planar regions cut out by half-planes and disks.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::planar::{dot, wrap_angle, BoundaryPiece, PlanarBody, P2};
use crate::error::{Error, Result};

/// Euler characteristic, boundary length and area of a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMeasures {
    pub chi: f64,
    pub perimeter: f64,
    pub area: f64,
}

impl RegionMeasures {
    pub const EMPTY: RegionMeasures = RegionMeasures { chi: 0.0, perimeter: 0.0, area: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Constraint {
    /// `⟨x, normal⟩ ≤ offset` with unit `normal`.
    HalfPlane { normal: P2, offset: f64 },
    Disk { center: P2, radius: f64 },
}

impl Constraint {
    fn slack(&self, x: P2) -> f64 {
        match *self {
            Constraint::HalfPlane { normal, offset } => offset - dot(x, normal),
            Constraint::Disk { center, radius } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                radius - dot(d, d).sqrt()
            }
        }
    }

    pub fn contains(&self, x: P2) -> bool {
        self.slack(x) >= 0.0
    }

    fn same(&self, other: &Constraint) -> bool {
        const E: f64 = 1e-13;
        match (*self, *other) {
            (Constraint::HalfPlane { normal: a, offset: p }, Constraint::HalfPlane { normal: b, offset: q }) => {
                (a[0] - b[0]).abs() < E && (a[1] - b[1]).abs() < E && (p - q).abs() < E
            }
            (Constraint::Disk { center: a, radius: p }, Constraint::Disk { center: b, radius: q }) => {
                (a[0] - b[0]).abs() < E && (a[1] - b[1]).abs() < E && (p - q).abs() < E
            }
            _ => false,
        }
    }

    /// The constraint moved by `x ↦ R(angle) x + shift`.
    pub fn transformed(&self, angle: f64, shift: P2) -> Constraint {
        let (c, s) = (angle.cos(), angle.sin());
        let rot = |p: P2| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
        match *self {
            Constraint::HalfPlane { normal, offset } => {
                let n = rot(normal);
                Constraint::HalfPlane { normal: n, offset: offset + dot(n, shift) }
            }
            Constraint::Disk { center, radius } => {
                let q = rot(center);
                Constraint::Disk { center: [q[0] + shift[0], q[1] + shift[1]], radius }
            }
        }
    }
}

/// Constraints describing a convex polygon or a disk.
pub fn constraints_of(body: &PlanarBody) -> Result<Vec<Constraint>> {
    if let [BoundaryPiece::Arc { center, radius, .. }] = body.pieces() {
        return Ok(vec![Constraint::Disk { center: *center, radius: *radius }]);
    }
    if !body.is_polygon() || !body.is_convex() {
        return Err(Error::InvalidBody("region constraints need a convex polygon or a disk".into()));
    }
    Ok(body
        .pieces()
        .iter()
        .map(|p| {
            let t = p.normal_angle(0.0);
            let normal = [t.cos(), t.sin()];
            Constraint::HalfPlane { normal, offset: dot(normal, p.start()) }
        })
        .collect())
}

enum Piece {
    Segment { a: P2, b: P2 },
    Arc { center: P2, radius: f64, t0: f64, t1: f64 },
}

impl Piece {
    fn start(&self) -> P2 {
        match *self {
            Piece::Segment { a, .. } => a,
            Piece::Arc { center, radius, t0, .. } => [center[0] + radius * t0.cos(), center[1] + radius * t0.sin()],
        }
    }
    fn end(&self) -> P2 {
        match *self {
            Piece::Segment { b, .. } => b,
            Piece::Arc { center, radius, t1, .. } => [center[0] + radius * t1.cos(), center[1] + radius * t1.sin()],
        }
    }
    fn tangent_angle(&self, at_end: bool) -> f64 {
        match *self {
            Piece::Segment { a, b } => (b[1] - a[1]).atan2(b[0] - a[0]),
            Piece::Arc { t0, t1, .. } => (if at_end { t1 } else { t0 }) + PI / 2.0,
        }
    }
}

const SLACK_TOL: f64 = 1e-12;

/// Parameter intervals of the circle `center + r u(t)` kept by all constraints but `skip`.
fn circle_arcs(center: P2, r: f64, cs: &[Constraint], skip: usize) -> Vec<(f64, f64)> {
    let mut breaks = Vec::new();
    for (j, c) in cs.iter().enumerate() {
        if j == skip {
            continue;
        }
        // Inside iff cos(t − φ) ≤ κ.
        let (phi, kappa) = match *c {
            Constraint::HalfPlane { normal, offset } => {
                (normal[1].atan2(normal[0]), (offset - dot(center, normal)) / r)
            }
            Constraint::Disk { center: cj, radius: rj } => {
                let d = [center[0] - cj[0], center[1] - cj[1]];
                let dn = dot(d, d).sqrt();
                if dn < 1e-14 {
                    continue;
                }
                (d[1].atan2(d[0]), (rj * rj - dn * dn - r * r) / (2.0 * r * dn))
            }
        };
        if kappa.abs() < 1.0 {
            let w = kappa.acos();
            breaks.push((phi - w).rem_euclid(TAU));
            breaks.push((phi + w).rem_euclid(TAU));
        }
    }
    let inside = |t: f64| {
        let x = [center[0] + r * t.cos(), center[1] + r * t.sin()];
        cs.iter().enumerate().all(|(j, c)| j == skip || c.slack(x) >= -SLACK_TOL)
    };
    if breaks.is_empty() {
        return if inside(0.0) { vec![(0.0, TAU)] } else { vec![] };
    }
    breaks.sort_by(f64::total_cmp);
    let n = breaks.len();
    let mut out = Vec::new();
    for k in 0..n {
        let t0 = breaks[k];
        let t1 = if k + 1 < n { breaks[k + 1] } else { breaks[0] + TAU };
        if t1 - t0 > 1e-13 && inside(0.5 * (t0 + t1)) {
            out.push((t0, t1));
        }
    }
    out
}

/// Parameter interval of the line `p0 + s·t` kept by all constraints but `skip`.
fn line_interval(p0: P2, t: P2, cs: &[Constraint], skip: usize) -> Result<Option<(f64, f64)>> {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (j, c) in cs.iter().enumerate() {
        if j == skip {
            continue;
        }
        match *c {
            Constraint::HalfPlane { normal, offset } => {
                let a = dot(t, normal);
                let b = offset - dot(p0, normal);
                if a.abs() < 1e-14 {
                    if b < -SLACK_TOL {
                        return Ok(None);
                    }
                } else if a > 0.0 {
                    hi = hi.min(b / a);
                } else {
                    lo = lo.max(b / a);
                }
            }
            Constraint::Disk { center, radius } => {
                let d = [p0[0] - center[0], p0[1] - center[1]];
                let bq = dot(t, d);
                let disc = bq * bq - (dot(d, d) - radius * radius);
                if disc <= 0.0 {
                    return Ok(None);
                }
                let sq = disc.sqrt();
                lo = lo.max(-bq - sq);
                hi = hi.min(-bq + sq);
            }
        }
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidBody("unbounded region".into()));
    }
    Ok(if hi - lo > 1e-13 { Some((lo, hi)) } else { None })
}

/// Measures of `⋂ cs`. Convex, so `χ` is 1 when nonempty; Gauss–Bonnet is checked.
pub fn measure_region(cs: &[Constraint]) -> Result<RegionMeasures> {
    let mut uniq: Vec<Constraint> = Vec::with_capacity(cs.len());
    for c in cs {
        if !uniq.iter().any(|u| u.same(c)) {
            uniq.push(*c);
        }
    }
    let mut pieces = Vec::new();
    for (i, c) in uniq.iter().enumerate() {
        match *c {
            Constraint::HalfPlane { normal, offset } => {
                let p0 = [normal[0] * offset, normal[1] * offset];
                let t = [-normal[1], normal[0]];
                if let Some((lo, hi)) = line_interval(p0, t, &uniq, i)? {
                    pieces.push(Piece::Segment {
                        a: [p0[0] + lo * t[0], p0[1] + lo * t[1]],
                        b: [p0[0] + hi * t[0], p0[1] + hi * t[1]],
                    });
                }
            }
            Constraint::Disk { center, radius } => {
                for (t0, t1) in circle_arcs(center, radius, &uniq, i) {
                    pieces.push(Piece::Arc { center, radius, t0, t1 });
                }
            }
        }
    }
    if pieces.is_empty() {
        return Ok(RegionMeasures::EMPTY);
    }
    let mut perimeter = 0.0;
    let mut area = 0.0;
    let mut turning = 0.0;
    for p in &pieces {
        match *p {
            Piece::Segment { a, b } => {
                perimeter += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                area += 0.5 * (a[0] * b[1] - a[1] * b[0]);
            }
            Piece::Arc { center, radius, t0, t1 } => {
                perimeter += radius * (t1 - t0);
                turning += t1 - t0;
                area += 0.5
                    * (radius * radius * (t1 - t0) + radius * center[0] * (t1.sin() - t0.sin())
                        - radius * center[1] * (t1.cos() - t0.cos()));
            }
        }
        let end = p.end();
        let next = pieces
            .iter()
            .min_by(|x, y| {
                let dx = (x.start()[0] - end[0]).hypot(x.start()[1] - end[1]);
                let dy = (y.start()[0] - end[0]).hypot(y.start()[1] - end[1]);
                dx.total_cmp(&dy)
            })
            .expect("pieces is nonempty");
        let gap = (next.start()[0] - end[0]).hypot(next.start()[1] - end[1]);
        if gap > 1e-7 * (1.0 + perimeter) {
            return Err(Error::DegenerateBody(format!("region boundary does not close (gap {gap:.3e})")));
        }
        turning += wrap_angle(next.tangent_angle(false) - p.tangent_angle(true));
    }
    if (turning - TAU).abs() > 1e-6 {
        return Err(Error::DegenerateBody(format!("total turning {turning} of a convex region")));
    }
    Ok(RegionMeasures { chi: 1.0, perimeter, area })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_and_disk() {
        let sq = PlanarBody::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let m = measure_region(&constraints_of(&sq).unwrap()).unwrap();
        assert!((m.area - 1.0).abs() < 1e-14 && (m.perimeter - 4.0).abs() < 1e-14 && m.chi == 1.0);
        let d = Constraint::Disk { center: [0.0, 0.0], radius: 1.0 };
        let md = measure_region(&[d]).unwrap();
        assert!((md.area - PI).abs() < 1e-14 && (md.perimeter - TAU).abs() < 1e-14);
    }

    #[test]
    fn half_disk() {
        let cs = [
            Constraint::Disk { center: [0.0, 0.0], radius: 1.0 },
            Constraint::HalfPlane { normal: [0.0, -1.0], offset: 0.0 },
        ];
        let m = measure_region(&cs).unwrap();
        assert!((m.area - PI / 2.0).abs() < 1e-13);
        assert!((m.perimeter - (PI + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn lens_of_two_disks() {
        let cs = [
            Constraint::Disk { center: [0.0, 0.0], radius: 1.0 },
            Constraint::Disk { center: [1.0, 0.0], radius: 1.0 },
        ];
        let m = measure_region(&cs).unwrap();
        let exact = 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((m.area - exact).abs() < 1e-13);
        assert!((m.perimeter - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn disjoint_is_empty() {
        let cs = [
            Constraint::Disk { center: [0.0, 0.0], radius: 1.0 },
            Constraint::Disk { center: [3.0, 0.0], radius: 1.0 },
        ];
        assert_eq!(measure_region(&cs).unwrap(), RegionMeasures::EMPTY);
    }

    #[test]
    fn transformed_square() {
        let sq = PlanarBody::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        let cs: Vec<_> = constraints_of(&sq).unwrap().iter().map(|c| c.transformed(0.7, [0.4, -0.2])).collect();
        let m = measure_region(&cs).unwrap();
        assert!((m.area - 1.0).abs() < 1e-13);
    }
}
