//! Planar bodies with corners.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type P2 = [f64; 2];

pub(crate) fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub(crate) fn dist(a: P2, b: P2) -> f64 {
    let d = sub(a, b);
    dot(d, d).sqrt()
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(TAU);
    if x > PI {
        x -= TAU;
    }
    x
}

/// A piece of a counterclockwise boundary curve, parametrized over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPiece {
    Segment { start: P2, end: P2 },
    /// Counterclockwise circular arc about `center` from angle `a0` to `a1 > a0`;
    /// the outward normal is radial.
    Arc { center: P2, radius: f64, a0: f64, a1: f64 },
}

impl BoundaryPiece {
    pub fn point(&self, s: f64) -> P2 {
        match *self {
            BoundaryPiece::Segment { start, end } => [start[0] + s * (end[0] - start[0]), start[1] + s * (end[1] - start[1])],
            BoundaryPiece::Arc { center, radius, a0, a1 } => {
                let t = a0 + s * (a1 - a0);
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            }
        }
    }

    /// Derivative of [`point`](Self::point) with respect to `s`.
    pub fn velocity(&self, s: f64) -> P2 {
        match *self {
            BoundaryPiece::Segment { start, end } => sub(end, start),
            BoundaryPiece::Arc { radius, a0, a1, .. } => {
                let t = a0 + s * (a1 - a0);
                let w = radius * (a1 - a0);
                [-w * t.sin(), w * t.cos()]
            }
        }
    }

    /// Angle of the outward unit normal at parameter `s`.
    pub fn normal_angle(&self, s: f64) -> f64 {
        match *self {
            BoundaryPiece::Segment { start, end } => {
                let d = sub(end, start);
                d[1].atan2(d[0]) - PI / 2.0
            }
            BoundaryPiece::Arc { a0, a1, .. } => a0 + s * (a1 - a0),
        }
    }

    /// `dθ/ds` of the outward normal angle.
    pub fn normal_rate(&self) -> f64 {
        match *self {
            BoundaryPiece::Segment { .. } => 0.0,
            BoundaryPiece::Arc { a0, a1, .. } => a1 - a0,
        }
    }

    pub fn start(&self) -> P2 {
        self.point(0.0)
    }

    pub fn end(&self) -> P2 {
        self.point(1.0)
    }

    pub fn length(&self) -> f64 {
        match *self {
            BoundaryPiece::Segment { start, end } => dist(start, end),
            BoundaryPiece::Arc { radius, a0, a1, .. } => radius * (a1 - a0),
        }
    }

    /// The sub-piece over parameters `[s0, s1]`, reparametrized to `[0, 1]`.
    pub fn restrict(&self, s0: f64, s1: f64) -> BoundaryPiece {
        match *self {
            BoundaryPiece::Segment { .. } => BoundaryPiece::Segment { start: self.point(s0), end: self.point(s1) },
            BoundaryPiece::Arc { center, radius, a0, a1 } => {
                BoundaryPiece::Arc { center, radius, a0: a0 + s0 * (a1 - a0), a1: a0 + s1 * (a1 - a0) }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(*self, BoundaryPiece::Arc { a0, a1, .. } if ((a1 - a0) - TAU).abs() < 1e-12)
    }
}

/// A corner between consecutive boundary pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub point: P2,
    /// Outward normal angle at the end of the incoming piece.
    pub theta_in: f64,
    /// Normal jump in `(−π, π)`: positive at convex, negative at reflex corners.
    pub jump: f64,
}

impl Vertex {
    pub fn is_convex(&self) -> bool {
        self.jump > 0.0
    }
}

/// A compact planar body bounded by one counterclockwise simple closed curve.
///
/// `vertices[i]` sits at the start of `pieces[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarBody {
    pieces: Vec<BoundaryPiece>,
    vertices: Vec<Vertex>,
}

const LENGTH_TOL: f64 = 1e-12;
const JUMP_TOL: f64 = 1e-12;

impl PlanarBody {
    /// Polygon from counterclockwise vertices.
    pub fn polygon(points: &[P2]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidBody(format!("polygon needs at least 3 vertices, got {}", points.len())));
        }
        let n = points.len();
        let pieces: Vec<_> =
            (0..n).map(|i| BoundaryPiece::Segment { start: points[i], end: points[(i + 1) % n] }).collect();
        let body = Self::from_pieces(pieces)?;
        if body.signed_area() <= 0.0 {
            return Err(Error::InvalidBody("polygon vertices must be counterclockwise".into()));
        }
        Ok(body)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Self::polygon(&[[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn disk(center: P2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::DegenerateBody(format!("disk radius {radius}")));
        }
        Self::from_pieces(vec![BoundaryPiece::Arc { center, radius, a0: 0.0, a1: TAU }])
    }

    /// General body from a cyclic list of counterclockwise pieces.
    pub fn from_pieces(pieces: Vec<BoundaryPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidBody("no boundary pieces".into()));
        }
        for p in &pieces {
            if p.length() < LENGTH_TOL {
                return Err(Error::DegenerateBody(format!("boundary piece of length {:.3e}", p.length())));
            }
            if let BoundaryPiece::Arc { a0, a1, radius, .. } = *p {
                if !(a1 > a0) || !(radius > 0.0) || a1 - a0 > TAU + 1e-12 {
                    return Err(Error::InvalidBody("arcs must be counterclockwise with positive radius".into()));
                }
            }
        }
        let n = pieces.len();
        let mut vertices = Vec::new();
        if n == 1 {
            if !pieces[0].is_closed() {
                return Err(Error::InvalidBody("a single piece must be a closed arc".into()));
            }
        } else {
            for i in 0..n {
                let prev = &pieces[(i + n - 1) % n];
                let cur = &pieces[i];
                let gap = dist(prev.end(), cur.start());
                if gap > 1e-9 * (1.0 + prev.length().max(cur.length())) {
                    return Err(Error::InvalidBody(format!("boundary not closed at piece {i} (gap {gap:.3e})")));
                }
                let theta_in = prev.normal_angle(1.0);
                let jump = wrap_angle(cur.normal_angle(0.0) - theta_in);
                if jump.abs() < JUMP_TOL {
                    return Err(Error::DegenerateBody(format!("no corner at vertex {i} (collinear or tangent pieces)")));
                }
                if (jump.abs() - PI).abs() < JUMP_TOL {
                    return Err(Error::InvalidBody(format!("cusp at vertex {i}")));
                }
                vertices.push(Vertex { point: cur.start(), theta_in, jump });
            }
        }
        let body = Self { pieces, vertices };
        body.check_simple()?;
        Ok(body)
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.pieces.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if let (BoundaryPiece::Segment { start: a, end: b }, BoundaryPiece::Segment { start: c, end: d }) =
                    (self.pieces[i], self.pieces[j])
                {
                    if segments_touch(a, b, c, d) {
                        return Err(Error::InvalidBody(format!("boundary self-intersects (pieces {i} and {j})")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn pieces(&self) -> &[BoundaryPiece] {
        &self.pieces
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn is_polygon(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p, BoundaryPiece::Segment { .. }))
    }

    /// Polygon vertex list (start points of the segments).
    pub fn polygon_points(&self) -> Option<Vec<P2>> {
        if self.is_polygon() {
            Some(self.pieces.iter().map(|p| p.start()).collect())
        } else {
            None
        }
    }

    pub fn is_convex(&self) -> bool {
        self.vertices.iter().all(|v| v.is_convex())
    }

    /// Signed area by Green's theorem (closed form per piece).
    pub fn signed_area(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| match *p {
                BoundaryPiece::Segment { start, end } => 0.5 * cross(start, end),
                BoundaryPiece::Arc { center, radius, a0, a1 } => {
                    0.5 * (radius * radius * (a1 - a0) + radius * center[0] * (a1.sin() - a0.sin())
                        - radius * center[1] * (a1.cos() - a0.cos()))
                }
            })
            .sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.pieces.iter().map(|p| p.length()).sum()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bbox(&self) -> (P2, P2) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut add = |q: P2| {
            for k in 0..2 {
                lo[k] = lo[k].min(q[k]);
                hi[k] = hi[k].max(q[k]);
            }
        };
        for p in &self.pieces {
            match *p {
                BoundaryPiece::Segment { start, end } => {
                    add(start);
                    add(end);
                }
                BoundaryPiece::Arc { center, radius, .. } => {
                    add([center[0] - radius, center[1] - radius]);
                    add([center[0] + radius, center[1] + radius]);
                }
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        dist(lo, hi)
    }

    /// Winding-number membership test (boundary points count as inside up to roundoff).
    pub fn contains(&self, q: P2) -> bool {
        if let [BoundaryPiece::Arc { center, radius, .. }] = self.pieces.as_slice() {
            return dist(q, *center) <= *radius;
        }
        if let Some(pts) = self.polygon_points() {
            return point_in_polygon(&pts, q);
        }
        // Mixed boundaries: winding number by sampling the pieces.
        let mut wind = 0.0;
        for p in &self.pieces {
            let m = 64;
            for k in 0..m {
                let a = sub(p.point(k as f64 / m as f64), q);
                let b = sub(p.point((k + 1) as f64 / m as f64), q);
                wind += cross(a, b).atan2(dot(a, b));
            }
        }
        wind > PI
    }

    /// Distance from `q` to the boundary.
    pub fn boundary_distance(&self, q: P2) -> f64 {
        self.pieces
            .iter()
            .map(|p| match *p {
                BoundaryPiece::Segment { start, end } => point_segment_distance(q, start, end),
                BoundaryPiece::Arc { center, radius, a0, a1 } => {
                    let ang = (q[1] - center[1]).atan2(q[0] - center[0]);
                    let rel = (ang - a0).rem_euclid(TAU);
                    if rel <= a1 - a0 {
                        (dist(q, center) - radius).abs()
                    } else {
                        dist(q, p.start()).min(dist(q, p.end()))
                    }
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The body moved by `x ↦ R(angle) x + shift`.
    pub fn transformed(&self, angle: f64, shift: P2) -> PlanarBody {
        let (c, s) = (angle.cos(), angle.sin());
        let map = |p: P2| [c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]];
        let pieces = self
            .pieces
            .iter()
            .map(|p| match *p {
                BoundaryPiece::Segment { start, end } => BoundaryPiece::Segment { start: map(start), end: map(end) },
                BoundaryPiece::Arc { center, radius, a0, a1 } => {
                    BoundaryPiece::Arc { center: map(center), radius, a0: a0 + angle, a1: a1 + angle }
                }
            })
            .collect();
        let vertices = self
            .vertices
            .iter()
            .map(|v| Vertex { point: map(v.point), theta_in: v.theta_in + angle, jump: v.jump })
            .collect();
        PlanarBody { pieces, vertices }
    }
}

pub(crate) fn orient(a: P2, b: P2, c: P2) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: P2, b: P2, q: P2) -> bool {
    q[0] >= a[0].min(b[0]) && q[0] <= a[0].max(b[0]) && q[1] >= a[1].min(b[1]) && q[1] <= a[1].max(b[1])
}

/// Closed segments `ab` and `cd` share a point.
pub(crate) fn segments_touch(a: P2, b: P2, c: P2, d: P2) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

pub(crate) fn point_segment_distance(q: P2, a: P2, b: P2) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 > 0.0 { (dot(sub(q, a), ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    dist(q, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Crossing-number test.
pub fn point_in_polygon(pts: &[P2], q: P2) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a[1] > q[1]) != (b[1] > q[1]) {
            let x = a[0] + (q[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if q[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_basics() {
        let sq = PlanarBody::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(sq.vertices().len(), 4);
        assert!(sq.is_convex());
        assert!((sq.signed_area() - 1.0).abs() < 1e-15);
        assert!((sq.perimeter() - 4.0).abs() < 1e-15);
        for v in sq.vertices() {
            assert!((v.jump - PI / 2.0).abs() < 1e-12);
        }
        assert!(sq.contains([0.5, 0.5]));
        assert!(!sq.contains([1.5, 0.5]));
    }

    #[test]
    fn clockwise_polygon_rejected() {
        assert!(PlanarBody::polygon(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
    }

    #[test]
    fn collinear_vertex_rejected() {
        let r = PlanarBody::polygon(&[[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(r, Err(Error::DegenerateBody(_))));
    }

    #[test]
    fn degenerate_edge_rejected() {
        let r = PlanarBody::polygon(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(r, Err(Error::DegenerateBody(_))));
    }

    #[test]
    fn bowtie_rejected() {
        let r = PlanarBody::polygon(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(r.is_err());
    }

    #[test]
    fn reflex_corner_has_negative_jump() {
        let l = PlanarBody::polygon(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]]).unwrap();
        let reflex: Vec<_> = l.vertices().iter().filter(|v| !v.is_convex()).collect();
        assert_eq!(reflex.len(), 1);
        assert_eq!(reflex[0].point, [1.0, 1.0]);
        let total: f64 = l.vertices().iter().map(|v| v.jump).sum();
        assert!((total - TAU).abs() < 1e-12);
    }

    #[test]
    fn disk_area() {
        let d = PlanarBody::disk([1.0, -2.0], 0.5).unwrap();
        assert!((d.signed_area() - PI * 0.25).abs() < 1e-14);
        assert!(d.vertices().is_empty());
        assert!((d.boundary_distance([1.0, -2.0]) - 0.5).abs() < 1e-15);
    }
}
