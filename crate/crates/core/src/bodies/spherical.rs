//! Bodies on the unit sphere and the measures of cap intersections.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use super::region::RegionMeasures;
use crate::contact::sphere::{cross, dot, norm, normalize, Vec3};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

pub type Mat3 = [[f64; 3]; 3];

pub fn apply(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// Angle between two unit vectors, accurate at both ends.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    norm(&cross(a, b)).atan2(dot(a, b))
}

/// Closed cap `{x : ⟨x, center⟩ ≥ cos radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub center: Vec3,
    pub radius: f64,
}

impl Cap {
    pub fn contains(&self, x: &Vec3) -> bool {
        dot(x, &self.center) >= self.radius.cos() - 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SphericalBody {
    /// Geodesic polygon with counterclockwise unit vertices and minor-arc edges.
    Polygon { vertices: Vec<Vec3> },
    Cap(Cap),
    Sphere,
}

impl SphericalBody {
    pub fn polygon(vertices: &[Vec3]) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidBody("spherical polygon needs at least 3 vertices".into()));
        }
        let mut vs = Vec::with_capacity(vertices.len());
        for v in vertices {
            let n = norm(v);
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::InvalidBody("vertex is not a nonzero vector".into()));
            }
            vs.push(normalize(v));
        }
        let n = vs.len();
        for i in 0..n {
            for j in i + 1..n {
                let a = angle_between(&vs[i], &vs[j]);
                if a < 1e-12 {
                    return Err(Error::DegenerateBody(format!("vertices {i} and {j} coincide")));
                }
                if PI - a < 1e-9 {
                    return Err(Error::InvalidBody(format!("vertices {i} and {j} are antipodal")));
                }
            }
        }
        let body = SphericalBody::Polygon { vertices: vs };
        let angles = body.interior_angles();
        if angles.iter().any(|a| *a < 1e-12 || (a - PI).abs() < 1e-12) {
            return Err(Error::DegenerateBody("polygon has a straight or zero angle".into()));
        }
        let area = body.area();
        if !(area > 0.0 && area < TAU) {
            return Err(Error::InvalidBody("polygon vertices must be counterclockwise".into()));
        }
        Ok(body)
    }

    pub fn cap(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < PI) {
            return Err(Error::InvalidBody(format!("cap radius {radius} outside (0, π)")));
        }
        let n = norm(&center);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidBody("cap center is not a nonzero vector".into()));
        }
        Ok(SphericalBody::Cap(Cap { center: normalize(&center), radius }))
    }

    /// Interior angles of a polygon (empty for other kinds).
    pub fn interior_angles(&self) -> Vec<f64> {
        let SphericalBody::Polygon { vertices: vs } = self else { return vec![] };
        let n = vs.len();
        (0..n)
            .map(|i| {
                let v = &vs[i];
                let tangent = |w: &Vec3| {
                    let c = dot(w, v);
                    normalize(&[w[0] - c * v[0], w[1] - c * v[1], w[2] - c * v[2]])
                };
                let t_next = tangent(&vs[(i + 1) % n]);
                let t_prev = tangent(&vs[(i + n - 1) % n]);
                dot(&cross(&t_next, &t_prev), v).atan2(dot(&t_next, &t_prev)).rem_euclid(TAU)
            })
            .collect()
    }

    /// Area: spherical excess for polygons, `2π(1 − cos r)` for caps.
    pub fn area(&self) -> f64 {
        match self {
            SphericalBody::Polygon { vertices } => {
                let k = vertices.len() as f64;
                self.interior_angles().iter().sum::<f64>() - (k - 2.0) * PI
            }
            SphericalBody::Cap(c) => TAU * (1.0 - c.radius.cos()),
            SphericalBody::Sphere => 2.0 * TAU,
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            SphericalBody::Polygon { vertices: vs } => {
                (0..vs.len()).map(|i| angle_between(&vs[i], &vs[(i + 1) % vs.len()])).sum()
            }
            SphericalBody::Cap(c) => TAU * c.radius.sin(),
            SphericalBody::Sphere => 0.0,
        }
    }

    pub fn euler(&self) -> f64 {
        match self {
            SphericalBody::Sphere => 2.0,
            _ => 1.0,
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            SphericalBody::Polygon { vertices: vs } => {
                let n = vs.len();
                (0..n).all(|i| {
                    let nrm = cross(&vs[i], &vs[(i + 1) % n]);
                    (0..n).filter(|&j| j != i && j != (i + 1) % n).all(|j| dot(&vs[j], &nrm) > 0.0)
                })
            }
            SphericalBody::Cap(c) => c.radius <= FRAC_PI_2,
            SphericalBody::Sphere => true,
        }
    }

    /// The body as an intersection of caps (edge half-spheres for convex polygons).
    pub fn caps(&self) -> Result<Vec<Cap>> {
        match self {
            SphericalBody::Polygon { vertices: vs } => {
                if !self.is_convex() {
                    return Err(Error::InvalidBody("cap decomposition needs a convex polygon".into()));
                }
                let n = vs.len();
                Ok((0..n)
                    .map(|i| Cap { center: normalize(&cross(&vs[i], &vs[(i + 1) % n])), radius: FRAC_PI_2 })
                    .collect())
            }
            SphericalBody::Cap(c) => Ok(vec![*c]),
            SphericalBody::Sphere => Ok(vec![]),
        }
    }

    pub fn contains(&self, x: &Vec3) -> Result<bool> {
        Ok(self.caps()?.iter().all(|c| c.contains(x)))
    }

    /// The body moved by the rotation `m`.
    pub fn rotated(&self, m: &Mat3) -> SphericalBody {
        match self {
            SphericalBody::Polygon { vertices } => {
                SphericalBody::Polygon { vertices: vertices.iter().map(|v| apply(m, v)).collect() }
            }
            SphericalBody::Cap(c) => SphericalBody::Cap(Cap { center: apply(m, &c.center), radius: c.radius }),
            SphericalBody::Sphere => SphericalBody::Sphere,
        }
    }

    /// Own measures `(χ, perimeter, area)`.
    pub fn measures(&self) -> RegionMeasures {
        RegionMeasures { chi: self.euler(), perimeter: self.perimeter(), area: self.area() }
    }
}

/// Measures of the intersection of two bodies that decompose into caps.
pub fn intersect_measures(a: &SphericalBody, b: &SphericalBody) -> Result<RegionMeasures> {
    let mut caps = a.caps()?;
    caps.extend(b.caps()?);
    measure_caps(&caps)
}

/// Orthonormal `(e1, e2)` with `e1 × e2 = c`.
fn circle_frame(c: &Vec3) -> (Vec3, Vec3) {
    let k = (0..3).min_by(|&i, &j| c[i].abs().total_cmp(&c[j].abs())).unwrap();
    let mut a = [0.0; 3];
    a[k] = 1.0;
    let d = dot(&a, c);
    let e1 = normalize(&[a[0] - d * c[0], a[1] - d * c[1], a[2] - d * c[2]]);
    (e1, cross(c, &e1))
}

struct Circle {
    cap: Cap,
    e1: Vec3,
    e2: Vec3,
    cos_r: f64,
    sin_r: f64,
}

impl Circle {
    fn new(cap: Cap) -> Self {
        let (e1, e2) = circle_frame(&cap.center);
        Self { cap, e1, e2, cos_r: cap.radius.cos(), sin_r: cap.radius.sin() }
    }
    fn point(&self, t: f64) -> Vec3 {
        let (cr, sr) = (self.cos_r, self.sin_r);
        let (st, ct) = t.sin_cos();
        let c = &self.cap.center;
        std::array::from_fn(|k| cr * c[k] + sr * (ct * self.e1[k] + st * self.e2[k]))
    }
    /// Unit tangent; the cap lies to the left.
    fn tangent(&self, t: f64) -> Vec3 {
        let (ct, st) = (t.cos(), t.sin());
        std::array::from_fn(|k| -st * self.e1[k] + ct * self.e2[k])
    }
}

struct Arc {
    circle: usize,
    t0: f64,
    t1: f64,
}

const CAP_TOL: f64 = 1e-12;

/// Where circle `i` lies relative to another cap, in its own angle `t`.
enum Relation {
    Inside,
    Outside,
    /// `t ∈ [lo, lo + width]` modulo `2π`.
    Interval { lo: f64, width: f64 },
}

impl Relation {
    fn holds(&self, t: f64) -> bool {
        match *self {
            Relation::Inside => true,
            Relation::Outside => false,
            Relation::Interval { lo, width } => (t - lo).rem_euclid(TAU) <= width,
        }
    }
}

fn arcs_of(i: usize, circles: &[Circle]) -> Vec<Arc> {
    let ci = &circles[i];
    let (cr, sr) = (ci.cos_r, ci.sin_r);
    let mut breaks = Vec::new();
    let mut rels = Vec::with_capacity(circles.len());
    for (j, cj) in circles.iter().enumerate() {
        if j == i {
            continue;
        }
        // ⟨point(t), c_j⟩ = a + b cos(t − φ)
        let a = cr * dot(&ci.cap.center, &cj.cap.center);
        let p = sr * dot(&ci.e1, &cj.cap.center);
        let q = sr * dot(&ci.e2, &cj.cap.center);
        let b = p.hypot(q);
        let rel = if b < 1e-14 {
            if a >= cj.cos_r - CAP_TOL {
                Relation::Inside
            } else {
                Relation::Outside
            }
        } else {
            let kappa = (cj.cos_r - a) / b;
            if kappa <= -1.0 {
                Relation::Inside
            } else if kappa >= 1.0 {
                Relation::Outside
            } else {
                let phi = q.atan2(p);
                let w = kappa.acos();
                let lo = (phi - w).rem_euclid(TAU);
                breaks.push(lo);
                breaks.push((phi + w).rem_euclid(TAU));
                Relation::Interval { lo, width: 2.0 * w }
            }
        };
        if matches!(rel, Relation::Outside) {
            return vec![];
        }
        rels.push(rel);
    }
    let inside = |t: f64| rels.iter().all(|r| r.holds(t));
    if breaks.is_empty() {
        return if inside(0.0) { vec![Arc { circle: i, t0: 0.0, t1: TAU }] } else { vec![] };
    }
    breaks.sort_by(f64::total_cmp);
    let n = breaks.len();
    let mut out = Vec::new();
    for k in 0..n {
        let t0 = breaks[k];
        let t1 = if k + 1 < n { breaks[k + 1] } else { breaks[0] + TAU };
        if t1 - t0 > 1e-13 && inside(0.5 * (t0 + t1)) {
            out.push(Arc { circle: i, t0, t1 });
        }
    }
    out
}

/// `∮ η` along an arc, where `dη` is the area form and `η` is singular only at `-north`.
fn eta_integral(c: &Circle, t0: f64, t1: f64, north: &Vec3, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let pieces = ((t1 - t0) / 0.5).ceil().max(1.0) as usize;
    let h = (t1 - t0) / pieces as f64;
    let sr = c.cap.radius.sin();
    let mut total = 0.0;
    for p in 0..pieces {
        let a = t0 + p as f64 * h;
        for (x, w) in nodes.0.iter().zip(&nodes.1) {
            let t = a + 0.5 * h * (x + 1.0);
            let pt = c.point(t);
            let tan = c.tangent(t);
            let vel = [sr * tan[0], sr * tan[1], sr * tan[2]];
            let nx = cross(north, &pt);
            let s2 = dot(&nx, &nx);
            total += 0.5 * h * w * (1.0 - dot(&pt, north)) * dot(&nx, &vel) / s2;
        }
    }
    total
}

/// `(χ, perimeter, area)` of an intersection of caps.
///
/// Boundary arcs come from the cap arrangement. `χ` is the nearest integer to the
/// Gauss–Bonnet sum with a quadrature area; the area is then recovered exactly from
/// Gauss–Bonnet. A non-integral sum is reported as a degeneracy.
pub fn measure_caps(caps: &[Cap]) -> Result<RegionMeasures> {
    let mut uniq: Vec<Cap> = Vec::with_capacity(caps.len());
    for c in caps {
        // the dot product screens out all but nearly equal centers before the accurate angle
        if !uniq.iter().any(|u| {
            (u.radius - c.radius).abs() < 1e-13 && dot(&u.center, &c.center) > 0.5 && angle_between(&u.center, &c.center) < 1e-13
        }) {
            uniq.push(*c);
        }
    }
    if uniq.is_empty() {
        return Ok(RegionMeasures { chi: 2.0, perimeter: 0.0, area: 2.0 * TAU });
    }
    for (i, a) in uniq.iter().enumerate() {
        for b in &uniq[i + 1..] {
            if (a.radius + b.radius - PI).abs() < 1e-13
                && dot(&a.center, &b.center) < -0.5
                && angle_between(&a.center, &b.center) > PI - 1e-13
            {
                return Err(Error::DegenerateBody("complementary caps".into()));
            }
        }
    }
    let circles: Vec<Circle> = uniq.into_iter().map(Circle::new).collect();
    let arcs: Vec<Arc> = (0..circles.len()).flat_map(|i| arcs_of(i, &circles)).collect();
    if arcs.is_empty() {
        return Ok(RegionMeasures::EMPTY);
    }
    let starts: Vec<Vec3> = arcs.iter().map(|a| circles[a.circle].point(a.t0)).collect();
    let mut perimeter = 0.0;
    let mut curvature = 0.0;
    let mut exterior = 0.0;
    for arc in &arcs {
        let c = &circles[arc.circle];
        let (cr, sr) = (c.cos_r, c.sin_r);
        perimeter += sr * (arc.t1 - arc.t0);
        curvature += cr * (arc.t1 - arc.t0);
        let end = c.point(arc.t1);
        let (next, gap) = arcs
            .iter()
            .zip(&starts)
            .map(|(b, p)| (b, ((p[0] - end[0]).powi(2) + (p[1] - end[1]).powi(2) + (p[2] - end[2]).powi(2)).sqrt()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("arcs is nonempty");
        if gap > 1e-7 {
            return Err(Error::DegenerateBody(format!("cap boundary does not close (gap {gap:.3e})")));
        }
        let t_in = c.tangent(arc.t1);
        let t_out = circles[next.circle].tangent(next.t0);
        exterior += dot(&cross(&t_in, &t_out), &end).atan2(dot(&t_in, &t_out));
    }
    if circles.iter().all(|c| c.cap.radius <= FRAC_PI_2) {
        // an intersection of convex caps is convex, hence a disk
        return Ok(RegionMeasures { chi: 1.0, perimeter, area: TAU - curvature - exterior });
    }
    measure_general(&circles, &arcs, perimeter, curvature, exterior)
}

fn measure_general(circles: &[Circle], arcs: &[Arc], perimeter: f64, curvature: f64, exterior: f64) -> Result<RegionMeasures> {
    // Pole for the area 1-form: the candidate direction farthest from every boundary circle.
    let mut best = ([0.0, 0.0, 1.0], f64::NEG_INFINITY);
    for a in -1..=1 {
        for b in -1..=1 {
            for c in -1..=1 {
                if (a, b, c) == (0, 0, 0) {
                    continue;
                }
                let s = normalize(&[a as f64, b as f64, c as f64]);
                let score = circles
                    .iter()
                    .map(|ci| (angle_between(&s, &ci.cap.center) - ci.cap.radius).abs())
                    .fold(f64::INFINITY, f64::min);
                if score > best.1 {
                    best = (s, score);
                }
            }
        }
    }
    let south = best.0;
    let north = [-south[0], -south[1], -south[2]];
    let nodes = gauss_legendre(24);
    let mut rough: f64 = arcs.iter().map(|a| eta_integral(&circles[a.circle], a.t0, a.t1, &north, &nodes)).sum();
    if circles.iter().all(|c| c.cap.contains(&south)) {
        rough += 2.0 * TAU;
    }
    let chi_raw = (rough + curvature + exterior) / TAU;
    let chi = chi_raw.round();
    if (chi_raw - chi).abs() > 1e-3 {
        return Err(Error::DegenerateBody(format!("Gauss–Bonnet sum {chi_raw} is not integral")));
    }
    Ok(RegionMeasures { chi, perimeter, area: TAU * chi - curvature - exterior })
}
