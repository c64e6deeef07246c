//! Transversality, intersection and union of planar polygons.

use serde::{Deserialize, Serialize};

use super::planar::{cross, dist, orient, point_in_polygon, sub, PlanarBody, P2};
use crate::error::{Error, Result};

/// Tolerances for the transversality test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransversalityTol {
    /// Distance tolerance relative to the larger diameter.
    pub distance_rel: f64,
    /// Minimal crossing angle in radians.
    pub angle: f64,
}

impl Default for TransversalityTol {
    fn default() -> Self {
        Self { distance_rel: 1e-9, angle: 1e-6 }
    }
}

/// A proper crossing of edge `edge1` of the first polygon with edge `edge2` of the second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub point: P2,
    pub edge1: usize,
    pub s1: f64,
    pub edge2: usize,
    pub s2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub transversal: bool,
    pub crossings: usize,
    pub min_vertex_distance: f64,
    pub min_crossing_angle: f64,
    pub violations: Vec<String>,
}

fn require_polygon(b: &PlanarBody) -> Result<Vec<P2>> {
    b.polygon_points().ok_or_else(|| Error::InvalidBody("operation supports polygons only".into()))
}

/// All proper edge crossings, ordered by first-polygon edge then parameter.
pub fn crossings(p1: &PlanarBody, p2: &PlanarBody) -> Result<Vec<Crossing>> {
    let a = require_polygon(p1)?;
    let b = require_polygon(p2)?;
    let mut out = Vec::new();
    for i in 0..a.len() {
        let (a0, a1) = (a[i], a[(i + 1) % a.len()]);
        for j in 0..b.len() {
            let (b0, b1) = (b[j], b[(j + 1) % b.len()]);
            let (o1, o2) = (orient(a0, a1, b0), orient(a0, a1, b1));
            let (o3, o4) = (orient(b0, b1, a0), orient(b0, b1, a1));
            if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
                let da = sub(a1, a0);
                let db = sub(b1, b0);
                let den = cross(da, db);
                let s1 = cross(sub(b0, a0), db) / den;
                let s2 = cross(sub(b0, a0), da) / den;
                out.push(Crossing { point: [a0[0] + s1 * da[0], a0[1] + s1 * da[1]], edge1: i, s1, edge2: j, s2 });
            }
        }
    }
    out.sort_by(|x, y| x.edge1.cmp(&y.edge1).then(x.s1.total_cmp(&y.s1)));
    Ok(out)
}

/// Checks that every stratum of one polygon meets every stratum of the other transversally.
pub fn is_transversal(p1: &PlanarBody, p2: &PlanarBody, tol: &TransversalityTol) -> Result<TransversalityReport> {
    let a = require_polygon(p1)?;
    let b = require_polygon(p2)?;
    let dtol = tol.distance_rel * p1.diameter().max(p2.diameter());
    let mut violations = Vec::new();
    let mut min_vertex_distance = f64::INFINITY;
    for (name, pts, other) in [("first", &a, p2), ("second", &b, p1)] {
        for (k, v) in pts.iter().enumerate() {
            let d = other.boundary_distance(*v);
            min_vertex_distance = min_vertex_distance.min(d);
            if d <= dtol {
                violations.push(format!("vertex {k} of the {name} body at distance {d:.3e} from the other boundary"));
            }
        }
    }
    let xs = crossings(p1, p2)?;
    let mut min_crossing_angle = std::f64::consts::FRAC_PI_2;
    for c in &xs {
        let da = sub(a[(c.edge1 + 1) % a.len()], a[c.edge1]);
        let db = sub(b[(c.edge2 + 1) % b.len()], b[c.edge2]);
        let sin = (cross(da, db) / (dist(da, [0.0; 2]) * dist(db, [0.0; 2]))).abs().min(1.0);
        let ang = sin.asin();
        min_crossing_angle = min_crossing_angle.min(ang);
        if ang <= tol.angle {
            violations.push(format!("edges {} and {} cross at angle {ang:.3e}", c.edge1, c.edge2));
        }
    }
    Ok(TransversalityReport {
        transversal: violations.is_empty(),
        crossings: xs.len(),
        min_vertex_distance,
        min_crossing_angle,
        violations,
    })
}

/// Where a corner of an intersection or union comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CornerKind {
    /// A transversal crossing of the two boundaries.
    Crossing,
    /// A corner of the first (`0`) or second (`1`) body.
    Inherited(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub body: PlanarBody,
    /// One entry per vertex of `body`, in order.
    pub corners: Vec<CornerKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Intersection {
    Empty,
    Components(Vec<Component>),
}

impl Intersection {
    pub fn is_empty(&self) -> bool {
        matches!(self, Intersection::Empty)
    }

    /// The unique component, if connected and nonempty.
    pub fn single(&self) -> Option<&Component> {
        match self {
            Intersection::Components(c) if c.len() == 1 => Some(&c[0]),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Node {
    Vertex(u8, usize),
    Crossing(usize),
}

struct SubEdge {
    from: Node,
    to: Node,
    start: P2,
}

/// Sub-edges of both boundaries selected by `keep_inside`, chained into loops.
fn boolean_loops(p1: &PlanarBody, p2: &PlanarBody, keep_inside: bool) -> Result<Vec<Vec<(P2, CornerKind)>>> {
    let polys = [require_polygon(p1)?, require_polygon(p2)?];
    let xs = crossings(p1, p2)?;
    let mut subs: Vec<SubEdge> = Vec::new();
    for k in 0..2usize {
        let pts = &polys[k];
        let other = &polys[1 - k];
        let n = pts.len();
        for e in 0..n {
            let mut stops: Vec<(f64, Node, P2)> = xs
                .iter()
                .enumerate()
                .filter(|(_, c)| if k == 0 { c.edge1 == e } else { c.edge2 == e })
                .map(|(idx, c)| (if k == 0 { c.s1 } else { c.s2 }, Node::Crossing(idx), c.point))
                .collect();
            stops.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut chain = vec![(0.0, Node::Vertex(k as u8, e), pts[e])];
            chain.extend(stops);
            chain.push((1.0, Node::Vertex(k as u8, (e + 1) % n), pts[(e + 1) % n]));
            for w in chain.windows(2) {
                let mid = [0.5 * (w[0].2[0] + w[1].2[0]), 0.5 * (w[0].2[1] + w[1].2[1])];
                if point_in_polygon(other, mid) == keep_inside {
                    subs.push(SubEdge { from: w[0].1, to: w[1].1, start: w[0].2 });
                }
            }
        }
    }
    let mut used = vec![false; subs.len()];
    let mut loops = Vec::new();
    for first in 0..subs.len() {
        if used[first] {
            continue;
        }
        let mut lp = Vec::new();
        let mut cur = first;
        loop {
            used[cur] = true;
            let kind = match subs[cur].from {
                Node::Vertex(k, _) => CornerKind::Inherited(k),
                Node::Crossing(_) => CornerKind::Crossing,
            };
            lp.push((subs[cur].start, kind));
            let to = subs[cur].to;
            if subs[first].from == to {
                break;
            }
            cur = (0..subs.len())
                .find(|&j| !used[j] && subs[j].from == to)
                .ok_or_else(|| Error::NotTransversal("boundary sub-arcs do not close up".into()))?;
        }
        loops.push(lp);
    }
    Ok(loops)
}

fn loop_area(lp: &[(P2, CornerKind)]) -> f64 {
    let n = lp.len();
    (0..n).map(|i| 0.5 * cross(lp[i].0, lp[(i + 1) % n].0)).sum()
}

fn into_component(lp: Vec<(P2, CornerKind)>) -> Result<Component> {
    let pts: Vec<P2> = lp.iter().map(|x| x.0).collect();
    let body = PlanarBody::polygon(&pts)?;
    Ok(Component { body, corners: lp.into_iter().map(|x| x.1).collect() })
}

fn ensure_transversal(p1: &PlanarBody, p2: &PlanarBody) -> Result<()> {
    let rep = is_transversal(p1, p2, &TransversalityTol::default())?;
    if rep.transversal {
        Ok(())
    } else {
        Err(Error::NotTransversal(rep.violations.join("; ")))
    }
}

/// `P1 ∩ P2` for transversal polygons, with the corner stratification.
pub fn intersect_transversal(p1: &PlanarBody, p2: &PlanarBody) -> Result<Intersection> {
    ensure_transversal(p1, p2)?;
    let loops = boolean_loops(p1, p2, true)?;
    if loops.is_empty() {
        return Ok(Intersection::Empty);
    }
    let comps = loops.into_iter().map(into_component).collect::<Result<Vec<_>>>()?;
    Ok(Intersection::Components(comps))
}

/// `P1 ∪ P2` for transversal polygons; fails if the union has a hole.
pub fn union(p1: &PlanarBody, p2: &PlanarBody) -> Result<Vec<Component>> {
    ensure_transversal(p1, p2)?;
    let loops = boolean_loops(p1, p2, false)?;
    if loops.iter().any(|lp| loop_area(lp) <= 0.0) {
        return Err(Error::InvalidBody("union has a hole".into()));
    }
    loops.into_iter().map(into_component).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(dx: f64, dy: f64) -> PlanarBody {
        PlanarBody::rectangle(dx, dy, dx + 1.0, dy + 1.0).unwrap()
    }

    #[test]
    fn offset_squares() {
        let (a, b) = (unit_square(0.0, 0.0), unit_square(0.5, 0.5));
        let rep = is_transversal(&a, &b, &TransversalityTol::default()).unwrap();
        assert!(rep.transversal);
        assert_eq!(rep.crossings, 2);
        let i = intersect_transversal(&a, &b).unwrap();
        let c = i.single().unwrap();
        assert!((c.body.signed_area() - 0.25).abs() < 1e-15);
        let crossing = c.corners.iter().filter(|k| **k == CornerKind::Crossing).count();
        assert_eq!(crossing, 2);
        assert!(c.corners.contains(&CornerKind::Inherited(0)));
        assert!(c.corners.contains(&CornerKind::Inherited(1)));
        let u = union(&a, &b).unwrap();
        assert_eq!(u.len(), 1);
        assert!((u[0].body.signed_area() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn identical_squares_not_transversal() {
        let a = unit_square(0.0, 0.0);
        let rep = is_transversal(&a, &a, &TransversalityTol::default()).unwrap();
        assert!(!rep.transversal);
        assert!(matches!(intersect_transversal(&a, &a), Err(Error::NotTransversal(_))));
    }

    #[test]
    fn containment_and_disjoint() {
        let big = PlanarBody::rectangle(-1.0, -1.0, 2.0, 2.0).unwrap();
        let small = unit_square(0.0, 0.0);
        let i = intersect_transversal(&small, &big).unwrap();
        assert_eq!(i.single().unwrap().body.polygon_points(), small.polygon_points());
        let far = unit_square(5.0, 0.0);
        assert!(is_transversal(&small, &far, &TransversalityTol::default()).unwrap().transversal);
        assert!(intersect_transversal(&small, &far).unwrap().is_empty());
        assert_eq!(union(&small, &far).unwrap().len(), 2);
    }

    #[test]
    fn nonconvex_intersection_splits() {
        let u = PlanarBody::polygon(&[[0.0, 0.0], [3.0, 0.0], [3.0, 2.0], [2.0, 2.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]])
            .unwrap();
        let bar = PlanarBody::rectangle(-0.5, 1.5, 3.5, 1.8).unwrap();
        match intersect_transversal(&u, &bar).unwrap() {
            Intersection::Components(c) => {
                assert_eq!(c.len(), 2);
                let total: f64 = c.iter().map(|x| x.body.signed_area()).sum();
                assert!((total - 0.6).abs() < 1e-12);
            }
            Intersection::Empty => panic!("expected two components"),
        }
    }
}
