//! Bodies with corners in the plane and on the round sphere.

pub mod boolean;
pub mod io;
pub mod normal_cycle;
pub mod planar;
pub mod region;
pub mod spherical;

pub use boolean::{intersect_transversal, is_transversal, union, CornerKind, Intersection, TransversalityTol};
pub use io::{parse_bodies, parse_body, Body, BodySpec};
pub use normal_cycle::{
    integrate_density, integrate_over_boundary, integrate_over_cycle, normal_cycle, CycleCurve, CyclePiece, NormalCycle,
};
pub use planar::{BoundaryPiece, PlanarBody, Vertex, P2};
pub use region::{Constraint, RegionMeasures};
pub use spherical::{Cap, SphericalBody};
