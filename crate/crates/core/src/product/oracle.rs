//! Independent oracle for products of planar intrinsic volumes.
//!
//! For `K` convex, `Area(K + rB) = V₂(K) + 2r V₁(K) + πr² χ(K)`, so
//! `μ_r = Σ_k a_k(r) V_k` with `a(r) = (πr², 2r, 1)`. The product of `μ_r` and
//! `μ_{r'}` evaluated on `K` is the 4-volume of `ΔK + (rB × r'B)`, i.e. of the set
//! of `(u, w)` with `K ∩ B(u, r) ∩ B(w, r') ≠ ∅`. Sampling that volume at
//! three radii and inverting `a` gives `(V_i · V_j)(K)`.
//!
//! Two estimators are provided. `HitOrMiss` samples `(u, w)` on a jittered 4-grid.
//! `Conditional` samples `u` on a jittered 2-grid and integrates `w` exactly: the
//! `w`-section is the parallel body `(K ∩ B(u, r)) + r'B` of a convex set, whose
//! area is `A + r'L + πr'²`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::planar::point_in_polygon;
use crate::bodies::region::{constraints_of, measure_region};
use crate::bodies::{BoundaryPiece, Constraint, PlanarBody, RegionMeasures, P2};
use crate::error::{Error, Result};
use crate::valuations::{InvariantValuation, Space};


#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMethod {
    HitOrMiss,
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub method: OracleMethod,
    /// Jittered grid has `grid^d` cells per replicate, `d = 4` for hit-or-miss
    /// and `d = 2` for the conditional estimator.
    pub grid: usize,
    pub replicates: usize,
    pub seed: u64,
    /// Steiner radii at which the volumes are sampled.
    pub nodes: [f64; 3],
    /// Largest admissible condition number of the least-squares fit.
    pub max_condition: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            method: OracleMethod::Conditional,
            grid: 500,
            replicates: 4,
            seed: 0x5eed,
            nodes: [0.0, 1.0, 2.0],
            max_condition: 1e6,
        }
    }
}

impl OracleConfig {
    pub fn points_per_volume(&self) -> usize {
        let d = if self.method == OracleMethod::HitOrMiss { 4 } else { 2 };
        self.grid.pow(d) * self.replicates
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Polygon(Vec<P2>),
    Disk(P2, f64),
}

fn shape_of(body: &PlanarBody) -> Result<Shape> {
    if !body.is_convex() {
        return Err(Error::InvalidBody("the volume oracle needs convex bodies".into()));
    }
    if let Some(pts) = body.polygon_points() {
        return Ok(Shape::Polygon(pts));
    }
    match body.pieces() {
        [BoundaryPiece::Arc { center, radius, .. }] => Ok(Shape::Disk(*center, *radius)),
        _ => Err(Error::InvalidBody("the volume oracle handles polygons and disks".into())),
    }
}

fn dist(a: P2, b: P2) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Parameter interval of the segment `p → q` inside the closed disk `B(c, r)`.
fn segment_in_disk(p: P2, q: P2, c: P2, r: f64) -> Option<(f64, f64)> {
    let e = [q[0] - p[0], q[1] - p[1]];
    let f = [p[0] - c[0], p[1] - c[1]];
    let a = e[0] * e[0] + e[1] * e[1];
    let b = 2.0 * (e[0] * f[0] + e[1] * f[1]);
    let cc = f[0] * f[0] + f[1] * f[1] - r * r;
    let disc = b * b - 4.0 * a * cc;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let (lo, hi) = (((-b - s) / (2.0 * a)).max(0.0), ((-b + s) / (2.0 * a)).min(1.0));
    (lo <= hi).then_some((lo, hi))
}

/// A point of `B(u, r) ∩ B(w, r')`, assumed nonempty, on the segment `u → w`.
fn lens_point(u: P2, r: f64, w: P2, d: f64) -> P2 {
    if d <= r {
        w
    } else {
        let s = r / d;
        [u[0] + s * (w[0] - u[0]), u[1] + s * (w[1] - u[1])]
    }
}

/// Distance from `c` to the nonempty lens `B(u, r) ∩ B(w, r')`.
fn lens_distance(c: P2, u: P2, r: f64, w: P2, rp: f64) -> f64 {
    let (du, dw) = (dist(c, u), dist(c, w));
    if du <= r && dw <= rp {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut project = |ctr: P2, rad: f64, other: P2, orad: f64, d: f64| {
        if d > 0.0 {
            let s = rad / d;
            let p = [ctr[0] + s * (c[0] - ctr[0]), ctr[1] + s * (c[1] - ctr[1])];
            if dist(p, other) <= orad * (1.0 + 1e-12) + 1e-15 {
                best = best.min((d - rad).abs());
            }
        }
    };
    project(u, r, w, rp, du);
    project(w, rp, u, r, dw);
    // corners of the lens
    let d = dist(u, w);
    if d > 0.0 && d <= r + rp && d >= (r - rp).abs() {
        let a = (r * r - rp * rp + d * d) / (2.0 * d);
        let h = (r * r - a * a).max(0.0).sqrt();
        let e = [(w[0] - u[0]) / d, (w[1] - u[1]) / d];
        let m = [u[0] + a * e[0], u[1] + a * e[1]];
        for s in [-1.0, 1.0] {
            best = best.min(dist(c, [m[0] - s * h * e[1], m[1] + s * h * e[0]]));
        }
    }
    best
}

/// Does `K ∩ B(u, r) ∩ B(w, r')` contain a point?
fn meets(shape: &Shape, u: P2, r: f64, w: P2, rp: f64) -> bool {
    let d = dist(u, w);
    if d > r + rp {
        return false;
    }
    match shape {
        Shape::Polygon(pts) => {
            let n = pts.len();
            for k in 0..n {
                let (p, q) = (pts[k], pts[(k + 1) % n]);
                if let (Some(a), Some(b)) = (segment_in_disk(p, q, u, r), segment_in_disk(p, q, w, rp)) {
                    if a.0.max(b.0) <= a.1.min(b.1) {
                        return true;
                    }
                }
            }
            point_in_polygon(pts, lens_point(u, r, w, d))
        }
        Shape::Disk(c, rho) => {
            if r == 0.0 {
                return dist(*c, u) <= *rho;
            }
            if rp == 0.0 {
                return dist(*c, w) <= *rho;
            }
            lens_distance(*c, u, r, w, rp) <= *rho
        }
    }
}

/// Monte-Carlo estimate of `vol₄(ΔK + rB × r'B)` with its standard error.
pub fn diagonal_volume(body: &PlanarBody, r: f64, rp: f64, cfg: &OracleConfig, stream: u64) -> Result<(f64, f64)> {
    let shape = shape_of(body)?;
    if r == 0.0 && rp == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (lo, hi) = body.bbox();
    let ubox = ([lo[0] - r, lo[1] - r], [hi[0] + r, hi[1] + r]);
    let wbox = ([lo[0] - rp, lo[1] - rp], [hi[0] + rp, hi[1] + rp]);
    let side = |b: &(P2, P2), k: usize| b.1[k] - b.0[k];
    let box_volume = side(&ubox, 0) * side(&ubox, 1) * side(&wbox, 0) * side(&wbox, 1);
    let g = cfg.grid;
    let cells = (g as f64).powi(4);
    let estimates: Vec<f64> = (0..cfg.replicates)
        .map(|rep| {
            let hits: usize = (0..g)
                .into_par_iter()
                .map(|i0| {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(stream.wrapping_mul(1 << 20) ^ ((rep as u64) << 10) ^ i0 as u64);
                    let mut count = 0;
                    for i1 in 0..g {
                        for i2 in 0..g {
                            for i3 in 0..g {
                                let j = |i: usize, rng: &mut ChaCha8Rng| (i as f64 + rng.gen::<f64>()) / g as f64;
                                let u = [
                                    ubox.0[0] + side(&ubox, 0) * j(i0, &mut rng),
                                    ubox.0[1] + side(&ubox, 1) * j(i1, &mut rng),
                                ];
                                let w = [
                                    wbox.0[0] + side(&wbox, 0) * j(i2, &mut rng),
                                    wbox.0[1] + side(&wbox, 1) * j(i3, &mut rng),
                                ];
                                if meets(&shape, u, r, w, rp) {
                                    count += 1;
                                }
                            }
                        }
                    }
                    count
                })
                .sum();
            box_volume * hits as f64 / cells
        })
        .collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = if estimates.len() > 1 {
        estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((mean, (var / n).sqrt()))
}

fn slice_measures(cs: &mut Vec<Constraint>, u: P2, r: f64) -> Result<RegionMeasures> {
    cs.push(Constraint::Disk { center: u, radius: r });
    let mut out = measure_region(cs);
    if out.is_err() {
        // tangential contact: a nudge far below the grid spacing resolves it
        *cs.last_mut().expect("just pushed") = Constraint::Disk { center: [u[0] + 1e-10, u[1] - 1e-10], radius: r };
        out = measure_region(cs);
    }
    cs.pop();
    out
}

/// `vol₄(ΔK + rB × r'B)` for every `r'` in `rps`, sampling `u` only.
pub fn conditional_volumes(
    body: &PlanarBody,
    r: f64,
    rps: &[f64; 3],
    cfg: &OracleConfig,
    stream: u64,
) -> Result<[(f64, f64); 3]> {
    shape_of(body)?;
    let base = constraints_of(body)?;
    let (lo, hi) = body.bbox();
    let ubox = ([lo[0] - r, lo[1] - r], [hi[0] + r, hi[1] + r]);
    let (sx, sy) = (ubox.1[0] - ubox.0[0], ubox.1[1] - ubox.0[1]);
    let g = cfg.grid;
    let cell = sx * sy / (g * g) as f64;
    let mut reps = Vec::with_capacity(cfg.replicates);
    for rep in 0..cfg.replicates {
        let sums = (0..g)
            .into_par_iter()
            .map(|i0| -> Result<[f64; 3]> {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(stream.wrapping_mul(1 << 20) ^ ((rep as u64) << 12) ^ i0 as u64);
                let mut cs = base.clone();
                let mut acc = [0.0; 3];
                for i1 in 0..g {
                    let u = [
                        ubox.0[0] + sx * (i0 as f64 + rng.gen::<f64>()) / g as f64,
                        ubox.0[1] + sy * (i1 as f64 + rng.gen::<f64>()) / g as f64,
                    ];
                    let m = if r == 0.0 {
                        let inside = cs.iter().all(|c| c.contains(u));
                        RegionMeasures { chi: if inside { 1.0 } else { 0.0 }, perimeter: 0.0, area: 0.0 }
                    } else {
                        slice_measures(&mut cs, u, r)?
                    };
                    if m.chi == 0.0 {
                        continue;
                    }
                    for (a, &rp) in acc.iter_mut().zip(rps) {
                        *a += m.area + rp * m.perimeter + PI * rp * rp * m.chi;
                    }
                }
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tot = [0.0; 3];
        for s in sums {
            for k in 0..3 {
                tot[k] += s[k] * cell;
            }
        }
        reps.push(tot);
    }
    let n = reps.len() as f64;
    let mut out = [(0.0, 0.0); 3];
    for k in 0..3 {
        let mean = reps.iter().map(|t| t[k]).sum::<f64>() / n;
        let var = if reps.len() > 1 { reps.iter().map(|t| (t[k] - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        out[k] = (mean, (var / n).sqrt());
    }
    Ok(out)
}

fn steiner_matrix(nodes: &[f64; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, k| match k {
        0 => PI * nodes[i] * nodes[i],
        1 => 2.0 * nodes[i],
        _ => 1.0,
    })
}

/// `(V_i · V_j)(K)` for all `i, j`, with standard errors propagated linearly.
#[derive(Debug, Clone, Serialize)]
pub struct ProductTable {
    pub values: [[f64; 3]; 3],
    pub stderr: [[f64; 3]; 3],
}

/// Samples all nine volumes (no symmetry assumed) and inverts the Steiner matrix.
pub fn product_table(body: &PlanarBody, cfg: &OracleConfig, body_index: u64) -> Result<ProductTable> {
    let mut m = Matrix3::zeros();
    let mut s = Matrix3::zeros();
    match cfg.method {
        OracleMethod::HitOrMiss => {
            for (a, &r) in cfg.nodes.iter().enumerate() {
                for (b, &rp) in cfg.nodes.iter().enumerate() {
                    let (v, e) = diagonal_volume(body, r, rp, cfg, body_index * 16 + (3 * a + b) as u64)?;
                    m[(a, b)] = v;
                    s[(a, b)] = e;
                }
            }
        }
        OracleMethod::Conditional => {
            for (a, &r) in cfg.nodes.iter().enumerate() {
                let rows = conditional_volumes(body, r, &cfg.nodes, cfg, body_index * 16 + a as u64)?;
                for b in 0..3 {
                    m[(a, b)] = rows[b].0;
                    s[(a, b)] = rows[b].1;
                }
            }
        }
    }
    let ainv = steiner_matrix(&cfg.nodes).try_inverse().expect("Steiner nodes are distinct");
    let p = ainv * m * ainv.transpose();
    let mut values = [[0.0; 3]; 3];
    let mut stderr = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            values[i][j] = p[(i, j)];
            let mut var = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    var += (ainv[(i, a)] * ainv[(j, b)] * s[(a, b)]).powi(2);
                }
            }
            stderr[i][j] = var.sqrt();
        }
    }
    Ok(ProductTable { values, stderr })
}

/// Exact `(χ, V₁, V₂)` of a planar body.
pub fn basis_values(body: &PlanarBody) -> [f64; 3] {
    [1.0, 0.5 * body.perimeter(), body.signed_area()]
}

/// Least squares `y ≈ X c` with the condition number of `X`.
pub fn least_squares(rows: &[[f64; 3]], y: &[f64], max_condition: f64) -> Result<([f64; 3], f64)> {
    let x = DMatrix::from_fn(rows.len(), 3, |i, k| rows[i][k]);
    let svd = x.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if rows.len() < 3 || cond > max_condition {
        return Err(Error::OracleConditioning(cond));
    }
    let c = svd.solve(&DVector::from_column_slice(y), 0.0).map_err(|_| Error::OracleConditioning(cond))?;
    Ok(([c[0], c[1], c[2]], cond))
}

/// Oracle tables on a suite of bodies and the structure constants fitted from them.
#[derive(Debug, Clone, Serialize)]
pub struct TemplateOracle {
    pub tables: Vec<ProductTable>,
    pub basis: Vec<[f64; 3]>,
    /// `c[i][j]` are the `(χ, V₁, V₂)` coordinates of `V_i · V_j`.
    pub constants: [[[f64; 3]; 3]; 3],
    pub condition: f64,
}

impl TemplateOracle {
    pub fn build(suite: &[PlanarBody], cfg: &OracleConfig) -> Result<Self> {
        let tables = suite
            .iter()
            .enumerate()
            .map(|(k, b)| product_table(b, cfg, k as u64))
            .collect::<Result<Vec<_>>>()?;
        let basis: Vec<[f64; 3]> = suite.iter().map(basis_values).collect();
        let mut constants = [[[0.0; 3]; 3]; 3];
        let mut condition = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let y: Vec<f64> = tables.iter().map(|t| t.values[i][j]).collect();
                let (c, cond) = least_squares(&basis, &y, cfg.max_condition)?;
                constants[i][j] = c;
                condition = cond;
            }
        }
        Ok(Self { tables, basis, constants, condition })
    }

    /// `V_i · V_j` in invariant coordinates.
    pub fn product(&self, i: usize, j: usize) -> InvariantValuation {
        InvariantValuation::new(Space::Plane, self.constants[i][j])
    }
}

/// `template_product(i, j)` over `suite`.
pub fn template_product(i: usize, j: usize, suite: &[PlanarBody], cfg: &OracleConfig) -> Result<InvariantValuation> {
    Ok(TemplateOracle::build(suite, cfg)?.product(i, j))
}
