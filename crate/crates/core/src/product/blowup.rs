//! The blow-up double fibration over the diagonal and its Gelfand transform.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use crate::contact::plane;
use crate::error::{Error, Result};
use crate::forms::{
    coords, fiber_integrate, pullback, Chart, DifferentialForm, FiberBundle, FiberSample, Jacobian, SmoothMap,
};
use crate::quadrature::QuadConfig;

/// Global orientation of the blow-up, fixed by requiring `χ · V₁ = V₁`.
pub const ORIENTATION: f64 = -1.0;

/// `ψ − θ₁` for the direction of `(1 − t) u(θ₁) + t u(θ₂)`, with `δ = θ₂ − θ₁`.
fn offset(delta: f64, t: f64) -> f64 {
    (t * delta.sin()).atan2(1.0 - t + t * delta.cos())
}

/// The `t` for which `(1 − t) u(θ₁) + t u(θ₂)` points along `ψ`, where
/// `θ₁ = ψ ∓ a` and `θ₂ = ψ ± b` with `a, b > 0`, `a + b < π`.
pub fn solve_t(a: f64, b: f64) -> f64 {
    let (sa, sb) = (a.sin(), b.sin());
    sa / (sa + sb)
}

/// Fibers of `p̄` over `(x, y, ψ)`: two triangles `{a, b > 0, a + b < π}` with
/// `(θ₁, θ₂) = (ψ − a, ψ + b)` in cell 0 and `(ψ + a, ψ − b)` in cell 1.
/// Parametrized by `a = πu`, `b = (π − a) v`.
pub struct BlowupFibers {
    base: Arc<Chart>,
    total: Arc<Chart>,
    orientation: f64,
}

impl FiberBundle for BlowupFibers {
    fn base(&self) -> &Arc<Chart> {
        &self.base
    }
    fn total(&self) -> &Arc<Chart> {
        &self.total
    }
    fn fiber_dim(&self) -> usize {
        2
    }
    fn num_cells(&self) -> usize {
        2
    }
    fn cell_sign(&self, cell: usize) -> f64 {
        // The fiber carries ±dθ₁∧dθ₂ on the two cells; the (u, v) parametrization
        // reverses dθ₁∧dθ₂ on both.
        if cell == 0 {
            -self.orientation
        } else {
            self.orientation
        }
    }
    fn sample(&self, b: &[f64], cell: usize, params: &[f64]) -> Result<FiberSample> {
        let (u, v) = (params[0], params[1]);
        let a = PI * u;
        let bb = (PI - a) * v;
        let (sa, ca, sb, cb) = (a.sin(), a.cos(), bb.sin(), bb.cos());
        let den = sa + sb;
        let t = sa / den;
        let dt_da = ca * sb / (den * den);
        let dt_db = -sa * cb / (den * den);
        // ∂a/∂u = π, ∂b/∂u = −πv, ∂b/∂v = π(1 − u)
        let (da_u, db_u, db_v) = (PI, -PI * v, PI * (1.0 - u));
        let s = if cell == 0 { 1.0 } else { -1.0 };
        let psi = b[2];
        let point = coords(&[b[0], b[1], psi - s * a, psi + s * bb, t]);
        let tu = coords(&[0.0, 0.0, -s * da_u, s * db_u, dt_da * da_u + dt_db * db_u]);
        let tv = coords(&[0.0, 0.0, 0.0, s * db_v, dt_db * db_v]);
        Ok(FiberSample {
            point,
            tangents: [tu, tv].into_iter().collect(),
            lifts: [
                coords(&[1.0, 0.0, 0.0, 0.0, 0.0]),
                coords(&[0.0, 1.0, 0.0, 0.0, 0.0]),
                coords(&[0.0, 0.0, 1.0, 1.0, 0.0]),
            ]
            .into_iter()
            .collect(),
        })
    }
}

/// Charts and maps of the double fibration `S*ℝ² ← P̄ → S*ℝ² ×_ℝ² S*ℝ²`.
pub struct Blowup {
    /// `(x, y, θ₁, θ₂)`.
    pub fiber_product: Arc<Chart>,
    /// `(x, y, θ₁, θ₂, t)`, away from the antipodal locus.
    pub chart: Arc<Chart>,
    pub q1: SmoothMap,
    pub q2: SmoothMap,
    /// `Φ̄`: forget `t`.
    pub phi_bar: SmoothMap,
    /// `p̄`: `(x, y, angle((1 − t) u(θ₁) + t u(θ₂)))`.
    pub p_bar: SmoothMap,
    pub fibers: Arc<BlowupFibers>,
}

pub fn blowup() -> &'static Blowup {
    static B: OnceLock<Blowup> = OnceLock::new();
    B.get_or_init(|| Blowup::build(ORIENTATION))
}

impl Blowup {
    fn build(orientation: f64) -> Self {
        let geo = plane();
        let fiber_product = Chart::euclidean("S*R2xS*R2", &["x", "y", "theta1", "theta2"]);
        let chart = Chart::new("Pbar", &["x", "y", "theta1", "theta2", "t"], |p| {
            let d = (p[3] - p[2]).rem_euclid(2.0 * PI);
            (0.0..=1.0).contains(&p[4]) && (d - PI).abs() > 0.0
        });
        let q1 = SmoothMap::new(&fiber_product, &geo.chart, |p| Ok(coords(&[p[0], p[1], p[2]]))).with_jacobian(|_| {
            Ok(Jacobian::from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 0.0]]))
        });
        let q2 = SmoothMap::new(&fiber_product, &geo.chart, |p| Ok(coords(&[p[0], p[1], p[3]]))).with_jacobian(|_| {
            Ok(Jacobian::from_rows(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0]]))
        });
        let phi_bar = SmoothMap::new(&chart, &fiber_product, |p| Ok(coords(&[p[0], p[1], p[2], p[3]]))).with_jacobian(
            |_| {
                Ok(Jacobian::from_rows(&[
                    &[1.0, 0.0, 0.0, 0.0, 0.0],
                    &[0.0, 1.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 1.0, 0.0, 0.0],
                    &[0.0, 0.0, 0.0, 1.0, 0.0],
                ]))
            },
        );
        let p_bar = SmoothMap::new(&chart, &geo.chart, |p| Ok(coords(&[p[0], p[1], p[2] + offset(p[3] - p[2], p[4])])))
            .with_jacobian(|p| {
                let (delta, t) = (p[3] - p[2], p[4]);
                let (sd, cd) = (delta.sin(), delta.cos());
                let m = 1.0 - t + t * cd;
                let r = m * m + t * t * sd * sd;
                let g_delta = t * ((1.0 - t) * cd + t) / r;
                let g_t = sd / r;
                Ok(Jacobian::from_rows(&[
                    &[1.0, 0.0, 0.0, 0.0, 0.0],
                    &[0.0, 1.0, 0.0, 0.0, 0.0],
                    &[0.0, 0.0, 1.0 - g_delta, g_delta, g_t],
                ]))
            });
        let fibers = Arc::new(BlowupFibers { base: geo.chart.clone(), total: chart.clone(), orientation });
        Self { fiber_product, chart, q1, q2, phi_bar, p_bar, fibers }
    }
}

/// `GT = p̄_* Φ̄^*`, lowering degree by 2.
pub fn gelfand_transform(a: &DifferentialForm, cfg: &QuadConfig) -> Result<DifferentialForm> {
    gelfand_transform_oriented(a, ORIENTATION, cfg)
}

/// `GT` with an explicit global orientation `±1`; used to calibrate [`ORIENTATION`].
pub fn gelfand_transform_oriented(a: &DifferentialForm, orientation: f64, cfg: &QuadConfig) -> Result<DifferentialForm> {
    let bl = blowup();
    if a.degree() < 2 {
        return Err(Error::DegreeError(format!("Gelfand transform of a {}-form", a.degree())));
    }
    let pulled = pullback(&bl.phi_bar, a)?;
    if orientation == ORIENTATION {
        fiber_integrate(&bl.fibers, &pulled, cfg)
    } else {
        let fibers = Arc::new(BlowupFibers { base: bl.fibers.base.clone(), total: bl.chart.clone(), orientation });
        fiber_integrate(&fibers, &pulled, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_points_project_to_base_point() {
        let bl = blowup();
        let base = [0.3, -0.2, 1.1];
        for cell in 0..2 {
            for (u, v) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.97)] {
                let s = bl.fibers.sample(&base, cell, &[u, v]).unwrap();
                let q = bl.p_bar.apply(&s.point).unwrap();
                let d = (q[2] - base[2]).rem_euclid(2.0 * PI);
                assert!(d.min(2.0 * PI - d) < 1e-10, "cell {cell} ({u},{v}) psi {}", q[2]);
                // Fiber tangents are killed by dp̄; lifts map to the base frame.
                let j = bl.p_bar.jacobian(&s.point).unwrap();
                for t in &s.tangents {
                    let w = j.apply(t);
                    assert!(w.iter().all(|x| x.abs() < 1e-10));
                }
                let w = j.apply(&s.lifts[2]);
                assert!((w[2] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maps_are_submersions() {
        let bl = blowup();
        let p = [0.1, 0.2, 0.4, 1.3, 0.3];
        assert_eq!(bl.p_bar.jacobian(&p).unwrap().rank(1e-10), 3);
        assert_eq!(bl.phi_bar.jacobian(&p).unwrap().rank(1e-10), 4);
        let num = bl.p_bar.numerical_jacobian(&p).unwrap();
        let ana = bl.p_bar.jacobian(&p).unwrap();
        for i in 0..3 {
            for k in 0..5 {
                assert!((num.data[i][k] - ana.data[i][k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn degree_bookkeeping() {
        let bl = blowup();
        let a = DifferentialForm::constant(&bl.fiber_product, 3, &[0.0, 1.0, 0.0, 0.0]);
        let g = gelfand_transform(&a, &QuadConfig::default()).unwrap();
        assert_eq!(g.degree(), 1);
        assert!(gelfand_transform(&DifferentialForm::zero(&bl.fiber_product, 1), &QuadConfig::default()).is_err());
    }
}
