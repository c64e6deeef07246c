//! Cosphere bundles of ℝ² and S², the contact form, and the Rumin operators.
//!
//! On ℝ² the cosphere bundle is the chart `(x, y, θ)` with contact form
//! `α = cos θ dx + sin θ dy`. Together with `β = −sin θ dx + cos θ dy` and
//! `γ = dθ` it gives a global coframe; `(e_β, e_γ)` spans `ker α`.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::forms::{
    coords, exterior_derivative, fiber_integrate, pullback, Chart, Coeffs, Coords, DifferentialForm, FiberBundle,
    FiberSample, Jacobian, SmoothMap, DEFAULT_STEP,
};
use crate::quadrature::QuadConfig;

/// The circle bundle `S*ℝ² → ℝ²`, `(x, y, θ) ↦ (x, y)`.
pub struct CircleFibration {
    base: Arc<Chart>,
    total: Arc<Chart>,
}

impl FiberBundle for CircleFibration {
    fn base(&self) -> &Arc<Chart> {
        &self.base
    }
    fn total(&self) -> &Arc<Chart> {
        &self.total
    }
    fn fiber_dim(&self) -> usize {
        1
    }
    fn num_cells(&self) -> usize {
        1
    }
    fn cell_sign(&self, _cell: usize) -> f64 {
        1.0
    }
    fn sample(&self, b: &[f64], _cell: usize, params: &[f64]) -> Result<FiberSample> {
        let two_pi = std::f64::consts::TAU;
        Ok(FiberSample {
            point: coords(&[b[0], b[1], two_pi * params[0]]),
            tangents: [coords(&[0.0, 0.0, two_pi])].into_iter().collect(),
            lifts: [coords(&[1.0, 0.0, 0.0]), coords(&[0.0, 1.0, 0.0])].into_iter().collect(),
        })
    }
}

/// Contact geometry of the cosphere bundle of the plane.
pub struct PlaneContact {
    pub base: Arc<Chart>,
    pub chart: Arc<Chart>,
    pub alpha: DifferentialForm,
    pub beta: DifferentialForm,
    pub gamma: DifferentialForm,
    pub d_alpha: DifferentialForm,
    /// `π : (x, y, θ) ↦ (x, y)`.
    pub projection: SmoothMap,
    /// `s : θ ↦ θ + π`.
    pub involution: SmoothMap,
    pub fibration: Arc<CircleFibration>,
    pub step: f64,
}

/// Shared instance of the planar contact structure.
pub fn plane() -> &'static PlaneContact {
    static PLANE: OnceLock<PlaneContact> = OnceLock::new();
    PLANE.get_or_init(PlaneContact::build)
}

impl PlaneContact {
    fn build() -> Self {
        let base = Chart::euclidean("R2", &["x", "y"]);
        let chart = Chart::euclidean("S*R2", &["x", "y", "theta"]);
        let alpha = DifferentialForm::new(&chart, 1, |p| Ok([p[2].cos(), p[2].sin(), 0.0].into_iter().collect()));
        let beta = DifferentialForm::new(&chart, 1, |p| Ok([-p[2].sin(), p[2].cos(), 0.0].into_iter().collect()));
        let gamma = DifferentialForm::coordinate(&chart, 2);
        // dα = −sinθ dθ∧dx + cosθ dθ∧dy, stored over (dx∧dy, dx∧dθ, dy∧dθ).
        let d_alpha = DifferentialForm::new(&chart, 2, |p| Ok([0.0, p[2].sin(), -p[2].cos()].into_iter().collect()));
        let projection = SmoothMap::new(&chart, &base, |p| Ok(coords(&[p[0], p[1]])))
            .with_jacobian(|_| Ok(Jacobian::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])));
        let involution = SmoothMap::new(&chart, &chart, |p| Ok(coords(&[p[0], p[1], p[2] + std::f64::consts::PI])))
            .with_jacobian(|_| Ok(Jacobian::identity(3)));
        let fibration = Arc::new(CircleFibration { base: base.clone(), total: chart.clone() });
        Self { base, chart, alpha, beta, gamma, d_alpha, projection, involution, fibration, step: DEFAULT_STEP }
    }

    /// `(e_β, e_γ)` at `p`: a frame of the contact plane `ker α`.
    pub fn frame(&self, p: &[f64]) -> (Coords, Coords) {
        let t = p[2];
        (coords(&[-t.sin(), t.cos(), 0.0]), coords(&[0.0, 0.0, 1.0]))
    }

    /// `π^* a` for a form on the base.
    pub fn lift(&self, a: &DifferentialForm) -> Result<DifferentialForm> {
        pullback(&self.projection, a)
    }

    /// `π_* a`, integration over the circle fibers.
    pub fn push(&self, a: &DifferentialForm, cfg: &QuadConfig) -> Result<DifferentialForm> {
        fiber_integrate(&self.fibration, a, cfg)
    }

    /// `s^* a`.
    pub fn flip(&self, a: &DifferentialForm) -> Result<DifferentialForm> {
        pullback(&self.involution, a)
    }

    /// Sample grid `[x0,x1]×[y0,y1]×[0,2π)` with `n` points per spatial axis
    /// and `m` angles.
    pub fn grid(&self, x: (f64, f64), y: (f64, f64), n: usize, m: usize) -> Vec<Coords> {
        let mut out = Vec::with_capacity(n * n * m);
        let lerp = |r: (f64, f64), i: usize| if n == 1 { 0.5 * (r.0 + r.1) } else { r.0 + (r.1 - r.0) * i as f64 / (n - 1) as f64 };
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    out.push(coords(&[lerp(x, i), lerp(y, j), std::f64::consts::TAU * (k as f64 + 0.5) / m as f64]));
                }
            }
        }
        out
    }
}

/// Outcome of a verticality test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalityReport {
    pub vertical: bool,
    pub max_residual: f64,
    pub tol: f64,
}

/// Residual of `a` on tuples of contact-frame vectors, maximized over `samples`.
pub fn vertical_residual(a: &DifferentialForm, samples: &[Coords]) -> Result<f64> {
    let geo = plane();
    let mut worst = 0.0_f64;
    for p in samples {
        let (eb, eg) = geo.frame(p);
        let r = match a.degree() {
            0 => a.coeffs_at(p)?[0].abs(),
            1 => a.eval(p, &[&eb])?.abs().max(a.eval(p, &[&eg])?.abs()),
            2 => a.eval(p, &[&eb, &eg])?.abs(),
            // ker α is 2-dimensional: no non-trivial 3-tuples
            _ => 0.0,
        };
        worst = worst.max(r);
    }
    Ok(worst)
}

/// True iff `a` vanishes on the contact distribution at every sample.
pub fn is_vertical(a: &DifferentialForm, samples: &[Coords], tol: f64) -> Result<VerticalityReport> {
    let max_residual = vertical_residual(a, samples)?;
    Ok(VerticalityReport { vertical: max_residual < tol, max_residual, tol })
}

/// Verticality with the default tolerance `10⁻⁶ · sup|coefficients|`.
pub fn is_vertical_default(a: &DifferentialForm, samples: &[Coords]) -> Result<VerticalityReport> {
    let scale = a.sup_norm(samples)?;
    is_vertical(a, samples, 1e-6 * scale.max(f64::MIN_POSITIVE))
}

/// `Q a = a + f α` where `f = −(da)(e_β, e_γ) / (dα)(e_β, e_γ)` makes `d(Q a)` vertical.
pub fn rumin_q(a: &DifferentialForm, h: f64) -> Result<DifferentialForm> {
    let geo = plane();
    if a.degree() != 1 {
        return Err(Error::DegreeError(format!("Q acts on 1-forms, got degree {}", a.degree())));
    }
    if a.is_zero() {
        return Ok(a.clone());
    }
    let da = exterior_derivative(a, h)?;
    let form = a.clone();
    Ok(DifferentialForm::new(&geo.chart, 1, move |p| {
        let (eb, eg) = geo.frame(p);
        let num = da.eval(p, &[&eb, &eg])?;
        let den = geo.d_alpha.eval(p, &[&eb, &eg])?;
        if den.abs() < 1e-12 {
            return Err(Error::ContactDegeneracy { point: p.to_vec() });
        }
        let f = -num / den;
        let mut c: Coeffs = form.coeffs_at(p)?;
        c[0] += f * p[2].cos();
        c[1] += f * p[2].sin();
        Ok(c)
    }))
}

/// The Rumin operator `D = d ∘ Q`.
pub fn rumin_d(a: &DifferentialForm, h: f64) -> Result<DifferentialForm> {
    exterior_derivative(&rumin_q(a, h)?, h)
}

/// Contact structure of the cosphere bundle of the unit sphere, realized as
/// `{(p, v) : |p| = 1, ⟨p, v⟩ = 0, |v| = 1}` inside ℝ³ × ℝ³.
pub mod sphere {
    pub type Vec3 = [f64; 3];

    pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    }

    pub fn norm(a: &Vec3) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn normalize(a: &Vec3) -> Vec3 {
        let n = norm(a);
        [a[0] / n, a[1] / n, a[2] / n]
    }

    /// Point `(p, v)` of the cosphere bundle of S².
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct CospherePoint {
        pub p: Vec3,
        pub v: Vec3,
    }

    impl CospherePoint {
        pub fn constraint_residual(&self) -> f64 {
            (dot(&self.p, &self.p) - 1.0).abs().max(dot(&self.p, &self.v).abs()).max((dot(&self.v, &self.v) - 1.0).abs())
        }

        /// Orthogonal projection of a 6-vector onto the tangent space of the constraint manifold.
        pub fn project_tangent(&self, dp: &Vec3, dv: &Vec3) -> (Vec3, Vec3) {
            // Constraints: ⟨p,dp⟩ = 0, ⟨v,dv⟩ = 0, ⟨v,dp⟩ + ⟨p,dv⟩ = 0.
            let (p, v) = (self.p, self.v);
            let a = dot(&p, dp);
            let b = dot(&v, dv);
            let c = (dot(&v, dp) + dot(&p, dv)) / 2.0;
            let mut qp = [0.0; 3];
            let mut qv = [0.0; 3];
            for i in 0..3 {
                qp[i] = dp[i] - a * p[i] - c * v[i];
                qv[i] = dv[i] - b * v[i] - c * p[i];
            }
            (qp, qv)
        }

        /// `α(δp, δv) = ⟨v, δp⟩`.
        pub fn alpha(&self, dp: &Vec3, _dv: &Vec3) -> f64 {
            dot(&self.v, dp)
        }

        /// `dα = Σ dv_i ∧ dp_i` on two tangent vectors.
        pub fn d_alpha(&self, x: (&Vec3, &Vec3), y: (&Vec3, &Vec3)) -> f64 {
            dot(x.1, y.0) - dot(y.1, x.0)
        }

        /// Frame `(e_β, e_γ)` of the contact plane: translate along `p × v`, rotate `v` towards `p × v`.
        pub fn frame(&self) -> ((Vec3, Vec3), (Vec3, Vec3)) {
            let w = cross(&self.p, &self.v);
            ((w, [0.0; 3]), ([0.0; 3], w))
        }

        /// `s(p, v) = (p, −v)`.
        pub fn involution(&self) -> CospherePoint {
            CospherePoint { p: self.p, v: [-self.v[0], -self.v[1], -self.v[2]] }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<Coords> {
        plane().grid((-1.0, 1.0), (-0.5, 1.5), 3, 5)
    }

    #[test]
    fn frame_spans_contact_plane() {
        let g = plane();
        for p in samples() {
            let (eb, eg) = g.frame(&p);
            assert!(g.alpha.eval(&p, &[&eb]).unwrap().abs() < 1e-15);
            assert!(g.alpha.eval(&p, &[&eg]).unwrap().abs() < 1e-15);
            assert!(g.d_alpha.eval(&p, &[&eb, &eg]).unwrap().abs() > 0.5);
        }
    }

    #[test]
    fn involution_squares_to_identity() {
        let s = &plane().involution;
        let p = [0.2, -0.4, 1.1];
        let q = s.apply(&s.apply(&p).unwrap()).unwrap();
        assert!((q[2] - p[2] - std::f64::consts::TAU).abs() < 1e-15);
        assert_eq!(&q[..2], &p[..2]);
    }

    #[test]
    fn q_kills_multiples_of_alpha() {
        let g = plane();
        let a = g.alpha.multiply(|p| 1.0 + p[0] * p[1] + p[2].sin());
        let qa = rumin_q(&a, g.step).unwrap();
        assert!(qa.sup_norm(&samples()).unwrap() < 1e-8);
    }

    #[test]
    fn q_fixes_beta() {
        let g = plane();
        let qb = rumin_q(&g.beta, g.step).unwrap();
        let diff = qb.sub(&g.beta).unwrap();
        assert!(diff.sup_norm(&samples()).unwrap() < 1e-9);
    }

    #[test]
    fn beta_is_not_vertical() {
        let g = plane();
        let r = is_vertical_default(&g.beta, &samples()).unwrap();
        assert!(!r.vertical);
        assert!((r.max_residual - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_frame_is_contact() {
        use sphere::*;
        let p = normalize(&[0.3, -0.2, 0.9]);
        let v = normalize(&cross(&p, &[1.0, 0.0, 0.0]));
        let pt = CospherePoint { p, v };
        assert!(pt.constraint_residual() < 1e-14);
        let (eb, eg) = pt.frame();
        assert!(pt.alpha(&eb.0, &eb.1).abs() < 1e-15);
        assert!(pt.alpha(&eg.0, &eg.1).abs() < 1e-15);
        assert!((pt.d_alpha((&eb.0, &eb.1), (&eg.0, &eg.1)) + 1.0).abs() < 1e-12);
        let (qp, qv) = pt.project_tangent(&eb.0, &eb.1);
        assert!((qp[0] - eb.0[0]).abs() + (qv[2] - eb.1[2]).abs() < 1e-14);
        assert_eq!(pt.involution().involution(), pt);
    }
}
