//! Checks of the Rumin operators and of the gauge freedom of valuation representatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bodies::PlanarBody;
use crate::contact::{plane, rumin_d, rumin_q, vertical_residual};
use crate::currents::{random_convex_polygon, random_test_form};
use crate::error::Result;
use crate::forms::{Coords, DifferentialForm};
use crate::quadrature::QuadConfig;
use crate::valuations::ValuationRep;

/// `f(x, y, θ) = a₀x² + a₁xy + a₂ y sin θ + a₃ x cos 2θ + a₄ cos θ` with its exact differential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub a: [f64; 5],
}

impl TestFunction {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        Self { a: std::array::from_fn(|_| rng.gen_range(-1.0..1.0)) }
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        let [a0, a1, a2, a3, a4] = self.a;
        let (x, y, t) = (p[0], p[1], p[2]);
        a0 * x * x + a1 * x * y + a2 * y * t.sin() + a3 * x * (2.0 * t).cos() + a4 * t.cos()
    }

    pub fn gradient(&self, p: &[f64]) -> [f64; 3] {
        let [a0, a1, a2, a3, a4] = self.a;
        let (x, y, t) = (p[0], p[1], p[2]);
        [
            2.0 * a0 * x + a1 * y + a3 * (2.0 * t).cos(),
            a1 * x + a2 * t.sin(),
            a2 * y * t.cos() - 2.0 * a3 * x * (2.0 * t).sin() - a4 * t.sin(),
        ]
    }

    /// `f · α`.
    pub fn times_alpha(self) -> DifferentialForm {
        DifferentialForm::new(&plane().chart, 1, move |p| {
            let f = self.value(p);
            Ok([f * p[2].cos(), f * p[2].sin(), 0.0].into_iter().collect())
        })
    }

    /// `df`.
    pub fn differential(self) -> DifferentialForm {
        DifferentialForm::new(&plane().chart, 1, move |p| Ok(self.gradient(p).into_iter().collect()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuminSuiteConfig {
    pub h: f64,
    pub seed: u64,
    /// Random 1-forms for the verticality and idempotence checks.
    pub forms: usize,
    pub polygons: usize,
    pub gauges: usize,
    pub quad: QuadConfig,
}

impl Default for RuminSuiteConfig {
    fn default() -> Self {
        Self {
            h: crate::forms::DEFAULT_STEP,
            seed: 1,
            forms: 50,
            polygons: 10,
            gauges: 5,
            quad: QuadConfig { rel_tol: 1e-11, abs_tol: 1e-13, budget: 200_000 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuminSuiteReport {
    /// `sup |D(f α)|`.
    pub d_of_f_alpha: f64,
    /// `sup |D(df)|`.
    pub d_of_exact: f64,
    /// `max sup |D ω|` on the contact planes.
    pub vertical: f64,
    /// `max sup |Q Q ω − Q ω|`.
    pub q_idempotence: f64,
    /// `max |μ'(P) − μ(P)| / max(1, |μ(P)|)` over gauge changes `ω ↦ ω + f α + dg`.
    pub gauge: f64,
    /// Residuals must stay below `100 h`.
    pub form_tol: f64,
    pub gauge_tol: f64,
}

impl RuminSuiteReport {
    pub fn passed(&self) -> bool {
        [self.d_of_f_alpha, self.d_of_exact, self.vertical, self.q_idempotence].iter().all(|r| *r < self.form_tol)
            && self.gauge < self.gauge_tol
    }
}

fn samples() -> Vec<Coords> {
    plane().grid((-1.0, 1.0), (-1.0, 1.0), 3, 5)
}

/// Random polynomial 2-form on the base.
fn random_area_form(rng: &mut ChaCha8Rng) -> DifferentialForm {
    let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    DifferentialForm::new(&plane().base, 2, move |p| Ok([c[0] + c[1] * p[0] + c[2] * p[1] * p[1]].into_iter().collect()))
}

pub fn rumin_suite(cfg: &RuminSuiteConfig) -> Result<RuminSuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts = samples();
    let mut d_of_f_alpha = 0.0_f64;
    let mut d_of_exact = 0.0_f64;
    for _ in 0..5 {
        let f = TestFunction::random(&mut rng);
        d_of_f_alpha = d_of_f_alpha.max(rumin_d(&f.times_alpha(), cfg.h)?.sup_norm(&pts)?);
        d_of_exact = d_of_exact.max(rumin_d(&f.differential(), cfg.h)?.sup_norm(&pts)?);
    }
    let mut vertical = 0.0_f64;
    let mut q_idempotence = 0.0_f64;
    for _ in 0..cfg.forms {
        let w = random_test_form(&mut rng);
        vertical = vertical.max(vertical_residual(&rumin_d(&w, cfg.h)?, &pts)?);
        let q = rumin_q(&w, cfg.h)?;
        q_idempotence = q_idempotence.max(rumin_q(&q, cfg.h)?.sub(&q)?.sup_norm(&pts)?);
    }
    let mut gauge = 0.0_f64;
    for _ in 0..cfg.polygons {
        let n = rng.gen_range(3..7);
        let body: PlanarBody = random_convex_polygon(&mut rng, n)?;
        let v = ValuationRep::new(random_test_form(&mut rng), random_area_form(&mut rng), None)?;
        let base = v.evaluate(&body, &cfg.quad)?;
        for _ in 0..cfg.gauges {
            let (f, g) = (TestFunction::random(&mut rng), TestFunction::random(&mut rng));
            let omega = v.omega.add(&f.times_alpha())?.add(&g.differential())?;
            let moved = ValuationRep::new(omega, v.phi.clone(), None)?.evaluate(&body, &cfg.quad)?;
            gauge = gauge.max((moved - base).abs() / base.abs().max(1.0));
        }
    }
    Ok(RuminSuiteReport {
        d_of_f_alpha,
        d_of_exact,
        vertical,
        q_idempotence,
        gauge,
        form_tol: 100.0 * cfg.h,
        gauge_tol: 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_differential_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = TestFunction::random(&mut rng);
        let p = [0.3, -0.4, 1.1];
        let g = f.gradient(&p);
        for k in 0..3 {
            let (mut a, mut b) = (p, p);
            a[k] += 1e-6;
            b[k] -= 1e-6;
            assert!(((f.value(&a) - f.value(&b)) / 2e-6 - g[k]).abs() < 1e-8);
        }
    }
}
