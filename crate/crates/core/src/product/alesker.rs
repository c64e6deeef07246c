//! The product of two smooth valuations on the plane from their representing pairs.

use crate::contact::{plane, rumin_d};
use crate::error::Result;
use crate::forms::{pullback, wedge, Coords, DifferentialForm};
use crate::quadrature::QuadConfig;
use crate::valuations::ValuationRep;

use super::blowup::{blowup, gelfand_transform};

/// Tolerances for building and evaluating product representatives.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProductConfig {
    /// Fiber quadrature of the Gelfand transform and of `π_*`.
    pub fiber: QuadConfig,
    /// Finite-difference step of the Rumin operator.
    pub h: f64,
}

impl Default for ProductConfig {
    fn default() -> Self {
        Self { fiber: QuadConfig { rel_tol: 1e-8, abs_tol: 1e-10, budget: 400_000 }, h: 1e-3 }
    }
}

/// `Dω + π^*φ`.
fn total_differential(v: &ValuationRep, h: f64) -> Result<DifferentialForm> {
    let geo = plane();
    rumin_d(&v.omega, h)?.add(&geo.lift(&v.phi)?)
}

/// `GT(q₁^* a ∧ q₂^* b)` for forms `a, b` on the cosphere bundle.
pub fn gt_pair(a: &DifferentialForm, b: &DifferentialForm, cfg: &QuadConfig) -> Result<DifferentialForm> {
    let bl = blowup();
    let prod = wedge(&pullback(&bl.q1, a)?, &pullback(&bl.q2, b)?)?;
    gelfand_transform(&prod, cfg)
}

/// Representing pair of `μ₁ · μ₂`:
///
/// `ω = GT(q₁^*ω₁ ∧ q₂^*Dω₂) + ω₁ ∧ π^*π_*ω₂`,
/// `φ = π_*(ω₁ ∧ s^*(Dω₂ + π^*φ₂)) + φ₁ ∧ π_*ω₂`.
pub fn alesker_product(v1: &ValuationRep, v2: &ValuationRep, cfg: &ProductConfig) -> Result<ValuationRep> {
    let geo = plane();
    let d2 = rumin_d(&v2.omega, cfg.h)?;
    let push2 = geo.push(&v2.omega, &cfg.fiber)?;

    let omega = gt_pair(&v1.omega, &d2, &cfg.fiber)?.add(&wedge(&v1.omega, &geo.lift(&push2)?)?)?;

    let closed2 = d2.add(&geo.lift(&v2.phi)?)?;
    let phi = geo.push(&wedge(&v1.omega, &geo.flip(&closed2)?)?, &cfg.fiber)?.add(&wedge(&v1.phi, &push2)?)?;

    let label = match (&v1.label, &v2.label) {
        (Some(a), Some(b)) => Some(format!("{a}*{b}")),
        _ => None,
    };
    Ok(ValuationRep { omega, phi, label })
}

/// Grid sup-norms of the two identities satisfied by a product representative.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Prop64Report {
    /// `Dω + π^*φ` against the Gelfand-transform expression.
    pub closed_residual: f64,
    /// `π_*ω` against `π_*ω₁ · π_*ω₂`.
    pub push_residual: f64,
    pub tol: f64,
}

impl Prop64Report {
    pub fn passed(&self) -> bool {
        self.closed_residual < self.tol && self.push_residual < self.tol
    }
}

/// Checks
/// `Dω + π^*φ = GT(q₁^*(Dω₁+π^*φ₁) ∧ q₂^*(Dω₂+π^*φ₂)) + π^*π_*ω₁ ∧ (Dω₂+π^*φ₂) + π^*π_*ω₂ ∧ (Dω₁+π^*φ₁)`
/// and `π_*ω = π_*ω₁ ∧ π_*ω₂` on `samples` of the cosphere bundle.
/// The tolerance is `10³ h`.
pub fn verify_prop64(
    v1: &ValuationRep,
    v2: &ValuationRep,
    vprod: &ValuationRep,
    samples: &[Coords],
    cfg: &ProductConfig,
) -> Result<Prop64Report> {
    let geo = plane();
    let c1 = total_differential(v1, cfg.h)?;
    let c2 = total_differential(v2, cfg.h)?;
    let p1 = geo.push(&v1.omega, &cfg.fiber)?;
    let p2 = geo.push(&v2.omega, &cfg.fiber)?;

    let lhs = total_differential(vprod, cfg.h)?;
    let rhs = gt_pair(&c1, &c2, &cfg.fiber)?
        .add(&wedge(&geo.lift(&p1)?, &c2)?)?
        .add(&wedge(&geo.lift(&p2)?, &c1)?)?;
    let closed_residual = lhs.sub(&rhs)?.sup_norm(samples)?;

    let push = geo.push(&vprod.omega, &cfg.fiber)?.sub(&wedge(&p1, &p2)?)?;
    let base: Vec<Coords> = samples.iter().map(|p| p.iter().take(2).copied().collect()).collect();
    let push_residual = push.sup_norm(&base)?;
    Ok(Prop64Report { closed_residual, push_residual, tol: 1e3 * cfg.h })
}
