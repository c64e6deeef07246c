//! Smooth valuations: representing pairs, invariant coordinates, involution and seminorms.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bodies::{integrate_density, normal_cycle, Body, PlanarBody, RegionMeasures};
use crate::contact::{plane, rumin_d};
use crate::error::{Error, Result};
use crate::forms::{coords, Coords, DifferentialForm};
use crate::quadrature::QuadConfig;

/// A pair `(ω, φ)`: `ω` a 1-form on `S*ℝ²`, `φ` a 2-form on `ℝ²`.
#[derive(Clone, Debug)]
pub struct ValuationRep {
    pub omega: DifferentialForm,
    pub phi: DifferentialForm,
    pub label: Option<String>,
}

impl ValuationRep {
    pub fn new(omega: DifferentialForm, phi: DifferentialForm, label: Option<&str>) -> Result<Self> {
        let geo = plane();
        if omega.chart().id() != geo.chart.id() {
            return Err(Error::ChartMismatch { expected: geo.chart.id().into(), found: omega.chart().id().into() });
        }
        if phi.chart().id() != geo.base.id() {
            return Err(Error::ChartMismatch { expected: geo.base.id().into(), found: phi.chart().id().into() });
        }
        if omega.degree() != 1 || phi.degree() != 2 {
            return Err(Error::DegreeError(format!(
                "representing pair needs degrees (1, 2), got ({}, {})",
                omega.degree(),
                phi.degree()
            )));
        }
        Ok(Self { omega, phi, label: label.map(str::to_owned) })
    }

    pub fn zero() -> Self {
        let geo = plane();
        Self { omega: DifferentialForm::zero(&geo.chart, 1), phi: DifferentialForm::zero(&geo.base, 2), label: None }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.to_owned());
        self
    }

    pub fn add(&self, other: &ValuationRep) -> Result<ValuationRep> {
        Ok(ValuationRep { omega: self.omega.add(&other.omega)?, phi: self.phi.add(&other.phi)?, label: None })
    }

    pub fn scale(&self, s: f64) -> ValuationRep {
        ValuationRep { omega: self.omega.scale(s), phi: self.phi.scale(s), label: None }
    }

    /// `μ(P) = ∫_{N(P)} ω + ∫_P φ`.
    pub fn evaluate(&self, body: &PlanarBody, cfg: &QuadConfig) -> Result<f64> {
        evaluate(self, body, cfg)
    }
}

pub fn evaluate(v: &ValuationRep, body: &PlanarBody, cfg: &QuadConfig) -> Result<f64> {
    let cyc = if v.omega.is_zero() { 0.0 } else { normal_cycle(body).integrate(&v.omega, cfg)? };
    Ok(cyc + integrate_density(body, &v.phi, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Plane,
    Sphere,
}

impl Space {
    pub fn basis_names(self) -> [&'static str; 3] {
        match self {
            Space::Plane => ["chi", "v1", "area"],
            Space::Sphere => ["sphere-chi", "sphere-perim", "sphere-area"],
        }
    }
}

/// Coordinates over the invariant basis: `(χ, V₁, V₂)` on the plane,
/// `(χ, perimeter, area)` on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantValuation {
    pub space: Space,
    pub coords: [f64; 3],
}

impl InvariantValuation {
    pub fn new(space: Space, coords: [f64; 3]) -> Self {
        Self { space, coords }
    }

    pub fn basis(space: Space, i: usize) -> Self {
        let mut c = [0.0; 3];
        c[i] = 1.0;
        Self::new(space, c)
    }

    /// Basis values on a body with the given measures.
    pub fn basis_values(space: Space, m: &RegionMeasures) -> [f64; 3] {
        match space {
            Space::Plane => [m.chi, 0.5 * m.perimeter, m.area],
            Space::Sphere => [m.chi, m.perimeter, m.area],
        }
    }

    pub fn evaluate_measures(&self, m: &RegionMeasures) -> f64 {
        let b = Self::basis_values(self.space, m);
        (0..3).map(|i| self.coords[i] * b[i]).sum()
    }

    pub fn evaluate(&self, body: &Body) -> Result<f64> {
        let m = match (body, self.space) {
            (Body::Planar(p), Space::Plane) => RegionMeasures { chi: 1.0, perimeter: p.perimeter(), area: p.signed_area() },
            (Body::Spherical(s), Space::Sphere) => s.measures(),
            _ => return Err(Error::InvalidBody("valuation and body live on different spaces".into())),
        };
        Ok(self.evaluate_measures(&m))
    }

    /// `∫ μ = μ(S²)`, defined on the sphere only.
    pub fn integral(&self) -> Result<f64> {
        match self.space {
            Space::Sphere => Ok(self.coords[0] * 2.0 + self.coords[2] * 2.0 * TAU),
            Space::Plane => Err(Error::InvalidBody("the integral is defined on compact spaces only".into())),
        }
    }

    /// A representing pair for a planar invariant valuation.
    pub fn to_rep(&self) -> Result<ValuationRep> {
        if self.space != Space::Plane {
            return Err(Error::InvalidBody("representing pairs are built on the plane only".into()));
        }
        let b = standard_basis();
        let mut out = ValuationRep::zero();
        for (k, rep) in b.iter().enumerate() {
            if self.coords[k] != 0.0 {
                out = out.add(&rep.scale(self.coords[k]))?;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for InvariantValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.space.basis_names();
        let parts: Vec<String> = (0..3).map(|i| format!("{}*{}", self.coords[i], names[i])).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `χ ↦ (γ/2π, 0)`, `V₁ ↦ (β/2, 0)`, `V₂ ↦ (0, dx∧dy)`.
pub fn standard_basis() -> [ValuationRep; 3] {
    let geo = plane();
    let chi = ValuationRep {
        omega: geo.gamma.scale(1.0 / TAU),
        phi: DifferentialForm::zero(&geo.base, 2),
        label: Some("chi".into()),
    };
    let v1 =
        ValuationRep { omega: geo.beta.scale(0.5), phi: DifferentialForm::zero(&geo.base, 2), label: Some("v1".into()) };
    let area = ValuationRep {
        omega: DifferentialForm::zero(&geo.chart, 1),
        phi: DifferentialForm::constant(&geo.base, 2, &[1.0]),
        label: Some("area".into()),
    };
    [chi, v1, area]
}

/// `σ(ω, φ) = (s^*ω, φ)` (the signs `(−1)^n` cancel for `n = 2`).
pub fn euler_verdier(v: &ValuationRep) -> Result<ValuationRep> {
    Ok(ValuationRep { omega: plane().flip(&v.omega)?, phi: v.phi.clone(), label: v.label.clone() })
}

/// Rectangular window `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Window {
    pub fn around(body: &PlanarBody) -> Self {
        let (lo, hi) = body.bbox();
        Self { x: (lo[0], hi[0]), y: (lo[1], hi[1]) }
    }
}

/// Settings of the seminorm grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormGrid {
    /// Points per spatial axis.
    pub n: usize,
    /// Points along the fiber angle.
    pub m: usize,
    /// Difference step.
    pub h: f64,
}

impl Default for SeminormGrid {
    fn default() -> Self {
        Self { n: 7, m: 8, h: 1e-3 }
    }
}

/// Multisets of axes of size `order` over `dim` axes, as nondecreasing sequences.
fn derivative_multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    if order == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for prev in derivative_multi_indices(dim, order - 1) {
        let start = prev.last().copied().unwrap_or(0);
        for a in start..dim {
            let mut v = prev.clone();
            v.push(a);
            out.push(v);
        }
    }
    out
}

/// Central-difference mixed partial of every coefficient along `axes`.
fn partial(form: &DifferentialForm, p: &[f64], axes: &[usize], h: f64) -> Result<Coords> {
    match axes.split_first() {
        None => Ok(form.coeffs_at(p)?.into_iter().collect()),
        Some((&a, rest)) => {
            let mut q = coords(p);
            q[a] = p[a] + h;
            let fp = partial(form, &q, rest, h)?;
            q[a] = p[a] - h;
            let fm = partial(form, &q, rest, h)?;
            Ok(fp.iter().zip(&fm).map(|(x, y)| (x - y) / (2.0 * h)).collect())
        }
    }
}

/// Every coefficient and difference quotient up to order `m` at `points`; empty for a zero form.
fn cm_samples(form: &DifferentialForm, points: &[Coords], m: usize, h: f64) -> Result<Vec<f64>> {
    if form.is_zero() {
        return Ok(Vec::new());
    }
    let dim = form.chart().dim();
    let mut out = Vec::new();
    for order in 0..=m {
        for axes in derivative_multi_indices(dim, order) {
            for p in points {
                out.extend(partial(form, p, &axes, h)?);
            }
        }
    }
    Ok(out)
}

/// The quantities whose sup makes up the seminorm. They depend linearly on the
/// representative, so seminorms of linear combinations follow without re-evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeminormSamples {
    pub omega: Vec<f64>,
    pub phi: Vec<f64>,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn axpy(acc: &mut Vec<f64>, a: f64, x: &[f64]) {
    if acc.len() < x.len() {
        acc.resize(x.len(), 0.0);
    }
    for (y, x) in acc.iter_mut().zip(x) {
        *y += a * x;
    }
}

impl SeminormSamples {
    pub fn norm(&self) -> f64 {
        sup(&self.omega) + sup(&self.phi)
    }

    /// Samples of `Σ a_k v_k`.
    pub fn combine(terms: &[(f64, &SeminormSamples)]) -> Self {
        let mut out = Self::default();
        for (a, s) in terms {
            axpy(&mut out.omega, *a, &s.omega);
            axpy(&mut out.phi, *a, &s.phi);
        }
        out
    }
}

/// `‖ω‖_{C^m} + ‖φ‖_{C^m}` of the given representative over the window.
pub fn seminorm(v: &ValuationRep, window: &Window, m: usize, grid: &SeminormGrid) -> Result<f64> {
    Ok(seminorm_samples(v, window, m, grid)?.norm())
}

pub fn seminorm_samples(v: &ValuationRep, window: &Window, m: usize, grid: &SeminormGrid) -> Result<SeminormSamples> {
    if m > 3 {
        return Err(Error::DegreeError(format!("seminorm order {m} outside 0..=3")));
    }
    let lerp = |r: (f64, f64), i: usize| {
        if grid.n == 1 {
            0.5 * (r.0 + r.1)
        } else {
            r.0 + (r.1 - r.0) * i as f64 / (grid.n - 1) as f64
        }
    };
    let mut top = Vec::with_capacity(grid.n * grid.n * grid.m);
    let mut base = Vec::with_capacity(grid.n * grid.n);
    for i in 0..grid.n {
        for j in 0..grid.n {
            let (x, y) = (lerp(window.x, i), lerp(window.y, j));
            base.push(coords(&[x, y]));
            for k in 0..grid.m {
                top.push(coords(&[x, y, TAU * k as f64 / grid.m as f64]));
            }
        }
    }
    Ok(SeminormSamples { omega: cm_samples(&v.omega, &top, m, grid.h)?, phi: cm_samples(&v.phi, &base, m, grid.h)? })
}

/// Tolerances of the triviality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrivialityTol {
    pub forms: f64,
    pub evaluations: f64,
    pub h: f64,
}

impl Default for TrivialityTol {
    fn default() -> Self {
        Self { forms: 1e-4, evaluations: 1e-6, h: crate::forms::DEFAULT_STEP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrivialityReport {
    /// `sup |Dω + π^*φ|` on the grid.
    pub d_residual: f64,
    /// `sup |π_*ω|` on the grid.
    pub push_residual: f64,
    /// `max |μ(P)|` over the test bodies.
    pub max_evaluation: f64,
    /// Both form residuals are small.
    pub forms_trivial: bool,
    /// All evaluations are small.
    pub evaluations_vanish: bool,
    /// The two verdicts agree.
    pub consistent: bool,
}

/// Compares the form-level triviality criterion with evaluations on `bodies`.
pub fn check_trivial_pair(
    omega: &DifferentialForm,
    phi: &DifferentialForm,
    bodies: &[PlanarBody],
    tol: &TrivialityTol,
    cfg: &QuadConfig,
) -> Result<TrivialityReport> {
    let geo = plane();
    let v = ValuationRep::new(omega.clone(), phi.clone(), None)?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for b in bodies {
        let (a, c) = b.bbox();
        for k in 0..2 {
            lo[k] = lo[k].min(a[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    if bodies.is_empty() {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let top = geo.grid((lo[0], hi[0]), (lo[1], hi[1]), 4, 6);
    let d_form = rumin_d(omega, tol.h)?.add(&geo.lift(phi)?)?;
    let d_residual = d_form.sup_norm(&top)?;
    let pushed = geo.push(omega, cfg)?;
    let base: Vec<Coords> = top.iter().step_by(6).map(|p| coords(&p[..2])).collect();
    let push_residual = pushed.sup_norm(&base)?;
    let mut max_evaluation = 0.0_f64;
    let mut scale = 1.0_f64;
    for b in bodies {
        max_evaluation = max_evaluation.max(v.evaluate(b, cfg)?.abs());
        scale = scale.max(b.perimeter()).max(b.signed_area());
    }
    let forms_trivial = d_residual < tol.forms && push_residual < tol.forms;
    let evaluations_vanish = max_evaluation < tol.evaluations * scale;
    Ok(TrivialityReport {
        d_residual,
        push_residual,
        max_evaluation,
        forms_trivial,
        evaluations_vanish,
        consistent: forms_trivial == evaluations_vanish,
    })
}

const NAMES: [(&str, Space, usize); 9] = [
    ("sphere-perim", Space::Sphere, 1),
    ("sphere-area", Space::Sphere, 2),
    ("sphere-chi", Space::Sphere, 0),
    ("area", Space::Plane, 2),
    ("chi", Space::Plane, 0),
    ("v0", Space::Plane, 0),
    ("v1", Space::Plane, 1),
    ("v2", Space::Plane, 2),
    ("perim", Space::Plane, 1),
];

/// Parses `"chi"`, `"0.3*v1"`, `"chi-2*area"`, `"sphere-perim+1e-2*sphere-area"`.
///
/// `perim` is half of `v1`'s scale: `perim = 2·v1`.
pub fn parse_valuation(text: &str) -> Result<InvariantValuation> {
    let s: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(Error::UnknownValuation(text.into()));
    }
    let mut i = 0;
    let mut coords = [0.0; 3];
    let mut space: Option<Space> = None;
    let bad = || Error::UnknownValuation(text.into());
    while i < s.len() {
        let mut sign = 1.0;
        if i > 0 || s[i] == '+' || s[i] == '-' {
            match s.get(i) {
                Some('+') => i += 1,
                Some('-') => {
                    sign = -1.0;
                    i += 1
                }
                _ => return Err(bad()),
            }
        }
        let mut coef = 1.0;
        if i < s.len() && (s[i].is_ascii_digit() || s[i] == '.') {
            let start = i;
            while i < s.len()
                && (s[i].is_ascii_digit()
                    || s[i] == '.'
                    || ((s[i] == 'e' || s[i] == 'E') && i + 1 < s.len() && (s[i + 1].is_ascii_digit() || s[i + 1] == '-' || s[i + 1] == '+'))
                    || ((s[i] == '-' || s[i] == '+') && i > start && (s[i - 1] == 'e' || s[i - 1] == 'E')))
            {
                i += 1;
            }
            let num: String = s[start..i].iter().collect();
            coef = num.parse::<f64>().map_err(|_| bad())?;
            if i < s.len() && s[i] == '*' {
                i += 1;
            }
        }
        let rest: String = s[i..].iter().collect();
        let (name, sp, k) = NAMES.iter().find(|(n, _, _)| rest.starts_with(n)).ok_or_else(bad)?;
        i += name.chars().count();
        if *space.get_or_insert(*sp) != *sp {
            return Err(Error::UnknownValuation(format!("{text}: mixes plane and sphere valuations")));
        }
        let factor = if *name == "perim" { 2.0 } else { 1.0 };
        coords[*k] += sign * coef * factor;
    }
    Ok(InvariantValuation::new(space.expect("at least one term"), coords))
}
