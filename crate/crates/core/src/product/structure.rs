//! Structure constants of invariant valuation algebras and the functional calculus.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::PlanarBody;
use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;
use crate::valuations::{standard_basis, InvariantValuation, Space};

use super::alesker::{alesker_product, ProductConfig};
use super::oracle::{basis_values, least_squares};

/// `c[i][j][k]`: coefficient of `φ_k` in `φ_i · φ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureConstants {
    pub space: Space,
    pub c: [[[f64; 3]; 3]; 3],
}

impl StructureConstants {
    pub fn new(space: Space, c: [[[f64; 3]; 3]; 3]) -> Self {
        Self { space, c }
    }

    fn check_space(&self, a: &InvariantValuation) -> Result<()> {
        if a.space != self.space {
            return Err(Error::ProductUnavailable(format!(
                "structure constants are for {:?}, valuation lives on {:?}",
                self.space, a.space
            )));
        }
        Ok(())
    }

    pub fn multiply(&self, a: &InvariantValuation, b: &InvariantValuation) -> Result<InvariantValuation> {
        self.check_space(a)?;
        self.check_space(b)?;
        let mut out = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                let w = a.coords[i] * b.coords[j];
                if w != 0.0 {
                    for k in 0..3 {
                        out[k] += w * self.c[i][j][k];
                    }
                }
            }
        }
        Ok(InvariantValuation::new(self.space, out))
    }

    /// `μ^k` with `μ⁰ = χ`.
    pub fn power(&self, mu: &InvariantValuation, k: usize) -> Result<InvariantValuation> {
        let mut out = InvariantValuation::basis(self.space, 0);
        for _ in 0..k {
            out = self.multiply(&out, mu)?;
        }
        Ok(out)
    }

    pub fn symmetrized(&self) -> Self {
        let mut c = self.c;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    c[i][j][k] = 0.5 * (self.c[i][j][k] + self.c[j][i][k]);
                }
            }
        }
        Self { space: self.space, c }
    }

    /// Keeps only the components allowed by the degree grading `deg φ_k = k`:
    /// `φ_i · φ_j ∈ span φ_{i+j}`, zero when `i + j > 2`. The `χ` row is set to the identity.
    pub fn graded(&self) -> Self {
        let s = self.symmetrized();
        let mut c = [[[0.0; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if i == 0 || j == 0 {
                    c[i][j][i + j] = 1.0;
                } else if i + j <= 2 {
                    c[i][j][i + j] = s.c[i][j][i + j];
                }
            }
        }
        Self { space: self.space, c }
    }

    pub fn is_graded(&self) -> bool {
        (0..3).all(|i| (0..3).all(|j| (0..3).all(|k| k == i + j || self.c[i][j][k] == 0.0)))
    }

    pub fn commutativity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max((self.c[i][j][k] - self.c[j][i][k]).abs());
                }
            }
        }
        worst
    }

    /// `max |χ · φ_j − φ_j|` over coordinates.
    pub fn identity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..3 {
            for k in 0..3 {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((self.c[0][j][k] - target).abs()).max((self.c[j][0][k] - target).abs());
            }
        }
        worst
    }

    /// `max |(φ_i φ_j) φ_k − φ_i (φ_j φ_k)|` over coordinates.
    pub fn associativity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut left = 0.0;
                        let mut right = 0.0;
                        for m in 0..3 {
                            left += self.c[i][j][m] * self.c[m][k][l];
                            right += self.c[j][k][m] * self.c[i][m][l];
                        }
                        worst = worst.max((left - right).abs());
                    }
                }
            }
        }
        worst
    }

    /// `g_ij = (φ_i · φ_j)(P)` given the basis values `φ_k(P)`.
    pub fn pairing_on(&self, values: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = (0..3).map(|k| self.c[i][j][k] * values[k]).sum();
            }
        }
        g
    }
}

/// Condition number (2-norm) of a 3×3 matrix; infinite when singular.
pub fn condition_number(g: &[[f64; 3]; 3]) -> f64 {
    let m = nalgebra::Matrix3::from_fn(|i, j| g[i][j]);
    let sv = m.singular_values();
    if sv.min() > 0.0 {
        sv.max() / sv.min()
    } else {
        f64::INFINITY
    }
}

/// Ten convex bodies of varied shape and size.
pub fn reference_suite() -> Vec<PlanarBody> {
    let ngon = |n: usize, r: f64, c: [f64; 2], phase: f64| {
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let t = phase + std::f64::consts::TAU * k as f64 / n as f64;
                [c[0] + r * t.cos(), c[1] + r * t.sin()]
            })
            .collect();
        PlanarBody::polygon(&pts).expect("regular polygon")
    };
    vec![
        PlanarBody::rectangle(0.0, 0.0, 1.0, 1.0).unwrap(),
        PlanarBody::rectangle(-1.0, 0.2, 1.0, 0.7).unwrap(),
        PlanarBody::polygon(&[[0.0, 0.0], [1.5, 0.0], [0.3, 1.1]]).unwrap(),
        ngon(5, 0.8, [0.2, -0.1], 0.3),
        PlanarBody::disk([0.0, 0.0], 0.5).unwrap(),
        PlanarBody::disk([0.4, -0.3], 1.2).unwrap(),
        ngon(4, 1.06, [0.0, 0.0], 0.4),
        ngon(6, 0.45, [1.0, 1.0], 0.0),
        PlanarBody::rectangle(0.0, 0.0, 0.3, 1.7).unwrap(),
        PlanarBody::polygon(&[[-1.0, -1.0], [1.2, -0.6], [0.9, 1.3], [-0.8, 0.7]]).unwrap(),
    ]
}

/// `E[p][i][j] = (V_i · V_j)(P_p)` computed from the product formula on the planar basis.
#[derive(Debug, Clone, Serialize)]
pub struct ProductEvaluations {
    pub basis: Vec<[f64; 3]>,
    pub e: Vec<[[f64; 3]; 3]>,
}

/// Evaluates all nine ordered basis products on every body of `suite`.
pub fn evaluate_products(suite: &[PlanarBody], cfg: &ProductConfig, quad: &QuadConfig) -> Result<ProductEvaluations> {
    let basis = standard_basis();
    let reps = (0..9)
        .map(|ij| alesker_product(&basis[ij / 3], &basis[ij % 3], cfg))
        .collect::<Result<Vec<_>>>()?;
    let tasks: Vec<(usize, usize)> = (0..suite.len()).flat_map(|p| (0..9).map(move |ij| (p, ij))).collect();
    let values = tasks
        .par_iter()
        .map(|&(p, ij)| reps[ij].evaluate(&suite[p], quad))
        .collect::<Result<Vec<f64>>>()?;
    let mut e = vec![[[0.0; 3]; 3]; suite.len()];
    for (&(p, ij), v) in tasks.iter().zip(values) {
        e[p][ij / 3][ij % 3] = v;
    }
    Ok(ProductEvaluations { basis: suite.iter().map(basis_values).collect(), e })
}

/// Evaluation-level checks of the product on a body suite; all errors relative
/// to the natural scale `V_i(P) V_j(P)` (times `V_k(P)` for triple products).
#[derive(Debug, Clone, Serialize)]
pub struct AlgebraReport {
    pub identity: f64,
    pub commutativity: f64,
    pub associativity: f64,
    pub degree: f64,
    pub condition: f64,
}

impl ProductEvaluations {
    /// Least-squares structure constants, one fit per ordered pair.
    pub fn fit(&self, max_condition: f64) -> Result<(StructureConstants, f64)> {
        let mut c = [[[0.0; 3]; 3]; 3];
        let mut cond = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let y: Vec<f64> = self.e.iter().map(|t| t[i][j]).collect();
                let (fit, k) = least_squares(&self.basis, &y, max_condition).map_err(|e| match e {
                    Error::OracleConditioning(k) => Error::FitConditioning(k),
                    other => other,
                })?;
                c[i][j] = fit;
                cond = k;
            }
        }
        Ok((StructureConstants::new(Space::Plane, c), cond))
    }

    pub fn report(&self, max_condition: f64) -> Result<AlgebraReport> {
        let (m, condition) = self.fit(max_condition)?;
        let mut r = AlgebraReport { identity: 0.0, commutativity: 0.0, associativity: 0.0, degree: 0.0, condition };
        for (e, v) in self.e.iter().zip(&self.basis) {
            for i in 0..3 {
                for j in 0..3 {
                    let scale = (v[i] * v[j]).abs();
                    r.commutativity = r.commutativity.max((e[i][j] - e[j][i]).abs() / scale);
                    if i == 0 {
                        r.identity = r.identity.max((e[0][j] - v[j]).abs() / v[j].abs());
                    }
                    if i + j > 2 {
                        r.degree = r.degree.max(e[i][j].abs() / scale);
                    }
                    for k in 0..3 {
                        // (φ_i φ_j) φ_k against φ_i (φ_j φ_k), reduced through the fitted constants
                        let left: f64 = (0..3).map(|l| m.c[i][j][l] * e[l][k]).sum();
                        let right: f64 = (0..3).map(|l| m.c[j][k][l] * e[i][l]).sum();
                        let scale3 = (v[i] * v[j] * v[k]).abs();
                        r.associativity = r.associativity.max((left - right).abs() / scale3);
                    }
                }
            }
        }
        Ok(r)
    }
}

/// Power-series coefficients `a_0, …, a_K` of a named function.
pub fn series_coefficients(name: &str, terms: usize) -> Result<Vec<f64>> {
    let mut fact = 1.0;
    let mut out = Vec::with_capacity(terms + 1);
    for k in 0..=terms {
        if k > 0 {
            fact *= k as f64;
        }
        out.push(match name {
            "exp" => 1.0 / fact,
            "sin" => [0.0, 1.0, 0.0, -1.0][k % 4] / fact,
            "cos" => [1.0, 0.0, -1.0, 0.0][k % 4] / fact,
            // 1 / (1 − x)
            "geometric" => 1.0,
            "log1p" => {
                if k == 0 {
                    0.0
                } else {
                    (if k % 2 == 1 { 1.0 } else { -1.0 }) / k as f64
                }
            }
            _ => return Err(Error::UnknownValuation(format!("unknown function {name:?}"))),
        });
    }
    Ok(out)
}

/// `f(μ)` together with the diagnostics of the series.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalResult {
    pub value: InvariantValuation,
    /// True when `μ = cχ + ν` with `ν` nilpotent and the series in `ν` truncated exactly.
    pub exact_truncation: bool,
    /// Highest power of `ν` (exact case) or of `μ` that contributes.
    pub truncated_at: usize,
    /// `‖μ^k‖` in invariant coordinates (max norm).
    pub power_norms: Vec<f64>,
    /// `‖μ^k‖ / ‖μ‖^k`, the empirical constants of the power bound chain.
    pub bound_ratios: Vec<f64>,
}

fn max_norm(v: &InvariantValuation) -> f64 {
    v.coords.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ a_k μ^k` with `μ⁰ = χ`. On a graded algebra `μ = cχ + ν` with `ν³ = 0`, and
/// `f(μ) = Σ_{j≤2} (Σ_k a_k C(k, j) c^{k−j}) ν^j`, which is exact in `ν`.
pub fn functional_calculus(
    coeffs: &[f64],
    mu: &InvariantValuation,
    m: Option<&StructureConstants>,
) -> Result<FunctionalResult> {
    let m = m.ok_or_else(|| Error::ProductUnavailable("no structure constants available".into()))?;
    if coeffs.is_empty() {
        return Err(Error::ProductUnavailable("empty coefficient list".into()));
    }
    let kmax = coeffs.len() - 1;
    let mut power_norms = Vec::new();
    let mut bound_ratios = Vec::new();
    let base = max_norm(mu);
    let mut p = InvariantValuation::basis(m.space, 0);
    for k in 1..=kmax.min(8) {
        p = m.multiply(&p, mu)?;
        let n = max_norm(&p);
        power_norms.push(n);
        bound_ratios.push(if base > 0.0 { n / base.powi(k as i32) } else { 0.0 });
    }

    if m.space == Space::Plane && m.is_graded() {
        let c = mu.coords[0];
        let nu = InvariantValuation::new(Space::Plane, [0.0, mu.coords[1], mu.coords[2]]);
        let nu_pows = [InvariantValuation::basis(Space::Plane, 0), nu.clone(), m.multiply(&nu, &nu)?];
        let mut out = [0.0; 3];
        for (j, nj) in nu_pows.iter().enumerate() {
            let w: f64 = coeffs
                .iter()
                .enumerate()
                .skip(j)
                .map(|(k, a)| a * binomial(k, j) * c.powi((k - j) as i32))
                .sum();
            for (o, x) in out.iter_mut().zip(&nj.coords) {
                *o += w * x;
            }
        }
        let truncated_at = if max_norm(&nu_pows[2]) > 0.0 { 2 } else if max_norm(&nu) > 0.0 { 1 } else { 0 };
        return Ok(FunctionalResult {
            value: InvariantValuation::new(Space::Plane, out),
            exact_truncation: true,
            truncated_at: truncated_at.min(kmax),
            power_norms,
            bound_ratios,
        });
    }

    let mut out = [0.0; 3];
    let mut p = InvariantValuation::basis(m.space, 0);
    for (k, a) in coeffs.iter().enumerate() {
        if k > 0 {
            p = m.multiply(&p, mu)?;
        }
        for (o, x) in out.iter_mut().zip(&p.coords) {
            *o += a * x;
        }
    }
    Ok(FunctionalResult {
        value: InvariantValuation::new(m.space, out),
        exact_truncation: false,
        truncated_at: kmax,
        power_norms,
        bound_ratios,
    })
}
