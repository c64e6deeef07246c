//! Kinematic constants on S² from the product and the pairing, and back.
//!
//! With `g_ij = (φ_i · φ_j)(S²)` and `T^μ_kl = Σ_a m(kl)_a g_μa = (φ_μ · φ_k · φ_l)(S²)`,
//! the kinematic constants are `c^μ = g⁻¹ T^μ g⁻¹`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::product::{condition_number, StructureConstants};
use crate::valuations::Space;

use super::fit::KinematicCoefficients;

/// `(χ, L, A)` of the whole sphere.
pub const SPHERE_VALUES: [f64; 3] = [2.0, 0.0, 2.0 * TAU];

/// Pairings beyond this condition number are treated as singular.
pub const MAX_PAIRING_CONDITION: f64 = 1e12;

/// The unknowns: `L·L`, `L·A`, `A·A` in coordinates; `χ` is the unit.
const PAIRS: [(usize, usize); 3] = [(1, 1), (1, 2), (2, 2)];

pub type Constants = [[[f64; 3]; 3]; 3];

pub fn pairing_matrix(m: &StructureConstants) -> [[f64; 3]; 3] {
    m.pairing_on(&SPHERE_VALUES)
}

fn to_na(a: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i][j])
}

fn from_na(a: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[(i, j)];
        }
    }
    out
}

/// `c^μ_ij = Σ_kl (g⁻¹)_ik (g⁻¹)_jl T^μ_kl`, indexed `[μ][i][j]`.
pub fn predicted_coefficients(m: &StructureConstants) -> Result<Constants> {
    let g = pairing_matrix(m);
    let cond = condition_number(&g);
    if !(cond <= MAX_PAIRING_CONDITION) {
        return Err(Error::PairingSingular(cond));
    }
    let ginv = to_na(&g).try_inverse().ok_or(Error::PairingSingular(f64::INFINITY))?;
    let mut out = [[[0.0; 3]; 3]; 3];
    for (mu, o) in out.iter_mut().enumerate() {
        let t = Matrix3::from_fn(|k, l| (0..3).map(|a| m.c[k][l][a] * g[mu][a]).sum::<f64>());
        *o = from_na(&(ginv * t * ginv.transpose()));
    }
    Ok(out)
}

pub fn structure_from_params(p: &[f64; 9]) -> StructureConstants {
    let mut c = [[[0.0; 3]; 3]; 3];
    for j in 0..3 {
        c[0][j][j] = 1.0;
        c[j][0][j] = 1.0;
    }
    for (n, &(k, l)) in PAIRS.iter().enumerate() {
        for a in 0..3 {
            c[k][l][a] = p[3 * n + a];
            c[l][k][a] = p[3 * n + a];
        }
    }
    StructureConstants::new(Space::Sphere, c)
}

pub fn params_of(m: &StructureConstants) -> [f64; 9] {
    let mut p = [0.0; 9];
    for (n, &(k, l)) in PAIRS.iter().enumerate() {
        for a in 0..3 {
            p[3 * n + a] = 0.5 * (m.c[k][l][a] + m.c[l][k][a]);
        }
    }
    p
}

fn flat(c: &Constants) -> [f64; 27] {
    let mut out = [0.0; 27];
    for mu in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                out[9 * mu + 3 * i + j] = c[mu][i][j];
            }
        }
    }
    out
}

fn measured(k: &[KinematicCoefficients; 3]) -> ([f64; 27], [f64; 27]) {
    let mut v = [0.0; 27];
    let mut s = [0.0; 27];
    for mu in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                v[9 * mu + 3 * i + j] = k[mu].c[i][j];
                s[9 * mu + 3 * i + j] = k[mu].stderr[i][j];
            }
        }
    }
    (v, s)
}

/// Central-difference Jacobian of the 27 predicted constants in the 9 parameters.
fn jacobian(p: &[f64; 9]) -> Result<DMatrix<f64>> {
    let mut j = DMatrix::zeros(27, 9);
    for col in 0..9 {
        let h = 1e-6 * p[col].abs().max(1.0);
        let (mut a, mut b) = (*p, *p);
        a[col] += h;
        b[col] -= h;
        let (fa, fb) = (flat(&predicted_coefficients(&structure_from_params(&a))?), flat(&predicted_coefficients(&structure_from_params(&b))?));
        for r in 0..27 {
            j[(r, col)] = (fa[r] - fb[r]) / (2.0 * h);
        }
    }
    Ok(j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramFit {
    pub m: StructureConstants,
    pub params: [f64; 9],
    pub stderr: [f64; 9],
    pub cov: Vec<Vec<f64>>,
    pub chi2: f64,
    pub iterations: usize,
}

/// Solves for the structure constants from fitted kinematic constants: a linear solve
/// from `g = (c^χ)⁻¹`, then Gauss–Newton on all 27 constants.
pub fn solve_structure(train: &[KinematicCoefficients; 3]) -> Result<DiagramFit> {
    let cchi = to_na(&train[0].c);
    let cchi = 0.5 * (cchi + cchi.transpose());
    let g = cchi.try_inverse().ok_or(Error::PairingSingular(f64::INFINITY))?;
    let ginv_g = g.try_inverse().ok_or(Error::PairingSingular(f64::INFINITY))?;
    let mut p = [0.0; 9];
    for (n, &(k, l)) in PAIRS.iter().enumerate() {
        let t = Vector3::from_fn(|mu, _| (g * to_na(&train[mu].c) * g.transpose())[(k, l)]);
        // T^μ_kl = Σ_a g_μa m(kl)_a
        let m = ginv_g * t;
        for a in 0..3 {
            p[3 * n + a] = m[a];
        }
    }

    let (y, s) = measured(train);
    let weighted = |p: &[f64; 9]| -> Result<DVector<f64>> {
        let f = flat(&predicted_coefficients(&structure_from_params(p))?);
        Ok(DVector::from_fn(27, |r, _| (y[r] - f[r]) / s[r].max(1e-300)))
    };
    let mut r = weighted(&p)?;
    let mut iterations = 0;
    for it in 0..50 {
        iterations = it + 1;
        let mut j = jacobian(&p)?;
        for row in 0..27 {
            j.row_mut(row).scale_mut(1.0 / s[row].max(1e-300));
        }
        let step = (j.transpose() * &j).try_inverse().ok_or(Error::FitConditioning(f64::INFINITY))? * (j.transpose() * &r);
        let mut q = p;
        for k in 0..9 {
            q[k] += step[k];
        }
        let rq = weighted(&q)?;
        if rq.norm() > r.norm() {
            break;
        }
        let done = step.norm() <= 1e-12 * (1.0 + p.iter().map(|x| x * x).sum::<f64>().sqrt());
        p = q;
        r = rq;
        if done {
            break;
        }
    }
    let mut j = jacobian(&p)?;
    for row in 0..27 {
        j.row_mut(row).scale_mut(1.0 / s[row].max(1e-300));
    }
    let cov = (j.transpose() * &j).try_inverse().ok_or(Error::FitConditioning(f64::INFINITY))?;
    let mut stderr = [0.0; 9];
    for k in 0..9 {
        stderr[k] = cov[(k, k)].max(0.0).sqrt();
    }
    Ok(DiagramFit {
        m: structure_from_params(&p),
        params: p,
        stderr,
        cov: (0..9).map(|a| (0..9).map(|b| cov[(a, b)]).collect()).collect(),
        chi2: r.norm_squared(),
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramReport {
    /// `(c_measured − c_predicted) / σ`, indexed `[μ][i][j]`.
    pub z: Constants,
    pub max_z: f64,
    pub budget: f64,
    pub predicted: Constants,
    /// `max_i |Σ_j c^χ_ij φ_j(S²) − δ_i0| / σ`: the measured `χ` constants against `P₂ = S²`.
    pub marginal_z: f64,
}

impl DiagramReport {
    pub fn passed(&self) -> bool {
        self.max_z <= self.budget
    }
}

/// Residual of measured constants against those predicted by `m`. The error of the prediction
/// is propagated from `m_cov` (covariance of [`params_of`]) when given.
pub fn theorem6_residual(
    measured_k: &[KinematicCoefficients; 3],
    m: &StructureConstants,
    m_cov: Option<&[Vec<f64>]>,
) -> Result<DiagramReport> {
    let predicted = predicted_coefficients(m)?;
    let pf = flat(&predicted);
    let (y, s) = measured(measured_k);
    let mut var_pred = [0.0; 27];
    if let Some(cov) = m_cov {
        let j = jacobian(&params_of(m))?;
        let c = DMatrix::from_fn(9, 9, |a, b| cov[a][b]);
        let v = &j * c * j.transpose();
        for r in 0..27 {
            var_pred[r] = v[(r, r)].max(0.0);
        }
    }
    let mut z = [[[0.0; 3]; 3]; 3];
    let mut max_z: f64 = 0.0;
    for r in 0..27 {
        let sig = (s[r] * s[r] + var_pred[r]).sqrt().max(1e-300);
        let v = (y[r] - pf[r]) / sig;
        z[r / 9][(r % 9) / 3][r % 3] = v;
        max_z = max_z.max(v.abs());
    }

    let chi = &measured_k[0];
    let mut marginal_z: f64 = 0.0;
    for i in 0..3 {
        let mut v = -if i == 0 { 1.0 } else { 0.0 };
        let mut var = 0.0;
        for j in 0..3 {
            v += chi.c[i][j] * SPHERE_VALUES[j];
            for l in 0..3 {
                var += SPHERE_VALUES[j] * SPHERE_VALUES[l] * chi.cov[3 * i + j][3 * i + l];
            }
        }
        marginal_z = marginal_z.max(v.abs() / var.max(1e-300).sqrt());
    }
    Ok(DiagramReport { z, max_z, budget: 3.0, predicted, marginal_z })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// `(k, l, a)`: the coefficient of `φ_a` in `φ_k · φ_l`.
    pub index: (usize, usize, usize),
    pub value: f64,
    pub max_z: f64,
}

/// Raises each nonzero structure constant by `rel` (symmetrically in `k, l`) and recomputes the
/// residual against `measured_k`. Fitted constants within three standard errors of zero count as zero.
pub fn perturbation_scan(measured_k: &[KinematicCoefficients; 3], fit: &DiagramFit, rel: f64) -> Result<Vec<Perturbation>> {
    let mut out = Vec::new();
    for k in 0..3 {
        for l in k..3 {
            for a in 0..3 {
                let v = fit.m.c[k][l][a];
                let zero = if k == 0 {
                    v == 0.0
                } else {
                    let n = PAIRS.iter().position(|&pr| pr == (k, l)).expect("k, l ≥ 1");
                    v.abs() <= 3.0 * fit.stderr[3 * n + a]
                };
                if zero {
                    continue;
                }
                let mut m = fit.m.clone();
                m.c[k][l][a] = v * (1.0 + rel);
                m.c[l][k][a] = v * (1.0 + rel);
                let max_z = theorem6_residual(measured_k, &m, Some(&fit.cov))?.max_z;
                out.push(Perturbation { index: (k, l, a), value: v, max_z });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `L·L = 2π A`, everything else vanishes beyond the unit.
    fn sphere_algebra() -> StructureConstants {
        structure_from_params(&[0.0, 0.0, 2.0 * PI, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    #[test]
    fn euler_constants_are_the_inverse_pairing() {
        let m = sphere_algebra();
        let g = pairing_matrix(&m);
        let expect = [[2.0, 0.0, 4.0 * PI], [0.0, 8.0 * PI * PI, 0.0], [4.0 * PI, 0.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((g[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
        let c = predicted_coefficients(&m).unwrap();
        assert!((c[0][0][2] - 1.0 / (4.0 * PI)).abs() < 1e-14);
        assert!((c[0][1][1] - 1.0 / (8.0 * PI * PI)).abs() < 1e-14);
        assert!((c[0][2][2] + 1.0 / (8.0 * PI * PI)).abs() < 1e-14);
        assert!((c[2][2][2] - 1.0 / (4.0 * PI)).abs() < 1e-14);
        assert!((c[1][1][2] - 1.0 / (4.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn singular_pairing_is_reported() {
        let mut m = sphere_algebra();
        for k in 0..3 {
            for l in 0..3 {
                m.c[k][l] = [0.0; 3];
            }
        }
        assert!(matches!(predicted_coefficients(&m), Err(Error::PairingSingular(_))));
    }
}
