//! Weighted least-squares fit of `∫ μ(P₁ ∩ gP₂) dg = Σ c^μ_ij φ_i(P₁) φ_j(P₂)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bodies::Body;
use crate::error::{Error, Result};
use crate::valuations::{InvariantValuation, Space};

use super::integral::{run_batches, McConfig};

/// One measured integral with the basis values of the two bodies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSample {
    pub phi1: [f64; 3],
    pub phi2: [f64; 3],
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicCoefficients {
    pub space: Space,
    pub mu: [f64; 3],
    pub c: [[f64; 3]; 3],
    pub stderr: [[f64; 3]; 3],
    /// Covariance of the row-major `c`, 9×9.
    pub cov: Vec<Vec<f64>>,
    /// Condition number of the column-normalized design.
    pub condition: f64,
    pub chi2: f64,
    pub dof: usize,
}

impl KinematicCoefficients {
    pub fn predict(&self, phi1: &[f64; 3], phi2: &[f64; 3]) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.c[i][j] * phi1[i] * phi2[j];
            }
        }
        s
    }

    /// `max |c_ij − c_ji| / sqrt(σ_ij² + σ_ji²)`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                let s = (self.stderr[i][j].powi(2) + self.stderr[j][i].powi(2)).sqrt();
                worst = worst.max((self.c[i][j] - self.c[j][i]).abs() / s.max(1e-300));
            }
        }
        worst
    }
}

fn body_values(space: Space, b: &Body) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (i, v) in out.iter_mut().enumerate() {
        *v = InvariantValuation::basis(space, i).evaluate(b)?;
    }
    Ok(out)
}

/// Runs one Monte-Carlo integral per pair (stream `cfg.stream + index`) and returns the three
/// basis samples of each pair, all from the same draws.
pub fn kinematic_samples(pairs: &[(Body, Body)], cfg: &McConfig) -> Result<Vec<[KinematicSample; 3]>> {
    pairs
        .iter()
        .enumerate()
        .map(|(n, (a, b))| {
            let c = McConfig { stream: cfg.stream + n as u64, ..*cfg };
            let batches = run_batches(a, b, &c)?;
            let space = batches.space();
            let (phi1, phi2) = (body_values(space, a)?, body_values(space, b)?);
            let mut out = [KinematicSample { phi1, phi2, value: 0.0, stderr: 0.0 }; 3];
            for (k, s) in out.iter_mut().enumerate() {
                let mut e = [0.0; 3];
                e[k] = 1.0;
                (s.value, s.stderr) = batches.combine(&e);
            }
            Ok(out)
        })
        .collect()
}

/// Fits the nine `c^μ_ij` with weights `1/σ²`. Standard errors below a thousandth of the
/// median are floored there, so exact rows do not swamp the fit.
pub fn fit_coefficients(
    space: Space,
    mu: [f64; 3],
    samples: &[KinematicSample],
    max_condition: f64,
) -> Result<KinematicCoefficients> {
    let n = samples.len();
    if n < 9 {
        return Err(Error::FitConditioning(f64::INFINITY));
    }
    let mut sig: Vec<f64> = samples.iter().map(|s| s.stderr).collect();
    let mut sorted = sig.clone();
    sorted.sort_by(f64::total_cmp);
    let floor = 1e-3 * sorted[n / 2];
    for s in sig.iter_mut() {
        *s = if floor > 0.0 { s.max(floor) } else { 1.0 };
    }
    let design = DMatrix::from_fn(n, 9, |r, col| samples[r].phi1[col / 3] * samples[r].phi2[col % 3]);

    let mut normed = design.clone();
    for col in 0..9 {
        let norm = normed.column(col).norm();
        if norm == 0.0 {
            return Err(Error::FitConditioning(f64::INFINITY));
        }
        normed.column_mut(col).scale_mut(1.0 / norm);
    }
    let sv = normed.singular_values();
    let condition = sv.max() / sv.min();
    if !(condition <= max_condition) {
        return Err(Error::FitConditioning(condition));
    }

    let a = DMatrix::from_fn(n, 9, |r, col| design[(r, col)] / sig[r]);
    let y = DVector::from_fn(n, |r, _| samples[r].value / sig[r]);
    let normal = a.transpose() * &a;
    let cov = normal.try_inverse().ok_or(Error::FitConditioning(f64::INFINITY))?;
    let x = &cov * (a.transpose() * &y);
    let resid = &a * &x - &y;

    let mut c = [[0.0; 3]; 3];
    let mut stderr = [[0.0; 3]; 3];
    for col in 0..9 {
        c[col / 3][col % 3] = x[col];
        stderr[col / 3][col % 3] = cov[(col, col)].max(0.0).sqrt();
    }
    Ok(KinematicCoefficients {
        space,
        mu,
        c,
        stderr,
        cov: (0..9).map(|i| (0..9).map(|j| cov[(i, j)]).collect()).collect(),
        condition,
        chi2: resid.norm_squared(),
        dof: n - 9,
    })
}

/// Fits of all three basis valuations from per-pair samples.
pub fn fit_basis(space: Space, samples: &[[KinematicSample; 3]], max_condition: f64) -> Result<[KinematicCoefficients; 3]> {
    let fit = |k: usize| {
        let mut mu = [0.0; 3];
        mu[k] = 1.0;
        let rows: Vec<KinematicSample> = samples.iter().map(|s| s[k]).collect();
        fit_coefficients(space, mu, &rows, max_condition)
    };
    Ok([fit(0)?, fit(1)?, fit(2)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_bilinear_data_is_recovered() {
        let truth = [[0.5, 1.0, -2.0], [0.0, 3.0, 0.25], [1.5, -1.0, 0.0]];
        let mut rows = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                let phi1 = [1.0, 0.3 + a as f64, (0.7 * a as f64).powi(2) + 0.1];
                let phi2 = [1.0, 1.1 * b as f64 + 0.2, (b as f64 - 0.5).powi(2)];
                let mut v = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        v += truth[i][j] * phi1[i] * phi2[j];
                    }
                }
                rows.push(KinematicSample { phi1, phi2, value: v, stderr: 0.01 });
            }
        }
        let fit = fit_coefficients(Space::Plane, [1.0, 0.0, 0.0], &rows, 1e6).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((fit.c[i][j] - truth[i][j]).abs() < 1e-9);
            }
        }
        assert!(fit.chi2 < 1e-12);
    }

    #[test]
    fn collinear_design_is_rejected() {
        let rows: Vec<_> = (0..12)
            .map(|k| KinematicSample { phi1: [1.0, k as f64, 2.0 * k as f64], phi2: [1.0, 1.0, 1.0], value: 0.0, stderr: 1.0 })
            .collect();
        assert!(matches!(fit_coefficients(Space::Plane, [1.0, 0.0, 0.0], &rows, 1e6), Err(Error::FitConditioning(_))));
    }
}
