//! Random body pairs on S² and the end-to-end kinematic experiment.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bodies::{Body, SphericalBody};
use crate::contact::sphere::{cross, normalize, Vec3};
use crate::error::Result;
use crate::valuations::Space;

use super::diagram::{perturbation_scan, solve_structure, theorem6_residual, DiagramFit, DiagramReport, Perturbation};
use super::fit::{fit_basis, kinematic_samples, KinematicCoefficients};
use super::integral::McConfig;

fn unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-9 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub fn random_cap<R: Rng>(rng: &mut R) -> Result<SphericalBody> {
    SphericalBody::cap(unit(rng), rng.gen_range(0.1..1.5))
}

/// Point at polar distance `r` and azimuth `az` around `c`.
fn polar(c: &Vec3, r: f64, az: f64) -> Vec3 {
    let helper = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = normalize(&cross(c, &helper));
    let e2 = cross(c, &e1);
    let (s, co) = (r.sin(), r.cos());
    let t = [az.cos() * e1[0] + az.sin() * e2[0], az.cos() * e1[1] + az.sin() * e2[1], az.cos() * e1[2] + az.sin() * e2[2]];
    normalize(&[co * c[0] + s * t[0], co * c[1] + s * t[1], co * c[2] + s * t[2]])
}

/// `n` vertices at jittered azimuths around a random center, at polar distances in `range`.
pub fn random_spherical_polygon<R: Rng>(rng: &mut R, n: usize, range: (f64, f64)) -> Result<SphericalBody> {
    let c = unit(rng);
    let offset = rng.gen_range(0.0..TAU);
    loop {
        let verts: Vec<Vec3> = (0..n)
            .map(|k| {
                let az = offset + TAU * (k as f64 + rng.gen_range(-0.3..0.3)) / n as f64;
                polar(&c, rng.gen_range(range.0..range.1), az)
            })
            .collect();
        if let Ok(p) = SphericalBody::polygon(&verts) {
            if p.is_convex() {
                return Ok(p);
            }
        }
    }
}

/// A thin triangle: long base through a random center, apex at small height.
pub fn random_sliver<R: Rng>(rng: &mut R) -> Result<SphericalBody> {
    let c = unit(rng);
    let az = rng.gen_range(0.0..TAU);
    let d = rng.gen_range(0.8..1.5);
    SphericalBody::polygon(&[polar(&c, d, az), polar(&c, rng.gen_range(0.05..0.3), az + 0.5 * TAU / 2.0), polar(&c, d, az + TAU / 2.0)])
}

/// Caps, slivers, and small and large polygons, so that `1, L, A` vary independently.
pub fn sphere_body<R: Rng>(rng: &mut R, kind: usize) -> Result<SphericalBody> {
    match kind % 5 {
        0 => random_cap(rng),
        1 => random_spherical_polygon(rng, 3, (0.1, 0.5)),
        2 => random_sliver(rng),
        3 => random_spherical_polygon(rng, 4, (1.1, 1.5)),
        _ => random_spherical_polygon(rng, 5, (0.4, 1.2)),
    }
}

pub fn sphere_pairs(n: usize, seed: u64) -> Result<Vec<(Body, Body)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| Ok((Body::Spherical(sphere_body(&mut rng, k)?), Body::Spherical(sphere_body(&mut rng, 7 * k / 5 + 1)?))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub mc: McConfig,
    pub max_condition: f64,
    pub perturbation: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { train_pairs: 24, test_pairs: 16, mc: McConfig::default(), max_condition: 1e6, perturbation: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereExperiment {
    pub train: [KinematicCoefficients; 3],
    pub test: [KinematicCoefficients; 3],
    pub fit: DiagramFit,
    pub report: DiagramReport,
    pub perturbations: Vec<Perturbation>,
}

/// Fits the kinematic constants on independent train and test pairs, solves the structure
/// constants from the training fit and checks them against the test fit.
pub fn sphere_experiment(cfg: &ExperimentConfig) -> Result<SphereExperiment> {
    let pairs = sphere_pairs(cfg.train_pairs + cfg.test_pairs, cfg.mc.seed)?;
    let (train_pairs, test_pairs) = pairs.split_at(cfg.train_pairs);
    let train_s = kinematic_samples(train_pairs, &cfg.mc)?;
    let test_mc = McConfig { stream: cfg.mc.stream + cfg.train_pairs as u64, ..cfg.mc };
    let test_s = kinematic_samples(test_pairs, &test_mc)?;
    let train = fit_basis(Space::Sphere, &train_s, cfg.max_condition)?;
    let test = fit_basis(Space::Sphere, &test_s, cfg.max_condition)?;
    let fit = solve_structure(&train)?;
    let report = theorem6_residual(&test, &fit.m, Some(&fit.cov))?;
    let perturbations = perturbation_scan(&test, &fit, cfg.perturbation)?;
    Ok(SphereExperiment { train, test, fit, report, perturbations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn random_polygons_are_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in 0..5 {
            for _ in 0..20 {
                let p = sphere_body(&mut rng, kind).unwrap();
                assert!(p.is_convex() && p.area() > 0.0 && p.area() < 2.0 * PI);
            }
        }
    }
}
