use std::f64::consts::{PI, TAU};

use intgeom::bodies::spherical::Mat3;
use intgeom::bodies::{Body, PlanarBody, SphericalBody};
use intgeom::error::Error;
use intgeom::kinematics::group::{quaternion_matrix, sample_so3};
use intgeom::kinematics::*;
use intgeom::valuations::{InvariantValuation, Space};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cap(center: [f64; 3], r: f64) -> Body {
    Body::Spherical(SphericalBody::cap(center, r).unwrap())
}

fn quad() -> Body {
    Body::Spherical(
        SphericalBody::polygon(&[[1.0, 0.0, 0.4], [0.0, 1.0, 0.4], [-1.0, 0.0, 0.4], [0.0, -1.0, 0.4]]).unwrap(),
    )
}

fn mc(samples: usize, seed: u64) -> McConfig {
    McConfig { samples, seed, ..Default::default() }
}

#[test]
fn cap_pair_euler_integral() {
    let (r1, r2) = (0.4, 0.7);
    let b = mc_basis_integrals(&cap([0.0, 0.0, 1.0], r1), &cap([1.0, 0.0, 0.0], r2), &mc(100_000, 3)).unwrap();
    // centers of a Haar-rotated pair are uniform, so this is the area fraction of a cap of radius r₁ + r₂
    let exact = (1.0 - (r1 + r2).cos()) / 2.0;
    assert!((b.estimate[0] - exact).abs() < 3.0 * b.stderr[0], "{} vs {exact} ± {}", b.estimate[0], b.stderr[0]);
}

#[test]
fn area_integral_factorizes() {
    let (a, c) = (quad(), cap([0.0, 0.6, 0.8], 0.9));
    let b = mc_basis_integrals(&a, &c, &mc(50_000, 5)).unwrap();
    let (a1, a2) = (InvariantValuation::basis(Space::Sphere, 2).evaluate(&a).unwrap(), TAU * (1.0 - 0.9f64.cos()));
    let exact = a1 * a2 / (4.0 * PI);
    assert!((b.estimate[2] - exact).abs() < 3.0 * b.stderr[2]);

    let p = Body::Planar(PlanarBody::rectangle(0.0, 0.0, 2.0, 1.0).unwrap());
    let d = Body::Planar(PlanarBody::disk([0.3, -0.2], 0.6).unwrap());
    let b = mc_basis_integrals(&p, &d, &mc(100_000, 6)).unwrap();
    let exact = TAU * 2.0 * PI * 0.36;
    assert!((b.estimate[2] - exact).abs() < 3.0 * b.stderr[2]);
}

#[test]
fn disk_pair_euler_integral() {
    let (r1, r2) = (0.5, 0.8);
    let a = Body::Planar(PlanarBody::disk([0.0, 0.0], r1).unwrap());
    let b = Body::Planar(PlanarBody::disk([1.0, 0.5], r2).unwrap());
    let e = mc_kinematic_integral(&InvariantValuation::basis(Space::Plane, 0), &a, &b, &mc(200_000, 7)).unwrap();
    // ∫ χ dx dy dθ = 2π(A₁ + A₂) + L₁L₂
    let exact = TAU * PI * (r1 * r1 + r2 * r2) + TAU * r1 * TAU * r2;
    assert!((e.estimate - exact).abs() < 3.0 * e.stderr, "{} vs {exact} ± {}", e.estimate, e.stderr);
}

#[test]
fn whole_sphere_marginal_is_exact() {
    let b = mc_basis_integrals(&quad(), &Body::Spherical(SphericalBody::Sphere), &mc(2_000, 1)).unwrap();
    let own = match quad() {
        Body::Spherical(s) => s.measures(),
        _ => unreachable!(),
    };
    assert!((b.estimate[0] - 1.0).abs() < 1e-12);
    assert!((b.estimate[1] - own.perimeter).abs() < 1e-9);
    assert!((b.estimate[2] - own.area).abs() < 1e-9);
    assert_eq!(b.stderr[0], 0.0);
}

#[test]
fn stderr_scales_as_inverse_root() {
    let (a, c) = (quad(), cap([0.0, 0.0, 1.0], 0.5));
    let s1 = mc_basis_integrals(&a, &c, &mc(20_000, 11)).unwrap().stderr[0];
    let s4 = mc_basis_integrals(&a, &c, &mc(80_000, 11)).unwrap().stderr[0];
    let ratio = s1 / s4;
    assert!((ratio - 2.0).abs() < 0.5, "ratio {ratio}");
}

#[test]
fn invariant_under_a_common_rotation() {
    let g0: Mat3 = quaternion_matrix(&[0.8, 0.2, -0.4, 0.4]);
    let (a, c) = (quad(), cap([0.3, 0.0, 0.95], 0.8));
    let rot = |b: &Body| match b {
        Body::Spherical(s) => Body::Spherical(s.rotated(&g0)),
        _ => unreachable!(),
    };
    let x = mc_basis_integrals(&a, &c, &mc(50_000, 2)).unwrap();
    let y = mc_basis_integrals(&rot(&a), &rot(&c), &mc(50_000, 3)).unwrap();
    for k in 0..3 {
        let s = x.stderr[k].hypot(y.stderr[k]);
        assert!((x.estimate[k] - y.estimate[k]).abs() < 3.0 * s, "component {k}");
    }
}

#[test]
fn same_seed_is_bitwise_reproducible_across_thread_counts() {
    let (a, c) = (quad(), cap([0.0, 0.0, 1.0], 0.5));
    let cfg = mc(10_000, 42);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_basis_integrals(&a, &c, &cfg).unwrap())
    };
    let (one, three) = (run(1), run(3));
    assert_eq!(one.estimate.map(f64::to_bits), three.estimate.map(f64::to_bits));
    assert_eq!(one.stderr.map(f64::to_bits), three.stderr.map(f64::to_bits));
    let other = mc_basis_integrals(&a, &c, &mc(10_000, 43)).unwrap();
    assert_ne!(one.estimate, other.estimate);
}

/// Kolmogorov–Smirnov p-value, asymptotic series.
fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for k in 1..100 {
        let kf = k as f64;
        p += 2.0 * (-1f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

#[test]
fn rotated_point_is_uniform_on_the_sphere() {
    // the height of a uniform point on S² is uniform on [−1, 1]
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let p = [0.6, 0.0, 0.8];
    let mut z: Vec<f64> = (0..20_000)
        .map(|_| match sample_so3(&mut rng) {
            GroupElement::So3 { m, .. } => (0..3).map(|k| m[2][k] * p[k]).sum::<f64>(),
            _ => unreachable!(),
        })
        .collect();
    z.sort_by(f64::total_cmp);
    let n = z.len();
    let d = z
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let f = (v + 1.0) / 2.0;
            (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks_pvalue(d, n) > 0.01, "D = {d}");
}

#[test]
fn all_draws_rejected_is_a_degeneracy() {
    // a nonconvex polygon has no cap decomposition
    let at = |r: f64, az: f64| [r.sin() * az.cos(), r.sin() * az.sin(), r.cos()];
    let star: Vec<[f64; 3]> = (0..6).map(|k| at(if k % 2 == 0 { 1.0 } else { 0.3 }, k as f64 * PI / 3.0)).collect();
    let bad = Body::Spherical(SphericalBody::polygon(&star).unwrap());
    match mc_basis_integrals(&bad, &quad(), &mc(500, 1)) {
        Err(Error::SamplingDegeneracy { rejected, total }) => assert_eq!((rejected, total), (500, 500)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn mixed_spaces_are_rejected() {
    let p = Body::Planar(PlanarBody::disk([0.0, 0.0], 1.0).unwrap());
    assert!(matches!(mc_basis_integrals(&p, &quad(), &mc(10, 1)), Err(Error::InvalidBody(_))));
}

#[test]
fn fitted_euler_constants_match_the_inverse_pairing() {
    let pairs = sphere_pairs(20, 4).unwrap();
    let samples = kinematic_samples(&pairs, &mc(20_000, 4)).unwrap();
    let fits = fit_basis(Space::Sphere, &samples, 1e6).unwrap();
    let expect = [[0.0, 0.0, 1.0 / (4.0 * PI)], [0.0, 1.0 / (8.0 * PI * PI), 0.0], [1.0 / (4.0 * PI), 0.0, -1.0 / (8.0 * PI * PI)]];
    for i in 0..3 {
        for j in 0..3 {
            let (c, s) = (fits[0].c[i][j], fits[0].stderr[i][j]);
            assert!((c - expect[i][j]).abs() < 4.0 * s, "c[{i}][{j}] = {c} ± {s}");
        }
    }
    assert!(fits.iter().all(|f| f.asymmetry() < 4.0));
}
