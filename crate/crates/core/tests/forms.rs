use std::f64::consts::TAU;

use intgeom::contact::plane;
use intgeom::currents::random_test_form;
use intgeom::forms::*;
use intgeom::quadrature::{gauss_legendre, QuadConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid5() -> Vec<Coords> {
    plane().grid((-1.0, 1.0), (-1.0, 1.0), 5, 5)
}

/// Random polynomial 0-form on the cosphere chart.
fn random_function(seed: u64) -> DifferentialForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    DifferentialForm::function(&plane().chart, move |p| {
        c[0] + c[1] * p[0] * p[1] + c[2] * p[0] * p[0] * p[2].cos() + c[3] * p[1] * (2.0 * p[2]).sin() + c[4] * p[2].sin() + c[5] * p[1].powi(3)
    })
}

fn close(a: &DifferentialForm, b: &DifferentialForm, pts: &[Coords]) -> f64 {
    a.sub(b).unwrap().sup_norm(pts).unwrap()
}

#[test]
fn d_squared_vanishes_on_random_forms() {
    let h = DEFAULT_STEP;
    let pts = grid5();
    let mut worst = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for k in 0..200 {
        let a = if k % 2 == 0 { random_test_form(&mut rng) } else { random_function(rng.gen()) };
        let dda = exterior_derivative(&exterior_derivative(&a, h).unwrap(), h).unwrap();
        worst = worst.max(dda.sup_norm(&pts).unwrap());
    }
    assert!(worst < 10.0 * h * h, "sup |d d a| = {worst:e}");
}

#[test]
fn d_alpha_matches_the_analytic_form() {
    let geo = plane();
    let d = exterior_derivative(&geo.alpha, DEFAULT_STEP).unwrap();
    // dα = −β∧γ
    let expect = wedge(&geo.beta, &geo.gamma).unwrap().scale(-1.0);
    assert!(close(&d, &expect, &grid5()) < 1e-9);
    assert!(close(&d, &geo.d_alpha, &grid5()) < 1e-9);
}

#[test]
fn alpha_wedge_alpha_and_basis_pairing() {
    let geo = plane();
    assert_eq!(wedge(&geo.alpha, &geo.alpha).unwrap().sup_norm(&grid5()).unwrap(), 0.0);
    let dx = DifferentialForm::coordinate(&geo.base, 0);
    let dy = DifferentialForm::coordinate(&geo.base, 1);
    let w = wedge(&dx, &dy).unwrap();
    assert_eq!(w.eval(&[0.3, 0.4], &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap(), 1.0);
    let (eb, eg) = geo.frame(&[0.0, 0.0, 0.0]);
    let bg = wedge(&geo.beta, &geo.gamma).unwrap();
    assert!((bg.eval(&[0.0, 0.0, 0.0], &[&eb, &eg]).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn involution_pullbacks() {
    let geo = plane();
    let pts = grid5();
    assert!(close(&geo.flip(&geo.gamma).unwrap(), &geo.gamma, &pts) < 1e-15);
    assert!(close(&geo.flip(&geo.alpha).unwrap(), &geo.alpha.scale(-1.0), &pts) < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_test_form(&mut rng);
    let twice = geo.flip(&geo.flip(&a).unwrap()).unwrap();
    assert!(close(&twice, &a, &pts) < 1e-12);
    assert!(close(&pullback(&SmoothMap::identity(&geo.chart), &a).unwrap(), &a, &pts) < 1e-15);
}

#[test]
fn fiber_integration_examples() {
    let geo = plane();
    let cfg = QuadConfig::default();
    let base: Vec<Coords> = [[0.2, -0.3], [1.0, 2.0]].iter().map(|p| coords(p)).collect();
    let one = geo.push(&geo.gamma, &cfg).unwrap();
    for p in &base {
        assert!((one.value_at(p).unwrap() - TAU).abs() < 1e-12);
    }
    let f_dx = DifferentialForm::new(&geo.chart, 1, |p| Ok([p[0] * p[1], 0.0, 0.0].into_iter().collect()));
    assert!(geo.push(&f_dx, &cfg).unwrap().sup_norm(&base).unwrap() < 1e-15);
    // no dθ component, and the cos/sin coefficients integrate to zero anyway
    assert!(geo.push(&geo.beta, &cfg).unwrap().sup_norm(&base).unwrap() < 1e-12);
    let theta_part = DifferentialForm::new(&geo.chart, 1, |p| Ok([0.0, 0.0, -p[2].sin()].into_iter().collect()));
    assert!(geo.push(&theta_part, &cfg).unwrap().sup_norm(&base).unwrap() < 1e-12);
}

/// Tensor Gauss–Legendre rule on a box.
fn box_integral(lo: &[f64], hi: &[f64], n: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let (x, w) = gauss_legendre(n);
    let d = lo.len();
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut p = Vec::with_capacity(d);
        let mut weight = 1.0;
        for k in 0..d {
            let half = 0.5 * (hi[k] - lo[k]);
            p.push(lo[k] + half * (x[idx[k]] + 1.0));
            weight *= half * w[idx[k]];
        }
        total += weight * f(&p);
        let mut k = 0;
        loop {
            if k == d {
                return total;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn fiber_integration_adjunction() {
    let geo = plane();
    let cfg = QuadConfig { rel_tol: 1e-11, abs_tol: 1e-13, budget: 100_000 };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let t = DifferentialForm::new(&geo.base, 1, move |p| Ok([c[0] + c[1] * p[1], c[2] * p[0] * p[0] + c[3]].into_iter().collect()));
        let a = wedge(&random_test_form(&mut rng), &geo.gamma).unwrap().add(&wedge(&geo.alpha, &geo.beta).unwrap()).unwrap();
        let low = wedge(&t, &geo.push(&a, &cfg).unwrap()).unwrap();
        let high = wedge(&geo.lift(&t).unwrap(), &a).unwrap();
        let lhs = box_integral(&[0.0, 0.0], &[1.0, 1.0], 12, |p| low.coeffs_at(p).unwrap()[0]);
        let rhs = box_integral(&[0.0, 0.0, 0.0], &[1.0, 1.0, TAU], 12, |p| high.coeffs_at(p).unwrap()[0]);
        assert!((lhs - rhs).abs() < 1e-8 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}

fn random_map(seed: u64) -> SmoothMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: [[f64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)));
    let e: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.3..0.3));
    let chart = plane().chart.clone();
    SmoothMap::new(&chart, &chart, move |p| {
        Ok((0..3)
            .map(|i| (0..3).map(|j| m[i][j] * p[j]).sum::<f64>() + e[i] * (p[(i + 1) % 3]).sin() * p[i])
            .collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wedge_is_graded_commutative_and_associative(seed in any::<u64>(), x in -2.0..2.0f64, y in -2.0..2.0f64, t in 0.0..TAU) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geo = plane();
        let a = random_test_form(&mut rng);
        let b = random_test_form(&mut rng);
        let c = random_function(rng.gen()).multiply(|p| p[0]);
        let p = [x, y, t];
        let ab = wedge(&a, &b).unwrap().coeffs_at(&p).unwrap();
        let ba = wedge(&b, &a).unwrap().coeffs_at(&p).unwrap();
        for (u, v) in ab.iter().zip(&ba) {
            prop_assert!((u + v).abs() <= 1e-14 * (1.0 + u.abs()));
        }
        let g = geo.gamma.clone();
        let left = wedge(&wedge(&a, &b).unwrap(), &g).unwrap().coeffs_at(&p).unwrap();
        let right = wedge(&a, &wedge(&b, &g).unwrap()).unwrap().coeffs_at(&p).unwrap();
        prop_assert!((left[0] - right[0]).abs() <= 1e-14 * (1.0 + left[0].abs()));
        let ca = wedge(&c, &a).unwrap().coeffs_at(&p).unwrap();
        let ac = wedge(&a, &c).unwrap().coeffs_at(&p).unwrap();
        prop_assert_eq!(ca, ac);
    }

    #[test]
    fn pullback_is_functorial(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let (f, g) = (random_map(s1), random_map(s2));
        let mut rng = ChaCha8Rng::seed_from_u64(s3);
        let a = random_test_form(&mut rng);
        let pts = plane().grid((-0.5, 0.5), (-0.5, 0.5), 3, 3);
        let composed = pullback(&f.then(&g).unwrap(), &a).unwrap();
        let stepwise = pullback(&f, &pullback(&g, &a).unwrap()).unwrap();
        let scale = 1.0 + composed.sup_norm(&pts).unwrap();
        prop_assert!(close(&composed, &stepwise, &pts) < 1e-9 * scale);
        let w = wedge(&a, &plane().beta).unwrap();
        let lhs = pullback(&f, &w).unwrap();
        let rhs = wedge(&pullback(&f, &a).unwrap(), &pullback(&f, &plane().beta).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, &pts) < 1e-9 * (1.0 + lhs.sup_norm(&pts).unwrap()));
    }

    #[test]
    fn d_commutes_with_pullback(s1 in any::<u64>(), s2 in any::<u64>()) {
        let f = random_map(s1);
        let a = random_function(s2);
        let pts = plane().grid((-0.5, 0.5), (-0.5, 0.5), 3, 3);
        let lhs = exterior_derivative(&pullback(&f, &a).unwrap(), DEFAULT_STEP).unwrap();
        let rhs = pullback(&f, &exterior_derivative(&a, DEFAULT_STEP).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, &pts) < 1e-7 * (1.0 + rhs.sup_norm(&pts).unwrap()));
    }
}

#[test]
fn degree_and_chart_errors() {
    let geo = plane();
    let top = wedge(&wedge(&geo.alpha, &geo.beta).unwrap(), &geo.gamma).unwrap();
    assert!(exterior_derivative(&top, 1e-4).is_err());
    assert!(geo.alpha.add(&DifferentialForm::coordinate(&geo.base, 0)).is_err());
    let f = DifferentialForm::function(&geo.base, |p| p[0]);
    assert!(geo.push(&f, &QuadConfig::default()).is_err());
}
