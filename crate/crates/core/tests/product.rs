use intgeom::bodies::PlanarBody;
use intgeom::contact::{is_vertical_default, plane, rumin_d};
use intgeom::currents::random_test_form;
use intgeom::forms::{pullback, wedge, DifferentialForm};
use intgeom::product::oracle::product_table;
use intgeom::product::*;
use intgeom::quadrature::QuadConfig;
use intgeom::valuations::{standard_basis, ValuationRep};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn eval_cfg() -> QuadConfig {
    QuadConfig::default()
}

fn bodies() -> Vec<PlanarBody> {
    vec![
        PlanarBody::rectangle(0.0, 0.0, 1.0, 1.0).unwrap(),
        PlanarBody::polygon(&[[0.0, 0.0], [1.5, 0.0], [0.3, 1.1]]).unwrap(),
        PlanarBody::disk([0.4, -0.3], 1.2).unwrap(),
    ]
}

/// The product formula with an explicit global orientation of the blow-up.
fn oriented_product(v1: &ValuationRep, v2: &ValuationRep, orientation: f64, cfg: &ProductConfig) -> ValuationRep {
    let geo = plane();
    let bl = blowup();
    let d2 = rumin_d(&v2.omega, cfg.h).unwrap();
    let push2 = geo.push(&v2.omega, &cfg.fiber).unwrap();
    let lifted = wedge(&pullback(&bl.q1, &v1.omega).unwrap(), &pullback(&bl.q2, &d2).unwrap()).unwrap();
    let omega = gelfand_transform_oriented(&lifted, orientation, &cfg.fiber)
        .unwrap()
        .add(&wedge(&v1.omega, &geo.lift(&push2).unwrap()).unwrap())
        .unwrap();
    let closed2 = d2.add(&geo.lift(&v2.phi).unwrap()).unwrap();
    let phi = geo
        .push(&wedge(&v1.omega, &geo.flip(&closed2).unwrap()).unwrap(), &cfg.fiber)
        .unwrap()
        .add(&wedge(&v1.phi, &push2).unwrap())
        .unwrap();
    ValuationRep::new(omega, phi, None).unwrap()
}

#[test]
fn euler_characteristic_is_the_unit() {
    let [chi, v1, area] = standard_basis();
    let cfg = ProductConfig::default();
    let left = alesker_product(&chi, &v1, &cfg).unwrap();
    let right = alesker_product(&v1, &chi, &cfg).unwrap();
    let chi_area = alesker_product(&chi, &area, &cfg).unwrap();
    for b in bodies() {
        let half = 0.5 * b.perimeter();
        for p in [&left, &right] {
            let x = p.evaluate(&b, &eval_cfg()).unwrap();
            assert!((x - half).abs() < 1e-4 * half, "{x} vs {half}");
        }
        let a = chi_area.evaluate(&b, &eval_cfg()).unwrap();
        assert!((a - b.signed_area()).abs() < 1e-4 * b.signed_area());
    }
}

#[test]
fn the_opposite_orientation_flips_the_unit() {
    let [chi, v1, _] = standard_basis();
    let cfg = ProductConfig::default();
    let b = PlanarBody::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
    let right = oriented_product(&chi, &v1, ORIENTATION, &cfg).evaluate(&b, &eval_cfg()).unwrap();
    let wrong = oriented_product(&chi, &v1, -ORIENTATION, &cfg).evaluate(&b, &eval_cfg()).unwrap();
    assert!((right - 2.0).abs() < 1e-4);
    assert!((wrong + 2.0).abs() < 1e-4, "{wrong}");
}

#[test]
fn v1_squared_matches_the_oracle_table() {
    let [_, v1, _] = standard_basis();
    let p = alesker_product(&v1, &v1, &ProductConfig::default()).unwrap();
    let ocfg = OracleConfig { grid: 200, replicates: 4, ..Default::default() };
    for (k, b) in bodies().iter().enumerate() {
        let t = product_table(b, &ocfg, k as u64).unwrap();
        let x = p.evaluate(b, &eval_cfg()).unwrap();
        let (o, s) = (t.values[1][1], t.stderr[1][1]);
        assert!((x - o).abs() < (4.0 * s).max(0.01 * o.abs()), "{x} vs {o} ± {s}");
        // V₁² is a multiple of the area
        assert!((x / b.signed_area() - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
    }
}

#[test]
fn products_above_the_top_degree_vanish() {
    let [_, v1, area] = standard_basis();
    let cfg = ProductConfig::default();
    let aa = alesker_product(&area, &area, &cfg).unwrap();
    assert!(aa.omega.is_zero() && aa.phi.is_zero());
    let va = alesker_product(&v1, &area, &cfg).unwrap();
    let av = alesker_product(&area, &v1, &cfg).unwrap();
    for b in bodies() {
        let scale = 0.5 * b.perimeter() * b.signed_area();
        assert!(va.evaluate(&b, &eval_cfg()).unwrap().abs() < 1e-4 * scale);
        assert!(av.evaluate(&b, &eval_cfg()).unwrap().abs() < 1e-4 * scale);
    }
}

#[test]
fn product_representatives_satisfy_the_closedness_identities() {
    let geo = plane();
    // random forms oscillate in θ; an absolute floor keeps the nested quadrature within budget
    let cfg = ProductConfig { fiber: QuadConfig { rel_tol: 1e-8, abs_tol: 1e-8, budget: 400_000 }, ..Default::default() };
    let samples = geo.grid((-0.5, 0.5), (-0.5, 0.5), 2, 3);
    let [_, v1, area] = standard_basis();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let w = ValuationRep::new(random_test_form(&mut rng), DifferentialForm::constant(&geo.base, 2, &[0.3]), None).unwrap();
    for (a, b) in [(&v1, &v1), (&w, &area), (&v1, &w)] {
        let p = alesker_product(a, b, &cfg).unwrap();
        let r = verify_prop64(a, b, &p, &samples, &cfg).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}

#[test]
fn gelfand_transform_of_verticals_is_vertical() {
    let geo = plane();
    let cfg = QuadConfig::default();
    let samples = geo.grid((-0.5, 0.5), (-0.5, 0.5), 2, 4);
    let g = geo.alpha.multiply(|p| 1.0 + p[0] * p[1] + 0.3 * p[2].sin());
    let h = wedge(&geo.alpha, &geo.gamma).unwrap().multiply(|p| 0.5 + p[1] * p[1] + p[2].cos());
    let t = gt_pair(&g, &h, &cfg).unwrap();
    assert_eq!(t.degree(), 1);
    assert!(is_vertical_default(&t, &samples).unwrap().vertical);
}

#[test]
fn base_densities_do_not_pair_with_rumin_differentials() {
    let geo = plane();
    let cfg = ProductConfig::default();
    let samples = geo.grid((-0.5, 0.5), (-0.5, 0.5), 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let phi = DifferentialForm::new(&geo.base, 2, |p| Ok([1.0 + p[0] * p[0]].into_iter().collect()));
    let d = rumin_d(&random_test_form(&mut rng), cfg.h).unwrap();
    let t = gt_pair(&geo.lift(&phi).unwrap(), &d, &cfg.fiber).unwrap();
    assert_eq!(t.degree(), 2);
    assert!(t.sup_norm(&samples).unwrap() < 1e-6 * (1.0 + d.sup_norm(&samples).unwrap()));
}
