use intgeom::bodies::{integrate_over_boundary, intersect_transversal, normal_cycle, Intersection, PlanarBody};
use intgeom::contact::plane;
use intgeom::forms::DifferentialForm;
use intgeom::currents::*;
use intgeom::error::Error;
use intgeom::quadrature::QuadConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn square(x: f64, y: f64) -> PlanarBody {
    PlanarBody::rectangle(x, y, x + 1.0, y + 1.0).unwrap()
}

fn intersection_cycle(p1: &PlanarBody, p2: &PlanarBody) -> intgeom::bodies::NormalCycle {
    match intersect_transversal(p1, p2).unwrap() {
        Intersection::Empty => Default::default(),
        Intersection::Components(cs) => normal_cycle(&cs[0].body),
    }
}

#[test]
fn offset_squares() {
    let (a, b) = (square(0.0, 0.0), square(0.5, 0.5));
    assert_eq!(fiber_intersection(&a, &b).unwrap().len(), 2);
    let t = three_term_product(&a, &b).unwrap();
    assert_eq!(t.count(Provenance::GtArc), 2);
    let arcs = t.count(Provenance::RestrictedN1) + t.count(Provenance::RestrictedN2);
    // two inherited vertex arcs and four edge segments
    assert_eq!(arcs, 6);
    assert!(t.is_closed());
    let err = compare_currents(&t.as_cycle(), &intersection_cycle(&a, &b), 50, 7, &QuadConfig::default()).unwrap();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn containment_and_disjoint() {
    let inner = PlanarBody::rectangle(0.2, 0.2, 0.6, 0.7).unwrap();
    let outer = square(0.0, 0.0);
    assert!(fiber_intersection(&inner, &outer).unwrap().is_empty());
    let t = three_term_product(&inner, &outer).unwrap();
    assert_eq!(t.as_cycle(), normal_cycle(&inner));
    let far = square(5.0, 5.0);
    assert!(fiber_intersection(&outer, &far).unwrap().is_empty());
    assert!(three_term_product(&outer, &far).unwrap().pieces.is_empty());
}

#[test]
fn not_transversal_is_rejected() {
    let a = square(0.0, 0.0);
    let b = square(1.0, 0.3);
    assert!(matches!(three_term_product(&a, &b), Err(Error::NotTransversal(_))));
}

#[test]
fn reversed_cycle_is_detected() {
    let n = normal_cycle(&square(0.0, 0.0));
    assert_eq!(compare_currents(&n, &n, 10, 1, &QuadConfig::default()).unwrap(), 0.0);
    assert!(compare_currents(&n.reversed(), &n, 10, 1, &QuadConfig::default()).unwrap() > 0.1);
}

#[test]
fn random_convex_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut done = 0;
    while done < 10 {
        let p1 = random_convex_polygon(&mut rng, 6).unwrap();
        let p2 = random_convex_polygon(&mut rng, 5).unwrap();
        let t = match three_term_product(&p1, &p2) {
            Ok(t) => t,
            Err(Error::NotTransversal(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        assert!(t.is_closed());
        assert!(t.as_cycle().legendrian_residual(8) < 1e-12);
        assert!(t.pieces.iter().all(|p| p.piece.multiplicity.abs() == 1));
        let err = compare_currents(&t.as_cycle(), &intersection_cycle(&p1, &p2), 50, done, &QuadConfig::default()).unwrap();
        assert!(err < 1e-6, "pair {done}: {err}");
        // π_*T = ∂(P₁ ∩ P₂)
        let cap = intersect_transversal(&p1, &p2).unwrap();
        let w = DifferentialForm::new(&plane().base, 1, |p| Ok([p[1] * p[1] - p[0], 0.5 + p[0] * p[1]].into_iter().collect()));
        let top = t.as_cycle().integrate_base(&w, &QuadConfig::default()).unwrap();
        let bottom = match &cap {
            Intersection::Empty => 0.0,
            Intersection::Components(cs) => integrate_over_boundary(&cs[0].body, &w, &QuadConfig::default()).unwrap(),
        };
        assert!((top - bottom).abs() < 1e-10 * (1.0 + bottom.abs()), "{top} vs {bottom}");
        done += 1;
    }
}
