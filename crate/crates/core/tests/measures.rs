use fvselect_core::measures::{ks_to_law, w1, w1_to_law, EmpiricalMeasure};
use fvselect_core::qsd::QsdParams;
use fvselect_core::rng::seeded;

#[test]
fn million_samples_of_pi_min_are_close_to_the_law() {
    let q = QsdParams::<f64>::minimal();
    let m = EmpiricalMeasure::uniform(q.sample(1_000_000, &mut seeded(1)).unwrap()).unwrap();
    let d = w1_to_law(&m, &q);
    let k = ks_to_law(&m, &q);
    assert!(d < 0.005, "W1 {d}");
    assert!(k < 0.002, "KS {k}");
}

#[test]
fn law_distance_agrees_with_a_fine_discretization() {
    let q = QsdParams::<f64>::new(0.375).unwrap();
    let m = EmpiricalMeasure::uniform(q.sample(50_000, &mut seeded(2)).unwrap()).unwrap();
    let fine = EmpiricalMeasure::uniform(q.sample(10_000_000, &mut seeded(3)).unwrap()).unwrap();
    let analytic = w1_to_law(&m, &q);
    let discrete = w1(&m, &fine);
    assert!((analytic - discrete).abs() < 0.002, "{analytic} vs {discrete}");
}

#[test]
fn point_masses_against_each_other() {
    let a = EmpiricalMeasure::point_mass(1.0).unwrap();
    let b = EmpiricalMeasure::point_mass(3.0).unwrap();
    assert_eq!(w1(&a, &b), 2.0);
    assert_eq!(w1(&a, &a), 0.0);
}
