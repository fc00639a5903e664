use fvselect_core::fleming_viot::{estimate_stationary, ParticleSystemState, StationaryConfig};
use fvselect_core::qsd::QsdParams;
use fvselect_core::rng::{ReplicaStreams, StreamKey};
use fvselect_core::sampler::PointMass;

fn streams(tag: &str) -> ReplicaStreams {
    ReplicaStreams::new(StreamKey::new(17, tag), 0)
}

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

#[test]
fn jumps_grow_linearly_in_stationarity() {
    let q = QsdParams::<f64>::minimal();
    let mut s = ParticleSystemState::init(100, &q, streams("linear")).unwrap();
    let mut none = |_: &ParticleSystemState<f64>, _: &[fvselect_core::fleming_viot::JumpEvent<f64>]| {};
    s.run(20.0, 1e-3, &mut none).unwrap();
    let j0 = s.jumps();
    s.run(50.0, 1e-3, &mut none).unwrap();
    let j50 = s.jumps() - j0;
    s.run(50.0, 1e-3, &mut none).unwrap();
    let j100 = s.jumps() - j0;
    let ratio = j100 as f64 / j50 as f64;
    assert!(ratio > 1.8 && ratio < 2.2, "{ratio}");
}

#[test]
fn initial_conditions_are_forgotten() {
    let mut c = StationaryConfig::new(100, 1e-3, 500.0);
    c.burn_in = Some(50.0);
    let q = QsdParams::<f64>::minimal();
    let a = estimate_stationary(&c, &q, streams("from-qsd")).unwrap();
    let b = estimate_stationary(&c, &PointMass(5.0), streams("from-five")).unwrap();
    let (la, lb) = (a.lambda_hat, b.lambda_hat);
    assert!(
        (la.estimate - lb.estimate).abs() <= 3.0 * combined(la.std_error, lb.std_error),
        "{la:?} vs {lb:?}"
    );
    let (da, db) = (a.xi_distance(&q).unwrap(), b.xi_distance(&q).unwrap());
    assert!(
        (da.estimate - db.estimate).abs() <= 3.0 * combined(da.std_error, db.std_error),
        "{da:?} vs {db:?}"
    );
}

#[test]
fn stationary_identities_at_n_100() {
    let mut c = StationaryConfig::new(100, 1e-3, 500.0);
    c.burn_in = Some(50.0);
    let s = estimate_stationary(&c, &QsdParams::<f64>::minimal(), streams("identities")).unwrap();
    assert!(s.lambda_finite_guaranteed);
    assert!(s.lambda_hat.estimate > 0.0);
    let bound = fvselect_core::fleming_viot::lemma_lower_bound(100);
    assert!(s.lambda_hat.estimate >= bound - 3.0 * s.lambda_hat.std_error);
    assert!(s.interjump_identity().within(1.0, 3.0));
    assert!(s.varpi_identity().within(1.0, 3.0));
    let one = s.green_identity_check(|_| 1.0).unwrap();
    assert!((one.lhs - 1.0).abs() < 1e-9, "{one:?}");
    assert!(one.z_score.abs() <= 3.0, "{one:?}");
    let exp = s.green_identity_check(|x: f64| (-x).exp()).unwrap();
    assert!(exp.z_score.abs() <= 3.0, "{exp:?}");
    let half = s.batches.len() / 2;
    let (x, y) = (s.lambda_over(0..half), s.lambda_over(half..s.batches.len()));
    assert!((x.estimate - y.estimate).abs() <= 3.0 * combined(x.std_error, y.std_error));
    assert!(s.xi_hat.min() > 0.0 && s.varpi_hat.min() > 0.0);
}
