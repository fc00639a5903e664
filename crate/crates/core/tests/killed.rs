use fvselect_core::killed::{flow_theta, survival_rate_estimate};
use fvselect_core::measures::w1_to_law;
use fvselect_core::qsd::{survival_prob, QsdParams, SurvivalQuery};
use fvselect_core::rng::{ReplicaStreams, StreamKey};
use fvselect_core::sampler::PointMass;

fn streams(tag: &str) -> ReplicaStreams {
    ReplicaStreams::new(StreamKey::new(31, tag), 0)
}

#[test]
fn quasi_stationary_laws_are_fixed_points() {
    for l in [0.25, 0.5] {
        let q = QsdParams::<f64>::new(l).unwrap();
        for t in [1.0, 2.0] {
            let ens = flow_theta(&q, t, 1_000_000, 0.01, streams(&format!("fixed/{l}/{t}"))).unwrap();
            let d = w1_to_law(&ens.to_measure().unwrap(), &q);
            assert!(d < 0.02, "lambda {l} t {t}: W1 {d}");
        }
    }
}

#[test]
fn decay_rate_under_a_qsd_is_flat() {
    let q = QsdParams::<f64>::new(0.25).unwrap();
    let rates = survival_rate_estimate(&q, &[1.0, 2.0, 4.0, 8.0], 1_000_000, 0.01, streams("flat")).unwrap();
    for (t, r) in rates {
        assert!((r - 0.25).abs() < 0.01, "t {t}: {r}");
    }
}

#[test]
fn decay_rate_from_a_point_matches_the_closed_form() {
    // The rate −ln S(1, t)/t falls toward 1/2 from above; at t = 12 it is
    // still about 0.77.
    let grid = [2.0, 6.0, 12.0];
    let n = 2_000_000;
    let rates = survival_rate_estimate(&PointMass(1.0), &grid, n, 0.01, streams("point")).unwrap();
    for (t, r) in rates {
        let s: f64 = survival_prob(SurvivalQuery::new(1.0, t).unwrap());
        let exact = -s.ln() / t;
        let se = ((1.0 - s) / (n as f64 * s)).sqrt() / t;
        assert!((r - exact).abs() < 3.0 * se, "t {t}: {r} vs {exact} (se {se})");
        assert!(r > 0.5);
    }
}
