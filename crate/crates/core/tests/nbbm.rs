use fvselect_core::nbbm::{front_speed, NbbmState};
use fvselect_core::rng::seeded;

#[test]
fn speed_at_n_100_is_below_the_minimal_wave_speed() {
    let mut s = NbbmState::new(vec![0.0; 100], seeded(9)).unwrap();
    let traj = s.run(200.0, 1e-3, 0.1).unwrap();
    let v = front_speed(&traj.times, &traj.min, 100.0).unwrap();
    assert!(v.estimate > 1.0 && v.estimate < std::f64::consts::SQRT_2, "{v:?}");
    assert_eq!(s.n(), 100);
}
