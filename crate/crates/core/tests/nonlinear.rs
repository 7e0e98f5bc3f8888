use kronfilt::adaptive::EngineConfig;
use kronfilt::analysis::MonteCarlo;
use kronfilt::nonlinear::{nonlinear_trial, run_nonlinear_id, FebSpec, NonlinearScenario};
use kronfilt::rng::Seed;
use kronfilt::signalgen::{DistortionKind, DistortionModel};
use proptest::prelude::*;

proptest! {
    #[test]
    fn expanded_length_matches_closed_form(a in 0usize..6, b in 1usize..25, seed in any::<u64>()) {
        let mut rng = Seed::new(seed).rng();
        let window: Vec<f64> = (0..b).map(|_| rand::Rng::random_range(&mut rng, -0.5..0.5)).collect();
        let t = FebSpec::tfln(a, b).unwrap();
        prop_assert_eq!(t.expand(&window).unwrap().len(), (2 * a + 1) * b);
        let v = FebSpec::volterra2(b).unwrap();
        let g = v.expand(&window).unwrap();
        prop_assert_eq!(g.len(), (b * b + 3 * b) / 2);
        prop_assert_eq!(&g, &v.expand(&window).unwrap());
    }
}

#[test]
fn volterra_order_is_pinned() {
    let g = FebSpec::volterra2(3).unwrap().expand(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(g, vec![1.0, 2.0, 3.0, 1.0, 4.0, 9.0, 2.0, 3.0, 6.0]);
}

fn cfg() -> EngineConfig {
    EngineConfig {
        d1: 10,
        d2: 5,
        ..EngineConfig::default()
    }
}

#[test]
fn identity_distortion_settles_at_the_noise_floor() {
    let sc = NonlinearScenario::new(DistortionModel::with_defaults(DistortionKind::Identity), 20_000);
    let mse = run_nonlinear_id(&FebSpec::tfln(2, 10).unwrap(), &cfg(), &sc, &MonteCarlo::new(10, 2)).unwrap();
    let floor = 10.0 * 1e-3f64.log10();
    assert!((mse.steady_state_db() - floor).abs() < 2.0, "{}", mse.steady_state_db());
}

#[test]
fn truncation_and_padding_both_run() {
    let sc = NonlinearScenario::new(DistortionModel::with_defaults(DistortionKind::SoftClip), 500);
    let short = EngineConfig { d1: 4, d2: 5, ..cfg() };
    let long = EngineConfig { d1: 13, d2: 5, ..cfg() };
    assert_eq!(nonlinear_trial(&FebSpec::tfln(2, 10).unwrap(), &short, &sc, Seed::new(1)).unwrap().len(), 500);
    assert_eq!(nonlinear_trial(&FebSpec::tfln(2, 10).unwrap(), &long, &sc, Seed::new(1)).unwrap().len(), 500);
}

#[test]
fn trial_is_reproducible() {
    let sc = NonlinearScenario::new(DistortionModel::with_defaults(DistortionKind::LoudspeakerSigmoid), 1000);
    let feb = FebSpec::volterra2(10).unwrap();
    let c = EngineConfig { d1: 13, d2: 5, ..cfg() };
    assert_eq!(nonlinear_trial(&feb, &c, &sc, Seed::new(5)).unwrap(), nonlinear_trial(&feb, &c, &sc, Seed::new(5)).unwrap());
}
