mod common;

use common::gaussian;
use kronfilt::adaptive::{EngineConfig, ScalingFunction};
use kronfilt::anc::{AncScenario, AncSimulator, AnrState, SourceSpec};
use kronfilt::nkp::KronFactors;
use kronfilt::signalgen::fir_filter;

fn cfg(mu: f64) -> EngineConfig {
    EngineConfig {
        d1: 10,
        d2: 10,
        rank: 2,
        ..EngineConfig::default()
    }
    .with_step(mu)
}

fn example() -> AncScenario {
    AncScenario::fir_example(SourceSpec::white(1.0).unwrap())
}

#[test]
fn frozen_controller_matches_direct_convolution() {
    let sc = example();
    let mut sim = AncSimulator::new(cfg(0.0), &sc).unwrap();
    let w = sim.engine().weights().to_vec();
    let x = gaussian(3000, 1);
    let d = fir_filter(&sc.primary_ir, &x).unwrap();
    let y = fir_filter(&w, &x).unwrap();
    let anti = fir_filter(&sc.secondary_ir, &y).unwrap();
    let mut last = None;
    for r in 0..x.len() {
        let out = sim.fx_step(x[r]).unwrap();
        assert!((out.d - d[r]).abs() < 1e-12);
        assert!((out.e - (d[r] - anti[r])).abs() < 1e-12);
        last = out.anr;
    }
    assert!(last.unwrap().abs() < 0.5);
}

#[test]
fn anti_noise_respects_the_secondary_delay() {
    let sc = AncScenario::new(vec![0.0, 1.0], vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.5], SourceSpec::white(1.0).unwrap()).unwrap();
    let mut sim = AncSimulator::new(cfg(0.0), &sc).unwrap();
    let ones = KronFactors::new(1, 10, 10, vec![1.0; 10], vec![1.0; 10]).unwrap();
    let mut f = KronFactors::zeros(2, 10, 10).unwrap();
    f.m1_mut()[..10].copy_from_slice(ones.m1());
    f.m2_mut()[..10].copy_from_slice(ones.m2());
    sim.engine_mut().set_factors(f).unwrap();
    // A unit impulse: the disturbance arrives one sample later, the
    // anti-noise no earlier than the two-sample secondary delay.
    let mut errs = Vec::new();
    for r in 0..6 {
        let out = sim.fx_step(if r == 0 { 1.0 } else { 0.0 }).unwrap();
        errs.push(out.e - out.d);
    }
    assert_eq!(&errs[..2], &[0.0, 0.0]);
    assert_eq!(errs[2], -1.0);
}

#[test]
fn perfect_controller_cancels_and_anr_keeps_falling() {
    // P = S ∗ W with W = z⁻¹.
    let s = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.5];
    let p = fir_filter(&[0.0, 1.0], &s.iter().copied().chain([0.0]).collect::<Vec<_>>()).unwrap();
    let sc = AncScenario::new(p, s, SourceSpec::white(1.0).unwrap()).unwrap();
    let mut sim = AncSimulator::new(cfg(0.0), &sc).unwrap();
    let mut f = KronFactors::zeros(2, 10, 10).unwrap();
    f.m1_mut()[1] = 1.0;
    f.m2_mut()[0] = 1.0;
    sim.engine_mut().set_factors(f).unwrap();
    let x = gaussian(5000, 2);
    let mut prev = f64::INFINITY;
    for (r, &xr) in x.iter().enumerate() {
        let out = sim.fx_step(xr).unwrap();
        assert!(out.e.abs() < 1e-12);
        if let (Some(anr), true) = (out.anr, r > 100) {
            assert!(anr <= prev + 1e-9);
            prev = anr;
        }
    }
    assert!(prev < -100.0);
}

#[test]
fn anr_ignores_source_amplitude() {
    let sc = example();
    let x = gaussian(20_000, 3);
    let run = |c: f64| {
        let mut sim = AncSimulator::new(
            EngineConfig {
                delta: 1e-30,
                ..cfg(0.01)
            },
            &sc,
        )
        .unwrap();
        x.iter().map(|&v| sim.fx_step(c * v).unwrap().anr.unwrap_or(f64::NAN)).collect::<Vec<_>>()
    };
    let base = run(1.0);
    for c in [0.5, 2.0, 3.0] {
        let scaled = run(c);
        for (a, b) in base.iter().zip(&scaled) {
            assert!(a.is_nan() && b.is_nan() || (a - b).abs() < 1e-9, "c={c}: {a} vs {b}");
        }
    }
}

#[test]
fn anr_state_trivial_cases() {
    let mut s = AnrState::default();
    assert_eq!(s.ratio(), None);
    s.update(1.0, 1.0);
    assert_eq!(s.ratio(), Some(1.0));
}

#[test]
fn robust_controllers_run_under_contamination() {
    let p = kronfilt::signalgen::AlphaStableParams::new(1.5, 1.0 / 60.0).unwrap();
    let sc = AncScenario::fir_example(SourceSpec::Contaminated {
        base: kronfilt::signalgen::ArModel::white(1.0).unwrap(),
        impulses: p,
    });
    for scaling in [ScalingFunction::mcc(5.0).unwrap(), ScalingFunction::lc(1.0).unwrap()] {
        let mut sim = AncSimulator::new(EngineConfig { scaling, ..cfg(0.01) }, &sc).unwrap();
        let x = sc.source.generate(20_000, kronfilt::rng::Seed::new(4));
        for v in x {
            sim.fx_step(v).unwrap();
        }
        assert!(!sim.engine().is_diverged());
    }
}
