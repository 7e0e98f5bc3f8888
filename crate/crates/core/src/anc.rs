//! Feedforward filtered-x active noise control with an NKP subband
//! controller.
//!
//! Per sample: `d = P ∗ x`, `y = m̂ᵀ[x_r, …, x_{r-D+1}]`, `e = d - S ∗ y`.
//! The reference filtered by `Ŝ` and the measured residual `e` are split by
//! the analysis bank; every `k` samples the factors move along `+μ x′ e`
//! with the residual's subband components used directly as the subband
//! errors.

use crate::adaptive::{EngineConfig, NkpEngine};
use crate::analysis::{power_db, MetricSeries, MonteCarlo, Scale};
use crate::delay::{dot, DelayLine};
use crate::error::{Error, Result};
use crate::rng::{streams, Seed};
use crate::signalgen::{gen_alpha_stable, gen_ar, AlphaStableParams, ArModel, Fir};

/// Reference noise driving the loop.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Ar(ArModel),
    /// AR process plus an independent symmetric α-stable stream.
    Contaminated {
        base: ArModel,
        impulses: AlphaStableParams,
    },
}

impl SourceSpec {
    pub fn white(variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::invalid("variance", "must be finite and >= 0"));
        }
        Ok(SourceSpec::Ar(ArModel::white(variance.sqrt())?))
    }

    pub fn generate(&self, n: usize, seed: Seed) -> Vec<f64> {
        match self {
            SourceSpec::Ar(model) => gen_ar(model, n, seed.split(streams::INPUT).value()),
            SourceSpec::Contaminated { base, impulses } => {
                let mut x = gen_ar(base, n, seed.split(streams::INPUT).value());
                let hits = gen_alpha_stable(impulses, n, seed.split(streams::CONTAMINATION).value());
                x.iter_mut().zip(hits).for_each(|(a, b)| *a += b);
                x
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncScenario {
    pub primary_ir: Vec<f64>,
    pub secondary_ir: Vec<f64>,
    pub secondary_estimate_ir: Vec<f64>,
    pub source: SourceSpec,
}

impl AncScenario {
    /// Scenario with a perfect secondary-path estimate.
    pub fn new(primary_ir: Vec<f64>, secondary_ir: Vec<f64>, source: SourceSpec) -> Result<Self> {
        let s = AncScenario {
            secondary_estimate_ir: secondary_ir.clone(),
            primary_ir,
            secondary_ir,
            source,
        };
        s.validate()?;
        Ok(s)
    }

    /// `P(z) = z⁻³ - 0.3z⁻⁴ + 0.2z⁻⁵`, `S(z) = Ŝ(z) = z⁻² + 0.5z⁻⁵`.
    pub fn fir_example(source: SourceSpec) -> Self {
        AncScenario::new(
            vec![0.0, 0.0, 0.0, 1.0, -0.3, 0.2],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.5],
            source,
        )
        .expect("valid built-in paths")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, ir) in [
            ("primary_ir", &self.primary_ir),
            ("secondary_ir", &self.secondary_ir),
            ("secondary_estimate_ir", &self.secondary_estimate_ir),
        ] {
            if ir.is_empty() || ir.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(name, "must be nonempty and finite"));
            }
        }
        Ok(())
    }
}

/// Smoothed residual and disturbance magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnrState {
    eta: f64,
    s_e: f64,
    s_d: f64,
}

/// Disturbance level below which ANR is not reported.
pub const ANR_MIN_LEVEL: f64 = 1e-12;

impl AnrState {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::invalid("eta", "must lie in (0, 1)"));
        }
        Ok(AnrState {
            eta,
            s_e: 0.0,
            s_d: 0.0,
        })
    }

    pub fn s_e(&self) -> f64 {
        self.s_e
    }

    pub fn s_d(&self) -> f64 {
        self.s_d
    }

    /// Folds in one sample; returns `10·log10(S_e²/S_d²)` once `S_d` is
    /// above [`ANR_MIN_LEVEL`].
    pub fn update(&mut self, e: f64, d: f64) -> Option<f64> {
        self.s_e = self.eta * self.s_e + (1.0 - self.eta) * e.abs();
        self.s_d = self.eta * self.s_d + (1.0 - self.eta) * d.abs();
        self.ratio().map(power_db)
    }

    /// `S_e² / S_d²` when defined.
    pub fn ratio(&self) -> Option<f64> {
        (self.s_d > ANR_MIN_LEVEL).then(|| (self.s_e / self.s_d).powi(2))
    }
}

impl Default for AnrState {
    /// `η = 0.999`.
    fn default() -> Self {
        AnrState::new(0.999).expect("valid default")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncStep {
    pub e: f64,
    pub d: f64,
    /// `None` until the disturbance level is meaningful.
    pub anr: Option<f64>,
}

/// Closed-loop simulator owning the controller and the acoustic paths.
#[derive(Debug, Clone)]
pub struct AncSimulator {
    engine: NkpEngine,
    primary: Fir,
    secondary: Fir,
    estimate: Fir,
    reference: DelayLine,
    anr: AnrState,
}

impl AncSimulator {
    pub fn new(cfg: EngineConfig, scenario: &AncScenario) -> Result<Self> {
        scenario.validate()?;
        let reference = DelayLine::new(cfg.len());
        Ok(AncSimulator {
            engine: NkpEngine::new(cfg)?,
            primary: Fir::new(scenario.primary_ir.clone())?,
            secondary: Fir::new(scenario.secondary_ir.clone())?,
            estimate: Fir::new(scenario.secondary_estimate_ir.clone())?,
            reference,
            anr: AnrState::default(),
        })
    }

    pub fn with_anr(mut self, anr: AnrState) -> Self {
        self.anr = anr;
        self
    }

    pub fn engine(&self) -> &NkpEngine {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut NkpEngine {
        &mut self.engine
    }

    pub fn anr_state(&self) -> &AnrState {
        &self.anr
    }

    /// Advances the loop by one reference sample.
    pub fn fx_step(&mut self, x: f64) -> Result<AncStep> {
        if !x.is_finite() {
            return Err(Error::NonFiniteInput {
                step: self.engine.counter() + 1,
            });
        }
        let d = self.primary.process(x);
        self.reference.push(x);
        let y = dot(self.engine.weights(), self.reference.history());
        let e = d - self.secondary.process(y);
        let x_filtered = self.estimate.process(x);
        self.engine.step_measured(x_filtered, e)?;
        Ok(AncStep {
            e,
            d,
            anr: self.anr.update(e, d),
        })
    }
}

/// Linear `S_e²/S_d²` per sample of one trial; undefined samples count as 1.
pub fn anc_trial(cfg: &EngineConfig, scenario: &AncScenario, samples: usize, seed: Seed) -> Result<Vec<f64>> {
    let x = scenario.source.generate(samples, seed);
    let mut sim = AncSimulator::new(cfg.clone(), scenario)?;
    x.iter()
        .map(|&xr| {
            sim.fx_step(xr)?;
            Ok(sim.anr_state().ratio().unwrap_or(1.0))
        })
        .collect()
}

/// Trial-averaged ANR curve.
#[derive(Debug, Clone, PartialEq)]
pub struct AncReport {
    pub anr: MetricSeries,
    pub completed: usize,
    pub diverged: Vec<usize>,
}

pub fn run_anc(cfg: &EngineConfig, scenario: &AncScenario, samples: usize, mc: &MonteCarlo) -> Result<AncReport> {
    let out = mc.run(|_, seed| Ok(vec![anc_trial(cfg, scenario, samples, seed)?]))?;
    let ratio = out.mean.into_iter().next().expect("one curve per trial");
    Ok(AncReport {
        anr: MetricSeries::from_linear("anr", Scale::Power, ratio, out.completed),
        completed: out.completed,
        diverged: out.diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anr_examples() {
        let mut s = AnrState::default();
        assert_eq!(s.update(0.0, 0.0), None);
        let mut last = None;
        for r in 0..20000 {
            let d = ((r as f64) * 0.37).sin();
            last = s.update(d, d);
        }
        assert!(last.unwrap().abs() < 1e-9);

        let mut s = AnrState::default();
        for r in 0..20000 {
            let d = ((r as f64) * 0.37).sin() + 0.1;
            last = s.update(d / 10f64.sqrt(), d);
        }
        assert!((last.unwrap() + 10.0).abs() < 1e-9);
        assert!(AnrState::new(1.0).is_err());
        assert!(AnrState::new(0.0).is_err());
    }

    #[test]
    fn source_contamination_adds_impulses() {
        let base = ArModel::white(1.0).unwrap();
        let clean = SourceSpec::Ar(base.clone()).generate(1000, Seed::new(2));
        let p = AlphaStableParams::new(1.5, 1.0 / 60.0).unwrap();
        let dirty = SourceSpec::Contaminated { base, impulses: p }.generate(1000, Seed::new(2));
        let hits = gen_alpha_stable(&p, 1000, Seed::new(2).split(streams::CONTAMINATION).value());
        for i in 0..1000 {
            assert_eq!(dirty[i], clean[i] + hits[i]);
        }
    }

    #[test]
    fn non_finite_reference_is_rejected() {
        let cfg = EngineConfig {
            d1: 2,
            d2: 2,
            rank: 1,
            ..EngineConfig::default()
        };
        let sc = AncScenario::fir_example(SourceSpec::white(1.0).unwrap());
        let mut sim = AncSimulator::new(cfg, &sc).unwrap();
        assert!(matches!(sim.fx_step(f64::NAN), Err(Error::NonFiniteInput { step: 1 })));
        assert!(sim.fx_step(1.0).is_ok());
    }
}
