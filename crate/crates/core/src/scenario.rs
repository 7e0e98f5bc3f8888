//! System-identification and echo-cancellation experiment drivers.
//!
//! A trial draws an unknown system, an excitation and additive noise from
//! independent streams of the trial seed, forms `d = m0 ∗ x + v`, and runs
//! one adaptive filter over the pair while recording linear-domain curves.

use crate::adaptive::{AdaptiveFilter, EngineConfig, Nlms, NkpEngine, Nsaf};
use crate::analysis::{power_db, MetricSeries, MonteCarlo, Scale, ERLE_WINDOW};
use crate::error::{Error, Result};
use crate::filterbank::AnalysisBank;
use crate::nkp::KronFactors;
use crate::rng::{streams, Seed};
use crate::signalgen::{gen_alpha_stable, gen_ar, gen_gaussian, gen_sparse_ir, AlphaStableParams, ArModel, SparseIrSpec};

use rand_distr::{Distribution, StandardNormal};
use std::sync::Arc;

/// How the unknown system is obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    /// Synthetic sparse impulse response. Redrawn per trial unless
    /// `seed` pins one response for every trial.
    Sparse {
        length: usize,
        active_taps: usize,
        decay_rate: f64,
        seed: Option<u64>,
    },
    /// `Σ_p b_p ⊗ a_p` with i.i.d. Gaussian factors, normalized to unit norm.
    RandomKronecker { d1: usize, d2: usize, rank: usize },
    /// Fixed coefficients shared by all trials.
    Explicit(Vec<f64>),
}

impl SystemSpec {
    pub fn generate(&self, seed: Seed) -> Result<Vec<f64>> {
        match self {
            SystemSpec::Sparse {
                length,
                active_taps,
                decay_rate,
                seed: fixed,
            } => gen_sparse_ir(&SparseIrSpec {
                length: *length,
                active_taps: *active_taps,
                decay_rate: *decay_rate,
                seed: fixed.unwrap_or(seed.value()),
            }),
            SystemSpec::RandomKronecker { d1, d2, rank } => {
                let mut rng = seed.rng();
                let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
                let m1 = draw(rank * d1);
                let m2 = draw(rank * d2);
                let mut m0 = KronFactors::new(*rank, *d1, *d2, m1, m2)?.synthesize();
                let norm = m0.iter().map(|v| v * v).sum::<f64>().sqrt();
                m0.iter_mut().for_each(|v| *v /= norm);
                Ok(m0)
            }
            SystemSpec::Explicit(m0) => {
                if m0.is_empty() || m0.iter().all(|v| *v == 0.0) {
                    return Err(Error::invalid("system", "explicit system must be nonzero"));
                }
                Ok(m0.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    Gaussian { variance: f64 },
    AlphaStable(AlphaStableParams),
}

impl NoiseSpec {
    pub fn generate(&self, n: usize, seed: Seed) -> Result<Vec<f64>> {
        match self {
            NoiseSpec::None => Ok(vec![0.0; n]),
            NoiseSpec::Gaussian { variance } => gen_gaussian(*variance, n, seed.value()),
            NoiseSpec::AlphaStable(p) => Ok(gen_alpha_stable(p, n, seed.value())),
        }
    }

    /// Noise power if finite (zero for none, `σ²` for Gaussian).
    pub fn variance(&self) -> Option<f64> {
        match self {
            NoiseSpec::None => Some(0.0),
            NoiseSpec::Gaussian { variance } => Some(*variance),
            NoiseSpec::AlphaStable(p) if p.varpi() == 2.0 => Some(2.0 * p.gamma()),
            NoiseSpec::AlphaStable(_) => None,
        }
    }
}

/// Which adaptive filter a trial runs.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmSpec {
    Nkp(EngineConfig),
    Nlms { len: usize, mu: f64 },
    Nsaf {
        len: usize,
        mu: f64,
        bands: usize,
        bank_len: usize,
    },
}

impl AlgorithmSpec {
    pub fn build(&self) -> Result<Box<dyn AdaptiveFilter + Send>> {
        Ok(match self {
            AlgorithmSpec::Nkp(cfg) => Box::new(NkpEngine::new(cfg.clone())?),
            AlgorithmSpec::Nlms { len, mu } => Box::new(Nlms::new(*len, *mu)?),
            AlgorithmSpec::Nsaf {
                len,
                mu,
                bands,
                bank_len,
            } => {
                let bank = Arc::new(AnalysisBank::cosine_modulated(*bands, *bank_len)?);
                Box::new(Nsaf::new(*len, *mu, bank)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SysIdScenario {
    pub system: SystemSpec,
    pub input: ArModel,
    pub noise: NoiseSpec,
    pub samples: usize,
}

/// Signals of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSignals {
    pub m0: Vec<f64>,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `m0 ∗ x + v`.
    pub d: Vec<f64>,
}

impl SysIdScenario {
    pub fn signals(&self, seed: Seed) -> Result<TrialSignals> {
        let m0 = self.system.generate(seed.split(streams::SYSTEM))?;
        let x = gen_ar(&self.input, self.samples, seed.split(streams::INPUT).value());
        let v = self.noise.generate(self.samples, seed.split(streams::NOISE))?;
        let clean = crate::signalgen::fir_filter(&m0, &x)?;
        let d = clean.iter().zip(&v).map(|(a, b)| a + b).collect();
        Ok(TrialSignals { m0, x, v, d })
    }
}

/// Per-iteration linear curves of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    /// `‖m0 - m̂‖ / ‖m0‖` after each sample (shorter vector zero-padded).
    pub nmsd_ratio: Vec<f64>,
    /// Squared a priori error.
    pub err_sq: Vec<f64>,
    /// Squared excess error (a priori error minus noise).
    pub excess_sq: Vec<f64>,
    pub desired_sq: Vec<f64>,
}

impl TrialTrace {
    pub fn into_curves(self) -> Vec<Vec<f64>> {
        vec![self.nmsd_ratio, self.err_sq, self.excess_sq, self.desired_sq]
    }
}

/// Runs `filter` over a trial's signals.
pub fn trace_filter(filter: &mut dyn AdaptiveFilter, s: &TrialSignals) -> Result<TrialTrace> {
    let n = s.x.len();
    let norm = s.m0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut t = TrialTrace {
        nmsd_ratio: Vec::with_capacity(n),
        err_sq: Vec::with_capacity(n),
        excess_sq: Vec::with_capacity(n),
        desired_sq: Vec::with_capacity(n),
    };
    for i in 0..n {
        let out = filter.step(s.x[i], s.d[i])?;
        let e = out.e_fullband;
        t.nmsd_ratio.push(padded_distance(&s.m0, filter.weights()) / norm);
        t.err_sq.push(e * e);
        let excess = e - s.v[i];
        t.excess_sq.push(excess * excess);
        t.desired_sq.push(s.d[i] * s.d[i]);
    }
    Ok(t)
}

/// `‖a - b‖` with the shorter vector zero-padded.
pub fn padded_distance(a: &[f64], b: &[f64]) -> f64 {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let common: f64 = short.iter().zip(long).map(|(x, y)| (x - y) * (x - y)).sum();
    let tail: f64 = long[short.len()..].iter().map(|v| v * v).sum();
    (common + tail).sqrt()
}

pub fn run_trial(alg: &AlgorithmSpec, scenario: &SysIdScenario, seed: Seed) -> Result<TrialTrace> {
    let signals = scenario.signals(seed)?;
    let mut filter = alg.build()?;
    trace_filter(filter.as_mut(), &signals)
}

/// Trial-averaged curves of a system-identification run.
#[derive(Debug, Clone, PartialEq)]
pub struct SysIdReport {
    pub nmsd: MetricSeries,
    pub mse: MetricSeries,
    pub emse: MetricSeries,
    pub erle: MetricSeries,
    pub completed: usize,
    pub diverged: Vec<usize>,
}

impl SysIdReport {
    pub fn series(&self) -> [&MetricSeries; 4] {
        [&self.nmsd, &self.mse, &self.emse, &self.erle]
    }
}

pub fn run_sysid(alg: &AlgorithmSpec, scenario: &SysIdScenario, mc: &MonteCarlo) -> Result<SysIdReport> {
    let out = mc.run(|_, seed| Ok(run_trial(alg, scenario, seed)?.into_curves()))?;
    let mut mean = out.mean.into_iter();
    let mut next = || mean.next().expect("four curves per trial");
    let (nmsd, mse, emse, desired) = (next(), next(), next(), next());
    let trials = out.completed;
    let erle = erle_curve(&desired, &mse, ERLE_WINDOW);
    Ok(SysIdReport {
        nmsd: MetricSeries::from_linear("nmsd", Scale::Amplitude, nmsd, trials),
        mse: MetricSeries::from_linear("mse", Scale::Power, mse, trials),
        emse: MetricSeries::from_linear("emse", Scale::Power, emse, trials),
        erle: MetricSeries::new("erle", erle, trials),
        completed: out.completed,
        diverged: out.diverged,
    })
}

/// Windowed ERLE in dB from per-iteration mean powers of `d` and `e`.
pub fn erle_curve(d_power: &[f64], e_power: &[f64], window: usize) -> Vec<f64> {
    let pd = crate::analysis::moving_average(d_power, window);
    let pe = crate::analysis::moving_average(e_power, window);
    pd.iter()
        .zip(&pe)
        .map(|(d, e)| if *e == 0.0 { crate::analysis::DB_CLAMP } else { power_db(d / e) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_distance_pads_either_side() {
        assert_eq!(padded_distance(&[3.0, 4.0], &[3.0]), 4.0);
        assert_eq!(padded_distance(&[0.0], &[3.0, 4.0]), 5.0);
    }

    #[test]
    fn signals_are_reproducible_and_consistent() {
        let sc = SysIdScenario {
            system: SystemSpec::RandomKronecker { d1: 3, d2: 2, rank: 1 },
            input: ArModel::white(1.0).unwrap(),
            noise: NoiseSpec::Gaussian { variance: 0.01 },
            samples: 64,
        };
        let a = sc.signals(Seed::new(4)).unwrap();
        assert_eq!(a, sc.signals(Seed::new(4)).unwrap());
        assert_ne!(a.x, sc.signals(Seed::new(5)).unwrap().x);
        assert!((a.m0.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        let clean = crate::signalgen::fir_filter(&a.m0, &a.x).unwrap();
        for ((d, c), v) in a.d.iter().zip(&clean).zip(&a.v) {
            assert!((d - c - v).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_alpha_stable_variance() {
        let p = AlphaStableParams::new(2.0, 0.5).unwrap();
        assert_eq!(NoiseSpec::AlphaStable(p).variance(), Some(1.0));
        let p = AlphaStableParams::new(1.5, 0.5).unwrap();
        assert_eq!(NoiseSpec::AlphaStable(p).variance(), None);
    }
}
