//! Functional expansion blocks and nonlinear system identification.
//!
//! Expansion orderings (window `[x_0, …, x_{B-1}]`, newest first):
//!
//! * TFLN of order `A`: `[x_0, …, x_{B-1}]` followed, for each `i` in turn,
//!   by `sin(πx_i), cos(πx_i), sin(2πx_i), cos(2πx_i), …, sin(Aπx_i), cos(Aπx_i)`.
//! * Second-order Volterra: `[x_0, …, x_{B-1}, x_0², …, x_{B-1}², x_0x_1,
//!   x_0x_2, …, x_0x_{B-1}, x_1x_2, …, x_{B-2}x_{B-1}]`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Uniform;

use crate::adaptive::{EngineConfig, NkpEngine};
use crate::analysis::{MetricSeries, MonteCarlo, Scale};
use crate::delay::DelayLine;
use crate::error::{Error, Result};
use crate::rng::{streams, Seed};
use crate::signalgen::{gen_gaussian, DistortionModel, Fir};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// Trigonometric expansion of order `A`.
    Tfln(usize),
    Volterra2,
}

/// Functional expansion block over the `memory` most recent samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FebSpec {
    pub expansion: Expansion,
    pub memory: usize,
}

impl FebSpec {
    pub fn tfln(order: usize, memory: usize) -> Result<Self> {
        Self::checked(Expansion::Tfln(order), memory)
    }

    pub fn volterra2(memory: usize) -> Result<Self> {
        Self::checked(Expansion::Volterra2, memory)
    }

    fn checked(expansion: Expansion, memory: usize) -> Result<Self> {
        if memory == 0 {
            return Err(Error::invalid("B", "memory length must be >= 1"));
        }
        Ok(FebSpec { expansion, memory })
    }

    /// Expanded length: `(2A+1)B` or `(B²+3B)/2`.
    pub fn expanded_len(&self) -> usize {
        let b = self.memory;
        match self.expansion {
            Expansion::Tfln(a) => (2 * a + 1) * b,
            Expansion::Volterra2 => (b * b + 3 * b) / 2,
        }
    }

    pub fn expand(&self, window: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.expanded_len()];
        self.expand_into(window, &mut g)?;
        Ok(g)
    }

    pub fn expand_into(&self, window: &[f64], out: &mut [f64]) -> Result<()> {
        Error::check_len("expansion window", self.memory, window.len())?;
        Error::check_len("expanded vector", self.expanded_len(), out.len())?;
        let b = self.memory;
        out[..b].copy_from_slice(window);
        let mut k = b;
        match self.expansion {
            Expansion::Tfln(order) => {
                for &x in window {
                    for a in 1..=order {
                        let (s, c) = (a as f64 * PI * x).sin_cos();
                        out[k] = s;
                        out[k + 1] = c;
                        k += 2;
                    }
                }
            }
            Expansion::Volterra2 => {
                for &x in window {
                    out[k] = x * x;
                    k += 1;
                }
                for i in 0..b {
                    for j in i + 1..b {
                        out[k] = window[i] * window[j];
                        k += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Memoryless distortion driven by uniform input, plus Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearScenario {
    pub distortion: DistortionModel,
    pub noise_variance: f64,
    pub samples: usize,
    /// Optional linear channel applied after the distortion.
    pub post_fir: Option<Vec<f64>>,
}

impl NonlinearScenario {
    pub fn new(distortion: DistortionModel, samples: usize) -> Self {
        NonlinearScenario {
            distortion,
            noise_variance: 1e-3,
            samples,
            post_fir: None,
        }
    }

    /// Input uniform on `[-0.5, 0.5]` and the desired signal.
    pub fn signals(&self, seed: Seed) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = seed.stream(streams::INPUT);
        let uniform = Uniform::new_inclusive(-0.5, 0.5).expect("valid bounds");
        let x: Vec<f64> = (0..self.samples).map(|_| rng.sample(uniform)).collect();
        let v = gen_gaussian(self.noise_variance, self.samples, seed.split(streams::NOISE).value())?;
        let mut fir = self.post_fir.clone().map(Fir::new).transpose()?;
        let d = x
            .iter()
            .zip(&v)
            .map(|(&xr, &vr)| {
                let y = self.distortion.distort(xr);
                fir.as_mut().map_or(y, |f| f.process(y)) + vr
            })
            .collect();
        Ok((x, d))
    }
}

/// Per-sample squared a priori error of one trial.
///
/// The expanded regressor is truncated to its leading `D1·D2` entries or
/// zero-padded up to that length.
pub fn nonlinear_trial(feb: &FebSpec, cfg: &EngineConfig, scenario: &NonlinearScenario, seed: Seed) -> Result<Vec<f64>> {
    let (x, d) = scenario.signals(seed)?;
    let mut engine = NkpEngine::with_vector_input(cfg.clone())?;
    let mut window = DelayLine::new(feb.memory);
    let mut g = vec![0.0; feb.expanded_len()];
    let mut regressor = vec![0.0; cfg.len()];
    let keep = g.len().min(regressor.len());
    let mut err_sq = Vec::with_capacity(x.len());
    for (&xr, &dr) in x.iter().zip(&d) {
        window.push(xr);
        feb.expand_into(window.history(), &mut g)?;
        regressor[..keep].copy_from_slice(&g[..keep]);
        let e = engine.step_vector(&regressor, dr)?.e_fullband;
        err_sq.push(e * e);
    }
    Ok(err_sq)
}

/// Trial-averaged MSE curve of an expansion-based NKP subband filter.
pub fn run_nonlinear_id(
    feb: &FebSpec,
    cfg: &EngineConfig,
    scenario: &NonlinearScenario,
    mc: &MonteCarlo,
) -> Result<MetricSeries> {
    let out = mc.run(|_, seed| Ok(vec![nonlinear_trial(feb, cfg, scenario, seed)?]))?;
    let mse = out.mean.into_iter().next().expect("one curve per trial");
    Ok(MetricSeries::from_linear("mse", Scale::Power, mse, out.completed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalgen::DistortionKind;

    #[test]
    fn expansion_examples() {
        let t0 = FebSpec::tfln(0, 3).unwrap();
        assert_eq!(t0.expand(&[0.1, -0.2, 0.3]).unwrap(), vec![0.1, -0.2, 0.3]);
        let g = FebSpec::tfln(1, 1).unwrap().expand(&[0.5]).unwrap();
        assert_eq!(g[0], 0.5);
        assert!((g[1] - 1.0).abs() < 1e-15 && g[2].abs() < 1e-15);
        let v = FebSpec::volterra2(2).unwrap().expand(&[2.0, 3.0]).unwrap();
        assert_eq!(v, vec![2.0, 3.0, 4.0, 9.0, 6.0]);
        assert_eq!(FebSpec::volterra2(10).unwrap().expanded_len(), 65);
        assert_eq!(FebSpec::tfln(2, 10).unwrap().expanded_len(), 50);
        assert!(FebSpec::tfln(1, 0).is_err());
        assert!(t0.expand(&[1.0]).is_err());
    }

    #[test]
    fn tfln_zero_window_pattern() {
        let g = FebSpec::tfln(2, 3).unwrap().expand(&[0.0; 3]).unwrap();
        let mut want = vec![0.0; 3];
        for _ in 0..3 {
            want.extend([0.0, 1.0, 0.0, 1.0]);
        }
        assert_eq!(g, want);
    }

    #[test]
    fn tfln_interleaves_per_sample() {
        let g = FebSpec::tfln(2, 2).unwrap().expand(&[0.25, -0.1]).unwrap();
        let want = [
            0.25,
            -0.1,
            (PI * 0.25).sin(),
            (PI * 0.25).cos(),
            (2.0 * PI * 0.25).sin(),
            (2.0 * PI * 0.25).cos(),
            (PI * -0.1).sin(),
            (PI * -0.1).cos(),
            (2.0 * PI * -0.1).sin(),
            (2.0 * PI * -0.1).cos(),
        ];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn signals_follow_the_model() {
        let sc = NonlinearScenario {
            noise_variance: 0.0,
            post_fir: Some(vec![0.0, 1.0]),
            ..NonlinearScenario::new(DistortionModel::with_defaults(DistortionKind::SoftClip), 100)
        };
        let (x, d) = sc.signals(Seed::new(3)).unwrap();
        assert!(x.iter().all(|v| (-0.5..=0.5).contains(v)));
        assert_eq!(d[0], 0.0);
        for r in 1..100 {
            assert_eq!(d[r], sc.distortion.distort(x[r - 1]));
        }
    }
}
