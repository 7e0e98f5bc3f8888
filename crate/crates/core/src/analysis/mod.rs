//! Performance metrics, steady-state theory, stability range, operation
//! counts and the Monte-Carlo harness.

mod complexity;
mod montecarlo;

pub use complexity::{complexity, Algorithm, ComplexityQuery};
pub use montecarlo::{monte_carlo, MonteCarlo, MonteCarloOutcome};

use crate::delay::dot;
use crate::error::{Error, Result};

/// Every dB value is clamped to `±DB_CLAMP`.
pub const DB_CLAMP: f64 = 200.0;

/// Default ERLE averaging window.
pub const ERLE_WINDOW: usize = 2048;

/// Fraction of iterations treated as steady state.
pub const STEADY_STATE_FRACTION: f64 = 0.1;

/// `20·log10(ratio)`, clamped.
pub fn amplitude_db(ratio: f64) -> f64 {
    (20.0 * ratio.log10()).clamp(-DB_CLAMP, DB_CLAMP)
}

/// `10·log10(power)`, clamped.
pub fn power_db(power: f64) -> f64 {
    (10.0 * power.log10()).clamp(-DB_CLAMP, DB_CLAMP)
}

/// `‖m0 - m̂‖ / ‖m0‖`.
pub fn nmsd_ratio(m0: &[f64], m_hat: &[f64]) -> Result<f64> {
    Error::check_len("estimate", m0.len(), m_hat.len())?;
    let norm = dot(m0, m0).sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("m0", "reference system must be nonzero"));
    }
    let dev = m0
        .iter()
        .zip(m_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(dev / norm)
}

/// Normalized mean-square deviation in dB.
pub fn nmsd(m0: &[f64], m_hat: &[f64]) -> Result<f64> {
    nmsd_ratio(m0, m_hat).map(amplitude_db)
}

/// Squared excess error `(xᵀ(m0 - m̂))²`.
pub fn emse_empirical(m0: &[f64], m_hat: &[f64], x: &[f64]) -> Result<f64> {
    Error::check_len("estimate", m0.len(), m_hat.len())?;
    Error::check_len("regressor", m0.len(), x.len())?;
    let excess: f64 = x.iter().zip(m0.iter().zip(m_hat)).map(|(x, (a, b))| x * (a - b)).sum();
    Ok(excess * excess)
}

/// `10·log10(mean(d²) / mean(e²))`; `+DB_CLAMP` when the error is silent.
pub fn erle(d: &[f64], e: &[f64]) -> Result<f64> {
    Error::check_len("error window", d.len(), e.len())?;
    if d.is_empty() {
        return Err(Error::invalid("window", "must be nonempty"));
    }
    let (pd, pe) = (mean_square(d), mean_square(e));
    Ok(if pe == 0.0 { DB_CLAMP } else { power_db(pd / pe) })
}

fn mean_square(v: &[f64]) -> f64 {
    dot(v, v) / v.len() as f64
}

/// Trailing-window mean at every index (shorter windows at the start).
pub fn moving_average(v: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0, "window must be positive");
    let mut acc = 0.0;
    v.iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x;
            if i >= window {
                acc -= v[i - window];
            }
            acc / (i + 1).min(window) as f64
        })
        .collect()
}

/// Steady-state EMSE `(μ1+μ2)σ² / (2 - μ1 - μ2)`.
pub fn emse_theory(mu1: f64, mu2: f64, noise_variance: f64) -> Result<f64> {
    check_steps(mu1, mu2)?;
    if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
        return Err(Error::invalid("noise_variance", "must be finite and >= 0"));
    }
    let sum = mu1 + mu2;
    if sum >= 2.0 {
        return Err(Error::UnstableStepSize { sum });
    }
    Ok(sum * noise_variance / (2.0 - sum))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
}

/// Stable iff `μ1 + μ2 < 2`.
pub fn stability_check(mu1: f64, mu2: f64) -> Result<Stability> {
    check_steps(mu1, mu2)?;
    Ok(if mu1 + mu2 < 2.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}

fn check_steps(mu1: f64, mu2: f64) -> Result<()> {
    for (name, mu) in [("mu1", mu1), ("mu2", mu2)] {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(name, "must be finite and > 0"));
        }
    }
    Ok(())
}

/// How a linear quantity maps to dB.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Magnitude ratio: `20·log10`.
    Amplitude,
    /// Power: `10·log10`.
    Power,
}

impl Scale {
    pub fn to_db(self, v: f64) -> f64 {
        match self {
            Scale::Amplitude => amplitude_db(v),
            Scale::Power => power_db(v),
        }
    }
}

/// Per-iteration curve in dB together with the linear-domain values it was
/// computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub name: String,
    pub values: Vec<f64>,
    pub linear: Vec<f64>,
    pub scale: Scale,
    pub trials: usize,
}

impl MetricSeries {
    /// Series from values already in dB (no linear record).
    pub fn new(name: impl Into<String>, values: Vec<f64>, trials: usize) -> Self {
        MetricSeries {
            name: name.into(),
            values,
            linear: Vec::new(),
            scale: Scale::Power,
            trials,
        }
    }

    /// Series from trial-averaged linear quantities.
    pub fn from_linear(name: impl Into<String>, scale: Scale, linear: Vec<f64>, trials: usize) -> Self {
        MetricSeries {
            name: name.into(),
            values: linear.iter().map(|&v| scale.to_db(v)).collect(),
            linear,
            scale,
            trials,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean over the final 10% of iterations, in dB. Averaging happens on
    /// the linear values when they are available.
    pub fn steady_state_db(&self) -> f64 {
        if self.linear.is_empty() {
            steady_state_mean(&self.values)
        } else {
            self.scale.to_db(steady_state_mean(&self.linear))
        }
    }

    /// First iteration (0-based) whose dB value is at or below `level`.
    pub fn first_below(&self, level: f64) -> Option<usize> {
        self.values.iter().position(|&v| v <= level)
    }
}

/// Mean of the trailing `STEADY_STATE_FRACTION` of `v` (at least one sample).
pub fn steady_state_mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let n = ((v.len() as f64 * STEADY_STATE_FRACTION).round() as usize).clamp(1, v.len());
    v[v.len() - n..].iter().sum::<f64>() / n as f64
}
