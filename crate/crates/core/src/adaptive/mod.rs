//! Adaptive engines.
//!
//! [`NkpEngine`] is the subband NKP filter in either structure (filter then
//! compress, or compress then filter), with optional MCC/LC error scaling.
//! [`Nlms`] and [`Nsaf`] are the full-length baselines; the NLMS-NKP
//! baseline is an [`NkpEngine`] configured by [`EngineConfig::nlms_nkp`].

mod baseline;
mod engine;

use std::sync::Arc;

pub use baseline::{run_baseline, BaselineKind, Nlms, Nsaf, RunCurves};
pub use engine::NkpEngine;

use crate::error::{Error, Result};
use crate::filterbank::AnalysisBank;
use crate::nkp::InitScheme;

/// Weights whose magnitude exceeds this (or that are not finite) mark the
/// filter as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

/// Default regularizer added to every normalization term.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// Per-subband error weighting applied to each normalized update term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScalingFunction {
    #[default]
    None,
    /// `exp(-ψ e² / ‖x‖²)`: correntropy-induced weighting.
    Mcc { psi: f64 },
    /// `1 / (1 + β e² / ‖x‖²)`: logarithmic-cost weighting.
    Lc { beta: f64 },
}

impl ScalingFunction {
    pub fn mcc(psi: f64) -> Result<Self> {
        let s = ScalingFunction::Mcc { psi };
        s.validate()?;
        Ok(s)
    }

    pub fn lc(beta: f64) -> Result<Self> {
        let s = ScalingFunction::Lc { beta };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ScalingFunction::None => Ok(()),
            ScalingFunction::Mcc { psi } if psi > 0.0 && psi.is_finite() => Ok(()),
            ScalingFunction::Lc { beta } if beta > 0.0 && beta.is_finite() => Ok(()),
            ScalingFunction::Mcc { .. } => Err(Error::invalid("psi", "must be finite and > 0")),
            ScalingFunction::Lc { .. } => Err(Error::invalid("beta", "must be finite and > 0")),
        }
    }

    /// Weight in `(0, 1]` for error `e` against a regularized squared norm.
    #[inline]
    pub fn scale(&self, e: f64, norm_sq: f64) -> f64 {
        match *self {
            ScalingFunction::None => 1.0,
            ScalingFunction::Mcc { psi } => (-psi * e * e / norm_sq).exp(),
            ScalingFunction::Lc { beta } => 1.0 / (1.0 + beta * e * e / norm_sq),
        }
    }
}

/// Order of compression and subband filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Structure {
    /// Compress the lagged fullband regressors, then filter by the bank.
    TypeI,
    /// Filter into subbands, then compress each subband regressor.
    #[default]
    TypeII,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub d1: usize,
    pub d2: usize,
    pub rank: usize,
    pub bands: usize,
    pub bank_len: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub delta: f64,
    /// Update every `interval` samples.
    pub interval: usize,
    pub scaling: ScalingFunction,
    pub structure: Structure,
    pub init: InitScheme,
    pub lambda: f64,
    /// Form the `m2` regressor with the freshly updated `m1` instead of the
    /// pre-update one.
    pub sequential_m1: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            d1: 25,
            d2: 20,
            rank: 2,
            bands: 4,
            bank_len: 33,
            mu1: 0.03,
            mu2: 0.03,
            delta: DEFAULT_DELTA,
            interval: 4,
            scaling: ScalingFunction::None,
            structure: Structure::TypeII,
            init: InitScheme::Original,
            lambda: 0.01,
            sequential_m1: false,
        }
    }
}

impl EngineConfig {
    /// Fullband two-factor NLMS: one band, a one-tap bank, updates every
    /// sample.
    pub fn nlms_nkp(d1: usize, d2: usize, rank: usize, mu: f64) -> Self {
        EngineConfig {
            d1,
            d2,
            rank,
            bands: 1,
            bank_len: 1,
            mu1: mu,
            mu2: mu,
            interval: 1,
            ..EngineConfig::default()
        }
    }

    /// Filter length `D1·D2`.
    pub fn len(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn with_step(mut self, mu: f64) -> Self {
        self.mu1 = mu;
        self.mu2 = mu;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 {
            return Err(Error::invalid("D1/D2", "must be >= 1"));
        }
        if self.rank == 0 {
            return Err(Error::invalid("P", "must be >= 1"));
        }
        if self.bands == 0 {
            return Err(Error::invalid("N", "must be >= 1"));
        }
        if self.bank_len < self.bands {
            return Err(Error::invalid("L", "must be >= N"));
        }
        for (name, mu) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta", "must be finite and > 0"));
        }
        if self.interval == 0 {
            return Err(Error::invalid("k", "must be >= 1"));
        }
        self.scaling.validate()?;
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::invalid("lambda", "must lie in (0, 1]"));
        }
        if self.init == InitScheme::Yim && self.rank > self.d2 {
            return Err(Error::invalid("P", "YIM init needs P <= D2"));
        }
        Ok(())
    }

    /// `μ1 + μ2 < 2`; outside this range the mean-square recursion is not
    /// guaranteed to converge.
    pub fn is_stable(&self) -> bool {
        self.mu1 + self.mu2 < 2.0
    }

    pub fn bank(&self) -> Result<AnalysisBank> {
        AnalysisBank::cosine_modulated(self.bands, self.bank_len)
    }

    pub(crate) fn shared_bank(&self) -> Result<Arc<AnalysisBank>> {
        self.bank().map(Arc::new)
    }
}

/// Result of feeding one sample pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// A priori fullband error `d_r - m̂ᵀ x_r`.
    pub e_fullband: f64,
    /// Whether the weights were updated on this sample.
    pub updated: bool,
}

/// Common sample-by-sample interface of every linear adaptive filter here.
pub trait AdaptiveFilter {
    fn step(&mut self, x: f64, d: f64) -> Result<StepOutput>;

    /// Current full-length weight vector.
    fn weights(&self) -> &[f64];
}

pub(crate) fn check_finite(step: u64, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteInput { step })
    }
}

pub(crate) fn diverged(w: &[f64]) -> bool {
    w.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_examples() {
        for s in [
            ScalingFunction::None,
            ScalingFunction::mcc(1.0).unwrap(),
            ScalingFunction::lc(1.0).unwrap(),
        ] {
            assert_eq!(s.scale(0.0, 3.0), 1.0);
        }
        let mcc = ScalingFunction::mcc(1.0).unwrap();
        assert!((mcc.scale(2.0, 4.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((ScalingFunction::lc(1.0).unwrap().scale(2.0, 4.0) - 0.5).abs() < 1e-15);
        assert!(ScalingFunction::mcc(0.0).is_err());
        assert!(ScalingFunction::lc(-1.0).is_err());
        assert!(ScalingFunction::lc(f64::NAN).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = EngineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.len(), 500);
        assert!(cfg.is_stable());
        assert!(!cfg.clone().with_step(1.0).is_stable());
        let bad = [
            EngineConfig { interval: 0, ..cfg.clone() },
            EngineConfig { delta: 0.0, ..cfg.clone() },
            EngineConfig { rank: 0, ..cfg.clone() },
            EngineConfig { bank_len: 3, ..cfg.clone() },
            EngineConfig { mu1: -0.1, ..cfg.clone() },
            EngineConfig { lambda: 0.0, ..cfg.clone() },
            EngineConfig { init: InitScheme::Yim, rank: 21, ..cfg.clone() },
            EngineConfig { scaling: ScalingFunction::Mcc { psi: 0.0 }, ..cfg.clone() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn divergence_predicate() {
        assert!(!diverged(&[0.0, -1e8, 1e8]));
        assert!(diverged(&[1e8 * 1.0001]));
        assert!(diverged(&[f64::NAN]));
        assert!(diverged(&[f64::NEG_INFINITY]));
    }
}
