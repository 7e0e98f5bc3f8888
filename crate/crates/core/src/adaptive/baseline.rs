use std::sync::Arc;

use super::{check_finite, diverged, AdaptiveFilter, StepOutput, DEFAULT_DELTA};
use crate::analysis::{amplitude_db, nmsd_ratio, power_db, MetricSeries};
use crate::delay::{dot, norm_sq, DelayLine};
use crate::error::{Error, Result};
use crate::filterbank::{AnalysisBank, SubbandDecomposer};

/// Fullband NLMS: `w ← w + μ x e / (‖x‖² + δ)` every sample.
#[derive(Debug, Clone)]
pub struct Nlms {
    w: Vec<f64>,
    line: DelayLine,
    mu: f64,
    delta: f64,
    counter: u64,
    poisoned: Option<u64>,
}

impl Nlms {
    pub fn new(len: usize, mu: f64) -> Result<Self> {
        Self::with_delta(len, mu, DEFAULT_DELTA)
    }

    pub fn with_delta(len: usize, mu: f64, delta: f64) -> Result<Self> {
        check_common(len, mu, delta)?;
        Ok(Nlms {
            w: vec![0.0; len],
            line: DelayLine::new(len),
            mu,
            delta,
            counter: 0,
            poisoned: None,
        })
    }
}

impl AdaptiveFilter for Nlms {
    fn step(&mut self, x: f64, d: f64) -> Result<StepOutput> {
        if let Some(step) = self.poisoned {
            return Err(Error::Diverged { step });
        }
        check_finite(self.counter + 1, &[x, d])?;
        self.counter += 1;
        self.line.push(x);
        let xs = self.line.history();
        let e = d - dot(&self.w, xs);
        let g = self.mu * e / (norm_sq(xs) + self.delta);
        for (w, x) in self.w.iter_mut().zip(xs) {
            *w += g * x;
        }
        if diverged(&self.w) {
            self.poisoned = Some(self.counter);
            return Err(Error::Diverged { step: self.counter });
        }
        Ok(StepOutput {
            e_fullband: e,
            updated: true,
        })
    }

    fn weights(&self) -> &[f64] {
        &self.w
    }
}

/// Full-length normalized subband adaptive filter, updated every `N`
/// samples with `w ← w + μ Σ_j x_j e_j / (‖x_j‖² + δ)`.
#[derive(Debug, Clone)]
pub struct Nsaf {
    w: Vec<f64>,
    full: DelayLine,
    x_dec: SubbandDecomposer,
    d_dec: SubbandDecomposer,
    sub: Vec<DelayLine>,
    x_sub: Vec<f64>,
    d_sub: Vec<f64>,
    step_acc: Vec<f64>,
    mu: f64,
    delta: f64,
    counter: u64,
    poisoned: Option<u64>,
}

impl Nsaf {
    pub fn new(len: usize, mu: f64, bank: Arc<AnalysisBank>) -> Result<Self> {
        Self::with_delta(len, mu, DEFAULT_DELTA, bank)
    }

    pub fn with_delta(len: usize, mu: f64, delta: f64, bank: Arc<AnalysisBank>) -> Result<Self> {
        check_common(len, mu, delta)?;
        let n = bank.bands();
        Ok(Nsaf {
            w: vec![0.0; len],
            full: DelayLine::new(len),
            x_dec: SubbandDecomposer::new(bank.clone()),
            d_dec: SubbandDecomposer::new(bank),
            sub: vec![DelayLine::new(len); n],
            x_sub: vec![0.0; n],
            d_sub: vec![0.0; n],
            step_acc: vec![0.0; len],
            mu,
            delta,
            counter: 0,
            poisoned: None,
        })
    }
}

impl AdaptiveFilter for Nsaf {
    fn step(&mut self, x: f64, d: f64) -> Result<StepOutput> {
        if let Some(step) = self.poisoned {
            return Err(Error::Diverged { step });
        }
        check_finite(self.counter + 1, &[x, d])?;
        self.counter += 1;
        self.full.push(x);
        let e_fullband = d - dot(&self.w, self.full.history());
        self.x_dec.decompose_step_into(x, &mut self.x_sub);
        self.d_dec.decompose_step_into(d, &mut self.d_sub);
        for (line, &v) in self.sub.iter_mut().zip(&self.x_sub) {
            line.push(v);
        }
        let n = self.sub.len();
        if !self.counter.is_multiple_of(n as u64) {
            return Ok(StepOutput {
                e_fullband,
                updated: false,
            });
        }
        self.step_acc.iter_mut().for_each(|v| *v = 0.0);
        for (line, &dj) in self.sub.iter().zip(&self.d_sub) {
            let xj = line.history();
            let ej = dj - dot(&self.w, xj);
            let g = ej / (norm_sq(xj) + self.delta);
            for (a, x) in self.step_acc.iter_mut().zip(xj) {
                *a += g * x;
            }
        }
        for (w, a) in self.w.iter_mut().zip(&self.step_acc) {
            *w += self.mu * a;
        }
        if diverged(&self.w) {
            self.poisoned = Some(self.counter);
            return Err(Error::Diverged { step: self.counter });
        }
        Ok(StepOutput {
            e_fullband,
            updated: true,
        })
    }

    fn weights(&self) -> &[f64] {
        &self.w
    }
}

fn check_common(len: usize, mu: f64, delta: f64) -> Result<()> {
    if len == 0 {
        return Err(Error::invalid("D", "filter length must be >= 1"));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::invalid("mu", "must be finite and >= 0"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", "must be finite and > 0"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineKind {
    Nlms,
    Nsaf(Arc<AnalysisBank>),
}

/// Single-run NMSD and MSE curves of a baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct RunCurves {
    pub nmsd: MetricSeries,
    pub mse: MetricSeries,
}

/// Runs a baseline of length `len = m0.len()` over `(x, d)`.
pub fn run_baseline(
    kind: &BaselineKind,
    mu: f64,
    len: usize,
    x: &[f64],
    d: &[f64],
    m0: &[f64],
) -> Result<RunCurves> {
    Error::check_len("desired signal", x.len(), d.len())?;
    let mut filter: Box<dyn AdaptiveFilter> = match kind {
        BaselineKind::Nlms => Box::new(Nlms::new(len, mu)?),
        BaselineKind::Nsaf(bank) => Box::new(Nsaf::new(len, mu, bank.clone())?),
    };
    let mut nmsd = Vec::with_capacity(x.len());
    let mut mse = Vec::with_capacity(x.len());
    for (&xr, &dr) in x.iter().zip(d) {
        let out = filter.step(xr, dr)?;
        nmsd.push(amplitude_db(nmsd_ratio(m0, filter.weights())?));
        mse.push(power_db(out.e_fullband * out.e_fullband));
    }
    Ok(RunCurves {
        nmsd: MetricSeries::new("nmsd", nmsd, 1),
        mse: MetricSeries::new("mse", mse, 1),
    })
}
