use std::fmt::Write as _;
use std::sync::Arc;

use super::{check_finite, diverged, AdaptiveFilter, EngineConfig, StepOutput, Structure};
use crate::delay::{dot, norm_sq, DelayLine};
use crate::error::{Error, Result};
use crate::filterbank::{AnalysisBank, SubbandDecomposer};
use crate::nkp::{init_factors, KronFactors};

/// Subband NKP adaptive filter.
///
/// The regressor can arrive as a scalar stream (tapped delay line, the usual
/// linear case) or as a ready-made vector per sample (functional-expansion
/// front ends). The subband target is either the decomposed desired signal,
/// from which the engine forms its own errors, or an externally measured
/// error signal (filtered-x control).
#[derive(Debug, Clone)]
pub struct NkpEngine {
    cfg: EngineConfig,
    bank: Arc<AnalysisBank>,
    factors: KronFactors,
    weights: Vec<f64>,
    front: FrontEnd,
    target: SubbandDecomposer,
    target_sub: Vec<f64>,
    counter: u64,
    poisoned: Option<u64>,
    x2: Vec<f64>,
    x1: Vec<f64>,
    tmp2: Vec<f64>,
    tmp1: Vec<f64>,
    delta1: Vec<f64>,
    delta2: Vec<f64>,
    sub_err: Vec<f64>,
}

#[derive(Debug, Clone)]
enum FrontEnd {
    Taps {
        /// Capacity `D` for type II, `D + L - 1` for type I.
        full: DelayLine,
        /// Type II only: decomposer and per-subband histories.
        dec: Option<SubbandDecomposer>,
        sub: Vec<DelayLine>,
        sub_sample: Vec<f64>,
    },
    Vectors {
        /// The `L` most recent regressor vectors; `ring[head]` is newest.
        ring: Vec<Vec<f64>>,
        head: usize,
        /// Type II only: `Σ_l f_j[l] g_{r-l}` per subband, filled at update
        /// time.
        sub: Vec<Vec<f64>>,
    },
}

#[derive(Clone, Copy)]
enum Target {
    Desired,
    MeasuredError,
}

impl FrontEnd {
    fn new(cfg: &EngineConfig, vectors: bool) -> Self {
        let d = cfg.len();
        let (n, l) = (cfg.bands, cfg.bank_len);
        let type2 = cfg.structure == Structure::TypeII;
        if vectors {
            FrontEnd::Vectors {
                ring: vec![vec![0.0; d]; l],
                head: 0,
                sub: if type2 { vec![vec![0.0; d]; n] } else { Vec::new() },
            }
        } else {
            FrontEnd::Taps {
                full: DelayLine::new(if type2 { d } else { d + l - 1 }),
                dec: None,
                sub: if type2 { vec![DelayLine::new(d); n] } else { Vec::new() },
                sub_sample: vec![0.0; n],
            }
        }
    }

    fn attach_bank(&mut self, bank: &Arc<AnalysisBank>) {
        if let FrontEnd::Taps { dec, sub, .. } = self {
            if !sub.is_empty() {
                *dec = Some(SubbandDecomposer::new(bank.clone()));
            }
        }
    }

    fn push_sample(&mut self, x: f64) {
        if let FrontEnd::Taps {
            full,
            dec,
            sub,
            sub_sample,
        } = self
        {
            full.push(x);
            if let Some(dec) = dec {
                dec.decompose_step_into(x, sub_sample);
                for (line, &v) in sub.iter_mut().zip(sub_sample.iter()) {
                    line.push(v);
                }
            }
        }
    }

    fn push_vector(&mut self, g: &[f64]) {
        if let FrontEnd::Vectors { ring, head, .. } = self {
            *head = (*head + 1) % ring.len();
            ring[*head].copy_from_slice(g);
        }
    }

    /// Newest regressor `x_r` (length `D`).
    fn current(&self, d: usize) -> &[f64] {
        self.lagged(0, d)
    }

    /// Regressor from `lag` samples ago.
    fn lagged(&self, lag: usize, d: usize) -> &[f64] {
        match self {
            FrontEnd::Taps { full, .. } => &full.history()[lag..lag + d],
            FrontEnd::Vectors { ring, head, .. } => {
                let l = ring.len();
                &ring[(head + l - lag) % l]
            }
        }
    }

    fn prepare(&mut self, bank: &AnalysisBank) {
        if let FrontEnd::Vectors { ring, head, sub } = self {
            let l = ring.len();
            for (j, out) in sub.iter_mut().enumerate() {
                out.iter_mut().for_each(|v| *v = 0.0);
                for (lag, &f) in bank.filter(j).iter().enumerate() {
                    if f == 0.0 {
                        continue;
                    }
                    for (o, g) in out.iter_mut().zip(&ring[(*head + l - lag) % l]) {
                        *o += f * g;
                    }
                }
            }
        }
    }

    /// Subband regressor `x_{r,j}` (type II only).
    fn subband(&self, j: usize) -> &[f64] {
        match self {
            FrontEnd::Taps { sub, .. } => sub[j].history(),
            FrontEnd::Vectors { sub, .. } => &sub[j],
        }
    }

    fn reset(&mut self) {
        match self {
            FrontEnd::Taps {
                full,
                dec,
                sub,
                sub_sample,
            } => {
                full.reset();
                if let Some(dec) = dec {
                    dec.reset();
                }
                sub.iter_mut().for_each(DelayLine::reset);
                sub_sample.iter_mut().for_each(|v| *v = 0.0);
            }
            FrontEnd::Vectors { ring, head, sub } => {
                ring.iter_mut().flatten().for_each(|v| *v = 0.0);
                sub.iter_mut().flatten().for_each(|v| *v = 0.0);
                *head = 0;
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Factor {
    M1,
    M2,
}

impl NkpEngine {
    /// Engine fed by a scalar input stream.
    pub fn new(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let bank = cfg.shared_bank()?;
        Self::build(cfg, bank, false)
    }

    /// Engine fed by one regressor vector of length `D1·D2` per sample.
    pub fn with_vector_input(cfg: EngineConfig) -> Result<Self> {
        cfg.validate()?;
        let bank = cfg.shared_bank()?;
        Self::build(cfg, bank, true)
    }

    /// Scalar-input engine with an explicit analysis bank.
    pub fn with_bank(cfg: EngineConfig, bank: Arc<AnalysisBank>) -> Result<Self> {
        cfg.validate()?;
        Error::check_len("bank bands", cfg.bands, bank.bands())?;
        Error::check_len("bank filter length", cfg.bank_len, bank.len())?;
        Self::build(cfg, bank, false)
    }

    fn build(cfg: EngineConfig, bank: Arc<AnalysisBank>, vectors: bool) -> Result<Self> {
        let factors = init_factors(cfg.init, cfg.lambda, cfg.rank, cfg.d1, cfg.d2)?;
        let weights = factors.synthesize();
        let mut front = FrontEnd::new(&cfg, vectors);
        front.attach_bank(&bank);
        let (n, pd1, pd2) = (cfg.bands, cfg.rank * cfg.d1, cfg.rank * cfg.d2);
        Ok(NkpEngine {
            target: SubbandDecomposer::new(bank.clone()),
            target_sub: vec![0.0; n],
            bank,
            factors,
            weights,
            front,
            counter: 0,
            poisoned: None,
            x2: vec![0.0; n * pd1],
            x1: vec![0.0; n * pd2],
            tmp2: vec![0.0; pd1],
            tmp1: vec![0.0; pd2],
            delta1: vec![0.0; pd1],
            delta2: vec![0.0; pd2],
            sub_err: vec![0.0; n],
            cfg,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn bank(&self) -> &AnalysisBank {
        &self.bank
    }

    pub fn factors(&self) -> &KronFactors {
        &self.factors
    }

    /// Synthesized filter `m̂ = Σ_p m2_p ⊗ m1_p`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of samples consumed.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn is_diverged(&self) -> bool {
        self.poisoned.is_some()
    }

    /// Subband errors `e_{r,j}` formed at the most recent update.
    pub fn subband_errors(&self) -> &[f64] {
        &self.sub_err
    }

    /// Replaces the factors (dimensions must match) and re-synthesizes.
    pub fn set_factors(&mut self, factors: KronFactors) -> Result<()> {
        Error::check_len("P", self.cfg.rank, factors.rank())?;
        Error::check_len("D1", self.cfg.d1, factors.d1())?;
        Error::check_len("D2", self.cfg.d2, factors.d2())?;
        self.factors = factors;
        self.factors.synthesize_into(&mut self.weights);
        self.poisoned = diverged(&self.weights).then_some(self.counter);
        Ok(())
    }

    /// Clears signal histories, the counter and the divergence flag; keeps
    /// the factors.
    pub fn reset_signals(&mut self) {
        self.front.reset();
        self.target.reset();
        self.counter = 0;
        self.poisoned = None;
    }

    /// Feeds one scalar input sample and desired sample.
    pub fn step(&mut self, x: f64, d: f64) -> Result<StepOutput> {
        if !matches!(self.front, FrontEnd::Taps { .. }) {
            return Err(Error::invalid("input", "engine expects regressor vectors"));
        }
        self.begin(&[x, d])?;
        self.front.push_sample(x);
        self.finish_desired(d)
    }

    /// Feeds one regressor vector and desired sample.
    pub fn step_vector(&mut self, g: &[f64], d: f64) -> Result<StepOutput> {
        if !matches!(self.front, FrontEnd::Vectors { .. }) {
            return Err(Error::invalid("input", "engine expects a scalar stream"));
        }
        Error::check_len("regressor vector", self.cfg.len(), g.len())?;
        check_finite(self.counter + 1, g)?;
        self.begin(&[d])?;
        self.front.push_vector(g);
        self.finish_desired(d)
    }

    /// Feeds a filtered reference sample and a measured error sample whose
    /// subband components drive the update directly. Returns whether an
    /// update happened.
    pub fn step_measured(&mut self, x_filtered: f64, e: f64) -> Result<bool> {
        if !matches!(self.front, FrontEnd::Taps { .. }) {
            return Err(Error::invalid("input", "engine expects regressor vectors"));
        }
        self.begin(&[x_filtered, e])?;
        self.front.push_sample(x_filtered);
        self.target.decompose_step_into(e, &mut self.target_sub);
        self.maybe_update(Target::MeasuredError)
    }

    fn begin(&mut self, samples: &[f64]) -> Result<()> {
        if let Some(step) = self.poisoned {
            return Err(Error::Diverged { step });
        }
        check_finite(self.counter + 1, samples)?;
        self.counter += 1;
        Ok(())
    }

    fn finish_desired(&mut self, d: f64) -> Result<StepOutput> {
        let e_fullband = d - dot(&self.weights, self.front.current(self.cfg.len()));
        self.target.decompose_step_into(d, &mut self.target_sub);
        let updated = self.maybe_update(Target::Desired)?;
        Ok(StepOutput {
            e_fullband,
            updated,
        })
    }

    fn maybe_update(&mut self, target: Target) -> Result<bool> {
        if !self.counter.is_multiple_of(self.cfg.interval as u64) {
            return Ok(false);
        }
        self.update(target);
        if diverged(&self.weights) {
            self.poisoned = Some(self.counter);
            return Err(Error::Diverged { step: self.counter });
        }
        Ok(true)
    }

    fn update(&mut self, target: Target) {
        let (bands, sequential) = (self.cfg.bands, self.cfg.sequential_m1);
        let (pd1, pd2) = (self.cfg.rank * self.cfg.d1, self.cfg.rank * self.cfg.d2);
        self.front.prepare(&self.bank);

        compress_all(self, Factor::M2);
        if !sequential {
            compress_all(self, Factor::M1);
        }

        self.delta1.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..bands {
            let xj = &self.x2[j * pd1..(j + 1) * pd1];
            let e = match target {
                Target::Desired => self.target_sub[j] - dot(self.factors.m1(), xj),
                Target::MeasuredError => self.target_sub[j],
            };
            self.sub_err[j] = e;
            accumulate(&mut self.delta1, xj, e, &self.cfg);
        }
        if sequential {
            axpy(self.factors.m1_mut(), self.cfg.mu1, &self.delta1);
            compress_all(self, Factor::M1);
        }

        self.delta2.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..bands {
            let xj = &self.x1[j * pd2..(j + 1) * pd2];
            let e = match target {
                Target::Desired => self.target_sub[j] - dot(self.factors.m2(), xj),
                Target::MeasuredError => self.target_sub[j],
            };
            accumulate(&mut self.delta2, xj, e, &self.cfg);
        }
        if !sequential {
            axpy(self.factors.m1_mut(), self.cfg.mu1, &self.delta1);
        }
        axpy(self.factors.m2_mut(), self.cfg.mu2, &self.delta2);
        self.factors.synthesize_into(&mut self.weights);
    }

    /// Factors and counter as CSV: a `counter,<r>` line, then the factor
    /// table.
    pub fn snapshot_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "counter,{}", self.counter);
        out.push_str(&self.factors.to_csv());
        out
    }

    /// Restores factors and counter from [`Self::snapshot_csv`] output.
    /// Signal histories are not part of the snapshot.
    pub fn restore_snapshot(&mut self, text: &str) -> Result<()> {
        let (first, rest) = text
            .split_once('\n')
            .ok_or_else(|| Error::Parse("empty snapshot".into()))?;
        let counter = first
            .strip_prefix("counter,")
            .ok_or_else(|| Error::Parse("snapshot must start with `counter,`".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("counter: {e}")))?;
        self.set_factors(KronFactors::from_csv(rest)?)?;
        self.counter = counter;
        Ok(())
    }
}

impl AdaptiveFilter for NkpEngine {
    fn step(&mut self, x: f64, d: f64) -> Result<StepOutput> {
        NkpEngine::step(self, x, d)
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Fills the per-subband compressed regressors for one factor.
fn compress_all(engine: &mut NkpEngine, which: Factor) {
    let cfg = &engine.cfg;
    let d = cfg.len();
    let (out, tmp, block) = match which {
        Factor::M2 => (&mut engine.x2, &mut engine.tmp2, cfg.rank * cfg.d1),
        Factor::M1 => (&mut engine.x1, &mut engine.tmp1, cfg.rank * cfg.d2),
    };
    let f = &engine.factors;
    let compress = |x: &[f64], o: &mut [f64]| match which {
        Factor::M2 => f.compress_by_m2_into(x, o),
        Factor::M1 => f.compress_by_m1_into(x, o),
    };
    match cfg.structure {
        Structure::TypeII => {
            for j in 0..cfg.bands {
                compress(engine.front.subband(j), &mut out[j * block..(j + 1) * block]);
            }
        }
        Structure::TypeI => {
            out.iter_mut().for_each(|v| *v = 0.0);
            for lag in 0..cfg.bank_len {
                compress(engine.front.lagged(lag, d), tmp);
                for j in 0..cfg.bands {
                    let c = engine.bank.filter(j)[lag];
                    for (o, t) in out[j * block..(j + 1) * block].iter_mut().zip(tmp.iter()) {
                        *o += c * t;
                    }
                }
            }
        }
    }
}

/// `delta += χ e x / (‖x‖² + δ)`.
#[inline]
fn accumulate(delta: &mut [f64], x: &[f64], e: f64, cfg: &EngineConfig) {
    let n = norm_sq(x) + cfg.delta;
    let g = cfg.scaling.scale(e, n) * e / n;
    axpy(delta, g, x);
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}
