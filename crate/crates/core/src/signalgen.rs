//! Excitation, noise and distortion models used by the experiments.
//!
//! All generators are pure functions of their parameters and a seed. The
//! streaming types ([`ArProcess`], [`Fir`]) carry their own state and start
//! from zero initial conditions.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal, StandardNormal};

use crate::delay::DelayLine;
use crate::error::{Error, Result};
use crate::rng::Seed;

/// Autoregressive model `x_r = Σ a_i x_{r-i} + w_r` driven by white Gaussian
/// noise of standard deviation `drive_stddev`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    coefficients: Vec<f64>,
    drive_stddev: f64,
}

impl ArModel {
    /// Validates that every pole of `1 / (1 - Σ a_i z^-i)` lies strictly
    /// inside the unit circle.
    pub fn new(coefficients: Vec<f64>, drive_stddev: f64) -> Result<Self> {
        if !(drive_stddev >= 0.0 && drive_stddev.is_finite()) {
            return Err(Error::invalid("drive_stddev", "must be finite and >= 0"));
        }
        if coefficients.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("coefficients", "must be finite"));
        }
        if !is_minimum_phase(&coefficients) {
            return Err(Error::UnstableModel);
        }
        Ok(ArModel {
            coefficients,
            drive_stddev,
        })
    }

    /// White Gaussian noise (no AR coefficients).
    pub fn white(stddev: f64) -> Result<Self> {
        Self::new(Vec::new(), stddev)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn drive_stddev(&self) -> f64 {
        self.drive_stddev
    }

    /// Runs the recursion on an explicit drive sequence.
    pub fn filter(&self, drive: &[f64]) -> Vec<f64> {
        let mut process = ArProcess::new(self.clone());
        drive.iter().map(|&w| process.next_with_drive(w)).collect()
    }

    /// Stationary variance of the process, from the Yule-Walker equations.
    pub fn stationary_variance(&self) -> f64 {
        // Step-down recursion gives the prediction-error power ratio.
        let ks = reflection_coefficients(&self.coefficients).expect("validated at construction");
        let gain: f64 = ks.iter().map(|k| 1.0 - k * k).product();
        self.drive_stddev * self.drive_stddev / gain
    }
}

/// Reflection coefficients of `A(z) = 1 - Σ a_i z^-i` by the step-down
/// (Schur-Cohn) recursion; `None` if any has magnitude ≥ 1.
fn reflection_coefficients(a: &[f64]) -> Option<Vec<f64>> {
    let mut c: Vec<f64> = a.iter().map(|v| -v).collect();
    let mut ks = Vec::with_capacity(c.len());
    while let Some(&k) = c.last() {
        if k.abs() >= 1.0 {
            return None;
        }
        ks.push(k);
        let m = c.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m - 1).map(|i| (c[i] - k * c[m - 2 - i]) / denom).collect();
        c = next;
    }
    Some(ks)
}

fn is_minimum_phase(a: &[f64]) -> bool {
    reflection_coefficients(a).is_some()
}

/// Streaming AR generator.
#[derive(Debug, Clone)]
pub struct ArProcess {
    model: ArModel,
    past: Vec<f64>,
}

impl ArProcess {
    pub fn new(model: ArModel) -> Self {
        let q = model.coefficients.len();
        ArProcess {
            model,
            past: vec![0.0; q],
        }
    }

    pub fn next_with_drive(&mut self, w: f64) -> f64 {
        let x = self
            .model
            .coefficients
            .iter()
            .zip(&self.past)
            .map(|(a, p)| a * p)
            .sum::<f64>()
            + w;
        if !self.past.is_empty() {
            self.past.rotate_right(1);
            self.past[0] = x;
        }
        x
    }

    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.next_with_drive(self.model.drive_stddev * z)
    }
}

/// `n` samples of the AR process. Same seed, same output.
pub fn gen_ar(model: &ArModel, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Seed::new(seed).rng();
    let mut process = ArProcess::new(model.clone());
    (0..n).map(|_| process.next(&mut rng)).collect()
}

/// Symmetric α-stable law with characteristic function `exp(-γ|t|^ϖ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaStableParams {
    varpi: f64,
    gamma: f64,
}

impl AlphaStableParams {
    pub fn new(varpi: f64, gamma: f64) -> Result<Self> {
        if !(varpi > 0.0 && varpi <= 2.0) {
            return Err(Error::invalid("varpi", "characteristic index must lie in (0, 2]"));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("gamma", "dispersion must be > 0"));
        }
        Ok(AlphaStableParams { varpi, gamma })
    }

    pub fn varpi(&self) -> f64 {
        self.varpi
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Scale parameter `σ = γ^{1/ϖ}`.
    pub fn scale(&self) -> f64 {
        self.gamma.powf(1.0 / self.varpi)
    }
}

/// Chambers-Mallows-Stuck sampler for the symmetric case.
impl Distribution<f64> for AlphaStableParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let alpha = self.varpi;
        // V uniform on (-π/2, π/2), W standard exponential.
        let v = loop {
            let u: f64 = rng.random();
            let v = PI * (u - 0.5);
            if v.abs() < FRAC_PI_2 {
                break v;
            }
        };
        let w: f64 = loop {
            let w: f64 = Exp1.sample(rng);
            if w > 0.0 {
                break w;
            }
        };
        let x = if (alpha - 1.0).abs() < 1e-12 {
            v.tan()
        } else {
            let av = alpha * v;
            av.sin() / v.cos().powf(1.0 / alpha) * ((v - av).cos() / w).powf((1.0 - alpha) / alpha)
        };
        self.scale() * x
    }
}

/// `n` i.i.d. symmetric α-stable samples.
pub fn gen_alpha_stable(params: &AlphaStableParams, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Seed::new(seed).rng();
    (0..n).map(|_| params.sample(&mut rng)).collect()
}

/// Gaussian samples with the given variance.
pub fn gen_gaussian(variance: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let normal = Normal::new(0.0, variance.sqrt())
        .map_err(|_| Error::invalid("variance", "must be finite and >= 0"))?;
    let mut rng = Seed::new(seed).rng();
    Ok((0..n).map(|_| normal.sample(&mut rng)).collect())
}

/// Linear convolution with zero initial state; output has the input's length.
pub fn fir_filter(ir: &[f64], input: &[f64]) -> Result<Vec<f64>> {
    let mut fir = Fir::new(ir.to_vec())?;
    Ok(input.iter().map(|&x| fir.process(x)).collect())
}

/// Streaming FIR filter.
#[derive(Debug, Clone)]
pub struct Fir {
    taps: Vec<f64>,
    line: DelayLine,
}

impl Fir {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("ir", "impulse response must be nonempty"));
        }
        let line = DelayLine::new(taps.len());
        Ok(Fir { taps, line })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn process(&mut self, x: f64) -> f64 {
        self.line.push(x);
        self.line.dot(&self.taps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionKind {
    /// Pass-through; used to build linear reference scenarios.
    Identity,
    /// Asymmetric sigmoid loudspeaker model.
    LoudspeakerSigmoid,
    /// Symmetric three-branch soft clipper.
    SoftClip,
}

/// Memoryless nonlinearity applied to the excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionModel {
    kind: DistortionKind,
    phi: f64,
    tau: f64,
}

impl DistortionModel {
    pub fn new(kind: DistortionKind, phi: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= 0.5) {
            return Err(Error::invalid("tau", "must lie in (0, 0.5]"));
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi", "must be finite"));
        }
        Ok(DistortionModel { kind, phi, tau })
    }

    /// `φ = 2`, `τ = 0.3`.
    pub fn with_defaults(kind: DistortionKind) -> Self {
        DistortionModel {
            kind,
            phi: 2.0,
            tau: 0.3,
        }
    }

    pub fn kind(&self) -> DistortionKind {
        self.kind
    }

    pub fn distort(&self, x: f64) -> f64 {
        match self.kind {
            DistortionKind::Identity => x,
            DistortionKind::LoudspeakerSigmoid => {
                let a1 = 1.5 * x - 0.3 * x * x;
                let theta = if a1 > 0.0 { 4.0 } else { 0.5 };
                self.phi * (1.0 / (1.0 + (-theta * a1).exp()) - 0.5)
            }
            DistortionKind::SoftClip => {
                let tau = self.tau;
                let mag = x.abs();
                let out = if mag <= tau {
                    2.0 * mag / (3.0 * tau)
                } else if mag <= 2.0 * tau {
                    let t = 2.0 - mag / tau;
                    (3.0 - t * t) / 3.0
                } else {
                    1.0
                };
                out.copysign(x)
            }
        }
    }
}

/// Synthetic sparse impulse response: `active_taps` Gaussian taps at random
/// positions in the leading half, shaped by `exp(-decay_rate * position)`
/// and normalized to unit Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseIrSpec {
    pub length: usize,
    pub active_taps: usize,
    pub decay_rate: f64,
    pub seed: u64,
}

pub fn gen_sparse_ir(spec: &SparseIrSpec) -> Result<Vec<f64>> {
    if spec.length == 0 {
        return Err(Error::invalid("length", "must be positive"));
    }
    if spec.active_taps == 0 || spec.active_taps > spec.length {
        return Err(Error::invalid(
            "active_taps",
            format!("must lie in 1..={}", spec.length),
        ));
    }
    if !(spec.decay_rate >= 0.0 && spec.decay_rate.is_finite()) {
        return Err(Error::invalid("decay_rate", "must be finite and >= 0"));
    }
    let region = spec.length.div_ceil(2).max(spec.active_taps);
    let mut rng = Seed::new(spec.seed).rng();
    let mut positions = rand::seq::index::sample(&mut rng, region, spec.active_taps).into_vec();
    positions.sort_unstable();

    let mut ir = vec![0.0; spec.length];
    for &pos in &positions {
        let g: f64 = loop {
            let g: f64 = StandardNormal.sample(&mut rng);
            if g != 0.0 {
                break g;
            }
        };
        let mut amp = g * (-spec.decay_rate * pos as f64).exp();
        if amp == 0.0 {
            amp = f64::MIN_POSITIVE.copysign(g);
        }
        ir[pos] = amp;
    }
    let norm = ir.iter().map(|v| v * v).sum::<f64>().sqrt();
    ir.iter_mut().for_each(|v| *v /= norm);
    Ok(ir)
}
