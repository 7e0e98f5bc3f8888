//! Cosine-modulated analysis filter bank.
//!
//! The bank is the `L × N` matrix `F` whose column `j` is the FIR analysis
//! filter `f_j`. Filters are derived from a Hamming-windowed sinc prototype
//! `p` by pseudo-QMF modulation:
//!
//! ```text
//! f_j[l] = 2 p[l] cos((2j+1)π/(2N) · (l - (L-1)/2) + (-1)^j π/4)
//! ```
//!
//! The prototype cutoff is placed so that `|P(e^{jπ/(2N)})|² = 1/2`, which
//! makes adjacent bands cross at half power and keeps `Σ_j |F_j|²` flat.
//! No decimation happens here: the decomposer produces `N` outputs per input
//! sample and the adaptive engines subsample by updating every `k` samples.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::delay::DelayLine;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisBank {
    len: usize,
    prototype: Vec<f64>,
    filters: Vec<Vec<f64>>,
}

impl AnalysisBank {
    /// Designs an `N`-band cosine-modulated bank with length-`L` filters.
    ///
    /// With `N = 1` the bank is a single full-band filter (a delay of
    /// `(L-1)/2` samples for odd `L`) scaled to unit DC gain.
    pub fn cosine_modulated(bands: usize, len: usize) -> Result<Self> {
        if bands < 1 {
            return Err(Error::invalid("N", "subband count must be >= 1"));
        }
        if len < bands {
            return Err(Error::invalid("L", format!("filter length must be >= N = {bands}")));
        }
        if bands == 1 {
            let prototype = windowed_sinc(len, PI);
            return Ok(AnalysisBank {
                len,
                filters: vec![prototype.clone()],
                prototype,
            });
        }

        let cutoff = half_power_cutoff(bands, len);
        let prototype = windowed_sinc(len, cutoff);
        let center = (len as f64 - 1.0) / 2.0;
        let filters = (0..bands)
            .map(|j| {
                let freq = (2 * j + 1) as f64 * PI / (2 * bands) as f64;
                let phase = if j % 2 == 0 { PI / 4.0 } else { -PI / 4.0 };
                prototype
                    .iter()
                    .enumerate()
                    .map(|(l, p)| 2.0 * p * (freq * (l as f64 - center) + phase).cos())
                    .collect()
            })
            .collect();
        Ok(AnalysisBank {
            len,
            prototype,
            filters,
        })
    }

    /// The trivial one-band, one-tap bank `F = [[1]]`.
    pub fn identity() -> Self {
        AnalysisBank {
            len: 1,
            prototype: vec![1.0],
            filters: vec![vec![1.0]],
        }
    }

    /// Bank from explicit columns (all of equal, nonzero length). The
    /// prototype is unknown for such banks and left empty.
    pub fn from_filters(filters: Vec<Vec<f64>>) -> Result<Self> {
        let len = filters.first().map_or(0, Vec::len);
        if filters.is_empty() || len == 0 {
            return Err(Error::invalid("F", "bank needs at least one nonempty filter"));
        }
        for f in &filters {
            Error::check_len("analysis filter length", len, f.len())?;
        }
        Ok(AnalysisBank {
            len,
            prototype: Vec::new(),
            filters,
        })
    }

    pub fn bands(&self) -> usize {
        self.filters.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn prototype(&self) -> &[f64] {
        &self.prototype
    }

    /// Column `j` of `F`.
    pub fn filter(&self, j: usize) -> &[f64] {
        &self.filters[j]
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    /// `F_j(e^{jω})` as `(re, im)`.
    pub fn frequency_response(&self, j: usize, omega: f64) -> (f64, f64) {
        dtft(&self.filters[j], omega)
    }

    /// `Σ_j |F_j(e^{jω})|²`.
    pub fn power_sum(&self, omega: f64) -> f64 {
        (0..self.bands())
            .map(|j| {
                let (re, im) = self.frequency_response(j, omega);
                re * re + im * im
            })
            .sum()
    }

    /// `L` rows of `N` comma-separated values, shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for l in 0..self.len {
            let row: Vec<String> = self.filters.iter().map(|f| f[l].to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Parse(format!("bank value `{v}`: {e}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let bands = rows.first().map_or(0, Vec::len);
        for row in &rows {
            Error::check_len("bank CSV columns", bands, row.len())?;
        }
        let filters = (0..bands).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::from_filters(filters)
    }
}

fn dtft(h: &[f64], omega: f64) -> (f64, f64) {
    h.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, v)| {
        let a = omega * n as f64;
        (re + v * a.cos(), im - v * a.sin())
    })
}

/// Hamming-windowed ideal lowpass centred at `(L-1)/2`, unit DC gain.
fn windowed_sinc(len: usize, cutoff: f64) -> Vec<f64> {
    let center = (len as f64 - 1.0) / 2.0;
    let mut h: Vec<f64> = (0..len)
        .map(|l| {
            let t = l as f64 - center;
            let ideal = if t == 0.0 {
                cutoff / PI
            } else {
                (cutoff * t).sin() / (PI * t)
            };
            let window = if len == 1 {
                1.0
            } else {
                0.54 - 0.46 * (2.0 * PI * l as f64 / (len as f64 - 1.0)).cos()
            };
            ideal * window
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Cutoff at which the prototype's power gain at `π/(2N)` is one half.
fn half_power_cutoff(bands: usize, len: usize) -> f64 {
    let target = PI / (2 * bands) as f64;
    let excess = |cutoff: f64| {
        let (re, im) = dtft(&windowed_sinc(len, cutoff), target);
        re * re + im * im - 0.5
    };
    let (mut lo, mut hi) = (0.5 * target, (4.0 * target).min(PI));
    let (f_lo, f_hi) = (excess(lo), excess(hi));
    if f_lo.signum() == f_hi.signum() {
        // Too short to reach half power anywhere in the bracket.
        return if f_lo.abs() < f_hi.abs() { lo } else { hi };
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Streaming decomposition of one scalar signal into `N` subband samples.
#[derive(Debug, Clone)]
pub struct SubbandDecomposer {
    bank: Arc<AnalysisBank>,
    line: DelayLine,
}

impl SubbandDecomposer {
    pub fn new(bank: Arc<AnalysisBank>) -> Self {
        let line = DelayLine::new(bank.len());
        SubbandDecomposer { bank, line }
    }

    pub fn bank(&self) -> &AnalysisBank {
        &self.bank
    }

    /// Pushes `sample` and writes `y_j = Σ_l f_j[l] s_{r-l}` into `out`.
    pub fn decompose_step_into(&mut self, sample: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.bank.bands());
        self.line.push(sample);
        for (y, f) in out.iter_mut().zip(self.bank.filters()) {
            *y = self.line.dot(f);
        }
    }

    pub fn decompose_step(&mut self, sample: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.bank.bands()];
        self.decompose_step_into(sample, &mut out);
        out
    }

    pub fn reset(&mut self) {
        self.line.reset();
    }
}

/// Normalized lag-one autocorrelation of every subband of `x`, with the
/// subband signals read once every `stride` samples (the rate at which an
/// engine with update interval `stride` sees them).
pub fn subband_lag1_correlation(bank: &Arc<AnalysisBank>, x: &[f64], stride: usize) -> Vec<f64> {
    assert!(stride > 0, "stride must be positive");
    let n = bank.bands();
    let mut dec = SubbandDecomposer::new(bank.clone());
    let mut sub = vec![Vec::with_capacity(x.len() / stride + 1); n];
    let mut out = vec![0.0; n];
    for (r, &v) in x.iter().enumerate() {
        dec.decompose_step_into(v, &mut out);
        if (r + 1) % stride == 0 {
            for (s, &y) in sub.iter_mut().zip(&out) {
                s.push(y);
            }
        }
    }
    sub.iter()
        .map(|s| {
            let r0: f64 = s.iter().map(|v| v * v).sum();
            let r1: f64 = s.windows(2).map(|w| w[0] * w[1]).sum();
            if r0 == 0.0 {
                0.0
            } else {
                r1 / r0
            }
        })
        .collect()
}
