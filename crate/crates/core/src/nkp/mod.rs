//! Kronecker factor algebra.
//!
//! A length-`D1·D2` filter is represented as `m = Σ_p m2_p ⊗ m1_p` with
//! `m1_p ∈ R^{D1}` and `m2_p ∈ R^{D2}`. Vectors are vectorized column-major,
//! so `m2 ⊗ m1 = vec(m1 m2ᵀ)`: entry `c·D1 + i` of the filter is
//! `Σ_p m2_p[c] m1_p[i]`. Reshaping a regressor `x` the same way gives the
//! `D1 × D2` matrix `X` with `X[i, c] = x[c·D1 + i]`, and the compression
//! operators are
//!
//! ```text
//! (m2_p ⊗ I_D1)ᵀ x = X m2_p      (length D1, feeds m1)
//! (I_D2 ⊗ m1_p)ᵀ x = Xᵀ m1_p     (length D2, feeds m2)
//! ```
//!
//! Neither Kronecker-structured matrix is ever formed.

mod svd;

use std::fmt::Write as _;

pub use svd::{svd, Svd};

use crate::error::{Error, Result};

/// Stacked sub-filters: `m1` holds `P` blocks of length `D1`, `m2` holds `P`
/// blocks of length `D2`.
#[derive(Debug, Clone, PartialEq)]
pub struct KronFactors {
    rank: usize,
    d1: usize,
    d2: usize,
    m1: Vec<f64>,
    m2: Vec<f64>,
}

impl KronFactors {
    pub fn new(rank: usize, d1: usize, d2: usize, m1: Vec<f64>, m2: Vec<f64>) -> Result<Self> {
        check_dims(rank, d1, d2)?;
        Error::check_len("m1", rank * d1, m1.len())?;
        Error::check_len("m2", rank * d2, m2.len())?;
        Ok(KronFactors {
            rank,
            d1,
            d2,
            m1,
            m2,
        })
    }

    pub fn zeros(rank: usize, d1: usize, d2: usize) -> Result<Self> {
        Self::new(rank, d1, d2, vec![0.0; rank * d1], vec![0.0; rank * d2])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn d2(&self) -> usize {
        self.d2
    }

    /// Length of the synthesized filter, `D1·D2`.
    pub fn len(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn m1(&self) -> &[f64] {
        &self.m1
    }

    pub fn m2(&self) -> &[f64] {
        &self.m2
    }

    pub fn m1_mut(&mut self) -> &mut [f64] {
        &mut self.m1
    }

    pub fn m2_mut(&mut self) -> &mut [f64] {
        &mut self.m2
    }

    pub fn m1_block(&self, p: usize) -> &[f64] {
        &self.m1[p * self.d1..(p + 1) * self.d1]
    }

    pub fn m2_block(&self, p: usize) -> &[f64] {
        &self.m2[p * self.d2..(p + 1) * self.d2]
    }

    /// `Σ_p m2_p ⊗ m1_p`.
    pub fn synthesize(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.synthesize_into(&mut out);
        out
    }

    pub fn synthesize_into(&self, out: &mut [f64]) {
        assert_eq!(out.len(), self.len());
        out.iter_mut().for_each(|v| *v = 0.0);
        for p in 0..self.rank {
            let m1 = self.m1_block(p);
            for (c, &a) in self.m2_block(p).iter().enumerate() {
                for (o, &b) in out[c * self.d1..(c + 1) * self.d1].iter_mut().zip(m1) {
                    *o += a * b;
                }
            }
        }
    }

    /// Stacked `X m2_p` blocks (length `P·D1`): the regressor seen by `m1`.
    pub fn compress_by_m2(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("regressor", self.len(), x.len())?;
        let mut out = vec![0.0; self.rank * self.d1];
        self.compress_by_m2_into(x, &mut out);
        Ok(out)
    }

    /// Stacked `Xᵀ m1_p` blocks (length `P·D2`): the regressor seen by `m2`.
    pub fn compress_by_m1(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("regressor", self.len(), x.len())?;
        let mut out = vec![0.0; self.rank * self.d2];
        self.compress_by_m1_into(x, &mut out);
        Ok(out)
    }

    pub fn compress_by_m2_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.len());
        debug_assert_eq!(out.len(), self.rank * self.d1);
        let d1 = self.d1;
        for p in 0..self.rank {
            let block = &mut out[p * d1..(p + 1) * d1];
            block.iter_mut().for_each(|v| *v = 0.0);
            for (c, &w) in self.m2_block(p).iter().enumerate() {
                for (o, &xv) in block.iter_mut().zip(&x[c * d1..(c + 1) * d1]) {
                    *o += w * xv;
                }
            }
        }
    }

    pub fn compress_by_m1_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.len());
        debug_assert_eq!(out.len(), self.rank * self.d2);
        let d1 = self.d1;
        for p in 0..self.rank {
            let m1 = self.m1_block(p);
            for (c, o) in out[p * self.d2..(p + 1) * self.d2].iter_mut().enumerate() {
                *o = x[c * d1..(c + 1) * d1].iter().zip(m1).map(|(a, b)| a * b).sum();
            }
        }
    }

    /// CSV with a three-line header (`P`, `D1`, `D2`) followed by one row per
    /// `m1` block and one row per `m2` block.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "P,{}", self.rank);
        let _ = writeln!(out, "D1,{}", self.d1);
        let _ = writeln!(out, "D2,{}", self.d2);
        for p in 0..self.rank {
            write_row(&mut out, "m1", self.m1_block(p));
        }
        for p in 0..self.rank {
            write_row(&mut out, "m2", self.m2_block(p));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<usize> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing `{key}` header")))?;
            let (k, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("malformed header line `{line}`")))?;
            if k.trim() != key {
                return Err(Error::Parse(format!("expected `{key}`, found `{k}`")));
            }
            v.trim()
                .parse()
                .map_err(|e| Error::Parse(format!("`{key}` value: {e}")))
        };
        let rank = header("P")?;
        let d1 = header("D1")?;
        let d2 = header("D2")?;
        let (mut m1, mut m2) = (Vec::new(), Vec::new());
        for line in lines {
            let mut fields = line.split(',');
            let tag = fields.next().unwrap_or("").trim();
            let values = fields
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("factor value `{v}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            match tag {
                "m1" => m1.extend(values),
                "m2" => m2.extend(values),
                other => return Err(Error::Parse(format!("unknown factor row `{other}`"))),
            }
        }
        Self::new(rank, d1, d2, m1, m2)
    }
}

fn write_row(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        let _ = write!(out, ",{v}");
    }
    out.push('\n');
}

fn check_dims(rank: usize, d1: usize, d2: usize) -> Result<()> {
    if rank == 0 {
        return Err(Error::invalid("P", "rank must be >= 1"));
    }
    if d1 == 0 || d2 == 0 {
        return Err(Error::invalid("D1/D2", "factor lengths must be >= 1"));
    }
    Ok(())
}

/// Initial value schemes for the sub-filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// Every `m1_p` and `m2_p` starts as `[λ, 0, …, 0]`.
    #[default]
    Original,
    /// `m1_p = [λ, 0, …, 0]`, `m2_p = λ e_p`: the `D2 × P` matrix of `m2`
    /// blocks is `λ` times the leading identity columns.
    Yim,
}

pub fn init_factors(
    scheme: InitScheme,
    lambda: f64,
    rank: usize,
    d1: usize,
    d2: usize,
) -> Result<KronFactors> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::invalid("lambda", "must lie in (0, 1]"));
    }
    let mut f = KronFactors::zeros(rank, d1, d2)?;
    for p in 0..rank {
        f.m1[p * d1] = lambda;
    }
    match scheme {
        InitScheme::Original => {
            for p in 0..rank {
                f.m2[p * d2] = lambda;
            }
        }
        InitScheme::Yim => {
            if rank > d2 {
                return Err(Error::invalid("P", format!("YIM init needs P <= D2 = {d2}")));
            }
            for p in 0..rank {
                f.m2[p * d2 + p] = lambda;
            }
        }
    }
    Ok(f)
}

/// Best rank-`P` Kronecker approximation of a target filter.
#[derive(Debug, Clone, PartialEq)]
pub struct NkpApproximation {
    pub factors: KronFactors,
    /// `‖M0 - Σ_p ρ_p h1_p h2_pᵀ‖_F / ‖M0‖_F`, zero for a zero target.
    pub misalignment: f64,
    /// All `min(D1, D2)` singular values of the reshaped target, descending.
    pub singular_values: Vec<f64>,
}

/// Reshapes `m0` to `D1 × D2`, takes its SVD and keeps the leading `P`
/// terms as `m1_p = √ρ_p h1_p`, `m2_p = √ρ_p h2_p`. Each `h1_p` is signed so
/// its largest-magnitude entry is nonnegative.
pub fn nkp_approximate(m0: &[f64], d1: usize, d2: usize, rank: usize) -> Result<NkpApproximation> {
    check_dims(rank, d1, d2)?;
    Error::check_len("target filter", d1 * d2, m0.len())?;
    if rank > d1.min(d2) {
        return Err(Error::invalid(
            "P",
            format!("rank must be <= min(D1, D2) = {}", d1.min(d2)),
        ));
    }
    let dec = svd(m0, d1, d2);
    let mut m1 = Vec::with_capacity(rank * d1);
    let mut m2 = Vec::with_capacity(rank * d2);
    for p in 0..rank {
        let root = dec.s[p].sqrt();
        let h1 = dec.left(p);
        let h2 = dec.right(p);
        let pivot = h1
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        m1.extend(h1.iter().map(|v| sign * root * v));
        m2.extend(h2.iter().map(|v| sign * root * v));
    }
    let factors = KronFactors::new(rank, d1, d2, m1, m2)?;
    let norm = m0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let misalignment = if norm == 0.0 {
        0.0
    } else {
        let approx = factors.synthesize();
        m0.iter()
            .zip(&approx)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / norm
    };
    Ok(NkpApproximation {
        factors,
        misalignment,
        singular_values: dec.s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthesize_examples() {
        let f = KronFactors::new(1, 2, 2, vec![1.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(f.synthesize(), vec![1.0, 0.0, 0.0, 0.0]);
        let f = KronFactors::new(1, 2, 2, vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(f.synthesize(), vec![3.0, 6.0, 4.0, 8.0]);
        let g = KronFactors::new(
            2,
            2,
            2,
            vec![1.0, 2.0, 0.0, 0.0],
            vec![3.0, 4.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(g.synthesize(), f.synthesize());
    }

    #[test]
    fn compress_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let f = KronFactors::new(1, 2, 2, vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(f.compress_by_m2(&x).unwrap(), vec![4.0, 6.0]);
        assert_eq!(f.compress_by_m1(&x).unwrap(), vec![3.0, 7.0]);
        assert!(f.compress_by_m1(&x[..3]).is_err());
        assert!(f.compress_by_m2(&[0.0; 5]).is_err());
    }

    #[test]
    fn compress_with_unit_vectors_selects() {
        let (d1, d2) = (3, 4);
        let x: Vec<f64> = (0..12).map(|v| v as f64 + 0.5).collect();
        let mut m2 = vec![0.0; d2];
        m2[0] = 1.0;
        let mut m1 = vec![0.0; d1];
        m1[0] = 1.0;
        let f = KronFactors::new(1, d1, d2, m1, m2).unwrap();
        assert_eq!(f.compress_by_m2(&x).unwrap(), x[..d1].to_vec());
        assert_eq!(f.compress_by_m1(&x).unwrap(), vec![x[0], x[3], x[6], x[9]]);
    }

    #[test]
    fn init_original() {
        let f = init_factors(InitScheme::Original, 0.01, 2, 3, 2).unwrap();
        assert_eq!(f.m1(), &[0.01, 0.0, 0.0, 0.01, 0.0, 0.0]);
        assert_eq!(f.m2(), &[0.01, 0.0, 0.01, 0.0]);
        let m = f.synthesize();
        assert_eq!(m.iter().filter(|v| **v != 0.0).count(), 1);
        assert!((m[0] - 2.0 * 0.01 * 0.01).abs() < 1e-18);
    }

    #[test]
    fn init_yim() {
        let f = init_factors(InitScheme::Yim, 0.01, 2, 4, 3).unwrap();
        assert_eq!(f.m2(), &[0.01, 0.0, 0.0, 0.0, 0.01, 0.0]);
        assert_eq!(f.m1(), &[0.01, 0.0, 0.0, 0.0, 0.01, 0.0, 0.0, 0.0]);
        assert!(init_factors(InitScheme::Yim, 0.01, 4, 4, 3).is_err());
        assert!(init_factors(InitScheme::Original, 0.0, 1, 4, 3).is_err());
        assert!(init_factors(InitScheme::Original, 1.5, 1, 4, 3).is_err());
    }

    #[test]
    fn approximate_rank_one_exactly() {
        let f = KronFactors::new(1, 4, 3, vec![0.3, -1.0, 0.2, 0.5], vec![1.0, -0.4, 0.25]).unwrap();
        let m0 = f.synthesize();
        let a = nkp_approximate(&m0, 4, 3, 1).unwrap();
        assert!(a.misalignment < 1e-10);
        for (x, y) in a.factors.synthesize().iter().zip(&m0) {
            assert!((x - y).abs() < 1e-10);
        }
        // Sign convention: largest-magnitude entry of h1 is nonnegative.
        let m1 = a.factors.m1_block(0);
        let pivot = m1.iter().copied().fold(0.0f64, |b, v| if v.abs() > b.abs() { v } else { b });
        assert!(pivot >= 0.0);
    }

    #[test]
    fn approximate_full_rank_reconstructs() {
        let m0: Vec<f64> = (0..15).map(|i| ((i * 5 + 2) % 7) as f64 - 3.0).collect();
        let a = nkp_approximate(&m0, 5, 3, 3).unwrap();
        assert!(a.misalignment < 1e-10);
        assert_eq!(a.singular_values.len(), 3);
    }

    #[test]
    fn approximate_errors_and_zero_target() {
        assert!(nkp_approximate(&[0.0; 6], 3, 2, 3).is_err());
        assert!(nkp_approximate(&[0.0; 5], 3, 2, 1).is_err());
        let a = nkp_approximate(&[0.0; 6], 3, 2, 2).unwrap();
        assert_eq!(a.misalignment, 0.0);
        assert!(a.factors.m1().iter().chain(a.factors.m2()).all(|v| *v == 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let f = init_factors(InitScheme::Yim, 0.25, 2, 3, 4).unwrap();
        let back = KronFactors::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back, f);
        assert!(KronFactors::from_csv("P,1\nD1,2\n").is_err());
        assert!(KronFactors::from_csv("P,1\nD1,2\nD2,1\nm1,1,2\nm2,1,3\n").is_err());
    }
}
