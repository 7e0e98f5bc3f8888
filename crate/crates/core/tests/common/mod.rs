//! Oracles shared by the integration tests. Everything here is written
//! directly against dense matrices so it does not reuse library code paths.
#![allow(dead_code)]

use kronfilt::nkp::KronFactors;
use kronfilt::rng::Seed;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Seed::new(seed).rng();
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_factors(rank: usize, d1: usize, d2: usize, seed: u64) -> KronFactors {
    KronFactors::new(rank, d1, d2, gaussian(rank * d1, seed), gaussian(rank * d2, seed + 1)).unwrap()
}

fn col(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v)
}

/// `Σ_p m2_p ⊗ m1_p` through explicit Kronecker products.
pub fn kron_synthesize(f: &KronFactors) -> Vec<f64> {
    let mut acc = DMatrix::zeros(f.len(), 1);
    for p in 0..f.rank() {
        acc += col(f.m2_block(p)).kronecker(&col(f.m1_block(p)));
    }
    acc.as_slice().to_vec()
}

/// Stacked `(m2_pᵀ ⊗ I_{D1}) x`.
pub fn kron_compress_by_m2(f: &KronFactors, x: &[f64]) -> Vec<f64> {
    let eye = DMatrix::<f64>::identity(f.d1(), f.d1());
    let xv = DVector::from_column_slice(x);
    (0..f.rank())
        .flat_map(|p| {
            let op = col(f.m2_block(p)).transpose().kronecker(&eye);
            (op * &xv).as_slice().to_vec()
        })
        .collect()
}

/// Stacked `(I_{D2} ⊗ m1_pᵀ) x`.
pub fn kron_compress_by_m1(f: &KronFactors, x: &[f64]) -> Vec<f64> {
    let eye = DMatrix::<f64>::identity(f.d2(), f.d2());
    let xv = DVector::from_column_slice(x);
    (0..f.rank())
        .flat_map(|p| {
            let op = eye.kronecker(&col(f.m1_block(p)).transpose());
            (op * &xv).as_slice().to_vec()
        })
        .collect()
}

/// Best rank-`P` relative residual of the `D1 × D2` reshape, from the
/// eigenvalues of the smaller Gram matrix.
pub fn eigen_misalignment(m0: &[f64], d1: usize, d2: usize, rank: usize) -> f64 {
    let m = DMatrix::from_column_slice(d1, d2, m0);
    let gram = if d1 < d2 { &m * m.transpose() } else { m.transpose() * &m };
    let mut ev: Vec<f64> = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0))
        .collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = ev.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    (ev.iter().skip(rank).sum::<f64>() / total).sqrt()
}
