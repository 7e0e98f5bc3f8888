mod common;

use common::{eigen_misalignment, gaussian, kron_compress_by_m1, kron_compress_by_m2, kron_synthesize, random_factors};
use kronfilt::nkp::{init_factors, nkp_approximate, InitScheme, KronFactors};
use proptest::prelude::*;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #[test]
    fn algebra_matches_materialized_kronecker(rank in 1usize..4, d1 in 1usize..9, d2 in 1usize..9, seed in any::<u32>()) {
        let f = random_factors(rank, d1, d2, seed as u64);
        let x = gaussian(d1 * d2, seed as u64 + 7);
        prop_assert!(close(&f.synthesize(), &kron_synthesize(&f), 1e-12));
        prop_assert!(close(&f.compress_by_m2(&x).unwrap(), &kron_compress_by_m2(&f, &x), 1e-12));
        prop_assert!(close(&f.compress_by_m1(&x).unwrap(), &kron_compress_by_m1(&f, &x), 1e-12));
    }

    #[test]
    fn three_error_forms_agree(rank in 1usize..4, d1 in 1usize..9, d2 in 1usize..9, seed in any::<u32>()) {
        let f = random_factors(rank, d1, d2, seed as u64);
        let x = gaussian(d1 * d2, seed as u64 + 3);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
        let full = dot(&f.synthesize(), &x);
        let via2 = dot(f.m1(), &f.compress_by_m2(&x).unwrap());
        let via1 = dot(f.m2(), &f.compress_by_m1(&x).unwrap());
        prop_assert!((full - via2).abs() < 1e-10 && (full - via1).abs() < 1e-10);
    }

    #[test]
    fn misalignment_matches_eigen_oracle(d1 in 1usize..10, d2 in 1usize..10, seed in any::<u32>()) {
        let m0 = gaussian(d1 * d2, seed as u64);
        let mut last = f64::INFINITY;
        for rank in 1..=d1.min(d2) {
            let a = nkp_approximate(&m0, d1, d2, rank).unwrap();
            let oracle = eigen_misalignment(&m0, d1, d2, rank);
            prop_assert!((a.misalignment - oracle).abs() < 1e-8, "rank {}: {} vs {}", rank, a.misalignment, oracle);
            prop_assert!(a.misalignment <= last + 1e-12);
            last = a.misalignment;
            let approx = a.factors.synthesize();
            let resid = m0.iter().zip(&approx).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
            let norm = m0.iter().map(|u| u * u).sum::<f64>().sqrt();
            prop_assert!((resid / norm - a.misalignment).abs() < 1e-8);
        }
    }

    #[test]
    fn leading_entry_of_first_factor_is_nonnegative(d1 in 2usize..8, d2 in 2usize..8, seed in any::<u32>()) {
        let m0 = gaussian(d1 * d2, seed as u64);
        let a = nkp_approximate(&m0, d1, d2, 1).unwrap();
        let h1 = a.factors.m1_block(0);
        let peak = h1.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        prop_assert!(peak >= 0.0);
    }

    #[test]
    fn csv_round_trip_is_exact(rank in 1usize..4, d1 in 1usize..6, d2 in 1usize..6, seed in any::<u32>()) {
        let f = random_factors(rank, d1, d2, seed as u64);
        prop_assert_eq!(KronFactors::from_csv(&f.to_csv()).unwrap(), f);
    }
}

#[test]
fn original_init_synthesizes_one_entry() {
    let f = init_factors(InitScheme::Original, 0.01, 3, 4, 5).unwrap();
    let w = f.synthesize();
    assert_eq!(w.iter().filter(|v| **v != 0.0).count(), 1);
    assert!((w[0] - 3.0 * 1e-4).abs() < 1e-18);
    assert!(init_factors(InitScheme::Yim, 0.01, 6, 4, 5).is_err());
    assert!(init_factors(InitScheme::Original, 0.0, 1, 4, 5).is_err());
    assert!(init_factors(InitScheme::Original, 1.5, 1, 4, 5).is_err());
}

#[test]
fn realizable_targets_have_zero_misalignment() {
    let f = random_factors(2, 6, 5, 99);
    let a = nkp_approximate(&f.synthesize(), 6, 5, 2).unwrap();
    assert!(a.misalignment < 1e-10);
    assert!(close(&a.factors.synthesize(), &f.synthesize(), 1e-10));
}
