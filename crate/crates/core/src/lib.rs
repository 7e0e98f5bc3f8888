//! Nearest-Kronecker-product (NKP) subband adaptive filters.
//!
//! A long adaptive filter `m = Σ_p m2_p ⊗ m1_p` is identified through its two
//! short factors while the input and desired signals are split by a
//! cosine-modulated analysis bank. The crate provides:
//!
//! - [`nkp`]: Kronecker factor algebra, compression operators and the
//!   truncated-SVD nearest rank-P approximation.
//! - [`filterbank`]: cosine-modulated analysis bank design and streaming
//!   subband decomposition.
//! - [`adaptive`]: the type-I and type-II subband NKP engines, MCC/LC robust
//!   scaling, and the NLMS / NSAF baselines.
//! - [`nonlinear`]: trigonometric and second-order Volterra functional
//!   expansions feeding the type-II engine.
//! - [`anc`]: filtered-x active noise control loop and the ANR metric.
//! - [`signalgen`]: seedable excitation, impulsive noise and distortion models.
//! - [`analysis`]: metrics, steady-state theory, stability range, complexity
//!   counts and the Monte-Carlo harness.
//! - [`scenario`]: system-identification experiment drivers.

pub mod adaptive;
pub mod analysis;
pub mod anc;
pub mod delay;
pub mod error;
pub mod filterbank;
pub mod nkp;
pub mod nonlinear;
pub mod rng;
pub mod scenario;
pub mod signalgen;

pub use error::{Error, Result};
