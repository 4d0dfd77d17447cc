//! Agreement coefficients for paired continuous measurements.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the classical
//! toolbox (Pearson, Lin's concordance correlation coefficient, Bland–Altman
//! limits, Fisher-z inference), distance-based robust coefficients, the
//! probability of agreement, functional and comovement indices for series,
//! multivariate coefficients, geostatistical and lattice coefficients, and
//! image similarity. Every stochastic routine takes an explicit [`Rng`], so
//! all simulations are reproducible from a seed.
//!
//! IO, file formats and the command-line front end live in the `concord`
//! crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(a > b)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classic;
pub mod error;
pub mod estimate;
pub mod image;
pub mod linalg;
pub mod math;
pub mod multivariate;
pub mod optimize;
pub mod pa;
pub mod quadrature;
pub mod rng;
pub mod robust;
pub mod sample;
pub mod spatial;
pub mod temporal;

pub use error::{Error, Result};
pub use estimate::{AgreementEstimate, EstimateMethod};
pub use rng::Rng;
pub use sample::{BivariateNormalParams, Divisor, PairedSample, SampleMoments};
