//! Statistical validation of the generated randomness: descriptive
//! statistics, bit-level autocorrelation, spectral estimation, a
//! randomness-test battery, min-entropy estimates, and sampling-timing
//! checks.

pub mod autocorr;
pub mod battery;
pub mod entropy;
pub mod spectrum;
pub mod stats;
pub mod timing;
