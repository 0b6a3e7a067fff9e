//! Normalized autocorrelation of bit streams.

use crate::error::{invalid, Error, Result};
use crate::extraction::BitStream;

/// Autocorrelation of the +/-1-mapped bit sequence at lags `1..=max_lag`,
/// with the mean removed and biased normalization (divide by N). The biased
/// estimator keeps the sequence positive semi-definite, so every
/// coefficient lies in [-1, 1].
///
/// Returns one coefficient per lag; index 0 holds lag 1.
pub fn autocorrelation(bits: &BitStream, max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 {
        return Err(invalid("max_lag must be at least 1"));
    }
    if bits.len() <= max_lag {
        return Err(invalid(format!(
            "need more than {max_lag} bits, got {}",
            bits.len()
        )));
    }
    let n = bits.len();
    if n >= i32::MAX as usize {
        return Err(invalid("autocorrelation supports streams up to 2^31 bits"));
    }
    let ones = bits.count_ones();
    if ones == 0 || ones == n {
        return Err(Error::UndefinedNormalization(
            "constant bit stream has zero variance".into(),
        ));
    }

    // +/-1 mapping as i8 keeps the hot loop vectorizable; sums fit easily
    // in i64 for any realistic stream length.
    let mapped: Vec<i8> = bits.unpack().iter().map(|&b| (2 * b as i8) - 1).collect();
    let nf = n as f64;
    let mu = (2 * ones) as f64 / nf - 1.0;
    let sigma2 = 1.0 - mu * mu;

    // Prefix sums let the mean correction use exact head/tail counts.
    let total: i64 = mapped.iter().map(|&v| v as i64).sum();
    let mut head = total;
    let mut tail = total;

    let mut out = Vec::with_capacity(max_lag);
    for lag in 1..=max_lag {
        head -= mapped[n - lag] as i64;
        tail -= mapped[lag - 1] as i64;
        // i32 holds the sum for any stream shorter than 2^31 bits and keeps
        // the loop vectorizable.
        let dot: i32 = mapped[..n - lag]
            .iter()
            .zip(&mapped[lag..])
            .map(|(&a, &b)| (a as i32) * (b as i32))
            .sum();
        let cov = dot as f64 - mu * (head + tail) as f64 + (n - lag) as f64 * mu * mu;
        out.push(cov / (nf * sigma2));
    }
    Ok(out)
}

/// Largest absolute coefficient and the lag it occurs at (1-based).
pub fn max_abs_autocorrelation(coefficients: &[f64]) -> (f64, usize) {
    let mut best = (0.0f64, 1);
    for (i, &c) in coefficients.iter().enumerate() {
        if c.abs() > best.0 {
            best = (c.abs(), i + 1);
        }
    }
    best
}
