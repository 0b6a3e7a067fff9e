//! Min-entropy estimation for analog samples and extracted bits.
//!
//! Min-entropy is the worst-case measure: `-log2` of the most probable
//! outcome. For analog samples it is estimated from a histogram; for a bit
//! stream it follows directly from the ones fraction. Both are optimistic
//! i.i.d. estimates — serial correlation is reported separately by the
//! autocorrelation analysis rather than folded in here.

use crate::analysis::stats::{mean, std_dev};
use crate::error::{invalid, Result};
use crate::extraction::BitStream;

/// Histogram min-entropy of an amplitude distribution, bits per sample.
///
/// Bins span mean ± 4 standard deviations; outliers land in the edge bins.
/// A constant input has zero min-entropy by definition.
pub fn sample_min_entropy(values: &[f64], bins: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(invalid(
            "cannot estimate min-entropy of an empty sample set",
        ));
    }
    if bins < 2 {
        return Err(invalid("min-entropy histogram needs at least 2 bins"));
    }
    let mu = mean(values);
    let sigma = std_dev(values);
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let lo = mu - 4.0 * sigma;
    let width = 8.0 * sigma / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let bin = (((v - lo) / width) as isize).clamp(0, bins as isize - 1) as usize;
        counts[bin] += 1;
    }
    let most_probable = *counts.iter().max().expect("bins >= 2") as f64 / values.len() as f64;
    Ok(-most_probable.log2())
}

/// Min-entropy per bit implied by the ones fraction alone.
pub fn bit_min_entropy(bits: &BitStream) -> Result<f64> {
    if bits.is_empty() {
        return Err(invalid(
            "cannot estimate min-entropy of an empty bit stream",
        ));
    }
    let p = bits.ones_fraction().max(1.0 - bits.ones_fraction());
    Ok(-p.log2())
}
