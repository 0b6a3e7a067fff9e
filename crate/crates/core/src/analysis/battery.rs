//! Statistical randomness battery, modeled on the NIST SP 800-22 suite.
//!
//! Each test turns a bit stream into a p-value under the null hypothesis of
//! independent fair bits; a p-value below the significance level fails that
//! test. Tests whose validity floor exceeds the input length are marked
//! not-run rather than silently passed, and a not-run test blocks the
//! overall verdict.

use crate::error::{invalid, Result};
use crate::extraction::BitStream;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

/// Block length for the block-frequency test.
const BLOCK_FREQUENCY_M: usize = 128;
/// Pattern length for the serial and approximate-entropy tests.
const SERIAL_M: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestStatus {
    Pass,
    Fail,
    NotRun,
}

/// Outcome of a single battery test.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TestRecord {
    pub name: &'static str,
    pub status: TestStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TestReport {
    pub input_length: usize,
    pub alpha: f64,
    /// True only when every record passed; a single failure or not-run
    /// verdict clears it.
    pub overall_pass: bool,
    pub records: Vec<TestRecord>,
}

impl TestReport {
    pub fn failures(&self) -> impl Iterator<Item = &TestRecord> {
        self.records.iter().filter(|r| r.status == TestStatus::Fail)
    }
}

/// Runs the full battery at significance level `alpha`.
pub fn run_battery(bits: &BitStream, alpha: f64) -> Result<TestReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!(
            "significance level must be in (0, 1), got {alpha}"
        )));
    }
    if bits.is_empty() {
        return Err(invalid("cannot run the battery on an empty bit stream"));
    }
    let raw = bits.unpack();
    let n = raw.len();

    let mut records = Vec::with_capacity(9);
    records.push(record("monobit", 100, n, alpha, || monobit_p(&raw)));
    records.push(record(
        "block-frequency",
        10 * BLOCK_FREQUENCY_M,
        n,
        alpha,
        || block_frequency_p(&raw, BLOCK_FREQUENCY_M),
    ));
    records.push(record("runs", 100, n, alpha, || runs_p(&raw)));
    records.push(record("longest-run", 128, n, alpha, || longest_run_p(&raw)));
    if n >= 128 {
        let (p1, p2) = serial_p(&raw, SERIAL_M);
        records.push(judged("serial-first", p1, alpha));
        records.push(judged("serial-second", p2, alpha));
    } else {
        records.push(not_run("serial-first", 128, n));
        records.push(not_run("serial-second", 128, n));
    }
    records.push(record("cusum-forward", 100, n, alpha, || {
        cusum_p(&raw, false)
    }));
    records.push(record("cusum-backward", 100, n, alpha, || {
        cusum_p(&raw, true)
    }));
    records.push(record("approximate-entropy", 256, n, alpha, || {
        approximate_entropy_p(&raw, SERIAL_M)
    }));

    let overall_pass = records.iter().all(|r| r.status == TestStatus::Pass);
    Ok(TestReport {
        input_length: n,
        alpha,
        overall_pass,
        records,
    })
}

fn record(
    name: &'static str,
    min_bits: usize,
    n: usize,
    alpha: f64,
    compute: impl FnOnce() -> f64,
) -> TestRecord {
    if n < min_bits {
        return not_run(name, min_bits, n);
    }
    judged(name, compute(), alpha)
}

fn judged(name: &'static str, p: f64, alpha: f64) -> TestRecord {
    let status = if p >= alpha {
        TestStatus::Pass
    } else {
        TestStatus::Fail
    };
    TestRecord {
        name,
        status,
        p_value: Some(p),
        note: None,
    }
}

fn not_run(name: &'static str, min_bits: usize, n: usize) -> TestRecord {
    TestRecord {
        name,
        status: TestStatus::NotRun,
        p_value: None,
        note: Some(format!("needs at least {min_bits} bits, got {n}")),
    }
}

/// Upper regularized incomplete gamma `Q(a, x)`, the chi-square survival
/// function in the form the test statistics need. A zero statistic is a
/// perfect fit, so `x = 0` maps to `p = 1` instead of a domain error.
fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        statrs::function::gamma::gamma_ur(a, x)
    }
}

/// Frequency test: the scaled magnitude of the +/-1 sum is half-normal.
fn monobit_p(bits: &[u8]) -> f64 {
    let ones: u64 = bits.iter().map(|&b| b as u64).sum();
    let sum = 2.0 * ones as f64 - bits.len() as f64;
    let s_obs = sum.abs() / (bits.len() as f64).sqrt();
    erfc(s_obs / std::f64::consts::SQRT_2)
}

/// Block frequency test: chi-square of per-block ones fractions.
fn block_frequency_p(bits: &[u8], block_len: usize) -> f64 {
    let blocks = bits.len() / block_len;
    let mut chi2 = 0.0;
    for block in bits.chunks_exact(block_len).take(blocks) {
        let ones: u64 = block.iter().map(|&b| b as u64).sum();
        let pi = ones as f64 / block_len as f64;
        chi2 += (pi - 0.5).powi(2);
    }
    chi2 *= 4.0 * block_len as f64;
    igamc(blocks as f64 / 2.0, chi2 / 2.0)
}

/// Runs test: total number of runs against its expectation for the observed
/// ones fraction. When the ones fraction is already far from one half, the
/// statistic is meaningless and the test fails outright.
fn runs_p(bits: &[u8]) -> f64 {
    let n = bits.len() as f64;
    let pi = bits.iter().map(|&b| b as f64).sum::<f64>() / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return 0.0;
    }
    let runs = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let expected = 2.0 * n * pi * (1.0 - pi);
    erfc((runs as f64 - expected).abs() / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi)))
}

/// Longest-run-of-ones test with the standard length tiers.
fn longest_run_p(bits: &[u8]) -> f64 {
    let n = bits.len();
    let (block_len, offset, pi): (usize, usize, &[f64]) = if n >= 750_000 {
        (
            10_000,
            10,
            &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        )
    } else if n >= 6272 {
        (128, 4, &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124])
    } else {
        (8, 1, &[0.2148, 0.3672, 0.2305, 0.1875])
    };
    let categories = pi.len();
    let mut counts = vec![0u64; categories];
    let blocks = n / block_len;
    for block in bits.chunks_exact(block_len).take(blocks) {
        let mut longest = 0usize;
        let mut current = 0usize;
        for &b in block {
            if b == 1 {
                current += 1;
                longest = longest.max(current);
            } else {
                current = 0;
            }
        }
        let category = longest.saturating_sub(offset).min(categories - 1);
        counts[category] += 1;
    }
    let n_blocks = blocks as f64;
    let chi2: f64 = counts
        .iter()
        .zip(pi)
        .map(|(&c, &p)| (c as f64 - n_blocks * p).powi(2) / (n_blocks * p))
        .sum();
    igamc((categories - 1) as f64 / 2.0, chi2 / 2.0)
}

/// Counts of every overlapping `m`-bit pattern, with wraparound so each of
/// the `n` positions contributes exactly one pattern.
fn pattern_counts(bits: &[u8], m: usize) -> Vec<u64> {
    let n = bits.len();
    let mut counts = vec![0u64; 1 << m];
    let mask = (1usize << m) - 1;
    let mut idx = 0usize;
    for &b in &bits[..m - 1] {
        idx = (idx << 1) | b as usize;
    }
    for i in m - 1..n + m - 1 {
        idx = ((idx << 1) | bits[i % n] as usize) & mask;
        counts[idx] += 1;
    }
    counts
}

/// Sum-of-squares statistic underlying the serial test; zero when `m` is 0.
fn psi_squared(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum: f64 = pattern_counts(bits, m)
        .iter()
        .map(|&c| (c as f64).powi(2))
        .sum();
    (1 << m) as f64 / n * sum - n
}

/// Serial test: first and second differences of the psi-squared statistics
/// for pattern lengths `m`, `m - 1`, `m - 2`.
fn serial_p(bits: &[u8], m: usize) -> (f64, f64) {
    assert!(m >= 2, "serial test needs pattern length of at least 2");
    let psi_m = psi_squared(bits, m);
    let psi_m1 = psi_squared(bits, m - 1);
    let psi_m2 = psi_squared(bits, m - 2);
    let delta1 = (psi_m - psi_m1).max(0.0);
    let delta2 = (psi_m - 2.0 * psi_m1 + psi_m2).max(0.0);
    let p1 = igamc((1 << (m - 2)) as f64, delta1 / 2.0);
    let p2 = igamc((1 << (m - 2)) as f64 / 2.0, delta2 / 2.0);
    (p1, p2)
}

/// Cumulative sums test: the largest partial-sum excursion of the +/-1 walk.
fn cusum_p(bits: &[u8], backward: bool) -> f64 {
    let n = bits.len();
    let mut sum = 0i64;
    let mut z = 0i64;
    let mapped = |b: u8| 2 * b as i64 - 1;
    if backward {
        for &b in bits.iter().rev() {
            sum += mapped(b);
            z = z.max(sum.abs());
        }
    } else {
        for &b in bits {
            sum += mapped(b);
            z = z.max(sum.abs());
        }
    }
    // Summation bounds follow the reference implementation's integer
    // arithmetic (division truncating toward zero); the omitted tail terms
    // are what the published example values assume.
    let n_over_z = n as i64 / z;
    let lo1 = (-n_over_z + 1) / 4;
    let hi = (n_over_z - 1) / 4;
    let lo2 = (-n_over_z - 3) / 4;

    let z = z as f64;
    let n = n as f64;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let phi = |x: f64| normal.cdf(x);
    let sqrt_n = n.sqrt();

    let mut p = 1.0;
    for k in lo1..=hi {
        let k = k as f64;
        p -= phi((4.0 * k + 1.0) * z / sqrt_n) - phi((4.0 * k - 1.0) * z / sqrt_n);
    }
    for k in lo2..=hi {
        let k = k as f64;
        p += phi((4.0 * k + 3.0) * z / sqrt_n) - phi((4.0 * k + 1.0) * z / sqrt_n);
    }
    p.clamp(0.0, 1.0)
}

/// Approximate entropy test: compares the entropy rate of overlapping
/// `m`- and `m + 1`-bit patterns with the ideal `ln 2`.
fn approximate_entropy_p(bits: &[u8], m: usize) -> f64 {
    let n = bits.len() as f64;
    let phi = |len: usize| -> f64 {
        pattern_counts(bits, len)
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let frac = c as f64 / n;
                frac * frac.ln()
            })
            .sum()
    };
    let ap_en = phi(m) - phi(m + 1);
    let chi2 = 2.0 * n * (std::f64::consts::LN_2 - ap_en);
    igamc((1 << (m - 1)) as f64, chi2.max(0.0) / 2.0)
}
