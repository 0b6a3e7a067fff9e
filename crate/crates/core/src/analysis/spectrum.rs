//! Power spectral density estimation by Welch's averaged periodogram.
//!
//! Segments overlap by half, each has its mean removed and a window applied,
//! and the one-sided density is averaged across segments. Densities are
//! reported in dB relative to 1 unit^2/Hz, so ratios between runs are
//! reference-free.

use crate::detection::SampleSeries;
use crate::error::{invalid, Result};
use crate::interferometer::SignalTrace;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Rectangular,
    Hann,
}

impl WindowKind {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Hann => (0..len)
                .map(|i| {
                    let x = std::f64::consts::PI * i as f64 / len as f64;
                    x.sin().powi(2)
                })
                .collect(),
        }
    }
}

/// One-sided PSD estimate on an evenly spaced frequency grid.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    /// Bin centers, Hz, strictly increasing from 0 to Nyquist.
    pub frequencies: Vec<f64>,
    /// Density per bin, dB re 1 unit^2/Hz.
    pub power_density_db: Vec<f64>,
    pub segment_length: usize,
    pub window: WindowKind,
    /// Number of segments averaged.
    pub averages: usize,
}

impl SpectrumEstimate {
    /// Frequency resolution, Hz.
    pub fn bin_width(&self) -> f64 {
        self.frequencies[1] - self.frequencies[0]
    }
}

/// Welch PSD of `values` sampled at `sample_rate`. Needs at least two
/// segments' worth of data so at least three half-overlapping segments
/// average out single-periodogram variance.
pub fn psd_estimate(
    values: &[f64],
    sample_rate: f64,
    segment_length: usize,
    window: WindowKind,
) -> Result<SpectrumEstimate> {
    if !(sample_rate > 0.0) || !sample_rate.is_finite() {
        return Err(invalid("sample rate must be positive and finite"));
    }
    if segment_length < 8 || !segment_length.is_multiple_of(2) {
        return Err(invalid("segment length must be even and at least 8"));
    }
    if values.len() < 2 * segment_length {
        return Err(invalid(format!(
            "need at least {} samples for segment length {segment_length}, got {}",
            2 * segment_length,
            values.len()
        )));
    }

    let coeffs = window.coefficients(segment_length);
    let window_power: f64 = coeffs.iter().map(|w| w * w).sum();
    let hop = segment_length / 2;
    let bins = segment_length / 2 + 1;

    let fft = FftPlanner::new().plan_fft_forward(segment_length);
    let mut accum = vec![0.0f64; bins];
    let mut buf = vec![Complex64::default(); segment_length];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

    let mut segments = 0usize;
    let mut start = 0usize;
    while start + segment_length <= values.len() {
        let segment = &values[start..start + segment_length];
        let mean = segment.iter().sum::<f64>() / segment_length as f64;
        for ((slot, &v), &w) in buf.iter_mut().zip(segment).zip(&coeffs) {
            *slot = Complex64::new((v - mean) * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (bin, slot) in accum.iter_mut().enumerate() {
            *slot += buf[bin].norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    // One-sided density: interior bins carry the mirrored half as well.
    let scale = 1.0 / (sample_rate * window_power * segments as f64);
    let mut power_density_db = Vec::with_capacity(bins);
    let mut frequencies = Vec::with_capacity(bins);
    let df = sample_rate / segment_length as f64;
    for (bin, &p) in accum.iter().enumerate() {
        let one_sided = if bin == 0 || bin == bins - 1 {
            1.0
        } else {
            2.0
        };
        let density = (p * scale * one_sided).max(f64::MIN_POSITIVE);
        power_density_db.push(10.0 * density.log10());
        frequencies.push(bin as f64 * df);
    }

    Ok(SpectrumEstimate {
        frequencies,
        power_density_db,
        segment_length,
        window,
        averages: segments,
    })
}

/// Welch PSD of a trace at simulation resolution.
pub fn psd_of_trace(
    trace: &SignalTrace,
    segment_length: usize,
    window: WindowKind,
) -> Result<SpectrumEstimate> {
    psd_estimate(&trace.values, 1.0 / trace.time_step, segment_length, window)
}

/// Welch PSD of a sampled series.
pub fn psd_of_series(
    series: &SampleSeries,
    segment_length: usize,
    window: WindowKind,
) -> Result<SpectrumEstimate> {
    psd_estimate(&series.values, series.sample_rate(), segment_length, window)
}

/// Mean linear density over `[f_lo, f_hi)`, returned in dB.
pub fn mean_density_db(spec: &SpectrumEstimate, f_lo: f64, f_hi: f64) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (f, db) in spec.frequencies.iter().zip(&spec.power_density_db) {
        if (f_lo..f_hi).contains(f) {
            sum += 10f64.powf(db / 10.0);
            count += 1;
        }
    }
    if count == 0 {
        return Err(invalid(format!(
            "no spectrum bins in [{f_lo:.3e}, {f_hi:.3e}) Hz"
        )));
    }
    Ok(10.0 * (sum / count as f64).log10())
}

/// Roll-off knee: the lowest frequency above `plateau_hi` where the smoothed
/// density has fallen `drop_db` below the plateau level measured over
/// `[plateau_lo, plateau_hi)`. Smoothing is a short moving average in dB.
pub fn knee_frequency(
    spec: &SpectrumEstimate,
    plateau_lo: f64,
    plateau_hi: f64,
    drop_db: f64,
) -> Result<f64> {
    let plateau = mean_density_db(spec, plateau_lo, plateau_hi)?;
    let smoothed = moving_average(&spec.power_density_db, 9);
    for (f, db) in spec.frequencies.iter().zip(&smoothed) {
        if *f >= plateau_hi && *db <= plateau - drop_db {
            return Ok(*f);
        }
    }
    Err(invalid(format!(
        "spectrum never drops {drop_db} dB below its plateau of {plateau:.1} dB"
    )))
}

/// Checks that the smoothed density never rises by more than `slack_db`
/// while descending from the plateau to `floor_db` below it. Returns the
/// frequency of the first violation.
pub fn monotone_rolloff_violation(
    spec: &SpectrumEstimate,
    plateau_lo: f64,
    plateau_hi: f64,
    floor_db: f64,
    slack_db: f64,
) -> Result<Option<f64>> {
    let plateau = mean_density_db(spec, plateau_lo, plateau_hi)?;
    let smoothed = moving_average(&spec.power_density_db, 9);
    let mut running_min = f64::INFINITY;
    for (f, db) in spec.frequencies.iter().zip(&smoothed) {
        if *f < plateau_hi {
            continue;
        }
        if *db < plateau - floor_db {
            break;
        }
        if *db > running_min + slack_db {
            return Ok(Some(*f));
        }
        running_min = running_min.min(*db);
    }
    Ok(None)
}

fn moving_average(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Writes a spectrum as `frequency_hz,density_db` CSV.
pub fn write_psd_csv(spec: &SpectrumEstimate, writer: &mut impl std::io::Write) -> Result<()> {
    writeln!(writer, "frequency_hz,density_db")?;
    for (f, db) in spec.frequencies.iter().zip(&spec.power_density_db) {
        writeln!(writer, "{f},{db}")?;
    }
    Ok(())
}

/// Writes autocorrelation coefficients as `lag,coefficient` CSV.
pub fn write_autocorr_csv(coefficients: &[f64], writer: &mut impl std::io::Write) -> Result<()> {
    writeln!(writer, "lag,coefficient")?;
    for (i, c) in coefficients.iter().enumerate() {
        writeln!(writer, "{},{c}", i + 1)?;
    }
    Ok(())
}
