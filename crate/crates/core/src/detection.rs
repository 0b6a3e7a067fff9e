//! Photodetection chain: band-limiting, electrical noise, and sampling.
//!
//! The fast channel is a photodetector low-pass cascaded with the scope
//! front end (each a first-order stage); the slow monitor channel watches
//! the bias drift. Electrical noise is white Gaussian plus a handful of
//! fixed-frequency pickup lines, matching what a blocked-input measurement
//! of such a system shows.

use crate::error::{invalid, Result};
use crate::interferometer::{SignalTrace, TraceOrigin};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One narrowband electrical pickup line.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpectralSpike {
    /// Line frequency, Hz.
    pub frequency: f64,
    /// Peak amplitude in signal units.
    pub amplitude: f64,
    /// Initial phase, rad.
    pub phase: f64,
}

/// One detection stage plus its electrical noise at the output.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorConfig {
    /// -3 dB bandwidth, Hz.
    pub bandwidth: f64,
    /// DC gain, dimensionless.
    pub gain: f64,
    /// RMS of the additive white noise, signal units.
    pub white_noise_std: f64,
    /// Pickup lines added on top of the white noise.
    pub spikes: Vec<SpectralSpike>,
}

impl DetectorConfig {
    /// Response time `1 / bandwidth`, s.
    pub fn response_time(&self) -> f64 {
        1.0 / self.bandwidth
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(invalid("detector bandwidth must be positive and finite"));
        }
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(invalid("detector gain must be positive and finite"));
        }
        if !(self.white_noise_std >= 0.0) {
            return Err(invalid("white noise std must be >= 0"));
        }
        for spike in &self.spikes {
            if !(spike.frequency > 0.0) || !(spike.amplitude >= 0.0) {
                return Err(invalid("spike frequency must be > 0 and amplitude >= 0"));
            }
        }
        Ok(())
    }

    /// Noiseless stage, handy for composing filter cascades.
    pub fn noiseless(bandwidth: f64) -> Self {
        DetectorConfig {
            bandwidth,
            gain: 1.0,
            white_noise_std: 0.0,
            spikes: Vec::new(),
        }
    }
}

/// First-order low-pass, discretized with the prewarped bilinear transform
/// so the -3 dB point sits exactly at the configured cutoff.
#[derive(Debug, Clone)]
pub struct LowPass {
    b: f64,
    a: f64,
    gain: f64,
    prev_in: f64,
    prev_out: f64,
}

impl LowPass {
    /// Requires `time_step <= response_time / 2` so the cutoff stays at or
    /// below the Nyquist frequency of the trace.
    pub fn new(bandwidth: f64, gain: f64, time_step: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !(time_step > 0.0) {
            return Err(invalid("bandwidth and time step must be positive"));
        }
        let response_time = 1.0 / bandwidth;
        if time_step > response_time / 2.0 {
            return Err(invalid(format!(
                "time step {time_step:.3e} s too coarse for bandwidth {bandwidth:.3e} Hz \
                 (need <= {:.3e} s)",
                response_time / 2.0
            )));
        }
        let k = (std::f64::consts::PI * bandwidth * time_step).tan();
        Ok(LowPass {
            b: k / (1.0 + k),
            a: (1.0 - k) / (1.0 + k),
            gain,
            prev_in: 0.0,
            prev_out: 0.0,
        })
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b * (x + self.prev_in) + self.a * self.prev_out;
        self.prev_in = x;
        self.prev_out = y;
        y * self.gain
    }

    /// Filters a chunk in place, preserving state across calls.
    pub fn apply(&mut self, values: &mut [f64]) {
        for v in values {
            *v = self.process(*v);
        }
    }
}

/// Applies the detector's low-pass stage causally over a whole trace.
pub fn lowpass_filter(trace: &SignalTrace, cfg: &DetectorConfig) -> Result<SignalTrace> {
    cfg.validate()?;
    let mut filter = LowPass::new(cfg.bandwidth, cfg.gain, trace.time_step)?;
    let mut values = trace.values.clone();
    filter.apply(&mut values);
    Ok(SignalTrace {
        time_step: trace.time_step,
        values,
        origin: TraceOrigin::DetectorFiltered,
    })
}

/// Numerically stable sinusoid generator: one complex rotation per step,
/// renormalized periodically so the amplitude cannot drift.
#[derive(Debug, Clone)]
struct SpikeOscillator {
    cos_step: f64,
    sin_step: f64,
    re: f64,
    im: f64,
    amplitude: f64,
    steps_since_norm: u32,
}

impl SpikeOscillator {
    fn new(spike: &SpectralSpike, time_step: f64) -> Self {
        let w = 2.0 * std::f64::consts::PI * spike.frequency * time_step;
        SpikeOscillator {
            cos_step: w.cos(),
            sin_step: w.sin(),
            re: spike.phase.cos(),
            im: spike.phase.sin(),
            amplitude: spike.amplitude,
            steps_since_norm: 0,
        }
    }

    #[inline]
    fn next(&mut self) -> f64 {
        let out = self.amplitude * self.im;
        let re = self.re * self.cos_step - self.im * self.sin_step;
        let im = self.re * self.sin_step + self.im * self.cos_step;
        self.re = re;
        self.im = im;
        self.steps_since_norm += 1;
        if self.steps_since_norm == 4096 {
            let norm = (self.re * self.re + self.im * self.im).sqrt();
            self.re /= norm;
            self.im /= norm;
            self.steps_since_norm = 0;
        }
        out
    }
}

/// Streaming electrical-noise source: white Gaussian plus the pickup lines.
#[derive(Debug, Clone)]
pub struct NoiseInjector {
    white_std: f64,
    oscillators: Vec<SpikeOscillator>,
    rng: ChaCha8Rng,
}

impl NoiseInjector {
    pub fn new(cfg: &DetectorConfig, time_step: f64, rng: ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        if !(time_step > 0.0) {
            return Err(invalid("time step must be positive"));
        }
        Ok(NoiseInjector {
            white_std: cfg.white_noise_std,
            oscillators: cfg
                .spikes
                .iter()
                .map(|s| SpikeOscillator::new(s, time_step))
                .collect(),
            rng,
        })
    }

    /// Adds noise onto a chunk in place, preserving oscillator phase and
    /// generator state across calls.
    pub fn apply(&mut self, values: &mut [f64]) {
        if self.white_std > 0.0 {
            for v in values.iter_mut() {
                let n: f64 = self.rng.sample(StandardNormal);
                *v += self.white_std * n;
            }
        }
        for osc in &mut self.oscillators {
            for v in values.iter_mut() {
                *v += osc.next();
            }
        }
    }
}

/// Adds the configured electrical noise to a trace.
pub fn add_electrical_noise(
    trace: &SignalTrace,
    cfg: &DetectorConfig,
    rng: ChaCha8Rng,
) -> Result<SignalTrace> {
    let mut injector = NoiseInjector::new(cfg, trace.time_step, rng)?;
    let mut values = trace.values.clone();
    injector.apply(&mut values);
    Ok(SignalTrace {
        time_step: trace.time_step,
        values,
        origin: TraceOrigin::DetectorNoisy,
    })
}

/// Digitized samples taken from an analog trace at a fixed period.
#[derive(Debug, Clone)]
pub struct SampleSeries {
    /// Sampling period, s.
    pub sampling_period: f64,
    /// Offset of the first sample from the trace start, s.
    pub offset: f64,
    pub values: Vec<f64>,
    /// Decision threshold, set once a thresholding pass has run.
    pub threshold: Option<f64>,
}

impl SampleSeries {
    pub fn sample_rate(&self) -> f64 {
        1.0 / self.sampling_period
    }
}

/// Picks the trace point nearest each sampling instant
/// `offset + k * period`. The sample count is `floor((span - offset) / period) + 1`.
pub fn sample(trace: &SignalTrace, period: f64, offset: f64) -> Result<SampleSeries> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(invalid("sampling period must be positive and finite"));
    }
    if period < trace.time_step {
        return Err(invalid(format!(
            "sampling period {period:.3e} s is finer than the trace step {:.3e} s",
            trace.time_step
        )));
    }
    if !(offset >= 0.0) || offset > trace.span() {
        return Err(invalid("sampling offset must lie within the trace"));
    }
    let count = ((trace.span() - offset) / period).floor() as usize + 1;
    let mut values = Vec::with_capacity(count);
    for k in 0..count {
        let t = offset + k as f64 * period;
        let idx = (t / trace.time_step).round() as usize;
        values.push(trace.values[idx.min(trace.values.len() - 1)]);
    }
    Ok(SampleSeries {
        sampling_period: period,
        offset,
        values,
        threshold: None,
    })
}

/// Default monitor-channel bandwidth, Hz.
pub const MONITOR_BANDWIDTH: f64 = 1e6;
/// Default monitor-channel sampling rate, Hz. At least twice the bandwidth.
pub const MONITOR_SAMPLE_RATE: f64 = 2e6;

/// Slow channel used by the stabilization loop: low-pass at `bandwidth`,
/// then sampled at `sample_rate`.
pub fn monitor_channel_with(
    trace: &SignalTrace,
    bandwidth: f64,
    sample_rate: f64,
) -> Result<SampleSeries> {
    if sample_rate < 2.0 * bandwidth {
        return Err(invalid(format!(
            "monitor sample rate {sample_rate:.3e} Hz must be at least twice the bandwidth \
             {bandwidth:.3e} Hz"
        )));
    }
    let filtered = lowpass_filter(trace, &DetectorConfig::noiseless(bandwidth))?;
    sample(&filtered, 1.0 / sample_rate, 0.0)
}

/// Monitor channel at the default 1 MHz bandwidth and 2 MHz sampling.
pub fn monitor_channel(trace: &SignalTrace) -> Result<SampleSeries> {
    monitor_channel_with(trace, MONITOR_BANDWIDTH, MONITOR_SAMPLE_RATE)
}
