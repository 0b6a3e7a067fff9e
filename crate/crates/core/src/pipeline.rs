//! End-to-end scenario execution.
//!
//! A frame streams through the analog chain in fixed-size chunks — phase
//! walk, delayed self-interference, bias control, detection filters,
//! electrical noise, digitization — so the full-resolution trace never
//! exists in memory. Every stochastic element draws from its own stream
//! keyed by `(master seed, domain, sweep index, frame index)`, which makes
//! runs bit-identical for any worker count and any chunk size. Frames are
//! binarized against their own mean; even frames concatenate into the first
//! raw stream, odd frames into the second, and XOR of the two yields the
//! extracted stream.

use crate::analysis::autocorr::{autocorrelation, max_abs_autocorrelation};
use crate::analysis::battery::{run_battery, TestReport, TestStatus};
use crate::analysis::entropy::{bit_min_entropy, sample_min_entropy};
use crate::analysis::spectrum::{
    mean_density_db, psd_estimate, write_autocorr_csv, write_psd_csv, SpectrumEstimate, WindowKind,
};
use crate::analysis::timing::TimingVerdict;
use crate::config::ScenarioConfig;
use crate::detection::{LowPass, NoiseInjector, SampleSeries};
use crate::error::{invalid, Result};
use crate::extraction::{binarize, mean_threshold, xor_combine, BitStream, Provenance};
use crate::interferometer::{
    interference_into, unstabilized_bias_into, BiasController, DriftWalker, MziConfig,
};
use crate::laser::{delay_to_steps, PhaseWalker};
use crate::seed::{stream_rng, DOMAIN_CONTROL, DOMAIN_DRIFT, DOMAIN_NOISE, DOMAIN_PHASE};
use rayon::prelude::*;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Fine-resolution steps processed per streaming chunk.
pub const STREAM_CHUNK_LEN: usize = 1 << 16;

/// Emits `true` exactly at the fine index nearest each sampling instant
/// `offset + n * period`. Periods at or above the time step guarantee the
/// due indices are strictly increasing.
struct SampleClock {
    period: f64,
    offset: f64,
    time_step: f64,
    taken: u64,
    next: u64,
}

impl SampleClock {
    fn new(period: f64, offset: f64, time_step: f64) -> Self {
        let mut clock = SampleClock {
            period,
            offset,
            time_step,
            taken: 0,
            next: 0,
        };
        clock.next = clock.fine_index(0);
        clock
    }

    fn fine_index(&self, n: u64) -> u64 {
        ((self.offset + n as f64 * self.period) / self.time_step).round() as u64
    }

    fn due(&mut self, fine: u64) -> bool {
        if fine == self.next {
            self.taken += 1;
            self.next = self.fine_index(self.taken);
            true
        } else {
            false
        }
    }
}

/// Streaming simulator for one acquisition frame.
pub struct FrameSimulator {
    mzi: MziConfig,
    walker: PhaseWalker,
    drift: DriftWalker,
    controller: Option<BiasController>,
    photodetector: LowPass,
    noise: NoiseInjector,
    scope: LowPass,
    clock: SampleClock,
    /// Circular buffer of the last `delay_steps` phases.
    ring: Vec<f64>,
    delay_steps: u64,
    /// Index of the next phase value the walker will produce.
    phase_index: u64,
    /// Fine index of the first signal value the next chunk emits.
    emitted_base: u64,
    sampling_period: f64,
    sampling_offset: f64,
}

impl FrameSimulator {
    pub fn new(config: &ScenarioConfig, sweep_index: u64, frame_index: u64) -> Result<Self> {
        config.validate()?;
        let dt = config.simulation.time_step_s;
        let seed = config.master_seed;
        let mzi = config.mzi_config();
        let resolved = config.resolved_laser()?;
        let fast = config.fast_detector();
        let scope_cfg = config.scope_detector();

        let walker = PhaseWalker::new(
            resolved.coherence_time,
            dt,
            stream_rng(seed, DOMAIN_PHASE, sweep_index, frame_index),
        )?;
        let drift = DriftWalker::new(
            &mzi,
            dt,
            stream_rng(seed, DOMAIN_DRIFT, sweep_index, frame_index),
        )?;
        let controller = if mzi.stabilization_enabled {
            Some(BiasController::new(
                &mzi,
                1.0 / config.detector.monitor_sample_rate_hz,
                dt,
                stream_rng(seed, DOMAIN_CONTROL, sweep_index, frame_index),
            )?)
        } else {
            None
        };
        let photodetector = LowPass::new(fast.bandwidth, fast.gain, dt)?;
        let noise = NoiseInjector::new(
            &fast,
            dt,
            stream_rng(seed, DOMAIN_NOISE, sweep_index, frame_index),
        )?;
        let scope = LowPass::new(scope_cfg.bandwidth, scope_cfg.gain, dt)?;

        let delay_steps = delay_to_steps(mzi.delay, dt) as u64;
        Ok(FrameSimulator {
            mzi,
            walker,
            drift,
            controller,
            photodetector,
            noise,
            scope,
            clock: SampleClock::new(config.sampling.period_s, config.sampling.offset_s, dt),
            // The walker's initial phase (zero) occupies slot 0; the level
            // itself is irrelevant since only differences reach the output.
            ring: vec![0.0; delay_steps as usize],
            delay_steps,
            phase_index: 1,
            emitted_base: 0,
            sampling_period: config.sampling.period_s,
            sampling_offset: config.sampling.offset_s,
        })
    }

    /// Runs the chain until `frame_length` samples are digitized.
    ///
    /// `chunk_len` only sets the streaming granularity; the digitized output
    /// is bit-identical for every choice.
    pub fn run(&mut self, frame_length: usize, chunk_len: usize) -> Result<SampleSeries> {
        if frame_length == 0 || chunk_len == 0 {
            return Err(invalid("frame length and chunk length must be positive"));
        }
        let mut samples = Vec::with_capacity(frame_length);
        let mut phase = vec![0.0; chunk_len];
        let mut dphi = Vec::with_capacity(chunk_len);
        let mut drift = vec![0.0; chunk_len];
        let mut bias = vec![0.0; chunk_len];
        let mut signal = vec![0.0; chunk_len];

        while samples.len() < frame_length {
            self.walker.fill(&mut phase);
            dphi.clear();
            for &theta in &phase {
                let slot = (self.phase_index % self.delay_steps) as usize;
                if self.phase_index >= self.delay_steps {
                    // ring[slot] still holds the phase delay_steps ago.
                    dphi.push(self.ring[slot] - theta);
                }
                self.ring[slot] = theta;
                self.phase_index += 1;
            }
            if dphi.is_empty() {
                continue;
            }
            let emitted = dphi.len();

            let drift_chunk = &mut drift[..emitted];
            self.drift.fill(drift_chunk);
            let bias_chunk = &mut bias[..emitted];
            match &mut self.controller {
                Some(controller) => controller.fill(drift_chunk, bias_chunk),
                None => unstabilized_bias_into(&self.mzi, drift_chunk, bias_chunk),
            }
            let signal_chunk = &mut signal[..emitted];
            interference_into(&dphi, &self.mzi, bias_chunk, signal_chunk);
            self.photodetector.apply(signal_chunk);
            self.noise.apply(signal_chunk);
            self.scope.apply(signal_chunk);

            for (local, &value) in signal_chunk.iter().enumerate() {
                if self.clock.due(self.emitted_base + local as u64) {
                    samples.push(value);
                    if samples.len() == frame_length {
                        break;
                    }
                }
            }
            self.emitted_base += emitted as u64;
        }

        Ok(SampleSeries {
            sampling_period: self.sampling_period,
            offset: self.sampling_offset,
            values: samples,
            threshold: None,
        })
    }
}

/// One simulated, thresholded frame.
pub struct FrameOutput {
    pub series: SampleSeries,
    pub threshold: f64,
    pub bits: BitStream,
}

/// Simulates one frame and binarizes it against its own mean.
pub fn simulate_frame(
    config: &ScenarioConfig,
    sweep_index: u64,
    frame_index: u64,
) -> Result<FrameOutput> {
    let mut simulator = FrameSimulator::new(config, sweep_index, frame_index)?;
    let mut series = simulator.run(config.simulation.frame_length, STREAM_CHUNK_LEN)?;
    let threshold = mean_threshold(&mut series)?;
    let bits = binarize(&series, threshold)?;
    Ok(FrameOutput {
        series,
        threshold,
        bits,
    })
}

/// A completed scenario with its analysis results.
pub struct ScenarioRun {
    pub config: ScenarioConfig,
    pub sweep_index: u64,
    /// Coherence time the laser section resolved to, s.
    pub coherence_time_s: f64,
    pub requested_delay_s: f64,
    /// Delay after snapping to the simulation grid, s.
    pub snapped_delay_s: f64,
    /// Per-frame binarization thresholds.
    pub thresholds: Vec<f64>,
    /// Raw stream from even frames.
    pub bin1: BitStream,
    /// Raw stream from odd frames.
    pub bin2: BitStream,
    /// XOR of the raw streams, when extraction is enabled.
    pub bin3: Option<BitStream>,
    /// Digitized samples of frame 0, kept for spectral and amplitude analysis.
    pub reference_series: SampleSeries,
    /// Autocorrelation of the first raw stream, lags 1..=max_lag.
    pub raw_autocorr: Vec<f64>,
    pub extracted_autocorr: Option<Vec<f64>>,
    /// Welch spectrum of the reference series.
    pub spectrum: SpectrumEstimate,
    /// Mean low-band density of a blocked-input (noise only) run, dB.
    pub noise_floor_db: f64,
    pub battery: TestReport,
    pub timing: TimingVerdict,
    /// Histogram min-entropy of the reference samples, bits per sample.
    pub analog_min_entropy_bits: f64,
    /// Bias-implied min-entropy of the headline stream, bits per bit.
    pub bit_min_entropy_bits: f64,
}

impl ScenarioRun {
    /// The stream the run is judged on: extracted when present, else raw.
    pub fn headline(&self) -> &BitStream {
        self.bin3.as_ref().unwrap_or(&self.bin1)
    }

    /// Fraction of battery tests that passed.
    pub fn battery_pass_rate(&self) -> f64 {
        let passed = self
            .battery
            .records
            .iter()
            .filter(|r| r.status == TestStatus::Pass)
            .count();
        passed as f64 / self.battery.records.len() as f64
    }
}

/// Runs a scenario with sweep index 0 (the plain, non-sweep identity).
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioRun> {
    run_scenario_at(config, 0)
}

/// Runs a scenario as sweep point `sweep_index`. Frames execute in the
/// ambient rayon pool; outputs are ordered by frame index, never by
/// completion order.
pub fn run_scenario_at(config: &ScenarioConfig, sweep_index: u64) -> Result<ScenarioRun> {
    config.validate()?;
    let resolved = config.resolved_laser()?;
    let dt = config.simulation.time_step_s;
    let frame_count = config.simulation.frame_count;

    let mut frames: Vec<FrameOutput> = (0..frame_count as u64)
        .into_par_iter()
        .map(|frame_index| simulate_frame(config, sweep_index, frame_index))
        .collect::<Result<_>>()?;

    let thresholds: Vec<f64> = frames.iter().map(|f| f.threshold).collect();
    let reference_series = std::mem::replace(
        &mut frames[0].series,
        SampleSeries {
            sampling_period: config.sampling.period_s,
            offset: config.sampling.offset_s,
            values: Vec::new(),
            threshold: None,
        },
    );

    let mut bin1: Option<BitStream> = None;
    let mut bin2: Option<BitStream> = None;
    for (index, frame) in frames.into_iter().enumerate() {
        let slot = if index % 2 == 0 { &mut bin1 } else { &mut bin2 };
        match slot {
            Some(stream) => stream.append(&frame.bits),
            None => *slot = Some(frame.bits),
        }
    }
    let bin1 = bin1.expect("at least one frame");
    let bin2 = bin2.unwrap_or_else(|| BitStream::new(Provenance::Raw));
    let bin3 = if config.extraction.xor_enabled {
        Some(xor_combine(&bin1, &bin2)?)
    } else {
        None
    };

    let analysis = &config.analysis;
    let headline = bin3.as_ref().unwrap_or(&bin1);
    let max_lag = analysis
        .autocorr_max_lag
        .min(bin1.len().saturating_sub(1))
        .max(1);
    let raw_autocorr = autocorrelation(&bin1, max_lag)?;
    let extracted_autocorr = bin3
        .as_ref()
        .map(|bits| autocorrelation(bits, max_lag))
        .transpose()?;

    let spectrum = psd_estimate(
        &reference_series.values,
        reference_series.sample_rate(),
        analysis.psd_segment_length,
        WindowKind::Hann,
    )?;
    let noise_floor_db = noise_floor_density_db(config, sweep_index)?;
    let battery = run_battery(headline, analysis.battery_alpha)?;
    let timing = config.timing_check()?.evaluate()?;
    let analog_min_entropy_bits =
        sample_min_entropy(&reference_series.values, analysis.min_entropy_bins)?;
    let bit_min_entropy_bits = bit_min_entropy(headline)?;

    Ok(ScenarioRun {
        config: config.clone(),
        sweep_index,
        coherence_time_s: resolved.coherence_time,
        requested_delay_s: config.interferometer.delay_s,
        snapped_delay_s: delay_to_steps(config.interferometer.delay_s, dt) as f64 * dt,
        thresholds,
        bin1,
        bin2,
        bin3,
        reference_series,
        raw_autocorr,
        extracted_autocorr,
        spectrum,
        noise_floor_db,
        battery,
        timing,
        analog_min_entropy_bits,
        bit_min_entropy_bits,
    })
}

/// Mean low-band density with the laser blocked: the photodetector sees
/// darkness, so only injected electrical noise flows through the chain.
/// This is the reference level spectra are compared against.
fn noise_floor_density_db(config: &ScenarioConfig, sweep_index: u64) -> Result<f64> {
    let dt = config.simulation.time_step_s;
    let fast = config.fast_detector();
    // The blocked-run noise stream is keyed one frame past the last real
    // frame, so it never collides with any acquisition frame.
    let mut noise = NoiseInjector::new(
        &fast,
        dt,
        stream_rng(
            config.master_seed,
            DOMAIN_NOISE,
            sweep_index,
            config.simulation.frame_count as u64,
        ),
    )?;
    let mut scope = LowPass::new(config.detector.scope_bandwidth_hz, 1.0, dt)?;
    let mut clock = SampleClock::new(config.sampling.period_s, config.sampling.offset_s, dt);

    let target = 4 * config.analysis.psd_segment_length;
    let mut values = Vec::with_capacity(target);
    let mut buf = vec![0.0; STREAM_CHUNK_LEN];
    let mut fine = 0u64;
    while values.len() < target {
        buf.fill(0.0);
        noise.apply(&mut buf);
        scope.apply(&mut buf);
        for (local, &v) in buf.iter().enumerate() {
            if clock.due(fine + local as u64) {
                values.push(v);
                if values.len() == target {
                    break;
                }
            }
        }
        fine += buf.len() as u64;
    }
    let spectrum = psd_estimate(
        &values,
        1.0 / config.sampling.period_s,
        config.analysis.psd_segment_length,
        WindowKind::Hann,
    )?;
    mean_density_db(
        &spectrum,
        config.analysis.low_band_lo_hz,
        config.analysis.low_band_hi_hz,
    )
}

#[derive(Serialize)]
struct FileMeta<'a> {
    name: &'static str,
    bits: usize,
    provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    generation_rate_bits_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold_strategy: Option<&'a str>,
}

#[derive(Serialize)]
struct RunSection<'a> {
    master_seed: u64,
    sweep_index: u64,
    seed_scheme: &'static str,
    coherence_time_s: f64,
    requested_delay_s: f64,
    snapped_delay_s: f64,
    delay_snap_error_s: f64,
    thresholds: &'a [f64],
    files: Vec<FileMeta<'a>>,
}

#[derive(Serialize)]
struct MetadataTail<'a> {
    run: RunSection<'a>,
}

#[derive(Serialize)]
struct SummarySection {
    raw_bits: usize,
    raw_ones_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    extracted_bits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extracted_ones_fraction: Option<f64>,
    max_abs_autocorr_raw: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_abs_autocorr_extracted: Option<f64>,
    analog_min_entropy_bits: f64,
    bit_min_entropy_bits: f64,
    noise_floor_db: f64,
    low_band_density_db: f64,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    summary: SummarySection,
    timing: &'a TimingVerdict,
    battery: &'a TestReport,
}

/// Writes all artifacts of a run into `dir`: the packed bit streams
/// (`bin1.raw`, `bin2.raw`, and `bin3.raw` when extraction ran), the
/// config-plus-provenance sidecar `metadata.toml`, `autocorr.csv` and
/// `psd.csv`, and the analysis `report.toml`. On any failure every file
/// this call created is removed again.
pub fn write_outputs(run: &ScenarioRun, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    match write_outputs_inner(run, dir, &mut written) {
        Ok(()) => Ok(written),
        Err(e) => {
            for path in &written {
                let _ = std::fs::remove_file(path);
            }
            Err(e)
        }
    }
}

fn write_outputs_inner(run: &ScenarioRun, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let create =
        |name: &str, written: &mut Vec<PathBuf>| -> Result<std::io::BufWriter<std::fs::File>> {
            let path = dir.join(name);
            let file = std::fs::File::create(&path)?;
            written.push(path);
            Ok(std::io::BufWriter::new(file))
        };
    use std::io::Write;

    let mut w = create("bin1.raw", written)?;
    run.bin1.write_raw(&mut w)?;
    w.flush()?;
    let mut w = create("bin2.raw", written)?;
    run.bin2.write_raw(&mut w)?;
    w.flush()?;
    if let Some(bin3) = &run.bin3 {
        let mut w = create("bin3.raw", written)?;
        bin3.write_raw(&mut w)?;
        w.flush()?;
    }

    let mut files = vec![
        FileMeta {
            name: "bin1.raw",
            bits: run.bin1.len(),
            provenance: run.bin1.provenance,
            generation_rate_bits_per_s: run.bin1.generation_rate,
            threshold_strategy: Some("per-frame mean"),
        },
        FileMeta {
            name: "bin2.raw",
            bits: run.bin2.len(),
            provenance: run.bin2.provenance,
            generation_rate_bits_per_s: run.bin2.generation_rate,
            threshold_strategy: Some("per-frame mean"),
        },
    ];
    if let Some(bin3) = &run.bin3 {
        files.push(FileMeta {
            name: "bin3.raw",
            bits: bin3.len(),
            provenance: bin3.provenance,
            generation_rate_bits_per_s: bin3.generation_rate,
            threshold_strategy: None,
        });
    }
    let tail = MetadataTail {
        run: RunSection {
            master_seed: run.config.master_seed,
            sweep_index: run.sweep_index,
            seed_scheme: "chained splitmix64 over (master seed, domain, sweep index, frame index)",
            coherence_time_s: run.coherence_time_s,
            requested_delay_s: run.requested_delay_s,
            snapped_delay_s: run.snapped_delay_s,
            delay_snap_error_s: run.snapped_delay_s - run.requested_delay_s,
            thresholds: &run.thresholds,
            files,
        },
    };
    let mut w = create("metadata.toml", written)?;
    w.write_all(run.config.to_toml_string()?.as_bytes())?;
    w.write_all(b"\n")?;
    w.write_all(
        toml::to_string_pretty(&tail)
            .map_err(|e| invalid(format!("metadata serialization failed: {e}")))?
            .as_bytes(),
    )?;
    w.flush()?;

    let headline_autocorr = run
        .extracted_autocorr
        .as_deref()
        .unwrap_or(&run.raw_autocorr);
    let mut w = create("autocorr.csv", written)?;
    write_autocorr_csv(headline_autocorr, &mut w)?;
    w.flush()?;

    let mut w = create("psd.csv", written)?;
    write_psd_csv(&run.spectrum, &mut w)?;
    w.flush()?;

    let summary = SummarySection {
        raw_bits: run.bin1.len() + run.bin2.len(),
        raw_ones_fraction: run.bin1.ones_fraction(),
        extracted_bits: run.bin3.as_ref().map(|b| b.len()),
        extracted_ones_fraction: run.bin3.as_ref().map(|b| b.ones_fraction()),
        max_abs_autocorr_raw: max_abs_autocorrelation(&run.raw_autocorr).0,
        max_abs_autocorr_extracted: run
            .extracted_autocorr
            .as_deref()
            .map(|c| max_abs_autocorrelation(c).0),
        analog_min_entropy_bits: run.analog_min_entropy_bits,
        bit_min_entropy_bits: run.bit_min_entropy_bits,
        noise_floor_db: run.noise_floor_db,
        low_band_density_db: mean_density_db(
            &run.spectrum,
            run.config.analysis.low_band_lo_hz,
            run.config.analysis.low_band_hi_hz,
        )?,
    };
    let report = ReportDoc {
        summary,
        timing: &run.timing,
        battery: &run.battery,
    };
    let mut w = create("report.toml", written)?;
    w.write_all(
        toml::to_string_pretty(&report)
            .map_err(|e| invalid(format!("report serialization failed: {e}")))?
            .as_bytes(),
    )?;
    w.flush()?;
    Ok(())
}

/// Scenario knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Interferometer delay, s.
    Delay,
    /// Laser coherence time, s (replaces any laser model).
    CoherenceTime,
    /// Stabilization residual RMS, rad.
    ControlErrorStd,
    /// Digitizer sampling period, s.
    SamplingPeriod,
    /// Detector white-noise RMS, signal units.
    WhiteNoiseStd,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "delay" => Ok(SweepParameter::Delay),
            "coherence-time" => Ok(SweepParameter::CoherenceTime),
            "control-error-std" => Ok(SweepParameter::ControlErrorStd),
            "sampling-period" => Ok(SweepParameter::SamplingPeriod),
            "white-noise-std" => Ok(SweepParameter::WhiteNoiseStd),
            _ => Err(crate::error::Error::Config(format!(
                "unknown sweep parameter {name:?}; expected delay, coherence-time, \
                 control-error-std, sampling-period, or white-noise-std"
            ))),
        }
    }

    /// CSV column header for the swept value.
    pub fn label(&self) -> &'static str {
        match self {
            SweepParameter::Delay => "delay_s",
            SweepParameter::CoherenceTime => "coherence_time_s",
            SweepParameter::ControlErrorStd => "control_error_std_rad",
            SweepParameter::SamplingPeriod => "sampling_period_s",
            SweepParameter::WhiteNoiseStd => "white_noise_std",
        }
    }

    pub fn apply(&self, config: &mut ScenarioConfig, value: f64) -> Result<()> {
        match self {
            SweepParameter::Delay => config.interferometer.delay_s = value,
            SweepParameter::CoherenceTime => {
                config.laser = crate::config::LaserSection {
                    coherence_time_s: Some(value),
                    model: None,
                }
            }
            SweepParameter::ControlErrorStd => config.interferometer.control_error_std_rad = value,
            SweepParameter::SamplingPeriod => config.sampling.period_s = value,
            SweepParameter::WhiteNoiseStd => config.detector.white_noise_std = value,
        }
        config.validate()
    }
}

/// One evaluated sweep point.
pub struct SweepPoint {
    pub value: f64,
    pub run: ScenarioRun,
}

impl SweepPoint {
    /// Aggregate line for the sweep CSV.
    pub fn row(&self) -> (f64, f64, f64, f64, f64, f64) {
        let headline_autocorr = self
            .run
            .extracted_autocorr
            .as_deref()
            .unwrap_or(&self.run.raw_autocorr);
        let low_band = mean_density_db(
            &self.run.spectrum,
            self.run.config.analysis.low_band_lo_hz,
            self.run.config.analysis.low_band_hi_hz,
        )
        .unwrap_or(f64::NAN);
        (
            self.value,
            self.run.headline().bias(),
            max_abs_autocorrelation(headline_autocorr).0,
            self.run.battery_pass_rate(),
            self.run.bit_min_entropy_bits,
            low_band,
        )
    }
}

/// Runs the scenario once per value of the swept parameter. Point `k` uses
/// sweep index `k`, so a single-point sweep at the base value reproduces the
/// plain run bit for bit.
pub fn sweep_scenario(
    base: &ScenarioConfig,
    parameter: SweepParameter,
    values: &[f64],
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(invalid("a sweep needs at least one value"));
    }
    values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            let mut config = base.clone();
            parameter.apply(&mut config, value)?;
            let run = run_scenario_at(&config, index as u64)?;
            Ok(SweepPoint { value, run })
        })
        .collect()
}

/// Writes the aggregated sweep table as CSV.
pub fn write_sweep_csv(
    parameter: SweepParameter,
    points: &[SweepPoint],
    writer: &mut impl std::io::Write,
) -> Result<()> {
    writeln!(
        writer,
        "{},bias,max_abs_autocorr,battery_pass_rate,min_entropy_bits,low_band_density_db",
        parameter.label()
    )?;
    for point in points {
        let (value, bias, max_ac, pass_rate, min_entropy, low_band) = point.row();
        writeln!(
            writer,
            "{value},{bias},{max_ac},{pass_rate},{min_entropy},{low_band}"
        )?;
    }
    Ok(())
}
