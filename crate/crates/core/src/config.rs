//! Scenario configuration: the TOML schema that drives a full run.
//!
//! Every duration, frequency, and angle field carries its unit as a name
//! suffix. All sections have defaults describing the reference scenario —
//! a 30 MHz-linewidth laser on a 650 ps-delay stabilized interferometer,
//! detected at 5 GHz, digitized at 1 GS/s on a 3 GHz front end, two frames
//! of 10^7 samples XORed into one extracted stream — so an empty file is a
//! valid configuration.

use crate::analysis::timing::{TimingCheck, TimingMode};
use crate::detection::{DetectorConfig, SpectralSpike};
use crate::error::{Error, Result};
use crate::interferometer::MziConfig;
use crate::laser::{
    coherence_time, total_linewidth, LinewidthModel, OperatingPoint, TotalLinewidth, LIGHT_SPEED,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    /// Master seed; every random stream in the run is derived from it.
    /// Kept within i64 range so the value survives a TOML round trip.
    pub master_seed: u64,
    pub simulation: SimulationSection,
    pub laser: LaserSection,
    pub interferometer: InterferometerSection,
    pub detector: DetectorSection,
    pub sampling: SamplingSection,
    pub extraction: ExtractionSection,
    pub analysis: AnalysisSection,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            master_seed: 42,
            simulation: SimulationSection::default(),
            laser: LaserSection::default(),
            interferometer: InterferometerSection::default(),
            detector: DetectorSection::default(),
            sampling: SamplingSection::default(),
            extraction: ExtractionSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSection {
    /// Integration step of the analog chain, s. Must resolve the fastest
    /// detector stage (at most half its response time).
    pub time_step_s: f64,
    /// Independent acquisition frames. Even frames feed the first raw
    /// stream, odd frames the second.
    pub frame_count: usize,
    /// Digitized samples per frame.
    pub frame_length: usize,
    /// Upper bound on the estimated peak memory of a run.
    pub memory_budget_bytes: u64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            time_step_s: 50e-12,
            frame_count: 2,
            frame_length: 10_000_000,
            memory_budget_bytes: 2 << 30,
        }
    }
}

// No container-level serde default: a `[laser]` table that names only one
// of the two fields must leave the other `None` rather than inherit the
// default model alongside an explicit coherence time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserSection {
    /// Coherence time given directly, s. Mutually exclusive with `model`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherence_time_s: Option<f64>,
    /// Physical linewidth model; the coherence time is derived from it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<LaserModelSection>,
}

impl Default for LaserSection {
    fn default() -> Self {
        LaserSection {
            coherence_time_s: None,
            model: Some(LaserModelSection::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaserModelSection {
    /// Optical output power at the operating point, W.
    pub output_power_w: f64,
    /// Free-form annotation for the operating point.
    pub label: String,
    /// Cavity and material parameters of the linewidth formula.
    pub physics: LinewidthModel,
}

impl Default for LaserModelSection {
    fn default() -> Self {
        let op = OperatingPoint::low_power();
        LaserModelSection {
            output_power_w: op.output_power,
            label: op.label,
            physics: LinewidthModel::default(),
        }
    }
}

/// Laser parameters after resolving the section into a single timescale.
#[derive(Debug, Clone)]
pub struct ResolvedLaser {
    /// Coherence time, s.
    pub coherence_time: f64,
    /// Linewidth decomposition, present when derived from the model.
    pub linewidth: Option<TotalLinewidth>,
}

impl LaserSection {
    pub fn resolve(&self) -> Result<ResolvedLaser> {
        match (self.coherence_time_s, &self.model) {
            (Some(tc), None) => {
                if !(tc > 0.0) || !tc.is_finite() {
                    return Err(Error::Config(format!(
                        "laser.coherence_time_s must be positive and finite, got {tc}"
                    )));
                }
                Ok(ResolvedLaser {
                    coherence_time: tc,
                    linewidth: None,
                })
            }
            (None, Some(section)) => {
                let op = OperatingPoint::new(section.output_power_w, section.label.clone())?;
                let lw = total_linewidth(&section.physics, &op)?;
                Ok(ResolvedLaser {
                    coherence_time: coherence_time(lw.total)?,
                    linewidth: Some(lw),
                })
            }
            (Some(_), Some(_)) => Err(Error::Config(
                "give either laser.coherence_time_s or a [laser.model] section, not both".into(),
            )),
            (None, None) => Err(Error::Config(
                "the laser needs coherence_time_s or a [laser.model] section".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterferometerSection {
    /// Differential arm delay T_d, s.
    pub delay_s: f64,
    /// Vacuum wavelength of the carrier, m; sets the static bias phase.
    pub optical_wavelength_m: f64,
    /// Interference visibility in [0, 1].
    pub visibility: f64,
    /// DC background of the output, signal units.
    pub dc_background: f64,
    /// Hold the bias at quadrature with the feedback loop.
    pub stabilization_enabled: bool,
    /// Quadrature order m of the setpoint 2*m*pi + pi/2.
    pub setpoint_index: i32,
    /// RMS residual of the stabilization loop, rad.
    pub control_error_std_rad: f64,
    /// RMS ambient bias drift accumulated over one drift timescale, rad.
    pub drift_amplitude_rad: f64,
    /// Timescale the drift amplitude refers to, s.
    pub drift_timescale_s: f64,
}

impl Default for InterferometerSection {
    fn default() -> Self {
        InterferometerSection {
            delay_s: 650e-12,
            optical_wavelength_m: 1.55e-6,
            visibility: 0.95,
            dc_background: 0.5,
            stabilization_enabled: true,
            setpoint_index: 0,
            control_error_std_rad: 0.01,
            drift_amplitude_rad: 1.0,
            drift_timescale_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSection {
    /// Photodetector -3 dB bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Photodetector DC gain.
    pub gain: f64,
    /// RMS of the white electrical noise added after the photodetector.
    pub white_noise_std: f64,
    /// Digitizer front-end -3 dB bandwidth, Hz.
    pub scope_bandwidth_hz: f64,
    /// Slow monitor channel bandwidth, Hz (bias stabilization tap).
    pub monitor_bandwidth_hz: f64,
    /// Monitor channel sampling rate, Hz; sets the feedback cadence.
    pub monitor_sample_rate_hz: f64,
    /// Narrowband electrical pickup lines.
    pub spikes: Vec<SpikeSection>,
}

impl Default for DetectorSection {
    fn default() -> Self {
        DetectorSection {
            bandwidth_hz: 5e9,
            gain: 1.0,
            white_noise_std: 0.02,
            scope_bandwidth_hz: 3e9,
            monitor_bandwidth_hz: 1e6,
            monitor_sample_rate_hz: 2e6,
            // Placeholder pickup lines; frequencies and strengths are
            // deliberately configurable and carry no special meaning.
            spikes: vec![
                SpikeSection {
                    frequency_hz: 50e6,
                    amplitude: 0.010,
                    phase_rad: 0.0,
                },
                SpikeSection {
                    frequency_hz: 210e6,
                    amplitude: 0.008,
                    phase_rad: 1.0,
                },
                SpikeSection {
                    frequency_hz: 870e6,
                    amplitude: 0.006,
                    phase_rad: 2.0,
                },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpikeSection {
    pub frequency_hz: f64,
    /// Peak amplitude, signal units.
    pub amplitude: f64,
    pub phase_rad: f64,
}

impl Default for SpikeSection {
    fn default() -> Self {
        SpikeSection {
            frequency_hz: 50e6,
            amplitude: 0.0,
            phase_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingSection {
    /// Sampling period T_S of the fast digitizer, s.
    pub period_s: f64,
    /// Offset of the first sample from the frame start, s.
    pub offset_s: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection {
            period_s: 1e-9,
            offset_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionSection {
    /// XOR pairs of raw frames into an extracted stream.
    pub xor_enabled: bool,
}

impl Default for ExtractionSection {
    fn default() -> Self {
        ExtractionSection { xor_enabled: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisSection {
    /// Largest autocorrelation lag, bits.
    pub autocorr_max_lag: usize,
    /// Welch segment length, samples; even, at least 8.
    pub psd_segment_length: usize,
    /// Significance level of the randomness battery.
    pub battery_alpha: f64,
    /// How many times larger "much larger" must be in the timing check.
    pub timing_dominance_factor: f64,
    /// Histogram bins for the analog min-entropy estimate.
    pub min_entropy_bins: usize,
    /// Low-frequency band used for reporting the mean spectral density, Hz.
    pub low_band_lo_hz: f64,
    pub low_band_hi_hz: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            autocorr_max_lag: 100,
            psd_segment_length: 4096,
            battery_alpha: 0.01,
            timing_dominance_factor: 10.0,
            min_entropy_bins: 256,
            low_band_lo_hz: 1e6,
            low_band_hi_hz: 1e8,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Laser parameters resolved to a coherence time.
    pub fn resolved_laser(&self) -> Result<ResolvedLaser> {
        self.laser.resolve()
    }

    pub fn mzi_config(&self) -> MziConfig {
        let i = &self.interferometer;
        MziConfig {
            delay: i.delay_s,
            optical_angular_frequency: 2.0 * std::f64::consts::PI * LIGHT_SPEED
                / i.optical_wavelength_m,
            visibility: i.visibility,
            dc_background: i.dc_background,
            stabilization_enabled: i.stabilization_enabled,
            setpoint_index: i.setpoint_index,
            control_error_std: i.control_error_std_rad,
            drift_amplitude: i.drift_amplitude_rad,
            drift_timescale: i.drift_timescale_s,
        }
    }

    /// Photodetector stage, carrying the electrical noise and pickup lines.
    pub fn fast_detector(&self) -> DetectorConfig {
        let d = &self.detector;
        DetectorConfig {
            bandwidth: d.bandwidth_hz,
            gain: d.gain,
            white_noise_std: d.white_noise_std,
            spikes: d
                .spikes
                .iter()
                .map(|s| SpectralSpike {
                    frequency: s.frequency_hz,
                    amplitude: s.amplitude,
                    phase: s.phase_rad,
                })
                .collect(),
        }
    }

    /// Digitizer front-end stage; band-limits signal and detector noise alike.
    pub fn scope_detector(&self) -> DetectorConfig {
        DetectorConfig::noiseless(self.detector.scope_bandwidth_hz)
    }

    /// Timing check for this scenario. The response time is the slowest
    /// stage's, which is what limits sample-to-sample refresh.
    pub fn timing_check(&self) -> Result<TimingCheck> {
        let resolved = self.resolved_laser()?;
        let slowest = self
            .detector
            .bandwidth_hz
            .min(self.detector.scope_bandwidth_hz);
        Ok(TimingCheck {
            mode: if self.interferometer.stabilization_enabled {
                TimingMode::Stabilized
            } else {
                TimingMode::Unstabilized
            },
            coherence_time: resolved.coherence_time,
            delay: self.interferometer.delay_s,
            sampling_period: self.sampling.period_s,
            response_time: 1.0 / slowest,
            dominance_factor: self.analysis.timing_dominance_factor,
        })
    }

    /// Estimated peak memory of a run.
    ///
    /// Per frame, the retained allocations are the f64 sample buffer and the
    /// packed raw bits, plus the fixed streaming chunk buffers; frames run
    /// concurrently so all count at once. The combined streams and the
    /// analysis working set (unpacked bits plus their signed mapping) come
    /// on top.
    pub fn estimated_memory_bytes(&self) -> u64 {
        let frame_len = self.simulation.frame_length as u64;
        let frames = self.simulation.frame_count as u64;
        let per_frame =
            frame_len * 8 + frame_len / 8 + (crate::pipeline::STREAM_CHUNK_LEN as u64) * 8 * 6;
        frames * per_frame + 3 * (frame_len / 8) + frame_len * 2
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));

        if self.master_seed > i64::MAX as u64 {
            return err(format!(
                "master_seed {} exceeds {}; larger seeds do not survive the TOML round trip",
                self.master_seed,
                i64::MAX
            ));
        }

        let sim = &self.simulation;
        let dt = sim.time_step_s;
        if !(dt > 0.0) || !dt.is_finite() {
            return err(format!(
                "simulation.time_step_s must be positive and finite, got {dt}"
            ));
        }
        if sim.frame_count == 0 {
            return err("simulation.frame_count must be at least 1".into());
        }
        if sim.frame_length < 2 {
            return err("simulation.frame_length must be at least 2".into());
        }

        self.resolved_laser()?;

        let mzi = self.mzi_config();
        mzi.validate()?;
        if !(self.interferometer.optical_wavelength_m > 0.0) {
            return err("interferometer.optical_wavelength_m must be positive".into());
        }
        if crate::laser::delay_to_steps(mzi.delay, dt) == 0 {
            return err(format!(
                "interferometer.delay_s = {} rounds to zero steps of {dt} s; \
                 refine simulation.time_step_s",
                mzi.delay
            ));
        }

        let det = &self.detector;
        self.fast_detector().validate()?;
        self.scope_detector().validate()?;
        let fastest = det.bandwidth_hz.max(det.scope_bandwidth_hz);
        if dt > 0.5 / fastest {
            return err(format!(
                "simulation.time_step_s = {dt} is too coarse for the {fastest} Hz stage; \
                 need at most {}",
                0.5 / fastest
            ));
        }
        if !(det.monitor_bandwidth_hz > 0.0) || !(det.monitor_sample_rate_hz > 0.0) {
            return err("monitor bandwidth and sample rate must be positive".into());
        }
        if det.monitor_sample_rate_hz < 2.0 * det.monitor_bandwidth_hz {
            return err(format!(
                "detector.monitor_sample_rate_hz = {} undersamples the {} Hz monitor channel",
                det.monitor_sample_rate_hz, det.monitor_bandwidth_hz
            ));
        }
        if self.interferometer.stabilization_enabled && 1.0 / det.monitor_sample_rate_hz < dt {
            return err(format!(
                "monitor sample rate {} Hz is faster than the simulation step",
                det.monitor_sample_rate_hz
            ));
        }
        for spike in &det.spikes {
            if spike.frequency_hz >= 0.5 / dt {
                return err(format!(
                    "spike at {} Hz is above the simulation Nyquist frequency {}",
                    spike.frequency_hz,
                    0.5 / dt
                ));
            }
        }

        let smp = &self.sampling;
        if !(smp.period_s >= dt) || !smp.period_s.is_finite() {
            return err(format!(
                "sampling.period_s = {} must be finite and at least the time step {dt}",
                smp.period_s
            ));
        }
        if !(smp.offset_s >= 0.0) || !smp.offset_s.is_finite() {
            return err("sampling.offset_s must be >= 0 and finite".into());
        }

        if self.extraction.xor_enabled && !sim.frame_count.is_multiple_of(2) {
            return err(format!(
                "xor extraction pairs frames: frame_count must be even, got {}",
                sim.frame_count
            ));
        }

        let ana = &self.analysis;
        if ana.autocorr_max_lag == 0 {
            return err("analysis.autocorr_max_lag must be at least 1".into());
        }
        if ana.psd_segment_length < 8 || !ana.psd_segment_length.is_multiple_of(2) {
            return err("analysis.psd_segment_length must be even and at least 8".into());
        }
        if !(ana.battery_alpha > 0.0 && ana.battery_alpha < 1.0) {
            return err(format!(
                "analysis.battery_alpha must be in (0, 1), got {}",
                ana.battery_alpha
            ));
        }
        if !(ana.timing_dominance_factor >= 1.0) {
            return err("analysis.timing_dominance_factor must be >= 1".into());
        }
        if ana.min_entropy_bins < 2 {
            return err("analysis.min_entropy_bins must be at least 2".into());
        }
        if !(ana.low_band_lo_hz >= 0.0) || !(ana.low_band_hi_hz > ana.low_band_lo_hz) {
            return err("analysis low band must satisfy 0 <= lo < hi".into());
        }

        let estimated = self.estimated_memory_bytes();
        if estimated > sim.memory_budget_bytes {
            return err(format!(
                "estimated peak memory {estimated} bytes exceeds the budget {} bytes; \
                 shrink frame_length or frame_count, or raise the budget",
                sim.memory_budget_bytes
            ));
        }
        Ok(())
    }
}
