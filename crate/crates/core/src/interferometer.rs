//! Imbalanced Mach-Zehnder interferometer with optional active phase
//! stabilization.
//!
//! The long arm delays the field by `delay`, so the output intensity reads
//! out the phase difference accumulated over that window:
//!
//! ```text
//! S(t) = dc + visibility * cos(bias(t) + dphi(t))
//! ```
//!
//! where `dphi(t) = theta(t) - theta(t + delay)`. Unstabilized, the bias is
//! the static `omega0 * delay` plus slow ambient drift. Stabilized, a
//! controller pins it at a quadrature point `2 m pi + pi / 2`, where the
//! signal is `dc - visibility * sin(dphi)` and maximally sensitive to the
//! phase noise.

use crate::error::{invalid, Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Where in the chain a trace was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceOrigin {
    /// Raw interferometer output.
    Interferometer,
    /// After a detector low-pass stage.
    DetectorFiltered,
    /// After electrical noise injection.
    DetectorNoisy,
}

/// Uniformly sampled analog signal at simulation resolution.
#[derive(Debug, Clone)]
pub struct SignalTrace {
    /// Simulation step, s.
    pub time_step: f64,
    pub values: Vec<f64>,
    pub origin: TraceOrigin,
}

impl SignalTrace {
    /// Time span covered by the trace, s.
    pub fn span(&self) -> f64 {
        (self.values.len().saturating_sub(1)) as f64 * self.time_step
    }
}

/// Interferometer geometry, bias behaviour, and stabilization knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct MziConfig {
    /// Differential delay between the arms, s.
    pub delay: f64,
    /// Optical angular frequency omega0, rad/s. Only its value modulo
    /// 2*pi/delay matters for the static bias.
    pub optical_angular_frequency: f64,
    /// Interference visibility in [0, 1].
    pub visibility: f64,
    /// DC background level of the output, arbitrary units.
    pub dc_background: f64,
    pub stabilization_enabled: bool,
    /// Quadrature order m: setpoint is 2*m*pi + pi/2.
    pub setpoint_index: i32,
    /// RMS residual of the stabilization loop, rad.
    pub control_error_std: f64,
    /// RMS ambient drift accumulated over one drift timescale, rad.
    pub drift_amplitude: f64,
    /// Timescale the drift amplitude refers to, s.
    pub drift_timescale: f64,
}

impl MziConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delay > 0.0) || !self.delay.is_finite() {
            return Err(invalid("delay must be positive and finite"));
        }
        if !(self.optical_angular_frequency > 0.0) {
            return Err(invalid("optical angular frequency must be positive"));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(invalid("visibility must lie in [0, 1]"));
        }
        if !self.dc_background.is_finite() {
            return Err(invalid("dc background must be finite"));
        }
        if !(self.control_error_std >= 0.0) {
            return Err(invalid("control error std must be >= 0"));
        }
        if !(self.drift_amplitude >= 0.0) || !(self.drift_timescale > 0.0) {
            return Err(invalid("drift amplitude must be >= 0 and timescale > 0"));
        }
        Ok(())
    }

    /// Delay for a fiber path imbalance: `delay = n * length / c`.
    pub fn delay_from_path_imbalance(refractive_index: f64, length: f64) -> Result<f64> {
        if !(refractive_index >= 1.0) || !(length > 0.0) {
            return Err(invalid("need refractive index >= 1 and positive length"));
        }
        Ok(refractive_index * length / crate::laser::LIGHT_SPEED)
    }

    /// Static bias `omega0 * delay`, reduced modulo 2*pi.
    pub fn static_bias(&self) -> f64 {
        (self.optical_angular_frequency * self.delay).rem_euclid(2.0 * std::f64::consts::PI)
    }

    /// Stabilization setpoint `2 m pi + pi / 2`, rad.
    pub fn setpoint(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.setpoint_index as f64 + std::f64::consts::FRAC_PI_2
    }
}

/// Computes the interferometer output for a phase-difference sequence and a
/// bias path of equal length.
pub fn interference_signal(
    dphase: &[f64],
    cfg: &MziConfig,
    bias: &[f64],
    time_step: f64,
) -> Result<SignalTrace> {
    cfg.validate()?;
    if dphase.len() != bias.len() {
        return Err(Error::LengthMismatch {
            context: "interference_signal",
            left: dphase.len(),
            right: bias.len(),
        });
    }
    if !(time_step > 0.0) {
        return Err(invalid("time step must be positive"));
    }
    let mut values = vec![0.0; dphase.len()];
    interference_into(dphase, cfg, bias, &mut values);
    Ok(SignalTrace {
        time_step,
        values,
        origin: TraceOrigin::Interferometer,
    })
}

/// In-place kernel shared with the streaming pipeline.
/// All three slices must have equal length.
pub fn interference_into(dphase: &[f64], cfg: &MziConfig, bias: &[f64], out: &mut [f64]) {
    for ((s, &d), &b) in out.iter_mut().zip(dphase).zip(bias) {
        *s = cfg.dc_background + cfg.visibility * (b + d).cos();
    }
}

/// Streaming random-walk generator for the ambient bias drift.
///
/// Step variance is `drift_amplitude^2 * time_step / drift_timescale`, so the
/// walk reaches the configured amplitude after one timescale.
#[derive(Debug, Clone)]
pub struct DriftWalker {
    step_std: f64,
    value: f64,
    rng: ChaCha8Rng,
}

impl DriftWalker {
    pub fn new(cfg: &MziConfig, time_step: f64, rng: ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        if !(time_step > 0.0) {
            return Err(invalid("time step must be positive"));
        }
        Ok(DriftWalker {
            step_std: cfg.drift_amplitude * (time_step / cfg.drift_timescale).sqrt(),
            value: 0.0,
            rng,
        })
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for slot in out {
            let step: f64 = self.rng.sample(StandardNormal);
            self.value += self.step_std * step;
            *slot = self.value;
        }
    }
}

/// Ambient drift path of `count` values starting near zero.
pub fn ambient_drift(
    cfg: &MziConfig,
    count: usize,
    time_step: f64,
    rng: ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut walker = DriftWalker::new(cfg, time_step, rng)?;
    let mut out = vec![0.0; count];
    walker.fill(&mut out);
    Ok(out)
}

/// Idealized stabilization loop.
///
/// At every monitor update the controller re-centers the bias on the
/// setpoint, leaving a Gaussian residual with `control_error_std` RMS.
/// Between updates the residual follows the ambient drift. The loop is a
/// setpoint clamp: it needs only the monitor cadence, not the monitor
/// values, because the residual knob already models the whole loop error.
#[derive(Debug, Clone)]
pub struct BiasController {
    setpoint: f64,
    error_std: f64,
    update_steps: usize,
    /// Steps until the next correction; starts at 0 so the first sample is locked.
    countdown: usize,
    correction: f64,
    rng: ChaCha8Rng,
}

impl BiasController {
    pub fn new(
        cfg: &MziConfig,
        monitor_period: f64,
        time_step: f64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        cfg.validate()?;
        if !cfg.stabilization_enabled {
            return Err(Error::ContractViolation(
                "stabilized bias requested with stabilization disabled".into(),
            ));
        }
        if !(monitor_period > 0.0) || !(time_step > 0.0) {
            return Err(invalid("monitor period and time step must be positive"));
        }
        let update_steps = (monitor_period / time_step).round().max(1.0) as usize;
        Ok(BiasController {
            setpoint: cfg.setpoint(),
            error_std: cfg.control_error_std,
            update_steps,
            countdown: 0,
            correction: 0.0,
            rng,
        })
    }

    /// Steps between controller updates at simulation resolution.
    pub fn update_steps(&self) -> usize {
        self.update_steps
    }

    /// Converts a drift chunk into the stabilized bias path.
    pub fn fill(&mut self, drift: &[f64], out: &mut [f64]) {
        for (slot, &d) in out.iter_mut().zip(drift) {
            if self.countdown == 0 {
                let residual: f64 = self.rng.sample(StandardNormal);
                self.correction = self.setpoint + self.error_std * residual - d;
                self.countdown = self.update_steps;
            }
            self.countdown -= 1;
            *slot = d + self.correction;
        }
    }
}

/// Bias path held at the quadrature setpoint by the idealized controller.
///
/// `monitor_period` is the slow-channel sampling period that sets the
/// correction cadence.
pub fn stabilized_bias(
    drift: &[f64],
    cfg: &MziConfig,
    monitor_period: f64,
    time_step: f64,
    rng: ChaCha8Rng,
) -> Result<Vec<f64>> {
    let mut controller = BiasController::new(cfg, monitor_period, time_step, rng)?;
    let mut out = vec![0.0; drift.len()];
    controller.fill(drift, &mut out);
    Ok(out)
}

/// Unstabilized bias path: static term plus ambient drift, in place.
pub fn unstabilized_bias_into(cfg: &MziConfig, drift: &[f64], out: &mut [f64]) {
    let base = cfg.static_bias();
    for (slot, &d) in out.iter_mut().zip(drift) {
        *slot = base + d;
    }
}
