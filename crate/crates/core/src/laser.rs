//! Semiconductor laser model: linewidth, coherence time, and the Wiener
//! phase path that drives everything downstream.
//!
//! The quantum (spontaneous-emission) linewidth scales inversely with output
//! power, while technical noise sets a power-independent floor. Working at
//! low power therefore makes the quantum contribution dominate, which is the
//! whole point of this entropy source.

use crate::error::{invalid, Error, Result};
use crate::seed::{stream_rng, DOMAIN_PHASE};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Vacuum speed of light, m/s.
pub const LIGHT_SPEED: f64 = 2.997_924_58e8;

/// Physical parameters of the Schawlow-Townes-Henry linewidth.
///
/// `quantum_linewidth` evaluates
///
/// ```text
/// df = vg^2 * h*nu * g * n_sp * (g - a_L) * (1 + alpha^2) / (8 pi P0)
/// ```
///
/// with the mirror loss taken as gain minus waveguide loss. All fields are
/// public so a calibration can override any of them.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LinewidthModel {
    /// Group velocity in the cavity, m/s.
    pub group_velocity: f64,
    /// Photon energy h*nu, J.
    pub photon_energy: f64,
    /// Modal gain, 1/m.
    pub gain: f64,
    /// Spontaneous emission (population inversion) factor, dimensionless.
    pub spontaneous_emission_factor: f64,
    /// Waveguide loss, 1/m. Mirror loss is `gain - waveguide_loss`.
    pub waveguide_loss: f64,
    /// Henry linewidth enhancement factor alpha, dimensionless.
    pub henry_alpha: f64,
    /// Power-independent technical linewidth added to the quantum part, Hz.
    pub classical_linewidth_floor: f64,
}

impl LinewidthModel {
    /// 1550 nm DFB profile with the spontaneous-emission factor solved so
    /// that the quantum linewidth equals `target_hz` at `power_w`.
    pub fn calibrated(target_hz: f64, power_w: f64, floor_hz: f64) -> Result<Self> {
        if !(target_hz > 0.0) || !(power_w > 0.0) {
            return Err(invalid("calibration target and power must be positive"));
        }
        if !(floor_hz >= 0.0) {
            return Err(invalid("classical linewidth floor must be >= 0"));
        }
        let mut model = LinewidthModel {
            group_velocity: LIGHT_SPEED / 3.6,
            photon_energy: PLANCK * LIGHT_SPEED / 1.55e-6,
            gain: 4000.0,
            spontaneous_emission_factor: 1.0,
            waveguide_loss: 2000.0,
            henry_alpha: 5.0,
            classical_linewidth_floor: floor_hz,
        };
        let at_unity =
            quantum_linewidth(&model, &OperatingPoint::new(power_w, "calibration point")?)?;
        model.spontaneous_emission_factor = target_hz / at_unity;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("group_velocity", self.group_velocity),
            ("photon_energy", self.photon_energy),
            ("gain", self.gain),
            (
                "spontaneous_emission_factor",
                self.spontaneous_emission_factor,
            ),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive and finite")));
            }
        }
        if !(self.waveguide_loss >= 0.0) {
            return Err(invalid("waveguide_loss must be >= 0"));
        }
        if self.gain <= self.waveguide_loss {
            return Err(invalid(format!(
                "gain ({} 1/m) must exceed waveguide loss ({} 1/m) for a lasing mode",
                self.gain, self.waveguide_loss
            )));
        }
        if !(self.henry_alpha >= 0.0) || !(self.classical_linewidth_floor >= 0.0) {
            return Err(invalid(
                "henry_alpha and classical_linewidth_floor must be >= 0",
            ));
        }
        Ok(())
    }
}

impl Default for LinewidthModel {
    /// Calibrated so the quantum linewidth is 29 MHz at 0.5 mW; with the
    /// 1 MHz floor the total at that point is 30 MHz (coherence time 10.6 ns).
    fn default() -> Self {
        LinewidthModel::calibrated(29e6, 5e-4, 1e6).expect("default calibration is valid")
    }
}

/// One point on the laser's light-current curve.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OperatingPoint {
    /// Optical output power, W.
    pub output_power: f64,
    /// Free-form label, e.g. the drive current it corresponds to.
    pub label: String,
}

impl OperatingPoint {
    pub fn new(output_power: f64, label: impl Into<String>) -> Result<Self> {
        if !(output_power > 0.0) || !output_power.is_finite() {
            return Err(invalid("output power must be positive and finite"));
        }
        Ok(OperatingPoint {
            output_power,
            label: label.into(),
        })
    }

    /// Default low-power point of the calibrated model.
    pub fn low_power() -> Self {
        OperatingPoint::new(5e-4, "I = 12 mA").unwrap()
    }
}

/// Spontaneous-emission linewidth at an operating point, Hz.
pub fn quantum_linewidth(model: &LinewidthModel, op: &OperatingPoint) -> Result<f64> {
    model.validate()?;
    let mirror_loss = model.gain - model.waveguide_loss;
    let numerator = model.group_velocity.powi(2)
        * model.photon_energy
        * model.gain
        * model.spontaneous_emission_factor
        * mirror_loss
        * (1.0 + model.henry_alpha.powi(2));
    Ok(numerator / (8.0 * std::f64::consts::PI * op.output_power))
}

/// Quantum linewidth plus the classical floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalLinewidth {
    pub total: f64,
    pub quantum: f64,
    pub classical_floor: f64,
}

impl TotalLinewidth {
    /// Fraction of the total linewidth that is of quantum origin.
    pub fn quantum_fraction(&self) -> f64 {
        self.quantum / self.total
    }
}

pub fn total_linewidth(model: &LinewidthModel, op: &OperatingPoint) -> Result<TotalLinewidth> {
    let quantum = quantum_linewidth(model, op)?;
    Ok(TotalLinewidth {
        total: quantum + model.classical_linewidth_floor,
        quantum,
        classical_floor: model.classical_linewidth_floor,
    })
}

/// Coherence time of a Lorentzian line: 1 / (pi * linewidth). Seconds.
pub fn coherence_time(linewidth_hz: f64) -> Result<f64> {
    if !(linewidth_hz > 0.0) || !linewidth_hz.is_finite() {
        return Err(invalid("linewidth must be positive and finite"));
    }
    Ok(1.0 / (std::f64::consts::PI * linewidth_hz))
}

/// Discretized Wiener phase path theta(t_i).
///
/// Increments are independent Gaussians with variance `2 * dt / tau_c`, which
/// makes the phase difference across any window of length T have variance
/// `2 * T / tau_c`.
#[derive(Debug, Clone)]
pub struct PhasePath {
    /// Simulation step, s.
    pub time_step: f64,
    /// Phase values, rad. Starts at 0; only differences carry meaning.
    pub values: Vec<f64>,
    /// Coherence time used to generate the path, s.
    pub coherence_time: f64,
    /// Master seed the path was derived from.
    pub seed: u64,
}

impl PhasePath {
    /// Time span covered by the path, s.
    pub fn span(&self) -> f64 {
        (self.values.len().saturating_sub(1)) as f64 * self.time_step
    }
}

/// Streaming generator behind `simulate_phase_path`. The pipeline uses it
/// directly so a frame never has to hold its full trace in memory.
#[derive(Debug, Clone)]
pub struct PhaseWalker {
    sigma: f64,
    last: f64,
    rng: ChaCha8Rng,
}

impl PhaseWalker {
    pub fn new(coherence_time: f64, time_step: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(coherence_time > 0.0) || !coherence_time.is_finite() {
            return Err(invalid("coherence time must be positive and finite"));
        }
        if !(time_step > 0.0) || !time_step.is_finite() {
            return Err(invalid("time step must be positive and finite"));
        }
        Ok(PhaseWalker {
            sigma: (2.0 * time_step / coherence_time).sqrt(),
            last: 0.0,
            rng,
        })
    }

    /// Current phase value, rad.
    pub fn current(&self) -> f64 {
        self.last
    }

    /// Fills `out` with the next consecutive phase values.
    pub fn fill(&mut self, out: &mut [f64]) {
        for slot in out {
            let step: f64 = self.rng.sample(StandardNormal);
            self.last += self.sigma * step;
            *slot = self.last;
        }
    }
}

/// Simulates `count` phase values at `time_step` resolution.
pub fn simulate_phase_path(
    coherence_time: f64,
    time_step: f64,
    count: usize,
    seed: u64,
) -> Result<PhasePath> {
    if count < 2 {
        return Err(invalid("a phase path needs at least 2 samples"));
    }
    let mut walker = PhaseWalker::new(
        coherence_time,
        time_step,
        stream_rng(seed, DOMAIN_PHASE, 0, 0),
    )?;
    let mut values = vec![0.0; count];
    walker.fill(&mut values[1..]);
    Ok(PhasePath {
        time_step,
        values,
        coherence_time,
        seed,
    })
}

/// Phase difference sequence delta(t_i) = theta(t_i) - theta(t_i + T_d).
///
/// The delay is snapped to the nearest integer number of steps; the snap is
/// recorded so callers can surface it in run metadata.
#[derive(Debug, Clone)]
pub struct PhaseDifference {
    pub values: Vec<f64>,
    /// Delay actually applied, in steps.
    pub delay_steps: usize,
    /// Delay requested by the caller, s.
    pub requested_delay: f64,
    /// `delay_steps * time_step`, s.
    pub snapped_delay: f64,
}

impl PhaseDifference {
    /// Signed snap error, s.
    pub fn snap_error(&self) -> f64 {
        self.snapped_delay - self.requested_delay
    }
}

/// Rounds a delay to simulation steps.
pub fn delay_to_steps(delay: f64, time_step: f64) -> usize {
    (delay / time_step).round() as usize
}

pub fn delayed_phase_difference(path: &PhasePath, delay: f64) -> Result<PhaseDifference> {
    if !(delay >= 0.0) || !delay.is_finite() {
        return Err(invalid("delay must be >= 0 and finite"));
    }
    if delay > path.span() {
        return Err(invalid(format!(
            "delay {:.3e} s exceeds path span {:.3e} s",
            delay,
            path.span()
        )));
    }
    let k = delay_to_steps(delay, path.time_step);
    let n = path.values.len() - k;
    let mut values = vec![0.0; n];
    delayed_difference_into(&path.values, k, &mut values)?;
    Ok(PhaseDifference {
        values,
        delay_steps: k,
        requested_delay: delay,
        snapped_delay: k as f64 * path.time_step,
    })
}

/// Writes theta[i] - theta[i + k] for each i into `out`.
/// `phase` must hold `out.len() + k` values.
pub fn delayed_difference_into(phase: &[f64], k: usize, out: &mut [f64]) -> Result<()> {
    let needed = out.len() + k;
    if phase.len() < needed {
        return Err(Error::LengthMismatch {
            context: "delayed_difference_into",
            left: phase.len(),
            right: needed,
        });
    }
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = phase[i] - phase[i + k];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::stats::{mean, sample_excess_kurtosis, variance};
    use approx::assert_relative_eq;

    fn reference_point_model() -> (LinewidthModel, OperatingPoint) {
        (LinewidthModel::default(), OperatingPoint::low_power())
    }

    #[test]
    fn default_calibration_hits_30_mhz_total() {
        let (model, op) = reference_point_model();
        let lw = total_linewidth(&model, &op).unwrap();
        assert_relative_eq!(lw.quantum, 29e6, max_relative = 1e-9);
        assert_relative_eq!(lw.total, 30e6, max_relative = 1e-9);
        assert_relative_eq!(lw.quantum_fraction(), 29.0 / 30.0, max_relative = 1e-9);
    }

    #[test]
    fn quantum_linewidth_halves_when_power_doubles() {
        let (model, op) = reference_point_model();
        let doubled = OperatingPoint::new(op.output_power * 2.0, "doubled").unwrap();
        let lw1 = quantum_linewidth(&model, &op).unwrap();
        let lw2 = quantum_linewidth(&model, &doubled).unwrap();
        assert_relative_eq!(lw1 / lw2, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn henry_alpha_enhancement_factor() {
        let flat = LinewidthModel {
            henry_alpha: 0.0,
            ..LinewidthModel::default()
        };
        let enhanced = LinewidthModel {
            henry_alpha: 1.0,
            ..flat.clone()
        };
        let op = OperatingPoint::low_power();
        let f = quantum_linewidth(&flat, &op).unwrap();
        let e = quantum_linewidth(&enhanced, &op).unwrap();
        assert_relative_eq!(e / f, 2.0, max_relative = 1e-12, epsilon = 0.0);
    }

    #[test]
    fn gain_below_loss_is_rejected() {
        let mut model = LinewidthModel::default();
        model.gain = model.waveguide_loss * 0.5;
        let err = quantum_linewidth(&model, &OperatingPoint::low_power()).unwrap_err();
        assert!(err.to_string().contains("gain"), "got: {err}");
    }

    #[test]
    fn coherence_time_of_30_mhz_line() {
        // 30 MHz total linewidth corresponds to roughly 10.6 ns.
        let tau = coherence_time(30e6).unwrap();
        assert_relative_eq!(tau, 1.061e-8, max_relative = 1e-3);
        // 1 MHz floor-dominated line: 318 ns.
        let tau_slow = coherence_time(1e6).unwrap();
        assert_relative_eq!(tau_slow, 3.183e-7, max_relative = 1e-3);
        assert!(coherence_time(0.0).is_err());
        assert!(coherence_time(-1.0).is_err());
    }

    #[test]
    fn phase_increments_have_expected_variance() {
        // Frozen oracle: var = 2 * dt / tau_c = 2 * 50 ps / 10 ns = 0.01 rad^2.
        let path = simulate_phase_path(10e-9, 50e-12, 1_000_001, 42).unwrap();
        let increments: Vec<f64> = path.values.windows(2).map(|w| w[1] - w[0]).collect();
        let v = variance(&increments);
        assert_relative_eq!(v, 0.01, max_relative = 0.01);
        let m = mean(&increments);
        // Mean of 1e6 N(0, 0.1^2) draws: 3 sigma is 3e-4.
        assert!(m.abs() < 3e-4, "increment mean {m} too far from 0");
    }

    #[test]
    fn phase_increments_look_gaussian() {
        let path = simulate_phase_path(10e-9, 50e-12, 1_000_001, 11).unwrap();
        let increments: Vec<f64> = path.values.windows(2).map(|w| w[1] - w[0]).collect();
        let kurt = sample_excess_kurtosis(&increments);
        let three_sigma = 3.0 * (24.0 / increments.len() as f64).sqrt();
        assert!(
            kurt.abs() < three_sigma,
            "excess kurtosis {kurt} outside +/-{three_sigma}"
        );
    }

    #[test]
    fn paths_are_seed_deterministic() {
        let a = simulate_phase_path(10e-9, 50e-12, 4096, 7).unwrap();
        let b = simulate_phase_path(10e-9, 50e-12, 4096, 7).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate_phase_path(10e-9, 50e-12, 4096, 8).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn long_coherence_time_freezes_the_phase() {
        let path = simulate_phase_path(1e12, 50e-12, 1000, 3).unwrap();
        let worst = path.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        assert!(worst < 1e-9, "phase moved by {worst} rad");
    }

    #[test]
    fn delayed_difference_variance_follows_the_delay() {
        // Frozen oracle: var = 2 * T_d / tau_c = 2 * 650 ps / 10 ns = 0.130 rad^2.
        let path = simulate_phase_path(10e-9, 50e-12, 1_000_013, 42).unwrap();
        let diff = delayed_phase_difference(&path, 650e-12).unwrap();
        assert_eq!(diff.delay_steps, 13);
        assert_eq!(diff.snap_error(), 0.0);
        let v = variance(&diff.values);
        // Overlapping windows correlate neighbouring samples; 3 sigma of the
        // variance estimator is ~1.3% here, so 2% is a safe gate.
        assert_relative_eq!(v, 0.130, max_relative = 0.02);
    }

    #[test]
    fn delayed_difference_is_linear_in_delay() {
        let path = simulate_phase_path(10e-9, 50e-12, 2_000_026, 9).unwrap();
        let v1 = variance(&delayed_phase_difference(&path, 650e-12).unwrap().values);
        let v2 = variance(&delayed_phase_difference(&path, 1300e-12).unwrap().values);
        assert_relative_eq!(v2 / v1, 2.0, max_relative = 0.05);
    }

    #[test]
    fn zero_delay_gives_zero_differences() {
        let path = simulate_phase_path(10e-9, 50e-12, 128, 5).unwrap();
        let diff = delayed_phase_difference(&path, 0.0).unwrap();
        assert_eq!(diff.values.len(), 128);
        assert!(diff.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn non_commensurate_delay_snaps_and_reports() {
        let path = simulate_phase_path(10e-9, 50e-12, 1024, 5).unwrap();
        let diff = delayed_phase_difference(&path, 674e-12).unwrap();
        assert_eq!(diff.delay_steps, 13);
        assert_relative_eq!(diff.snapped_delay, 650e-12, max_relative = 1e-12);
        assert_relative_eq!(diff.snap_error(), -24e-12, max_relative = 1e-9);
    }

    #[test]
    fn delay_beyond_span_is_rejected() {
        let path = simulate_phase_path(10e-9, 50e-12, 100, 5).unwrap();
        assert!(delayed_phase_difference(&path, 1.0).is_err());
    }
}
