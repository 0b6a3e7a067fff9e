//! Sampling-timing validation.
//!
//! Samples only carry fresh randomness when the interferometer delay and the
//! sampling period sit in the right regime relative to the laser coherence
//! time and the detector response time. Without bias stabilization the
//! requirements are much stricter: the delay itself must span many coherence
//! times so that interference washes out the slowly drifting bias, and
//! successive samples must be spaced far enough apart that both the phase
//! and the detector have refreshed. With stabilization the delay constraint
//! disappears and only detector response limits the rate.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingMode {
    Stabilized,
    Unstabilized,
}

/// Inputs for a timing validation.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TimingCheck {
    pub mode: TimingMode,
    /// Laser coherence time, s.
    pub coherence_time: f64,
    /// Interferometer delay T_d, s.
    pub delay: f64,
    /// Sampling period T_S, s.
    pub sampling_period: f64,
    /// Detector response time T_R (reciprocal bandwidth of the slowest
    /// stage), s.
    pub response_time: f64,
    /// How many times larger "much larger" must be; >= 1.
    pub dominance_factor: f64,
}

/// One requirement with its margin. `actual / required` > 1 means satisfied
/// with room to spare.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TimingFinding {
    pub requirement: &'static str,
    pub satisfied: bool,
    /// Smallest acceptable value, s.
    pub required: f64,
    /// Value the configuration actually provides, s.
    pub actual: f64,
}

impl TimingFinding {
    pub fn margin(&self) -> f64 {
        self.actual / self.required
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TimingVerdict {
    pub mode: TimingMode,
    pub pass: bool,
    pub findings: Vec<TimingFinding>,
}

impl TimingVerdict {
    /// One line per requirement, suitable for terminal output.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for f in &self.findings {
            out.push_str(&format!(
                "{} {} ({:.3e} s vs required {:.3e} s, margin {:.2})\n",
                if f.satisfied { "ok  " } else { "FAIL" },
                f.requirement,
                f.actual,
                f.required,
                f.margin(),
            ));
        }
        out.push_str(if self.pass {
            "timing: pass\n"
        } else {
            "timing: fail\n"
        });
        out
    }
}

impl TimingCheck {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("coherence time", self.coherence_time),
            ("delay", self.delay),
            ("sampling period", self.sampling_period),
            ("response time", self.response_time),
        ];
        for (name, v) in durations {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.dominance_factor >= 1.0) || !self.dominance_factor.is_finite() {
            return Err(invalid(format!(
                "dominance factor must be >= 1, got {}",
                self.dominance_factor
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self) -> Result<TimingVerdict> {
        self.validate()?;
        let f = self.dominance_factor;
        let slack = self.sampling_period - self.delay;
        let mut findings = vec![TimingFinding {
            requirement: "sampling period exceeds the interferometer delay \
                          (equal or shorter means successive samples share phase history)",
            satisfied: self.sampling_period > self.delay,
            required: self.delay,
            actual: self.sampling_period,
        }];
        match self.mode {
            TimingMode::Unstabilized => {
                findings.push(TimingFinding {
                    requirement: "delay spans many coherence times \
                                  (interference must average over the drifting bias)",
                    satisfied: self.delay >= f * self.coherence_time,
                    required: f * self.coherence_time,
                    actual: self.delay,
                });
                findings.push(TimingFinding {
                    requirement: "sample spacing beyond the delay spans many coherence \
                                  plus response times",
                    satisfied: slack >= f * (self.coherence_time + self.response_time),
                    required: f * (self.coherence_time + self.response_time),
                    actual: slack,
                });
            }
            TimingMode::Stabilized => {
                findings.push(TimingFinding {
                    requirement: "sample spacing beyond the delay exceeds the detector \
                                  response time",
                    satisfied: slack > self.response_time,
                    required: self.response_time,
                    actual: slack,
                });
            }
        }
        let pass = findings.iter().all(|f| f.satisfied);
        Ok(TimingVerdict {
            mode: self.mode,
            pass,
            findings,
        })
    }
}

/// Shortest sampling period an unstabilized setup can support: the delay at
/// its minimum `f * tau_c` plus the refresh requirement `f * (tau_c + T_R)`.
pub fn min_unstabilized_sampling_period(
    coherence_time: f64,
    response_time: f64,
    dominance_factor: f64,
) -> f64 {
    dominance_factor * (2.0 * coherence_time + response_time)
}
