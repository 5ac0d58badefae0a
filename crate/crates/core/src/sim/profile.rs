//! Periodic trapezoidal current references.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::CurrentDq;

/// Zero-mean periodic trapezoid through `±amplitude` along `axis_mix`.
///
/// One period starting at `t = 0`: rise from 0 to `+A`, plateau, fall to
/// `−A`, plateau, rise back to 0. Each plateau lasts `plateau_fraction/2` of
/// the period and the two full ramps share the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidProfile {
    /// [s]
    pub period: f64,
    /// [A]
    pub amplitude: f64,
    pub plateau_fraction: f64,
    /// Direction cosines `(cd, cq)`.
    pub axis_mix: (f64, f64),
}

impl TrapezoidProfile {
    /// 2 s period, 3 A amplitude on the given direction.
    pub fn paper(axis_mix: (f64, f64)) -> Self {
        Self {
            period: 2.0,
            amplitude: 3.0,
            plateau_fraction: 0.5,
            axis_mix,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (cd, cq) = self.axis_mix;
        let ok = self.period > 0.0
            && self.amplitude >= 0.0
            && (0.0..=1.0).contains(&self.plateau_fraction)
            && ((cd * cd + cq * cq) - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("trapezoid profile {self:?}")))
        }
    }

    /// Scalar shape in `[-1, 1]` at a phase in `[0, 1)`.
    fn shape(&self, s: f64) -> f64 {
        let ramp = 0.5 * (1.0 - self.plateau_fraction);
        let plateau = 0.5 * self.plateau_fraction;
        let half_ramp = 0.5 * ramp;
        if ramp <= 0.0 {
            return if s < 0.5 { 1.0 } else { -1.0 };
        }
        if s < half_ramp {
            s / half_ramp
        } else if s < half_ramp + plateau {
            1.0
        } else if s < 1.5 * ramp + plateau {
            1.0 - 2.0 * (s - half_ramp - plateau) / ramp
        } else if s < 1.5 * ramp + 2.0 * plateau {
            -1.0
        } else {
            -1.0 + (s - 1.5 * ramp - 2.0 * plateau) / half_ramp
        }
    }

    pub fn eval(&self, t: f64) -> CurrentDq {
        let s = (t / self.period).rem_euclid(1.0);
        let v = self.amplitude * self.shape(s);
        CurrentDq::new(v * self.axis_mix.0, v * self.axis_mix.1)
    }

    /// Time of the centre of the positive plateau within a period.
    pub fn positive_plateau_center(&self) -> f64 {
        let ramp = 0.5 * (1.0 - self.plateau_fraction);
        (0.5 * ramp + 0.25 * self.plateau_fraction) * self.period
    }
}

/// Evaluates the profile at `t`.
pub fn trapezoid_profile(p: &TrapezoidProfile, t: f64) -> CurrentDq {
    p.eval(t)
}

/// Constant offset reached by a linear lead-in, then a repeated trapezoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurrentTrajectory {
    pub offset: CurrentDq,
    pub profile: TrapezoidProfile,
    /// Duration of the offset ramp-and-hold before the first cycle [s].
    pub lead_in: f64,
    pub cycles: usize,
}

impl CurrentTrajectory {
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if !(self.lead_in >= 0.0) || self.cycles == 0 || !self.offset.is_finite() {
            return Err(Error::InvalidParameter(format!("trajectory {self:?}")));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.lead_in + self.cycles as f64 * self.profile.period
    }

    pub fn reference(&self, t: f64) -> CurrentDq {
        if t < self.lead_in {
            let ramp = 0.5 * self.lead_in;
            return self.offset * (t / ramp).min(1.0);
        }
        self.offset + self.profile.eval(t - self.lead_in)
    }

    /// Start time of cycle `k` [s].
    pub fn cycle_start(&self, k: usize) -> f64 {
        self.lead_in + k as f64 * self.profile.period
    }
}
