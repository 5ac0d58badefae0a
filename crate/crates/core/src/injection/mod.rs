//! Rotating high-frequency voltage injection and its demodulation.

mod demod;
mod fit;
mod waveform;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{RotationAngle, VoltageAb, VoltageDq};

pub use demod::{extract_ripple, extract_slow, samples_per_period, SampledSeries};
pub use fit::{
    fit_saliency, read_saliency_csv, write_saliency_csv, SaliencyRecord, SALIENCY_CSV_HEADER,
};
pub use waveform::{waveform_eval, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionConfig {
    /// Injection frequency Ω [Hz].
    pub omega: f64,
    /// Amplitude ũ [V].
    pub u_tilde: f64,
    /// Rotation frequency of the injection axis [Hz].
    pub f_rot: f64,
    /// Measurement time per current set-point [s].
    pub dwell: f64,
    #[serde(default)]
    pub waveform: Waveform,
    /// Angle of the injection axis at `t = 0` [rad].
    #[serde(default)]
    pub rot_phase: f64,
}

impl InjectionConfig {
    /// 500 Hz square wave of 40 V rotating at 1 Hz, 5 s per set-point.
    pub fn paper() -> Self {
        Self {
            omega: 500.0,
            u_tilde: 40.0,
            f_rot: 1.0,
            dwell: 5.0,
            waveform: Waveform::Square,
            rot_phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.u_tilde, self.f_rot, self.dwell, self.rot_phase]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.omega <= 0.0 || self.u_tilde <= 0.0 {
            return Err(Error::InvalidParameter(format!("injection {self:?}")));
        }
        if self.f_rot <= 0.0 || self.f_rot > 0.1 * self.omega {
            return Err(Error::InvalidParameter(format!(
                "rotation frequency {} Hz must be positive and well below Ω = {} Hz",
                self.f_rot, self.omega
            )));
        }
        if self.dwell * self.f_rot < 1.0 - 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "dwell {} s covers less than one rotation",
                self.dwell
            )));
        }
        Ok(())
    }

    /// Angle of the injection axis at `t`.
    pub fn rotation_angle(&self, t: f64) -> f64 {
        2.0 * PI * self.f_rot * t + self.rot_phase
    }

    /// Injection phase `Ωt`, snapped onto half-integers within 1e-9 so the
    /// square wave switches on the sample where it should.
    fn phase(&self, t: f64) -> f64 {
        let s = self.omega * t;
        let half = (2.0 * s).round() * 0.5;
        if (s - half).abs() < 1e-9 {
            half
        } else {
            s
        }
    }

    /// Injected voltage in the rotor frame at `t`.
    pub fn injection_dq(&self, t: f64) -> VoltageDq {
        let a = self.rotation_angle(t);
        let f = self.waveform.value(self.phase(t));
        VoltageDq::new(a.cos(), a.sin()) * (self.u_tilde * f)
    }

    /// Unit direction of the injection axis at `t`.
    pub fn direction(&self, t: f64) -> (f64, f64) {
        let a = self.rotation_angle(t);
        (a.cos(), a.sin())
    }
}

/// `v̄ + R(θ)·ũ(cos 2πf_i t, sin 2πf_i t)·f(Ωt)`.
pub fn inject(v_bar: VoltageAb, cfg: &InjectionConfig, theta: RotationAngle, t: f64) -> VoltageAb {
    if cfg.u_tilde == 0.0 {
        return v_bar;
    }
    v_bar + theta.to_ab(cfg.injection_dq(t))
}
