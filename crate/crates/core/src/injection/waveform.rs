use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Unit-period, zero-mean injection shape `f` with its zero-mean primitive `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    /// `+1` on `[0, ½)`, `−1` on `[½, 1)`; `F` is a triangle between `±¼`.
    #[default]
    Square,
    /// `sin 2πs`; `F = −cos(2πs)/2π`.
    Sine,
}

impl Waveform {
    pub fn value(self, s: f64) -> f64 {
        let s = s.rem_euclid(1.0);
        match self {
            Waveform::Square => {
                if s < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            Waveform::Sine => (2.0 * PI * s).sin(),
        }
    }

    pub fn primitive(self, s: f64) -> f64 {
        let s = s.rem_euclid(1.0);
        match self {
            Waveform::Square => {
                if s < 0.5 {
                    s - 0.25
                } else {
                    0.75 - s
                }
            }
            Waveform::Sine => -(2.0 * PI * s).cos() / (2.0 * PI),
        }
    }

    /// `∫₀¹ F²`.
    pub fn primitive_mean_square(self) -> f64 {
        match self {
            Waveform::Square => 1.0 / 48.0,
            Waveform::Sine => 1.0 / (8.0 * PI * PI),
        }
    }
}

/// `(f(s), F(s))`.
pub fn waveform_eval(w: Waveform, s: f64) -> (f64, f64) {
    (w.value(s), w.primitive(s))
}
