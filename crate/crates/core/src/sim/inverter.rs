use serde::{Deserialize, Serialize};

use crate::frames::{CurrentAb, VoltageAb};

/// Fraction of the threshold drop left after model-based compensation.
pub const COMPENSATION_RESIDUAL: f64 = 0.1;

/// Threshold drop used when none is given [V].
pub const DEFAULT_V_TH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Compensation {
    #[default]
    None,
    ModelBased,
}

/// Transistor drops and dead times lumped into a current-sign dependent
/// voltage error, applied per αβ component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverterModel {
    /// Threshold voltage drop [V].
    pub v_th: f64,
    pub enabled: bool,
    #[serde(default)]
    pub compensation: Compensation,
}

impl Default for InverterModel {
    fn default() -> Self {
        Self::ideal()
    }
}

impl InverterModel {
    pub const fn ideal() -> Self {
        Self {
            v_th: DEFAULT_V_TH,
            enabled: false,
            compensation: Compensation::None,
        }
    }

    pub const fn uncompensated(v_th: f64) -> Self {
        Self {
            v_th,
            enabled: true,
            compensation: Compensation::None,
        }
    }

    pub const fn compensated(v_th: f64) -> Self {
        Self {
            v_th,
            enabled: true,
            compensation: Compensation::ModelBased,
        }
    }

    /// Magnitude of the drop that actually reaches the machine [V].
    pub fn effective_drop(&self) -> f64 {
        match (self.enabled, self.compensation) {
            (false, _) => 0.0,
            (true, Compensation::None) => self.v_th,
            (true, Compensation::ModelBased) => COMPENSATION_RESIDUAL * self.v_th,
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Voltage actually impressed for a commanded voltage and the present current.
pub fn inverter_distort(v_cmd: VoltageAb, i: CurrentAb, inv: &InverterModel) -> VoltageAb {
    let drop = inv.effective_drop();
    if drop == 0.0 {
        return v_cmd;
    }
    VoltageAb::new(v_cmd.a - drop * sign(i.a), v_cmd.b - drop * sign(i.b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_is_identity() {
        let v = VoltageAb::new(3.0, -2.0);
        let out = inverter_distort(v, CurrentAb::new(1.0, 1.0), &InverterModel::ideal());
        assert_eq!(out, v);
    }

    #[test]
    fn drop_follows_current_sign() {
        let v = VoltageAb::new(10.0, 10.0);
        let out = inverter_distort(v, CurrentAb::new(2.0, -1.0), &InverterModel::uncompensated(1.0));
        assert_eq!(out, VoltageAb::new(9.0, 11.0));
    }

    #[test]
    fn zero_current_has_no_drop() {
        let v = VoltageAb::new(1.0, 1.0);
        let out = inverter_distort(v, CurrentAb::new(0.0, 3.0), &InverterModel::uncompensated(0.5));
        assert_eq!(out, VoltageAb::new(1.0, 0.5));
    }

    #[test]
    fn compensation_leaves_ten_percent() {
        let v = VoltageAb::ZERO;
        let out = inverter_distort(v, CurrentAb::new(1.0, -1.0), &InverterModel::compensated(2.0));
        assert!((out.a + 0.2).abs() < 1e-15 && (out.b - 0.2).abs() < 1e-15);
    }
}
