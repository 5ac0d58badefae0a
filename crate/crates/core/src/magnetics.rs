//! Magnetic energy of the locked PMSM and the flux/current relations it induces.
//!
//! The energy is the unsaturated quadratic form plus a polynomial correction in
//! `x = φd − Φm` and `φq`. Only even powers of `φq` appear, so `H(φd, −φq) =
//! H(φd, φq)` holds structurally, and the stator current is `i = ∇H(φ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{CurrentDq, FluxDq};
use crate::linalg::Sym2;

/// Nameplate electrical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorParams {
    /// Stator resistance [Ω].
    #[serde(rename = "Rs")]
    pub rs: f64,
    /// Pole-pair count.
    #[serde(rename = "np")]
    pub pole_pairs: u32,
    /// Unsaturated d-axis inductance [H].
    #[serde(rename = "Ld")]
    pub ld: f64,
    /// Unsaturated q-axis inductance [H].
    #[serde(rename = "Lq")]
    pub lq: f64,
    /// Permanent-magnet flux [Wb].
    #[serde(rename = "PhiM")]
    pub phi_m: f64,
}

impl MotorParams {
    /// The 400 W test motor: 2 pole pairs, 4.25 Ω, 43.25 mH / 69.05 mH.
    ///
    /// The magnet flux is not part of the nameplate; 0.2 Wb is used. It is
    /// unobservable by both identification methods.
    pub const fn test_motor() -> Self {
        Self {
            rs: 4.25,
            pole_pairs: 2,
            ld: 43.25e-3,
            lq: 69.05e-3,
            phi_m: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rs > 0.0
            && self.pole_pairs >= 1
            && self.ld > 0.0
            && self.lq > 0.0
            && self.phi_m >= 0.0
            && self.rs.is_finite()
            && self.ld.is_finite()
            && self.lq.is_finite()
            && self.phi_m.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("motor parameters {self:?}")))
        }
    }
}

impl Default for MotorParams {
    fn default() -> Self {
        Self::test_motor()
    }
}

/// Coefficients of the saturation polynomial
/// `c30·x³ + c40·x⁴ + c12·x·φq² + c04·φq⁴ + c22·x²·φq²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SaturationCoeffs {
    pub c30: f64,
    pub c40: f64,
    pub c12: f64,
    pub c04: f64,
    pub c22: f64,
}

impl SaturationCoeffs {
    pub const NONE: Self = Self {
        c30: 0.0,
        c40: 0.0,
        c12: 0.0,
        c04: 0.0,
        c22: 0.0,
    };

    /// Moderate self- and cross-saturation: about 20 % inductance drop at 3 A.
    pub const DEFAULT: Self = Self {
        c30: 3.0,
        c40: 20.0,
        c12: 5.0,
        c04: 8.0,
        c22: 5.0,
    };

    fn is_finite(&self) -> bool {
        [self.c30, self.c40, self.c12, self.c04, self.c22]
            .iter()
            .all(|c| c.is_finite())
    }
}

/// Radius of the current disk on which the Hessian must stay positive definite [A].
pub const OPERATING_CURRENT: f64 = 4.5;

const NEWTON_TOL: f64 = 1e-9;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
struct EnergyModelDoc {
    base: MotorParams,
    #[serde(default)]
    sat_coeffs: SaturationCoeffs,
}

/// Magnetic energy `H(φd, φq)` [J] of a (possibly saturated) PMSM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnergyModelDoc")]
pub struct EnergyModel {
    base: MotorParams,
    sat_coeffs: SaturationCoeffs,
}

impl TryFrom<EnergyModelDoc> for EnergyModel {
    type Error = Error;

    fn try_from(doc: EnergyModelDoc) -> Result<Self> {
        Self::new(doc.base, doc.sat_coeffs)
    }
}

impl EnergyModel {
    /// Builds a model and checks that its Hessian is positive definite on the
    /// operating disk `|i| ≤ 4.5 A`.
    pub fn new(base: MotorParams, sat_coeffs: SaturationCoeffs) -> Result<Self> {
        base.validate()?;
        if !sat_coeffs.is_finite() {
            return Err(Error::InvalidParameter(
                "saturation coefficients must be finite".into(),
            ));
        }
        let model = Self { base, sat_coeffs };
        model.check_operating_domain()?;
        Ok(model)
    }

    pub fn unsaturated(base: MotorParams) -> Self {
        Self::new(base, SaturationCoeffs::NONE).expect("quadratic energy is always convex")
    }

    /// Test motor with the default saturation polynomial.
    pub fn default_saturated() -> Self {
        Self::new(MotorParams::test_motor(), SaturationCoeffs::DEFAULT)
            .expect("default saturation is convex on the operating disk")
    }

    pub fn params(&self) -> &MotorParams {
        &self.base
    }

    pub fn sat_coeffs(&self) -> &SaturationCoeffs {
        &self.sat_coeffs
    }

    /// Same magnetics with a different stator resistance.
    pub fn with_resistance(mut self, rs: f64) -> Result<Self> {
        self.base.rs = rs;
        self.base.validate()?;
        Ok(self)
    }

    fn check_operating_domain(&self) -> Result<()> {
        const STEPS: i32 = 12;
        for a in -STEPS..=STEPS {
            for b in -STEPS..=STEPS {
                let i = CurrentDq::new(a as f64, b as f64) * (OPERATING_CURRENT / STEPS as f64);
                if i.norm() > OPERATING_CURRENT + 1e-12 {
                    continue;
                }
                let phi = self.flux_from_current(i).map_err(|e| {
                    Error::InvalidParameter(format!("energy not invertible on operating disk: {e}"))
                })?;
                let h = self.hessian_at_flux(phi);
                if !h.is_positive_definite() {
                    return Err(Error::InvalidParameter(format!(
                        "Hessian {h:?} not positive definite at i = {i:?} A"
                    )));
                }
            }
        }
        Ok(())
    }

    fn offsets(&self, phi: FluxDq) -> (f64, f64) {
        (phi.d - self.base.phi_m, phi.q)
    }

    /// Magnetic energy [J].
    pub fn energy(&self, phi: FluxDq) -> f64 {
        let (x, y) = self.offsets(phi);
        let c = &self.sat_coeffs;
        let (x2, y2) = (x * x, y * y);
        0.5 * x2 / self.base.ld
            + 0.5 * y2 / self.base.lq
            + c.c30 * x2 * x
            + c.c40 * x2 * x2
            + c.c12 * x * y2
            + c.c04 * y2 * y2
            + c.c22 * x2 * y2
    }

    /// Stator current `∇H(φ)` [A].
    pub fn current_from_flux(&self, phi: FluxDq) -> CurrentDq {
        let (x, y) = self.offsets(phi);
        let c = &self.sat_coeffs;
        let (x2, y2) = (x * x, y * y);
        CurrentDq::new(
            x / self.base.ld + 3.0 * c.c30 * x2 + 4.0 * c.c40 * x2 * x + c.c12 * y2 + 2.0 * c.c22 * x * y2,
            y / self.base.lq + 2.0 * c.c12 * x * y + 4.0 * c.c04 * y2 * y + 2.0 * c.c22 * x2 * y,
        )
    }

    /// Second partials of the energy [1/H].
    pub fn hessian_at_flux(&self, phi: FluxDq) -> Sym2 {
        let (x, y) = self.offsets(phi);
        let c = &self.sat_coeffs;
        let (x2, y2) = (x * x, y * y);
        Sym2::new(
            1.0 / self.base.ld + 6.0 * c.c30 * x + 12.0 * c.c40 * x2 + 2.0 * c.c22 * y2,
            2.0 * c.c12 * y + 4.0 * c.c22 * x * y,
            1.0 / self.base.lq + 2.0 * c.c12 * x + 12.0 * c.c04 * y2 + 2.0 * c.c22 * x2,
        )
    }

    /// Inverse inductance matrix at a current point, `H(Φ(i))`.
    pub fn hessian_at_current(&self, i: CurrentDq) -> Result<Sym2> {
        Ok(self.hessian_at_flux(self.flux_from_current(i)?))
    }

    /// Solves `∇H(φ) = i` by damped Newton iteration.
    pub fn flux_from_current(&self, i: CurrentDq) -> Result<FluxDq> {
        let mut phi = FluxDq::new(self.base.phi_m + self.base.ld * i.d, self.base.lq * i.q);
        let mut residual = self.current_from_flux(phi) - i;
        let mut res_norm = residual.norm();
        let mut iterations = 0;
        while res_norm >= NEWTON_TOL {
            if iterations == NEWTON_MAX_ITER || !res_norm.is_finite() {
                return Err(Error::InversionFailed {
                    current: i,
                    residual: res_norm,
                    iterations,
                });
            }
            iterations += 1;
            let step: FluxDq = match self.hessian_at_flux(phi).inverse() {
                Some(inv) => inv.mul_vec(residual),
                None => {
                    return Err(Error::InversionFailed {
                        current: i,
                        residual: res_norm,
                        iterations,
                    })
                }
            };
            let mut lambda = 1.0;
            loop {
                let trial = phi - step * lambda;
                let trial_res = self.current_from_flux(trial) - i;
                let trial_norm = trial_res.norm();
                if trial_norm < res_norm || lambda < 1e-6 {
                    phi = trial;
                    residual = trial_res;
                    res_norm = trial_norm;
                    break;
                }
                lambda *= 0.5;
            }
        }
        Ok(phi)
    }

    /// Electromagnetic torque `np·(φd·iq − φq·id)` [N·m].
    pub fn torque(&self, phi: FluxDq) -> f64 {
        let i = self.current_from_flux(phi);
        self.base.pole_pairs as f64 * (phi.d * i.q - phi.q * i.d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear() -> EnergyModel {
        EnergyModel::unsaturated(MotorParams::test_motor())
    }

    #[test]
    fn energy_vanishes_at_magnet_flux() {
        let m = linear();
        assert_eq!(m.energy(FluxDq::new(0.2, 0.0)), 0.0);
        assert_eq!(m.current_from_flux(FluxDq::new(0.2, 0.0)), CurrentDq::ZERO);
    }

    #[test]
    fn quadratic_energy_value() {
        // 0.5·(0.04325)²/0.04325
        let e = linear().energy(FluxDq::new(0.2 + 0.04325, 0.0));
        assert!((e - 21.625e-3).abs() < 1e-15);
    }

    #[test]
    fn linear_current_flux_relation() {
        let m = linear();
        let i = m.current_from_flux(FluxDq::new(0.2 + 0.04325, 0.06905));
        assert!((i.d - 1.0).abs() < 1e-12 && (i.q - 1.0).abs() < 1e-12);
        let phi = m.flux_from_current(CurrentDq::new(1.0, 1.0)).unwrap();
        assert!((phi.d - 0.24325).abs() < 1e-12 && (phi.q - 0.06905).abs() < 1e-12);
        assert_eq!(m.flux_from_current(CurrentDq::ZERO).unwrap(), FluxDq::new(0.2, 0.0));
    }

    #[test]
    fn unsaturated_hessian_is_reciprocal_inductance() {
        let h = linear().hessian_at_flux(FluxDq::new(0.3, -0.1));
        assert!((h.m11 - 23.121387283236995).abs() < 1e-12);
        assert!((h.m22 - 14.482259232440262).abs() < 1e-12);
        assert_eq!(h.m12, 0.0);
    }

    #[test]
    fn torque_matches_closed_form_without_saturation() {
        let m = linear();
        let p = m.params();
        let phi = FluxDq::new(p.phi_m + 0.02, 0.05);
        let np = p.pole_pairs as f64;
        let closed = np / p.ld * p.phi_m * phi.q + np * (1.0 / p.lq - 1.0 / p.ld) * phi.d * phi.q;
        assert!((m.torque(phi) - closed).abs() < 1e-12);
        // np=2, Φm=0.2: 2/0.04325·0.2·0.05 + 2·(1/0.06905 − 1/0.04325)·0.22·0.05
        assert!((m.torque(phi) - 0.27236692854721173).abs() < 1e-12);
        assert_eq!(m.torque(FluxDq::new(0.3, 0.0)), 0.0);
    }

    #[test]
    fn saturated_round_trip_on_grid() {
        let m = EnergyModel::default_saturated();
        for a in -30..=30 {
            for b in -30..=30 {
                let i = CurrentDq::new(a as f64 * 0.1, b as f64 * 0.1);
                let phi = m.flux_from_current(i).unwrap();
                assert!((m.current_from_flux(phi) - i).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_nonconvex_saturation() {
        let sat = SaturationCoeffs {
            c30: -200.0,
            ..SaturationCoeffs::NONE
        };
        assert!(EnergyModel::new(MotorParams::test_motor(), sat).is_err());
        let bad = MotorParams {
            ld: -1.0,
            ..MotorParams::test_motor()
        };
        assert!(EnergyModel::new(bad, SaturationCoeffs::NONE).is_err());
    }

    #[test]
    fn json_round_trip_validates() {
        let m = EnergyModel::default_saturated();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"Ld\""));
        let back: EnergyModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = s.replace("\"Rs\":4.25", "\"Rs\":-1.0");
        assert!(serde_json::from_str::<EnergyModel>(&bad).is_err());
    }

    fn flux_in_domain() -> impl Strategy<Value = FluxDq> {
        (-0.15f64..0.15, -0.22f64..0.22).prop_map(|(x, y)| FluxDq::new(0.2 + x, y))
    }

    proptest! {
        #[test]
        fn energy_even_in_q_flux(phi in flux_in_domain()) {
            let m = EnergyModel::default_saturated();
            let mirrored = FluxDq::new(phi.d, -phi.q);
            prop_assert_eq!(m.energy(phi), m.energy(mirrored));
            let (i, im) = (m.current_from_flux(phi), m.current_from_flux(mirrored));
            prop_assert_eq!(i.d, im.d);
            prop_assert_eq!(i.q, -im.q);
            let (h, hm) = (m.hessian_at_flux(phi), m.hessian_at_flux(mirrored));
            prop_assert_eq!(h.m11, hm.m11);
            prop_assert_eq!(h.m22, hm.m22);
            prop_assert_eq!(h.m12, -hm.m12);
        }

        #[test]
        fn hessian_positive_definite(phi in flux_in_domain()) {
            let h = EnergyModel::default_saturated().hessian_at_flux(phi);
            prop_assert!(h.m11 > 0.0 && h.det() > 0.0);
        }
    }
}
