//! Simulation and identification of the current-flux relations of a
//! magnetically saturated PMSM from locked-rotor experiments.
//!
//! Two identification routes are provided: time integration of the stator
//! equation ([`classical`]) and high-frequency signal injection followed by
//! path integration of the inductance matrix ([`injection`], [`saliency`]).

pub mod classical;
pub mod compare;
pub mod error;
pub mod experiment;
pub mod fluxmap;
pub mod frames;
pub mod geometry;
pub mod injection;
pub mod linalg;
pub mod magnetics;
pub mod saliency;
pub mod sim;

pub use error::{Error, Result};
pub use frames::{Ab, CurrentAb, CurrentDq, Dq, FluxDq, RotationAngle, VoltageAb, VoltageDq};
pub use linalg::Sym2;
pub use magnetics::{EnergyModel, MotorParams, SaturationCoeffs};
