//! Locked-rotor simulator: plant integration, inverter distortion, current
//! control and reference profiles.

pub mod control;
pub mod inverter;
pub mod profile;
pub mod simulator;

pub use control::{pi_gains, pi_step, Axis, ControllerConfig, CurrentLoop, PiGains, PiState, PiTuning};
pub use inverter::{inverter_distort, Compensation, InverterModel, COMPENSATION_RESIDUAL, DEFAULT_V_TH};
pub use profile::{trapezoid_profile, CurrentTrajectory, TrapezoidProfile};
pub use simulator::{simulate_locked, RsRamp, SimConfig, Simulator, TimeSeries, VoltageSource, DEFAULT_DT, DEFAULT_NOISE_STD};
