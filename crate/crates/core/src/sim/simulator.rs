//! Fixed-step RK4 integration of the locked-rotor electrical dynamics
//! `dφ/dt = R(θ)ᵀ·v_ab − Rs·∇H(φ)`.
//!
//! Commands are sampled at the output rate and held (zero-order hold) over
//! the integration steps of one sample period.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{CurrentAb, CurrentDq, FluxDq, RotationAngle, VoltageAb, VoltageDq};
use crate::magnetics::EnergyModel;
use crate::sim::inverter::{inverter_distort, InverterModel};

/// Scripted linear drift of the stator resistance (thermal stand-in).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsRamp {
    pub from: f64,
    pub to: f64,
    pub start: f64,
    pub end: f64,
}

impl RsRamp {
    pub fn at(&self, t: f64) -> f64 {
        if t <= self.start || self.end <= self.start {
            self.from
        } else if t >= self.end {
            self.to
        } else {
            self.from + (self.to - self.from) * (t - self.start) / (self.end - self.start)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: EnergyModel,
    pub theta_lr: RotationAngle,
    /// Integration step [s].
    pub dt: f64,
    /// Output sample rate [Hz].
    pub sample_rate: f64,
    #[serde(default)]
    pub inverter: InverterModel,
    /// Standard deviation of the additive current-measurement noise [A].
    pub noise_std: f64,
    pub seed: u64,
    #[serde(default)]
    pub rs_profile: Option<RsRamp>,
}

/// 50 µs: 40 steps per period of a 500 Hz injection.
pub const DEFAULT_DT: f64 = 1.0 / (40.0 * 500.0);
pub const DEFAULT_NOISE_STD: f64 = 5e-3;

impl SimConfig {
    /// 20 kHz sampling and integration, ideal inverter, 5 mA noise.
    pub fn new(model: EnergyModel) -> Self {
        Self {
            model,
            theta_lr: RotationAngle(0.0),
            dt: DEFAULT_DT,
            sample_rate: 1.0 / DEFAULT_DT,
            inverter: InverterModel::ideal(),
            noise_std: DEFAULT_NOISE_STD,
            seed: 0,
            rs_profile: None,
        }
    }

    pub fn noiseless(mut self) -> Self {
        self.noise_std = 0.0;
        self
    }

    /// Integration steps per output sample.
    pub fn decimation(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.sample_rate > 0.0) {
            return Err(Error::InvalidParameter("dt and sample_rate must be positive".into()));
        }
        let ratio = 1.0 / (self.sample_rate * self.dt);
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * n {
            return Err(Error::InvalidParameter(format!(
                "1/(sample_rate·dt) = {ratio} is not a positive integer"
            )));
        }
        Ok(n as usize)
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        self.decimation()?;
        if !(self.noise_std >= 0.0) || !(self.inverter.v_th >= 0.0) || !self.theta_lr.0.is_finite() {
            return Err(Error::InvalidParameter(format!("simulation config {self:?}")));
        }
        if let Some(r) = &self.rs_profile {
            if !(r.from > 0.0 && r.to > 0.0) {
                return Err(Error::InvalidParameter("resistance profile must stay positive".into()));
            }
        }
        Ok(())
    }

    pub fn resistance_at(&self, t: f64) -> f64 {
        self.rs_profile
            .map(|r| r.at(t))
            .unwrap_or(self.model.params().rs)
    }
}

/// Anything that produces the commanded stator voltage at a sample instant.
pub trait VoltageSource {
    fn command(&mut self, t: f64, measured: CurrentAb) -> VoltageAb;

    /// Current reference in force after the last `command`, if closed loop.
    fn current_reference(&self) -> Option<CurrentDq> {
        None
    }
}

impl<F: FnMut(f64) -> VoltageAb> VoltageSource for F {
    fn command(&mut self, t: f64, _measured: CurrentAb) -> VoltageAb {
        self(t)
    }
}

/// Uniformly sampled record of a locked-rotor run.
///
/// `v_ab_cmd[k]` is held over `[t[k], t[k+1])`. `i_dq_true` and `phi_dq_true`
/// are noise-free ground truth for validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub sample_period: f64,
    pub theta_lr: RotationAngle,
    pub t: Vec<f64>,
    pub v_ab_cmd: Vec<VoltageAb>,
    pub v_ab_actual: Vec<VoltageAb>,
    pub i_ab: Vec<CurrentAb>,
    pub i_dq_true: Vec<CurrentDq>,
    pub phi_dq_true: Vec<FluxDq>,
    /// Current reference, empty for open-loop runs.
    pub i_ref: Vec<CurrentDq>,
}

pub const TIMESERIES_CSV_HEADER: &str =
    "t,va_cmd,vb_cmd,va_act,vb_act,ia,ib,id_true,iq_true,phid_true,phiq_true";

impl TimeSeries {
    fn with_capacity(n: usize, sample_period: f64, theta_lr: RotationAngle) -> Self {
        Self {
            sample_period,
            theta_lr,
            t: Vec::with_capacity(n),
            v_ab_cmd: Vec::with_capacity(n),
            v_ab_actual: Vec::with_capacity(n),
            i_ab: Vec::with_capacity(n),
            i_dq_true: Vec::with_capacity(n),
            phi_dq_true: Vec::with_capacity(n),
            i_ref: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Measured current in the rotor frame.
    pub fn i_dq(&self, k: usize) -> CurrentDq {
        self.theta_lr.to_dq(self.i_ab[k])
    }

    /// Commanded voltage in the rotor frame.
    pub fn v_dq_cmd(&self, k: usize) -> VoltageDq {
        self.theta_lr.to_dq(self.v_ab_cmd[k])
    }

    pub fn i_dq_measured(&self) -> Vec<CurrentDq> {
        (0..self.len()).map(|k| self.i_dq(k)).collect()
    }

    /// Appends `other`, which must continue this record.
    pub fn extend(&mut self, other: TimeSeries) {
        if self.is_empty() {
            *self = other;
            return;
        }
        self.t.extend(other.t);
        self.v_ab_cmd.extend(other.v_ab_cmd);
        self.v_ab_actual.extend(other.v_ab_actual);
        self.i_ab.extend(other.i_ab);
        self.i_dq_true.extend(other.i_dq_true);
        self.phi_dq_true.extend(other.phi_dq_true);
        self.i_ref.extend(other.i_ref);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TIMESERIES_CSV_HEADER}")?;
        for k in 0..self.len() {
            let (vc, va, i) = (self.v_ab_cmd[k], self.v_ab_actual[k], self.i_ab[k]);
            let (it, pt) = (self.i_dq_true[k], self.phi_dq_true[k]);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.t[k], vc.a, vc.b, va.a, va.b, i.a, i.b, it.d, it.q, pt.d, pt.q
            )?;
        }
        Ok(())
    }
}

/// Stateful integrator; successive `run` calls continue the same experiment.
pub struct Simulator {
    config: SimConfig,
    decimation: usize,
    phi: FluxDq,
    sample_index: u64,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Simulator {
    /// Starts at rest: `φ(0) = Φ(0)`, zero current.
    pub fn new(config: SimConfig) -> Result<Self> {
        let phi0 = config.model.flux_from_current(CurrentDq::ZERO)?;
        Self::with_initial_flux(config, phi0)
    }

    pub fn with_initial_flux(config: SimConfig, phi0: FluxDq) -> Result<Self> {
        config.validate()?;
        let decimation = config.decimation()?;
        let noise = if config.noise_std > 0.0 {
            Some(Normal::new(0.0, config.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            config,
            decimation,
            phi: phi0,
            sample_index: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            noise,
        })
    }

    /// Selects an independent noise stream derived from the seed.
    pub fn with_stream(mut self, stream: u64) -> Self {
        self.rng.set_stream(stream);
        self
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn flux(&self) -> FluxDq {
        self.phi
    }

    pub fn time(&self) -> f64 {
        self.sample_index as f64 * self.config.sample_period()
    }

    fn derivative(&self, t: f64, phi: FluxDq, v_cmd: VoltageAb) -> FluxDq {
        let m = &self.config.model;
        let i = m.current_from_flux(phi);
        let theta = self.config.theta_lr;
        let v_act = if self.config.inverter.enabled {
            inverter_distort(v_cmd, theta.to_ab(i), &self.config.inverter)
        } else {
            v_cmd
        };
        let v: VoltageDq = theta.to_dq(v_act);
        let rs = self.config.resistance_at(t);
        FluxDq::new(v.d - rs * i.d, v.q - rs * i.q)
    }

    fn rk4_step(&self, t: f64, h: f64, v_cmd: VoltageAb) -> FluxDq {
        let phi = self.phi;
        let k1 = self.derivative(t, phi, v_cmd);
        let k2 = self.derivative(t + 0.5 * h, phi + k1 * (0.5 * h), v_cmd);
        let k3 = self.derivative(t + 0.5 * h, phi + k2 * (0.5 * h), v_cmd);
        let k4 = self.derivative(t + h, phi + k3 * h, v_cmd);
        phi + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    /// Runs for `duration` seconds (rounded to whole samples) and returns the
    /// record of that span.
    pub fn run<S: VoltageSource + ?Sized>(&mut self, source: &mut S, duration: f64) -> Result<TimeSeries> {
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter(format!("duration {duration} must be positive")));
        }
        let ts = self.config.sample_period();
        let n = (duration / ts).round() as usize;
        let theta = self.config.theta_lr;
        let mut out = TimeSeries::with_capacity(n, ts, theta);
        let h = self.config.dt;
        for _ in 0..n {
            let t = self.time();
            let i_true = self.config.model.current_from_flux(self.phi);
            let i_true_ab = theta.to_ab(i_true);
            let i_meas = match &self.noise {
                Some(noise) => CurrentAb::new(
                    i_true_ab.a + noise.sample(&mut self.rng),
                    i_true_ab.b + noise.sample(&mut self.rng),
                ),
                None => i_true_ab,
            };
            let v_cmd = source.command(t, i_meas);
            let v_act = if self.config.inverter.enabled {
                inverter_distort(v_cmd, i_true_ab, &self.config.inverter)
            } else {
                v_cmd
            };
            out.t.push(t);
            out.v_ab_cmd.push(v_cmd);
            out.v_ab_actual.push(v_act);
            out.i_ab.push(i_meas);
            out.i_dq_true.push(i_true);
            out.phi_dq_true.push(self.phi);
            if let Some(r) = source.current_reference() {
                out.i_ref.push(r);
            }
            for sub in 0..self.decimation {
                let ts_sub = t + sub as f64 * h;
                self.phi = self.rk4_step(ts_sub, h, v_cmd);
            }
            self.sample_index += 1;
            if !self.phi.is_finite() {
                return Err(Error::IntegrationFailure { t: self.time() });
            }
        }
        Ok(out)
    }
}

/// Open-loop run from rest.
pub fn simulate_locked<F>(config: &SimConfig, v_cmd: F, duration: f64) -> Result<TimeSeries>
where
    F: FnMut(f64) -> VoltageAb,
{
    let mut sim = Simulator::new(*config)?;
    let mut source = v_cmd;
    sim.run(&mut source, duration)
}
