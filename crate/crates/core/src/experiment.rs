//! Both identification protocols run end to end on the simulated drive.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    cycle_average, integrate_flux_with, loop_area, scatter, PlateauConfig, ResistanceMode,
    ResistanceSchedule, Scatter,
};
use crate::error::{Error, Result};
use crate::fluxmap::{anchor_flux, FluxMap, FluxSample, Method};
use crate::frames::{CurrentDq, FluxDq, VoltageDq};
use crate::injection::{extract_ripple, extract_slow, fit_saliency, inject, InjectionConfig, SaliencyRecord, SampledSeries};
use crate::saliency::{integrate_path, invert_saliency, ConsistencyReport, CurrentPath, InductanceRecord, StepRule};
use crate::sim::{ControllerConfig, CurrentLoop, CurrentTrajectory, PiTuning, SimConfig, Simulator, TimeSeries, TrapezoidProfile};

// ---------------------------------------------------------------------------
// classical

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConfig {
    pub trajectories: Vec<CurrentTrajectory>,
    #[serde(default)]
    pub resistance: ResistanceMode,
    #[serde(default)]
    pub plateau: PlateauConfig,
    /// Current bin width for cycle averaging [A].
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    /// Keep every n-th sample of the raw integrated trace.
    #[serde(default = "default_raw_every")]
    pub raw_export_every: usize,
}

fn default_bin_width() -> f64 {
    0.1
}

fn default_raw_every() -> usize {
    100
}

impl ClassicalConfig {
    /// Constant `id ∈ {−3..3}` with a q trapezoid, constant `iq ∈ {−3..3}` with
    /// a d trapezoid, and one proportional trapezoid at 45°.
    pub fn paper_protocol(cycles: usize) -> Self {
        let mut trajectories = Vec::new();
        let hold = |offset: CurrentDq, mix: (f64, f64)| CurrentTrajectory {
            offset,
            profile: TrapezoidProfile::paper(mix),
            lead_in: 1.0,
            cycles,
        };
        for c in -3..=3 {
            trajectories.push(hold(CurrentDq::new(c as f64, 0.0), (0.0, 1.0)));
        }
        for c in -3..=3 {
            trajectories.push(hold(CurrentDq::new(0.0, c as f64), (1.0, 0.0)));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        trajectories.push(hold(CurrentDq::ZERO, (h, h)));
        Self {
            trajectories,
            resistance: ResistanceMode::Estimate,
            plateau: PlateauConfig::default(),
            bin_width: default_bin_width(),
            raw_export_every: default_raw_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trajectories.is_empty() {
            return Err(Error::InvalidParameter("no classical trajectories".into()));
        }
        for t in &self.trajectories {
            t.validate()?;
        }
        if !(self.bin_width > 0.0) || self.raw_export_every == 0 {
            return Err(Error::InvalidParameter("bin width and raw decimation must be positive".into()));
        }
        if let ResistanceMode::Fixed { value } = self.resistance {
            if !(value > 0.0) {
                return Err(Error::InvalidParameter(format!("fixed resistance {value}")));
            }
        }
        Ok(())
    }
}

/// Processed record of one classical trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTrace {
    pub index: usize,
    pub trajectory: CurrentTrajectory,
    /// Mean resistance used for integration [Ω].
    pub rs_estimate: f64,
    /// Cycle-averaged curve ordered along the sweep.
    pub averaged: Vec<(CurrentDq, FluxDq)>,
    pub empty_bins: usize,
    /// Loop area per cycle in the (sweep current, sweep flux) plane [Wb·A].
    pub loop_area_raw: f64,
    pub loop_area_averaged: f64,
    pub scatter: Option<Scatter>,
    /// Decimated `(t, i, φ)` of the integrated record.
    pub raw: Vec<(f64, CurrentDq, FluxDq)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalOutcome {
    pub traces: Vec<ClassicalTrace>,
    pub map: FluxMap,
}

/// Closed-loop run of one trajectory from rest.
pub fn simulate_trajectory(
    sim: &SimConfig,
    ctrl: &ControllerConfig,
    traj: &CurrentTrajectory,
    stream: u64,
) -> Result<TimeSeries> {
    if !ctrl.enabled {
        return Err(Error::InvalidParameter(
            "the classical protocol needs the current controller".into(),
        ));
    }
    traj.validate()?;
    let mut simulator = Simulator::new(*sim)?.with_stream(stream);
    let tuning = PiTuning::new(ctrl, &sim.model);
    let t = *traj;
    let mut source = CurrentLoop::new(move |time| t.reference(time), sim.theta_lr, tuning, sim.sample_period());
    simulator.run(&mut source, traj.duration())
}

fn along(dir: (f64, f64), d: f64, q: f64) -> f64 {
    d * dir.0 + q * dir.1
}

/// Integrates one record and reduces it to its averaged curve.
///
/// The record must start at rest, which fixes the integration constant.
pub fn process_trajectory(
    series: &TimeSeries,
    index: usize,
    traj: &CurrentTrajectory,
    cfg: &ClassicalConfig,
) -> Result<ClassicalTrace> {
    let schedule = ResistanceSchedule::from_series(series, cfg.resistance, &cfg.plateau)?;
    let phi = integrate_flux_with(series, |t| schedule.at(t), FluxDq::ZERO);
    let dir = traj.profile.axis_mix;
    let ts = series.sample_period;

    let mut cycles: Vec<Vec<(CurrentDq, FluxDq)>> = vec![Vec::new(); traj.cycles];
    for k in 0..series.len() {
        let t = series.t[k] + 0.5 * ts;
        if t < traj.lead_in {
            continue;
        }
        let c = ((t - traj.lead_in) / traj.profile.period).floor() as usize;
        if c < traj.cycles {
            cycles[c].push((series.i_dq(k), phi[k]));
        }
    }
    let avg = cycle_average(&cycles, dir, cfg.bin_width)?;
    let area = |pts: &[(CurrentDq, FluxDq)]| {
        let p: Vec<(f64, f64)> = pts
            .iter()
            .map(|(i, f)| (along(dir, i.d, i.q), along(dir, f.d, f.q)))
            .collect();
        loop_area(&p)
    };
    let loop_area_raw = cycles.iter().map(|c| area(c)).sum::<f64>() / cycles.len() as f64;
    // the averaged curve is single valued, so out and back encloses nothing
    let mut there_and_back = avg.points.clone();
    there_and_back.extend(avg.points.iter().rev().copied());
    let loop_area_averaged = area(&there_and_back);
    let scatter = if cycles.len() >= 2 {
        Some(scatter(&cycles, dir, cfg.bin_width)?)
    } else {
        None
    };
    let raw = (0..series.len())
        .step_by(cfg.raw_export_every)
        .map(|k| (series.t[k], series.i_dq(k), phi[k]))
        .collect();
    Ok(ClassicalTrace {
        index,
        trajectory: *traj,
        rs_estimate: schedule.mean(),
        averaged: avg.points,
        empty_bins: avg.empty_bins,
        loop_area_raw,
        loop_area_averaged,
        scatter,
        raw,
    })
}

pub fn run_classical(sim: &SimConfig, ctrl: &ControllerConfig, cfg: &ClassicalConfig) -> Result<ClassicalOutcome> {
    cfg.validate()?;
    let mut plateau = cfg.plateau;
    plateau.noise_std = sim.noise_std;
    let cfg = ClassicalConfig {
        plateau,
        ..cfg.clone()
    };
    let traces = cfg
        .trajectories
        .par_iter()
        .enumerate()
        .map(|(k, traj)| {
            let series = simulate_trajectory(sim, ctrl, traj, k as u64)?;
            process_trajectory(&series, k, traj, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples = traces
        .iter()
        .flat_map(|tr| {
            tr.averaged.iter().enumerate().map(move |(arc, (i, phi))| FluxSample {
                i: *i,
                phi: *phi,
                path_id: tr.index,
                arc_index: arc,
            })
        })
        .collect();
    Ok(ClassicalOutcome {
        traces,
        map: FluxMap::new(Method::Classical, samples),
    })
}

// ---------------------------------------------------------------------------
// saliency

/// Smallest current change used to update the seeking slope [A].
pub const SECANT_MIN_STEP: f64 = 1e-3;

/// Open-loop search of the slow voltage giving a target current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeekConfig {
    pub iterations: usize,
    /// Settling time per iteration [s].
    pub settle: f64,
    /// Averaging window at the end of each settle [s].
    pub measure: f64,
    /// Settling after the last update, before the dwell [s].
    pub pre_dwell: f64,
    /// Resistance used only to form the first voltage guess [Ω].
    pub rs_guess: f64,
}

impl Default for SeekConfig {
    fn default() -> Self {
        Self {
            iterations: 3,
            settle: 0.3,
            measure: 0.1,
            pre_dwell: 0.1,
            rs_guess: 4.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaliencyConfig {
    pub injection: InjectionConfig,
    /// Spacing of set-points along each path [A].
    pub grid_step: f64,
    /// Largest current on either axis [A].
    pub extent: f64,
    /// Spacing of the constant-current lines [A].
    pub line_spacing: f64,
    #[serde(default = "default_true")]
    pub diagonals: bool,
    #[serde(default)]
    pub seek: SeekConfig,
    #[serde(default)]
    pub step_rule: StepRule,
}

fn default_true() -> bool {
    true
}

impl SaliencyConfig {
    /// ±3 A grid at 0.1 A with the 500 Hz, 40 V, 1 Hz injection and 5 s dwells.
    pub fn paper() -> Self {
        Self {
            injection: InjectionConfig::paper(),
            grid_step: 0.1,
            extent: 3.0,
            line_spacing: 1.0,
            diagonals: true,
            seek: SeekConfig::default(),
            step_rule: StepRule::Trapezoidal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.injection.validate()?;
        let on_grid = |x: f64| ((x / self.grid_step) - (x / self.grid_step).round()).abs() < 1e-9;
        if !(self.grid_step > 0.0) || self.grid_step > crate::saliency::MAX_PATH_STEP {
            return Err(Error::InvalidParameter(format!(
                "grid step {} A must lie in (0, {}]",
                self.grid_step,
                crate::saliency::MAX_PATH_STEP
            )));
        }
        if !(self.extent > 0.0) || !on_grid(self.extent) {
            return Err(Error::InvalidParameter("extent must be a multiple of the grid step".into()));
        }
        if !(self.line_spacing > 0.0) || !on_grid(self.line_spacing) {
            return Err(Error::InvalidParameter("line spacing must be a multiple of the grid step".into()));
        }
        let s = &self.seek;
        if !(s.settle > 0.0 && s.measure > 0.0 && s.measure <= s.settle && s.pre_dwell >= 0.0 && s.rs_guess > 0.0) {
            return Err(Error::InvalidParameter(format!("seek {s:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    SpineD,
    SpineQ,
    ConstantD,
    ConstantQ,
    Diagonal,
}

/// One current path of the grid as target indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub id: usize,
    pub kind: PathKind,
    pub targets: Vec<usize>,
    /// Target whose flux fixes the integration constant.
    pub anchor: usize,
    /// Path providing the flux at `anchor`; zero flux when absent.
    pub tie: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub targets: Vec<CurrentDq>,
    /// Ordered so that every tie refers to an earlier path.
    pub paths: Vec<PlannedPath>,
}

/// Two spines through the origin, lines of constant current tied to the
/// spines, and optionally both diagonals.
pub fn plan_paths(cfg: &SaliencyConfig) -> Result<PathPlan> {
    cfg.validate()?;
    let n = (cfg.extent / cfg.grid_step).round() as i64;
    let s = cfg.grid_step;
    let m = (cfg.extent / cfg.line_spacing + 1e-9).floor() as i64;
    let stride = (cfg.line_spacing / s).round() as i64;

    let mut targets: Vec<CurrentDq> = Vec::new();
    let mut index: HashMap<(i64, i64), usize> = HashMap::new();
    let mut id_of = |a: i64, b: i64| -> usize {
        *index.entry((a, b)).or_insert_with(|| {
            targets.push(CurrentDq::new(a as f64 * s, b as f64 * s));
            targets.len() - 1
        })
    };
    let mut paths = Vec::new();
    let mut push = |kind, pts: Vec<usize>, anchor, tie| {
        let id = paths.len();
        paths.push(PlannedPath {
            id,
            kind,
            targets: pts,
            anchor,
            tie,
        });
        id
    };

    let origin = id_of(0, 0);
    let spine_d = push(PathKind::SpineD, (-n..=n).map(|k| id_of(k, 0)).collect(), origin, None);
    let spine_q = push(PathKind::SpineQ, (-n..=n).map(|k| id_of(0, k)).collect(), origin, None);
    for j in (-m..=m).filter(|&j| j != 0) {
        let c = j * stride;
        let pts = (-n..=n).map(|k| id_of(c, k)).collect();
        push(PathKind::ConstantD, pts, id_of(c, 0), Some(spine_d));
    }
    for j in (-m..=m).filter(|&j| j != 0) {
        let c = j * stride;
        let pts = (-n..=n).map(|k| id_of(k, c)).collect();
        push(PathKind::ConstantQ, pts, id_of(0, c), Some(spine_q));
    }
    if cfg.diagonals {
        push(PathKind::Diagonal, (-n..=n).map(|k| id_of(k, k)).collect(), origin, None);
        push(PathKind::Diagonal, (-n..=n).map(|k| id_of(k, -k)).collect(), origin, None);
    }
    Ok(PathPlan { targets, paths })
}

/// Outcome of one injection dwell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellResult {
    pub target: CurrentDq,
    pub v_bar: VoltageDq,
    pub record: SaliencyRecord,
}

fn mean_current(series: &TimeSeries, from: usize) -> CurrentDq {
    let n = series.len() - from;
    (from..series.len()).fold(CurrentDq::ZERO, |acc, k| acc + series.i_dq(k)) * (1.0 / n as f64)
}

/// Seeks the set-point open loop, then injects for one dwell and fits the
/// Hessian from the demodulated ripple.
pub fn run_dwell(sim: &SimConfig, cfg: &SaliencyConfig, target: CurrentDq, stream: u64) -> Result<DwellResult> {
    let inj = cfg.injection;
    let seek = cfg.seek;
    let theta = sim.theta_lr;
    let phi0 = sim.model.flux_from_current(target)?;
    let mut simulator = Simulator::with_initial_flux(*sim, phi0)?.with_stream(stream);
    let hold = |simulator: &mut Simulator, v: VoltageDq, duration: f64| {
        let v_ab = theta.to_ab(v);
        let mut source = |t: f64| inject(v_ab, &inj, theta, t);
        simulator.run(&mut source, duration)
    };

    let measure_from = |series: &TimeSeries| {
        let keep = (seek.measure / series.sample_period).round() as usize;
        series.len().saturating_sub(keep.max(1))
    };
    let mut v = VoltageDq::new(seek.rs_guess * target.d, seek.rs_guess * target.q);
    let mut slope = (seek.rs_guess, seek.rs_guess);
    let mut last: Option<(VoltageDq, CurrentDq)> = None;
    for _ in 0..seek.iterations {
        let series = hold(&mut simulator, v, seek.settle)?;
        let i = mean_current(&series, measure_from(&series));
        if let Some((v_prev, i_prev)) = last {
            // steps comparable to the measurement noise say nothing about the slope
            let secant = |dv: f64, di: f64, old: f64| {
                if di.abs() < SECANT_MIN_STEP {
                    return old;
                }
                let s = dv / di;
                if s.is_finite() && s > 0.0 {
                    s.clamp(0.25 * seek.rs_guess, 4.0 * seek.rs_guess)
                } else {
                    old
                }
            };
            slope = (
                secant(v.d - v_prev.d, i.d - i_prev.d, slope.0),
                secant(v.q - v_prev.q, i.q - i_prev.q, slope.1),
            );
        }
        last = Some((v, i));
        v = VoltageDq::new(v.d + slope.0 * (target.d - i.d), v.q + slope.1 * (target.q - i.q));
    }
    if seek.pre_dwell > 0.0 {
        hold(&mut simulator, v, seek.pre_dwell)?;
    }

    let extra = 3.0 / inj.omega;
    let series = hold(&mut simulator, v, inj.dwell + extra)?;
    let (ripple_d, ripple_q, i_bar) = demodulate(&series, &inj)?;
    let record = fit_saliency(&ripple_d, &ripple_q, &inj, i_bar)?;
    Ok(DwellResult {
        target,
        v_bar: v,
        record,
    })
}

/// Ripple amplitudes of both rotor-frame current components and the mean
/// slow current.
pub fn demodulate(series: &TimeSeries, inj: &InjectionConfig) -> Result<(SampledSeries, SampledSeries, CurrentDq)> {
    let ts = series.sample_period;
    let t0 = series.t.first().copied().unwrap_or(0.0);
    let channel = |f: fn(CurrentDq) -> f64| {
        SampledSeries::new(t0, ts, (0..series.len()).map(|k| f(series.i_dq(k))).collect())
    };
    let d = channel(|i| i.d);
    let q = channel(|i| i.q);
    let slow_d = extract_slow(&d, inj.omega)?;
    let slow_q = extract_slow(&q, inj.omega)?;
    let ripple_d = extract_ripple(&d, &slow_d, inj.waveform, inj.omega)?;
    let ripple_q = extract_ripple(&q, &slow_q, inj.waveform, inj.omega)?;
    Ok((ripple_d, ripple_q, CurrentDq::new(slow_d.mean(), slow_q.mean())))
}

/// RMS of the measured ripple and of its deviation from the first-order
/// ripple model, both over the two current components [A].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RippleResidual {
    pub residual_rms: f64,
    pub ripple_rms: f64,
}

/// Holds the steady-state voltage of `target` under injection and compares
/// `i − ī` with `(ũ/Ω)·H(ī)·F(Ωt)` along the injection axis, using the
/// model Hessian as truth.
pub fn ripple_residual(
    sim: &SimConfig,
    inj: &InjectionConfig,
    target: CurrentDq,
    duration: f64,
) -> Result<RippleResidual> {
    inj.validate()?;
    let model = sim.model;
    let phi0 = model.flux_from_current(target)?;
    let rs = sim.resistance_at(0.0);
    let theta = sim.theta_lr;
    let v_ab = theta.to_ab(VoltageDq::new(rs * target.d, rs * target.q));
    let mut simulator = Simulator::with_initial_flux(*sim, phi0)?;
    let series = simulator.run(&mut |t: f64| inject(v_ab, inj, theta, t), duration)?;
    let ts = series.sample_period;
    let t0 = series.t.first().copied().unwrap_or(0.0);
    let channel = |f: fn(CurrentDq) -> f64| {
        SampledSeries::new(t0, ts, (0..series.len()).map(|k| f(series.i_dq(k))).collect())
    };
    let slow_d = extract_slow(&channel(|i| i.d), inj.omega)?;
    let slow_q = extract_slow(&channel(|i| i.q), inj.omega)?;
    let amp = inj.u_tilde / inj.omega;
    let (mut res, mut rip, mut n) = (0.0, 0.0, 0usize);
    for k in 0..series.len() {
        let t = series.t[k];
        let (Some(d), Some(q)) = (slow_d.value_at(t), slow_q.value_at(t)) else {
            continue;
        };
        let h = model.hessian_at_current(CurrentDq::new(d, q))?;
        let (c, s) = inj.direction(t);
        let f = amp * inj.waveform.primitive(inj.omega * t);
        let pd = f * (h.m11 * c + h.m12 * s);
        let pq = f * (h.m12 * c + h.m22 * s);
        let i = series.i_dq(k);
        let (ed, eq) = (i.d - d - pd, i.q - q - pq);
        let (rd, rq) = (i.d - d, i.q - q);
        res += ed * ed + eq * eq;
        rip += rd * rd + rq * rq;
        n += 1;
    }
    if n == 0 {
        return Err(Error::SeriesTooShort { len: series.len(), needed: 1 });
    }
    let n = n as f64;
    Ok(RippleResidual {
        residual_rms: (res / n).sqrt(),
        ripple_rms: (rip / n).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyOutcome {
    pub plan: PathPlan,
    pub dwells: Vec<DwellResult>,
    pub inductances: Vec<InductanceRecord>,
    pub map: FluxMap,
    pub consistency: ConsistencyReport,
}

impl SaliencyOutcome {
    pub fn records(&self) -> Vec<SaliencyRecord> {
        self.dwells.iter().map(|d| d.record).collect()
    }
}

/// Integrates the inductance records along the planned paths and anchors the
/// result at zero current.
pub fn assemble_flux_map(plan: &PathPlan, inductances: &[InductanceRecord], rule: StepRule) -> Result<FluxMap> {
    let mut fluxes: Vec<Vec<FluxDq>> = Vec::with_capacity(plan.paths.len());
    let mut samples = Vec::new();
    for p in &plan.paths {
        let path = CurrentPath::new(p.id, p.targets.iter().map(|&t| inductances[t]).collect())?;
        let out = integrate_path(&path, FluxDq::ZERO, rule);
        let pos = |pp: &PlannedPath| pp.targets.iter().position(|&t| t == p.anchor);
        let own = pos(p).ok_or_else(|| Error::InvalidParameter(format!("path {} misses its anchor", p.id)))?;
        let wanted = match p.tie {
            None => FluxDq::ZERO,
            Some(src) => {
                let sp = plan
                    .paths
                    .iter()
                    .position(|x| x.id == src)
                    .filter(|&k| k < fluxes.len())
                    .ok_or_else(|| Error::InvalidParameter(format!("path {} tied to later path {src}", p.id)))?;
                let at = pos(&plan.paths[sp])
                    .ok_or_else(|| Error::InvalidParameter(format!("path {src} misses tie point of {}", p.id)))?;
                fluxes[sp][at]
            }
        };
        let shift = wanted - out[own].1;
        let phis: Vec<FluxDq> = out.iter().map(|(_, phi)| *phi + shift).collect();
        for (arc, ((i, _), phi)) in out.iter().zip(&phis).enumerate() {
            samples.push(FluxSample {
                i: *i,
                phi: *phi,
                path_id: p.id,
                arc_index: arc,
            });
        }
        fluxes.push(phis);
    }
    anchor_flux(&FluxMap::new(Method::Saliency, samples))
}

pub fn run_saliency(sim: &SimConfig, cfg: &SaliencyConfig) -> Result<SaliencyOutcome> {
    let plan = plan_paths(cfg)?;
    let dwells = plan
        .targets
        .par_iter()
        .enumerate()
        .map(|(k, &target)| run_dwell(sim, cfg, target, k as u64))
        .collect::<Result<Vec<_>>>()?;
    let inductances = dwells
        .iter()
        .map(|d| invert_saliency(&d.record))
        .collect::<Result<Vec<_>>>()?;
    let map = assemble_flux_map(&plan, &inductances, cfg.step_rule)?;
    let consistency = ConsistencyReport::build(&map, &inductances);
    Ok(SaliencyOutcome {
        plan,
        dwells,
        inductances,
        map,
        consistency,
    })
}
