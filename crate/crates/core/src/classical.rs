//! Flux identification by time integration of the locked-rotor stator
//! equation, with resistance estimated on constant-current plateaus.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{CurrentDq, FluxDq};
use crate::sim::TimeSeries;

pub use crate::fluxmap::{anchor_flux, FluxMap, FluxSample, Method};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    /// Shortest usable plateau, settling included [s].
    pub min_duration: f64,
    /// Discarded start of each plateau [s].
    pub settle: f64,
    /// Current measurement noise used for the steadiness test [A].
    pub noise_std: f64,
    /// Steadiness band in multiples of the noise level.
    pub k_sigma: f64,
    /// Plateaus whose mean current is smaller are ignored [A].
    pub min_current: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            min_duration: 0.2,
            settle: 0.05,
            noise_std: 5e-3,
            k_sigma: 3.0,
            min_current: 0.2,
        }
    }
}

/// Noise level below which the steadiness band is not tightened further [A].
const SIGMA_FLOOR: f64 = 1e-3;
/// Share of samples that must lie inside the band (a Gaussian gives 99.73%).
const INSIDE_FRACTION: f64 = 0.99;

/// Usable samples `start..end` of one constant-current phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub start: usize,
    pub end: usize,
    pub mean_current: CurrentDq,
}

/// Runs of samples over which the set-point is constant. Closed-loop records
/// use the current reference; open-loop ones the commanded voltage.
fn constant_runs(series: &TimeSeries) -> Vec<(usize, usize)> {
    let n = series.len();
    let same = |a: usize, b: usize| {
        if series.i_ref.len() == n {
            (series.i_ref[a] - series.i_ref[b]).norm() <= 1e-12
        } else {
            (series.v_ab_cmd[a] - series.v_ab_cmd[b]).norm() <= 1e-12
        }
    };
    let mut runs = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        if k == n || !same(k, start) {
            runs.push((start, k));
            start = k;
        }
    }
    runs
}

pub fn detect_plateaus(series: &TimeSeries, cfg: &PlateauConfig) -> Vec<Plateau> {
    let ts = series.sample_period;
    let min_len = (cfg.min_duration / ts).round() as usize;
    let skip = (cfg.settle / ts).round() as usize;
    let band = cfg.k_sigma * cfg.noise_std.max(SIGMA_FLOOR);
    let mut out = Vec::new();
    for (a, b) in constant_runs(series) {
        if b - a < min_len.max(skip + 2) {
            continue;
        }
        let start = a + skip;
        let m = (b - start) as f64;
        let mean = (start..b).fold(CurrentDq::ZERO, |acc, k| acc + series.i_dq(k)) * (1.0 / m);
        if mean.norm() < cfg.min_current {
            continue;
        }
        let inside = (start..b)
            .filter(|&k| {
                let e = series.i_dq(k) - mean;
                e.d.abs() <= band && e.q.abs() <= band
            })
            .count();
        if inside as f64 >= INSIDE_FRACTION * m {
            out.push(Plateau {
                start,
                end: b,
                mean_current: mean,
            });
        }
    }
    out
}

/// Power ratio `vᵀi / iᵀi` averaged over the samples of one plateau.
fn plateau_ratio(series: &TimeSeries, p: &Plateau) -> f64 {
    let sum: f64 = (p.start..p.end)
        .map(|k| {
            let i = series.i_dq(k);
            series.v_dq_cmd(k).cast().dot(i) / i.dot(i)
        })
        .sum();
    sum / (p.end - p.start) as f64
}

/// Resistance estimate of each plateau, stamped at its middle `(t, Rs)`.
pub fn resistance_per_plateau(series: &TimeSeries, cfg: &PlateauConfig) -> Result<Vec<(f64, f64)>> {
    let plateaus = detect_plateaus(series, cfg);
    if plateaus.is_empty() {
        return Err(Error::NoPlateau);
    }
    Ok(plateaus
        .iter()
        .map(|p| {
            let t = 0.5 * (series.t[p.start] + series.t[p.end - 1]);
            (t, plateau_ratio(series, p))
        })
        .collect())
}

/// Mean over all plateau samples of the power ratio [Ω].
pub fn estimate_resistance(series: &TimeSeries, cfg: &PlateauConfig) -> Result<f64> {
    let plateaus = detect_plateaus(series, cfg);
    if plateaus.is_empty() {
        return Err(Error::NoPlateau);
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for p in &plateaus {
        let len = p.end - p.start;
        sum += plateau_ratio(series, p) * len as f64;
        n += len;
    }
    Ok(sum / n as f64)
}

/// How the resistance used for integration is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ResistanceMode {
    /// One estimate per record from all its plateaus.
    Estimate,
    /// Piecewise-linear interpolation between plateau estimates.
    Tracked,
    Fixed { value: f64 },
}

impl Default for ResistanceMode {
    fn default() -> Self {
        ResistanceMode::Estimate
    }
}

/// Time-dependent resistance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceSchedule {
    knots: Vec<(f64, f64)>,
}

impl ResistanceSchedule {
    pub fn constant(rs: f64) -> Self {
        Self { knots: vec![(0.0, rs)] }
    }

    pub fn from_series(series: &TimeSeries, mode: ResistanceMode, cfg: &PlateauConfig) -> Result<Self> {
        match mode {
            ResistanceMode::Fixed { value } => Ok(Self::constant(value)),
            ResistanceMode::Estimate => Ok(Self::constant(estimate_resistance(series, cfg)?)),
            ResistanceMode::Tracked => Ok(Self {
                knots: resistance_per_plateau(series, cfg)?,
            }),
        }
    }

    /// Held constant outside the first and last knots.
    pub fn at(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t <= k[0].0 {
            return k[0].1;
        }
        let j = k.partition_point(|&(tk, _)| tk <= t);
        if j == k.len() {
            return k[j - 1].1;
        }
        let ((t0, r0), (t1, r1)) = (k[j - 1], k[j]);
        r0 + (r1 - r0) * (t - t0) / (t1 - t0)
    }

    pub fn mean(&self) -> f64 {
        self.knots.iter().map(|k| k.1).sum::<f64>() / self.knots.len() as f64
    }
}

/// `φ(t) = φ0 + ∫(v − Rs·i)` with a constant resistance estimate.
pub fn integrate_flux(series: &TimeSeries, rs_hat: f64, phi0: FluxDq) -> Vec<FluxDq> {
    integrate_flux_with(series, |_| rs_hat, phi0)
}

/// Cumulative quadrature of the stator equation.
///
/// The voltage is piecewise constant between samples, so its integral is the
/// exact left sum; the resistive drop uses the trapezoidal rule on the
/// sampled current.
pub fn integrate_flux_with<F: Fn(f64) -> f64>(series: &TimeSeries, rs_hat: F, phi0: FluxDq) -> Vec<FluxDq> {
    let n = series.len();
    let ts = series.sample_period;
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let mut phi = phi0;
    out.push(phi);
    let mut prev = series.i_dq(0).cast::<crate::frames::Flux>() * rs_hat(series.t[0]);
    for k in 1..n {
        let drop = series.i_dq(k).cast::<crate::frames::Flux>() * rs_hat(series.t[k]);
        phi += series.v_dq_cmd(k - 1).cast() * ts - (prev + drop) * (0.5 * ts);
        prev = drop;
        out.push(phi);
    }
    out
}

/// Curve obtained by averaging all passes of a repeated sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleAverage {
    /// One `(mean current, mean flux)` per occupied bin, ordered along the sweep.
    pub points: Vec<(CurrentDq, FluxDq)>,
    /// Bins inside the covered range that received no sample.
    pub empty_bins: usize,
}

/// Averages flux over all cycles in current bins of width `bin_width` along
/// `direction`; bins are centred on integer multiples of the width.
pub fn cycle_average(
    cycles: &[Vec<(CurrentDq, FluxDq)>],
    direction: (f64, f64),
    bin_width: f64,
) -> Result<CycleAverage> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidParameter(format!("bin width {bin_width}")));
    }
    let coord = |i: CurrentDq| i.d * direction.0 + i.q * direction.1;
    let bin = |i: CurrentDq| (coord(i) / bin_width).round() as i64;
    let all = cycles.iter().flatten();
    let (lo, hi) = all.clone().fold((i64::MAX, i64::MIN), |(lo, hi), (i, _)| {
        let b = bin(*i);
        (lo.min(b), hi.max(b))
    });
    if lo > hi {
        return Err(Error::SeriesTooShort { len: 0, needed: 1 });
    }
    let width = (hi - lo + 1) as usize;
    let mut acc = vec![(CurrentDq::ZERO, FluxDq::ZERO, 0usize); width];
    for (i, phi) in all {
        let slot = &mut acc[(bin(*i) - lo) as usize];
        slot.0 += *i;
        slot.1 += *phi;
        slot.2 += 1;
    }
    let empty_bins = acc.iter().filter(|a| a.2 == 0).count();
    let points = acc
        .into_iter()
        .filter(|a| a.2 > 0)
        .map(|(i, phi, n)| (i * (1.0 / n as f64), phi * (1.0 / n as f64)))
        .collect();
    Ok(CycleAverage { points, empty_bins })
}

/// Point scatter of a repeated sweep before and after cycle averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    /// RMS distance of every sample to the mean flux of its bin [Wb].
    pub raw: f64,
    /// RMS standard error of the averaged curve, from the half difference of
    /// the curves averaged over even and odd cycles [Wb].
    pub averaged: f64,
}

pub fn scatter(cycles: &[Vec<(CurrentDq, FluxDq)>], direction: (f64, f64), bin_width: f64) -> Result<Scatter> {
    if cycles.len() < 2 {
        return Err(Error::InvalidParameter("scatter needs at least two cycles".into()));
    }
    let bin = |i: CurrentDq| ((i.d * direction.0 + i.q * direction.1) / bin_width).round() as i64;
    let mut means: std::collections::BTreeMap<i64, (FluxDq, usize)> = Default::default();
    for (i, phi) in cycles.iter().flatten() {
        let e = means.entry(bin(*i)).or_insert((FluxDq::ZERO, 0));
        e.0 += *phi;
        e.1 += 1;
    }
    let (mut sq, mut n) = (0.0, 0usize);
    for (i, phi) in cycles.iter().flatten() {
        let (sum, count) = means[&bin(*i)];
        let d = *phi - sum * (1.0 / count as f64);
        sq += d.dot(d);
        n += 1;
    }
    let raw = (sq / n as f64).sqrt();

    let half = |parity: usize| -> Vec<Vec<(CurrentDq, FluxDq)>> {
        cycles.iter().skip(parity).step_by(2).cloned().collect()
    };
    let even = cycle_average(&half(0), direction, bin_width)?;
    let odd = cycle_average(&half(1), direction, bin_width)?;
    let odd_by_bin: std::collections::BTreeMap<i64, FluxDq> =
        odd.points.iter().map(|(i, phi)| (bin(*i), *phi)).collect();
    let (mut sq, mut n) = (0.0, 0usize);
    for (i, phi) in &even.points {
        if let Some(other) = odd_by_bin.get(&bin(*i)) {
            let d = (*phi - *other) * 0.5;
            sq += d.dot(d);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::SeriesTooShort { len: 0, needed: 1 });
    }
    Ok(Scatter {
        raw,
        averaged: (sq / n as f64).sqrt(),
    })
}

/// Enclosed area of a polyline closed back onto its start (shoelace).
pub fn loop_area(points: &[(f64, f64)]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 0..n {
        let (x0, y0) = points[k];
        let (x1, y1) = points[(k + 1) % n];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s.abs()
}
