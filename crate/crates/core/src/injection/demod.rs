//! Separation of a sampled current into its slow part and the amplitude of the
//! ripple produced by the injected signal.
//!
//! Windows always span exactly one injection period (`N` samples). The slow
//! part is the window mean, stamped at the window centre. The ripple amplitude
//! is the correlation of `i − ī` with `F`, both taken at the same instant,
//! normalised by `Σ F²`, so that `i = ī + g·F(Ωt)` returns `g`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::injection::waveform::Waveform;

/// Uniformly sampled scalar signal; sample `k` is taken at `t0 + k·dt`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampledSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl SampledSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Self {
        Self { t0, dt, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Linear interpolation at `t`, `None` outside the sampled span.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let n = self.values.len();
        if n == 0 {
            return None;
        }
        let u = (t - self.t0) / self.dt;
        let last = (n - 1) as f64;
        if u < -1e-9 || u > last + 1e-9 {
            return None;
        }
        let u = u.clamp(0.0, last);
        let k = (u.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return Some(self.values[0]);
        }
        let frac = u - k as f64;
        Some(self.values[k] * (1.0 - frac) + self.values[k + 1] * frac)
    }
}

/// Samples per injection period; must be an even integer.
pub fn samples_per_period(dt: f64, omega: f64) -> Result<usize> {
    if !(dt > 0.0 && omega > 0.0) {
        return Err(Error::Sampling(format!("dt = {dt}, Ω = {omega}")));
    }
    let ratio = 1.0 / (omega * dt);
    let n = ratio.round();
    if n < 2.0 || (ratio - n).abs() > 1e-6 * n || (n as usize) % 2 != 0 {
        return Err(Error::Sampling(format!(
            "sample rate must be an even integer multiple of Ω (got {ratio} samples per period)"
        )));
    }
    Ok(n as usize)
}

/// `ī(t) = Ω·∫_{t−1/Ω}^{t} i`, one output per full window.
pub fn extract_slow(i: &SampledSeries, omega: f64) -> Result<SampledSeries> {
    let n = samples_per_period(i.dt, omega)?;
    if i.len() < n {
        return Err(Error::SeriesTooShort { len: i.len(), needed: n });
    }
    let inv = 1.0 / n as f64;
    let values = i.values.windows(n).map(|w| w.iter().sum::<f64>() * inv).collect();
    Ok(SampledSeries::new(
        i.t0 + 0.5 * (n - 1) as f64 * i.dt,
        i.dt,
        values,
    ))
}

/// Ripple amplitude `ĩ` such that `i ≈ ī + ĩ·F(Ωt)`.
///
/// `i_slow` is read at each sample instant of `i` by linear interpolation on
/// its own time stamps, so any output of [`extract_slow`] aligns correctly.
pub fn extract_ripple(
    i: &SampledSeries,
    i_slow: &SampledSeries,
    w: Waveform,
    omega: f64,
) -> Result<SampledSeries> {
    let n = samples_per_period(i.dt, omega)?;
    if i.len() < n {
        return Err(Error::SeriesTooShort { len: i.len(), needed: n });
    }
    // Samples for which the slow part is available.
    let mut first = None;
    let mut detrended = Vec::with_capacity(i.len());
    let mut shape = Vec::with_capacity(i.len());
    for k in 0..i.len() {
        let t = i.time(k);
        match i_slow.value_at(t) {
            Some(s) => {
                first.get_or_insert(k);
                detrended.push(i.values[k] - s);
                shape.push(w.primitive(omega * t));
            }
            None if first.is_some() => break,
            None => {}
        }
    }
    let first = first.unwrap_or(0);
    if detrended.len() < n {
        return Err(Error::SeriesTooShort {
            len: detrended.len(),
            needed: n,
        });
    }
    let values = detrended
        .windows(n)
        .zip(shape.windows(n))
        .map(|(x, f)| {
            let num: f64 = x.iter().zip(f).map(|(a, b)| a * b).sum();
            let den: f64 = f.iter().map(|b| b * b).sum();
            num / den
        })
        .collect();
    Ok(SampledSeries::new(
        i.time(first) + 0.5 * (n - 1) as f64 * i.dt,
        i.dt,
        values,
    ))
}
