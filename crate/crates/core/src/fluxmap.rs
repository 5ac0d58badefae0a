//! Identified current-flux relations as collections of samples along paths.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{CurrentDq, FluxDq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Classical,
    Saliency,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Classical => "classical",
            Method::Saliency => "saliency",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Method::Classical),
            "saliency" => Ok(Method::Saliency),
            other => Err(Error::Parse(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxSample {
    pub i: CurrentDq,
    pub phi: FluxDq,
    pub path_id: usize,
    /// Position along the path.
    pub arc_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxMap {
    pub samples: Vec<FluxSample>,
    /// Total flux offset already removed from the samples.
    pub anchor: FluxDq,
    pub method: Method,
}

/// Largest current magnitude accepted as "zero" when anchoring [A].
pub const ANCHOR_TOLERANCE: f64 = 0.05;

pub const FLUXMAP_CSV_HEADER: &str = "method,path_id,id,iq,phid,phiq";

impl FluxMap {
    pub fn new(method: Method, samples: Vec<FluxSample>) -> Self {
        Self {
            samples,
            anchor: FluxDq::ZERO,
            method,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples grouped per path, each in arc order.
    pub fn paths(&self) -> BTreeMap<usize, Vec<FluxSample>> {
        let mut out: BTreeMap<usize, Vec<FluxSample>> = BTreeMap::new();
        for s in &self.samples {
            out.entry(s.path_id).or_default().push(*s);
        }
        for p in out.values_mut() {
            p.sort_by_key(|s| s.arc_index);
        }
        out
    }

    /// Sample with the smallest current magnitude, if any.
    pub fn nearest_to_zero(&self) -> Option<&FluxSample> {
        self.samples
            .iter()
            .min_by(|a, b| a.i.norm().total_cmp(&b.i.norm()))
    }

    /// Extent of the flux over all samples, per axis.
    pub fn flux_span(&self) -> FluxDq {
        let span = |f: fn(&FluxSample) -> f64| {
            let (lo, hi) = self
                .samples
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if hi >= lo {
                hi - lo
            } else {
                0.0
            }
        };
        FluxDq::new(span(|s| s.phi.d), span(|s| s.phi.q))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{FLUXMAP_CSV_HEADER}")?;
        for (id, path) in self.paths() {
            for s in path {
                writeln!(w, "{},{id},{},{},{},{}", self.method, s.i.d, s.i.q, s.phi.d, s.phi.q)?;
            }
        }
        Ok(())
    }

    /// Reads a map written by [`FluxMap::write_csv`]; arc order is file order.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some(FLUXMAP_CSV_HEADER) {
            return Err(Error::Parse("missing flux map CSV header".into()));
        }
        let mut method = None;
        let mut samples = Vec::new();
        let mut counters: BTreeMap<usize, usize> = BTreeMap::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse(format!("line {}: {m}", n + 2));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 6 {
                return Err(err("expected 6 fields".into()));
            }
            let m: Method = fields[0].parse()?;
            if *method.get_or_insert(m) != m {
                return Err(err("mixed methods in one map".into()));
            }
            let path_id: usize = fields[1].parse().map_err(|e| err(format!("{e}")))?;
            let mut num = [0.0; 4];
            for (slot, f) in num.iter_mut().zip(&fields[2..]) {
                *slot = f.parse().map_err(|e| err(format!("{e}")))?;
            }
            let arc = counters.entry(path_id).or_insert(0);
            samples.push(FluxSample {
                i: CurrentDq::new(num[0], num[1]),
                phi: FluxDq::new(num[2], num[3]),
                path_id,
                arc_index: *arc,
            });
            *arc += 1;
        }
        let method = method.ok_or_else(|| Error::Parse("empty flux map".into()))?;
        Ok(Self::new(method, samples))
    }
}

/// Shifts all fluxes so the sample nearest to zero current has zero flux.
pub fn anchor_flux(map: &FluxMap) -> Result<FluxMap> {
    let origin = map
        .nearest_to_zero()
        .filter(|s| s.i.norm() <= ANCHOR_TOLERANCE)
        .ok_or(Error::NoAnchor {
            tolerance: ANCHOR_TOLERANCE,
        })?;
    let shift = origin.phi;
    let mut out = map.clone();
    for s in &mut out.samples {
        s.phi -= shift;
    }
    out.anchor = map.anchor + shift;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> FluxMap {
        let samples = (0..5)
            .map(|k| {
                let i = -0.2 + 0.1 * k as f64;
                FluxSample {
                    i: CurrentDq::new(i, 0.0),
                    phi: FluxDq::new(0.2 + 0.04 * i, 0.01),
                    path_id: 3,
                    arc_index: k,
                }
            })
            .collect();
        FluxMap::new(Method::Classical, samples)
    }

    #[test]
    fn anchoring_zeroes_origin_and_is_idempotent() {
        let a = anchor_flux(&map()).unwrap();
        let o = a.nearest_to_zero().unwrap();
        assert!(o.phi.norm() < 1e-15);
        assert!((a.anchor.d - 0.2).abs() < 1e-12);
        let b = anchor_flux(&a).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.anchor, b.anchor);
    }

    #[test]
    fn anchoring_is_shift_invariant() {
        let mut shifted = map();
        for s in &mut shifted.samples {
            s.phi += FluxDq::new(-1.0, 0.7);
        }
        let a = anchor_flux(&map()).unwrap();
        let b = anchor_flux(&shifted).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x.phi - y.phi).norm() < 1e-12);
        }
    }

    #[test]
    fn anchoring_needs_zero_current() {
        let mut m = map();
        m.samples.retain(|s| s.i.norm() > 0.15);
        assert!(matches!(anchor_flux(&m), Err(Error::NoAnchor { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let m = map();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("method,path_id,id,iq,phid,phiq\nclassical,3,"));
        assert!(!text.contains('\r'));
        assert_eq!(FluxMap::read_csv(&buf[..]).unwrap(), m);
    }

    #[test]
    fn rejects_bad_csv() {
        assert!(FluxMap::read_csv(&b"id,iq\n"[..]).is_err());
        assert!(FluxMap::read_csv(&b"method,path_id,id,iq,phid,phiq\nfoo,1,0,0,0,0\n"[..]).is_err());
    }
}
