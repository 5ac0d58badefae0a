//! Pointwise comparison of two flux maps, optionally against a model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluxmap::{FluxMap, FluxSample, Method};
use crate::frames::{CurrentDq, FluxDq};
use crate::magnetics::EnergyModel;
use crate::saliency::{intersection_consistency, parity_check_flux, ParityReport};

/// Largest distance from a sample to the other map's paths for it to count
/// as overlapping [A].
pub const OVERLAP_TOLERANCE: f64 = 0.05;
/// Required share of overlapping samples.
pub const MIN_COVERAGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AxisError {
    /// [Wb]
    pub max_abs: f64,
    /// [Wb]
    pub mean_abs: f64,
    /// Percent of the axis flux span.
    pub max_pct: f64,
    pub mean_pct: f64,
}

impl AxisError {
    fn from_abs(errors: &[f64], span: f64) -> Self {
        let max_abs = errors.iter().copied().fold(0.0, f64::max);
        let mean_abs = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
        let pct = |x: f64| if span > 0.0 { (100.0 * x / span).min(100.0) } else { 0.0 };
        Self {
            max_abs,
            mean_abs,
            max_pct: pct(max_abs),
            mean_pct: pct(mean_abs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FluxError {
    pub d: AxisError,
    pub q: AxisError,
}

impl FluxError {
    fn from_diffs(diffs: &[FluxDq], span: FluxDq) -> Self {
        let d: Vec<f64> = diffs.iter().map(|x| x.d.abs()).collect();
        let q: Vec<f64> = diffs.iter().map(|x| x.q.abs()).collect();
        Self {
            d: AxisError::from_abs(&d, span.d),
            q: AxisError::from_abs(&q, span.q),
        }
    }

    /// Larger of the two per-axis maxima, in percent of span.
    pub fn max_pct(&self) -> f64 {
        self.d.max_pct.max(self.q.max_pct)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveError {
    pub path_id: usize,
    pub matched: usize,
    pub error: FluxError,
}

/// Self-consistency figures of one map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDiagnostics {
    pub method: Method,
    pub samples: usize,
    pub max_rel_err_d: f64,
    pub max_rel_err_q: f64,
    pub parity: ParityReport,
    pub truth: Option<FluxError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Share of samples of `a` that could be matched on `b`.
    pub coverage: f64,
    /// `a − b` over all matched samples.
    pub difference: FluxError,
    pub curves: Vec<CurveError>,
    pub a: MapDiagnostics,
    pub b: MapDiagnostics,
}

/// Flux of `map` at `i`, interpolated on the nearest path segment within
/// [`OVERLAP_TOLERANCE`].
pub fn interpolate_on_paths(map: &FluxMap, i: CurrentDq) -> Option<FluxDq> {
    let paths: Vec<Vec<FluxSample>> = map.paths().into_values().collect();
    interpolate_on(&paths, i)
}

fn interpolate_on(paths: &[Vec<FluxSample>], i: CurrentDq) -> Option<FluxDq> {
    let p = (i.d, i.q);
    let mut best: Option<(f64, FluxDq)> = None;
    for path in paths {
        if path.len() == 1 {
            let d = (path[0].i - i).norm();
            if best.map_or(true, |b| d < b.0) {
                best = Some((d, path[0].phi));
            }
            continue;
        }
        for w in path.windows(2) {
            let (t, d) = crate::geometry::project_on_segment(p, (w[0].i.d, w[0].i.q), (w[1].i.d, w[1].i.q));
            if best.map_or(true, |b| d < b.0) {
                best = Some((d, w[0].phi * (1.0 - t) + w[1].phi * t));
            }
        }
    }
    best.filter(|b| b.0 <= OVERLAP_TOLERANCE).map(|b| b.1)
}

fn span_union(a: &FluxMap, b: &FluxMap) -> FluxDq {
    let mut lo = FluxDq::new(f64::INFINITY, f64::INFINITY);
    let mut hi = FluxDq::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in a.samples.iter().chain(&b.samples) {
        lo = FluxDq::new(lo.d.min(s.phi.d), lo.q.min(s.phi.q));
        hi = FluxDq::new(hi.d.max(s.phi.d), hi.q.max(s.phi.q));
    }
    hi - lo
}

/// Deviation of a map from the model's flux differences to zero current.
pub fn truth_error(map: &FluxMap, model: &EnergyModel) -> Result<FluxError> {
    let phi0 = model.flux_from_current(CurrentDq::ZERO)?;
    let diffs = map
        .samples
        .iter()
        .map(|s| Ok(s.phi - (model.flux_from_current(s.i)? - phi0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FluxError::from_diffs(&diffs, map.flux_span()))
}

/// Intersection, parity and optional ground-truth figures of one map.
pub fn map_diagnostics(map: &FluxMap, truth: Option<&EnergyModel>) -> Result<MapDiagnostics> {
    let inter = intersection_consistency(map);
    Ok(MapDiagnostics {
        method: map.method,
        samples: map.len(),
        max_rel_err_d: inter.max_rel_err_d,
        max_rel_err_q: inter.max_rel_err_q,
        parity: parity_check_flux(map),
        truth: truth.map(|m| truth_error(map, m)).transpose()?,
    })
}

pub fn compare_maps(a: &FluxMap, b: &FluxMap, truth: Option<&EnergyModel>) -> Result<ComparisonReport> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientOverlap { coverage: 0.0 });
    }
    let span = span_union(a, b);
    let paths_b: Vec<Vec<FluxSample>> = b.paths().into_values().collect();
    let mut all = Vec::new();
    let mut curves = Vec::new();
    for (path_id, path) in a.paths() {
        let diffs: Vec<FluxDq> = path
            .iter()
            .filter_map(|s| interpolate_on(&paths_b, s.i).map(|phi_b| s.phi - phi_b))
            .collect();
        if !diffs.is_empty() {
            curves.push(CurveError {
                path_id,
                matched: diffs.len(),
                error: FluxError::from_diffs(&diffs, span),
            });
        }
        all.extend(diffs);
    }
    let coverage = all.len() as f64 / a.len() as f64;
    if coverage < MIN_COVERAGE {
        return Err(Error::InsufficientOverlap { coverage });
    }
    Ok(ComparisonReport {
        coverage,
        difference: FluxError::from_diffs(&all, span),
        curves,
        a: map_diagnostics(a, truth)?,
        b: map_diagnostics(b, truth)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_map(method: Method, offset: f64, shift: FluxDq) -> FluxMap {
        let samples = (0..=20)
            .map(|k| {
                let iq = -1.0 + 0.1 * k as f64 + offset;
                FluxSample {
                    i: CurrentDq::new(0.5, iq),
                    phi: FluxDq::new(0.02 + 0.01 * iq * iq, 0.07 * iq) + shift,
                    path_id: 0,
                    arc_index: k,
                }
            })
            .collect();
        FluxMap::new(method, samples)
    }

    #[test]
    fn identical_maps_have_zero_difference() {
        let a = line_map(Method::Classical, 0.0, FluxDq::ZERO);
        let r = compare_maps(&a, &a, None).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert_eq!(r.difference.d.max_abs, 0.0);
        assert_eq!(r.difference.q.max_abs, 0.0);
    }

    #[test]
    fn constant_offset_is_reported() {
        let a = line_map(Method::Classical, 0.0, FluxDq::new(0.001, 0.0));
        let b = line_map(Method::Saliency, 0.0, FluxDq::ZERO);
        let r = compare_maps(&a, &b, None).unwrap();
        assert!((r.difference.d.max_abs - 0.001).abs() < 1e-12);
        assert!(r.difference.d.max_pct > 0.0 && r.difference.d.max_pct <= 100.0);
    }

    #[test]
    fn staggered_samples_are_interpolated() {
        let mut a = line_map(Method::Classical, 0.05, FluxDq::ZERO);
        a.samples.pop();
        let b = line_map(Method::Saliency, 0.0, FluxDq::ZERO);
        let r = compare_maps(&a, &b, None).unwrap();
        assert_eq!(r.coverage, 1.0);
        assert!(r.difference.q.max_abs < 1e-12);
        // chord error of the quadratic term over a 0.1 A segment
        assert!(r.difference.d.max_abs <= 0.01 * 0.05 * 0.05 + 1e-12);
    }

    #[test]
    fn disjoint_maps_are_rejected() {
        let a = line_map(Method::Classical, 0.0, FluxDq::ZERO);
        let mut b = line_map(Method::Saliency, 0.0, FluxDq::ZERO);
        for s in &mut b.samples {
            s.i.d += 1.0;
        }
        assert!(matches!(
            compare_maps(&a, &b, None),
            Err(Error::InsufficientOverlap { .. })
        ));
    }
}
