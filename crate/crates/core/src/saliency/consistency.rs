use serde::{Deserialize, Serialize};

use crate::fluxmap::{FluxMap, FluxSample};
use crate::frames::FluxDq;
use crate::geometry::{segment_intersection, DelaunayInterpolator};
use crate::saliency::InductanceRecord;

/// Radius for matching a mirrored point to an existing sample [A].
pub const MIRROR_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub path_a: usize,
    pub path_b: usize,
    pub id: f64,
    pub iq: f64,
    pub phi_a: FluxDq,
    pub phi_b: FluxDq,
    pub rel_err_d: f64,
    pub rel_err_q: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntersectionReport {
    pub max_rel_err_d: f64,
    pub max_rel_err_q: f64,
    pub mean_rel_err_d: f64,
    pub mean_rel_err_q: f64,
    pub intersections: Vec<Intersection>,
    /// No pair of paths crosses.
    pub empty: bool,
}

fn lerp(a: FluxDq, b: FluxDq, t: f64) -> FluxDq {
    a * (1.0 - t) + b * t
}

fn pt(s: &FluxSample) -> (f64, f64) {
    (s.i.d, s.i.q)
}

/// Flux mismatch wherever two distinct paths cross, relative to the per-axis
/// flux span of the whole map.
pub fn intersection_consistency(map: &FluxMap) -> IntersectionReport {
    let paths: Vec<(usize, Vec<FluxSample>)> = map.paths().into_iter().filter(|p| p.1.len() >= 2).collect();
    let span = map.flux_span();
    let rel = |x: f64, s: f64| if s > 0.0 { x.abs() / s } else { 0.0 };
    let mut found = Vec::new();
    for (ia, (id_a, a)) in paths.iter().enumerate() {
        for (id_b, b) in &paths[ia + 1..] {
            let mut pair: Vec<Intersection> = Vec::new();
            for sa in a.windows(2) {
                for sb in b.windows(2) {
                    let Some((p, t, u)) = segment_intersection(pt(&sa[0]), pt(&sa[1]), pt(&sb[0]), pt(&sb[1]))
                    else {
                        continue;
                    };
                    // a crossing at a shared vertex is found on adjacent segments too
                    if pair.iter().any(|x| (x.id - p.0).hypot(x.iq - p.1) < 1e-6) {
                        continue;
                    }
                    let phi_a = lerp(sa[0].phi, sa[1].phi, t);
                    let phi_b = lerp(sb[0].phi, sb[1].phi, u);
                    let d = phi_a - phi_b;
                    pair.push(Intersection {
                        path_a: *id_a,
                        path_b: *id_b,
                        id: p.0,
                        iq: p.1,
                        phi_a,
                        phi_b,
                        rel_err_d: rel(d.d, span.d),
                        rel_err_q: rel(d.q, span.q),
                    });
                }
            }
            found.extend(pair);
        }
    }
    let n = found.len().max(1) as f64;
    IntersectionReport {
        max_rel_err_d: found.iter().map(|x| x.rel_err_d).fold(0.0, f64::max),
        max_rel_err_q: found.iter().map(|x| x.rel_err_q).fold(0.0, f64::max),
        mean_rel_err_d: found.iter().map(|x| x.rel_err_d).sum::<f64>() / n,
        mean_rel_err_q: found.iter().map(|x| x.rel_err_q).sum::<f64>() / n,
        empty: found.is_empty(),
        intersections: found,
    }
}

/// Symmetry defect of one quantity under `iq → −iq`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParityEntry {
    pub name: String,
    /// `true` for even, `false` for odd.
    pub even: bool,
    /// Largest defect relative to the span of the quantity.
    pub max_asymmetry: f64,
    pub mean_asymmetry: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParityReport {
    /// Share of off-axis points whose mirror image could be evaluated.
    pub coverage: f64,
    pub entries: Vec<ParityEntry>,
}

impl ParityReport {
    pub fn max_asymmetry(&self) -> f64 {
        self.entries.iter().map(|e| e.max_asymmetry).fold(0.0, f64::max)
    }

    /// At least one mirror pair was evaluated.
    pub fn has_verdict(&self) -> bool {
        self.coverage > 0.0
    }
}

/// Generic parity test on scattered values; `fields` holds each quantity
/// with its expected parity.
fn parity(points: &[(f64, f64)], fields: &[(&str, bool, Vec<f64>)]) -> ParityReport {
    let interp = DelaunayInterpolator::new(points);
    let tol2 = MIRROR_TOLERANCE * MIRROR_TOLERANCE;
    let candidates: Vec<usize> = (0..points.len()).filter(|&k| points[k].1.abs() > MIRROR_TOLERANCE).collect();

    // mirror image of each candidate as a set of (vertex, weight)
    let mut mirrors: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    for &k in &candidates {
        let m = (points[k].0, -points[k].1);
        let nearest = (0..points.len())
            .map(|j| (j, (points[j].0 - m.0).powi(2) + (points[j].1 - m.1).powi(2)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((j, d2)) if d2 <= tol2 => mirrors.push((k, vec![(j, 1.0)])),
            _ => {
                if let Some((t, w)) = interp.locate(m) {
                    mirrors.push((k, t.iter().copied().zip(w).collect()));
                }
            }
        }
    }
    let coverage = if candidates.is_empty() {
        0.0
    } else {
        mirrors.len() as f64 / candidates.len() as f64
    };

    let entries = fields
        .iter()
        .map(|(name, even, v)| {
            let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(*x), h.max(*x)));
            let span = if hi > lo { hi - lo } else { 0.0 };
            let sign = if *even { 1.0 } else { -1.0 };
            let defects: Vec<f64> = mirrors
                .iter()
                .map(|(k, w)| {
                    let mirrored: f64 = w.iter().map(|(j, c)| c * v[*j]).sum();
                    let d = (v[*k] - sign * mirrored).abs();
                    if span > 0.0 {
                        d / span
                    } else {
                        0.0
                    }
                })
                .collect();
            ParityEntry {
                name: name.to_string(),
                even: *even,
                max_asymmetry: defects.iter().copied().fold(0.0, f64::max),
                mean_asymmetry: defects.iter().sum::<f64>() / defects.len().max(1) as f64,
                pairs: defects.len(),
            }
        })
        .collect();
    ParityReport { coverage, entries }
}

/// `φd` even and `φq` odd in the quadrature current.
pub fn parity_check_flux(map: &FluxMap) -> ParityReport {
    let points: Vec<(f64, f64)> = map.samples.iter().map(pt).collect();
    parity(
        &points,
        &[
            ("phid", true, map.samples.iter().map(|s| s.phi.d).collect()),
            ("phiq", false, map.samples.iter().map(|s| s.phi.q).collect()),
        ],
    )
}

/// `Ldd`, `Lqq` even and `Ldq` odd in the quadrature current.
pub fn parity_check_inductance(records: &[InductanceRecord]) -> ParityReport {
    let points: Vec<(f64, f64)> = records.iter().map(|r| (r.i_bar.d, r.i_bar.q)).collect();
    parity(
        &points,
        &[
            ("Ldd", true, records.iter().map(|r| r.l.m11).collect()),
            ("Ldq", false, records.iter().map(|r| r.l.m12).collect()),
            ("Lqq", true, records.iter().map(|r| r.l.m22).collect()),
        ],
    )
}

/// Combined consistency artifact of a saliency run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub max_rel_err_d: f64,
    pub max_rel_err_q: f64,
    pub intersections: Vec<Intersection>,
    pub parity: ConsistencyParity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyParity {
    pub flux: ParityReport,
    pub inductance: ParityReport,
}

impl ConsistencyReport {
    pub fn build(map: &FluxMap, records: &[InductanceRecord]) -> Self {
        let inter = intersection_consistency(map);
        Self {
            max_rel_err_d: inter.max_rel_err_d,
            max_rel_err_q: inter.max_rel_err_q,
            intersections: inter.intersections,
            parity: ConsistencyParity {
                flux: parity_check_flux(map),
                inductance: parity_check_inductance(records),
            },
        }
    }
}
