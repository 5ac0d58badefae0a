//! Inductances from fitted Hessians, and flux by integration of the
//! inductance form along current paths.

mod consistency;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{CurrentDq, FluxDq};
use crate::injection::SaliencyRecord;
use crate::linalg::Sym2;

pub use consistency::{
    intersection_consistency, parity_check_flux, parity_check_inductance, ConsistencyReport,
    Intersection, IntersectionReport, ParityEntry, ParityReport, MIRROR_TOLERANCE,
};

/// Fits whose Hessian condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e6;

/// Largest per-axis current step between consecutive path points [A].
pub const MAX_PATH_STEP: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InductanceRecord {
    pub i_bar: CurrentDq,
    /// `[Ldd, Ldq, Lqq]` in H.
    pub l: Sym2,
    pub cond: f64,
}

impl InductanceRecord {
    /// Hessian recovered by inverting back.
    pub fn hessian(&self) -> Option<Sym2> {
        self.l.inverse()
    }
}

pub fn invert_saliency(rec: &SaliencyRecord) -> Result<InductanceRecord> {
    let h = rec.hessian;
    if !(h.det() > 0.0) || !h.is_positive_definite() {
        return Err(Error::NonPhysical(format!(
            "Hessian {h:?} at {:?} is not positive definite",
            rec.i_bar
        )));
    }
    let cond = h.condition_number();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::NonPhysical(format!("Hessian condition number {cond:e}")));
    }
    let l = h
        .inverse()
        .ok_or_else(|| Error::NonPhysical("singular Hessian".into()))?;
    Ok(InductanceRecord {
        i_bar: rec.i_bar,
        l,
        cond,
    })
}

pub const INDUCTANCE_CSV_HEADER: &str = "id,iq,Ldd,Ldq,Lqq,cond";

pub fn write_inductance_csv<W: Write>(records: &[InductanceRecord], mut w: W) -> Result<()> {
    writeln!(w, "{INDUCTANCE_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.i_bar.d, r.i_bar.q, r.l.m11, r.l.m12, r.l.m22, r.cond
        )?;
    }
    Ok(())
}

pub fn read_inductance_csv<R: BufRead>(r: R) -> Result<Vec<InductanceRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(INDUCTANCE_CSV_HEADER) {
        return Err(Error::Parse("missing inductance CSV header".into()));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", n + 2)))?;
        if v.len() != 6 {
            return Err(Error::Parse(format!("line {}: expected 6 fields", n + 2)));
        }
        out.push(InductanceRecord {
            i_bar: CurrentDq::new(v[0], v[1]),
            l: Sym2::new(v[2], v[3], v[4]),
            cond: v[5],
        });
    }
    Ok(out)
}

/// Ordered inductance measurements along one discretised current path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentPath {
    pub path_id: usize,
    pub points: Vec<InductanceRecord>,
}

impl CurrentPath {
    pub fn new(path_id: usize, points: Vec<InductanceRecord>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "path {path_id} needs at least two points"
            )));
        }
        for w in points.windows(2) {
            let d = w[1].i_bar - w[0].i_bar;
            if d.d.abs() > MAX_PATH_STEP + 1e-12 || d.q.abs() > MAX_PATH_STEP + 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "path {path_id}: step {:?} → {:?} exceeds {MAX_PATH_STEP} A",
                    w[0].i_bar, w[1].i_bar
                )));
            }
        }
        Ok(Self { path_id, points })
    }
}

/// Inductance used over one path step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    /// Mean of the records at both ends.
    #[default]
    Trapezoidal,
    /// Record at the arrival point only.
    Endpoint,
}

/// Cumulative flux along the path starting from `phi_start`.
pub fn integrate_path(path: &CurrentPath, phi_start: FluxDq, rule: StepRule) -> Vec<(CurrentDq, FluxDq)> {
    let pts = &path.points;
    let mut out = Vec::with_capacity(pts.len());
    let mut phi = phi_start;
    out.push((pts[0].i_bar, phi));
    for w in pts.windows(2) {
        let l = match rule {
            StepRule::Trapezoidal => Sym2::new(
                0.5 * (w[0].l.m11 + w[1].l.m11),
                0.5 * (w[0].l.m12 + w[1].l.m12),
                0.5 * (w[0].l.m22 + w[1].l.m22),
            ),
            StepRule::Endpoint => w[1].l,
        };
        phi += l.mul_vec(w[1].i_bar - w[0].i_bar);
        out.push((w[1].i_bar, phi));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnetics::{EnergyModel, MotorParams};

    fn rec(h: Sym2) -> SaliencyRecord {
        SaliencyRecord {
            i_bar: CurrentDq::ZERO,
            hessian: h,
            residual_rms: 0.0,
            h12_asymmetry: 0.0,
        }
    }

    #[test]
    fn diagonal_inverse_gives_rated_inductances() {
        let l = invert_saliency(&rec(Sym2::diag(1.0 / 43.25e-3, 1.0 / 69.05e-3))).unwrap();
        assert!((l.l.m11 - 43.25e-3).abs() < 1e-15);
        assert!((l.l.m22 - 69.05e-3).abs() < 1e-15);
        assert_eq!(l.l.m12, 0.0);
    }

    #[test]
    fn coupled_inverse() {
        let l = invert_saliency(&rec(Sym2::new(25.0, 5.0, 16.0))).unwrap().l;
        assert!((l.m11 - 16.0 / 375.0).abs() < 1e-15);
        assert!((l.m12 + 5.0 / 375.0).abs() < 1e-15);
        assert!((l.m22 - 25.0 / 375.0).abs() < 1e-15);
    }

    #[test]
    fn singular_or_indefinite_is_rejected() {
        assert!(invert_saliency(&rec(Sym2::new(4.0, 2.0, 1.0))).is_err());
        assert!(invert_saliency(&rec(Sym2::new(1.0, 2.0, 1.0))).is_err());
        assert!(invert_saliency(&rec(Sym2::new(1.0, 0.0, 1e-7))).is_err());
    }

    #[test]
    fn round_trip() {
        let h = Sym2::new(23.7, -1.9, 15.1);
        let back = invert_saliency(&rec(h)).unwrap().hessian().unwrap();
        for (a, b) in [(h.m11, back.m11), (h.m12, back.m12), (h.m22, back.m22)] {
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }

    fn constant_path(n: usize, step: CurrentDq, l: Sym2) -> CurrentPath {
        let pts = (0..n)
            .map(|k| InductanceRecord {
                i_bar: step * k as f64,
                l,
                cond: 1.0,
            })
            .collect();
        CurrentPath::new(0, pts).unwrap()
    }

    #[test]
    fn constant_form_is_linear() {
        let p = constant_path(11, CurrentDq::new(0.1, 0.0), Sym2::diag(43.25e-3, 69.05e-3));
        let out = integrate_path(&p, FluxDq::ZERO, StepRule::Trapezoidal);
        let last = out.last().unwrap().1;
        assert!((last.d - 43.25e-3).abs() < 1e-15);
        assert_eq!(last.q, 0.0);
    }

    #[test]
    fn coarse_steps_are_rejected() {
        let pts = vec![
            InductanceRecord {
                i_bar: CurrentDq::ZERO,
                l: Sym2::diag(0.04, 0.07),
                cond: 1.0,
            },
            InductanceRecord {
                i_bar: CurrentDq::new(0.3, 0.0),
                l: Sym2::diag(0.04, 0.07),
                cond: 1.0,
            },
        ];
        assert!(CurrentPath::new(1, pts.clone()).is_err());
        assert!(CurrentPath::new(1, pts[..1].to_vec()).is_err());
    }

    fn exact_record(model: &EnergyModel, i: CurrentDq) -> InductanceRecord {
        let h = model.hessian_at_current(i).unwrap();
        InductanceRecord {
            i_bar: i,
            l: h.inverse().unwrap(),
            cond: h.condition_number(),
        }
    }

    #[test]
    fn saturated_d_axis_matches_model() {
        let model = EnergyModel::default_saturated();
        let pts: Vec<_> = (0..=30)
            .map(|k| exact_record(&model, CurrentDq::new(0.1 * k as f64, 0.0)))
            .collect();
        let out = integrate_path(&CurrentPath::new(0, pts).unwrap(), FluxDq::ZERO, StepRule::Trapezoidal);
        let phi0 = model.flux_from_current(CurrentDq::ZERO).unwrap();
        let span = (model.flux_from_current(CurrentDq::new(3.0, 0.0)).unwrap() - phi0).d;
        for (i, phi) in out {
            let truth = model.flux_from_current(i).unwrap() - phi0;
            assert!((phi - truth).norm() <= 1e-3 * span.abs());
        }
    }

    #[test]
    fn closed_loop_returns_to_start() {
        let model = EnergyModel::default_saturated();
        let mut corners = Vec::new();
        let s = 0.1;
        for k in 0..20 {
            corners.push(CurrentDq::new(-1.0 + s * k as f64, -1.0));
        }
        for k in 0..20 {
            corners.push(CurrentDq::new(1.0, -1.0 + s * k as f64));
        }
        for k in 0..20 {
            corners.push(CurrentDq::new(1.0 - s * k as f64, 1.0));
        }
        for k in 0..=20 {
            corners.push(CurrentDq::new(-1.0, 1.0 - s * k as f64));
        }
        let pts = corners.iter().map(|&i| exact_record(&model, i)).collect();
        let out = integrate_path(&CurrentPath::new(0, pts).unwrap(), FluxDq::ZERO, StepRule::Trapezoidal);
        assert!(out.last().unwrap().1.norm() <= 1e-5);
    }

    #[test]
    fn endpoint_rule_is_the_literal_sum() {
        let model = EnergyModel::unsaturated(MotorParams::test_motor());
        let pts: Vec<_> = (0..5)
            .map(|k| exact_record(&model, CurrentDq::new(0.0, 0.1 * k as f64)))
            .collect();
        let path = CurrentPath::new(0, pts.clone()).unwrap();
        let out = integrate_path(&path, FluxDq::ZERO, StepRule::Endpoint);
        let mut sum = 0.0;
        for k in 1..5 {
            sum += pts[k].l.m22 * 0.1;
        }
        assert!((out[4].1.q - sum).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![InductanceRecord {
            i_bar: CurrentDq::new(-0.2, 0.1),
            l: Sym2::new(0.04325, -1e-4, 0.06905),
            cond: 1.6,
        }];
        let mut buf = Vec::new();
        write_inductance_csv(&recs, &mut buf).unwrap();
        assert_eq!(read_inductance_csv(&buf[..]).unwrap(), recs);
    }
}
