use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::CurrentDq;
use crate::injection::demod::SampledSeries;
use crate::injection::InjectionConfig;
use crate::linalg::Sym2;

/// Hessian of the magnetic energy estimated at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaliencyRecord {
    pub i_bar: CurrentDq,
    /// `[H11, H12, H22]` in 1/H.
    pub hessian: Sym2,
    /// [A]
    pub residual_rms: f64,
    /// Disagreement between the d- and q-channel estimates of `H12` [1/H].
    pub h12_asymmetry: f64,
}

pub const SALIENCY_CSV_HEADER: &str = "id,iq,H11,H12,H22,residual_rms,h12_asymmetry";

/// Solves `min ‖y − a·c − b·s‖` from the accumulated 2×2 normal equations.
fn solve2(css: f64, cs: f64, sss: f64, cy: f64, sy: f64) -> Option<(f64, f64)> {
    let det = css * sss - cs * cs;
    if !(det.abs() > 1e-12 * (css * sss).max(f64::MIN_POSITIVE)) {
        return None;
    }
    Some(((sss * cy - cs * sy) / det, (css * sy - cs * cy) / det))
}

/// Least-squares fit of the ripple model
/// `ĩ_d = (ũ/Ω)(H11 cos a + H12 sin a)`, `ĩ_q = (ũ/Ω)(H12 cos a + H22 sin a)`
/// with `a` the injection axis angle at each sample stamp.
///
/// Both series must share stamps. The fit is restricted to the largest whole
/// number of rotation periods available from the start.
pub fn fit_saliency(
    ripple_d: &SampledSeries,
    ripple_q: &SampledSeries,
    cfg: &InjectionConfig,
    i_bar: CurrentDq,
) -> Result<SaliencyRecord> {
    if cfg.u_tilde == 0.0 || !(cfg.omega > 0.0) || !(cfg.f_rot > 0.0) {
        return Err(Error::RankDeficient(format!(
            "degenerate injection ũ = {}, Ω = {}, f_i = {}",
            cfg.u_tilde, cfg.omega, cfg.f_rot
        )));
    }
    if ripple_d.len() != ripple_q.len() || (ripple_d.t0 - ripple_q.t0).abs() > 1e-12 {
        return Err(Error::Sampling("ripple channels are not aligned".into()));
    }
    let dt = ripple_d.dt;
    let per_rotation = 1.0 / (cfg.f_rot * dt);
    let rotations = (ripple_d.len() as f64 / per_rotation + 1e-9).floor();
    if rotations < 1.0 {
        return Err(Error::RankDeficient(format!(
            "{} samples cover less than one rotation period",
            ripple_d.len()
        )));
    }
    let n = ((rotations * per_rotation).round() as usize).min(ripple_d.len());
    let k = cfg.u_tilde / cfg.omega;

    let (mut css, mut cs, mut sss) = (0.0, 0.0, 0.0);
    let (mut cyd, mut syd, mut cyq, mut syq) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..n {
        let (c, s) = cfg.direction(ripple_d.time(j));
        let (c, s) = (k * c, k * s);
        css += c * c;
        cs += c * s;
        sss += s * s;
        cyd += c * ripple_d.values[j];
        syd += s * ripple_d.values[j];
        cyq += c * ripple_q.values[j];
        syq += s * ripple_q.values[j];
    }
    let rank = || Error::RankDeficient("singular rotation regressor".into());
    let (h11, h12d) = solve2(css, cs, sss, cyd, syd).ok_or_else(rank)?;
    let (h12q, h22) = solve2(css, cs, sss, cyq, syq).ok_or_else(rank)?;
    let hessian = Sym2::new(h11, 0.5 * (h12d + h12q), h22);

    let mut sq = 0.0;
    for j in 0..n {
        let (c, s) = cfg.direction(ripple_d.time(j));
        let ed = ripple_d.values[j] - k * (hessian.m11 * c + hessian.m12 * s);
        let eq = ripple_q.values[j] - k * (hessian.m12 * c + hessian.m22 * s);
        sq += ed * ed + eq * eq;
    }
    Ok(SaliencyRecord {
        i_bar,
        hessian,
        residual_rms: (sq / (2 * n) as f64).sqrt(),
        h12_asymmetry: (h12d - h12q).abs(),
    })
}

pub fn write_saliency_csv<W: Write>(records: &[SaliencyRecord], mut w: W) -> Result<()> {
    writeln!(w, "{SALIENCY_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.i_bar.d,
            r.i_bar.q,
            r.hessian.m11,
            r.hessian.m12,
            r.hessian.m22,
            r.residual_rms,
            r.h12_asymmetry
        )?;
    }
    Ok(())
}

pub fn read_saliency_csv<R: BufRead>(r: R) -> Result<Vec<SaliencyRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(SALIENCY_CSV_HEADER) {
        return Err(Error::Parse("missing saliency CSV header".into()));
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
        if v.len() != 7 {
            return Err(Error::Parse(format!("line {}: expected 7 fields", n + 2)));
        }
        out.push(SaliencyRecord {
            i_bar: CurrentDq::new(v[0], v[1]),
            hessian: Sym2::new(v[2], v[3], v[4]),
            residual_rms: v[5],
            h12_asymmetry: v[6],
        });
    }
    Ok(out)
}
