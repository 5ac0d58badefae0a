//! Runs a scenario and writes its artifacts.

use std::io::Write;
use std::path::{Path, PathBuf};

use fluxid_core::classical::Scatter;
use fluxid_core::compare::{compare_maps, map_diagnostics, ComparisonReport, MapDiagnostics};
use fluxid_core::experiment::{run_classical, run_saliency, ClassicalOutcome, PathPlan, SaliencyOutcome};
use fluxid_core::fluxmap::FluxMap;
use fluxid_core::injection::write_saliency_csv;
use fluxid_core::saliency::write_inductance_csv;
use fluxid_core::sim::CurrentTrajectory;
use serde::Serialize;

use crate::artifacts::{sha256_hex, ArtifactWriter, Manifest};
use crate::gnuplot;
use crate::scenario::Scenario;
use crate::CliError;

pub const SCENARIO_NAME: &str = "scenario.json";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub gnuplot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub index: usize,
    pub trajectory: CurrentTrajectory,
    pub rs_estimate: f64,
    pub points: usize,
    pub empty_bins: usize,
    pub loop_area_raw: f64,
    pub loop_area_averaged: f64,
    pub scatter: Option<Scatter>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical: Option<MapDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saliency: Option<MapDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonReport>,
}

/// In-memory results of a run.
pub struct RunOutput {
    pub output_dir: PathBuf,
    pub classical: Option<ClassicalOutcome>,
    pub saliency: Option<SaliencyOutcome>,
    pub report: Report,
    pub manifest: Manifest,
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// Copy of the scenario as stored next to its artifacts. The output
/// location is not part of the experiment, so it is normalised.
pub fn stored_scenario(sc: &Scenario) -> Scenario {
    Scenario {
        output_dir: PathBuf::from("."),
        ..sc.clone()
    }
}

pub fn run_scenario(sc: &Scenario, opts: RunOptions) -> Result<RunOutput, CliError> {
    sc.validate()?;
    let classical = match (&sc.classical, sc.method.classical()) {
        (Some(c), true) => Some(run_classical(&sc.sim, &sc.ctrl, c).map_err(failed)?),
        _ => None,
    };
    let saliency = match (&sc.saliency, sc.method.saliency()) {
        (Some(s), true) => Some(run_saliency(&sc.sim, s).map_err(failed)?),
        _ => None,
    };
    let truth = Some(&sc.sim.model);
    let diag = |m: &FluxMap| map_diagnostics(m, truth).map_err(failed);
    let comparison = match (&classical, &saliency) {
        (Some(c), Some(s)) => Some(compare_maps(&c.map, &s.map, truth).map_err(failed)?),
        _ => None,
    };
    let report = Report {
        classical: classical.as_ref().map(|c| diag(&c.map)).transpose()?,
        saliency: saliency.as_ref().map(|s| diag(&s.map)).transpose()?,
        comparison,
    };

    let mut w = ArtifactWriter::create(&sc.output_dir)?;
    let stored = stored_scenario(sc).to_json();
    w.write(SCENARIO_NAME, stored.as_bytes())?;
    if let Some(c) = &classical {
        write_classical(&mut w, c)?;
    }
    if let Some(s) = &saliency {
        write_saliency(&mut w, s)?;
    }
    w.write_json("report.json", &report)?;
    if opts.gnuplot {
        for (name, script) in gnuplot::scripts(classical.is_some(), saliency.is_some()) {
            w.write(&name, script.as_bytes())?;
        }
    }
    let manifest = w.commit(Manifest {
        schema_version: crate::scenario::SCHEMA_VERSION,
        scenario: sc.name.clone(),
        method: sc.method.to_string(),
        seed: sc.sim.seed,
        config_hash: sha256_hex(stored.as_bytes()),
        artifacts: Vec::new(),
    })?;
    Ok(RunOutput {
        output_dir: sc.output_dir.clone(),
        classical,
        saliency,
        report,
        manifest,
    })
}

fn write_classical(w: &mut ArtifactWriter, c: &ClassicalOutcome) -> Result<(), CliError> {
    w.write_with("classical_fluxmap.csv", |buf| c.map.write_csv(buf))?;
    let summary: Vec<TraceSummary> = c
        .traces
        .iter()
        .map(|t| TraceSummary {
            index: t.index,
            trajectory: t.trajectory,
            rs_estimate: t.rs_estimate,
            points: t.averaged.len(),
            empty_bins: t.empty_bins,
            loop_area_raw: t.loop_area_raw,
            loop_area_averaged: t.loop_area_averaged,
            scatter: t.scatter,
        })
        .collect();
    w.write_json("classical_summary.json", &summary)?;
    w.write_with("classical_raw.csv", |buf| {
        writeln!(buf, "trajectory,t,id,iq,phid,phiq")?;
        for t in &c.traces {
            for (time, i, phi) in &t.raw {
                writeln!(buf, "{},{},{},{},{},{}", t.index, time, i.d, i.q, phi.d, phi.q)?;
            }
        }
        Ok(())
    })
}

fn write_saliency(w: &mut ArtifactWriter, s: &SaliencyOutcome) -> Result<(), CliError> {
    w.write_with("saliency_records.csv", |buf| write_saliency_csv(&s.records(), buf))?;
    w.write_with("inductance.csv", |buf| write_inductance_csv(&s.inductances, buf))?;
    w.write_with("saliency_fluxmap.csv", |buf| s.map.write_csv(buf))?;
    w.write_with("setpoints.csv", |buf| {
        writeln!(buf, "target_id,target_iq,vd,vq,id,iq")?;
        for d in &s.dwells {
            writeln!(
                buf,
                "{},{},{},{},{},{}",
                d.target.d, d.target.q, d.v_bar.d, d.v_bar.q, d.record.i_bar.d, d.record.i_bar.q
            )?;
        }
        Ok(())
    })?;
    w.write_json::<PathPlan>("paths.json", &s.plan)?;
    w.write_json("consistency.json", &s.consistency)
}

/// Loads a flux map CSV from disk.
pub fn load_map(path: &Path) -> Result<FluxMap, CliError> {
    let f = std::fs::File::open(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    FluxMap::read_csv(std::io::BufReader::new(f)).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}
