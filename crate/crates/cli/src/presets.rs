//! Built-in scenarios.

use std::path::PathBuf;

use fluxid_core::experiment::{ClassicalConfig, SaliencyConfig};
use fluxid_core::magnetics::EnergyModel;
use fluxid_core::sim::{ControllerConfig, SimConfig};

use crate::scenario::{MethodSelect, Scenario, SCHEMA_VERSION};

pub const PRESET_NAMES: [&str; 3] = ["paper-classical", "paper-saliency", "smoke"];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "paper-classical" => "id, iq in -3..3 A with 3 A / 2 s trapezoids plus a 45 degree sweep, 10 cycles each",
        "paper-saliency" => "+-3 A grid in 0.1 A steps, 500 Hz 40 V square injection rotating at 1 Hz, 5 s dwells",
        "smoke" => "both methods, 0.1 A grid with 1 s dwells",
        _ => return None,
    })
}

fn base(name: &str, method: MethodSelect) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: name.to_owned(),
        method,
        sim: SimConfig::new(EnergyModel::default_saturated()),
        ctrl: ControllerConfig::default(),
        classical: None,
        saliency: None,
        output_dir: PathBuf::from("out").join(name),
    }
}

pub fn preset(name: &str) -> Option<Scenario> {
    Some(match name {
        "paper-classical" => Scenario {
            classical: Some(ClassicalConfig::paper_protocol(10)),
            ..base(name, MethodSelect::Classical)
        },
        "paper-saliency" => Scenario {
            saliency: Some(SaliencyConfig::paper()),
            ..base(name, MethodSelect::Saliency)
        },
        "smoke" => {
            let mut s = SaliencyConfig::paper();
            s.injection.dwell = 1.0;
            Scenario {
                classical: Some(ClassicalConfig::paper_protocol(10)),
                saliency: Some(s),
                ..base(name, MethodSelect::Both)
            }
        }
        _ => return None,
    })
}

/// A both-methods scenario over ±1 A that runs in a few seconds.
pub fn reduced(name: &str) -> Scenario {
    let mut sc = preset("smoke").expect("smoke preset");
    sc.name = name.to_owned();
    sc.output_dir = PathBuf::from("out").join(name);
    if let Some(s) = sc.saliency.as_mut() {
        s.extent = 1.0;
        s.line_spacing = 0.5;
    }
    if let Some(c) = sc.classical.as_mut() {
        c.trajectories = vec![c.trajectories[3], c.trajectories[10]];
        for t in &mut c.trajectories {
            t.profile.amplitude = 1.0;
            t.cycles = 2;
        }
    }
    sc
}
