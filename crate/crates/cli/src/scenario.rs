use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fluxid_core::experiment::{ClassicalConfig, SaliencyConfig};
use fluxid_core::sim::{ControllerConfig, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSelect {
    Classical,
    Saliency,
    Both,
}

impl MethodSelect {
    pub fn classical(self) -> bool {
        matches!(self, Self::Classical | Self::Both)
    }

    pub fn saliency(self) -> bool {
        matches!(self, Self::Saliency | Self::Both)
    }
}

impl fmt::Display for MethodSelect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Classical => "classical",
            Self::Saliency => "saliency",
            Self::Both => "both",
        })
    }
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub method: MethodSelect,
    pub sim: SimConfig,
    #[serde(default)]
    pub ctrl: ControllerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saliency: Option<SaliencyConfig>,
    pub output_dir: PathBuf,
}

fn invalid(e: impl fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

impl Scenario {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.name.trim().is_empty() {
            return Err(invalid("scenario name is empty"));
        }
        self.sim.validate().map_err(invalid)?;
        self.ctrl.validate().map_err(invalid)?;
        if self.method.classical() {
            self.classical
                .as_ref()
                .ok_or_else(|| invalid("method needs a `classical` section"))?
                .validate()
                .map_err(invalid)?;
            if !self.ctrl.enabled {
                return Err(invalid("the classical method needs ctrl.enabled = true"));
            }
        }
        if self.method.saliency() {
            let s = self
                .saliency
                .as_ref()
                .ok_or_else(|| invalid("method needs a `saliency` section"))?;
            s.validate().map_err(invalid)?;
            let ts = self.sim.sample_period();
            fluxid_core::injection::samples_per_period(ts, s.injection.omega).map_err(invalid)?;
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(invalid("output_dir is empty"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes") + "\n"
    }

    /// Applies `key.path=value` overrides. Values are parsed as JSON and fall
    /// back to plain strings.
    pub fn with_overrides(&self, overrides: &[Override]) -> Result<Self, CliError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut doc = serde_json::to_value(self).map_err(invalid)?;
        for o in overrides {
            o.apply(&mut doc)?;
        }
        serde_json::from_value(doc).map_err(|e| invalid(format!("after overrides: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl FromStr for Override {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| invalid(format!("override `{s}` is not of the form key=value")))?;
        let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
        if path.iter().any(String::is_empty) {
            return Err(invalid(format!("override key `{key}` has an empty segment")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        Ok(Self { path, value })
    }
}

impl Override {
    fn apply(&self, doc: &mut Value) -> Result<(), CliError> {
        let key = self.path.join(".");
        let (last, parents) = self.path.split_last().expect("non-empty path");
        let mut node = doc;
        for seg in parents {
            node = match node {
                Value::Object(m) => m.get_mut(seg),
                Value::Array(a) => seg.parse::<usize>().ok().and_then(|k| a.get_mut(k)),
                _ => None,
            }
            .ok_or_else(|| invalid(format!("override `{key}`: no field `{seg}`")))?;
        }
        match node {
            Value::Object(m) => {
                let slot = m
                    .get_mut(last)
                    .ok_or_else(|| invalid(format!("override `{key}`: no field `{last}`")))?;
                *slot = self.value.clone();
            }
            Value::Array(a) => {
                let slot = last
                    .parse::<usize>()
                    .ok()
                    .and_then(|k| a.get_mut(k))
                    .ok_or_else(|| invalid(format!("override `{key}`: bad index `{last}`")))?;
                *slot = self.value.clone();
            }
            _ => return Err(invalid(format!("override `{key}`: `{last}` is not inside an object"))),
        }
        Ok(())
    }
}
