use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_instance, Crop, InteractionMatrix, LandUnit, PlanningInstance};
use crate::uncertainty::ScenarioSpec;

pub const FORMAT_VERSION: u32 = 1;

fn default_gain() -> f64 {
    0.05
}

fn default_clamp() -> f64 {
    0.5
}

fn default_periods_per_year() -> usize {
    2
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

/// On-disk form of a planning instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub format_version: u32,
    pub horizon: usize,
    #[serde(default = "default_periods_per_year")]
    pub periods_per_year: usize,
    pub water_limits: Vec<f64>,
    #[serde(default = "default_gain")]
    pub interaction_yield_gain: f64,
    #[serde(default = "default_clamp")]
    pub interaction_clamp: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub salvage_fraction: f64,
    #[serde(default, skip_serializing_if = "is_false")]
    pub demand_cap: bool,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub rotation_stress_penalty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legume_window: Option<usize>,
    pub units: Vec<LandUnit>,
    pub crops: Vec<Crop>,
    pub interaction: InteractionMatrix,
    /// Crop planted on each unit in the season before the horizon.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub history: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_spec: Option<ScenarioSpec>,
}

impl InstanceDocument {
    pub fn new(instance: &PlanningInstance, scenario_spec: Option<ScenarioSpec>) -> Self {
        InstanceDocument {
            format_version: FORMAT_VERSION,
            horizon: instance.horizon,
            periods_per_year: instance.periods_per_year,
            water_limits: instance.water_limits.clone(),
            interaction_yield_gain: instance.interaction_yield_gain,
            interaction_clamp: instance.interaction_clamp,
            salvage_fraction: instance.salvage_fraction,
            demand_cap: instance.demand_cap,
            rotation_stress_penalty: instance.rotation_stress_penalty,
            legume_window: instance.legume_window,
            units: instance.units.clone(),
            crops: instance.crops.clone(),
            interaction: instance.interaction.clone(),
            history: instance.history.clone(),
            scenario_spec,
        }
    }

    pub fn instance(&self) -> PlanningInstance {
        PlanningInstance {
            units: self.units.clone(),
            crops: self.crops.clone(),
            interaction: self.interaction.clone(),
            horizon: self.horizon,
            periods_per_year: self.periods_per_year,
            water_limits: self.water_limits.clone(),
            interaction_yield_gain: self.interaction_yield_gain,
            interaction_clamp: self.interaction_clamp,
            salvage_fraction: self.salvage_fraction,
            demand_cap: self.demand_cap,
            rotation_stress_penalty: self.rotation_stress_penalty,
            legume_window: self.legume_window,
            history: self.history.clone(),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents always serialize");
        s.push('\n');
        s
    }

    /// Parses and validates. `origin` only labels errors.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Schema {
                path: origin.to_path_buf(),
                message: format!(
                    "unsupported format_version {} (expected {FORMAT_VERSION})",
                    doc.format_version
                ),
            });
        }
        if let Some(spec) = &doc.scenario_spec {
            spec.validate()?;
        }
        let violations = validate_instance(&doc.instance());
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        Ok(doc)
    }
}

pub fn load_document(path: impl AsRef<Path>) -> Result<InstanceDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    InstanceDocument::from_json(&text, path)
}

/// Reads and validates an instance document; every violation is reported.
pub fn load_instance(path: impl AsRef<Path>) -> Result<PlanningInstance> {
    Ok(load_document(path)?.instance())
}

pub fn save_document(doc: &InstanceDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, doc.to_json()).map_err(|e| Error::io(path, e))
}

pub fn save_instance(instance: &PlanningInstance, path: impl AsRef<Path>) -> Result<()> {
    save_document(&InstanceDocument::new(instance, None), path)
}
