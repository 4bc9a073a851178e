use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Plan, PlanningInstance};
use crate::temporal::StateTrajectory;

use super::document::FORMAT_VERSION;

pub const PLAN_TABLE: &str = "plan.csv";
pub const STATES_DOCUMENT: &str = "states.json";

/// One row of the plan table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRow {
    pub unit: String,
    pub period: usize,
    pub crop: String,
    pub area: f64,
}

/// Post-decision state of one unit after one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    pub unit: String,
    pub period: usize,
    pub last_crop: Option<String>,
    pub rotation_stress: f64,
    pub interaction_potential: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatesDocument {
    pub format_version: u32,
    pub states: Vec<StateRecord>,
}

/// Writes the planting rows, one per planted (unit, period).
pub fn write_plan_table<W: Write>(plan: &Plan, instance: &PlanningInstance, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(["unit", "period", "crop", "area"])?;
    for (u, t, c) in plan.plantings() {
        let unit = &instance.units[u];
        let crop = &instance.crops[c];
        w.serialize(PlanRow {
            unit: unit.id.clone(),
            period: t,
            crop: crop.id.clone(),
            area: crop.area_on(unit),
        })?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn plan_table_string(plan: &Plan, instance: &PlanningInstance) -> String {
    let mut buf = Vec::new();
    write_plan_table(plan, instance, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("ids are UTF-8")
}

/// Parses a plan table against `instance`; unknown ids and out-of-range
/// periods are errors, a repeated (unit, period) keeps the last row.
pub fn read_plan_table<R: Read>(
    input: R,
    instance: &PlanningInstance,
    origin: &Path,
) -> Result<Plan> {
    let schema = |message: String| Error::Schema {
        path: origin.to_path_buf(),
        message,
    };
    let mut plan = Plan::for_instance(instance);
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| schema(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["unit", "period", "crop", "area"] {
        return Err(schema(format!(
            "expected header 'unit,period,crop,area', found '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for row in reader.deserialize::<PlanRow>() {
        let row = row.map_err(|e| schema(e.to_string()))?;
        let u = instance
            .unit_index(&row.unit)
            .ok_or_else(|| Error::UnknownId {
                kind: "unit",
                id: row.unit.clone(),
            })?;
        let c = instance
            .crop_index(&row.crop)
            .ok_or_else(|| Error::UnknownId {
                kind: "crop",
                id: row.crop.clone(),
            })?;
        if row.period >= instance.horizon {
            return Err(Error::PeriodOutOfRange {
                period: row.period,
                horizon: instance.horizon,
            });
        }
        plan.set(u, row.period, Some(c));
    }
    Ok(plan)
}

pub fn load_plan(path: impl AsRef<Path>, instance: &PlanningInstance) -> Result<Plan> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_plan_table(file, instance, path)
}

/// State records for every (unit, period) in unit-major order.
pub fn state_records(trajectory: &StateTrajectory, instance: &PlanningInstance) -> StatesDocument {
    let mut states = Vec::with_capacity(trajectory.units() * trajectory.horizon());
    for (u, unit) in instance.units.iter().enumerate() {
        for t in 0..trajectory.horizon() {
            let s = trajectory.at(u, t + 1);
            states.push(StateRecord {
                unit: unit.id.clone(),
                period: t,
                last_crop: s.last_crop.map(|c| instance.crops[c].id.clone()),
                rotation_stress: s.rotation_stress,
                interaction_potential: s.interaction_potential,
            });
        }
    }
    StatesDocument {
        format_version: FORMAT_VERSION,
        states,
    }
}

pub fn load_states(path: impl AsRef<Path>) -> Result<StatesDocument> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Paths written by [`export_plan`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedFiles {
    pub table: PathBuf,
    pub states: PathBuf,
}

/// Writes the plan table and the state document into `dir`.
pub fn export_plan(
    plan: &Plan,
    instance: &PlanningInstance,
    trajectory: &StateTrajectory,
    dir: impl AsRef<Path>,
) -> Result<ExportedFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let table = dir.join(PLAN_TABLE);
    fs::write(&table, plan_table_string(plan, instance)).map_err(|e| Error::io(&table, e))?;
    let states = dir.join(STATES_DOCUMENT);
    let mut text = serde_json::to_string_pretty(&state_records(trajectory, instance))?;
    text.push('\n');
    fs::write(&states, text).map_err(|e| Error::io(&states, e))?;
    Ok(ExportedFiles { table, states })
}
