//! Domain types shared by every layer of the planner.
//!
//! Units and crops are addressed by their position in the instance (`usize`
//! indices) inside the library; string ids only matter at the I/O boundary.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Grid coordinate `(row, col)` of one cell of a land unit.
pub type Cell = (i32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandType {
    DryFlat,
    DryTerrace,
    DryHillside,
    Irrigated,
    Greenhouse,
    SmartGreenhouse,
}

impl LandType {
    pub const ALL: [LandType; 6] = [
        LandType::DryFlat,
        LandType::DryTerrace,
        LandType::DryHillside,
        LandType::Irrigated,
        LandType::Greenhouse,
        LandType::SmartGreenhouse,
    ];

    pub fn is_dry(self) -> bool {
        matches!(
            self,
            LandType::DryFlat | LandType::DryTerrace | LandType::DryHillside
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CropCategory {
    Cereal,
    Legume,
    Vegetable,
    Fungus,
}

impl CropCategory {
    pub const ALL: [CropCategory; 4] = [
        CropCategory::Cereal,
        CropCategory::Legume,
        CropCategory::Vegetable,
        CropCategory::Fungus,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CropCategory::Cereal => "cereal",
            CropCategory::Legume => "legume",
            CropCategory::Vegetable => "vegetable",
            CropCategory::Fungus => "fungus",
        }
    }
}

/// One spatial decision unit (a plot, terrace, or greenhouse).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandUnit {
    pub id: String,
    pub land_type: LandType,
    /// Available area in mu.
    pub area: f64,
    /// Multiplier applied to every crop's regional baseline yield.
    pub productivity_factor: f64,
    /// Ordinal 1..=5.
    pub fertility_level: u8,
    /// Member of the irrigation-limited set.
    pub irrigated: bool,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Crop {
    pub id: String,
    pub category: CropCategory,
    /// kg per mu.
    pub baseline_yield: f64,
    /// CNY per kg.
    pub baseline_price: f64,
    /// CNY per mu.
    pub baseline_cost: f64,
    /// m³ per planting.
    pub water_need: f64,
    /// Minimum number of periods between two plantings on the same unit.
    pub replant_interval: u32,
    pub allowed_land_types: BTreeSet<LandType>,
    /// Area occupied by one planting; `None` means the whole unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_per_planting: Option<f64>,
    /// Regional demand per period in kg; `None` means unlimited.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_demand: Option<f64>,
}

impl Crop {
    /// Planted area of this crop on `unit`.
    pub fn area_on(&self, unit: &LandUnit) -> f64 {
        self.area_per_planting.unwrap_or(unit.area)
    }

    pub fn is_legume(&self) -> bool {
        self.category == CropCategory::Legume
    }
}

/// Signed crop × crop interaction coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct InteractionMatrix {
    side: usize,
    entries: Vec<f64>,
}

impl InteractionMatrix {
    pub fn zeros(side: usize) -> Self {
        InteractionMatrix {
            side,
            entries: vec![0.0; side * side],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, String> {
        let side = rows.len();
        let mut entries = Vec::with_capacity(side * side);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != side {
                return Err(format!(
                    "interaction matrix row {r} has {} entries, expected {side}",
                    row.len()
                ));
            }
            entries.extend(row);
        }
        Ok(InteractionMatrix { side, entries })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.side + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.entries[row * self.side + col] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .chunks(self.side.max(1))
            .take(self.side)
            .map(|r| r.to_vec())
            .collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for InteractionMatrix {
    type Error = String;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        InteractionMatrix::from_rows(rows)
    }
}

impl From<InteractionMatrix> for Vec<Vec<f64>> {
    fn from(m: InteractionMatrix) -> Self {
        m.rows()
    }
}

/// Everything the planner needs to know about one farm over one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningInstance {
    pub units: Vec<LandUnit>,
    pub crops: Vec<Crop>,
    pub interaction: InteractionMatrix,
    /// Number of planting periods.
    pub horizon: usize,
    /// Periods per calendar year, used for annual aggregation and demand growth.
    pub periods_per_year: usize,
    /// Seasonal water limit per period, m³.
    pub water_limits: Vec<f64>,
    /// Yield gain per unit of clamped interaction potential.
    pub interaction_yield_gain: f64,
    /// Interaction potential is clamped to `[-interaction_clamp, interaction_clamp]`
    /// before it modifies yield.
    pub interaction_clamp: f64,
    /// Fraction of the price paid for production above demand.
    pub salvage_fraction: f64,
    /// Cap sales at scenario demand.
    pub demand_cap: bool,
    /// Linear objective penalty in CNY per unit of rotation stress per unit-period.
    pub rotation_stress_penalty: f64,
    /// When set, every window of this many consecutive periods must contain a
    /// legume or fallow period on every unit.
    pub legume_window: Option<usize>,
    /// Crop planted on each unit in the season before the horizon (unit id → crop id).
    pub history: BTreeMap<String, String>,
}

impl PlanningInstance {
    pub fn unit_index(&self, id: &str) -> Option<usize> {
        self.units.iter().position(|u| u.id == id)
    }

    pub fn crop_index(&self, id: &str) -> Option<usize> {
        self.crops.iter().position(|c| c.id == id)
    }

    /// Year index (0-based) of a period.
    pub fn year_of(&self, period: usize) -> usize {
        period / self.periods_per_year.max(1)
    }

    pub fn years(&self) -> usize {
        if self.horizon == 0 {
            0
        } else {
            self.year_of(self.horizon - 1) + 1
        }
    }

    /// Copy with interaction effects removed: zero matrix and zero yield gain.
    pub fn without_interactions(&self) -> PlanningInstance {
        let mut copy = self.clone();
        copy.interaction = InteractionMatrix::zeros(self.crops.len());
        copy.interaction_yield_gain = 0.0;
        copy
    }

    /// Crop planted before the horizon on each unit, by index.
    pub fn history_crops(&self) -> Vec<Option<usize>> {
        self.units
            .iter()
            .map(|u| self.history.get(&u.id).and_then(|c| self.crop_index(c)))
            .collect()
    }
}

/// Binary allocation over units × periods, at most one crop per cell.
///
/// `None` is fallow.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Plan {
    units: usize,
    horizon: usize,
    cells: Vec<Option<usize>>,
}

impl Plan {
    pub fn empty(units: usize, horizon: usize) -> Self {
        Plan {
            units,
            horizon,
            cells: vec![None; units * horizon],
        }
    }

    pub fn for_instance(instance: &PlanningInstance) -> Self {
        Plan::empty(instance.units.len(), instance.horizon)
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn get(&self, unit: usize, period: usize) -> Option<usize> {
        self.cells[unit * self.horizon + period]
    }

    #[inline]
    pub fn set(&mut self, unit: usize, period: usize, crop: Option<usize>) {
        self.cells[unit * self.horizon + period] = crop;
    }

    /// Row of a single unit across the horizon.
    pub fn unit_row(&self, unit: usize) -> &[Option<usize>] {
        &self.cells[unit * self.horizon..(unit + 1) * self.horizon]
    }

    /// Every planting as `(unit, period, crop)`, ordered by unit then period.
    pub fn plantings(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.cells.iter().enumerate().filter_map(move |(k, c)| {
            c.map(|crop| (k / self.horizon.max(1), k % self.horizon.max(1), crop))
        })
    }

    pub fn planting_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn matches_shape(&self, instance: &PlanningInstance) -> bool {
        self.units == instance.units.len() && self.horizon == instance.horizon
    }

    /// Whether every referenced crop index exists in the instance.
    pub fn references_valid(&self, instance: &PlanningInstance) -> bool {
        self.matches_shape(instance)
            && self
                .cells
                .iter()
                .flatten()
                .all(|&c| c < instance.crops.len())
    }
}

/// Per-unit agronomic state at the start of a period.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgronomicState {
    pub last_crop: Option<usize>,
    pub rotation_stress: f64,
    pub interaction_potential: f64,
}

/// One broken instance invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InstanceViolation {
    /// Offending entity, e.g. `unit 'A1'` or `crop 'wheat'`.
    pub entity: String,
    pub rule: String,
}

impl InstanceViolation {
    fn new(entity: impl Into<String>, rule: impl Into<String>) -> Self {
        InstanceViolation {
            entity: entity.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

/// Checks every instance invariant and reports all breaches.
pub fn validate_instance(instance: &PlanningInstance) -> Vec<InstanceViolation> {
    let mut out = Vec::new();
    let unit = |id: &str| format!("unit '{id}'");
    let crop = |id: &str| format!("crop '{id}'");

    if instance.horizon < 1 {
        out.push(InstanceViolation::new(
            "instance",
            "horizon must be at least 1",
        ));
    }
    if instance.periods_per_year < 1 {
        out.push(InstanceViolation::new(
            "instance",
            "periods_per_year must be at least 1",
        ));
    }
    if instance.water_limits.len() != instance.horizon {
        out.push(InstanceViolation::new(
            "instance",
            format!(
                "water_limits has {} entries, expected one per period ({})",
                instance.water_limits.len(),
                instance.horizon
            ),
        ));
    }
    for (t, &w) in instance.water_limits.iter().enumerate() {
        if !(w >= 0.0) {
            out.push(InstanceViolation::new(
                "instance",
                format!("water limit of period {t} must be non-negative, got {w}"),
            ));
        }
    }
    if !(0.0..=1.0).contains(&instance.salvage_fraction) {
        out.push(InstanceViolation::new(
            "instance",
            format!(
                "salvage_fraction must lie in [0, 1], got {}",
                instance.salvage_fraction
            ),
        ));
    }
    if !instance.interaction_yield_gain.is_finite() {
        out.push(InstanceViolation::new(
            "instance",
            "interaction_yield_gain must be finite",
        ));
    }
    if !(instance.interaction_clamp >= 0.0) || !instance.interaction_clamp.is_finite() {
        out.push(InstanceViolation::new(
            "instance",
            "interaction_clamp must be finite and non-negative",
        ));
    }
    if !(instance.rotation_stress_penalty >= 0.0) || !instance.rotation_stress_penalty.is_finite() {
        out.push(InstanceViolation::new(
            "instance",
            "rotation_stress_penalty must be finite and non-negative",
        ));
    }
    if instance.legume_window == Some(0) {
        out.push(InstanceViolation::new(
            "instance",
            "legume_window must be at least 1",
        ));
    }

    let mut seen_units: HashMap<&str, usize> = HashMap::new();
    for u in &instance.units {
        if let Some(&count) = seen_units.get(u.id.as_str()) {
            if count == 1 {
                out.push(InstanceViolation::new(unit(&u.id), "duplicate unit id"));
            }
        }
        *seen_units.entry(u.id.as_str()).or_default() += 1;
        if !(u.area > 0.0) || !u.area.is_finite() {
            out.push(InstanceViolation::new(
                unit(&u.id),
                format!("area must be positive, got {}", u.area),
            ));
        }
        if !(u.productivity_factor > 0.0) || !u.productivity_factor.is_finite() {
            out.push(InstanceViolation::new(
                unit(&u.id),
                format!(
                    "productivity_factor must be positive, got {}",
                    u.productivity_factor
                ),
            ));
        }
        if !(1..=5).contains(&u.fertility_level) {
            out.push(InstanceViolation::new(
                unit(&u.id),
                format!(
                    "fertility_level must lie in 1..=5, got {}",
                    u.fertility_level
                ),
            ));
        }
        if u.cells.is_empty() {
            out.push(InstanceViolation::new(
                unit(&u.id),
                "cells must be non-empty",
            ));
        }
    }

    // Disjointness: one violation per pair of units sharing at least one cell.
    let mut owner: HashMap<Cell, usize> = HashMap::new();
    let mut clashes: BTreeMap<(usize, usize), Cell> = BTreeMap::new();
    for (i, u) in instance.units.iter().enumerate() {
        for &cell in &u.cells {
            match owner.get(&cell) {
                Some(&j) if j != i => {
                    clashes.entry((j, i)).or_insert(cell);
                }
                Some(_) => {}
                None => {
                    owner.insert(cell, i);
                }
            }
        }
    }
    for ((a, b), (r, c)) in clashes {
        out.push(InstanceViolation::new(
            format!(
                "units '{}' and '{}'",
                instance.units[a].id, instance.units[b].id
            ),
            format!("cell sets must be disjoint, both contain ({r}, {c})"),
        ));
    }

    let mut seen_crops: HashMap<&str, usize> = HashMap::new();
    for c in &instance.crops {
        if let Some(&count) = seen_crops.get(c.id.as_str()) {
            if count == 1 {
                out.push(InstanceViolation::new(crop(&c.id), "duplicate crop id"));
            }
        }
        *seen_crops.entry(c.id.as_str()).or_default() += 1;
        if !(c.baseline_yield >= 0.0) || !c.baseline_yield.is_finite() {
            out.push(InstanceViolation::new(
                crop(&c.id),
                format!(
                    "baseline_yield must be non-negative, got {}",
                    c.baseline_yield
                ),
            ));
        }
        for (name, value) in [
            ("baseline_price", c.baseline_price),
            ("baseline_cost", c.baseline_cost),
            ("water_need", c.water_need),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                out.push(InstanceViolation::new(
                    crop(&c.id),
                    format!("{name} must be finite and non-negative, got {value}"),
                ));
            }
        }
        if c.replant_interval < 1 {
            out.push(InstanceViolation::new(
                crop(&c.id),
                format!(
                    "replant_interval must be at least 1, got {}",
                    c.replant_interval
                ),
            ));
        }
        if c.allowed_land_types.is_empty() {
            out.push(InstanceViolation::new(
                crop(&c.id),
                "allowed_land_types must be non-empty",
            ));
        }
        if let Some(a) = c.area_per_planting {
            if !(a > 0.0) || !a.is_finite() {
                out.push(InstanceViolation::new(
                    crop(&c.id),
                    format!("area_per_planting must be positive, got {a}"),
                ));
            }
        }
        if let Some(d) = c.baseline_demand {
            if !(d >= 0.0) || !d.is_finite() {
                out.push(InstanceViolation::new(
                    crop(&c.id),
                    format!("baseline_demand must be non-negative, got {d}"),
                ));
            }
        }
    }

    let m = &instance.interaction;
    if m.side() != instance.crops.len() {
        out.push(InstanceViolation::new(
            "interaction matrix",
            format!(
                "side must equal the number of crops ({}), got {}",
                instance.crops.len(),
                m.side()
            ),
        ));
    } else {
        for (a, ca) in instance.crops.iter().enumerate() {
            if m.get(a, a) != 0.0 {
                out.push(InstanceViolation::new(
                    "interaction matrix",
                    format!("diagonal entry for crop '{}' must be 0", ca.id),
                ));
            }
            for (b, cb) in instance.crops.iter().enumerate() {
                if !m.get(a, b).is_finite() {
                    out.push(InstanceViolation::new(
                        "interaction matrix",
                        format!("entry ('{}', '{}') must be finite", ca.id, cb.id),
                    ));
                }
            }
        }
    }

    for (u, c) in &instance.history {
        if instance.unit_index(u).is_none() {
            out.push(InstanceViolation::new(
                format!("history entry '{u}'"),
                "refers to an unknown unit",
            ));
        }
        if instance.crop_index(c).is_none() {
            out.push(InstanceViolation::new(
                format!("history entry '{u}'"),
                format!("refers to unknown crop '{c}'"),
            ));
        }
    }

    out
}
