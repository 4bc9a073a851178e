//! Spatial layer: unit adjacency, crop admissibility, area and water limits.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{Cell, Crop, LandUnit, Plan, PlanningInstance};

/// Symmetric 0/1 adjacency between land units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyMatrix {
    /// Builds the matrix from an explicit list of undirected edges.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut entries = vec![false; n * n];
        for (i, j) in edges {
            if i != j {
                entries[i * n + j] = true;
                entries[j * n + i] = true;
            }
        }
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| entries[i * n + j]).collect())
            .collect();
        AdjacencyMatrix {
            n,
            entries,
            neighbors,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    /// Neighbors of `i` in ascending order.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Two units are adjacent iff some pair of their cells is at L1 distance 1.
pub fn build_adjacency(units: &[LandUnit]) -> Result<AdjacencyMatrix> {
    let mut owner: HashMap<Cell, usize> = HashMap::new();
    for (i, unit) in units.iter().enumerate() {
        for &cell in &unit.cells {
            if let Some(&j) = owner.get(&cell) {
                if j != i {
                    return Err(Error::OverlappingCells {
                        first: units[j].id.clone(),
                        second: unit.id.clone(),
                        row: cell.0,
                        col: cell.1,
                    });
                }
            }
            owner.insert(cell, i);
        }
    }

    let mut edges = Vec::new();
    for (i, unit) in units.iter().enumerate() {
        for &(r, c) in &unit.cells {
            for probe in [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)] {
                if let Some(&j) = owner.get(&probe) {
                    if j != i {
                        edges.push((i, j));
                    }
                }
            }
        }
    }
    Ok(AdjacencyMatrix::from_edges(units.len(), edges))
}

/// Crops whose land-type table admits `unit`, as ascending crop indices.
pub fn feasible_crops(unit: &LandUnit, crops: &[Crop]) -> Vec<usize> {
    crops
        .iter()
        .enumerate()
        .filter(|(_, c)| c.allowed_land_types.contains(&unit.land_type))
        .map(|(k, _)| k)
        .collect()
}

/// Per-unit admissible actions for `period`: feasible crops whose planting
/// area fits the unit.
pub fn admissible_actions(instance: &PlanningInstance, _period: usize) -> Vec<Vec<usize>> {
    // Planting areas carry no period dependence in this model, so every
    // period shares the same sets.
    instance
        .units
        .iter()
        .map(|unit| {
            feasible_crops(unit, &instance.crops)
                .into_iter()
                .filter(|&c| instance.crops[c].area_on(unit) <= unit.area)
                .collect()
        })
        .collect()
}

/// Units whose planted area in `period` exceeds their available area.
pub fn capacity_violation(plan: &Plan, instance: &PlanningInstance, period: usize) -> Vec<usize> {
    instance
        .units
        .iter()
        .enumerate()
        .filter(|&(i, unit)| {
            let used = plan
                .get(i, period)
                .map_or(0.0, |c| instance.crops[c].area_on(unit));
            used > unit.area
        })
        .map(|(i, _)| i)
        .collect()
}

/// Water drawn by irrigated units in `period`.
pub fn water_usage(plan: &Plan, instance: &PlanningInstance, period: usize) -> f64 {
    instance
        .units
        .iter()
        .enumerate()
        .filter(|(_, u)| u.irrigated)
        .filter_map(|(i, _)| plan.get(i, period))
        .map(|c| instance.crops[c].water_need)
        .sum()
}

/// Amount by which irrigated usage in `period` exceeds `limit`, if it does.
pub fn water_excess(
    plan: &Plan,
    instance: &PlanningInstance,
    period: usize,
    limit: f64,
) -> Option<f64> {
    let excess = water_usage(plan, instance, period) - limit;
    (excess > 0.0).then_some(excess)
}

/// Excess over the instance's own seasonal limit.
pub fn water_violation(plan: &Plan, instance: &PlanningInstance, period: usize) -> Option<f64> {
    water_excess(plan, instance, period, instance.water_limits[period])
}
