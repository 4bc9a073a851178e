//! Worst-case expectation over a type-1 Wasserstein ball with finite support.
//!
//! The candidate distributions share the support of the empirical one. Moving
//! mass from scenario `k` to `j` lowers the expectation by `v[k] - v[j]` per
//! unit and spends `d[k][j]` of the transport budget. For each source the
//! useful destinations form an upper concave hull in (cost, gain) space; the
//! optimum takes hull segments in decreasing gain-per-cost order across all
//! sources until the budget is spent, splitting at most one segment.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{Plan, PlanningInstance};
use crate::temporal::StateTrajectory;

use super::revenue::scenario_totals;
use super::scenario::{Scenario, ScenarioSet};

/// Ambiguity radius and the scales that normalize each coordinate of the
/// scenario parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguitySpec {
    pub rho: f64,
    /// One divisor per coordinate of [`theta`].
    pub scales: Vec<f64>,
}

impl AmbiguitySpec {
    /// Scales each coordinate by its nominal value times the coordinate
    /// count, so the ground distance is a mean relative deviation.
    pub fn normalized(instance: &PlanningInstance, set: &ScenarioSet, rho: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::NegativeRadius(rho));
        }
        let h = instance.horizon;
        let unit_dims = set.scenarios.first().map_or(0, |s| s.unit_factor.len());
        let dims = 3 * instance.crops.len() * h + unit_dims;
        let total = dims.max(1) as f64;
        let mut scales = Vec::with_capacity(dims);
        scales.extend(std::iter::repeat_n(total, instance.crops.len() * h));
        for pick in [
            |c: &crate::model::Crop| c.baseline_price,
            |c: &crate::model::Crop| c.baseline_cost,
        ] {
            for crop in &instance.crops {
                let nominal = pick(crop);
                let scale = if nominal > 0.0 {
                    nominal * total
                } else {
                    total
                };
                scales.extend(std::iter::repeat_n(scale, h));
            }
        }
        scales.extend(std::iter::repeat_n(total, unit_dims));
        Ok(AmbiguitySpec { rho, scales })
    }
}

/// Raw parameter vector of a scenario: yield factors, prices, costs, and
/// per-unit factors, concatenated.
pub fn theta(s: &Scenario) -> impl Iterator<Item = f64> + '_ {
    s.yield_factor
        .iter()
        .chain(&s.price)
        .chain(&s.cost)
        .chain(&s.unit_factor)
        .copied()
}

fn theta_len(s: &Scenario) -> usize {
    s.yield_factor.len() + s.price.len() + s.cost.len() + s.unit_factor.len()
}

/// L1 distance between normalized parameter vectors.
pub fn ground_distance(a: &Scenario, b: &Scenario, spec: &AmbiguitySpec) -> Result<f64> {
    for s in [a, b] {
        if theta_len(s) != spec.scales.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.scales.len(),
                found: theta_len(s),
            });
        }
    }
    Ok(theta(a)
        .zip(theta(b))
        .zip(&spec.scales)
        .map(|((x, y), s)| (x - y).abs() / s)
        .sum())
}

/// Dense symmetric matrix of pairwise ground distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn check(&self) -> Result<()> {
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, &d| m.max(d.abs()))
            .max(1.0);
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidDistances(format!(
                    "diagonal entry {i} is not zero"
                )));
            }
            for j in 0..self.n {
                let d = self.get(i, j);
                if !(d >= 0.0) || !d.is_finite() {
                    return Err(Error::InvalidDistances(format!(
                        "entry ({i}, {j}) = {d} is negative or not finite"
                    )));
                }
                if (d - self.get(j, i)).abs() > 1e-12 * scale {
                    return Err(Error::InvalidDistances(format!(
                        "entry ({i}, {j}) is not symmetric"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Pairwise ground distances of every scenario in the set.
pub fn distance_matrix(set: &ScenarioSet, spec: &AmbiguitySpec) -> Result<DistanceMatrix> {
    let n = set.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = ground_distance(&set.scenarios[i], &set.scenarios[j], spec)?;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Result of the inner minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseResult {
    /// Worst-case expected value.
    pub value: f64,
    /// Worst-case distribution over the scenarios.
    pub worst_weights: Vec<f64>,
    /// Transport budget spent reaching it.
    pub transport_cost_used: f64,
}

#[derive(Debug, Clone, Copy)]
struct HullPoint {
    cost: f64,
    gain: f64,
    dest: usize,
}

/// Empirical distribution, ground distances, and radius, with per-source
/// destination orders cached for repeated evaluation.
#[derive(Debug, Clone)]
pub struct WassersteinBall {
    weights: Vec<f64>,
    distances: DistanceMatrix,
    rho: f64,
    order: Vec<Vec<usize>>,
}

impl WassersteinBall {
    pub fn new(weights: Vec<f64>, distances: DistanceMatrix, rho: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::NegativeRadius(rho));
        }
        if distances.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: distances.len(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidDistances(
                "weights must be non-negative".into(),
            ));
        }
        distances.check()?;
        let n = weights.len();
        let order = (0..n)
            .map(|k| {
                let mut dests: Vec<usize> = (0..n).filter(|&j| j != k).collect();
                dests.sort_by(|&a, &b| {
                    distances
                        .get(k, a)
                        .total_cmp(&distances.get(k, b))
                        .then(a.cmp(&b))
                });
                dests
            })
            .collect();
        Ok(WassersteinBall {
            weights,
            distances,
            rho,
            order,
        })
    }

    /// Builds the ball for a scenario set with the default normalization.
    pub fn for_set(instance: &PlanningInstance, set: &ScenarioSet, rho: f64) -> Result<Self> {
        let spec = AmbiguitySpec::normalized(instance, set, rho)?;
        let distances = distance_matrix(set, &spec)?;
        WassersteinBall::new(set.weights(), distances, rho)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    /// Same support and distances, different radius.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::NegativeRadius(rho));
        }
        Ok(WassersteinBall {
            rho,
            ..self.clone()
        })
    }

    /// Empirical expectation of `values`.
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(p, v)| p * v).sum()
    }

    /// Minimum expectation of `values` over the ball.
    pub fn worst_case(&self, values: &[f64]) -> WorstCaseResult {
        let mut ws = WorstCaseScratch::default();
        let value = self.solve(values, &mut ws);
        let n = values.len();
        let mut q = vec![0.0; n];
        let mut used = 0.0;
        for k in 0..n {
            let p = self.weights[k];
            if p <= 0.0 {
                continue;
            }
            let h = &ws.hulls[ws.hull_start[k]..ws.hull_start[k + 1]];
            let (m, frac) = ws.position[k];
            q[h[m].dest] += (1.0 - frac) * p;
            used += (1.0 - frac) * p * h[m].cost;
            if frac > 0.0 {
                q[h[m + 1].dest] += frac * p;
                used += frac * p * h[m + 1].cost;
            }
        }
        WorstCaseResult {
            value,
            worst_weights: q,
            transport_cost_used: used,
        }
    }

    /// Value of [`worst_case`](Self::worst_case) without the distribution,
    /// reusing `scratch` across calls.
    pub fn worst_case_value(&self, values: &[f64], scratch: &mut WorstCaseScratch) -> f64 {
        self.solve(values, scratch)
    }

    fn solve(&self, values: &[f64], ws: &mut WorstCaseScratch) -> f64 {
        assert_eq!(values.len(), self.weights.len(), "one value per scenario");
        let n = values.len();
        let mean = self.expectation(values);
        let v_min = values.iter().copied().fold(f64::INFINITY, f64::min);

        // Per-source hulls, flattened; hull_start[k]..hull_start[k + 1].
        let hulls = &mut ws.hulls;
        let hull_start = &mut ws.hull_start;
        hulls.clear();
        hull_start.clear();
        for k in 0..n {
            hull_start.push(hulls.len());
            // Zero-cost moves are free; start from the best of them.
            let mut start = HullPoint {
                cost: 0.0,
                gain: 0.0,
                dest: k,
            };
            let ceiling = values[k] - v_min;
            if self.weights[k] <= 0.0 || ceiling <= 0.0 {
                hulls.push(start);
                continue;
            }
            let base = hulls.len();
            for &j in &self.order[k] {
                if self.distances.get(k, j) > 0.0 {
                    break;
                }
                let gain = values[k] - values[j];
                if gain > start.gain {
                    start = HullPoint {
                        cost: 0.0,
                        gain,
                        dest: j,
                    };
                }
            }
            hulls.push(start);
            if start.gain >= ceiling {
                continue;
            }
            for &j in &self.order[k] {
                let cost = self.distances.get(k, j);
                if cost == 0.0 {
                    continue;
                }
                let gain = values[k] - values[j];
                if gain <= hulls[hulls.len() - 1].gain {
                    continue;
                }
                let p = HullPoint {
                    cost,
                    gain,
                    dest: j,
                };
                while hulls.len() - base >= 2 {
                    let b = hulls[hulls.len() - 1];
                    let a = hulls[hulls.len() - 2];
                    if slope(&a, &b) <= slope(&b, &p) {
                        hulls.pop();
                    } else {
                        break;
                    }
                }
                hulls.push(p);
                // Nothing further along can gain more.
                if gain >= ceiling {
                    break;
                }
            }
        }
        hull_start.push(hulls.len());

        // (slope, source, segment index within the source's hull)
        let segments = &mut ws.segments;
        segments.clear();
        for k in 0..n {
            let h = &hulls[hull_start[k]..hull_start[k + 1]];
            for m in 0..h.len().saturating_sub(1) {
                segments.push((slope(&h[m], &h[m + 1]), k, m));
            }
        }
        segments.sort_unstable_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });

        // position[k] = (hull index, fraction moved on toward the next point)
        let position = &mut ws.position;
        position.clear();
        position.resize(n, (0, 0.0));
        let mut gain: f64 = (0..n)
            .map(|k| self.weights[k] * hulls[hull_start[k]].gain)
            .sum();
        let mut budget = self.rho;
        for &(_, k, m) in segments.iter() {
            if budget <= 0.0 {
                break;
            }
            let h = &hulls[hull_start[k]..hull_start[k + 1]];
            let p = self.weights[k];
            let cost = p * (h[m + 1].cost - h[m].cost);
            let step_gain = p * (h[m + 1].gain - h[m].gain);
            if cost <= budget {
                budget -= cost;
                gain += step_gain;
                position[k] = (m + 1, 0.0);
            } else {
                let frac = budget / cost;
                gain += frac * step_gain;
                position[k] = (m, frac);
                budget = 0.0;
            }
        }

        if gain == 0.0 {
            mean
        } else {
            mean - gain
        }
    }
}

/// Reusable buffers for repeated worst-case evaluation.
#[derive(Debug, Clone, Default)]
pub struct WorstCaseScratch {
    hulls: Vec<HullPoint>,
    hull_start: Vec<usize>,
    segments: Vec<(f64, usize, usize)>,
    position: Vec<(usize, f64)>,
}

#[inline]
fn slope(a: &HullPoint, b: &HullPoint) -> f64 {
    let dc = b.cost - a.cost;
    if dc <= 0.0 {
        f64::INFINITY
    } else {
        (b.gain - a.gain) / dc
    }
}

/// Minimum of `Σ q_k v_k` over distributions `q` within transport distance
/// `rho` of `weights`.
pub fn worst_case_expectation(
    values: &[f64],
    weights: &[f64],
    distances: &DistanceMatrix,
    rho: f64,
) -> Result<WorstCaseResult> {
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            found: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDistances("values must be finite".into()));
    }
    let ball = WassersteinBall::new(weights.to_vec(), distances.clone(), rho)?;
    Ok(ball.worst_case(values))
}

/// Worst-case expected horizon revenue of `plan` over the ball of radius `rho`
/// around the scenario set.
pub fn robust_value(
    plan: &Plan,
    instance: &PlanningInstance,
    trajectory: &StateTrajectory,
    set: &ScenarioSet,
    rho: f64,
) -> Result<WorstCaseResult> {
    let ball = WassersteinBall::for_set(instance, set, rho)?;
    let totals = scenario_totals(plan, instance, trajectory, set);
    Ok(ball.worst_case(&totals))
}
