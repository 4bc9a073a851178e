//! Incremental objective evaluation for local search.
//!
//! A change to period `t` only alters the interaction potentials of the
//! touched units and their neighbours in period `t`, and the stress chain of
//! the touched units. Without a demand cap revenue is separable by unit, so
//! only those units are re-priced; the inner worst case is then re-solved
//! over the updated scenario totals.

use crate::model::{AgronomicState, Plan, PlanningInstance};
use crate::spatial::AdjacencyMatrix;
use crate::temporal::{
    initial_states, interaction_potential, row_rotation_violations, unit_stress,
};
use std::cell::RefCell;

use crate::uncertainty::{
    period_revenue, unit_revenue, ScenarioSet, WassersteinBall, WorstCaseScratch,
};

use super::feasibility::restorative;

/// Search objective with the revenue-floor shortfall ranked first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Score {
    pub shortfall: f64,
    pub objective: f64,
    pub rotation_violations: usize,
}

impl Score {
    pub fn better_than(&self, other: &Score) -> bool {
        if self.shortfall != other.shortfall {
            return self.shortfall < other.shortfall;
        }
        self.objective > other.objective
    }

    pub fn hard_feasible(&self) -> bool {
        self.rotation_violations == 0
    }
}

/// `(unit, period, new crop)`.
pub(crate) type Change = (usize, usize, Option<usize>);

pub(crate) struct Engine<'a> {
    instance: &'a PlanningInstance,
    set: &'a ScenarioSet,
    adjacency: &'a AdjacencyMatrix,
    ball: &'a WassersteinBall,
    water_limits: Vec<f64>,
    history: Vec<Option<usize>>,
    initial: Vec<AgronomicState>,
    rotation_weight: f64,
    /// Score by the empirical expectation instead of the worst case.
    mean_only: bool,
    worst_scratch: RefCell<WorstCaseScratch>,

    plan: Plan,
    eta: Vec<f64>,
    revenue: Vec<f64>,
    totals: Vec<f64>,
    water_used: Vec<f64>,
    stress: Vec<f64>,
    rotation: Vec<usize>,
    score: Score,

    // Candidate state, valid between `propose` and `commit`/`reject`.
    undo: Vec<Change>,
    touched_periods: Vec<usize>,
    touched_units: Vec<usize>,
    /// `(period, unit, eta)` for every re-evaluated potential.
    cand_eta: Vec<(usize, usize, f64)>,
    cand_revenue: Vec<f64>,
    cand_totals: Vec<f64>,
    cand_stress: Vec<(usize, f64)>,
    cand_rotation: Vec<(usize, usize)>,
    cand_water: Vec<(usize, f64)>,
    cand_score: Option<Score>,
    affected: Vec<usize>,
    eta_buf: Vec<f64>,
    scratch: Vec<f64>,
    commits: usize,
}

/// Commits between exact rebuilds of the cached revenues.
const REBUILD_EVERY: usize = 4096;

impl<'a> Engine<'a> {
    /// `rotation_weight` of zero makes rotation intervals hard; a positive
    /// weight lets the search cross them at that cost per violation.
    pub fn new(
        instance: &'a PlanningInstance,
        set: &'a ScenarioSet,
        adjacency: &'a AdjacencyMatrix,
        ball: &'a WassersteinBall,
        rotation_weight: f64,
        plan: Plan,
    ) -> Self {
        let h = instance.horizon;
        let min_scale = set
            .scenarios
            .iter()
            .map(|s| s.water_scale)
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let water_limits = instance
            .water_limits
            .iter()
            .map(|w| w * min_scale)
            .collect();
        let mut engine = Engine {
            instance,
            set,
            adjacency,
            ball,
            water_limits,
            history: instance.history_crops(),
            initial: initial_states(instance),
            rotation_weight,
            mean_only: false,
            worst_scratch: RefCell::new(WorstCaseScratch::default()),
            plan,
            eta: vec![0.0; h * instance.units.len()],
            revenue: vec![0.0; set.len() * h],
            totals: vec![0.0; set.len()],
            water_used: vec![0.0; h],
            stress: vec![0.0; instance.units.len()],
            rotation: vec![0; instance.units.len()],
            score: Score {
                shortfall: 0.0,
                objective: 0.0,
                rotation_violations: 0,
            },
            undo: Vec::new(),
            touched_periods: Vec::new(),
            touched_units: Vec::new(),
            cand_eta: Vec::new(),
            cand_revenue: Vec::new(),
            cand_totals: Vec::new(),
            cand_stress: Vec::new(),
            cand_rotation: Vec::new(),
            cand_water: Vec::new(),
            cand_score: None,
            affected: Vec::new(),
            eta_buf: Vec::new(),
            scratch: Vec::new(),
            commits: 0,
        };
        engine.rebuild();
        engine
    }

    fn rebuild(&mut self) {
        let inst = self.instance;
        let h = inst.horizon;
        let n_units = inst.units.len();
        for t in 0..h {
            for i in 0..n_units {
                self.eta[t * n_units + i] =
                    interaction_potential(i, t, &self.plan, self.adjacency, &inst.interaction);
            }
            self.water_used[t] = self.water_in_period(t);
            for (s, scenario) in self.set.scenarios.iter().enumerate() {
                self.revenue[s * h + t] = period_revenue(
                    inst,
                    &self.plan,
                    t,
                    scenario,
                    &self.eta[t * n_units..(t + 1) * n_units],
                    &mut self.scratch,
                );
            }
        }
        for s in 0..self.set.len() {
            self.totals[s] = self.revenue[s * h..(s + 1) * h].iter().sum();
        }
        for i in 0..n_units {
            self.stress[i] = self.unit_stress_of(i);
            self.rotation[i] = self.rotation_count_of(i);
        }
        self.score = self.score_of(
            &self.totals,
            self.stress.iter().sum(),
            self.rotation.iter().sum(),
        );
    }

    pub fn set_mean_only(&mut self, on: bool) {
        self.mean_only = on;
        self.score = self.score_of(
            &self.totals,
            self.stress.iter().sum(),
            self.rotation.iter().sum(),
        );
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    pub fn score(&self) -> Score {
        self.score
    }

    fn water_in_period(&self, t: usize) -> f64 {
        self.instance
            .units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.irrigated)
            .filter_map(|(i, _)| self.plan.get(i, t))
            .map(|c| self.instance.crops[c].water_need)
            .sum()
    }

    fn unit_stress_of(&self, unit: usize) -> f64 {
        if self.instance.rotation_stress_penalty == 0.0 {
            0.0
        } else {
            unit_stress(self.instance, &self.initial[unit], self.plan.unit_row(unit))
        }
    }

    fn rotation_count_of(&self, unit: usize) -> usize {
        row_rotation_violations(self.instance, self.history[unit], self.plan.unit_row(unit)).count()
    }

    fn window_ok(&self, unit: usize, period: usize) -> bool {
        let Some(window) = self.instance.legume_window else {
            return true;
        };
        let h = self.instance.horizon;
        if window == 0 || window > h {
            return true;
        }
        let row = self.plan.unit_row(unit);
        let first = period.saturating_sub(window - 1);
        let last = period.min(h - window);
        (first..=last).all(|start| {
            row[start..start + window]
                .iter()
                .any(|&c| restorative(self.instance, c))
        })
    }

    fn score_of(&self, totals: &[f64], stress: f64, rotation: usize) -> Score {
        let worst = if self.mean_only {
            self.ball.expectation(totals)
        } else {
            self.ball
                .worst_case_value(totals, &mut self.worst_scratch.borrow_mut())
        };
        let shortfall = self
            .set
            .scenarios
            .iter()
            .zip(totals)
            .filter_map(|(s, v)| s.revenue_floor.map(|f| (f - v).max(0.0)))
            .sum();
        Score {
            shortfall,
            objective: worst
                - self.instance.rotation_stress_penalty * stress
                - self.rotation_weight * rotation as f64,
            rotation_violations: rotation,
        }
    }

    /// Applies `changes` tentatively. Returns the candidate score, or `None`
    /// when a hard constraint breaks (the plan is then already restored).
    pub fn propose(&mut self, changes: &[Change]) -> Option<Score> {
        debug_assert!(self.cand_score.is_none(), "pending candidate");
        let inst = self.instance;
        let h = inst.horizon;
        let n_units = inst.units.len();

        self.undo.clear();
        self.touched_periods.clear();
        self.touched_units.clear();
        for &(u, t, c) in changes {
            self.undo.push((u, t, self.plan.get(u, t)));
            self.plan.set(u, t, c);
            if !self.touched_periods.contains(&t) {
                self.touched_periods.push(t);
            }
            if !self.touched_units.contains(&u) {
                self.touched_units.push(u);
            }
        }

        // Hard checks.
        self.cand_water.clear();
        for k in 0..self.touched_periods.len() {
            let t = self.touched_periods[k];
            let used = self.water_in_period(t);
            if used > self.water_limits[t] && used > self.water_used[t] {
                self.restore();
                return None;
            }
            self.cand_water.push((t, used));
        }
        for &(u, t, _) in changes {
            if !self.window_ok(u, t) {
                self.restore();
                return None;
            }
        }
        self.cand_rotation.clear();
        let mut rotation_total: usize = self.rotation.iter().sum();
        for k in 0..self.touched_units.len() {
            let u = self.touched_units[k];
            let count = self.rotation_count_of(u);
            if self.rotation_weight == 0.0 && count > 0 {
                self.restore();
                return None;
            }
            rotation_total = rotation_total + count - self.rotation[u];
            self.cand_rotation.push((u, count));
        }

        // Revenue of touched periods.
        let n_s = self.set.len();
        self.cand_eta.clear();
        self.cand_revenue
            .resize(self.touched_periods.len() * n_s, 0.0);
        self.cand_totals.clear();
        self.cand_totals.extend_from_slice(&self.totals);
        for k in 0..self.touched_periods.len() {
            let t = self.touched_periods[k];
            self.affected.clear();
            if inst.demand_cap {
                self.affected.extend(0..n_units);
            } else {
                for &(u, pt, _) in changes {
                    if pt != t {
                        continue;
                    }
                    for &i in std::iter::once(&u).chain(self.adjacency.neighbors(u)) {
                        if !self.affected.contains(&i) {
                            self.affected.push(i);
                        }
                    }
                }
            }
            for idx in 0..self.affected.len() {
                let i = self.affected[idx];
                let e = interaction_potential(i, t, &self.plan, self.adjacency, &inst.interaction);
                self.cand_eta.push((t, i, e));
            }
            if inst.demand_cap {
                let first = self.cand_eta.len() - n_units;
                self.eta_buf.clear();
                self.eta_buf
                    .extend(self.cand_eta[first..].iter().map(|x| x.2));
                for (s, scenario) in self.set.scenarios.iter().enumerate() {
                    let r = period_revenue(
                        inst,
                        &self.plan,
                        t,
                        scenario,
                        &self.eta_buf,
                        &mut self.scratch,
                    );
                    self.cand_revenue[k * n_s + s] = r;
                    self.cand_totals[s] += r - self.revenue[s * h + t];
                }
            } else {
                for s in 0..n_s {
                    self.cand_revenue[k * n_s + s] = self.revenue[s * h + t];
                }
                let first = self.cand_eta.len() - self.affected.len();
                for idx in first..self.cand_eta.len() {
                    let (_, i, new_eta) = self.cand_eta[idx];
                    let old_eta = self.eta[t * n_units + i];
                    let new_crop = self.plan.get(i, t);
                    let old_crop = self
                        .undo
                        .iter()
                        .find(|&&(u, pt, _)| u == i && pt == t)
                        .map_or(new_crop, |&(_, _, c)| c);
                    if new_crop == old_crop && new_eta == old_eta {
                        continue;
                    }
                    for (s, scenario) in self.set.scenarios.iter().enumerate() {
                        let new = new_crop
                            .map_or(0.0, |c| unit_revenue(inst, i, c, t, scenario, new_eta));
                        let old = old_crop
                            .map_or(0.0, |c| unit_revenue(inst, i, c, t, scenario, old_eta));
                        self.cand_revenue[k * n_s + s] += new - old;
                        self.cand_totals[s] += new - old;
                    }
                }
            }
        }

        self.cand_stress.clear();
        let mut stress_total: f64 = self.stress.iter().sum();
        if inst.rotation_stress_penalty != 0.0 {
            for k in 0..self.touched_units.len() {
                let u = self.touched_units[k];
                let s = self.unit_stress_of(u);
                stress_total += s - self.stress[u];
                self.cand_stress.push((u, s));
            }
        }

        let totals = std::mem::take(&mut self.cand_totals);
        let score = self.score_of(&totals, stress_total, rotation_total);
        self.cand_totals = totals;
        self.cand_score = Some(score);
        Some(score)
    }

    fn restore(&mut self) {
        for k in (0..self.undo.len()).rev() {
            let (u, t, c) = self.undo[k];
            self.plan.set(u, t, c);
        }
        self.undo.clear();
    }

    pub fn commit(&mut self) {
        if self.cand_score.take().is_none() {
            return;
        }
        let h = self.instance.horizon;
        let n_units = self.instance.units.len();
        let n_s = self.set.len();
        for &(t, i, e) in &self.cand_eta {
            self.eta[t * n_units + i] = e;
        }
        for (k, &t) in self.touched_periods.iter().enumerate() {
            for s in 0..n_s {
                self.revenue[s * h + t] = self.cand_revenue[k * n_s + s];
            }
        }
        // Re-summing avoids drift from repeated incremental updates.
        for s in 0..n_s {
            self.totals[s] = self.revenue[s * h..(s + 1) * h].iter().sum();
        }
        for &(t, used) in &self.cand_water {
            self.water_used[t] = used;
        }
        for &(u, count) in &self.cand_rotation {
            self.rotation[u] = count;
        }
        for &(u, s) in &self.cand_stress {
            self.stress[u] = s;
        }
        self.undo.clear();
        self.commits += 1;
        if self.commits.is_multiple_of(REBUILD_EVERY) {
            self.rebuild();
        } else {
            self.score = self.score_of(
                &self.totals,
                self.stress.iter().sum(),
                self.rotation.iter().sum(),
            );
        }
    }

    pub fn reject(&mut self) {
        if self.cand_score.take().is_some() {
            self.restore();
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::model::fixtures::small;
    use crate::spatial::{admissible_actions, build_adjacency};
    use crate::uncertainty::{generate_scenarios, ScenarioSpec};

    fn check(demand_cap: bool) {
        let mut inst = small();
        inst.interaction.set(0, 1, 0.4);
        inst.interaction.set(1, 0, 0.4);
        inst.interaction.set(0, 2, -0.3);
        inst.interaction.set(2, 0, -0.3);
        inst.demand_cap = demand_cap;
        inst.salvage_fraction = 0.3;
        inst.rotation_stress_penalty = 2.0;
        for c in &mut inst.crops {
            c.baseline_demand = Some(700.0);
        }
        let set = generate_scenarios(&inst, &ScenarioSpec::with_count(6), 11).unwrap();
        let adjacency = build_adjacency(&inst.units).unwrap();
        let ball = WassersteinBall::for_set(&inst, &set, 0.03).unwrap();
        let admissible = admissible_actions(&inst, 0);
        let mut engine = Engine::new(
            &inst,
            &set,
            &adjacency,
            &ball,
            0.0,
            Plan::for_instance(&inst),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for step in 0..400 {
            let u = rng.gen_range(0..3);
            let t = rng.gen_range(0..4);
            let k = rng.gen_range(0..=admissible[u].len());
            let mut changes = vec![(u, t, admissible[u].get(k).copied())];
            if step % 3 == 0 {
                let v = (u + 1) % 3;
                let k = rng.gen_range(0..=admissible[v].len());
                changes.push((v, t, admissible[v].get(k).copied()));
            }
            if engine.propose(&changes).is_some() {
                if rng.gen_bool(0.7) {
                    engine.commit();
                } else {
                    engine.reject();
                }
            }
            let fresh = Engine::new(&inst, &set, &adjacency, &ball, 0.0, engine.plan().clone());
            let (a, b) = (engine.score(), fresh.score());
            assert!(
                (a.objective - b.objective).abs() <= 1e-9 * b.objective.abs().max(1.0),
                "{a:?} vs {b:?}"
            );
            assert_eq!(a.rotation_violations, b.rotation_violations);
        }
    }

    #[test]
    fn incremental_score_matches_rebuild() {
        check(false);
    }

    #[test]
    fn incremental_score_matches_rebuild_with_demand_cap() {
        check(true);
    }
}
