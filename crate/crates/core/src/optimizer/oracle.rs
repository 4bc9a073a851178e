//! Exhaustive search for small instances.

use crate::error::{Error, Result};
use crate::model::{Plan, PlanningInstance};
use crate::spatial::{admissible_actions, build_adjacency};
use crate::temporal::{initial_states, interaction_potential, unit_stress};
use crate::uncertainty::{period_revenue, ScenarioSet, WassersteinBall};

use super::feasibility::restorative;
use super::metrics::{evaluate_in, PlanMetrics};

/// Default cap on the number of candidate plans.
pub const DEFAULT_SEARCH_BOUND: f64 = 1e7;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub plan: Plan,
    pub metrics: PlanMetrics,
    /// Robust value less the rotation stress penalty.
    pub objective: f64,
}

/// Number of plans the exhaustive search would enumerate.
pub fn search_size(instance: &PlanningInstance) -> f64 {
    admissible_actions(instance, 0)
        .iter()
        .map(|a| ((a.len() + 1) as f64).powi(instance.horizon as i32))
        .product()
}

/// Maximizer of the robust objective over all feasible plans. Ties go to
/// the smallest plan in (unit, period, crop) order.
pub fn brute_force_optimize(
    instance: &PlanningInstance,
    set: &ScenarioSet,
    rho: f64,
) -> Result<OracleSolution> {
    brute_force_with_bound(instance, set, rho, DEFAULT_SEARCH_BOUND)
}

pub fn brute_force_with_bound(
    instance: &PlanningInstance,
    set: &ScenarioSet,
    rho: f64,
    bound: f64,
) -> Result<OracleSolution> {
    let candidates = search_size(instance);
    if candidates > bound {
        return Err(Error::SearchTooLarge { candidates, bound });
    }
    set.validate(instance)?;
    let adjacency = build_adjacency(&instance.units)?;
    let ball = WassersteinBall::for_set(instance, set, rho)?;
    let admissible = admissible_actions(instance, 0);
    let n = instance.units.len();
    let h = instance.horizon;
    let n_s = set.len();
    let min_scale = set
        .scenarios
        .iter()
        .map(|s| s.water_scale)
        .fold(1.0, f64::min);

    // Per period: every water-feasible assignment of the units, with its
    // revenue under each scenario.
    let mut columns: Vec<Vec<Column>> = Vec::with_capacity(h);
    let mut scratch = Vec::new();
    for t in 0..h {
        let limit = instance.water_limits[t] * min_scale;
        let mut out = Vec::new();
        let mut plan = Plan::for_instance(instance);
        for slots in product(&admissible) {
            let water: f64 = slots
                .iter()
                .enumerate()
                .filter(|(i, _)| instance.units[*i].irrigated)
                .filter_map(|(_, c)| c.map(|c| instance.crops[c].water_need))
                .sum();
            if water > limit {
                continue;
            }
            for (i, &c) in slots.iter().enumerate() {
                plan.set(i, t, c);
            }
            let eta: Vec<f64> = (0..n)
                .map(|i| interaction_potential(i, t, &plan, &adjacency, &instance.interaction))
                .collect();
            let revenue = set
                .scenarios
                .iter()
                .map(|s| period_revenue(instance, &plan, t, s, &eta, &mut scratch))
                .collect();
            out.push(Column { slots, revenue });
        }
        columns.push(out);
    }

    let mut search = Search {
        instance,
        set,
        ball: &ball,
        columns: &columns,
        history: instance.history_crops(),
        initial: initial_states(instance),
        chosen: Vec::with_capacity(h),
        totals: vec![vec![0.0; n_s]; h + 1],
        best: None,
    };
    search.descend(0);
    let (best_plan, _, objective) = search.best.expect("the empty plan is always a leaf");
    let metrics = evaluate_in(&best_plan, instance, set, &ball)?;
    Ok(OracleSolution {
        plan: best_plan,
        metrics,
        objective,
    })
}

struct Column {
    slots: Vec<Option<usize>>,
    revenue: Vec<f64>,
}

/// Cartesian product of per-unit options, fallow first, in lexicographic order.
fn product(admissible: &[Vec<usize>]) -> Vec<Vec<Option<usize>>> {
    let mut out = vec![Vec::new()];
    for options in admissible {
        let mut next = Vec::with_capacity(out.len() * (options.len() + 1));
        for prefix in &out {
            for slot in std::iter::once(None).chain(options.iter().map(|&c| Some(c))) {
                let mut v: Vec<Option<usize>> = prefix.clone();
                v.push(slot);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

struct Search<'a> {
    instance: &'a PlanningInstance,
    set: &'a ScenarioSet,
    ball: &'a WassersteinBall,
    columns: &'a [Vec<Column>],
    history: Vec<Option<usize>>,
    initial: Vec<crate::model::AgronomicState>,
    chosen: Vec<usize>,
    totals: Vec<Vec<f64>>,
    best: Option<(Plan, f64, f64)>,
}

impl Search<'_> {
    fn slot(&self, unit: usize, period: usize) -> Option<usize> {
        self.columns[period][self.chosen[period]].slots[unit]
    }

    fn legal(&self, t: usize, column: &Column) -> bool {
        let inst = self.instance;
        for (u, &slot) in column.slots.iter().enumerate() {
            if let Some(c) = slot {
                let tau = inst.crops[c].replant_interval as usize;
                for delta in 1..tau {
                    let earlier = if delta <= t {
                        self.slot(u, t - delta)
                    } else if delta == t + 1 {
                        self.history[u]
                    } else {
                        break;
                    };
                    if earlier == Some(c) {
                        return false;
                    }
                }
            }
            if let Some(window) = inst.legume_window {
                if window >= 1 && window <= inst.horizon && t + 1 >= window {
                    let start = t + 1 - window;
                    let ok = restorative(inst, slot)
                        || (start..t).any(|p| restorative(inst, self.slot(u, p)));
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn descend(&mut self, t: usize) {
        let h = self.instance.horizon;
        if t == h {
            self.leaf();
            return;
        }
        for k in 0..self.columns[t].len() {
            let column = &self.columns[t][k];
            if !self.legal(t, column) {
                continue;
            }
            let (head, tail) = self.totals.split_at_mut(t + 1);
            for (dst, (src, r)) in tail[0].iter_mut().zip(head[t].iter().zip(&column.revenue)) {
                *dst = src + r;
            }
            self.chosen.push(k);
            self.descend(t + 1);
            self.chosen.pop();
        }
    }

    fn leaf(&mut self) {
        let inst = self.instance;
        let h = inst.horizon;
        let totals = &self.totals[h];
        let worst = self.ball.worst_case(totals).value;
        let mut plan = Plan::for_instance(inst);
        for t in 0..h {
            for u in 0..inst.units.len() {
                plan.set(u, t, self.slot(u, t));
            }
        }
        let stress: f64 = if inst.rotation_stress_penalty == 0.0 {
            0.0
        } else {
            (0..inst.units.len())
                .map(|u| unit_stress(inst, &self.initial[u], plan.unit_row(u)))
                .sum()
        };
        let objective = worst - inst.rotation_stress_penalty * stress;
        let shortfall: f64 = self
            .set
            .scenarios
            .iter()
            .zip(totals)
            .filter_map(|(s, v)| s.revenue_floor.map(|f| (f - v).max(0.0)))
            .sum();
        let better = match &self.best {
            None => true,
            Some((p, s, o)) => {
                shortfall < *s
                    || (shortfall == *s && (objective > *o || (objective == *o && plan < *p)))
            }
        };
        if better {
            self.best = Some((plan, shortfall, objective));
        }
    }
}
