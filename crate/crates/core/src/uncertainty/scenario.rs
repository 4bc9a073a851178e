use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CropCategory, PlanningInstance};

/// Perturbation ranges for Monte Carlo scenario generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub count: usize,
    /// Yield factors are drawn from `[1 - r, 1 + r]`.
    pub yield_radius: f64,
    pub price_radius: f64,
    pub cost_radius: f64,
    /// Yearly growth range of staple-grain demand.
    pub demand_growth_min: f64,
    pub demand_growth_max: f64,
    /// Per-unit yield noise radius; zero disables the per-unit term.
    pub unit_noise: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            count: 200,
            yield_radius: 0.10,
            price_radius: 0.05,
            cost_radius: 0.05,
            demand_growth_min: 0.05,
            demand_growth_max: 0.10,
            unit_noise: 0.0,
        }
    }
}

impl ScenarioSpec {
    pub fn with_count(count: usize) -> Self {
        ScenarioSpec {
            count,
            ..Self::default()
        }
    }

    /// All radii zero: every scenario equals the nominal parameters.
    pub fn degenerate(count: usize) -> Self {
        ScenarioSpec {
            count,
            yield_radius: 0.0,
            price_radius: 0.0,
            cost_radius: 0.0,
            demand_growth_min: 0.0,
            demand_growth_max: 0.0,
            unit_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 1 {
            return Err(Error::InvalidScenarioSpec(
                "count must be at least 1".into(),
            ));
        }
        for (name, r) in [
            ("yield_radius", self.yield_radius),
            ("price_radius", self.price_radius),
            ("cost_radius", self.cost_radius),
            ("unit_noise", self.unit_noise),
        ] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidScenarioSpec(format!(
                    "{name} must lie in [0, 1), got {r}"
                )));
            }
        }
        if !(self.demand_growth_min >= 0.0 && self.demand_growth_min <= self.demand_growth_max)
            || !self.demand_growth_max.is_finite()
        {
            return Err(Error::InvalidScenarioSpec(format!(
                "demand growth range [{}, {}] is not an ordered non-negative interval",
                self.demand_growth_min, self.demand_growth_max
            )));
        }
        Ok(())
    }
}

/// One joint realization of yields, prices, costs, and demands.
///
/// Per-crop arrays are laid out crop-major: entry `crop * horizon + period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub crops: usize,
    pub horizon: usize,
    /// Multiplier on each unit's expected yield.
    pub yield_factor: Vec<f64>,
    /// CNY per kg.
    pub price: Vec<f64>,
    /// CNY per mu.
    pub cost: Vec<f64>,
    /// kg; `None` is unlimited.
    pub demand: Vec<Option<f64>>,
    /// Per-unit yield noise; empty when disabled.
    #[serde(default)]
    pub unit_factor: Vec<f64>,
    /// Scale on the seasonal water limits.
    #[serde(default = "one")]
    pub water_scale: f64,
    /// Minimum total revenue required for the plan to be feasible here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revenue_floor: Option<f64>,
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl Scenario {
    /// Baseline parameters with zero demand growth and weight 1.
    pub fn nominal(instance: &PlanningInstance) -> Scenario {
        let h = instance.horizon;
        let mut s = Scenario {
            crops: instance.crops.len(),
            horizon: h,
            yield_factor: vec![1.0; instance.crops.len() * h],
            price: Vec::with_capacity(instance.crops.len() * h),
            cost: Vec::with_capacity(instance.crops.len() * h),
            demand: Vec::with_capacity(instance.crops.len() * h),
            unit_factor: Vec::new(),
            water_scale: 1.0,
            revenue_floor: None,
            weight: 1.0,
        };
        for crop in &instance.crops {
            for _ in 0..h {
                s.price.push(crop.baseline_price);
                s.cost.push(crop.baseline_cost);
                s.demand.push(crop.baseline_demand);
            }
        }
        s
    }

    #[inline]
    pub fn index(&self, crop: usize, period: usize) -> usize {
        crop * self.horizon + period
    }

    #[inline]
    pub fn unit_yield_factor(&self, unit: usize) -> f64 {
        self.unit_factor.get(unit).copied().unwrap_or(1.0)
    }

    fn shape_ok(&self, instance: &PlanningInstance) -> bool {
        let n = instance.crops.len() * instance.horizon;
        self.crops == instance.crops.len()
            && self.horizon == instance.horizon
            && self.yield_factor.len() == n
            && self.price.len() == n
            && self.cost.len() == n
            && self.demand.len() == n
            && (self.unit_factor.is_empty() || self.unit_factor.len() == instance.units.len())
    }
}

/// Finite support of the empirical distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
    pub seed: u64,
}

impl ScenarioSet {
    /// The single nominal scenario.
    pub fn nominal(instance: &PlanningInstance) -> ScenarioSet {
        ScenarioSet {
            scenarios: vec![Scenario::nominal(instance)],
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.weight).collect()
    }

    /// Non-empty, weights non-negative summing to one, shapes matching the
    /// instance, and every factor positive.
    pub fn validate(&self, instance: &PlanningInstance) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidScenarioSpec("scenario set is empty".into()));
        }
        let total: f64 = self.scenarios.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidScenarioSpec(format!(
                "scenario weights sum to {total}, expected 1"
            )));
        }
        for (k, s) in self.scenarios.iter().enumerate() {
            if !s.shape_ok(instance) {
                return Err(Error::DimensionMismatch {
                    expected: instance.crops.len() * instance.horizon,
                    found: s.yield_factor.len(),
                });
            }
            let positive = s
                .yield_factor
                .iter()
                .chain(&s.unit_factor)
                .chain(std::iter::once(&s.water_scale))
                .all(|&f| f > 0.0 && f.is_finite());
            if !positive || !(s.weight >= 0.0) {
                return Err(Error::InvalidScenarioSpec(format!(
                    "scenario {k} has a non-positive factor or negative weight"
                )));
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Draws `spec.count` equally weighted scenarios, deterministic in `seed`.
///
/// Yield factors are drawn per (crop, period) and shared by every unit.
/// Cereal demand compounds yearly from the baseline at a per-crop rate;
/// other demands stay at baseline.
pub fn generate_scenarios(
    instance: &PlanningInstance,
    spec: &ScenarioSpec,
    seed: u64,
) -> Result<ScenarioSet> {
    generate_scenarios_with(instance, spec, seed, |_, _| {})
}

/// As [`generate_scenarios`], calling `adjust` on each scenario after its
/// independent draws so callers can impose their own dependence structure.
pub fn generate_scenarios_with<F>(
    instance: &PlanningInstance,
    spec: &ScenarioSpec,
    seed: u64,
    mut adjust: F,
) -> Result<ScenarioSet>
where
    F: FnMut(&mut Scenario, &mut ChaCha8Rng),
{
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = 1.0 / spec.count as f64;
    let h = instance.horizon;
    let mut scenarios = Vec::with_capacity(spec.count);
    for _ in 0..spec.count {
        let mut s = Scenario::nominal(instance);
        s.weight = weight;
        for (c, crop) in instance.crops.iter().enumerate() {
            let growth = uniform(&mut rng, spec.demand_growth_min, spec.demand_growth_max);
            for t in 0..h {
                let k = s.index(c, t);
                s.yield_factor[k] =
                    uniform(&mut rng, 1.0 - spec.yield_radius, 1.0 + spec.yield_radius);
                s.price[k] = crop.baseline_price
                    * uniform(&mut rng, 1.0 - spec.price_radius, 1.0 + spec.price_radius);
                s.cost[k] = crop.baseline_cost
                    * uniform(&mut rng, 1.0 - spec.cost_radius, 1.0 + spec.cost_radius);
                s.demand[k] = crop.baseline_demand.map(|d| {
                    if crop.category == CropCategory::Cereal {
                        let years = (instance.year_of(t) + 1) as i32;
                        d * (1.0 + growth).powi(years)
                    } else {
                        d
                    }
                });
            }
        }
        if spec.unit_noise > 0.0 {
            s.unit_factor = (0..instance.units.len())
                .map(|_| uniform(&mut rng, 1.0 - spec.unit_noise, 1.0 + spec.unit_noise))
                .collect();
        }
        adjust(&mut s, &mut rng);
        scenarios.push(s);
    }
    Ok(ScenarioSet { scenarios, seed })
}
