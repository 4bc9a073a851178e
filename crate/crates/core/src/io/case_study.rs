//! Synthetic 54-unit, 41-crop, 14-period farm.
//!
//! The unit census, total area, crop count, and horizon are fixed; every
//! economic parameter is drawn from the seed.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Crop, CropCategory, InteractionMatrix, LandType, LandUnit, PlanningInstance};
use crate::seed::derive_seed;

pub const TOTAL_AREA: f64 = 1201.0;
pub const HORIZON: usize = 14;

/// CNY charged per unit of rotation stress per period.
const STRESS_PENALTY: f64 = 300.0;

/// Land type, count, cell rows, cell cols, area range in mu.
type UnitGroup = (LandType, usize, i32, i32, (f64, f64));

const UNIT_GROUPS: [UnitGroup; 6] = [
    (LandType::DryFlat, 6, 3, 3, (35.0, 80.0)),
    (LandType::DryTerrace, 14, 2, 3, (20.0, 86.0)),
    (LandType::DryHillside, 6, 2, 2, (13.0, 27.0)),
    (LandType::Irrigated, 8, 2, 2, (6.0, 22.0)),
    (LandType::Greenhouse, 16, 1, 1, (0.5, 0.7)),
    (LandType::SmartGreenhouse, 4, 1, 1, (0.5, 0.7)),
];

/// Grid columns available to each band of units.
const BAND_WIDTH: i32 = 21;

const CEREALS: [&str; 12] = [
    "wheat",
    "maize",
    "millet",
    "sorghum",
    "oats",
    "barley",
    "buckwheat",
    "rice",
    "proso",
    "foxtail",
    "highland_barley",
    "glutinous_maize",
];
const LEGUMES: [&str; 8] = [
    "soybean",
    "black_bean",
    "red_bean",
    "mung_bean",
    "broad_bean",
    "pea",
    "cowpea",
    "kidney_bean",
];
const VEGETABLES: [&str; 17] = [
    "tomato",
    "cucumber",
    "eggplant",
    "pepper",
    "cabbage",
    "chinese_cabbage",
    "spinach",
    "lettuce",
    "celery",
    "leek",
    "carrot",
    "radish",
    "pumpkin",
    "zucchini",
    "potato",
    "cauliflower",
    "bok_choy",
];
const FUNGI: [&str; 4] = ["shiitake", "oyster_mushroom", "enoki", "king_oyster"];

const DRY: [LandType; 3] = [
    LandType::DryFlat,
    LandType::DryTerrace,
    LandType::DryHillside,
];
const COVERED: [LandType; 2] = [LandType::Greenhouse, LandType::SmartGreenhouse];

/// The synthetic case study for `seed`.
pub fn generate_case_study(seed: u64) -> PlanningInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "case-study"));
    let units = generate_units(&mut rng);
    let crops = generate_crops(&mut rng);
    let interaction = generate_interactions(&crops, &mut rng);

    let water_limit = irrigation_limit(&units, &crops);
    let mut history = BTreeMap::new();
    for unit in &units {
        let options: Vec<&Crop> = crops
            .iter()
            .filter(|c| c.allowed_land_types.contains(&unit.land_type))
            .collect();
        let pick = options[rng.gen_range(0..options.len())];
        history.insert(unit.id.clone(), pick.id.clone());
    }

    PlanningInstance {
        units,
        crops,
        interaction,
        horizon: HORIZON,
        periods_per_year: 2,
        water_limits: vec![water_limit; HORIZON],
        interaction_yield_gain: 0.05,
        interaction_clamp: 0.5,
        salvage_fraction: 0.0,
        demand_cap: false,
        rotation_stress_penalty: STRESS_PENALTY,
        legume_window: None,
        history,
    }
}

fn generate_units(rng: &mut ChaCha8Rng) -> Vec<LandUnit> {
    let mut units = Vec::new();
    let mut band_top = 0;
    for (land_type, count, rows, cols, (lo, hi)) in UNIT_GROUPS {
        let per_row = (BAND_WIDTH / cols).max(1) as usize;
        for k in 0..count {
            let r0 = band_top + (k / per_row) as i32 * rows;
            let c0 = (k % per_row) as i32 * cols;
            let cells = (0..rows)
                .flat_map(|r| (0..cols).map(move |c| (r0 + r, c0 + c)))
                .collect();
            let fertility_level: u8 = rng.gen_range(1..=5);
            units.push(LandUnit {
                id: format!("{}-{:02}", prefix(land_type), k + 1),
                land_type,
                area: rng.gen_range(lo..=hi),
                productivity_factor: 0.85
                    + 0.06 * f64::from(fertility_level)
                    + rng.gen_range(-0.03..=0.03),
                fertility_level,
                irrigated: !land_type.is_dry(),
                cells,
            });
        }
        band_top += count.div_ceil(per_row) as i32 * rows;
    }
    let total: f64 = units.iter().map(|u| u.area).sum();
    let scale = TOTAL_AREA / total;
    for u in &mut units {
        u.area *= scale;
    }
    units
}

fn prefix(land_type: LandType) -> &'static str {
    match land_type {
        LandType::DryFlat => "flat",
        LandType::DryTerrace => "terrace",
        LandType::DryHillside => "hillside",
        LandType::Irrigated => "irrigated",
        LandType::Greenhouse => "greenhouse",
        LandType::SmartGreenhouse => "smart",
    }
}

/// Ranges of nominal parameters for one crop category.
struct Profile {
    yield_kg: (f64, f64),
    price: (f64, f64),
    cost: (f64, f64),
    water: (f64, f64),
}

const CEREAL: Profile = Profile {
    yield_kg: (380.0, 520.0),
    price: (2.6, 3.6),
    cost: (380.0, 520.0),
    water: (20.0, 40.0),
};
const LEGUME: Profile = Profile {
    yield_kg: (170.0, 240.0),
    price: (5.5, 7.0),
    cost: (380.0, 480.0),
    water: (15.0, 30.0),
};
const VEGETABLE: Profile = Profile {
    yield_kg: (2200.0, 4800.0),
    price: (2.0, 4.0),
    cost: (3000.0, 5000.0),
    water: (40.0, 80.0),
};
const FUNGUS: Profile = Profile {
    yield_kg: (2500.0, 4500.0),
    price: (12.0, 30.0),
    cost: (20000.0, 30000.0),
    water: (30.0, 50.0),
};

fn make_crop(
    id: &str,
    category: CropCategory,
    allowed: &[LandType],
    profile: &Profile,
    rng: &mut ChaCha8Rng,
) -> Crop {
    let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64), step: f64| {
        round_to(rng.gen_range(lo..=hi), step)
    };
    let baseline_yield = draw(rng, profile.yield_kg, 1.0);
    Crop {
        id: id.to_string(),
        category,
        baseline_yield,
        baseline_price: draw(rng, profile.price, 0.01),
        baseline_cost: draw(rng, profile.cost, 1.0),
        water_need: draw(rng, profile.water, 1.0),
        replant_interval: 2,
        allowed_land_types: allowed.iter().copied().collect::<BTreeSet<_>>(),
        area_per_planting: None,
        baseline_demand: Some(round_to(baseline_yield * 60.0, 1.0)),
    }
}

fn generate_crops(rng: &mut ChaCha8Rng) -> Vec<Crop> {
    let mut crops = Vec::with_capacity(41);
    let mut field = DRY.to_vec();
    field.push(LandType::Irrigated);
    for id in CEREALS {
        let allowed = cereal_land(id);
        crops.push(make_crop(id, CropCategory::Cereal, &allowed, &CEREAL, rng));
    }
    for id in LEGUMES {
        crops.push(make_crop(id, CropCategory::Legume, &field, &LEGUME, rng));
    }
    let mut vegetable_land = COVERED.to_vec();
    vegetable_land.push(LandType::Irrigated);
    for id in VEGETABLES {
        crops.push(make_crop(
            id,
            CropCategory::Vegetable,
            &vegetable_land,
            &VEGETABLE,
            rng,
        ));
    }
    for id in FUNGI {
        crops.push(make_crop(id, CropCategory::Fungus, &COVERED, &FUNGUS, rng));
    }
    crops
}

/// Land types a cereal tolerates: paddy rice needs irrigation, upland
/// grains suit slopes, the rest want flat or terraced ground.
fn cereal_land(id: &str) -> Vec<LandType> {
    use LandType::*;
    match id {
        "rice" => vec![Irrigated],
        "millet" | "sorghum" | "proso" | "foxtail" => {
            vec![DryFlat, DryTerrace, DryHillside, Irrigated]
        }
        "oats" | "buckwheat" | "highland_barley" => vec![DryTerrace, DryHillside],
        _ => vec![DryFlat, DryTerrace, Irrigated],
    }
}

/// Positive legume–cereal complementarity, negative same-category
/// competition, zero diagonal; symmetric.
fn generate_interactions(crops: &[Crop], rng: &mut ChaCha8Rng) -> InteractionMatrix {
    use CropCategory::*;
    let n = crops.len();
    let mut m = InteractionMatrix::zeros(n);
    for a in 0..n {
        for b in (a + 1)..n {
            let value = match (crops[a].category, crops[b].category) {
                (Legume, Cereal) | (Cereal, Legume) => rng.gen_range(0.15..=0.35),
                (Legume, Vegetable) | (Vegetable, Legume) => rng.gen_range(0.02..=0.10),
                (x, y) if x == y => -rng.gen_range(0.05..=0.25),
                _ => 0.0,
            };
            let value = round_to(value, 0.001);
            m.set(a, b, value);
            m.set(b, a, value);
        }
    }
    m
}

/// Seasonal limit covering most of the irrigated units planted with an
/// average-need crop.
fn irrigation_limit(units: &[LandUnit], crops: &[Crop]) -> f64 {
    let mean_need: f64 = units
        .iter()
        .filter(|u| u.irrigated)
        .map(|u| {
            let needs: Vec<f64> = crops
                .iter()
                .filter(|c| c.allowed_land_types.contains(&u.land_type))
                .map(|c| c.water_need)
                .collect();
            needs.iter().sum::<f64>() / needs.len() as f64
        })
        .sum();
    round_to(0.85 * mean_need, 1.0)
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}
