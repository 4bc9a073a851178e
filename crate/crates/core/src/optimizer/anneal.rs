//! Simulated annealing over hard-feasible plans.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Plan, PlanningInstance};
use crate::seed::derive_indexed;
use crate::spatial::{admissible_actions, build_adjacency, AdjacencyMatrix};
use crate::uncertainty::{ScenarioBreach, ScenarioSet, WassersteinBall};

use super::engine::{Change, Engine, Score};
use super::feasibility::{feasible, PlanViolation};
use super::metrics::{evaluate_in, PlanMetrics};

/// Relative frequency of each neighbourhood move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveWeights {
    /// Change one (unit, period) to another admissible crop or fallow.
    pub reassign: f64,
    /// Exchange the crops of two units in one period.
    pub swap: f64,
    /// Exchange two consecutive periods of one unit.
    pub shift: f64,
}

impl Default for MoveWeights {
    fn default() -> Self {
        MoveWeights {
            reassign: 0.6,
            swap: 0.2,
            shift: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub seed: u64,
    /// Iterations per restart.
    pub max_iterations: usize,
    /// Starting temperature as a multiple of the mean absolute objective
    /// change of random moves from the initial plan.
    pub initial_temperature: f64,
    /// Geometric cooling factor applied every iteration.
    pub cooling_rate: f64,
    pub restarts: usize,
    pub rho: f64,
    /// Zero keeps rotation intervals hard during the search. A positive
    /// value lets the walk cross them at this cost per violation; only
    /// rotation-legal plans are ever returned.
    pub rotation_penalty_weight: f64,
    pub move_weights: MoveWeights,
    /// Iterations between log rows; zero disables logging.
    pub log_every: usize,
    /// Finish each restart with steepest-ascent reassignment sweeps.
    pub polish: bool,
}

/// Cooling factor that takes the temperature to `final_ratio` of its
/// starting value after `iterations` steps.
pub fn cooling_for(iterations: usize, final_ratio: f64) -> f64 {
    if iterations == 0 {
        return 0.5;
    }
    final_ratio
        .powf(1.0 / iterations as f64)
        .clamp(1e-9, 1.0 - 1e-12)
}

impl Default for SolverConfig {
    fn default() -> Self {
        let max_iterations = 20_000;
        SolverConfig {
            seed: 0,
            max_iterations,
            initial_temperature: 0.05,
            cooling_rate: cooling_for(max_iterations, 1e-3),
            restarts: 4,
            rho: 0.05,
            rotation_penalty_weight: 0.0,
            move_weights: MoveWeights::default(),
            log_every: 100,
            polish: true,
        }
    }
}

impl SolverConfig {
    /// Sets the iteration budget and rescales cooling to match.
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.max_iterations = iterations;
        self.cooling_rate = cooling_for(iterations, 1e-3);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return bad("cooling_rate must lie in (0, 1)");
        }
        if !(self.initial_temperature >= 0.0) || !self.initial_temperature.is_finite() {
            return bad("initial_temperature must be finite and non-negative");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::NegativeRadius(self.rho));
        }
        if !(self.rotation_penalty_weight >= 0.0) || !self.rotation_penalty_weight.is_finite() {
            return bad("rotation_penalty_weight must be finite and non-negative");
        }
        let w = &self.move_weights;
        if [w.reassign, w.swap, w.shift]
            .iter()
            .any(|x| !(*x >= 0.0) || !x.is_finite())
            || w.reassign + w.swap + w.shift <= 0.0
        {
            return bad("move weights must be non-negative with a positive sum");
        }
        Ok(())
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iter: usize,
    pub temperature: f64,
    pub current_value: f64,
    pub best_value: f64,
    /// Accepted moves so far.
    pub accepted: usize,
}

/// Log as comma-separated text with a header row.
pub fn format_log(rows: &[LogRow]) -> String {
    let mut out = String::from("iter,temperature,current_value,best_value,accepted\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iter, r.temperature, r.current_value, r.best_value, r.accepted
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub plan: Plan,
    pub metrics: PlanMetrics,
    /// Robust value less the rotation stress penalty.
    pub objective: f64,
    /// Log of the winning restart.
    pub log: Vec<LogRow>,
    pub restart: usize,
}

struct Context<'a> {
    instance: &'a PlanningInstance,
    set: &'a ScenarioSet,
    adjacency: AdjacencyMatrix,
    ball: WassersteinBall,
    admissible: Vec<Vec<usize>>,
}

struct RunResult {
    plan: Plan,
    score: Score,
    log: Vec<LogRow>,
}

/// Anneals from a constructive start on the first restart and from random
/// feasible plans on the others; returns the best plan over all restarts.
pub fn local_search_optimize(
    instance: &PlanningInstance,
    set: &ScenarioSet,
    config: &SolverConfig,
) -> Result<SolveOutcome> {
    solve(instance, set, config, None)
}

/// Anneals every restart from `initial`. An infeasible `initial` is
/// replaced by the empty plan.
pub fn local_search_from(
    instance: &PlanningInstance,
    set: &ScenarioSet,
    config: &SolverConfig,
    initial: &Plan,
) -> Result<SolveOutcome> {
    solve(instance, set, config, Some(initial))
}

fn solve(
    instance: &PlanningInstance,
    set: &ScenarioSet,
    config: &SolverConfig,
    initial: Option<&Plan>,
) -> Result<SolveOutcome> {
    config.validate()?;
    set.validate(instance)?;
    let ctx = Context {
        instance,
        set,
        adjacency: build_adjacency(&instance.units)?,
        ball: WassersteinBall::for_set(instance, set, config.rho)?,
        admissible: admissible_actions(instance, 0),
    };
    let start = initial
        .filter(|p| {
            feasible(p, instance, set).iter().all(|v| {
                matches!(
                    v,
                    PlanViolation::Scenario {
                        breach: ScenarioBreach::RevenueFloor { .. },
                        ..
                    }
                )
            })
        })
        .cloned();

    let runs: Vec<RunResult> = with_pool(|| {
        (0..config.restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_indexed(config.seed, "restart", r as u64));
                let plan = match (&start, initial) {
                    (Some(p), _) => p.clone(),
                    (None, Some(_)) => Plan::for_instance(instance),
                    (None, None) if r == 0 => greedy_start(&ctx),
                    (None, None) => random_start(&ctx, &mut rng),
                };
                anneal(&ctx, config, plan, &mut rng)
            })
            .collect()
    });

    let mut winner = 0;
    for (r, run) in runs.iter().enumerate().skip(1) {
        if run.score.better_than(&runs[winner].score) {
            winner = r;
        }
    }
    let run = runs.into_iter().nth(winner).expect("at least one restart");
    let metrics = evaluate_in(&run.plan, instance, set, &ctx.ball)?;
    Ok(SolveOutcome {
        plan: run.plan,
        metrics,
        objective: run.score.objective,
        log: run.log,
        restart: winner,
    })
}

/// Runs `f` on a pool capped by `MLRCPF_THREADS` when that is set.
fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var("MLRCPF_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Fills slots period by period with the crop that most improves the
/// expected objective, leaving a slot fallow when nothing helps.
fn greedy_start(ctx: &Context<'_>) -> Plan {
    let mut engine = Engine::new(
        ctx.instance,
        ctx.set,
        &ctx.adjacency,
        &ctx.ball,
        0.0,
        Plan::for_instance(ctx.instance),
    );
    engine.set_mean_only(true);
    for t in 0..ctx.instance.horizon {
        for u in 0..ctx.instance.units.len() {
            let mut best: Option<(Score, usize)> = None;
            let current = engine.score();
            for &c in &ctx.admissible[u] {
                if let Some(score) = engine.propose(&[(u, t, Some(c))]) {
                    engine.reject();
                    if score.better_than(&best.map_or(current, |(s, _)| s)) {
                        best = Some((score, c));
                    }
                }
            }
            if let Some((_, c)) = best {
                engine.propose(&[(u, t, Some(c))]);
                engine.commit();
            }
        }
    }
    engine.plan().clone()
}

/// Random hard-feasible plan built by accepting every legal random
/// reassignment regardless of its objective.
fn random_start(ctx: &Context<'_>, rng: &mut ChaCha8Rng) -> Plan {
    let mut engine = Engine::new(
        ctx.instance,
        ctx.set,
        &ctx.adjacency,
        &ctx.ball,
        0.0,
        Plan::for_instance(ctx.instance),
    );
    let slots = ctx.instance.units.len() * ctx.instance.horizon;
    let mut buf = Vec::new();
    for _ in 0..slots {
        if reassign(ctx, engine.plan(), rng, &mut buf) && engine.propose(&buf).is_some() {
            engine.commit();
        }
    }
    engine.plan().clone()
}

fn anneal(ctx: &Context<'_>, config: &SolverConfig, plan: Plan, rng: &mut ChaCha8Rng) -> RunResult {
    let mut engine = Engine::new(
        ctx.instance,
        ctx.set,
        &ctx.adjacency,
        &ctx.ball,
        config.rotation_penalty_weight,
        plan,
    );
    let mut best_plan = engine.plan().clone();
    let mut best = engine.score();
    let mut log = Vec::new();
    if config.max_iterations == 0 {
        return RunResult {
            plan: best_plan,
            score: best,
            log,
        };
    }

    let mut buf: Vec<Change> = Vec::with_capacity(2);
    let mut temperature =
        config.initial_temperature * calibrate(ctx, config, &mut engine, rng, &mut buf);
    let mut accepted = 0usize;

    for iter in 1..=config.max_iterations {
        if propose_move(ctx, config, engine.plan(), rng, &mut buf) {
            if let Some(cand) = engine.propose(&buf) {
                let cur = engine.score();
                let take = if cand.shortfall != cur.shortfall {
                    cand.shortfall < cur.shortfall
                } else {
                    let delta = cand.objective - cur.objective;
                    delta >= 0.0
                        || (temperature > 0.0 && rng.gen::<f64>() < (delta / temperature).exp())
                };
                if take {
                    engine.commit();
                    accepted += 1;
                    let now = engine.score();
                    if now.hard_feasible() && now.better_than(&best) {
                        best = now;
                        best_plan.clone_from(engine.plan());
                    }
                } else {
                    engine.reject();
                }
            }
        }
        temperature *= config.cooling_rate;
        if config.log_every > 0 && (iter % config.log_every == 0 || iter == config.max_iterations) {
            log.push(LogRow {
                iter,
                temperature,
                current_value: engine.score().objective,
                best_value: best.objective,
                accepted,
            });
        }
    }

    if config.polish {
        let mut engine = Engine::new(
            ctx.instance,
            ctx.set,
            &ctx.adjacency,
            &ctx.ball,
            0.0,
            best_plan.clone(),
        );
        polish(ctx, &mut engine);
        if engine.score().better_than(&best) {
            best = engine.score();
            best_plan.clone_from(engine.plan());
        }
    }

    RunResult {
        plan: best_plan,
        score: best,
        log,
    }
}

/// Sweeps every slot, moving it to its best option, until a full sweep
/// changes nothing.
fn polish(ctx: &Context<'_>, engine: &mut Engine<'_>) {
    const MAX_SWEEPS: usize = 50;
    let (n, h) = (ctx.instance.units.len(), ctx.instance.horizon);
    for _ in 0..MAX_SWEEPS {
        let mut improved = false;
        for t in 0..h {
            for u in 0..n {
                let current = engine.plan().get(u, t);
                let mut best: Option<(Score, Option<usize>)> = None;
                let options = ctx.admissible[u]
                    .iter()
                    .map(|&c| Some(c))
                    .chain(std::iter::once(None));
                for option in options {
                    if option == current {
                        continue;
                    }
                    if let Some(score) = engine.propose(&[(u, t, option)]) {
                        engine.reject();
                        if score.better_than(&best.map_or(engine.score(), |(s, _)| s)) {
                            best = Some((score, option));
                        }
                    }
                }
                if let Some((score, option)) = best {
                    if improves(&score, &engine.score()) {
                        engine.propose(&[(u, t, option)]);
                        engine.commit();
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Strict improvement beyond floating-point noise.
fn improves(candidate: &Score, current: &Score) -> bool {
    if candidate.shortfall != current.shortfall {
        return candidate.shortfall < current.shortfall;
    }
    candidate.objective - current.objective > 1e-12 * current.objective.abs().max(1.0)
}

/// Mean absolute objective change over a sample of random moves.
fn calibrate(
    ctx: &Context<'_>,
    config: &SolverConfig,
    engine: &mut Engine<'_>,
    rng: &mut ChaCha8Rng,
    buf: &mut Vec<Change>,
) -> f64 {
    const SAMPLES: usize = 64;
    let base = engine.score().objective;
    let mut sum = 0.0;
    let mut n = 0usize;
    for _ in 0..SAMPLES {
        if propose_move(ctx, config, engine.plan(), rng, buf) {
            if let Some(s) = engine.propose(buf) {
                engine.reject();
                sum += (s.objective - base).abs();
                n += 1;
            }
        }
    }
    if n == 0 || sum == 0.0 {
        1.0
    } else {
        sum / n as f64
    }
}

fn propose_move(
    ctx: &Context<'_>,
    config: &SolverConfig,
    plan: &Plan,
    rng: &mut ChaCha8Rng,
    buf: &mut Vec<Change>,
) -> bool {
    let w = &config.move_weights;
    let pick = rng.gen::<f64>() * (w.reassign + w.swap + w.shift);
    if pick < w.reassign {
        reassign(ctx, plan, rng, buf)
    } else if pick < w.reassign + w.swap {
        swap(ctx, plan, rng, buf)
    } else {
        shift(plan, rng, buf)
    }
}

fn reassign(ctx: &Context<'_>, plan: &Plan, rng: &mut ChaCha8Rng, buf: &mut Vec<Change>) -> bool {
    buf.clear();
    let (n, h) = (plan.units(), plan.horizon());
    if n == 0 || h == 0 {
        return false;
    }
    let u = rng.gen_range(0..n);
    let t = rng.gen_range(0..h);
    let options = &ctx.admissible[u];
    // Options are the admissible crops followed by fallow.
    let current = match plan.get(u, t) {
        Some(c) => match options.binary_search(&c) {
            Ok(k) => k,
            Err(_) => return false,
        },
        None => options.len(),
    };
    if options.is_empty() {
        return false;
    }
    let mut k = rng.gen_range(0..options.len());
    if k >= current {
        k += 1;
    }
    buf.push((u, t, options.get(k).copied()));
    true
}

fn swap(ctx: &Context<'_>, plan: &Plan, rng: &mut ChaCha8Rng, buf: &mut Vec<Change>) -> bool {
    buf.clear();
    let (n, h) = (plan.units(), plan.horizon());
    if n < 2 || h == 0 {
        return false;
    }
    let t = rng.gen_range(0..h);
    let u = rng.gen_range(0..n);
    let mut v = rng.gen_range(0..n - 1);
    if v >= u {
        v += 1;
    }
    let (cu, cv) = (plan.get(u, t), plan.get(v, t));
    if cu == cv {
        return false;
    }
    let fits = |unit: usize, c: Option<usize>| {
        c.is_none_or(|c| ctx.admissible[unit].binary_search(&c).is_ok())
    };
    if !fits(u, cv) || !fits(v, cu) {
        return false;
    }
    buf.push((u, t, cv));
    buf.push((v, t, cu));
    true
}

fn shift(plan: &Plan, rng: &mut ChaCha8Rng, buf: &mut Vec<Change>) -> bool {
    buf.clear();
    let (n, h) = (plan.units(), plan.horizon());
    if n == 0 || h < 2 {
        return false;
    }
    let u = rng.gen_range(0..n);
    let t = rng.gen_range(0..h - 1);
    let (a, b) = (plan.get(u, t), plan.get(u, t + 1));
    if a == b {
        return false;
    }
    buf.push((u, t, b));
    buf.push((u, t + 1, a));
    true
}
