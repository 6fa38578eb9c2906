//! The classical pipeline: random feasible construction as the
//! initialization module, then first-improvement hill climbing on the best
//! initial solution. The same driver can swap in the sampling pipeline for
//! initialization.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::model::{
    canonical_key, ground_area, is_feasible, require_valid, scalarize, storage_time, Instance, SolutionDoc, Weights,
    WopSolution,
};
use crate::postprocess::{run_qi4wop, Population, Qi4wopConfig};
use crate::rational::{self, Rational};
use crate::seeding::{self, Rng};
use crate::solvers::Backend;

pub const DEFAULT_MAX_ATTEMPTS: usize = 50;

enum Slot {
    Ground(usize),
    Onto(usize),
}

/// Builds a complete solution item by item in random order. Each item picks
/// uniformly among a new footprint at any eligible location with room and the
/// top of any compatible non-full stack. A dead end restarts the attempt.
pub fn random_feasible_solution(instance: &Instance, rng: &mut Rng, max_attempts: usize) -> Option<WopSolution> {
    let mut order: Vec<usize> = (0..instance.num_items()).collect();
    let mut options: Vec<Slot> = Vec::new();
    'attempt: for _ in 0..max_attempts {
        order.shuffle(rng);
        let mut layout = Layout::empty(instance);
        for &item in &order {
            let ty = instance.type_index(item);
            let area = instance.area(item);
            options.clear();
            options.extend(
                (0..instance.num_locations())
                    .filter(|&l| instance.type_eligible(ty, l) && layout.residual(l, instance) >= area)
                    .map(Slot::Ground),
            );
            options.extend(
                (0..layout.stacks.len())
                    .filter(|&k| layout.stacks[k].type_index == ty && layout.has_room(k, instance))
                    .map(Slot::Onto),
            );
            if options.is_empty() {
                continue 'attempt;
            }
            match options[rng.gen_range(0..options.len())] {
                Slot::Ground(l) => {
                    layout.open_stack(item, l, instance);
                }
                Slot::Onto(k) => layout.stacks[k].items.push(item),
            }
        }
        return Some(layout.to_solution(instance.num_items()));
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitBudget {
    pub time_ms: u64,
    /// Stop once this many distinct solutions exist.
    pub target: Option<usize>,
    pub max_attempts: usize,
}

impl InitBudget {
    pub fn time(time_ms: u64) -> Self {
        InitBudget {
            time_ms,
            target: None,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassicalInit {
    pub population: Population,
    pub calls: usize,
    pub wall_time_ms: u64,
}

/// Repeated random construction until the time budget or the target count of
/// distinct feasible solutions is reached.
pub fn classical_initialization(instance: &Instance, budget: &InitBudget, rng: &mut Rng) -> ClassicalInit {
    let start = Instant::now();
    let deadline = start + Duration::from_millis(budget.time_ms);
    let mut population = Population::default();
    let mut calls = 0;
    while budget.time_ms > 0 && Instant::now() < deadline {
        if budget.target.is_some_and(|t| population.len() >= t) {
            break;
        }
        let candidate = random_feasible_solution(instance, rng, budget.max_attempts);
        population.offer(candidate, instance);
        calls += 1;
    }
    ClassicalInit {
        population,
        calls,
        wall_time_ms: start.elapsed().as_millis() as u64,
    }
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Relocate { stack: usize, to: usize },
    Restack { from: usize, to: usize },
    Unstack { from: usize, to: usize },
}

fn move_delta(layout: &Layout, instance: &Instance, mv: Move) -> (i64, i64) {
    let locs = instance.locations();
    match mv {
        Move::Relocate { stack, to } => {
            let s = &layout.stacks[stack];
            let (a, b) = (&locs[s.location], &locs[to]);
            let h = s.height() as i64;
            let d1 =
                h * (b.base_place_time - a.base_place_time) + (b.per_level_time - a.per_level_time) * h * (h - 1) / 2;
            (d1, 0)
        }
        Move::Restack { from, to } => {
            let (s, t) = (&layout.stacks[from], &layout.stacks[to]);
            let (a, b) = (&locs[s.location], &locs[t.location]);
            let old = a.base_place_time + (s.height() as i64 - 1) * a.per_level_time;
            let new = b.base_place_time + t.height() as i64 * b.per_level_time;
            let d2 = if s.height() == 1 {
                -instance.item_types()[s.type_index].area
            } else {
                0
            };
            (new - old, d2)
        }
        Move::Unstack { from, to } => {
            let s = &layout.stacks[from];
            let (a, b) = (&locs[s.location], &locs[to]);
            let old = a.base_place_time + (s.height() as i64 - 1) * a.per_level_time;
            (b.base_place_time - old, instance.item_types()[s.type_index].area)
        }
    }
}

fn neighbourhood(layout: &Layout, instance: &Instance, out: &mut Vec<Move>) {
    out.clear();
    let n_loc = instance.num_locations();
    for (k, s) in layout.stacks.iter().enumerate() {
        let area = instance.item_types()[s.type_index].area;
        for to in 0..n_loc {
            if !instance.type_eligible(s.type_index, to) || layout.residual(to, instance) < area {
                continue;
            }
            if to != s.location {
                out.push(Move::Relocate { stack: k, to });
            }
            if s.height() >= 2 {
                out.push(Move::Unstack { from: k, to });
            }
        }
        for (j, t) in layout.stacks.iter().enumerate() {
            if j != k && t.type_index == s.type_index && layout.has_room(j, instance) {
                out.push(Move::Restack { from: k, to: j });
            }
        }
    }
}

fn apply(layout: &mut Layout, instance: &Instance, mv: Move) {
    match mv {
        Move::Relocate { stack, to } => layout.relocate(stack, to, instance),
        Move::Restack { from, to } => {
            let item = layout.pop(from, instance);
            layout.stacks[to].items.push(item);
        }
        Move::Unstack { from, to } => {
            let item = layout.pop(from, instance);
            layout.open_stack(item, to, instance);
        }
    }
    layout.compact();
}

/// First-improvement hill climbing on the weighted sum of storage time and
/// ground area. Neighbourhood: relocate a whole stack, move a top item onto
/// another compatible stack, or unstack a top item onto a new footprint.
/// Moves are scanned in a freshly shuffled order after every improvement.
pub fn local_search(
    start: &WopSolution,
    instance: &Instance,
    budget_ms: u64,
    weights: &Weights,
    rng: &mut Rng,
) -> Result<WopSolution> {
    weights.check()?;
    let report = is_feasible(start, instance)?;
    if !report.feasible {
        return Err(Error::Infeasible(report.to_string()));
    }
    if budget_ms == 0 {
        return Ok(start.clone());
    }
    let deadline = Instant::now() + Duration::from_millis(budget_ms);
    let (wt, wa) = weights.integer_scaled();
    let mut layout = Layout::from_solution(start, instance);
    let mut moves = Vec::new();
    'climb: loop {
        neighbourhood(&layout, instance, &mut moves);
        moves.shuffle(rng);
        for (n, &mv) in moves.iter().enumerate() {
            if n % 512 == 0 && Instant::now() >= deadline {
                break 'climb;
            }
            let (d1, d2) = move_delta(&layout, instance, mv);
            if wt * i128::from(d1) + wa * i128::from(d2) < 0 {
                apply(&mut layout, instance, mv);
                continue 'climb;
            }
        }
        break;
    }
    Ok(layout.to_solution(instance.num_items()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Classical,
    Qi4wop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PocConfig {
    pub init_mode: InitMode,
    pub init_time_budget_ms: u64,
    pub target_init_count: Option<usize>,
    pub max_attempts: usize,
    pub local_search_budget_ms: u64,
    pub weights: Weights,
    pub seed: u64,
    pub qi4wop: Qi4wopConfig,
}

impl Default for PocConfig {
    fn default() -> Self {
        PocConfig {
            init_mode: InitMode::Classical,
            init_time_budget_ms: 30_000,
            target_init_count: None,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            local_search_budget_ms: 10_000,
            weights: Weights::default(),
            seed: 0,
            qi4wop: Qi4wopConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scores {
    pub o1: i64,
    pub o2: i64,
    #[serde(with = "rational")]
    pub score: Rational,
}

impl Scores {
    fn of(solution: &WopSolution, instance: &Instance, weights: &Weights) -> Result<Self> {
        let (o1, o2) = (storage_time(solution, instance), ground_area(solution, instance));
        Ok(Scores {
            o1,
            o2,
            score: scalarize(o1, o2, weights)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub init_mode: InitMode,
    pub init_population_size: usize,
    pub init_wall_time_ms: u64,
    pub best_initial: Scores,
    pub best_final: Scores,
    pub final_solution: WopSolution,
}

#[derive(Serialize)]
struct RunResultDoc<'a> {
    instance: &'a str,
    init_mode: InitMode,
    init_population_size: usize,
    best_initial: Scores,
    best_final: Scores,
    final_solution: SolutionDoc,
}

impl RunResult {
    /// Deterministic JSON form; wall times are left out.
    pub fn to_json(&self, instance: &Instance) -> String {
        let doc = RunResultDoc {
            instance: instance.name(),
            init_mode: self.init_mode,
            init_population_size: self.init_population_size,
            best_initial: self.best_initial,
            best_final: self.best_final,
            final_solution: self.final_solution.to_doc(instance),
        };
        serde_json::to_string_pretty(&doc).expect("run result serializes")
    }
}

/// Index of the lowest-score solution, ties broken by canonical key.
pub fn select_best(population: &Population, instance: &Instance, weights: &Weights) -> Result<Option<usize>> {
    let mut best: Option<(Rational, Vec<u8>, usize)> = None;
    for (i, s) in population.solutions.iter().enumerate() {
        let score = Scores::of(s, instance, weights)?.score;
        let better = match &best {
            None => true,
            Some((bs, bk, _)) => score < *bs || (score == *bs && canonical_key(s) < *bk),
        };
        if better {
            best = Some((score, canonical_key(s), i));
        }
    }
    Ok(best.map(|b| b.2))
}

pub fn run_poc(instance: &Instance, config: &PocConfig, backend: &dyn Backend) -> Result<RunResult> {
    require_valid(instance)?;
    config.weights.check()?;
    if config.local_search_budget_ms == 0 && config.init_time_budget_ms == 0 {
        return Err(Error::InvalidConfig("budgets must be positive".into()));
    }
    let (mut population, init_wall_time_ms) = match config.init_mode {
        InitMode::Classical => {
            let budget = InitBudget {
                time_ms: config.init_time_budget_ms,
                target: config.target_init_count,
                max_attempts: config.max_attempts,
            };
            let mut rng = seeding::rng(seeding::derive(config.seed, 10));
            let init = classical_initialization(instance, &budget, &mut rng);
            (init.population, init.wall_time_ms)
        }
        InitMode::Qi4wop => {
            let qconfig = config.qi4wop.clone().seeded(seeding::derive(config.seed, 11));
            let run = run_qi4wop(instance, &qconfig, backend)?;
            let wall = run.wall_time_ms();
            (run.population, wall)
        }
    };
    if let Some(t) = config.target_init_count {
        population.solutions.truncate(t);
    }
    let best = select_best(&population, instance, &config.weights)?.ok_or(Error::NoInitialSolution)?;
    let start = &population.solutions[best];
    let mut rng = seeding::rng(seeding::derive(config.seed, 12));
    let final_solution = local_search(
        start,
        instance,
        config.local_search_budget_ms,
        &config.weights,
        &mut rng,
    )?;
    Ok(RunResult {
        init_mode: config.init_mode,
        init_population_size: population.len(),
        init_wall_time_ms,
        best_initial: Scores::of(start, instance, &config.weights)?,
        best_final: Scores::of(&final_solution, instance, &config.weights)?,
        final_solution,
    })
}

/// Exhaustive enumeration of every feasible solution of a tiny instance, up
/// to slot relabeling. Intended for tests and cross-checks only.
pub fn enumerate_feasible(instance: &Instance) -> Vec<WopSolution> {
    fn go(instance: &Instance, item: usize, layout: &mut Layout, out: &mut Vec<WopSolution>) {
        if item == instance.num_items() {
            out.push(layout.to_solution(instance.num_items()));
            return;
        }
        let ty = instance.type_index(item);
        let area = instance.area(item);
        for l in 0..instance.num_locations() {
            if instance.type_eligible(ty, l) && layout.residual(l, instance) >= area {
                let k = layout.open_stack(item, l, instance);
                go(instance, item + 1, layout, out);
                layout.pop(k, instance);
                layout.compact();
                layout.release_slot(l);
            }
        }
        for k in 0..layout.stacks.len() {
            if layout.stacks[k].type_index == ty && layout.has_room(k, instance) {
                layout.stacks[k].items.push(item);
                go(instance, item + 1, layout, out);
                layout.stacks[k].items.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(instance, 0, &mut Layout::empty(instance), &mut out);
    let mut seen = std::collections::HashSet::new();
    out.retain(|s| seen.insert(canonical_key(s)));
    out
}

/// Unchecked weighted score; callers guarantee feasibility.
pub fn score_of(solution: &WopSolution, instance: &Instance, weights: &Weights) -> Rational {
    let (t, a) = (storage_time(solution, instance), ground_area(solution, instance));
    weights.time * rational::int(t) + weights.area * rational::int(a)
}
