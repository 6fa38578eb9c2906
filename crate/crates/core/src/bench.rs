//! Instance generation and the two experiment protocols: feasible-solution
//! throughput of the two initializers, and paired end-to-end comparisons with
//! equalized initial population sizes.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::baseline::{classical_initialization, random_feasible_solution, run_poc, InitBudget, InitMode, PocConfig};
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::model::{is_feasible, validate_instance, Instance, Item, ItemType, Location, LocationKind, WopSolution};
use crate::postprocess::{run_qi4wop, Qi4wopConfig};
use crate::rational::{self, Rational};
use crate::seeding::{self, Rng};
use crate::solvers::Backend;

pub const GENERATOR_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceSpec {
    pub num_locations: usize,
    pub num_items: usize,
    pub num_types: usize,
    /// Total capacity over total item area.
    #[serde(with = "rational")]
    pub capacity_fill_ratio: Rational,
    /// Probability that a location is a shelf.
    #[serde(with = "rational")]
    pub shelf_fraction: Rational,
    /// Probability that an item type may go on shelves.
    #[serde(with = "rational")]
    pub shelf_allowed_fraction: Rational,
    /// Probability that an item type is stackable.
    #[serde(with = "rational")]
    pub stackable_fraction: Rational,
    /// Inclusive range of max heights for stackable types (min >= 2).
    pub height_range: (i64, i64),
    pub area_range: (i64, i64),
    pub base_time_range: (i64, i64),
    pub level_time_range: (i64, i64),
    pub seed: u64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec {
            num_locations: 1,
            num_items: 1,
            num_types: 1,
            capacity_fill_ratio: Rational::new(13, 10),
            shelf_fraction: Rational::new(1, 2),
            shelf_allowed_fraction: Rational::new(1, 2),
            stackable_fraction: Rational::new(2, 3),
            height_range: (2, 4),
            area_range: (2, 12),
            base_time_range: (5, 20),
            level_time_range: (1, 6),
            seed: 0,
        }
    }
}

impl InstanceSpec {
    pub fn new(num_locations: usize, num_items: usize, num_types: usize, seed: u64) -> Self {
        InstanceSpec {
            num_locations,
            num_items,
            num_types,
            seed,
            ..Default::default()
        }
    }

    pub fn name(&self) -> String {
        format!("L{}_I{}_T{}", self.num_locations, self.num_items, self.num_types)
    }

    pub fn check(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.num_locations == 0 || self.num_items == 0 || self.num_types == 0 {
            return fail("locations, items and types must all be >= 1");
        }
        if self.num_types > self.num_items {
            return fail("more item types than items");
        }
        if !rational::is_positive(&self.capacity_fill_ratio) {
            return fail("capacity_fill_ratio must be positive");
        }
        let unit = |r: &Rational| rational::is_non_negative(r) && *r <= rational::int(1);
        if !(unit(&self.shelf_fraction) && unit(&self.shelf_allowed_fraction) && unit(&self.stackable_fraction)) {
            return fail("fractions must lie in [0, 1]");
        }
        let range_ok = |(lo, hi): (i64, i64), min: i64| lo >= min && lo <= hi;
        if !range_ok(self.height_range, 2) {
            return fail("height_range must satisfy 2 <= min <= max");
        }
        if !range_ok(self.area_range, 1) {
            return fail("area_range must satisfy 1 <= min <= max");
        }
        if !range_ok(self.base_time_range, 0) || !range_ok(self.level_time_range, 0) {
            return fail("time ranges must satisfy 0 <= min <= max");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: Instance,
    /// A feasible solution proving the instance is solvable.
    pub witness: WopSolution,
}

fn draw(rng: &mut Rng, p: &Rational) -> bool {
    rng.gen_bool(rational::to_f64(p).clamp(0.0, 1.0))
}

/// Splits `total` proportionally to `weights` with largest-remainder rounding.
fn apportion(total: i64, weights: &[i64]) -> Vec<i64> {
    let sum: i64 = weights.iter().sum();
    let mut shares: Vec<i64> = weights.iter().map(|w| total * w / sum).collect();
    let mut rest = total - shares.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // largest remainder first; lower index wins ties
    order.sort_by_key(|&i| (std::cmp::Reverse((total * weights[i]) % sum), i));
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        shares[i] += 1;
        rest -= 1;
    }
    shares
}

fn draw_instance(spec: &InstanceSpec, rng: &mut Rng) -> Instance {
    let types: Vec<ItemType> = (0..spec.num_types)
        .map(|t| {
            let stackable = draw(rng, &spec.stackable_fraction);
            ItemType {
                id: format!("T{t}"),
                area: rng.gen_range(spec.area_range.0..=spec.area_range.1),
                shelf_allowed: draw(rng, &spec.shelf_allowed_fraction),
                max_stack_height: if stackable {
                    rng.gen_range(spec.height_range.0..=spec.height_range.1)
                } else {
                    1
                },
            }
        })
        .collect();
    let mut type_of: Vec<usize> = (0..spec.num_items).map(|i| i % spec.num_types).collect();
    type_of.shuffle(rng);
    let items: Vec<Item> = type_of
        .iter()
        .enumerate()
        .map(|(i, &t)| Item {
            id: format!("I{i}"),
            type_id: types[t].id.clone(),
        })
        .collect();

    let total_area: i64 = type_of.iter().map(|&t| types[t].area).sum();
    let ratio = spec.capacity_fill_ratio * rational::int(total_area);
    let total_capacity = ratio.round().to_integer().max(spec.num_locations as i64);
    let weights: Vec<i64> = (0..spec.num_locations).map(|_| rng.gen_range(1..=10)).collect();
    // one unit per location up front keeps every capacity positive
    let capacities = apportion(total_capacity - spec.num_locations as i64, &weights);
    let locations = capacities
        .into_iter()
        .enumerate()
        .map(|(l, capacity)| Location {
            id: format!("L{l}"),
            capacity: capacity + 1,
            kind: if draw(rng, &spec.shelf_fraction) {
                LocationKind::Shelf
            } else {
                LocationKind::Floor
            },
            base_place_time: rng.gen_range(spec.base_time_range.0..=spec.base_time_range.1),
            per_level_time: rng.gen_range(spec.level_time_range.0..=spec.level_time_range.1),
        })
        .collect();
    Instance::new(spec.name(), locations, types, items)
}

/// Deterministic constructive witness: floor-only types first, then by area;
/// piles are filled to full height before a new footprint is opened, and new
/// footprints go to the eligible location with most room (shelves first for
/// shelf-capable types).
pub fn greedy_witness(instance: &Instance) -> Option<WopSolution> {
    let mut items: Vec<usize> = (0..instance.num_items()).collect();
    items.sort_by_key(|&i| {
        let t = instance.item_type(i);
        (t.shelf_allowed, std::cmp::Reverse(t.area), instance.type_index(i), i)
    });
    let mut layout = Layout::empty(instance);
    for item in items {
        let ty = instance.type_index(item);
        if let Some(&k) = layout.cheapest_open_stacks(ty, instance).first() {
            layout.stacks[k].items.push(item);
            continue;
        }
        let area = instance.area(item);
        let target = (0..instance.num_locations())
            .filter(|&l| instance.type_eligible(ty, l) && layout.residual(l, instance) >= area)
            .max_by_key(|&l| {
                let shelf_first =
                    instance.item_types()[ty].shelf_allowed && instance.locations()[l].kind == LocationKind::Shelf;
                (shelf_first, layout.residual(l, instance), std::cmp::Reverse(l))
            })?;
        layout.open_stack(item, target, instance);
    }
    Some(layout.to_solution(instance.num_items()))
}

/// Draws an instance named `LX_IY_TZ` from `spec`, resampling until one
/// admits a feasible solution (up to [`GENERATOR_RESAMPLES`] draws).
pub fn generate_instance(spec: &InstanceSpec) -> Result<GeneratedInstance> {
    spec.check()?;
    let mut rng = seeding::rng(spec.seed);
    for _ in 0..GENERATOR_RESAMPLES {
        let instance = draw_instance(spec, &mut rng);
        if !validate_instance(&instance).feasible {
            continue;
        }
        let witness = greedy_witness(&instance)
            .or_else(|| random_feasible_solution(&instance, &mut rng, crate::baseline::DEFAULT_MAX_ATTEMPTS));
        if let Some(witness) = witness {
            debug_assert!(is_feasible(&witness, &instance).map(|r| r.feasible).unwrap_or(false));
            return Ok(GeneratedInstance { instance, witness });
        }
    }
    Err(Error::GeneratorInfeasible(GENERATOR_RESAMPLES))
}

// ---- phase one: initializer throughput ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Qi4wop,
    Classical,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Qi4wop => "qi4wop",
            Method::Classical => "classical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalBudget {
    /// Fixed wall-time budget in milliseconds.
    Fixed(u64),
    /// Same wall time the paired sampling-pipeline run took.
    MatchQi4wop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Phase1Config {
    pub runs: usize,
    pub base_seed: u64,
    pub qi4wop: Qi4wopConfig,
    pub classical_budget: ClassicalBudget,
    pub max_attempts: usize,
}

impl Default for Phase1Config {
    fn default() -> Self {
        Phase1Config {
            runs: 10,
            base_seed: 0,
            qi4wop: Qi4wopConfig::default(),
            classical_budget: ClassicalBudget::Fixed(30_000),
            max_attempts: crate::baseline::DEFAULT_MAX_ATTEMPTS,
        }
    }
}

/// One persisted run; reports are always derived from these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub method: Method,
    pub run: usize,
    pub seed: u64,
    pub num_solutions: usize,
    pub runtime_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1Row {
    pub instance: String,
    pub method: Method,
    pub runs: usize,
    pub mean_sols: f64,
    pub mean_runtime_s: f64,
    #[serde(default)]
    pub failed_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase1Report {
    pub rows: Vec<Phase1Row>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl Phase1Report {
    /// Aggregates records per (instance, method), in first-appearance order of
    /// instances and then method order. Failed runs are counted, not averaged.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut order: Vec<&str> = Vec::new();
        let mut groups: BTreeMap<(&str, Method), Vec<&RunRecord>> = BTreeMap::new();
        for r in records {
            if !order.contains(&r.instance.as_str()) {
                order.push(&r.instance);
            }
            groups.entry((&r.instance, r.method)).or_default().push(r);
        }
        let mut rows = Vec::new();
        for inst in order {
            for method in [Method::Qi4wop, Method::Classical] {
                let Some(rs) = groups.get(&(inst, method)) else {
                    continue;
                };
                let ok: Vec<&&RunRecord> = rs.iter().filter(|r| r.failure.is_none()).collect();
                rows.push(Phase1Row {
                    instance: inst.to_string(),
                    method,
                    runs: ok.len(),
                    mean_sols: mean(ok.iter().map(|r| r.num_solutions as f64)),
                    mean_runtime_s: mean(ok.iter().map(|r| r.runtime_s)),
                    failed_runs: rs.len() - ok.len(),
                });
            }
        }
        Phase1Report { rows }
    }

    pub fn row(&self, instance: &str, method: Method) -> Option<&Phase1Row> {
        self.rows.iter().find(|r| r.instance == instance && r.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["instance", "method", "runs", "mean_sols", "mean_runtime_s"])
            .expect("in-memory csv");
        for r in &self.rows {
            w.write_record([
                r.instance.clone(),
                r.method.as_str().to_string(),
                r.runs.to_string(),
                r.mean_sols.to_string(),
                r.mean_runtime_s.to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
    }
}

/// Appends records as newline-delimited JSON.
pub fn write_run_log<W: Write>(mut out: W, records: &[RunRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_run_log<R: BufRead>(input: R) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Runs every method `runs` times per instance with paired seeds; the
/// sampling pipeline goes first so a matched classical budget is known.
pub fn run_phase1_records(
    instances: &[Instance],
    methods: &[Method],
    config: &Phase1Config,
    backend: &dyn Backend,
) -> Result<Vec<RunRecord>> {
    if config.runs == 0 {
        return Err(Error::InvalidConfig("runs must be >= 1".into()));
    }
    if config.classical_budget == ClassicalBudget::MatchQi4wop
        && methods.contains(&Method::Classical)
        && !methods.contains(&Method::Qi4wop)
    {
        return Err(Error::InvalidConfig(
            "a matched classical budget needs the qi4wop method".into(),
        ));
    }
    let mut records = Vec::new();
    for instance in instances {
        for run in 0..config.runs {
            let seed = seeding::derive(config.base_seed, run as u64);
            let mut qi_wall_ms = None;
            let record = |method, num_solutions, runtime_s, failure| RunRecord {
                instance: instance.name().to_string(),
                method,
                run,
                seed,
                num_solutions,
                runtime_s,
                failure,
            };
            if methods.contains(&Method::Qi4wop) {
                let qconfig = config.qi4wop.clone().seeded(seed);
                records.push(match run_qi4wop(instance, &qconfig, backend) {
                    Ok(r) => {
                        qi_wall_ms = Some(r.wall_time_ms());
                        record(
                            Method::Qi4wop,
                            r.population.len(),
                            r.wall_time_ms() as f64 / 1000.0,
                            None,
                        )
                    }
                    Err(e) => record(Method::Qi4wop, 0, 0.0, Some(e.to_string())),
                });
            }
            if methods.contains(&Method::Classical) {
                let time_ms = match config.classical_budget {
                    ClassicalBudget::Fixed(ms) => Some(ms),
                    ClassicalBudget::MatchQi4wop => qi_wall_ms.map(|ms| ms.max(1)),
                };
                records.push(match time_ms {
                    Some(time_ms) => {
                        let budget = InitBudget {
                            time_ms,
                            target: None,
                            max_attempts: config.max_attempts,
                        };
                        let mut rng = seeding::rng(seeding::derive(seed, 10));
                        let start = Instant::now();
                        let init = classical_initialization(instance, &budget, &mut rng);
                        record(
                            Method::Classical,
                            init.population.len(),
                            start.elapsed().as_secs_f64(),
                            None,
                        )
                    }
                    None => record(Method::Classical, 0, 0.0, Some("paired sampling run failed".into())),
                });
            }
        }
    }
    Ok(records)
}

pub fn run_phase1(
    instances: &[Instance],
    methods: &[Method],
    config: &Phase1Config,
    backend: &dyn Backend,
) -> Result<(Phase1Report, Vec<RunRecord>)> {
    let records = run_phase1_records(instances, methods, config, backend)?;
    Ok((Phase1Report::from_records(&records), records))
}

// ---- phase two: paired end-to-end comparison ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Loss,
    Tie,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase2Run {
    pub run: usize,
    pub seed: u64,
    pub init_count_hybrid: usize,
    pub init_count_classical: usize,
    #[serde(with = "rational::option")]
    pub score_classical: Option<Rational>,
    #[serde(with = "rational::option")]
    pub score_hybrid: Option<Rational>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase2Report {
    pub instance: String,
    pub runs: usize,
    pub wins_qi4wop: usize,
    pub losses: usize,
    pub ties: usize,
    pub skipped: usize,
    #[serde(with = "rational")]
    pub win_rate: Rational,
    pub median_score_classical: Option<f64>,
    pub median_score_hybrid: Option<f64>,
    pub per_run: Vec<Phase2Run>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Phase2Config {
    pub runs: usize,
    pub base_seed: u64,
    /// Template for both arms; `init_mode`, `seed` and `target_init_count`
    /// are set per run.
    pub poc: PocConfig,
    /// Parallel workers across runs.
    pub workers: usize,
}

impl Default for Phase2Config {
    fn default() -> Self {
        Phase2Config {
            runs: 25,
            base_seed: 0,
            poc: PocConfig {
                init_time_budget_ms: 300_000,
                ..PocConfig::default()
            },
            workers: 1,
        }
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

fn phase2_run(instance: &Instance, config: &Phase2Config, run: usize, backend: &dyn Backend) -> Phase2Run {
    let seed = seeding::derive(config.base_seed, run as u64);
    let mut out = Phase2Run {
        run,
        seed,
        init_count_hybrid: 0,
        init_count_classical: 0,
        score_classical: None,
        score_hybrid: None,
        outcome: Outcome::Skipped,
        note: None,
    };
    let hybrid_cfg = PocConfig {
        init_mode: InitMode::Qi4wop,
        seed,
        target_init_count: None,
        ..config.poc.clone()
    };
    let hybrid = match run_poc(instance, &hybrid_cfg, backend) {
        Ok(r) => r,
        Err(e) => {
            out.note = Some(format!("hybrid: {e}"));
            return out;
        }
    };
    out.init_count_hybrid = hybrid.init_population_size;
    out.score_hybrid = Some(hybrid.best_final.score);
    let classical_cfg = PocConfig {
        init_mode: InitMode::Classical,
        seed,
        target_init_count: Some(hybrid.init_population_size),
        ..config.poc.clone()
    };
    let classical = match run_poc(instance, &classical_cfg, backend) {
        Ok(r) => r,
        Err(e) => {
            out.note = Some(format!("classical: {e}"));
            return out;
        }
    };
    out.init_count_classical = classical.init_population_size;
    out.score_classical = Some(classical.best_final.score);
    if classical.init_population_size < hybrid.init_population_size {
        out.note = Some("classical initialization stopped before reaching the hybrid count".into());
    }
    out.outcome = match hybrid.best_final.score.cmp(&classical.best_final.score) {
        std::cmp::Ordering::Less => Outcome::Win,
        std::cmp::Ordering::Greater => Outcome::Loss,
        std::cmp::Ordering::Equal => Outcome::Tie,
    };
    out
}

/// Paired runs: the hybrid-initialized pipeline first, then the classical one
/// with its initial population capped at (and run until) the hybrid size.
/// A win is a strictly smaller final score for the hybrid arm.
pub fn run_phase2(instance: &Instance, config: &Phase2Config, backend: &dyn Backend) -> Result<Phase2Report> {
    if config.runs == 0 {
        return Err(Error::InvalidConfig("runs must be >= 1".into()));
    }
    let per_run = seeding::map_indexed(config.workers, config.runs, |r| {
        phase2_run(instance, config, r, backend)
    });
    Ok(Phase2Report::from_runs(instance.name(), per_run))
}

impl Phase2Report {
    pub fn from_runs(instance: &str, per_run: Vec<Phase2Run>) -> Self {
        let count = |o: Outcome| per_run.iter().filter(|r| r.outcome == o).count();
        let runs = per_run.len();
        let wins = count(Outcome::Win);
        let scored = |f: fn(&Phase2Run) -> Option<Rational>| {
            median(
                per_run
                    .iter()
                    .filter(|r| r.outcome != Outcome::Skipped)
                    .filter_map(f)
                    .map(|s| rational::to_f64(&s))
                    .collect(),
            )
        };
        Phase2Report {
            instance: instance.to_string(),
            runs,
            wins_qi4wop: wins,
            losses: count(Outcome::Loss),
            ties: count(Outcome::Tie),
            skipped: count(Outcome::Skipped),
            win_rate: Rational::new(wins as i64, runs.max(1) as i64),
            median_score_classical: scored(|r| r.score_classical),
            median_score_hybrid: scored(|r| r.score_hybrid),
            per_run,
        }
    }

    pub fn accounting_holds(&self) -> bool {
        self.wins_qi4wop + self.losses + self.ties + self.skipped == self.runs
            && self.win_rate * rational::int(self.runs.max(1) as i64) == rational::int(self.wins_qi4wop as i64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "instance",
            "run",
            "seed",
            "init_count_hybrid",
            "init_count_classical",
            "score_classical",
            "score_hybrid",
            "outcome",
        ])
        .expect("in-memory csv");
        let fmt = |s: &Option<Rational>| s.map(|r| rational::format(&r)).unwrap_or_default();
        for r in &self.per_run {
            w.write_record([
                self.instance.clone(),
                r.run.to_string(),
                r.seed.to_string(),
                r.init_count_hybrid.to_string(),
                r.init_count_classical.to_string(),
                fmt(&r.score_classical),
                fmt(&r.score_hybrid),
                serde_json::to_value(r.outcome)
                    .expect("outcome")
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8 csv")
    }
}
