//! Backends that turn a ground-placement model into a population of
//! assignments: an exact branch-and-bound oracle, a simulated-annealing
//! sampler, and a file-exchange adapter for an external hybrid service.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_traits::{ToPrimitive, Zero};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cqm::{evaluate, max_constraint_coefficient, Assignment, CqmModel, Evaluation, Num, Sense, VarType};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::seeding;

/// Environment variable naming the drop directory of the remote adapter.
pub const REMOTE_DIR_ENV: &str = "WOP_REMOTE_DIR";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealingParams {
    #[serde(with = "rational")]
    pub initial_temperature: Rational,
    #[serde(with = "rational")]
    pub cooling_factor: Rational,
    /// Sweeps per restart; one sweep is one proposal per item on average and
    /// ends with one cooling step.
    pub sweeps_per_restart: u64,
    /// `None` selects twice the largest constraint coefficient (the largest
    /// item area for ground-placement models).
    #[serde(with = "rational::option")]
    pub penalty_weight: Option<Rational>,
}

impl Default for AnnealingParams {
    fn default() -> Self {
        AnnealingParams {
            initial_temperature: rational::int(2),
            cooling_factor: Rational::new(95, 100),
            sweeps_per_restart: 200,
            penalty_weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub num_samples: usize,
    pub time_budget_ms: u64,
    pub seed: u64,
    pub annealing: AnnealingParams,
    /// Added to the reported wall time to mimic a service queue.
    pub queue_latency_offset_ms: u64,
    pub workers: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            num_samples: 50,
            time_budget_ms: 60_000,
            seed: 0,
            annealing: AnnealingParams::default(),
            queue_latency_offset_ms: 0,
            workers: 1,
        }
    }
}

impl SamplerConfig {
    pub fn check(&self) -> Result<()> {
        let a = &self.annealing;
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("num_samples must be >= 1".into()));
        }
        if !rational::is_positive(&a.initial_temperature) {
            return Err(Error::InvalidConfig("initial_temperature must be positive".into()));
        }
        if !(rational::is_positive(&a.cooling_factor) && a.cooling_factor < rational::int(1)) {
            return Err(Error::InvalidConfig("cooling_factor must lie in (0, 1)".into()));
        }
        if a.sweeps_per_restart == 0 {
            return Err(Error::InvalidConfig("sweeps_per_restart must be >= 1".into()));
        }
        if let Some(p) = a.penalty_weight {
            if !rational::is_positive(&p) {
                return Err(Error::InvalidConfig("penalty_weight must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: Vec<Num>,
    pub evaluation: Evaluation,
}

impl Sample {
    pub fn new(assignment: Assignment, evaluation: Evaluation) -> Self {
        Sample {
            assignment: assignment.into_iter().map(Num).collect(),
            evaluation,
        }
    }

    pub fn values(&self) -> Assignment {
        self.assignment.iter().map(|n| n.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub sample: usize,
    pub recorded: String,
    #[serde(with = "rational")]
    pub local: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub backend_name: String,
    /// Not serialized: it is the only schedule-dependent field.
    #[serde(skip)]
    pub wall_time_ms: u64,
    /// The time budget ran out before all requested restarts completed.
    pub truncated: bool,
    /// The model has no feasible assignment (exact backend only).
    pub infeasible: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discrepancies: Vec<Discrepancy>,
}

impl SampleSet {
    fn empty(backend: &str) -> Self {
        SampleSet {
            samples: Vec::new(),
            backend_name: backend.to_string(),
            wall_time_ms: 0,
            truncated: false,
            infeasible: false,
            discrepancies: Vec::new(),
        }
    }

    pub fn feasible_count(&self) -> usize {
        self.samples.iter().filter(|s| s.evaluation.feasible).count()
    }

    pub fn best_feasible_objective(&self) -> Option<Rational> {
        self.samples
            .iter()
            .filter(|s| s.evaluation.feasible)
            .map(|s| s.evaluation.objective_value)
            .min()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sample set serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveLimits {
    pub max_variables: usize,
    pub max_nodes: u64,
    /// Keep at most this many optimal assignments (after ordering).
    pub max_solutions: Option<usize>,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_variables: 24,
            max_nodes: 50_000_000,
            max_solutions: None,
        }
    }
}

/// A producer of sample sets for a model.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn sample(&self, model: &CqmModel, config: &SamplerConfig) -> Result<SampleSet>;
}

#[derive(Debug, Clone, Default)]
pub struct ExactBackend {
    pub limits: SolveLimits,
}

impl Backend for ExactBackend {
    fn name(&self) -> &str {
        "exact"
    }

    fn sample(&self, model: &CqmModel, config: &SamplerConfig) -> Result<SampleSet> {
        let limits = SolveLimits {
            max_solutions: Some(
                self.limits
                    .max_solutions
                    .map_or(config.num_samples, |m| m.min(config.num_samples)),
            ),
            ..self.limits
        };
        let mut set = solve_exact(model, &limits)?;
        set.wall_time_ms += config.queue_latency_offset_ms;
        Ok(set)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnnealingBackend;

impl Backend for AnnealingBackend {
    fn name(&self) -> &str {
        "anneal"
    }

    fn sample(&self, model: &CqmModel, config: &SamplerConfig) -> Result<SampleSet> {
        sample_annealing(model, config)
    }
}

/// File-exchange adapter: writes `<job>.cqm.json` into the drop directory and
/// reads back `<job>.samples.json` produced by an external solver.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    pub dir: PathBuf,
    pub job: String,
}

impl RemoteBackend {
    pub fn new(dir: impl Into<PathBuf>, job: impl Into<String>) -> Self {
        RemoteBackend {
            dir: dir.into(),
            job: job.into(),
        }
    }

    pub fn from_env(job: impl Into<String>) -> Result<Self> {
        let dir =
            std::env::var_os(REMOTE_DIR_ENV).ok_or_else(|| Error::Remote(format!("{REMOTE_DIR_ENV} is not set")))?;
        Ok(RemoteBackend::new(dir, job))
    }

    pub fn model_path(&self) -> PathBuf {
        self.dir.join(format!("{}.cqm.json", self.job))
    }

    pub fn samples_path(&self) -> PathBuf {
        self.dir.join(format!("{}.samples.json", self.job))
    }
}

impl Backend for RemoteBackend {
    fn name(&self) -> &str {
        "remote"
    }

    fn sample(&self, model: &CqmModel, config: &SamplerConfig) -> Result<SampleSet> {
        let start = Instant::now();
        fs::create_dir_all(&self.dir)?;
        export_for_remote(model, &self.model_path())?;
        let samples = self.samples_path();
        if !samples.exists() {
            return Err(Error::Remote(format!(
                "model written to {}; no sample set found at {}",
                self.model_path().display(),
                samples.display()
            )));
        }
        let mut set = import_sampleset(&samples, model)?;
        set.samples.truncate(config.num_samples);
        set.wall_time_ms = elapsed_ms(start) + config.queue_latency_offset_ms;
        Ok(set)
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

// ---- exact oracle ----

struct Choice {
    var: Option<usize>,
    objective: Rational,
    /// (constraint, coefficient)
    effects: Vec<(usize, Rational)>,
}

struct ExactSearch<'a> {
    model: &'a CqmModel,
    groups: Vec<Vec<Choice>>,
    // suffix bounds: [group][constraint] over groups >= index
    suffix_min: Vec<Vec<Rational>>,
    suffix_max: Vec<Vec<Rational>>,
    suffix_obj_min: Vec<Rational>,
    lhs: Vec<Rational>,
    objective: Rational,
    chosen: Vec<Option<usize>>,
    best: Option<Rational>,
    optima: Vec<Vec<u8>>,
    nodes: u64,
    max_nodes: u64,
}

impl<'a> ExactSearch<'a> {
    fn new(model: &'a CqmModel, max_nodes: u64) -> Self {
        let n_cons = model.constraints.len();
        let mut effects_of: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); model.num_variables()];
        for (k, c) in model.constraints.iter().enumerate() {
            for (v, coeff) in &c.lhs.terms {
                effects_of[*v].push((k, *coeff));
            }
        }
        let mut obj_of = vec![Rational::zero(); model.num_variables()];
        for (v, c) in &model.objective.terms {
            obj_of[*v] = *c;
        }
        let groups: Vec<Vec<Choice>> = model
            .item_groups()
            .into_iter()
            .map(|vars| {
                // placed choices first so a good incumbent appears early
                let mut choices: Vec<Choice> = vars
                    .into_iter()
                    .map(|v| Choice {
                        var: Some(v),
                        objective: obj_of[v],
                        effects: effects_of[v].clone(),
                    })
                    .collect();
                choices.push(Choice {
                    var: None,
                    objective: Rational::zero(),
                    effects: Vec::new(),
                });
                choices
            })
            .collect();

        let g = groups.len();
        let mut suffix_min = vec![vec![Rational::zero(); n_cons]; g + 1];
        let mut suffix_max = vec![vec![Rational::zero(); n_cons]; g + 1];
        let mut suffix_obj_min = vec![Rational::zero(); g + 1];
        for gi in (0..g).rev() {
            let mut lo = suffix_min[gi + 1].clone();
            let mut hi = suffix_max[gi + 1].clone();
            for k in 0..n_cons {
                let contrib = groups[gi].iter().map(|c| {
                    c.effects
                        .iter()
                        .find(|(kk, _)| *kk == k)
                        .map_or_else(Rational::zero, |(_, v)| *v)
                });
                let (mn, mx) = contrib.fold((Rational::zero(), Rational::zero()), |(a, b), v| (a.min(v), b.max(v)));
                lo[k] += mn;
                hi[k] += mx;
            }
            suffix_min[gi] = lo;
            suffix_max[gi] = hi;
            let best_obj = groups[gi]
                .iter()
                .map(|c| c.objective)
                .min()
                .unwrap_or_else(Rational::zero);
            suffix_obj_min[gi] = suffix_obj_min[gi + 1] + best_obj;
        }
        let lhs = model.constraints.iter().map(|c| c.lhs.bias).collect();
        ExactSearch {
            model,
            groups,
            suffix_min,
            suffix_max,
            suffix_obj_min,
            lhs,
            objective: model.objective.bias,
            chosen: vec![None; g],
            best: None,
            optima: Vec::new(),
            nodes: 0,
            max_nodes,
        }
    }

    fn still_satisfiable(&self, depth: usize) -> bool {
        self.model.constraints.iter().enumerate().all(|(k, c)| {
            let lo = self.lhs[k] + self.suffix_min[depth][k];
            let hi = self.lhs[k] + self.suffix_max[depth][k];
            match c.sense {
                Sense::Le => lo <= c.rhs,
                Sense::Ge => hi >= c.rhs,
                Sense::Eq => lo <= c.rhs && hi >= c.rhs,
            }
        })
    }

    fn dfs(&mut self, depth: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::OracleLimit(format!("node limit {} exceeded", self.max_nodes)));
        }
        if !self.still_satisfiable(depth) {
            return Ok(());
        }
        if let Some(best) = self.best {
            if self.objective + self.suffix_obj_min[depth] > best {
                return Ok(());
            }
        }
        if depth == self.groups.len() {
            let mut bits = vec![0u8; self.model.num_variables()];
            for v in self.chosen.iter().flatten() {
                bits[*v] = 1;
            }
            match self.best {
                Some(b) if self.objective > b => {}
                Some(b) if self.objective == b => self.optima.push(bits),
                _ => {
                    self.best = Some(self.objective);
                    self.optima = vec![bits];
                }
            }
            return Ok(());
        }
        for ci in 0..self.groups[depth].len() {
            let (var, obj, effects) = {
                let c = &self.groups[depth][ci];
                (c.var, c.objective, c.effects.clone())
            };
            for (k, v) in &effects {
                self.lhs[*k] += v;
            }
            self.objective += obj;
            self.chosen[depth] = var;
            let r = self.dfs(depth + 1);
            for (k, v) in &effects {
                self.lhs[*k] -= v;
            }
            self.objective -= obj;
            self.chosen[depth] = None;
            r?;
        }
        Ok(())
    }
}

/// Enumerates every optimal feasible assignment of a binary, linear,
/// one-location-per-item model by depth-first branch and bound.
///
/// Optima are returned in lexicographic order of their 0/1 vectors, capped at
/// `limits.max_solutions`. An infeasible model yields an empty set with
/// `infeasible = true`.
pub fn solve_exact(model: &CqmModel, limits: &SolveLimits) -> Result<SampleSet> {
    let start = Instant::now();
    if model.num_variables() > limits.max_variables {
        return Err(Error::OracleLimit(format!(
            "{} variables exceed the limit of {}",
            model.num_variables(),
            limits.max_variables
        )));
    }
    if let Some(v) = model.variables.iter().find(|v| v.vartype != VarType::Binary) {
        return Err(Error::InvalidConfig(format!(
            "exact oracle needs binary variables; `{}` is not",
            v.id
        )));
    }
    let quadratic =
        !model.objective.quadratic.is_empty() || model.constraints.iter().any(|c| !c.lhs.quadratic.is_empty());
    if quadratic {
        return Err(Error::InvalidConfig("exact oracle supports linear models only".into()));
    }

    let mut search = ExactSearch::new(model, limits.max_nodes);
    search.dfs(0)?;
    let mut optima = search.optima;
    optima.sort_unstable();
    if let Some(cap) = limits.max_solutions {
        optima.truncate(cap);
    }
    let mut set = SampleSet::empty("exact");
    set.infeasible = search.best.is_none();
    for bits in optima {
        let assignment: Assignment = bits.iter().map(|&b| rational::int(i64::from(b))).collect();
        let evaluation = evaluate(model, &assignment)?;
        debug_assert!(evaluation.feasible);
        set.samples.push(Sample::new(assignment, evaluation));
    }
    set.wall_time_ms = elapsed_ms(start);
    Ok(set)
}

// ---- simulated annealing ----

struct AnnealTerm {
    constraint: usize,
    coeff: f64,
}

struct AnnealModel {
    /// Per group: candidate variables (choice 0 = none, choice k = vars[k-1]).
    groups: Vec<Vec<usize>>,
    obj: Vec<f64>,
    terms: Vec<Vec<AnnealTerm>>,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
    bias: Vec<f64>,
    penalty: f64,
}

impl AnnealModel {
    fn new(model: &CqmModel, penalty: f64) -> Self {
        let n = model.num_variables();
        let mut obj = vec![0.0; n];
        for (v, c) in &model.objective.terms {
            obj[*v] = rational::to_f64(c);
        }
        let mut terms: Vec<Vec<AnnealTerm>> = (0..n).map(|_| Vec::new()).collect();
        for (k, c) in model.constraints.iter().enumerate() {
            for (v, coeff) in &c.lhs.terms {
                terms[*v].push(AnnealTerm {
                    constraint: k,
                    coeff: rational::to_f64(coeff),
                });
            }
        }
        AnnealModel {
            groups: model.item_groups(),
            obj,
            terms,
            senses: model.constraints.iter().map(|c| c.sense).collect(),
            rhs: model.constraints.iter().map(|c| rational::to_f64(&c.rhs)).collect(),
            bias: model
                .constraints
                .iter()
                .map(|c| rational::to_f64(&c.lhs.bias))
                .collect(),
            penalty,
        }
    }

    fn violation(&self, k: usize, lhs: f64) -> f64 {
        match self.senses[k] {
            Sense::Le => (lhs - self.rhs[k]).max(0.0),
            Sense::Ge => (self.rhs[k] - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs[k]).abs(),
        }
    }

    fn var_of(&self, group: usize, choice: usize) -> Option<usize> {
        choice.checked_sub(1).map(|c| self.groups[group][c])
    }
}

struct AnnealState<'m> {
    m: &'m AnnealModel,
    choice: Vec<usize>,
    lhs: Vec<f64>,
    energy: f64,
    touched: Vec<(usize, f64)>,
}

impl<'m> AnnealState<'m> {
    fn new(m: &'m AnnealModel, choice: Vec<usize>) -> Self {
        let mut lhs = m.bias.clone();
        let mut energy = 0.0;
        for (g, &c) in choice.iter().enumerate() {
            if let Some(v) = m.var_of(g, c) {
                energy += m.obj[v];
                for t in &m.terms[v] {
                    lhs[t.constraint] += t.coeff;
                }
            }
        }
        energy += m.penalty * (0..lhs.len()).map(|k| m.violation(k, lhs[k])).sum::<f64>();
        AnnealState {
            m,
            choice,
            lhs,
            energy,
            touched: Vec::new(),
        }
    }

    /// Energy change of switching `group` to `new_choice`; leaves the
    /// per-constraint deltas in `self.touched` for [`Self::commit`].
    fn delta(&mut self, group: usize, new_choice: usize) -> f64 {
        let m = self.m;
        self.touched.clear();
        let old = m.var_of(group, self.choice[group]);
        let new = m.var_of(group, new_choice);
        let mut d = 0.0;
        if let Some(v) = old {
            d -= m.obj[v];
            for t in &m.terms[v] {
                push_delta(&mut self.touched, t.constraint, -t.coeff);
            }
        }
        if let Some(v) = new {
            d += m.obj[v];
            for t in &m.terms[v] {
                push_delta(&mut self.touched, t.constraint, t.coeff);
            }
        }
        for &(k, dl) in &self.touched {
            let before = m.violation(k, self.lhs[k]);
            let after = m.violation(k, self.lhs[k] + dl);
            d += m.penalty * (after - before);
        }
        d
    }

    fn commit(&mut self, group: usize, new_choice: usize, delta: f64) {
        for &(k, dl) in &self.touched {
            self.lhs[k] += dl;
        }
        self.choice[group] = new_choice;
        self.energy += delta;
    }
}

fn push_delta(touched: &mut Vec<(usize, f64)>, k: usize, d: f64) {
    match touched.iter_mut().find(|(kk, _)| *kk == k) {
        Some(e) => e.1 += d,
        None => touched.push((k, d)),
    }
}

fn anneal_restart(m: &AnnealModel, config: &SamplerConfig, restart: usize, deadline: Instant) -> Option<Vec<usize>> {
    let mut rng = seeding::rng(config.seed ^ restart as u64);
    let params = &config.annealing;
    let n_groups = m.groups.len();
    let init: Vec<usize> = m.groups.iter().map(|g| rng.gen_range(0..=g.len())).collect();
    let mut state = AnnealState::new(m, init);
    let mut best = state.choice.clone();
    let mut best_energy = state.energy;
    if n_groups == 0 {
        return Some(best);
    }
    let mut temperature = rational::to_f64(&params.initial_temperature);
    let cooling = rational::to_f64(&params.cooling_factor);
    for _ in 0..params.sweeps_per_restart {
        if Instant::now() > deadline {
            return None;
        }
        for _ in 0..n_groups {
            let g = rng.gen_range(0..n_groups);
            let options = m.groups[g].len() + 1;
            if options < 2 {
                continue;
            }
            let mut c = rng.gen_range(0..options - 1);
            if c >= state.choice[g] {
                c += 1;
            }
            let d = state.delta(g, c);
            let accept = d <= 0.0 || rng.gen::<f64>() < (-d / temperature).exp();
            if accept {
                state.commit(g, c, d);
                if state.energy < best_energy - 1e-9 {
                    best_energy = state.energy;
                    best.clone_from(&state.choice);
                }
            }
        }
        temperature *= cooling;
    }
    Some(best)
}

/// Simulated annealing over a per-item categorical state (unplaced or one of
/// the item's candidate locations), so at-most-one-location holds by
/// construction. Remaining constraints are penalized.
///
/// Restart `r` draws from its own generator seeded with `seed ^ r`; restarts
/// may run on parallel workers and are merged in index order.
pub fn sample_annealing(model: &CqmModel, config: &SamplerConfig) -> Result<SampleSet> {
    config.check()?;
    if model.variables.iter().any(|v| v.vartype != VarType::Binary) {
        return Err(Error::InvalidConfig("annealing sampler needs binary variables".into()));
    }
    let start = Instant::now();
    let deadline = start + Duration::from_millis(config.time_budget_ms);
    let penalty = config
        .annealing
        .penalty_weight
        .unwrap_or_else(|| rational::int(2) * max_constraint_coefficient(model));
    let penalty = penalty.to_f64().unwrap_or(0.0);
    let m = AnnealModel::new(model, penalty);

    let results = seeding::map_indexed(config.workers, config.num_samples, |r| {
        anneal_restart(&m, config, r, deadline)
    });

    let mut set = SampleSet::empty("anneal");
    for choice in results {
        let Some(choice) = choice else {
            set.truncated = true;
            break;
        };
        let mut assignment: Assignment = vec![Rational::zero(); model.num_variables()];
        for (g, &c) in choice.iter().enumerate() {
            if let Some(v) = m.var_of(g, c) {
                assignment[v] = rational::int(1);
            }
        }
        let evaluation = evaluate(model, &assignment)?;
        set.samples.push(Sample::new(assignment, evaluation));
    }
    set.wall_time_ms = elapsed_ms(start) + config.queue_latency_offset_ms;
    Ok(set)
}

// ---- remote file exchange ----

pub fn export_for_remote(model: &CqmModel, path: &Path) -> Result<()> {
    fs::write(path, model.to_json())?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RemoteSample {
    assignment: BTreeMap<String, Num>,
    #[serde(default)]
    objective: Option<serde_json::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RemoteSampleSet {
    samples: Vec<RemoteSample>,
}

/// Reads a `{samples: [{assignment, objective}]}` document and re-evaluates
/// every assignment against `model`; recorded objectives are only compared.
pub fn import_sampleset(path: &Path, model: &CqmModel) -> Result<SampleSet> {
    let text = fs::read_to_string(path)?;
    parse_sampleset(&text, model)
}

pub fn parse_sampleset(text: &str, model: &CqmModel) -> Result<SampleSet> {
    let doc: RemoteSampleSet = serde_json::from_str(text)?;
    let index: BTreeMap<&str, usize> = model
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id.as_str(), i))
        .collect();
    let mut set = SampleSet::empty("remote");
    for (si, sample) in doc.samples.into_iter().enumerate() {
        let mut values: Vec<Option<Rational>> = vec![None; model.num_variables()];
        for (id, v) in sample.assignment {
            let var = *index.get(id.as_str()).ok_or(Error::UnknownVariable(id))?;
            values[var] = Some(v.0);
        }
        if let Some(missing) = values.iter().position(Option::is_none) {
            return Err(Error::MissingValue(model.variables[missing].id.clone()));
        }
        let assignment: Assignment = values.into_iter().flatten().collect();
        let evaluation = evaluate(model, &assignment)?;
        if let Some(recorded) = sample.objective {
            let agrees = serde_json::from_value::<Num>(recorded.clone())
                .map(|n| n.0 == evaluation.objective_value)
                .unwrap_or(false);
            if !agrees {
                log::warn!(
                    "sample {si}: recorded objective {recorded} disagrees with local value {}",
                    rational::format(&evaluation.objective_value)
                );
                set.discrepancies.push(Discrepancy {
                    sample: si,
                    recorded: recorded.to_string(),
                    local: evaluation.objective_value,
                });
            }
        }
        set.samples.push(Sample::new(assignment, evaluation));
    }
    Ok(set)
}
