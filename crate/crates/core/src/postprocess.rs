//! Turning sampled ground placements into complete, diverse solutions:
//! stack the leftover items, derive one mutant per completed solution, then
//! drop infeasible and repeated candidates.

use std::collections::HashSet;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::cqm::{assignment_to_partial, build_subwop_model};
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::model::{canonical_key, is_feasible, Instance, PartialSolution, SolutionDoc, WopSolution};
use crate::rational::{self, Rational};
use crate::seeding::{self, Rng};
use crate::solvers::{Backend, SamplerConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub generated: usize,
    pub dropped_duplicate: usize,
    pub dropped_infeasible: usize,
}

/// Feasible, pairwise-distinct solutions (distinct by [`canonical_key`]).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Population {
    pub solutions: Vec<WopSolution>,
    pub keys: HashSet<Vec<u8>>,
    pub stats: PopulationStats,
}

#[derive(Serialize)]
struct PopulationDoc {
    solutions: Vec<SolutionDoc>,
    stats: PopulationStats,
}

impl Population {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// Adds `solution` if it is feasible and new; returns whether it was kept.
    pub fn offer(&mut self, solution: Option<WopSolution>, instance: &Instance) -> bool {
        self.stats.generated += 1;
        let Some(solution) = solution else {
            self.stats.dropped_infeasible += 1;
            return false;
        };
        let feasible = is_feasible(&solution, instance).map(|r| r.feasible).unwrap_or(false);
        if !feasible {
            self.stats.dropped_infeasible += 1;
            return false;
        }
        if !self.keys.insert(canonical_key(&solution)) {
            self.stats.dropped_duplicate += 1;
            return false;
        }
        self.solutions.push(solution);
        true
    }

    pub fn to_json(&self, instance: &Instance) -> String {
        let doc = PopulationDoc {
            solutions: self.solutions.iter().map(|s| s.to_doc(instance)).collect(),
            stats: self.stats,
        };
        serde_json::to_string_pretty(&doc).expect("population serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Qi4wopConfig {
    pub sampler: SamplerConfig,
    #[serde(with = "rational")]
    pub mutant_probability: Rational,
    pub postprocess_seed: u64,
}

impl Default for Qi4wopConfig {
    fn default() -> Self {
        Qi4wopConfig {
            sampler: SamplerConfig::default(),
            mutant_probability: Rational::new(1, 2),
            postprocess_seed: 0,
        }
    }
}

impl Qi4wopConfig {
    /// Derives the sampler and post-processing seeds from one run seed.
    pub fn seeded(mut self, seed: u64) -> Self {
        self.sampler.seed = seeding::derive(seed, 1);
        self.postprocess_seed = seeding::derive(seed, 2);
        self
    }

    pub fn check(&self) -> Result<()> {
        self.sampler.check()?;
        let p = self.mutant_probability;
        if !(rational::is_non_negative(&p) && p <= rational::int(1)) {
            return Err(Error::InvalidConfig("mutant_probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Completes a ground placement by stacking every unplaced item onto an open
/// stack of its type, cheapest per-level time first (ties by location, slot).
///
/// Ground items keep their location; each opens exactly one stack. Returns
/// `None` when some unplaced item finds no stack with room.
pub fn complete_solution(partial: &PartialSolution, instance: &Instance) -> Option<WopSolution> {
    if partial.assignments.len() != instance.num_items() || !partial.check(instance).feasible {
        return None;
    }
    let mut layout = Layout::from_partial(partial, instance);
    for (item, loc) in partial.assignments.iter().enumerate() {
        if loc.is_some() {
            continue;
        }
        let target = *layout
            .cheapest_open_stacks(instance.type_index(item), instance)
            .first()?;
        layout.stacks[target].items.push(item);
    }
    Some(layout.to_solution(instance.num_items()))
}

fn coin(rng: &mut Rng, p: &Rational) -> bool {
    match (u32::try_from(*p.numer()), u32::try_from(*p.denom())) {
        (Ok(n), Ok(d)) if n <= d => rng.gen_ratio(n, d),
        _ => rng.gen_bool(rational::to_f64(p).clamp(0.0, 1.0)),
    }
}

/// Derives a mutant: each single-item ground stack of a stackable type is,
/// with probability `p`, moved on top of the cheapest other compatible stack
/// with room. Exactly one coin is drawn per such item, in item order.
pub fn create_mutant(solution: &WopSolution, instance: &Instance, p: &Rational, rng: &mut Rng) -> Result<WopSolution> {
    let report = is_feasible(solution, instance)?;
    if !report.feasible {
        return Err(Error::Infeasible(report.to_string()));
    }
    let mut layout = Layout::from_solution(solution, instance);
    let mut movers: Vec<usize> = layout
        .stacks
        .iter()
        .filter(|s| s.height() == 1 && instance.item_types()[s.type_index].is_stackable())
        .map(|s| s.items[0])
        .collect();
    movers.sort_unstable();

    for item in movers {
        if !coin(rng, p) {
            continue;
        }
        // an earlier mover may have landed on this item since the list was built
        let Some(own) = layout.stacks.iter().position(|s| s.items == [item]) else {
            continue;
        };
        let target = layout
            .cheapest_open_stacks(instance.type_index(item), instance)
            .into_iter()
            .find(|&k| k != own);
        if let Some(target) = target {
            layout.pop(own, instance);
            layout.stacks[target].items.push(item);
        }
    }
    layout.compact();
    Ok(layout.to_solution(instance.num_items()))
}

/// Drops empty and infeasible candidates, then duplicates (first occurrence wins).
pub fn filter_population(candidates: Vec<Option<WopSolution>>, instance: &Instance) -> Population {
    let mut population = Population::default();
    for c in candidates {
        population.offer(c, instance);
    }
    population
}

#[derive(Debug, Clone)]
pub struct Qi4wopRun {
    pub population: Population,
    pub samples_returned: usize,
    pub sampler_truncated: bool,
    /// Sampling time, including any configured queue latency.
    pub sampling_ms: u64,
    pub postprocess_ms: u64,
}

impl Qi4wopRun {
    pub fn wall_time_ms(&self) -> u64 {
        self.sampling_ms + self.postprocess_ms
    }
}

/// Full pipeline: build the ground-placement model, sample `N` assignments,
/// complete and mutate each one, and filter the `2N` candidates.
pub fn run_qi4wop(instance: &Instance, config: &Qi4wopConfig, backend: &dyn Backend) -> Result<Qi4wopRun> {
    config.check()?;
    let model = build_subwop_model(instance)?;
    let sample_set = backend.sample(&model, &config.sampler)?;

    let start = Instant::now();
    let per_sample = seeding::map_indexed(config.sampler.workers, sample_set.samples.len(), |i| {
        let sample = &sample_set.samples[i];
        if !sample.evaluation.feasible {
            return [None, None];
        }
        let completed = assignment_to_partial(&sample.values(), &model, instance)
            .ok()
            .and_then(|partial| complete_solution(&partial, instance));
        let Some(completed) = completed else {
            return [None, None];
        };
        let mut rng = seeding::rng(seeding::derive(config.postprocess_seed, i as u64));
        let mutant = create_mutant(&completed, instance, &config.mutant_probability, &mut rng).ok();
        [Some(completed), mutant]
    });
    let population = filter_population(per_sample.into_iter().flatten().collect(), instance);

    Ok(Qi4wopRun {
        population,
        samples_returned: sample_set.samples.len(),
        sampler_truncated: sample_set.truncated,
        sampling_ms: sample_set.wall_time_ms,
        postprocess_ms: start.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{objective_o1, Placement};
    use crate::solvers::{ExactBackend, SampleSet};

    fn partial(a: [Option<usize>; 4]) -> PartialSolution {
        PartialSolution {
            assignments: a.to_vec(),
        }
    }

    #[test]
    fn completes_t1_onto_cheapest_stack() {
        let inst = t1();
        let p = partial([Some(FLOOR), Some(SHELF), None, Some(FLOOR)]);
        let s = complete_solution(&p, &inst).unwrap();
        assert!(is_feasible(&s, &inst).unwrap().feasible);
        assert_eq!(s.placements[A3].location, SHELF);
        assert_eq!(s.placements[A3].level, 1);
        assert_eq!(s.placements[A3].slot, s.placements[A2].slot);
        // never moves ground items
        for i in [A1, A2, B1] {
            assert_eq!(Some(s.placements[i].location), p.assignments[i]);
            assert_eq!(s.placements[i].level, 0);
        }
    }

    #[test]
    fn all_placed_stays_on_ground() {
        let base = t1();
        let mut locs = base.locations().to_vec();
        locs[FLOOR].capacity = 20;
        let wide = Instance::new("wide", locs, base.item_types().to_vec(), base.items().to_vec());
        let all = partial([Some(FLOOR), Some(SHELF), Some(FLOOR), Some(FLOOR)]);
        let s = complete_solution(&all, &wide).unwrap();
        assert!(s.placements.iter().all(|p| p.level == 0));
        assert!(is_feasible(&s, &wide).unwrap().feasible);
    }

    #[test]
    fn shortfall_returns_none() {
        let inst = t1();
        let p = partial([Some(SHELF), None, None, Some(FLOOR)]);
        assert!(complete_solution(&p, &inst).is_none());
    }

    #[test]
    fn mutant_of_s1_is_unchanged_when_stacks_are_full() {
        let inst = t1();
        let mut rng = seeding::rng(1);
        let m = create_mutant(&s1(), &inst, &rational::int(1), &mut rng).unwrap();
        assert_eq!(canonical_key(&m), canonical_key(&s1()));
    }

    #[test]
    fn mutant_probability_zero_is_identity() {
        let inst = t1();
        let mut s = s1();
        // a2 and a3 on separate shelf footprints (area 6) needs a roomier shelf
        s.placements[A3] = Placement::new(SHELF, 7, 0);
        let base = t1();
        let mut locs = base.locations().to_vec();
        locs[1].capacity = 6;
        let roomy = Instance::new("roomy", locs, base.item_types().to_vec(), base.items().to_vec());
        let mut rng = seeding::rng(5);
        let m = create_mutant(&s, &roomy, &rational::int(0), &mut rng).unwrap();
        assert_eq!(m, s);
        let mut rng = seeding::rng(5);
        let stacked = create_mutant(&s, &roomy, &rational::int(1), &mut rng).unwrap();
        assert!(is_feasible(&stacked, &roomy).unwrap().feasible);
        assert!(stacked.placements.iter().any(|p| p.level == 1 && p.location == SHELF));
        assert!(create_mutant(&s, &inst, &rational::int(1), &mut rng).is_err());
    }

    #[test]
    fn filter_counts() {
        let inst = t1();
        let s = s1();
        let mut relabeled = s.clone();
        for p in relabeled.placements.iter_mut().filter(|p| p.location == FLOOR) {
            p.slot = 1 - p.slot;
        }
        let mut too_high = s.clone();
        too_high.placements[A3].level = 2;
        let pop = filter_population(vec![Some(s), Some(relabeled), None, Some(too_high)], &inst);
        assert_eq!(pop.len(), 1);
        assert_eq!(
            pop.stats,
            PopulationStats {
                generated: 4,
                dropped_duplicate: 1,
                dropped_infeasible: 2
            }
        );
        assert!(filter_population(vec![], &inst).is_empty());
    }

    #[test]
    fn qi4wop_on_t1_with_exact_backend() {
        let inst = t1();
        let config = Qi4wopConfig {
            sampler: SamplerConfig {
                num_samples: 10,
                ..Default::default()
            },
            ..Default::default()
        }
        .seeded(3);
        let run = run_qi4wop(&inst, &config, &ExactBackend::default()).unwrap();
        assert!(!run.population.is_empty());
        assert!(run.population.len() <= 2 * config.sampler.num_samples);
        for s in &run.population.solutions {
            assert!(is_feasible(s, &inst).unwrap().feasible);
            assert!(objective_o1(s, &inst).is_ok());
        }
        let again = run_qi4wop(&inst, &config, &ExactBackend::default()).unwrap();
        assert_eq!(run.population, again.population);
    }

    struct AllUnplaced;

    impl Backend for AllUnplaced {
        fn name(&self) -> &str {
            "all-unplaced"
        }

        fn sample(&self, model: &crate::cqm::CqmModel, _: &SamplerConfig) -> Result<SampleSet> {
            let a = vec![rational::int(0); model.num_variables()];
            let e = crate::cqm::evaluate(model, &a)?;
            Ok(SampleSet {
                samples: vec![crate::solvers::Sample::new(a, e)],
                backend_name: "all-unplaced".into(),
                wall_time_ms: 0,
                truncated: false,
                infeasible: false,
                discrepancies: vec![],
            })
        }
    }

    #[test]
    fn infeasible_partial_yields_empty_population() {
        let inst = t1();
        let config = Qi4wopConfig {
            sampler: SamplerConfig {
                num_samples: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        let run = run_qi4wop(&inst, &config, &AllUnplaced).unwrap();
        assert_eq!(run.population.len(), 0);
        assert_eq!(run.population.stats.generated, 2);
        assert_eq!(run.population.stats.dropped_infeasible, 2);
    }
}
