//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p wop-core --test acceptance`; pass substrings as
//! extra arguments to run a subset, e.g. `-- mutant determinism`.

mod common;

use std::collections::HashSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use wop_core::baseline::{
    classical_initialization, enumerate_feasible, random_feasible_solution, run_poc, InitBudget, InitMode, PocConfig,
};
use wop_core::bench::{
    generate_instance, run_phase1, run_phase2, ClassicalBudget, InstanceSpec, Method, Phase1Config, Phase2Config,
};
use wop_core::cqm::build_subwop_model;
use wop_core::model::fixtures::{s1, t1};
use wop_core::model::{
    canonical_key, is_feasible, objective_o1, objective_o2, Instance, Item, ItemType, Location, LocationKind,
    Placement, WopSolution,
};
use wop_core::postprocess::{create_mutant, run_qi4wop, Qi4wopConfig};
use wop_core::rational::{self, Rational};
use wop_core::seeding;
use wop_core::solvers::{sample_annealing, solve_exact, AnnealingBackend, SamplerConfig, SolveLimits};

use common::{brute_force_optimum, small_instance, MAX_ORACLE_VARS};

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn verdict(name: &'static str, start: Instant, limit: Duration, pass: bool, detail: String) -> Verdict {
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let detail = if in_time {
        detail
    } else {
        format!("{detail}; over the {}s limit", limit.as_secs())
    };
    Verdict {
        name,
        pass: pass && in_time,
        detail,
        elapsed,
    }
}

const ORACLE_INSTANCES: u64 = 200;

fn t1_fixture() -> Verdict {
    let start = Instant::now();
    let inst = t1();
    let sol = s1();
    let o1 = objective_o1(&sol, &inst).unwrap();
    let o2 = objective_o2(&sol, &inst).unwrap();
    let model = build_subwop_model(&inst).unwrap();
    let brute = brute_force_optimum(&model);
    let exact = solve_exact(&model, &SolveLimits::default())
        .unwrap()
        .best_feasible_objective();
    // independent layout enumeration agrees that S1 is feasible and o2 = 11 is reachable
    let layouts = enumerate_feasible(&inst);
    let s1_listed = layouts.iter().any(|s| canonical_key(s) == canonical_key(&sol));
    let neg3 = Some(rational::int(-3));
    let pass = o1 == 20 && o2 == 11 && brute == neg3 && exact == neg3 && s1_listed;
    verdict(
        "t1-fixture",
        start,
        Duration::from_secs(60),
        pass,
        format!(
            "o1={o1} o2={o2} brute-force optimum={} exact optimum={} S1 enumerated={s1_listed}",
            brute.map_or("none".into(), |r| rational::format(&r)),
            exact.map_or("none".into(), |r| rational::format(&r)),
        ),
    )
}

fn oracle_and_sampler() -> Vec<Verdict> {
    let start = Instant::now();
    let instances: Vec<Instance> = (0..ORACLE_INSTANCES)
        .map(|k| small_instance(seeding::derive(0xACCE, k), MAX_ORACLE_VARS))
        .collect();
    let models: Vec<_> = instances.iter().map(|i| build_subwop_model(i).unwrap()).collect();
    let mut exact_hits = 0;
    let mut optima = Vec::new();
    let mut max_vars = 0;
    for model in &models {
        max_vars = max_vars.max(model.num_variables());
        let exact = solve_exact(model, &SolveLimits::default())
            .unwrap()
            .best_feasible_objective();
        let brute = brute_force_optimum(model);
        if exact == brute {
            exact_hits += 1;
        }
        optima.push(brute);
    }
    let oracle = verdict(
        "oracle-correctness",
        start,
        Duration::from_secs(60),
        exact_hits == models.len(),
        format!(
            "{exact_hits}/{} exact optima match brute force (max {max_vars} variables)",
            models.len()
        ),
    );

    let start = Instant::now();
    let mut sa_hits = 0;
    let mut feasible_optima = 0;
    for (k, (model, opt)) in models.iter().zip(&optima).enumerate() {
        let config = SamplerConfig {
            seed: k as u64,
            ..Default::default()
        };
        let best = sample_annealing(model, &config).unwrap().best_feasible_objective();
        if opt.is_some() {
            feasible_optima += 1;
        }
        if best == *opt {
            sa_hits += 1;
        }
    }
    let rate = sa_hits as f64 / models.len() as f64;
    let sampler = verdict(
        "sampler-reaches-optimum",
        start,
        Duration::from_secs(300),
        rate >= 0.95,
        format!(
            "{sa_hits}/{} instances ({:.1}%, need >= 95%); {feasible_optima} have a feasible optimum",
            models.len(),
            100.0 * rate
        ),
    );
    vec![oracle, sampler]
}

const E2E_SCALES: [(usize, usize, usize); 6] =
    [(1, 10, 1), (2, 25, 2), (1, 50, 2), (2, 75, 2), (3, 100, 3), (4, 124, 3)];

fn end_to_end() -> Verdict {
    let start = Instant::now();
    let runs = 1000;
    let instances: Vec<Instance> = E2E_SCALES
        .iter()
        .flat_map(|&(x, y, z)| (0..3).map(move |s| InstanceSpec::new(x, y, z, 100 + s)))
        .map(|spec| generate_instance(&spec).unwrap().instance)
        .collect();
    let mut solutions = 0usize;
    let mut infeasible = 0usize;
    let mut duplicates = 0usize;
    let mut errors = Vec::new();
    for r in 0..runs {
        let inst = &instances[r % instances.len()];
        let seed = seeding::derive(0xE2E, r as u64);
        let qi4wop = Qi4wopConfig {
            sampler: SamplerConfig {
                num_samples: 12,
                ..Default::default()
            },
            ..Default::default()
        };
        let emitted: Vec<WopSolution> = if r % 2 == 0 {
            match run_qi4wop(inst, &qi4wop.seeded(seed), &AnnealingBackend) {
                Ok(run) => {
                    let mut keys = HashSet::new();
                    duplicates += run
                        .population
                        .solutions
                        .iter()
                        .filter(|s| !keys.insert(canonical_key(s)))
                        .count();
                    run.population.solutions
                }
                Err(e) => {
                    errors.push(e.to_string());
                    Vec::new()
                }
            }
        } else {
            let config = PocConfig {
                init_mode: if r % 4 == 1 {
                    InitMode::Classical
                } else {
                    InitMode::Qi4wop
                },
                init_time_budget_ms: 20,
                local_search_budget_ms: 50,
                seed,
                qi4wop: qi4wop.clone(),
                ..Default::default()
            };
            match run_poc(inst, &config, &AnnealingBackend) {
                Ok(res) => vec![res.final_solution],
                Err(e) => {
                    errors.push(e.to_string());
                    Vec::new()
                }
            }
        };
        for s in &emitted {
            solutions += 1;
            if !is_feasible(s, inst).map(|r| r.feasible).unwrap_or(false) {
                infeasible += 1;
            }
        }
    }
    errors.sort();
    errors.dedup();
    verdict(
        "end-to-end-feasibility",
        start,
        Duration::from_secs(900),
        infeasible == 0 && duplicates == 0 && errors.is_empty(),
        format!(
            "{runs} runs, {solutions} solutions, {infeasible} infeasible, {duplicates} duplicate keys, errors: {errors:?}"
        ),
    )
}

const TREND_SCALES: [(usize, usize, usize); 4] = [(1, 50, 2), (2, 75, 2), (3, 100, 3), (4, 124, 3)];

fn table1_trend() -> Verdict {
    let start = Instant::now();
    let config = Phase1Config {
        runs: 10,
        base_seed: 1,
        classical_budget: ClassicalBudget::MatchQi4wop,
        ..Default::default()
    };
    let mut ratios = Vec::new();
    let mut cells = Vec::new();
    for &(x, y, z) in &TREND_SCALES {
        let inst = generate_instance(&InstanceSpec::new(x, y, z, 7)).unwrap().instance;
        let (report, _) = run_phase1(
            std::slice::from_ref(&inst),
            &[Method::Qi4wop, Method::Classical],
            &config,
            &AnnealingBackend,
        )
        .unwrap();
        let q = report.row(inst.name(), Method::Qi4wop).unwrap();
        let c = report.row(inst.name(), Method::Classical).unwrap();
        let ratio = if c.mean_sols > 0.0 {
            q.mean_sols / c.mean_sols
        } else {
            f64::INFINITY
        };
        ratios.push(ratio);
        cells.push(format!(
            "{} qi4wop {:.1} vs classical {:.1} in {:.3}s (x{ratio:.2})",
            inst.name(),
            q.mean_sols,
            c.mean_sols,
            q.mean_runtime_s
        ));
    }
    let largest = *ratios.last().unwrap();
    let monotone = ratios.windows(2).all(|w| w[1] >= w[0]);
    verdict(
        "table1-trend",
        start,
        Duration::from_secs(900),
        largest >= 2.0 && monotone,
        format!(
            "{}; need x>=2.00 at the largest scale (got x{largest:.2}) and non-decreasing ratios (got {monotone})",
            cells.join("; ")
        ),
    )
}

fn phase_two() -> Verdict {
    let start = Instant::now();
    let inst = generate_instance(&InstanceSpec::new(4, 124, 3, 7)).unwrap().instance;
    let config = Phase2Config {
        runs: 25,
        base_seed: 2,
        poc: PocConfig {
            init_time_budget_ms: 120_000,
            local_search_budget_ms: 10_000,
            ..Default::default()
        },
        workers: 4,
    };
    let report = run_phase2(&inst, &config, &AnnealingBackend).unwrap();
    let (Some(c), Some(h)) = (report.median_score_classical, report.median_score_hybrid) else {
        return verdict(
            "phase2-protocol",
            start,
            Duration::from_secs(1800),
            false,
            "no scored runs".into(),
        );
    };
    let rel = (h - c).abs() / c.abs();
    let equalized = report
        .per_run
        .iter()
        .filter(|r| r.score_classical.is_some())
        .all(|r| r.init_count_classical == r.init_count_hybrid);
    verdict(
        "phase2-protocol",
        start,
        Duration::from_secs(1800),
        rel <= 0.05 && report.accounting_holds() && equalized,
        format!(
            "median hybrid {h} vs classical {c} ({:.2}% apart, need <= 5%); wins {} losses {} ties {} skipped {} of {}; accounting {}; init counts equalized {equalized}",
            100.0 * rel,
            report.wins_qi4wop,
            report.losses,
            report.ties,
            report.skipped,
            report.runs,
            report.accounting_holds()
        ),
    )
}

/// One tall anchor stack plus `movers` single-item stacks of the same type at
/// one location: every mover that wins its coin lands on the anchor.
fn mutant_bench(movers: usize) -> (Instance, WopSolution) {
    let inst = Instance::new(
        "mutant-bench",
        vec![Location {
            id: "F".into(),
            capacity: 10 * movers as i64,
            kind: LocationKind::Floor,
            base_place_time: 1,
            per_level_time: 1,
        }],
        vec![ItemType {
            id: "A".into(),
            area: 1,
            shelf_allowed: true,
            max_stack_height: movers as i64 + 2,
        }],
        (0..movers + 2)
            .map(|i| Item {
                id: format!("i{i}"),
                type_id: "A".into(),
            })
            .collect(),
    );
    let mut placements = vec![Placement::new(0, 0, 0), Placement::new(0, 0, 1)];
    placements.extend((0..movers).map(|k| Placement::new(0, k as u32 + 1, 0)));
    (inst, WopSolution::new(placements))
}

fn mutant_statistics() -> Verdict {
    let start = Instant::now();
    let movers = 100;
    let (inst, sol) = mutant_bench(movers);
    assert!(is_feasible(&sol, &inst).unwrap().feasible);
    let half = Rational::new(1, 2);
    let trials = 120;
    let mut stacked = 0usize;
    for t in 0..trials {
        let mut rng = seeding::rng(seeding::derive(0x3A7, t));
        let mutant = create_mutant(&sol, &inst, &half, &mut rng).unwrap();
        stacked += mutant.placements.iter().filter(|p| p.slot == 0).count() - 2;
    }
    let draws = trials as usize * movers;
    let rate = stacked as f64 / draws as f64;
    verdict(
        "mutant-statistics",
        start,
        Duration::from_secs(60),
        draws >= 10_000 && (0.45..=0.55).contains(&rate),
        format!("{stacked}/{draws} movers stacked, rate {rate:.4} (need [0.45, 0.55])"),
    )
}

fn determinism() -> Verdict {
    let start = Instant::now();
    let mut failures: Vec<&str> = Vec::new();
    let mut check = |label: &'static str, a: String, b: String| {
        if a != b {
            failures.push(label);
        }
    };
    let spec = InstanceSpec::new(3, 60, 3, 9);
    let inst = generate_instance(&spec).unwrap().instance;
    check(
        "generate_instance",
        inst.to_json(),
        generate_instance(&spec).unwrap().instance.to_json(),
    );

    let model = build_subwop_model(&inst).unwrap();
    let sa = |workers| {
        let config = SamplerConfig {
            num_samples: 16,
            seed: 5,
            workers,
            ..Default::default()
        };
        sample_annealing(&model, &config).unwrap().to_json()
    };
    let base = sa(1);
    check("sample_annealing rerun", base.clone(), sa(1));
    check("sample_annealing workers 1 vs 4", base, sa(4));

    let small = small_instance(3, MAX_ORACLE_VARS);
    let small_model = build_subwop_model(&small).unwrap();
    let exact = || solve_exact(&small_model, &SolveLimits::default()).unwrap().to_json();
    check("solve_exact", exact(), exact());

    let qi = |workers| {
        let mut config = Qi4wopConfig::default().seeded(17);
        config.sampler.num_samples = 16;
        config.sampler.workers = workers;
        run_qi4wop(&inst, &config, &AnnealingBackend)
            .unwrap()
            .population
            .to_json(&inst)
    };
    let base = qi(1);
    check("run_qi4wop rerun", base.clone(), qi(1));
    check("run_qi4wop workers 1 vs 4", base, qi(4));

    let rfs = || {
        let mut rng = seeding::rng(8);
        let s = random_feasible_solution(&inst, &mut rng, 50).unwrap();
        serde_json::to_string(&s.to_doc(&inst)).unwrap()
    };
    check("random_feasible_solution", rfs(), rfs());

    let init = || {
        let budget = InitBudget {
            time_ms: 600_000,
            target: Some(25),
            max_attempts: 50,
        };
        let mut rng = seeding::rng(4);
        classical_initialization(&inst, &budget, &mut rng)
            .population
            .to_json(&inst)
    };
    check("classical_initialization (count budget)", init(), init());

    let start_sol = {
        let mut rng = seeding::rng(8);
        random_feasible_solution(&inst, &mut rng, 50).unwrap()
    };
    let mutant = || {
        let mut rng = seeding::rng(6);
        let m = create_mutant(&start_sol, &inst, &Rational::new(1, 2), &mut rng).unwrap();
        serde_json::to_string(&m.to_doc(&inst)).unwrap()
    };
    check("create_mutant", mutant(), mutant());

    let poc = |mode, workers| {
        let mut config = PocConfig {
            init_mode: mode,
            init_time_budget_ms: 600_000,
            target_init_count: Some(20),
            local_search_budget_ms: 600_000,
            seed: 12,
            ..Default::default()
        };
        config.qi4wop.sampler.num_samples = 16;
        config.qi4wop.sampler.workers = workers;
        run_poc(&inst, &config, &AnnealingBackend).unwrap().to_json(&inst)
    };
    for mode in [InitMode::Classical, InitMode::Qi4wop] {
        let base = poc(mode, 1);
        check("run_poc rerun", base.clone(), poc(mode, 1));
        check("run_poc workers 1 vs 4", base, poc(mode, 4));
    }

    let p1 = |_: usize| {
        let config = Phase1Config {
            runs: 3,
            base_seed: 3,
            classical_budget: ClassicalBudget::Fixed(0),
            qi4wop: Qi4wopConfig {
                sampler: SamplerConfig {
                    num_samples: 8,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..Default::default()
        };
        let (_, records) = run_phase1(
            std::slice::from_ref(&inst),
            &[Method::Qi4wop],
            &config,
            &AnnealingBackend,
        )
        .unwrap();
        // wall times are measurements, not seeded outputs
        format!(
            "{:?}",
            records.iter().map(|r| (r.seed, r.num_solutions)).collect::<Vec<_>>()
        )
    };
    check("run_phase1 counts", p1(0), p1(1));

    let p2 = |workers| {
        let config = Phase2Config {
            runs: 4,
            base_seed: 3,
            poc: PocConfig {
                init_time_budget_ms: 600_000,
                local_search_budget_ms: 600_000,
                qi4wop: Qi4wopConfig {
                    sampler: SamplerConfig {
                        num_samples: 8,
                        ..Default::default()
                    },
                    ..Default::default()
                },
                ..Default::default()
            },
            workers,
        };
        run_phase2(&inst, &config, &AnnealingBackend).unwrap().to_json()
    };
    let base = p2(1);
    check("run_phase2 rerun", base.clone(), p2(1));
    check("run_phase2 workers 1 vs 4", base, p2(4));

    verdict(
        "determinism",
        start,
        Duration::from_secs(600),
        failures.is_empty(),
        if failures.is_empty() {
            "all seeded outputs byte-identical across reruns and worker counts {1, 4}".into()
        } else {
            format!("differences in: {}", failures.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected =
        |names: &[&str]| filters.is_empty() || names.iter().any(|n| filters.iter().any(|f| n.contains(f.as_str())));

    let mut verdicts = Vec::new();
    if selected(&["t1-fixture"]) {
        verdicts.push(t1_fixture());
    }
    if selected(&["oracle-correctness", "sampler-reaches-optimum"]) {
        verdicts.extend(oracle_and_sampler());
    }
    if selected(&["end-to-end-feasibility"]) {
        verdicts.push(end_to_end());
    }
    if selected(&["table1-trend"]) {
        verdicts.push(table1_trend());
    }
    if selected(&["phase2-protocol"]) {
        verdicts.push(phase_two());
    }
    if selected(&["mutant-statistics"]) {
        verdicts.push(mutant_statistics());
    }
    if selected(&["determinism"]) {
        verdicts.push(determinism());
    }

    let failed = verdicts.iter().filter(|v| !v.pass).count();
    for v in &verdicts {
        println!(
            "{} {:<24} [{:>7.1}s] {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.elapsed.as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
