#![allow(dead_code)]

use rand::Rng as _;
use wop_core::bench::{generate_instance, InstanceSpec};
use wop_core::cqm::{binary_assignment, build_subwop_model, evaluate, CqmModel};
use wop_core::model::Instance;
use wop_core::rational::Rational;
use wop_core::seeding;

pub const MAX_ORACLE_VARS: usize = 12;

/// A generated instance whose sub-problem has at most `max_vars` variables.
pub fn small_instance(seed: u64, max_vars: usize) -> Instance {
    let mut rng = seeding::rng(seed);
    let fills = [
        Rational::new(1, 2),
        Rational::new(3, 4),
        Rational::new(1, 1),
        Rational::new(13, 10),
    ];
    loop {
        let x = rng.gen_range(1..=3);
        let y = rng.gen_range(1..=6);
        let z = rng.gen_range(1..=y.min(3));
        let spec = InstanceSpec {
            capacity_fill_ratio: fills[rng.gen_range(0..fills.len())],
            area_range: (1, 6),
            seed: rng.gen(),
            ..InstanceSpec::new(x, y, z, 0)
        };
        let Ok(generated) = generate_instance(&spec) else {
            continue;
        };
        let model = build_subwop_model(&generated.instance).expect("generated instances model cleanly");
        if model.num_variables() <= max_vars {
            return generated.instance;
        }
    }
}

/// Minimum objective over all binary assignments that `evaluate` accepts.
pub fn brute_force_optimum(model: &CqmModel) -> Option<Rational> {
    let n = model.num_variables();
    assert!(n <= 20, "brute force over {n} variables");
    let mut bits = vec![0u8; n];
    let mut best: Option<Rational> = None;
    for mask in 0u32..(1 << n) {
        for (k, b) in bits.iter_mut().enumerate() {
            *b = ((mask >> k) & 1) as u8;
        }
        let e = evaluate(model, &binary_assignment(&bits)).expect("binary assignment evaluates");
        if e.feasible && best.is_none_or(|b| e.objective_value < b) {
            best = Some(e.objective_value);
        }
    }
    best
}
