//! Property tests for the format round-trips, replay conservation laws,
//! substitution arithmetic, and the energy-model algebra.

mod common;

use std::collections::BTreeMap;

use icx::cache::{simulate, simulate_sweep, AccessStats, Associativity, CacheConfig, Replacement};
use icx::ci::{enumerate_candidates, greedy_select, substitute, CiConstraints, CiSelection};
use icx::energy::{
    downsize_decision, dyn_energy_reduction, energy, sweep_report, EnergyParams,
};
use icx::program::{
    DynamicTrace, GeneratorSpec, InstructionRecord, OpcodeClass, StaticProgram, TraceRun,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn record_strategy(index: u32) -> impl Strategy<Value = InstructionRecord> {
    (
        0..5u8,
        proptest::option::of(0..32u8),
        proptest::collection::vec(0..32u8, 0..=2),
        0..8u32,
    )
        .prop_map(move |(class, dst, srcs, ci)| {
            let (opcode_class, ci_id, srcs) = match class {
                0 => (OpcodeClass::Load, None, srcs),
                1 => (OpcodeClass::Store, None, srcs),
                2 => (OpcodeClass::Branch, None, srcs),
                3 => (OpcodeClass::Custom, Some(ci), {
                    let mut s = srcs;
                    s.extend_from_slice(&[4, 5]); // customs may exceed two sources
                    s
                }),
                _ => (OpcodeClass::Arithmetic, None, srcs),
            };
            InstructionRecord {
                index,
                opcode_class,
                ci_id,
                dst,
                srcs,
            }
        })
}

fn program_strategy() -> impl Strategy<Value = StaticProgram> {
    (1usize..24, prop_oneof![Just(2u32), Just(4), Just(8)], 0u64..4096)
        .prop_flat_map(|(len, width, base)| {
            let records: Vec<_> = (0..len as u32).map(record_strategy).collect();
            (records, Just(width), Just(base))
        })
        .prop_map(|(records, width, base)| {
            StaticProgram::with_base(records, width, base).expect("strategy emits valid programs")
        })
}

fn runs_strategy(program_len: u32) -> impl Strategy<Value = Vec<TraceRun>> {
    proptest::collection::vec(
        (0..program_len, 0..program_len, 1..40u32),
        0..12,
    )
    .prop_map(move |triples| {
        triples
            .into_iter()
            .map(|(a, b, count)| TraceRun {
                first: a.min(b),
                last: a.max(b),
                count,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn program_text_round_trips(program in program_strategy()) {
        let reparsed = StaticProgram::parse(&program.to_text()).unwrap();
        prop_assert_eq!(program, reparsed);
    }

    #[test]
    fn trace_text_round_trips_and_counts(runs in runs_strategy(64)) {
        let trace = DynamicTrace::from_runs(runs, 64).unwrap();
        let expected: u64 = trace
            .runs()
            .iter()
            .map(|r| u64::from(r.last - r.first + 1) * u64::from(r.count))
            .sum();
        prop_assert_eq!(trace.total_accesses(), expected);
        prop_assert_eq!(trace.events().count() as u64, expected);
        let reparsed = DynamicTrace::parse(&trace.to_text(), 64).unwrap();
        prop_assert_eq!(trace, reparsed);
    }

    #[test]
    fn addresses_follow_the_stride(
        len in 1u32..64,
        width in prop_oneof![Just(1u32), Just(2), Just(4), Just(8)],
        base in 0u64..1_000_000,
        index in 0u32..64,
    ) {
        let index = index % len;
        let records = (0..len)
            .map(|i| InstructionRecord {
                index: i,
                opcode_class: OpcodeClass::Arithmetic,
                ci_id: None,
                dst: None,
                srcs: vec![],
            })
            .collect();
        let program = StaticProgram::with_base(records, width, base).unwrap();
        prop_assert_eq!(program.address(index), base + u64::from(index) * u64::from(width));
    }

    #[test]
    fn replay_conserves_events_and_is_deterministic(
        seed in any::<u64>(),
        capacity_log in 0u32..6,
        ways_sel in 0u8..4,
        fifo in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let program = common::random_program(&mut rng, 512);
        let trace = common::random_uniform_trace(&mut rng, program.len(), 600);
        let config = CacheConfig {
            capacity: 1024 << capacity_log,
            block_size: 32,
            associativity: match ways_sel {
                0 => Associativity::Ways(1),
                1 => Associativity::Ways(2),
                2 => Associativity::Ways(4),
                _ => Associativity::Full,
            },
            replacement: if fifo { Replacement::Fifo } else { Replacement::Lru },
            instruction_width: 4,
        };
        let first = simulate(&program, &trace, &config).unwrap();
        prop_assert_eq!(first.total(), trace.total_accesses());
        let second = simulate(&program, &trace, &config).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn substitution_arithmetic_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let program = common::random_program(&mut rng, 24);
        let trace = common::random_loopish_trace(&mut rng, program.len(), 160);
        let constraints = CiConstraints {
            max_len: 5,
            max_inputs: 8,
            max_outputs: 4,
            forbid_classes: vec![OpcodeClass::Load, OpcodeClass::Store, OpcodeClass::Branch],
        };
        let candidates = enumerate_candidates(&program, &trace, &constraints).unwrap();
        let selection = greedy_select(&candidates, None);
        let rewrite = substitute(&program, &trace, &selection).unwrap();

        let collapsed: u64 = selection
            .items()
            .iter()
            .map(|s| u64::from(s.candidate.length) - 1)
            .sum();
        prop_assert_eq!(
            rewrite.code_size_after as u64 + collapsed,
            rewrite.code_size_before as u64
        );

        let saved: u64 = selection
            .items()
            .iter()
            .map(|s| (u64::from(s.candidate.length) - 1) * s.candidate.exec_count)
            .sum();
        prop_assert_eq!(rewrite.trace.total_accesses() + saved, trace.total_accesses());
        prop_assert!(rewrite.trace.total_accesses() <= trace.total_accesses());
        if selection.items().iter().any(|s| s.candidate.exec_count > 0) {
            prop_assert!(rewrite.trace.total_accesses() < trace.total_accesses());
        }
        // the index map is total and monotone outside collapsed ranges
        prop_assert_eq!(rewrite.index_map.len(), rewrite.code_size_before);
        prop_assert!(rewrite.index_map.iter().all(|&i| (i as usize) < rewrite.code_size_after));
    }

    #[test]
    fn greedy_is_deterministic_and_budget_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let program = common::random_program(&mut rng, 20);
        let trace = common::random_loopish_trace(&mut rng, program.len(), 120);
        let constraints = CiConstraints {
            max_len: 4,
            max_inputs: 8,
            max_outputs: 4,
            forbid_classes: vec![OpcodeClass::Load, OpcodeClass::Store, OpcodeClass::Branch],
        };
        let candidates = enumerate_candidates(&program, &trace, &constraints).unwrap();
        prop_assert_eq!(
            greedy_select(&candidates, Some(3)),
            greedy_select(&candidates, Some(3))
        );
        let mut last_total = trace.total_accesses();
        for budget in 0..=candidates.len() {
            let selection = greedy_select(&candidates, Some(budget));
            let rewrite = substitute(&program, &trace, &selection).unwrap();
            prop_assert!(
                rewrite.trace.total_accesses() <= last_total,
                "a larger budget must never fetch more"
            );
            last_total = rewrite.trace.total_accesses();
        }
        // unlimited equals the largest budget
        let unlimited = greedy_select(&candidates, None);
        prop_assert_eq!(greedy_select(&candidates, Some(candidates.len())), unlimited);
    }

    #[test]
    fn energy_is_linear_and_scales(
        hits_a in 0u64..1_000_000,
        misses_a in 0u64..10_000,
        hits_b in 0u64..1_000_000,
        misses_b in 0u64..10_000,
        scale in 1u64..500,
        size_sel in 0usize..6,
    ) {
        let params = EnergyParams::builtin_45nm();
        let size = *params.per_size.keys().nth(size_sel).unwrap();
        let a = AccessStats { hits: hits_a, misses: misses_a };
        let b = AccessStats { hits: hits_b, misses: misses_b };
        let ab = AccessStats { hits: hits_a + hits_b, misses: misses_a + misses_b };
        let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * y.abs().max(f64::MIN_POSITIVE);

        let ea = energy(&a, size, &params).unwrap();
        let eb = energy(&b, size, &params).unwrap();
        let eab = energy(&ab, size, &params).unwrap();
        prop_assert!(rel(eab.total_energy_nj, ea.total_energy_nj + eb.total_energy_nj));

        let scaled = AccessStats { hits: a.hits * scale, misses: a.misses * scale };
        let es = energy(&scaled, size, &params).unwrap();
        prop_assert!(rel(es.total_energy_nj, ea.total_energy_nj * scale as f64));
        if a.total() > 0 {
            prop_assert!(rel(es.amat_ns, ea.amat_ns));
        }
        // per-size parameters are the only size-dependent factor
        if a.total() > 0 {
            let per_access = a.hits as f64 + params.k_factor * a.misses as f64;
            let point = params.point(size).unwrap();
            prop_assert!(rel(ea.total_energy_nj, per_access * point.hit_energy_nj));
        }
    }

    #[test]
    fn miss_to_hit_ratio_is_the_k_factor(size_sel in 0usize..6, k in 50.0f64..200.0) {
        let mut params = EnergyParams::builtin_45nm();
        params.k_factor = k;
        let size = *params.per_size.keys().nth(size_sel).unwrap();
        let ratio = params.miss_energy_nj(size).unwrap() / params.point(size).unwrap().hit_energy_nj;
        prop_assert!((ratio - k).abs() <= 1e-12 * k);
        let ratio = params.miss_penalty_ns(size).unwrap() / params.point(size).unwrap().hit_delay_ns;
        prop_assert!((ratio - k).abs() <= 1e-12 * k);
    }

    #[test]
    fn downsize_decision_is_monotone_in_candidate_amat(
        baseline in 0.0f64..100.0,
        candidate in 0.0f64..100.0,
        drop in 0.0f64..50.0,
    ) {
        let v1 = downsize_decision(baseline, candidate, (32768, 16384));
        let v2 = downsize_decision(baseline, (candidate - drop).max(0.0), (32768, 16384));
        prop_assert!(!v1.accepted || v2.accepted, "lowering candidate AMAT flipped accept -> reject");
        prop_assert_eq!(v1.accepted, candidate <= baseline);
    }

    #[test]
    fn reduction_is_antisymmetric_through_the_ratio(
        hits_s in 1u64..1_000_000, misses_s in 0u64..10_000,
        hits_l in 1u64..1_000_000, misses_l in 0u64..10_000,
    ) {
        let params = EnergyParams::builtin_45nm();
        let small = energy(&AccessStats { hits: hits_s, misses: misses_s }, 16384, &params).unwrap();
        let large = energy(&AccessStats { hits: hits_l, misses: misses_l }, 32768, &params).unwrap();
        let r = small.total_energy_nj / large.total_energy_nj;
        let forward = dyn_energy_reduction(&small, &large).unwrap();
        let backward = dyn_energy_reduction(&large, &small).unwrap();
        prop_assert!((forward - 100.0 * (1.0 - r)).abs() <= 1e-9);
        prop_assert!((backward - 100.0 * (1.0 - 1.0 / r)).abs() <= 1e-9);
    }
}

/// Baseline rows never depend on the CI stage; with no CIs the sweep report
/// shows zero saving at every size.
#[test]
fn baseline_sweep_is_invariant_to_ci_stage() {
    let (program, trace) = GeneratorSpec::HotCold {
        hot_len: 8,
        cold_len: 120,
        hot_repeats: 64,
    }
    .synthesize(0)
    .unwrap();
    let template = CacheConfig::default();
    let sizes = [1024u64, 4096, 32768];
    let baseline = simulate_sweep(&program, &trace, &sizes, &template).unwrap();

    let identity = substitute(&program, &trace, &CiSelection::empty()).unwrap();
    let as_baseline =
        simulate_sweep(&identity.program, &identity.trace, &sizes, &template).unwrap();
    assert_eq!(baseline, as_baseline);

    let params = EnergyParams::builtin_45nm();
    let report = sweep_report(&baseline, &as_baseline, &params).unwrap();
    for row in &report.rows {
        assert_eq!(row.energy_saving_pct, 0.0);
        assert_eq!(row.baseline, row.extended);
    }
    let stats: BTreeMap<u64, AccessStats> = baseline;
    assert!(stats.values().all(|s| s.total() == trace.total_accesses()));
}
