use std::collections::HashSet;

use proptest::prelude::*;

use wealthca::analysis::{brute_force_oracle, structure_report};
use wealthca::ca::{generation, run_ca, CaConfig, CaStart, CaState, CompiledRule};
use wealthca::ga::{best_fitness, ga_step, init_population, run_ga, GaConfig, Solution};
use wealthca::payoff::{cell_total_payoff, expected_wealth, payoff_map, tps, wealth};
use wealthca::templates::{
    builtin_set, extract_templates, match_except_center, match_full, symmetry_orbit, transform_code, Template,
    TemplateSet,
};
use wealthca::{rng_from_seed, Dihedral, Execution, Pattern, PayoffParams, RuleVariant, Transform};

fn pattern(max_n: usize) -> impl Strategy<Value = Pattern> {
    (3..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(0u8..=1, n * n).prop_map(move |cells| Pattern::new(n, cells).unwrap())
    })
}

fn dihedral() -> impl Strategy<Value = Dihedral> {
    (0..8usize).prop_map(|k| Dihedral::ALL[k])
}

fn transform() -> impl Strategy<Value = Transform> {
    prop_oneof![
        dihedral().prop_map(Transform::Dihedral),
        (-20isize..20, -20isize..20).prop_map(|(di, dj)| Transform::Shift { di, dj }),
    ]
}

fn rule() -> impl Strategy<Value = RuleVariant> {
    prop_oneof![Just(RuleVariant::Rule8), Just(RuleVariant::Rule36), Just(RuleVariant::Rule52)]
}

proptest! {
    #[test]
    fn wealth_invariant_under_transforms(p in pattern(12), t in transform()) {
        let params = PayoffParams::default();
        prop_assert!((wealth(&p.transform(t), &params) - wealth(&p, &params)).abs() < 1e-12);
    }

    #[test]
    fn transforms_preserve_ones_and_invert(p in pattern(12), t in transform()) {
        let q = p.transform(t);
        prop_assert_eq!(q.ones(), p.ones());
        prop_assert_eq!(q.transform(t.inverse()), p.clone());
        prop_assert!(q.is_equivalent(&p));
        prop_assert_eq!(q.canonical(), p.canonical());
    }

    #[test]
    fn serialize_parse_round_trip(p in pattern(16)) {
        let text = p.serialize();
        prop_assert_eq!(text.lines().count(), p.n());
        prop_assert_eq!(Pattern::parse(&text).unwrap(), p.clone());
        prop_assert_eq!(text.trim_end().parse::<Pattern>().unwrap(), p);
    }

    #[test]
    fn tps_is_sum_of_cell_payoffs_and_bounded(p in pattern(12)) {
        let params = PayoffParams::default();
        let map = payoff_map(&p, &params);
        let total = tps(&p, &params);
        prop_assert_eq!(map.iter().sum::<f64>(), total);
        for (k, c) in p.coords().enumerate() {
            prop_assert_eq!(map[k], cell_total_payoff(&p, c, &params));
            prop_assert!((0.0..=27.0).contains(&map[k]));
        }
        prop_assert!(total <= 27.0 * p.len() as f64);
    }

    #[test]
    fn expected_wealth_never_exceeds_peak(k in 0u32..=10_000) {
        let w = expected_wealth(k as f64 / 10_000.0, &PayoffParams::default()).unwrap();
        prop_assert!((0.0..=1.125).contains(&w));
    }

    #[test]
    fn extraction_invariant_under_transforms(p in pattern(8), t in transform()) {
        let a = extract_templates(&p, true);
        let b = extract_templates(&p.transform(t), true);
        prop_assert!(a.same_members(&b));
        prop_assert!(a.is_symmetry_closed());
    }

    #[test]
    fn raw_extraction_fully_matches_every_cell(p in pattern(8)) {
        let set = extract_templates(&p, false);
        prop_assert!(set.len() <= p.len());
        for c in p.coords() {
            prop_assert!(set.iter().any(|t| match_full(&p, c, t)));
        }
    }

    #[test]
    fn template_transform_is_a_group_action(code in 0u16..512, a in dihedral(), b in dihedral()) {
        let t = Template::from_code(code, "");
        prop_assert_eq!(t.transform(a).transform(a.inverse()).code(), code);
        prop_assert_eq!(transform_code(code, a).count_ones(), code.count_ones());
        let orbit = symmetry_orbit(&t);
        prop_assert_eq!(8 % orbit.len(), 0);
        prop_assert!(orbit.contains(&t.transform(a).transform(b)));
    }

    #[test]
    fn compiled_rule_agrees_with_direct_matching(p in pattern(7), r in rule()) {
        let set = builtin_set(r);
        let rule = CompiledRule::new(&set);
        for c in p.coords() {
            let mut expected = 0u8;
            for t in set.iter() {
                if match_except_center(&p, c, t) {
                    expected |= 1 << t.center();
                }
            }
            prop_assert_eq!(rule.hits(p.window_code(c)), expected);
        }
    }

    #[test]
    fn stable_patterns_never_move(p in pattern(7), seed in any::<u64>()) {
        let set = extract_templates(&p, false);
        let rule = CompiledRule::new(&set);
        prop_assume!(rule.is_stable(&p));
        let cfg = CaConfig { seed, ..CaConfig::new(set) };
        let mut state = CaState::from_pattern(p.clone());
        let mut rng = rng_from_seed(seed);
        for _ in 0..20 {
            prop_assert_eq!(generation(&mut state, &rule, &cfg, &mut rng), 0);
        }
        prop_assert_eq!(state.pattern, p);
    }

    #[test]
    fn ca_run_records_consistent_maxima(n in 3usize..9, seed in any::<u64>(), r in rule()) {
        let cfg = CaConfig { seed, t_limit: 30, ..CaConfig::for_rule(r) };
        let out = run_ca(&cfg, &CaStart::Random { n }).unwrap();
        let best = out.trace.iter().map(|g| g.tps).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(out.tps_max, best);
        prop_assert_eq!(out.trace[out.t_max].tps, best);
        prop_assert!(out.trace[..out.t_max].iter().all(|g| g.tps < best));
        prop_assert_eq!(tps(&out.best_pattern, &cfg.params), out.tps_max);
        prop_assert_eq!(tps(&out.final_pattern, &cfg.params), out.tps_final);
        prop_assert_eq!(out.trace.len(), out.generations + 1);
        if out.stable {
            prop_assert!(CompiledRule::new(&cfg.templates).is_stable(&out.final_pattern));
        }
    }

    #[test]
    fn structure_counts_are_consistent(p in pattern(10)) {
        let r = structure_report(&p);
        prop_assert_eq!(r.ones + r.zero_cells, p.len());
        prop_assert!(r.points + 2 * r.dominoes <= r.ones);
    }
}

fn distinct_patterns(pop: &[Solution]) -> usize {
    pop.iter().map(|s| &s.pattern).collect::<HashSet<_>>().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ga_best_never_decreases_and_slots_only_improve(seed in any::<u64>(), n in 3usize..7) {
        let cfg = GaConfig { seed, ..GaConfig::default() };
        let mut rng = rng_from_seed(seed);
        let mut pop = init_population(&cfg, n, &mut rng).unwrap();
        let mut best = best_fitness(&pop);
        let mut distinct = distinct_patterns(&pop);
        for _ in 0..30 {
            let before: Vec<f64> = pop.iter().map(|s| s.fitness).collect();
            ga_step(&mut pop, &cfg, &mut rng);
            for (old, s) in before.iter().zip(&pop) {
                prop_assert!(s.fitness >= *old);
                prop_assert_eq!(s.fitness, tps(&s.pattern, &cfg.params));
            }
            let now = best_fitness(&pop);
            prop_assert!(now >= best);
            best = now;
            let count = distinct_patterns(&pop);
            prop_assert!(count >= distinct);
            distinct = count;
        }
    }

    #[test]
    fn ga_is_deterministic_and_bounded_by_oracle(seed in any::<u64>(), n in 3usize..=4) {
        let cfg = GaConfig { seed, max_iterations: 200, ..GaConfig::default() };
        let a = run_ga(&cfg, n).unwrap();
        let b = run_ga(&cfg, n).unwrap();
        prop_assert_eq!(&a.population, &b.population);
        prop_assert_eq!(a.best_found_at, b.best_found_at);
        let oracle = brute_force_oracle(n, &cfg.params, false, Execution::Sequential).unwrap();
        prop_assert!(a.best_fitness <= oracle.max_tps);
    }
}

#[test]
fn every_window_matches_consistently() {
    for r in [RuleVariant::Rule8, RuleVariant::Rule36, RuleVariant::Rule52] {
        let set = builtin_set(r);
        for code in 0u16..512 {
            let window = Template::from_code(code, "");
            let p = Pattern::from_fn(3, |i, j| window.value(i, j) == 1).unwrap();
            let c = p.coord_of(4);
            let full: Vec<&Template> = set.iter().filter(|t| match_full(&p, c, t)).collect();
            let outer: Vec<&Template> = set.iter().filter(|t| match_except_center(&p, c, t)).collect();
            assert!(full.len() <= 1);
            assert!(outer.len() <= 1, "templates of a rule never share an outer ring");
            assert!(full.iter().all(|t| outer.contains(t)));
        }
    }
}

#[test]
fn builtin_rules_are_nested_and_closed() {
    let sets: Vec<TemplateSet> = [RuleVariant::Rule8, RuleVariant::Rule36, RuleVariant::Rule52]
        .into_iter()
        .map(builtin_set)
        .collect();
    assert_eq!(sets.iter().map(TemplateSet::len).collect::<Vec<_>>(), [8, 36, 52]);
    assert!(sets[0].is_subset(&sets[1]) && sets[1].is_subset(&sets[2]));
    assert!(sets.iter().all(TemplateSet::is_symmetry_closed));
}
