use embedplan_core::cartesian::{CartesianGroup, PhysicalTable, DEFAULT_PRODUCT_CAP_BYTES};
use embedplan_core::engine::{EmbeddingStore, Query};
use embedplan_core::model::{
    load_spec, random_instance, spec_to_json, CapacityRegime, ElemBits, MemoryHierarchySpec,
    ModelSpec, TableId, TableSpec,
};
use embedplan_core::planner::{
    allocate_to_banks, brute_force_plan, heuristic_plan, no_cartesian_plan, validate_plan,
    PlacementPlan, PlanDocument, PlannerConfig,
};
use embedplan_core::simulator::{simulate_lookup, simulate_stages, Stage};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bits() -> impl Strategy<Value = ElemBits> {
    prop_oneof![Just(ElemBits::B16), Just(ElemBits::B32)]
}

fn model_strategy(max_tables: usize, max_rows: u64) -> impl Strategy<Value = ModelSpec> {
    (
        prop::collection::vec((1..=max_rows, 1u32..=8, bits()), 1..=max_tables),
        prop::collection::vec(1u32..=8, 0..=2),
        1u32..=2,
    )
        .prop_map(|(tables, hidden, lpt)| {
            let tables = tables
                .into_iter()
                .enumerate()
                .map(|(i, (r, d, b))| TableSpec::new(i, r, d, b).unwrap())
                .collect();
            ModelSpec::new(tables, hidden, lpt).unwrap()
        })
}

fn hierarchy_strategy() -> impl Strategy<Value = MemoryHierarchySpec> {
    (
        1usize..=40,
        0usize..=3,
        0usize..=6,
        1u64..=1 << 20,
        1.0f64..=1000.0,
        0.1f64..=1.0,
    )
        .prop_map(
            |(hbm, ddr, banks, bank_cap, dram, frac)| MemoryHierarchySpec {
                hbm_channels: hbm,
                ddr_channels: ddr,
                onchip_banks: banks,
                onchip_bank_capacity: bank_cap,
                dram_access_ns: dram,
                onchip_access_ns: dram * frac,
                ..MemoryHierarchySpec::default()
            },
        )
}

/// A plan with products over `pairs` of table ids, allocated greedily.
fn plan_with_pairs(
    model: &ModelSpec,
    h: &MemoryHierarchySpec,
    pairs: &[(usize, usize)],
) -> PlacementPlan {
    let mut used = vec![false; model.num_tables()];
    let mut physical = Vec::new();
    for &(a, b) in pairs {
        if a == b || used[a] || used[b] {
            continue;
        }
        let (ta, tb) = (model.table(TableId(a)), model.table(TableId(b)));
        if let Ok(g) = CartesianGroup::new(&[ta, tb], DEFAULT_PRODUCT_CAP_BYTES) {
            used[a] = true;
            used[b] = true;
            physical.push(PhysicalTable::group(g));
        }
    }
    physical.extend(
        model
            .tables
            .iter()
            .filter(|t| !used[t.id.0])
            .map(PhysicalTable::single),
    );
    allocate_to_banks(model, physical, h).expect("default hierarchy holds small models")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spec_json_round_trips(model in model_strategy(12, 1 << 20), h in hierarchy_strategy()) {
        let text = spec_to_json(&model, &h);
        let (m2, h2) = load_spec(&text).unwrap();
        prop_assert_eq!(&m2, &model);
        prop_assert_eq!(h2, h);
        prop_assert_eq!(spec_to_json(&m2, &h2), text);
    }

    #[test]
    fn product_index_is_a_bijection(rows in prop::collection::vec(1u64..=12, 2..=3)) {
        let tables: Vec<TableSpec> = rows
            .iter()
            .enumerate()
            .map(|(i, &r)| TableSpec::new(i, r, 2, ElemBits::B32).unwrap())
            .collect();
        let refs: Vec<&TableSpec> = tables.iter().collect();
        let g = CartesianGroup::new(&refs, DEFAULT_PRODUCT_CAP_BYTES).unwrap();
        prop_assert_eq!(g.combined_rows(), rows.iter().product::<u64>());
        let mut seen = vec![false; g.combined_rows() as usize];
        for flat in 0..g.combined_rows() {
            let digits = g.split_index(flat).unwrap();
            prop_assert_eq!(g.product_index(&digits).unwrap(), flat);
            prop_assert!(!seen[flat as usize]);
            seen[flat as usize] = true;
        }
        prop_assert!(g.split_index(g.combined_rows()).is_err());
    }

    #[test]
    fn products_preserve_lookups(
        model in model_strategy(6, 40),
        pairs in prop::collection::vec((0usize..6, 0usize..6), 0..=3),
        seed in any::<u64>(),
    ) {
        let n = model.num_tables();
        let pairs: Vec<_> = pairs.into_iter().filter(|&(a, b)| a < n && b < n).collect();
        let h = MemoryHierarchySpec::default();
        let (base, _) = no_cartesian_plan(&model, &h).unwrap();
        let plan = plan_with_pairs(&model, &h, &pairs);
        validate_plan(&model, &h, &plan, DEFAULT_PRODUCT_CAP_BYTES).unwrap();

        let a = EmbeddingStore::<f32>::build(&model, &base, seed).unwrap();
        let b = EmbeddingStore::<f32>::build(&model, &plan, seed).unwrap();
        for t in &model.tables {
            for row in 0..t.rows {
                prop_assert_eq!(a.logical_row(t.id, row).unwrap(), b.logical_row(t.id, row).unwrap());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let q = Query::random(&model, &mut rng);
            let (va, vb) = (a.lookup_concat(&q).unwrap(), b.lookup_concat(&q).unwrap());
            prop_assert_eq!(va.len(), model.concat_length());
            prop_assert_eq!(&va, &vb);
            prop_assert_eq!(&vb, &b.lookup_concat_parallel(&q).unwrap());
        }
    }

    #[test]
    fn concat_map_tiles_the_output(model in model_strategy(10, 1000), pairs in prop::collection::vec((0usize..10, 0usize..10), 0..=4)) {
        let n = model.num_tables();
        let pairs: Vec<_> = pairs.into_iter().filter(|&(a, b)| a < n && b < n).collect();
        let plan = plan_with_pairs(&model, &MemoryHierarchySpec::default(), &pairs);
        let lpt = model.lookups_per_table as usize;
        let expected: usize = model.tables.iter().map(|t| t.dim as usize).sum::<usize>() * lpt;
        prop_assert_eq!(model.concat_length(), expected);
        let mut covered = vec![0u8; expected];
        for s in &plan.concat_map {
            prop_assert_eq!(s.output_offset, model.concat_offset(s.table));
            prop_assert_eq!(s.len, model.table(s.table).dim as usize);
            for j in 0..lpt {
                for k in 0..s.len {
                    covered[s.output_offset + j * s.len + k] += 1;
                }
            }
        }
        prop_assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn plan_documents_round_trip(model in model_strategy(10, 1000), pairs in prop::collection::vec((0usize..10, 0usize..10), 0..=4)) {
        let n = model.num_tables();
        let pairs: Vec<_> = pairs.into_iter().filter(|&(a, b)| a < n && b < n).collect();
        let h = MemoryHierarchySpec::default();
        let plan = plan_with_pairs(&model, &h, &pairs);
        let cost = embedplan_core::planner::cost(&plan, &h);
        let doc = PlanDocument::new(&plan, &cost);
        let text = serde_json::to_string(&doc).unwrap();
        let back: PlanDocument = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_plan(&model, &h, DEFAULT_PRODUCT_CAP_BYTES).unwrap(), plan);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emitted_plans_are_valid(n in 1usize..=12, seed in any::<u64>(), tight in any::<bool>()) {
        let regime = if tight { CapacityRegime::Tight } else { CapacityRegime::Ample };
        let (model, h) = random_instance(n, seed, regime).unwrap();
        let cfg = PlannerConfig::default();
        let heuristic = heuristic_plan(&model, &h, &cfg);
        let baseline = no_cartesian_plan(&model, &h);
        for (plan, cost) in [&heuristic, &baseline].into_iter().flatten() {
            validate_plan(&model, &h, plan, cfg.product_cap_bytes).unwrap();
            prop_assert_eq!(simulate_lookup(plan, &h, 1, 0.0).per_query_ns, cost.lookup_latency_ns);
        }
        // The baseline is one of the heuristic's candidates.
        if let (Ok((_, hc)), Ok((_, bc))) = (&heuristic, &baseline) {
            prop_assert!(hc.lookup_latency_ns <= bc.lookup_latency_ns);
        }
    }

    #[test]
    fn oracle_dominates_heuristic(n in 1usize..=6, seed in any::<u64>(), tight in any::<bool>()) {
        let regime = if tight { CapacityRegime::Tight } else { CapacityRegime::Ample };
        let (model, h) = random_instance(n, seed, regime).unwrap();
        let cfg = PlannerConfig::default();
        if let Ok((hp, hc)) = heuristic_plan(&model, &h, &cfg) {
            let (bp, bc) = brute_force_plan(&model, &h, &cfg).expect("oracle finds what the heuristic finds");
            validate_plan(&model, &h, &bp, cfg.product_cap_bytes).unwrap();
            validate_plan(&model, &h, &hp, cfg.product_cap_bytes).unwrap();
            prop_assert!(
                bc.lookup_latency_ns < hc.lookup_latency_ns
                    || (bc.lookup_latency_ns == hc.lookup_latency_ns && bc.total_bytes <= hc.total_bytes)
            );
        }
    }

    #[test]
    fn more_channels_never_slow_the_heuristic(n in 1usize..=40, seed in any::<u64>()) {
        let (model, h) = random_instance(n, seed, CapacityRegime::Ample).unwrap();
        let wider = MemoryHierarchySpec { hbm_channels: h.hbm_channels + 1, ..h };
        let cfg = PlannerConfig::default();
        let (_, narrow) = heuristic_plan(&model, &h, &cfg).unwrap();
        let (_, wide) = heuristic_plan(&model, &wider, &cfg).unwrap();
        prop_assert!(wide.lookup_latency_ns <= narrow.lookup_latency_ns);
    }

    #[test]
    fn faster_stages_never_hurt(stages in prop::collection::vec(1.0f64..1e4, 1..=8), idx in 0usize..8, cut in 0.0f64..1.0, items in 1u64..1000) {
        let mk = |ns: &[f64]| -> Vec<Stage> { ns.iter().map(|&n| Stage::new("s", n)).collect() };
        let base = simulate_stages(&mk(&stages), items).unwrap();
        let mut faster = stages.clone();
        let i = idx % faster.len();
        faster[i] *= 1.0 - cut * 0.99;
        let f = simulate_stages(&mk(&faster), items).unwrap();
        prop_assert!(f.single_item_latency_ns <= base.single_item_latency_ns);
        prop_assert!(f.makespan_ns <= base.makespan_ns);
        prop_assert!(f.steady_throughput_items_per_s >= base.steady_throughput_items_per_s);
        if stages.len() > 1 {
            let mut fewer = stages.clone();
            fewer.remove(i);
            let r = simulate_stages(&mk(&fewer), items).unwrap();
            prop_assert!(r.makespan_ns <= base.makespan_ns);
            prop_assert!(r.steady_throughput_items_per_s >= base.steady_throughput_items_per_s);
        }
        let max = stages.iter().cloned().fold(0.0, f64::max);
        let unequal = stages.iter().any(|&s| s != stages[0]);
        if unequal {
            prop_assert!(base.steady_throughput_items_per_s != 1e9 / base.single_item_latency_ns);
        }
        prop_assert_eq!(base.makespan_ns, base.single_item_latency_ns + (items - 1) as f64 * max);
    }
}
