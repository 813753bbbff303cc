use colorcq::check::{check_instance, random_instance, Mutation, SchemaClass, Task};
use colorcq::generate::{random_graph, rng};
use colorcq::oracle::{naive_refine, same_partition};
use colorcq::refine::{encode_loops, is_stable, refine};
use colorcq::text::{parse_constant, parse_database, render_constant, render_database};
use colorcq::IndexedDatabase;
use proptest::prelude::*;
use std::collections::BTreeSet;

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn refinement_matches_naive(n in 1usize..10, p in 0.0f64..1.0, labels in 0usize..3, seed: u64) {
        let db = random_graph(n, p, 0.3, labels, seed);
        let g = encode_loops(&db).unwrap().graph;
        let col = refine(&g);
        prop_assert!(is_stable(&g, col.colors()));
        prop_assert!(same_partition(col.colors(), &naive_refine(&g)));
    }

    #[test]
    fn constants_round_trip(s in "[ -~]{1,12}") {
        let r = render_constant(&s);
        prop_assert_eq!(parse_constant(&r).unwrap(), s);
    }

    #[test]
    fn rendered_databases_parse_back(seed: u64) {
        let (db, _) = random_instance(SchemaClass::Ternary, &mut rng(seed));
        let (back, _) = parse_database(&render_database(&db), db.schema()).unwrap();
        prop_assert_eq!(back.size(), db.size());
        let lines = |d: &colorcq::Database| render_database(d).lines().map(String::from).collect::<BTreeSet<_>>();
        prop_assert_eq!(lines(&back), lines(&db));
    }

    #[test]
    fn index_files_round_trip(seed: u64) {
        let (db, _) = random_instance(SchemaClass::Binary, &mut rng(seed));
        let text = IndexedDatabase::build(&db).unwrap().write();
        prop_assert_eq!(IndexedDatabase::read(&text).unwrap().write(), text);
    }

    #[test]
    fn random_instances_agree(class in 0usize..3, seed: u64) {
        let (db, q) = random_instance(SchemaClass::ALL[class], &mut rng(seed));
        for task in [Task::Count, Task::Enum] {
            let d = check_instance(&db, &q, task, Mutation::None).unwrap();
            prop_assert!(d.is_none(), "{:?}", d);
        }
    }
}
