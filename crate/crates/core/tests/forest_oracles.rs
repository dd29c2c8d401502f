mod common;

use common::{cart_oracle, duplicate_by_weight, random_table, shape};
use dalsa_core::forest::{train_forest, train_tree, ForestParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exact_params(d: usize, max_depth: usize) -> ForestParams {
    ForestParams {
        n_trees: 1,
        mtry: Some(d),
        max_depth,
        bootstrap: false,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_exhaustive_search(seed in any::<u64>(), n in 2usize..=12, d in 1usize..=2, depth in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(&mut rng, n, d, 2, 3);
        let tree = train_tree(&table, &exact_params(d, depth), seed).unwrap();
        prop_assert_eq!(tree, cart_oracle(&table, depth));
    }

    #[test]
    fn integer_weights_equal_duplicated_rows(seed in any::<u64>(), n in 2usize..=15, d in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(&mut rng, n, d, 3, 4);
        let dup = duplicate_by_weight(&table);
        let params = ForestParams { n_trees: 3, bootstrap: false, max_depth: 5, seed, ..Default::default() };
        let a = train_forest(&table, &params).unwrap().to_json().unwrap();
        let b = train_forest(&dup, &params).unwrap().to_json().unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn weight_scaling_keeps_splits(seed in any::<u64>(), n in 2usize..=30, k in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = random_table(&mut rng, n, 3, 3, 5);
        let scaled = table.clone().with_weights(table.weights().iter().map(|w| w * k).collect()).unwrap();
        let params = ForestParams { n_trees: 4, max_depth: 6, seed, ..Default::default() };
        let a = train_forest(&table, &params).unwrap();
        let b = train_forest(&scaled, &params).unwrap();
        for (ta, tb) in a.trees.iter().zip(&b.trees) {
            prop_assert_eq!(shape(ta), shape(tb));
        }
    }
}

#[test]
fn thread_count_does_not_change_forest() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let table = random_table(&mut rng, 200, 4, 2, 3);
    let params = ForestParams {
        n_trees: 40,
        max_depth: 6,
        seed: 9,
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train_forest(&table, &params).unwrap().to_json().unwrap())
    };
    assert_eq!(run(1), run(4));
}
