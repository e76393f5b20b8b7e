mod common;

use common::{brute_force, MicroGame};
use pathcrawl::crawler::{crawl, CrawlConfig};
use proptest::prelude::*;

fn check(seed: u64, horizon: usize, dedup: bool) {
    let game = MicroGame::random(seed);
    let cfg = CrawlConfig { horizon, dedup, max_nodes: u64::MAX };
    let outcome = crawl(&game, &0, &cfg);
    assert!(!outcome.exhausted);
    // Depth-first discovery yields lexicographic move order.
    let moves: Vec<&Vec<u8>> = outcome.paths.iter().map(|(m, _)| m).collect();
    assert!(moves.windows(2).all(|w| w[0] < w[1]), "seed {seed}: not in lexicographic order");
    let mut got = outcome.paths.clone();
    got.sort();
    assert_eq!(got, brute_force(&game, 0, horizon, dedup), "seed {seed}, h {horizon}, dedup {dedup}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn crawl_matches_brute_force(seed in any::<u64>(), horizon in 1usize..=4, dedup in any::<bool>()) {
        check(seed, horizon, dedup);
    }
}

#[test]
fn dedup_only_removes_paths() {
    for seed in 0..100 {
        let game = MicroGame::random(seed);
        let with = crawl(&game, &0, &CrawlConfig { horizon: 4, dedup: true, max_nodes: u64::MAX });
        let without = crawl(&game, &0, &CrawlConfig { horizon: 4, dedup: false, max_nodes: u64::MAX });
        assert!(with.paths.iter().all(|p| without.paths.contains(p)));
        assert!(with.nodes <= without.nodes);
    }
}

#[test]
fn budget_truncates_a_prefix_of_the_search() {
    for seed in 0..50 {
        let game = MicroGame::random(seed);
        let full = crawl(&game, &0, &CrawlConfig { horizon: 4, dedup: false, max_nodes: u64::MAX });
        let cut = crawl(&game, &0, &CrawlConfig { horizon: 4, dedup: false, max_nodes: 5 });
        assert_eq!(cut.exhausted, full.nodes > 5);
        assert!(full.paths.starts_with(&cut.paths));
    }
}
