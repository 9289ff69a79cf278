use std::collections::VecDeque;

use proptest::prelude::*;
use wallmem::embed::{find_odd_cycle, validate_embedding, HardwareGraph, SearchBudget, SearchOptions};

/// Plain BFS two-colouring, independent of the library's.
fn bipartite(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut color = vec![-1i8; n];
    for root in 0..n {
        if color[root] >= 0 {
            continue;
        }
        color[root] = 0;
        let mut q = VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u] {
                if color[v] < 0 {
                    color[v] = 1 - color[u];
                    q.push_back(v);
                } else if color[v] == color[u] {
                    return false;
                }
            }
        }
    }
    true
}

fn graphs() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (3usize..40).prop_flat_map(|n| {
        let edge = (0..n, 0..n).prop_filter("no loops", |(u, v)| u != v);
        (Just(n), prop::collection::vec(edge, 0..3 * n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn results_are_valid_and_match_bipartiteness((n, edges) in graphs(), seed in any::<u64>()) {
        let g = HardwareGraph::from_edges("g", n, &edges).unwrap();
        let opts = SearchOptions { budget: SearchBudget::Iterations(2000), seed, ..Default::default() };
        let found = find_odd_cycle(&g, &opts);
        prop_assert_eq!(found.is_none(), bipartite(n, &edges));
        if let Some(c) = found {
            prop_assert!(validate_embedding(&g, &c.cycle).is_ok());
            prop_assert_eq!(c.length, c.cycle.len());
            prop_assert_eq!(find_odd_cycle(&g, &opts), Some(c));
        }
    }

    #[test]
    fn bipartite_graphs_yield_nothing(
        (left, right) in (1usize..20, 1usize..20),
        picks in prop::collection::vec((any::<prop::sample::Index>(), any::<prop::sample::Index>()), 0..80),
    ) {
        let edges: Vec<_> = picks.iter().map(|(a, b)| (a.index(left), left + b.index(right))).collect();
        let g = HardwareGraph::from_edges("b", left + right, &edges).unwrap();
        prop_assert!(find_odd_cycle(&g, &SearchOptions::default()).is_none());
    }

    #[test]
    fn min_length_is_respected((n, edges) in graphs(), min in 3usize..30) {
        let g = HardwareGraph::from_edges("g", n, &edges).unwrap();
        let opts = SearchOptions { min_length: min, budget: SearchBudget::Iterations(2000), ..Default::default() };
        if let Some(c) = find_odd_cycle(&g, &opts) {
            prop_assert!(c.length >= min);
        }
    }
}
