use linkmoe::graph::{parse_edge_list, Graph, Pair};
use proptest::prelude::*;

fn arb_pairs() -> impl Strategy<Value = (usize, Vec<Pair>)> {
    (2usize..30).prop_flat_map(|n| {
        let pair = (0..n, 0..n).prop_filter("no self pairs", |(u, v)| u != v);
        (Just(n), prop::collection::vec(pair, 0..100))
    })
}

proptest! {
    #[test]
    fn reversal_and_duplication_are_absorbed((n, pairs) in arb_pairs()) {
        let g = Graph::from_pairs(&pairs, n).unwrap();
        let mut doubled = pairs.clone();
        doubled.extend(pairs.iter().map(|&(u, v)| (v, u)));
        doubled.extend_from_slice(&pairs);
        prop_assert_eq!(Graph::from_pairs(&doubled, n).unwrap(), g);
    }

    #[test]
    fn degrees_sum_to_twice_the_edges((n, pairs) in arb_pairs()) {
        let g = Graph::from_pairs(&pairs, n).unwrap();
        let total: usize = (0..n).map(|v| g.degree(v).unwrap()).sum();
        prop_assert_eq!(total, 2 * g.edge_count());
        for v in 0..n {
            let nb = g.neighbors(v);
            prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(nb.iter().all(|&w| w != v && g.has_edge(w, v)));
        }
    }

    #[test]
    fn edge_list_round_trip((n, pairs) in arb_pairs()) {
        let g = Graph::from_pairs(&pairs, n).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = parse_edge_list(buf.as_slice()).unwrap();
        prop_assert_eq!(Graph::from_pairs(&back, n).unwrap(), g);
    }
}
