mod common;

use common::brute_delaunay;
use geoecc::canonical::build_canonical;
use geoecc::eccentricity::full_report;
use geoecc::netgen::{parse, write_network, LocalizedNetwork};
use geoecc::{CommGraph, Point2};
use proptest::prelude::*;

/// Random positions joined by a path plus arbitrary chords.
fn network() -> impl Strategy<Value = LocalizedNetwork> {
    (3usize..24)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((0.0..20.0f64, 0.0..8.0f64), n),
                prop::collection::vec((0..n, 0..n), 0..2 * n),
            )
        })
        .prop_map(|(pts, chords)| {
            let n = pts.len();
            let edges = (1..n)
                .map(|i| (i - 1, i))
                .chain(chords.into_iter().filter(|(a, b)| a != b));
            LocalizedNetwork::from_positions(
                pts.into_iter().map(|(x, y)| Point2::new(x, y)).collect(),
                CommGraph::from_edges(n, edges).unwrap(),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn localities_are_ordered(net in network()) {
        let r = full_report(&net).unwrap();
        prop_assert!(r.k_e <= r.k_g);
        prop_assert!(r.k_g <= r.d);
        prop_assert!(build_canonical(&net, r.d).unwrap().forbidden.is_empty());
    }

    #[test]
    fn delaunay_edges_match_oracle(net in network()) {
        let sub = geoecc::eccentricity::subdivision(&net).unwrap();
        prop_assert_eq!(sub.delaunay_edges(), &brute_delaunay(&net.apparent_positions));
    }

    #[test]
    fn text_format_round_trips(net in network()) {
        let back = parse(&write_network(&net)).unwrap();
        prop_assert_eq!(&back.apparent_positions, &net.apparent_positions);
        prop_assert_eq!(full_report(&back).unwrap(), full_report(&net).unwrap());
    }
}
