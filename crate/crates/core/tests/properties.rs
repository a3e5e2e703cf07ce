mod common;

use std::collections::HashSet;

use common::{naive_scc, random_graph, random_net, shape, structured_net};
use proptest::prelude::*;
use wfnet::metrics::{density, extended_cyclomatic};
use wfnet::state_space::{brute_force_reachable, scc_of_adjacency, soundness_check, Edge, StateSpaceError};
use wfnet::structure::{fold_to_completion, replay};
use wfnet::{parse_pnml, reachability_graph, scc_decompose, write_pnml, DEFAULT_STATE_CAP};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bfs_matches_fixpoint(seed in any::<u64>()) {
        let net = random_net(seed, 12);
        let rg = reachability_graph(&net, DEFAULT_STATE_CAP).unwrap();
        let bfs: HashSet<_> = rg.vertices().iter().cloned().collect();
        prop_assert_eq!(bfs.len(), rg.vertex_count());
        prop_assert_eq!(bfs, brute_force_reachable(&net).unwrap());
    }

    #[test]
    fn workflow_bfs_matches_fixpoint(seed in any::<u64>()) {
        let wf = structured_net(seed, 12);
        let rg = reachability_graph(wf.net(), DEFAULT_STATE_CAP).unwrap();
        let bfs: HashSet<_> = rg.vertices().iter().cloned().collect();
        prop_assert_eq!(bfs, brute_force_reachable(wf.net()).unwrap());
    }

    #[test]
    fn tarjan_matches_mutual_reachability(seed in any::<u64>()) {
        let adj = random_graph(seed, 50);
        let scc = scc_of_adjacency(&adj);
        let naive = naive_scc(&adj);
        for (v, &c) in naive.iter().enumerate() {
            prop_assert_eq!(scc.component_of(v), c);
        }
        prop_assert_eq!(scc.component_count(), naive.iter().max().map_or(0, |m| m + 1));
    }

    #[test]
    fn generated_nets_are_sound(seed in any::<u64>()) {
        let wf = structured_net(seed, 12);
        let report = soundness_check(&wf, DEFAULT_STATE_CAP).unwrap();
        prop_assert!(report.sound, "{:?}", report);
    }

    #[test]
    fn density_in_unit_interval(seed in any::<u64>()) {
        let wf = structured_net(seed, 12);
        let d = density(wf.net()).unwrap();
        prop_assert!(*d.numer() > 0 && d <= wfnet::Rational::from_integer(1));
    }

    #[test]
    fn self_loop_adds_one(seed in any::<u64>(), pick in any::<usize>()) {
        let wf = structured_net(seed, 12);
        let rg = reachability_graph(wf.net(), DEFAULT_STATE_CAP).unwrap();
        let before = extended_cyclomatic(&rg, &scc_decompose(&rg)).unwrap();
        let v = pick % rg.vertex_count();
        let looped = rg.with_extra_edge(Edge { from: v, transition: 0, to: v });
        let after = extended_cyclomatic(&looped, &scc_decompose(&looped)).unwrap();
        prop_assert_eq!(after, before + 1);
    }

    #[test]
    fn folds_never_lose_weight(seed in any::<u64>()) {
        let wf = structured_net(seed, 12);
        let trace = fold_to_completion(&wf).unwrap();
        for (weight, inner) in trace.nested_weights() {
            let sum = inner.iter().fold(wfnet::Rational::from_integer(0), |a, w| a + w);
            prop_assert!(weight >= sum);
        }
        let folded = replay(&wf, &trace.steps).unwrap();
        prop_assert_eq!(folded.terminal().map(|(_, w)| w), Some(trace.weight));
    }

    #[test]
    fn pnml_round_trip(seed in any::<u64>()) {
        let wf = structured_net(seed, 12);
        let bytes = write_pnml(wf.net());
        let back = parse_pnml(&bytes).unwrap();
        prop_assert_eq!(shape(&back), shape(wf.net()));
        prop_assert_eq!(write_pnml(&back), bytes);
    }

    #[test]
    fn random_nets_round_trip(seed in any::<u64>()) {
        let net = random_net(seed, 12);
        let back = parse_pnml(&write_pnml(&net)).unwrap();
        prop_assert_eq!(shape(&back), shape(&net));
    }

    #[test]
    fn cap_is_all_or_nothing(seed in any::<u64>(), cap in 1usize..40) {
        let net = random_net(seed, 12);
        let full = reachability_graph(&net, DEFAULT_STATE_CAP).unwrap();
        match reachability_graph(&net, cap) {
            Ok(rg) => {
                prop_assert!(full.vertex_count() <= cap);
                prop_assert_eq!(rg.vertices(), full.vertices());
                prop_assert_eq!(rg.edges(), full.edges());
            }
            Err(e) => {
                prop_assert!(full.vertex_count() > cap);
                prop_assert_eq!(e, StateSpaceError::CapExceeded(cap));
            }
        }
    }
}
