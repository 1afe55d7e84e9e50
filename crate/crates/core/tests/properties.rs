//! Randomized invariants for the compiler and the engine. Every network is
//! built from a seed, so failures reproduce from the printed seed alone.

use std::sync::Arc;

use cliquetree::generate::{random_evidence, random_network, GeneratorConfig};
use cliquetree::oracle::{joint, oracle_posteriors};
use cliquetree::{
    compile, is_chordal, mcs_order, merge_networks, moralize, parse_network, query, query_with_mode, serialize_network,
    triangulate, validate, AbsorptionMode, EvidenceSet, InferenceSession, UndirectedGraph,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_network(seed: u64, max_nodes: usize, max_card: usize) -> cliquetree::BeliefNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let nodes = rng.gen_range(1..=max_nodes);
    let arcs = rng.gen_range(0..=nodes * 2);
    random_network(GeneratorConfig { nodes, arcs, max_card, seed })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_is_exact(seed in any::<u64>()) {
        let net = small_network(seed, 10, 4);
        let text = serialize_network(&net);
        let back = parse_network(&text).unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(serialize_network(&back), text);
    }

    #[test]
    fn topological_order_puts_parents_first(seed in any::<u64>()) {
        let net = small_network(seed, 12, 3);
        let order = net.topological_order();
        let mut position = vec![0; net.len()];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        for (p, c) in net.arcs() {
            prop_assert!(position[p] < position[c]);
        }
    }

    #[test]
    fn merge_adds_counts_and_validates(a in any::<u64>(), b in any::<u64>()) {
        let left = small_network(a, 6, 3);
        let right = small_network(b, 6, 3);
        let merged = merge_networks(&left, &right).unwrap();
        prop_assert_eq!(merged.len(), left.len() + right.len());
        prop_assert_eq!(merged.arc_count(), left.arc_count() + right.arc_count());
        prop_assert!(validate(&merged.to_document()).is_valid());
    }

    #[test]
    fn moral_graph_marries_parents(seed in any::<u64>()) {
        let net = small_network(seed, 12, 2);
        let g = moralize(&net);
        for v in 0..net.len() {
            let ps = net.parents(v);
            for &p in ps {
                prop_assert!(g.has_edge(p, v));
                for &q in ps {
                    prop_assert!(p == q || g.has_edge(p, q));
                }
            }
        }
    }

    #[test]
    fn triangulation_is_chordal(n in 1usize..14, density in 0.0f64..0.7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = UndirectedGraph::new(n);
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(density) {
                    g.add_edge(a, b);
                }
            }
        }
        let (h, fill) = triangulate(&g, &mcs_order(&g));
        prop_assert!(is_chordal(&h));
        prop_assert_eq!(h.edge_count(), g.edge_count() + fill.len());
        // Already chordal graphs gain nothing.
        let again = triangulate(&h, &mcs_order(&h)).1;
        prop_assert!(again.is_empty());
    }

    #[test]
    fn forest_structure_invariants(seed in any::<u64>()) {
        let net = small_network(seed, 12, 3);
        let compiled = compile(&net).unwrap();
        let forest = &compiled.forest;
        prop_assert!(forest.has_running_intersection());
        for (i, clique) in forest.cliques().iter().enumerate() {
            prop_assert!(compiled.triangulated.is_complete_subgraph(&clique.variables));
            prop_assert_eq!(clique.potential.scope(), clique.variables.as_slice());
            if let Some(p) = forest.parent(i) {
                prop_assert!(p < i);
                let parent_vars = &forest.cliques()[p].variables;
                let expected: Vec<usize> = clique.variables.iter().copied().filter(|v| parent_vars.contains(v)).collect();
                prop_assert_eq!(forest.separator(i).unwrap().scope(), expected.as_slice());
            }
        }
        for v in 0..net.len() {
            let mut family = net.parents(v).to_vec();
            family.push(v);
            prop_assert!(forest.cliques().iter().any(|c| family.iter().all(|f| c.variables.contains(f))));
        }
    }

    #[test]
    fn forest_reconstructs_joint(seed in any::<u64>()) {
        let net = small_network(seed, 6, 3);
        let compiled = compile(&net).unwrap();
        let table = joint(&net).unwrap();
        let mut worst: f64 = 0.0;
        table.for_each(|assignment, p| {
            worst = worst.max((compiled.forest.evaluate(assignment) - p).abs());
        });
        prop_assert!(worst <= 1e-12, "max deviation {worst}");
    }

    #[test]
    fn compilation_is_deterministic(seed in any::<u64>()) {
        let net = small_network(seed, 12, 4);
        let text = serialize_network(&net);
        let a = compile(&parse_network(&text).unwrap()).unwrap();
        let b = compile(&parse_network(&text).unwrap()).unwrap();
        prop_assert_eq!(&a.forest, &b.forest);
        prop_assert_eq!(&a.fill_ins, &b.fill_ins);
    }

    #[test]
    fn engine_matches_oracle(seed in any::<u64>(), observed in 0usize..5) {
        let net = small_network(seed, 9, 4);
        let template = Arc::new(compile(&net).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ev = random_evidence(&mut rng, &net, observed);
        let report = query(&template, &ev).unwrap();
        let (expected, p) = oracle_posteriors(&net, &joint(&net).unwrap(), &ev).unwrap();
        prop_assert!((report.p_evidence - p).abs() <= 1e-9);
        for (v, dist) in expected.iter().enumerate() {
            let got = &report.posteriors[net.variable(v).id.as_str()];
            prop_assert!(max_abs_diff(got, dist) <= 1e-9);
            prop_assert!((got.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn removal_and_zeroing_agree(seed in any::<u64>(), observed in 1usize..5) {
        let net = small_network(seed, 10, 4);
        let template = Arc::new(compile(&net).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ev = random_evidence(&mut rng, &net, observed);
        let removal = query_with_mode(&template, &ev, AbsorptionMode::Removal).unwrap();
        let zeroing = query_with_mode(&template, &ev, AbsorptionMode::Zeroing).unwrap();
        prop_assert!((removal.p_evidence - zeroing.p_evidence).abs() <= 1e-12);
        for (id, dist) in &removal.posteriors {
            prop_assert!(max_abs_diff(dist, &zeroing.posteriors[id]) <= 1e-12);
        }
        prop_assert!(removal.counters.cells_sent <= zeroing.counters.cells_sent);
        prop_assert!(removal.counters.checks <= zeroing.counters.checks);
    }

    #[test]
    fn evidence_shrinks_working_forest(seed in any::<u64>(), observed in 1usize..5) {
        let net = small_network(seed, 10, 4);
        let template = Arc::new(compile(&net).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ev = random_evidence(&mut rng, &net, observed);
        let mut session = InferenceSession::new(template);
        let before = session.working_cells();
        session.absorb_evidence(&ev).unwrap();
        // Every variable lives in some clique and has at least two values.
        prop_assert!(session.working_cells() < before);
    }

    #[test]
    fn propagation_calibrates(seed in any::<u64>(), observed in 0usize..4) {
        let net = small_network(seed, 10, 3);
        let template = Arc::new(compile(&net).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ev = random_evidence(&mut rng, &net, observed);
        let mut session = InferenceSession::new(Arc::clone(&template));
        session.absorb_evidence(&ev).unwrap();
        session.propagate().unwrap();
        let forest = &template.forest;
        for child in 0..forest.len() {
            let Some(parent) = forest.parent(child) else { continue };
            let scope = session.separator_potential(child).unwrap().scope().to_vec();
            let down = session.clique_potential(child).marginalize(&scope);
            let up = session.clique_potential(parent).marginalize(&scope);
            let scale = up.sum().max(1e-300);
            prop_assert!(max_abs_diff(down.cells(), up.cells()) / scale <= 1e-12);
        }
        // Every clique containing a variable gives the same posterior.
        for v in 0..net.len() {
            let home = session.marginal_in_clique(v, forest.home_clique(v)).unwrap();
            for c in forest.cliques().iter().filter(|c| c.variables.contains(&v)) {
                let other = session.marginal_in_clique(v, c.index).unwrap();
                prop_assert!(max_abs_diff(&home, &other) <= 1e-9);
            }
        }
    }

    #[test]
    fn incremental_matches_fresh(seed in any::<u64>()) {
        let net = small_network(seed, 10, 4);
        let template = Arc::new(compile(&net).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sequence = random_evidence(&mut rng, &net, 4);
        let mut session = InferenceSession::new(Arc::clone(&template));
        session.propagate().unwrap();
        let mut accumulated = EvidenceSet::new();
        for (id, value) in sequence.iter() {
            let step = EvidenceSet::new().with(id, value);
            accumulated.set(id, value);
            let inc = session.add_evidence_incremental(&step).unwrap();
            let fresh = query(&template, &accumulated).unwrap();
            prop_assert!((inc.p_evidence - fresh.p_evidence).abs() <= 1e-9);
            for (id, dist) in &fresh.posteriors {
                prop_assert!(max_abs_diff(dist, &inc.posteriors[id]) <= 1e-9);
            }
        }
        prop_assert_eq!(session.template_copies(), 1);
    }
}
