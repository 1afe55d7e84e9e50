//! Seeded random networks and evidence, for tests, `gen` and benchmarks.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evidence::EvidenceSet;
use crate::network::{BeliefNetwork, NetworkDocument, NodeRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub nodes: usize,
    pub arcs: usize,
    /// Cardinalities are drawn uniformly from `2..=max_card`.
    pub max_card: usize,
    pub seed: u64,
}

/// Lower bound for raw CPT weights before row normalization; keeps every
/// entry strictly positive.
const MIN_WEIGHT: f64 = 0.05;

/// A random valid network. Parents are only drawn from earlier declaration
/// positions, so the result is acyclic by construction. The arc count is
/// capped at `nodes * (nodes - 1) / 2`.
pub fn random_network(config: GeneratorConfig) -> BeliefNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    random_network_with(&mut rng, config.nodes, config.arcs, config.max_card)
}

pub fn random_network_with(rng: &mut impl Rng, nodes: usize, arcs: usize, max_card: usize) -> BeliefNetwork {
    let max_card = max_card.max(2);
    let pairs: Vec<(usize, usize)> = (0..nodes).flat_map(|c| (0..c).map(move |p| (p, c))).collect();
    let arcs = arcs.min(pairs.len());
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut chosen: Vec<usize> = sample(rng, pairs.len(), arcs).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        let (p, c) = pairs[i];
        parents[c].push(p);
    }

    let cards: Vec<usize> = (0..nodes).map(|_| rng.gen_range(2..=max_card)).collect();
    let mut doc =
        NetworkDocument { name: format!("random-{nodes}-{arcs}"), nodes: Vec::with_capacity(nodes), layout: None };
    for v in 0..nodes {
        let k = cards[v];
        let rows: usize = parents[v].iter().map(|&p| cards[p]).product();
        doc.nodes.push(NodeRecord {
            id: format!("X{v}"),
            label: format!("Variable {v}"),
            values: (0..k).map(|i| format!("v{i}")).collect(),
            parents: parents[v].iter().map(|p| format!("X{p}")).collect(),
            cpt: (0..rows).flat_map(|_| random_row(rng, k)).collect(),
        });
    }
    BeliefNetwork::from_document(doc).expect("generated network is valid")
}

fn random_row(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(MIN_WEIGHT..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Observes `count` distinct variables (capped at the network size) at
/// uniformly chosen values.
pub fn random_evidence(rng: &mut impl Rng, net: &BeliefNetwork, count: usize) -> EvidenceSet {
    let mut vars: Vec<usize> = (0..net.len()).collect();
    vars.shuffle(rng);
    vars.truncate(count.min(net.len()));
    vars.into_iter().fold(EvidenceSet::new(), |ev, v| {
        let value = rng.gen_range(0..net.cardinality(v));
        ev.with(net.variable(v).id.clone(), value)
    })
}

/// Draws one full assignment by ancestral sampling.
pub fn sample_assignment(rng: &mut impl Rng, net: &BeliefNetwork) -> Vec<usize> {
    let mut assignment = vec![0; net.len()];
    for v in net.topological_order() {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let k = net.cardinality(v);
        assignment[v] = k - 1;
        for value in 0..k {
            assignment[v] = value;
            acc += net.conditional(v, &assignment);
            if u < acc {
                break;
            }
        }
    }
    assignment
}

/// Observes `count` distinct variables at the values of one sampled
/// assignment, so the evidence always has positive probability.
pub fn sampled_evidence(rng: &mut impl Rng, net: &BeliefNetwork, count: usize) -> EvidenceSet {
    let assignment = sample_assignment(rng, net);
    let mut vars: Vec<usize> = (0..net.len()).collect();
    vars.shuffle(rng);
    vars.truncate(count.min(net.len()));
    vars.into_iter().fold(EvidenceSet::new(), |ev, v| ev.with(net.variable(v).id.clone(), assignment[v]))
}
