//! Shared benchmark inputs.

use std::sync::Arc;

use cliquetree::generate::sampled_evidence;
use cliquetree::{compile, BeliefNetwork, CompiledNetwork, EvidenceSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn template(net: &BeliefNetwork) -> Arc<CompiledNetwork> {
    Arc::new(compile(net).expect("fixture compiles"))
}

/// Nested evidence sets of sizes `0..=max`, drawn from one sampled
/// assignment so every set is possible.
pub fn nested_evidence(net: &BeliefNetwork, max: usize, seed: u64) -> Vec<EvidenceSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = sampled_evidence(&mut rng, net, max);
    let pairs: Vec<(&str, usize)> = full.iter().collect();
    (0..=pairs.len()).map(|k| pairs[..k].iter().fold(EvidenceSet::new(), |ev, &(id, v)| ev.with(id, v))).collect()
}
