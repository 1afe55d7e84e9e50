//! Small reference networks bundled with the crate.

use crate::network::{parse_network, BeliefNetwork};

/// One binary node with prior `[0.6, 0.4]`.
pub const COIN: &str = include_str!("../fixtures/coin.json");
/// `A → B` with `P(A) = [0.3, 0.7]`, `P(B | a0) = [0.9, 0.1]`, `P(B | a1) = [0.2, 0.8]`.
pub const AB: &str = include_str!("../fixtures/ab.json");
pub const CHAIN: &str = include_str!("../fixtures/chain.json");
/// `A → C ← B`, all binary.
pub const COLLIDER: &str = include_str!("../fixtures/collider.json");
/// `A → B, A → C, B → D, C → D`, all binary.
pub const DIAMOND: &str = include_str!("../fixtures/diamond.json");
/// `A → B` where `B = b1` is impossible given `A = a0`.
pub const DETERMINISTIC: &str = include_str!("../fixtures/deterministic.json");
/// Eight-node chest-clinic network.
pub const ASIA: &str = include_str!("../fixtures/asia.json");
/// 37-node, 46-arc patient-monitoring network.
pub const ALARM: &str = include_str!("../fixtures/alarm.json");
/// Ternary `P → A → B → D` with `C` a child of `A` and `B`: compiles to
/// cliques `{P,A}`, `{A,B,C}`, `{B,D}`, so `{A,B,C}` has one parent and one
/// child and `C` appears in no separator.
pub const WORKED_CLIQUE: &str = include_str!("../fixtures/worked_clique.json");

fn load(text: &str) -> BeliefNetwork {
    parse_network(text).expect("bundled fixture is valid")
}

pub fn coin() -> BeliefNetwork {
    load(COIN)
}

pub fn ab() -> BeliefNetwork {
    load(AB)
}

pub fn chain() -> BeliefNetwork {
    load(CHAIN)
}

pub fn collider() -> BeliefNetwork {
    load(COLLIDER)
}

pub fn diamond() -> BeliefNetwork {
    load(DIAMOND)
}

pub fn deterministic() -> BeliefNetwork {
    load(DETERMINISTIC)
}

pub fn asia() -> BeliefNetwork {
    load(ASIA)
}

pub fn alarm() -> BeliefNetwork {
    load(ALARM)
}

pub fn worked_clique() -> BeliefNetwork {
    load(WORKED_CLIQUE)
}
