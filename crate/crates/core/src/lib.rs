//! Exact inference for discrete belief networks on junction forests.
//!
//! A [`BeliefNetwork`] is compiled once into a [`CompiledNetwork`] whose
//! clique forest serves as an immutable template. Inference runs in an
//! [`InferenceSession`] that absorbs evidence by deleting incompatible
//! potential cells and propagates with a collect/distribute schedule.
//!
//! ```
//! use std::sync::Arc;
//! use cliquetree::{compile, fixtures, query, EvidenceSet};
//!
//! let net = fixtures::ab();
//! let template = Arc::new(compile(&net).unwrap());
//! let report = query(&template, &EvidenceSet::new().with("B", 0)).unwrap();
//! assert!((report.p_evidence - 0.41).abs() < 1e-12);
//! ```

pub mod compiler;
pub mod engine;
pub mod error;
pub mod evidence;
pub mod fixtures;
pub mod generate;
pub mod graph;
pub mod network;
pub mod oracle;
pub mod potential;

pub use compiler::{
    build_forest, compile, forest_stats, identify_cliques, initialize_potentials, Clique, CliqueForest,
    CompiledNetwork, ForestStats, ForestStructure,
};
pub use engine::{
    count_update_operations, query, query_with_mode, AbsorptionMode, CliqueCounters, InferenceSession,
    OperationCounters, PosteriorReport,
};
pub use error::{Error, Result};
pub use evidence::EvidenceSet;
pub use graph::{is_chordal, mcs_order, moralize, triangulate, EliminationOrder, UndirectedGraph};
pub use network::{
    merge_networks, parse_network, serialize_network, validate, BeliefNetwork, Cpt, NetworkDocument, NodeRecord,
    ValidationReport, Variable, Violation,
};
pub use potential::PotentialTable;
