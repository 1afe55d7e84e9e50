use thiserror::Error;

use crate::network::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("invalid network: {0}")]
    Invalid(ValidationReport),

    #[error("cycle detected among variables {0:?}")]
    Cycle(Vec<String>),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{variable}` has no value {value}")]
    UnknownValue { variable: String, value: String },

    #[error("variable `{variable}` is already observed as `{existing}`, cannot set it to `{requested}`")]
    ContradictoryEvidence { variable: String, existing: String, requested: String },

    #[error("session has evidence that has not been propagated")]
    NotPropagated,

    #[error("evidence has zero probability")]
    ImpossibleEvidence,

    #[error("joint state space of {cells} cells exceeds the cap of {cap}")]
    StateSpaceTooLarge { cells: u128, cap: u128 },

    #[error("graph is not chordal under the given elimination order")]
    NotChordal,

    #[error("no clique covers the family of `{0}`")]
    FamilyNotCovered(String),
}
