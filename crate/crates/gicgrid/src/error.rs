//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed case file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("dangling reference: {entity} {id} refers to missing {target} {target_id}")]
    DanglingReference {
        entity: &'static str,
        id: u32,
        target: &'static str,
        target_id: u32,
    },

    #[error("invalid {entity} {id}: violates {rule}")]
    Validation {
        entity: &'static str,
        id: u32,
        rule: &'static str,
    },

    #[error("singular dc system: component of gmd bus {0} is sourced but has no unblocked grounding")]
    SingularDcSystem(u32),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular jacobian in power flow (iteration {0})")]
    SingularJacobian(usize),

    #[error("transformer on ac branch {branch} is missing its {role} winding")]
    MissingWinding { branch: u32, role: &'static str },

    #[error("exhaustive placement capped at {cap} candidates, got {got}")]
    TooManyCandidates { got: usize, cap: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("label/mask mismatch: {got} labels for {expected} masked nodes")]
    LabelMaskMismatch { got: usize, expected: usize },

    #[error("empty mask: no candidate nodes to score")]
    EmptyMask,

    #[error("roc-auc undefined: labels contain a single class")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
