use thiserror::Error;

use crate::admission::Denial;
use crate::objects::ObjectKey;
use crate::resources::Resource;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown namespace {0}")]
    UnknownNamespace(String),
    #[error("insufficient quota: {component} requested {requested}, available {available}")]
    InsufficientQuota { component: Resource, requested: u64, available: u64 },
    #[error("subtree rooted at {0} still has usage")]
    SubtreeInUse(String),
    #[error("{0} is not a subnamespace")]
    NotSubnamespace(String),
    #[error("namespace {0} already exists")]
    AlreadyExists(String),
    #[error("namespace threshold of {threshold} reached")]
    ThresholdExceeded { threshold: usize },
    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("quota of tenant {0} would become negative")]
    NegativeQuota(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NamingError {
    #[error("name {0:?} is not a valid DNS label")]
    InvalidName(String),
    #[error("requested name {0:?} is longer than 32 characters")]
    RequestedTooLong(String),
    #[error("composed name {0:?} exceeds 63 characters")]
    NameTooLong(String),
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{0} not found")]
    NotFound(ObjectKey),
    #[error("{0} already exists")]
    AlreadyExists(ObjectKey),
    #[error("conflict on {key}: expected resource version {expected}, found {actual}")]
    Conflict { key: ObjectKey, expected: u64, actual: u64 },
    #[error("namespace threshold of {threshold} reached")]
    ThresholdExceeded { threshold: usize },
    #[error("admission denied: {0}")]
    Denied(Denial),
    #[error("illegal phase transition on {key}: {from} -> {to}")]
    IllegalTransition { key: ObjectKey, from: crate::meta::Phase, to: crate::meta::Phase },
    #[error("watch from seq {requested} predates oldest retained record {oldest}")]
    SeqCompacted { requested: u64, oldest: u64 },
    #[error("invalid object: {0}")]
    Invalid(String),
    #[error("event log is corrupt at line {line}: {reason}")]
    CorruptLog { line: usize, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl StoreError {
    pub fn denial(&self) -> Option<&Denial> {
        match self {
            StoreError::Denied(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SliceError {
    #[error("slice {0} is unknown")]
    UnknownSlice(String),
    #[error("slice {slice} is already bound to namespace {namespace}")]
    AlreadyBound { slice: String, namespace: String },
    #[error("slice {0} is not pre-reserved")]
    NotReserved(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("node {0} is unknown")]
    UnknownNode(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}
