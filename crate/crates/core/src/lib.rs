//! A single-process multitenancy control plane.
//!
//! Tenants own a core namespace and a tree of subnamespaces beneath it.
//! Quota is partitioned exactly down that tree, subnamespace names are
//! hash-derived (and federation-safe), whole nodes can be reserved for a
//! subnamespace as a slice, and every policy-bearing write passes through
//! admission. Controllers reconcile all of it on a deterministic simulated
//! clock, next to a small simulated cluster and a benchmark harness.

pub mod admission;
pub mod audit;
pub mod bench;
pub mod cluster;
pub mod error;
pub mod meta;
pub mod model;
pub mod naming;
pub mod objects;
pub mod rbac;
pub mod resources;
pub mod runtime;
pub mod slicing;
pub mod system;
pub mod tenancy;
pub mod time;

pub use error::{BenchError, ClusterError, ModelError, NamingError, SliceError, StoreError};
pub use meta::{ObjectMeta, Phase, Uid};
pub use objects::{Kind, ObjectKey, Spec, StoredObject};
pub use rbac::Actor;
pub use resources::{Resource, ResourceVector};
pub use time::SimTime;
