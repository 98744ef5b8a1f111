//! Control-plane substrate: the object store and event log, the
//! discrete-event plane, and controller plumbing.

mod controller;
mod latency;
mod plane;
mod rate;
mod store;

pub use controller::{backoff, Client, ControllerConfig, Outcome, Reconciler, WorkQueue, BACKOFF_BASE, BACKOFF_CAP};
pub use latency::LatencyModel;
pub use plane::{ControllerStats, Plane, PlaneClient};
pub use rate::TokenBucket;
pub use store::{
    cluster_uid_from_seed, EventOp, EventRecord, Store, StoreConfig, Watch, BOOTSTRAP_ADMIN, BOOTSTRAP_BINDING,
};
