//! Controller plumbing: configuration, the keyed work queue, and the
//! client interface reconcilers write through.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::StoreError;
use crate::objects::{ObjectKey, StoredObject};
use crate::runtime::store::{EventRecord, Store};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub workers: u32,
    pub period_ms: u64,
    pub qps: f64,
    pub burst: u32,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig { workers: 2, period_ms: 1_000, qps: 5.0, burst: 10 }
    }
}

impl ControllerConfig {
    /// The tuned setting: ten workers, a 500 ms period and an effectively
    /// unlimited client rate.
    pub fn optimized() -> Self {
        ControllerConfig { workers: 10, period_ms: 500, qps: 1e6, burst: 1_000_000 }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.workers < 1 {
            return Err("workers must be at least 1".into());
        }
        if self.period_ms < 1 {
            return Err("period_ms must be at least 1".into());
        }
        if !(self.qps.is_finite() && self.qps > 0.0) {
            return Err("qps must be positive".into());
        }
        if self.burst < 1 {
            return Err("burst must be at least 1".into());
        }
        Ok(())
    }
}

/// Result of one reconcile pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Converged; wait for the next relevant event.
    Settled,
    /// Not converged; try again at the next resync.
    Retry,
    /// Look again after this much simulated time.
    RequeueAfter(SimTime),
}

/// Base and cap of the error backoff, and its growth factor.
pub const BACKOFF_BASE: SimTime = SimTime(5_000);
pub const BACKOFF_CAP: SimTime = SimTime(1_000_000);

/// Delay before retry number `failures` (1-based).
pub fn backoff(failures: u32) -> SimTime {
    let shift = failures.saturating_sub(1).min(20);
    SimTime(BACKOFF_BASE.as_micros().saturating_mul(1 << shift).min(BACKOFF_CAP.as_micros()))
}

/// The store as seen by a reconciler or an outside caller. Reads are free
/// snapshots; every write is a store call with its own latency.
pub trait Client {
    fn store(&self) -> &Store;
    /// The caller's current simulated time.
    fn now(&self) -> SimTime;
    fn create(&mut self, obj: StoredObject) -> Result<StoredObject, StoreError>;
    fn update(&mut self, obj: StoredObject) -> Result<StoredObject, StoreError>;
    fn delete(&mut self, key: &ObjectKey) -> Result<StoredObject, StoreError>;

    fn get(&self, key: &ObjectKey) -> Option<StoredObject> {
        self.store().get(key).cloned()
    }

    /// Read-modify-write of the live object. `f` returns whether it changed
    /// anything; unchanged objects are not written.
    fn modify(
        &mut self,
        key: &ObjectKey,
        f: &mut dyn FnMut(&mut StoredObject) -> bool,
    ) -> Result<Option<StoredObject>, StoreError> {
        let Some(mut obj) = self.get(key) else {
            return Err(StoreError::NotFound(key.clone()));
        };
        if f(&mut obj) {
            self.update(obj).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// A level-triggered controller.
pub trait Reconciler {
    fn name(&self) -> &'static str;

    /// Keys to enqueue when `rec` is committed.
    fn keys_for(&self, store: &Store, rec: &EventRecord) -> Vec<ObjectKey>;

    /// Drives the object at `key` toward its declared state. Must be
    /// idempotent.
    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError>;

    /// Adjusts the configuration this controller runs with.
    fn effective_config(&self, config: ControllerConfig) -> ControllerConfig {
        config
    }
}

/// A keyed queue: duplicate adds coalesce, and a key being processed is
/// never handed out again until it is marked done.
#[derive(Debug, Default)]
pub struct WorkQueue {
    ready: BTreeSet<(SimTime, u64, ObjectKey)>,
    index: HashMap<ObjectKey, (SimTime, u64)>,
    processing: HashSet<ObjectKey>,
    dirty: HashMap<ObjectKey, SimTime>,
    counter: u64,
    coalesced: u64,
}

impl WorkQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Queues `key` to become available at `ready_at`. An already queued
    /// key keeps the earlier of the two times.
    pub fn add(&mut self, key: ObjectKey, ready_at: SimTime) {
        if self.processing.contains(&key) {
            let slot = self.dirty.entry(key).or_insert(ready_at);
            *slot = (*slot).min(ready_at);
            return;
        }
        if let Some(&(t, c)) = self.index.get(&key) {
            self.coalesced += 1;
            if ready_at < t {
                self.ready.remove(&(t, c, key.clone()));
                self.ready.insert((ready_at, c, key.clone()));
                self.index.insert(key, (ready_at, c));
            }
            return;
        }
        self.counter += 1;
        self.index.insert(key.clone(), (ready_at, self.counter));
        self.ready.insert((ready_at, self.counter, key));
    }

    /// The earliest key available at `now`, moved to the processing set.
    pub fn pop_ready(&mut self, now: SimTime) -> Option<ObjectKey> {
        let first = self.ready.first()?;
        if first.0 > now {
            return None;
        }
        let (_, _, key) = self.ready.pop_first()?;
        self.index.remove(&key);
        self.processing.insert(key.clone());
        Some(key)
    }

    /// Releases `key`; if it was re-added meanwhile it is queued again.
    pub fn done(&mut self, key: &ObjectKey) {
        self.processing.remove(key);
        if let Some(t) = self.dirty.remove(key) {
            self.add(key.clone(), t);
        }
    }

    pub fn next_ready(&self) -> Option<SimTime> {
        self.ready.first().map(|e| e.0)
    }

    pub fn is_processing(&self, key: &ObjectKey) -> bool {
        self.processing.contains(key)
    }

    /// Queued keys, not counting those being processed.
    pub fn len(&self) -> usize {
        self.ready.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ready.is_empty()
    }

    pub fn processing(&self) -> usize {
        self.processing.len()
    }

    pub fn coalesced(&self) -> u64 {
        self.coalesced
    }
}
