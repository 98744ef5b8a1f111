//! A deterministic discrete-event simulation of the control plane.
//!
//! The plane owns the store, a single serialized writer, and a set of
//! controllers. Each controller has its own keyed work queue, `workers`
//! slots, and client token bucket. A reconcile runs atomically when a
//! worker picks its key up; its reads are free snapshot reads (after one
//! base read latency), and each write waits for a token, then for the
//! writer, and commits at `max(arrival, writer free) + service`. The worker
//! stays busy until its last write commits.
//!
//! Committed records reach controllers as keys that become ready at the
//! record's commit time. Keys whose reconcile returned
//! [`Outcome::Retry`] are re-queued by a resync every `period_ms`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::rc::Rc;

use crate::error::StoreError;
use crate::objects::{ObjectKey, StoredObject};
use crate::rbac::Actor;
use crate::runtime::controller::{backoff, Client, ControllerConfig, Outcome, Reconciler, WorkQueue};
use crate::runtime::latency::LatencyModel;
use crate::runtime::rate::TokenBucket;
use crate::runtime::store::Store;
use crate::time::SimTime;

/// The serialized writer in front of the store.
#[derive(Debug, Default)]
struct Writer {
    free_at: SimTime,
    inflight: VecDeque<SimTime>,
    ops: u64,
}

impl Writer {
    fn admit(&mut self, latency: &LatencyModel, arrival: SimTime) -> SimTime {
        while self.inflight.front().is_some_and(|&c| c <= arrival) {
            self.inflight.pop_front();
        }
        self.ops += 1;
        let service = latency.write_service(self.inflight.len() as u64, self.ops);
        let commit = arrival.max(self.free_at) + service;
        self.free_at = commit;
        self.inflight.push_back(commit);
        commit
    }
}

struct Slot {
    reconciler: Rc<dyn Reconciler>,
    config: ControllerConfig,
    bucket: TokenBucket,
    queue: WorkQueue,
    busy: u32,
    unsettled: BTreeSet<ObjectKey>,
    resync_pending: bool,
    wake_at: Option<SimTime>,
    failures: HashMap<ObjectKey, u32>,
    reconciles: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Wake(usize),
    WorkerDone(usize, ObjectKey),
    Resync(usize),
    Timer(usize, ObjectKey),
}

/// Per-controller counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControllerStats {
    pub name: &'static str,
    pub reconciles: u64,
    pub tokens: u64,
    pub queued: usize,
    pub busy: u32,
}

pub struct Plane {
    store: Store,
    now: SimTime,
    latency: LatencyModel,
    writer: Writer,
    slots: Vec<Slot>,
    events: BinaryHeap<Reverse<(SimTime, u64, EventKind)>>,
    event_seq: u64,
    dispatched: u64,
    steps: u64,
}

/// Upper bound on events processed by one drive call; hitting it means a
/// controller never converges.
const STEP_LIMIT: u64 = 200_000_000;

impl Plane {
    pub fn new(store: Store, latency: LatencyModel) -> Self {
        let dispatched = store.seq();
        let now = store.log().last().map_or(SimTime::ZERO, |r| r.at);
        Plane {
            store,
            now,
            latency,
            writer: Writer::default(),
            slots: Vec::new(),
            events: BinaryHeap::new(),
            event_seq: 0,
            dispatched,
            steps: 0,
        }
    }

    /// Registers a controller. Objects already in the store are queued for
    /// it, as an informer's initial list would.
    pub fn add_controller(&mut self, reconciler: Rc<dyn Reconciler>, config: ControllerConfig) {
        let config = reconciler.effective_config(config);
        let mut slot = Slot {
            bucket: TokenBucket::new(config.qps, config.burst),
            reconciler,
            config,
            queue: WorkQueue::new(),
            busy: 0,
            unsettled: BTreeSet::new(),
            resync_pending: false,
            wake_at: None,
            failures: HashMap::new(),
            reconciles: 0,
        };
        for rec in self.store.log() {
            for k in slot.reconciler.keys_for(&self.store, rec) {
                slot.queue.add(k, self.now);
            }
        }
        self.slots.push(slot);
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut Store {
        &mut self.store
    }

    pub fn into_store(self) -> Store {
        self.store
    }

    pub fn latency(&self) -> &LatencyModel {
        &self.latency
    }

    /// Writes issued to the store so far, including refused ones.
    pub fn writer_ops(&self) -> u64 {
        self.writer.ops
    }

    pub fn stats(&self) -> Vec<ControllerStats> {
        self.slots
            .iter()
            .map(|s| ControllerStats {
                name: s.reconciler.name(),
                reconciles: s.reconciles,
                tokens: s.bucket.granted(),
                queued: s.queue.len(),
                busy: s.busy,
            })
            .collect()
    }

    /// A client issuing writes at the current time as `actor`. Its writes
    /// skip the controller token buckets and do not wait on each other.
    pub fn client(&mut self, actor: Actor) -> PlaneClient<'_> {
        PlaneClient { now: self.now, actor, store: &mut self.store, writer: &mut self.writer, latency: &self.latency, last_commit: None }
    }

    pub fn create(&mut self, actor: &Actor, obj: StoredObject) -> Result<StoredObject, StoreError> {
        let r = self.client(actor.clone()).create(obj);
        self.pump();
        r
    }

    pub fn update(&mut self, actor: &Actor, obj: StoredObject) -> Result<StoredObject, StoreError> {
        let r = self.client(actor.clone()).update(obj);
        self.pump();
        r
    }

    pub fn delete(&mut self, actor: &Actor, key: &ObjectKey) -> Result<StoredObject, StoreError> {
        let r = self.client(actor.clone()).delete(key);
        self.pump();
        r
    }

    fn schedule(&mut self, at: SimTime, kind: EventKind) {
        self.event_seq += 1;
        self.events.push(Reverse((at.max(self.now), self.event_seq, kind)));
    }

    fn has_work(&self) -> bool {
        self.dispatched < self.store.seq() || self.slots.iter().any(|s| s.busy > 0 || !s.queue.is_empty())
    }

    /// Processes events until no controller has queued or running work.
    /// Pending timers (resyncs, delayed requeues) are left in place.
    pub fn run_until_idle(&mut self) -> SimTime {
        self.pump();
        let start = self.steps;
        while self.has_work() {
            if !self.step() {
                break;
            }
            assert!(self.steps - start < STEP_LIMIT, "plane did not go idle");
        }
        self.now
    }

    /// Processes every event up to and including `t`, then sets the clock
    /// to `t`.
    pub fn advance_to(&mut self, t: SimTime) {
        self.pump();
        let start = self.steps;
        while self.events.peek().is_some_and(|Reverse((at, _, _))| *at <= t) {
            self.step();
            assert!(self.steps - start < STEP_LIMIT, "plane did not settle before {t}");
        }
        if t > self.now {
            self.now = t;
            self.pump();
        }
    }

    pub fn advance_by(&mut self, d: SimTime) {
        self.advance_to(self.now + d);
    }

    /// Processes the next event. Returns false when none is pending.
    pub fn step(&mut self) -> bool {
        let Some(Reverse((at, _, kind))) = self.events.pop() else { return false };
        self.steps += 1;
        self.now = self.now.max(at);
        match kind {
            EventKind::Wake(ci) => {
                if self.slots[ci].wake_at == Some(at) {
                    self.slots[ci].wake_at = None;
                }
            }
            EventKind::WorkerDone(ci, key) => {
                let slot = &mut self.slots[ci];
                slot.busy -= 1;
                slot.queue.done(&key);
            }
            EventKind::Resync(ci) => {
                let slot = &mut self.slots[ci];
                slot.resync_pending = false;
                let now = self.now;
                for k in std::mem::take(&mut slot.unsettled) {
                    slot.queue.add(k, now);
                }
            }
            EventKind::Timer(ci, key) => {
                let now = self.now;
                self.slots[ci].queue.add(key, now);
            }
        }
        self.pump();
        true
    }

    /// Delivers new records to controllers and starts every reconcile that
    /// is ready now.
    fn pump(&mut self) {
        loop {
            self.dispatch();
            let mut started = false;
            for ci in 0..self.slots.len() {
                started |= self.try_start(ci);
            }
            if !started && self.dispatched == self.store.seq() {
                break;
            }
        }
        for ci in 0..self.slots.len() {
            self.arm_wake(ci);
        }
    }

    fn dispatch(&mut self) {
        if self.dispatched == self.store.seq() {
            return;
        }
        let now = self.now;
        for rec in self.store.records_since(self.dispatched) {
            let ready = rec.at.max(now);
            for slot in &mut self.slots {
                for k in slot.reconciler.keys_for(&self.store, rec) {
                    slot.queue.add(k, ready);
                }
            }
        }
        self.dispatched = self.store.seq();
    }

    fn arm_wake(&mut self, ci: usize) {
        let slot = &self.slots[ci];
        let Some(t) = slot.queue.next_ready() else { return };
        if t <= self.now || slot.wake_at.is_some_and(|w| w <= t) {
            return;
        }
        self.slots[ci].wake_at = Some(t);
        self.schedule(t, EventKind::Wake(ci));
    }

    fn try_start(&mut self, ci: usize) -> bool {
        let mut started = false;
        loop {
            let slot = &mut self.slots[ci];
            if slot.busy >= slot.config.workers {
                break;
            }
            let Some(key) = slot.queue.pop_ready(self.now) else { break };
            started = true;
            slot.busy += 1;
            slot.reconciles += 1;
            let reconciler = slot.reconciler.clone();
            let mut ctx = Ctx {
                cursor: self.now + self.latency.read_time(),
                store: &mut self.store,
                writer: &mut self.writer,
                bucket: &mut slot.bucket,
                latency: &self.latency,
            };
            let result = reconciler.reconcile(&mut ctx, &key);
            let end = ctx.cursor;
            let period = SimTime::from_millis(slot.config.period_ms);
            let mut resync_at = None;
            let mut timer_at = None;
            match result {
                Ok(Outcome::Settled) => {
                    slot.failures.remove(&key);
                    slot.unsettled.remove(&key);
                }
                Ok(Outcome::Retry) => {
                    slot.failures.remove(&key);
                    slot.unsettled.insert(key.clone());
                    if !slot.resync_pending {
                        slot.resync_pending = true;
                        resync_at = Some(self.now + period);
                    }
                }
                Ok(Outcome::RequeueAfter(d)) => {
                    slot.failures.remove(&key);
                    slot.unsettled.remove(&key);
                    timer_at = Some(end + d);
                }
                Err(_) => {
                    let n = slot.failures.entry(key.clone()).or_insert(0);
                    *n += 1;
                    slot.queue.add(key.clone(), end + backoff(*n));
                }
            }
            if let Some(t) = resync_at {
                self.schedule(t, EventKind::Resync(ci));
            }
            if let Some(t) = timer_at {
                self.schedule(t, EventKind::Timer(ci, key.clone()));
            }
            self.schedule(end, EventKind::WorkerDone(ci, key));
            self.dispatch();
        }
        started
    }
}

/// The client a reconcile runs with: writes pass the controller's token
/// bucket, then the writer, and the reconcile's clock follows its commits.
struct Ctx<'a> {
    cursor: SimTime,
    store: &'a mut Store,
    writer: &'a mut Writer,
    bucket: &'a mut TokenBucket,
    latency: &'a LatencyModel,
}

impl Ctx<'_> {
    fn slot_time(&mut self) -> SimTime {
        let granted = self.bucket.acquire(self.cursor);
        let commit = self.writer.admit(self.latency, granted);
        self.cursor = commit;
        commit
    }
}

impl Client for Ctx<'_> {
    fn store(&self) -> &Store {
        self.store
    }

    fn now(&self) -> SimTime {
        self.cursor
    }

    fn create(&mut self, obj: StoredObject) -> Result<StoredObject, StoreError> {
        let at = self.slot_time();
        self.store.create(&Actor::System, obj, at)
    }

    fn update(&mut self, obj: StoredObject) -> Result<StoredObject, StoreError> {
        let at = self.slot_time();
        self.store.update(&Actor::System, obj, at)
    }

    fn delete(&mut self, key: &ObjectKey) -> Result<StoredObject, StoreError> {
        let at = self.slot_time();
        self.store.delete(&Actor::System, key, at)
    }
}

/// An outside caller's connection to the plane.
pub struct PlaneClient<'a> {
    now: SimTime,
    actor: Actor,
    store: &'a mut Store,
    writer: &'a mut Writer,
    latency: &'a LatencyModel,
    last_commit: Option<SimTime>,
}

impl PlaneClient<'_> {
    /// Commit time of the most recent write through this client.
    pub fn last_commit(&self) -> Option<SimTime> {
        self.last_commit
    }

    fn slot_time(&mut self) -> SimTime {
        let commit = self.writer.admit(self.latency, self.now);
        self.last_commit = Some(commit);
        commit
    }
}

impl Client for PlaneClient<'_> {
    fn store(&self) -> &Store {
        self.store
    }

    fn now(&self) -> SimTime {
        self.now
    }

    fn create(&mut self, obj: StoredObject) -> Result<StoredObject, StoreError> {
        let at = self.slot_time();
        self.store.create(&self.actor, obj, at)
    }

    fn update(&mut self, obj: StoredObject) -> Result<StoredObject, StoreError> {
        let at = self.slot_time();
        self.store.update(&self.actor, obj, at)
    }

    fn delete(&mut self, key: &ObjectKey) -> Result<StoredObject, StoreError> {
        let at = self.slot_time();
        self.store.delete(&self.actor, key, at)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::{DataSpec, Kind, Spec};
    use crate::runtime::store::{EventRecord, StoreConfig};
    use std::cell::RefCell;

    /// Copies ConfigMap `src` in namespace-less scope into `dst` and counts
    /// invocations and overlaps per key.
    struct Copier {
        calls: RefCell<u64>,
        active: RefCell<BTreeSet<ObjectKey>>,
        overlaps: RefCell<u64>,
        writes_per_call: usize,
    }

    impl Copier {
        fn new(writes_per_call: usize) -> Rc<Self> {
            Rc::new(Copier {
                calls: RefCell::new(0),
                active: RefCell::new(BTreeSet::new()),
                overlaps: RefCell::new(0),
                writes_per_call,
            })
        }
    }

    impl Reconciler for Copier {
        fn name(&self) -> &'static str {
            "copier"
        }

        fn keys_for(&self, _store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
            if rec.object.kind() == Kind::ConfigMap && !rec.object.name().starts_with("out-") {
                vec![rec.object.key()]
            } else {
                vec![]
            }
        }

        fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
            *self.calls.borrow_mut() += 1;
            if !self.active.borrow_mut().insert(key.clone()) {
                *self.overlaps.borrow_mut() += 1;
            }
            for i in 0..self.writes_per_call {
                let out = format!("out-{}-{i}", key.name);
                let ns = key.namespace.as_deref().unwrap();
                if client.store().get_namespaced(Kind::ConfigMap, ns, &out).is_none() {
                    client.create(StoredObject::namespaced(ns, out, Spec::ConfigMap(DataSpec::default())))?;
                }
            }
            self.active.borrow_mut().remove(key);
            Ok(Outcome::Settled)
        }
    }

    fn plane(latency: LatencyModel) -> Plane {
        let mut store = Store::new(StoreConfig::seeded(3));
        store
            .create(
                &Actor::System,
                StoredObject::cluster("ns", Spec::NamespaceRecord(crate::model::NamespaceSpec::core("ns"))),
                SimTime::ZERO,
            )
            .unwrap();
        Plane::new(store, latency)
    }

    fn cm(name: &str) -> StoredObject {
        StoredObject::namespaced("ns", name, Spec::ConfigMap(DataSpec::default()))
    }

    #[test]
    fn token_bucket_paces_controller_writes() {
        let mut p = plane(LatencyModel::zero());
        let c = Copier::new(1);
        p.add_controller(c.clone(), ControllerConfig::default());
        for i in 0..12 {
            p.create(&Actor::System, cm(&format!("c{i:02}"))).unwrap();
        }
        p.run_until_idle();
        let outs: Vec<SimTime> = p
            .store()
            .log()
            .iter()
            .filter(|r| r.object.name().starts_with("out-"))
            .map(|r| r.at)
            .collect();
        assert_eq!(outs.len(), 12);
        assert!(outs[..10].iter().all(|&t| t == SimTime::ZERO));
        assert_eq!(outs[10], SimTime::from_millis(200));
        assert_eq!(outs[11], SimTime::from_millis(400));
    }

    #[test]
    fn duplicate_events_coalesce() {
        let mut p = plane(LatencyModel::zero());
        let c = Copier::new(0);
        p.add_controller(c.clone(), ControllerConfig::default());
        {
            let mut client = p.client(Actor::System);
            let mut obj = client.create(cm("a")).unwrap();
            for i in 0..5 {
                if let Spec::ConfigMap(d) = &mut obj.spec {
                    d.data.insert("i".into(), i.to_string());
                }
                obj = client.update(obj).unwrap();
            }
        }
        p.run_until_idle();
        assert_eq!(*c.calls.borrow(), 1);
    }

    #[test]
    fn no_same_key_overlap_with_many_workers() {
        let mut p = plane(LatencyModel::constant_rate(1_000));
        let c = Copier::new(3);
        p.add_controller(c.clone(), ControllerConfig::optimized());
        for round in 0..4 {
            for i in 0..20 {
                let key = ObjectKey::namespaced(Kind::ConfigMap, "ns", &format!("k{i}"));
                match p.store().get(&key).cloned() {
                    None => {
                        p.create(&Actor::System, cm(&format!("k{i}"))).unwrap();
                    }
                    Some(mut o) => {
                        if let Spec::ConfigMap(d) = &mut o.spec {
                            d.data.insert("r".into(), round.to_string());
                        }
                        p.update(&Actor::System, o).unwrap();
                    }
                }
            }
            p.advance_by(SimTime::from_millis(7));
        }
        p.run_until_idle();
        assert_eq!(*c.overlaps.borrow(), 0);
        assert!(p.slots.iter().all(|s| s.busy == 0));
    }

    #[test]
    fn commits_are_serialized_and_monotone() {
        let mut p = plane(LatencyModel { base_write_us: 100, base_read_us: 0, contention_factor_us: 10, jitter_us: 7, seed: 1 });
        let c = Copier::new(2);
        p.add_controller(c, ControllerConfig::optimized());
        for i in 0..30 {
            p.create(&Actor::System, cm(&format!("c{i}"))).unwrap();
        }
        p.run_until_idle();
        let log = p.store().log();
        assert!(log.windows(2).all(|w| w[0].at <= w[1].at));
        assert!(log.windows(2).all(|w| w[1].seq == w[0].seq + 1));
    }
}
