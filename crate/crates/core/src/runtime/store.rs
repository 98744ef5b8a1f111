//! The versioned object store and its append-only event log.
//!
//! Every accepted write appends one [`EventRecord`] per object it touched
//! (a pod create also rewrites its namespace's usage, for example), bumps
//! the global sequence number and stores that number as the object's
//! `resource_version`. Replaying the records in order rebuilds the exact
//! live-object set.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Bound;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::admission::{self, tokens, AdmissionRequest, Denial, Operation};
use crate::error::{ModelError, StoreError};
use crate::meta::{is_dns_label, Phase, Uid};
use crate::model::{charge_usage, release_usage, ChargeOutcome, NamespaceNode, NamespaceTree, DEFAULT_NAMESPACE_THRESHOLD};
use crate::objects::{Kind, ObjectKey, RoleBindingSpec, RoleRef, SlicePhase, Spec, StoredObject, Verb};
use crate::rbac::{rbac_can, Actor, CLUSTER_ROLE_ADMIN};
use crate::time::SimTime;

/// The user bound to the cluster `admin` role when a store is created.
pub const BOOTSTRAP_ADMIN: &str = "admin";
pub const BOOTSTRAP_BINDING: &str = "cluster-admin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventOp {
    Create,
    Update,
    Delete,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    pub at: SimTime,
    pub op: EventOp,
    pub object: StoredObject,
}

#[derive(Debug, Clone)]
pub struct StoreConfig {
    pub cluster_uid: Uid,
    pub threshold: usize,
    /// Route policy-bearing writes through admission.
    pub admission: bool,
}

impl StoreConfig {
    pub fn new(cluster_uid: Uid) -> Self {
        StoreConfig { cluster_uid, threshold: DEFAULT_NAMESPACE_THRESHOLD, admission: true }
    }

    /// A config whose cluster UID is derived from `seed`.
    pub fn seeded(seed: u64) -> Self {
        Self::new(cluster_uid_from_seed(seed))
    }
}

pub fn cluster_uid_from_seed(seed: u64) -> Uid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636c_7573_7465_7221);
    Uid::generate(&mut rng)
}

/// A cursor over the event log, optionally filtered to one kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Watch {
    kind: Option<Kind>,
    last_seq: u64,
}

impl Watch {
    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }
}

pub struct Store {
    config: StoreConfig,
    objects: BTreeMap<ObjectKey, StoredObject>,
    tree: NamespaceTree,
    log: Vec<EventRecord>,
    /// Sequence number of the record just before `log[0]`.
    log_base: u64,
    seq: u64,
    admission_calls: u64,
    sink: Option<BufWriter<File>>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("cluster_uid", &self.config.cluster_uid)
            .field("objects", &self.objects.len())
            .field("seq", &self.seq)
            .finish_non_exhaustive()
    }
}

impl Store {
    /// An empty store holding only the bootstrap cluster-admin binding.
    pub fn new(config: StoreConfig) -> Self {
        let mut store = Self::empty(config);
        let binding = StoredObject::cluster(
            BOOTSTRAP_BINDING,
            Spec::RoleBinding(RoleBindingSpec {
                role_ref: RoleRef::ClusterRole(CLUSTER_ROLE_ADMIN.into()),
                subjects: vec![BOOTSTRAP_ADMIN.into()],
            }),
        );
        store.create(&Actor::System, binding, SimTime::ZERO).expect("bootstrap binding");
        store
    }

    fn empty(config: StoreConfig) -> Self {
        let tree = NamespaceTree::new(config.cluster_uid, config.threshold);
        Store {
            config,
            objects: BTreeMap::new(),
            tree,
            log: Vec::new(),
            log_base: 0,
            seq: 0,
            admission_calls: 0,
            sink: None,
        }
    }

    /// Rebuilds a store from a complete log, bypassing admission and hooks.
    pub fn replay<I: IntoIterator<Item = EventRecord>>(config: StoreConfig, records: I) -> Result<Self, StoreError> {
        let mut store = Self::empty(config);
        for (i, rec) in records.into_iter().enumerate() {
            store.apply_record(rec, i + 1)?;
        }
        Ok(store)
    }

    /// Applies one more logged record, which must carry the next sequence
    /// number.
    pub fn apply_record(&mut self, rec: EventRecord, line: usize) -> Result<(), StoreError> {
        let corrupt = |reason: String| StoreError::CorruptLog { line, reason };
        if rec.seq != self.seq + 1 {
            return Err(corrupt(format!("expected seq {}, found {}", self.seq + 1, rec.seq)));
        }
        let key = rec.object.key();
        match rec.op {
            EventOp::Create => {
                if self.objects.contains_key(&key) {
                    return Err(corrupt(format!("{key} created twice")));
                }
                if let Some(spec) = rec.object.as_namespace() {
                    self.tree
                        .insert(NamespaceNode::new(rec.object.meta.clone(), spec.clone()))
                        .map_err(|e| corrupt(e.to_string()))?;
                }
                self.objects.insert(key, rec.object.clone());
            }
            EventOp::Update => {
                if !self.objects.contains_key(&key) {
                    return Err(corrupt(format!("{key} updated before creation")));
                }
                if let Some(spec) = rec.object.as_namespace() {
                    self.tree
                        .replace(NamespaceNode::new(rec.object.meta.clone(), spec.clone()))
                        .map_err(|e| corrupt(e.to_string()))?;
                }
                self.objects.insert(key, rec.object.clone());
            }
            EventOp::Delete => {
                if self.objects.remove(&key).is_none() {
                    return Err(corrupt(format!("{key} deleted while absent")));
                }
                if rec.object.kind() == Kind::NamespaceRecord {
                    self.tree.remove(rec.object.name()).map_err(|e| corrupt(e.to_string()))?;
                }
            }
        }
        self.seq = rec.seq;
        self.log.push(rec);
        Ok(())
    }

    pub fn read_log(path: &Path) -> Result<Vec<EventRecord>, StoreError> {
        let reader = BufReader::new(File::open(path)?);
        let mut out = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let rec: EventRecord =
                serde_json::from_str(&line).map_err(|e| StoreError::CorruptLog { line: i + 1, reason: e.to_string() })?;
            out.push(rec);
        }
        Ok(out)
    }

    pub fn load_log(config: StoreConfig, path: &Path) -> Result<Self, StoreError> {
        Self::replay(config, Self::read_log(path)?)
    }

    /// Appends every future record to `path` as JSON Lines.
    pub fn attach_sink(&mut self, path: &Path) -> Result<(), StoreError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.sink = Some(BufWriter::new(file));
        Ok(())
    }

    /// Writes the whole retained log to `path`, replacing its contents.
    pub fn write_log(&self, path: &Path) -> Result<(), StoreError> {
        let mut w = BufWriter::new(File::create(path)?);
        for rec in &self.log {
            serde_json::to_writer(&mut w, rec)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), StoreError> {
        if let Some(s) = self.sink.as_mut() {
            s.flush()?;
        }
        Ok(())
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    pub fn cluster_uid(&self) -> Uid {
        self.config.cluster_uid
    }

    pub fn tree(&self) -> &NamespaceTree {
        &self.tree
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn admission_calls(&self) -> u64 {
        self.admission_calls
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Retained records, oldest first.
    pub fn log(&self) -> &[EventRecord] {
        &self.log
    }

    /// Records with `seq > after`.
    pub fn records_since(&self, after: u64) -> &[EventRecord] {
        let start = after.saturating_sub(self.log_base).min(self.log.len() as u64) as usize;
        &self.log[start..]
    }

    /// Drops retained records with `seq <= upto`.
    pub fn compact(&mut self, upto: u64) {
        let n = upto.saturating_sub(self.log_base).min(self.log.len() as u64) as usize;
        self.log.drain(..n);
        self.log_base += n as u64;
    }

    pub fn get(&self, key: &ObjectKey) -> Option<&StoredObject> {
        self.objects.get(key)
    }

    pub fn get_namespaced(&self, kind: Kind, namespace: &str, name: &str) -> Option<&StoredObject> {
        self.objects.get(&ObjectKey::namespaced(kind, namespace, name))
    }

    pub fn get_cluster(&self, kind: Kind, name: &str) -> Option<&StoredObject> {
        self.objects.get(&ObjectKey::cluster(kind, name))
    }

    /// All objects of `kind`, in key order.
    pub fn list(&self, kind: Kind) -> impl Iterator<Item = &StoredObject> + '_ {
        let start = ObjectKey { kind, namespace: None, name: String::new() };
        self.objects
            .range((Bound::Included(start), Bound::Unbounded))
            .take_while(move |(k, _)| k.kind == kind)
            .map(|(_, v)| v)
    }

    /// Objects of `kind` in exactly `namespace` (`None` for cluster scope).
    pub fn list_in<'a>(&'a self, kind: Kind, namespace: Option<&str>) -> impl Iterator<Item = &'a StoredObject> + 'a {
        let ns = namespace.map(str::to_string);
        let start = ObjectKey { kind, namespace: ns.clone(), name: String::new() };
        self.objects
            .range((Bound::Included(start), Bound::Unbounded))
            .take_while(move |(k, _)| k.kind == kind && k.namespace == ns)
            .map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &StoredObject> {
        self.objects.values()
    }

    /// Live objects sorted by `(kind, namespace, name)`.
    pub fn snapshot(&self) -> Vec<StoredObject> {
        self.objects.values().cloned().collect()
    }

    pub fn write_snapshot(&self, path: &Path) -> Result<(), StoreError> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &self.snapshot())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Whether a bound slice currently serves `namespace`.
    pub fn is_slice_bound(&self, namespace: &str) -> bool {
        self.list(Kind::Slice).any(|s| {
            s.as_slice()
                .is_some_and(|s| s.phase == SlicePhase::Bound && s.bound_namespace.as_deref() == Some(namespace))
        })
    }

    /// A subscription delivering records with `seq > from_seq`.
    pub fn watch(&self, kind: Option<Kind>, from_seq: u64) -> Result<Watch, StoreError> {
        if from_seq < self.log_base {
            return Err(StoreError::SeqCompacted { requested: from_seq, oldest: self.log_base + 1 });
        }
        if from_seq > self.seq {
            return Err(StoreError::Invalid(format!("watch from {from_seq} is beyond the head {}", self.seq)));
        }
        Ok(Watch { kind, last_seq: from_seq })
    }

    /// Everything `watch` has not yet seen.
    pub fn poll(&self, watch: &mut Watch) -> Result<Vec<EventRecord>, StoreError> {
        if watch.last_seq < self.log_base {
            return Err(StoreError::SeqCompacted { requested: watch.last_seq, oldest: self.log_base + 1 });
        }
        let out: Vec<EventRecord> = self
            .records_since(watch.last_seq)
            .iter()
            .filter(|r| watch.kind.is_none_or(|k| r.object.kind() == k))
            .cloned()
            .collect();
        watch.last_seq = self.seq;
        Ok(out)
    }

    fn fresh_uid(&self) -> Uid {
        let mut h = Sha256::new();
        h.update(self.config.cluster_uid.as_uuid().as_bytes());
        h.update((self.seq + 1).to_be_bytes());
        let seed: [u8; 32] = h.finalize().into();
        Uid::generate(&mut ChaCha8Rng::from_seed(seed))
    }

    fn authorize(&self, actor: &Actor, verb: Verb, obj: &StoredObject) -> Result<(), StoreError> {
        let Actor::User(user) = actor else { return Ok(()) };
        let kind = obj.kind();
        let open = matches!(kind, Kind::TenantRequest | Kind::RoleRequest | Kind::ClusterRoleRequest)
            && matches!(verb, Verb::Create | Verb::Update);
        if open || rbac_can(self, user, verb, kind, obj.namespace.as_deref()) {
            return Ok(());
        }
        let target = obj.namespace.as_deref().unwrap_or("the cluster");
        Err(StoreError::Denied(Denial::new(
            tokens::FORBIDDEN,
            format!("{user} may not {verb:?} {kind} in {target}").to_lowercase(),
        )))
    }

    fn check_scope(&self, obj: &StoredObject) -> Result<(), StoreError> {
        let kind = obj.kind();
        if !is_dns_label(obj.name()) {
            return Err(StoreError::Invalid(format!("name {:?} is not a DNS label", obj.name())));
        }
        match (&obj.namespace, kind.is_cluster_scoped()) {
            (Some(_), true) => Err(StoreError::Invalid(format!("{kind} is cluster-scoped"))),
            (None, false) if kind != Kind::RoleBinding => Err(StoreError::Invalid(format!("{kind} needs a namespace"))),
            (Some(ns), false) if !self.tree.contains(ns) && !kind.is_policy_bearing() => {
                Err(StoreError::Invalid(format!("namespace {ns} does not exist")))
            }
            _ => Ok(()),
        }
    }

    fn admit(
        &mut self,
        op: Operation,
        actor: &Actor,
        obj: StoredObject,
        old: Option<&StoredObject>,
    ) -> Result<StoredObject, StoreError> {
        if !self.config.admission || !obj.kind().is_policy_bearing() {
            return Ok(obj);
        }
        self.admission_calls += 1;
        let decision = admission::review(self, &AdmissionRequest { op, actor, object: &obj, old });
        if let Some(denial) = decision.reason {
            return Err(StoreError::Denied(denial));
        }
        if decision.mutations.is_empty() {
            Ok(obj)
        } else {
            admission::apply_mutations(&obj, &decision.mutations).map_err(StoreError::Denied)
        }
    }

    /// Appends a record and installs the object. Tree bookkeeping happens
    /// first so a refused namespace change leaves no trace.
    fn commit(&mut self, op: EventOp, mut obj: StoredObject, at: SimTime) -> Result<StoredObject, StoreError> {
        if let Some(spec) = obj.as_namespace() {
            let node = NamespaceNode::new(obj.meta.clone(), spec.clone());
            match op {
                EventOp::Create => self.tree.insert(node).map_err(model_err)?,
                EventOp::Update => self.tree.replace(node).map_err(model_err)?,
                EventOp::Delete => {
                    self.tree.remove(obj.name()).map_err(model_err)?;
                }
            }
        }
        self.seq += 1;
        obj.resource_version = self.seq;
        let key = obj.key();
        if op == EventOp::Delete {
            self.objects.remove(&key);
        } else {
            self.objects.insert(key, obj.clone());
        }
        let rec = EventRecord { seq: self.seq, at, op, object: obj.clone() };
        if let Some(sink) = self.sink.as_mut() {
            serde_json::to_writer(&mut *sink, &rec)?;
            sink.write_all(b"\n")?;
        }
        self.log.push(rec);
        Ok(obj)
    }

    pub fn create(&mut self, actor: &Actor, obj: StoredObject, at: SimTime) -> Result<StoredObject, StoreError> {
        self.check_scope(&obj)?;
        let key = obj.key();
        if self.objects.contains_key(&key) {
            return Err(StoreError::AlreadyExists(key));
        }
        self.authorize(actor, Verb::Create, &obj)?;
        let mut obj = self.admit(Operation::Create, actor, obj, None)?;
        if obj.kind() == Kind::NamespaceRecord && self.tree.len() >= self.tree.threshold() {
            return Err(StoreError::ThresholdExceeded { threshold: self.tree.threshold() });
        }
        obj.meta.uid = self.fresh_uid();
        obj.meta.created_at = at;
        let companion = match obj.as_pod() {
            Some(pod) => Some(self.charged_namespace(obj.namespace.as_deref().unwrap_or_default(), &pod.request)?),
            None => None,
        };
        let created = self.commit(EventOp::Create, obj, at)?;
        if let Some(ns) = companion {
            self.commit(EventOp::Update, ns, at)?;
        }
        Ok(created)
    }

    fn charged_namespace(&self, ns: &str, request: &crate::resources::ResourceVector) -> Result<StoredObject, StoreError> {
        let mut nsobj = self
            .get_cluster(Kind::NamespaceRecord, ns)
            .cloned()
            .ok_or_else(|| StoreError::Invalid(format!("namespace {ns} does not exist")))?;
        let mut node = NamespaceNode::new(nsobj.meta.clone(), nsobj.as_namespace().expect("namespace").clone());
        if let ChargeOutcome::Rejected { component } = charge_usage(&mut node, request) {
            return Err(StoreError::Denied(Denial::new(tokens::QUOTA, format!("{component} quota exhausted in {ns}"))));
        }
        *nsobj.as_namespace_mut().expect("namespace") = node.spec;
        Ok(nsobj)
    }

    /// Compare-and-swap update: `obj.resource_version` must match the live
    /// object. `uid` and `created_at` are carried over from the live object.
    pub fn update(&mut self, actor: &Actor, mut obj: StoredObject, at: SimTime) -> Result<StoredObject, StoreError> {
        self.check_scope(&obj)?;
        let key = obj.key();
        let old = self.objects.get(&key).cloned().ok_or_else(|| StoreError::NotFound(key.clone()))?;
        if obj.resource_version != old.resource_version {
            return Err(StoreError::Conflict { key, expected: obj.resource_version, actual: old.resource_version });
        }
        if !old.meta.phase.can_transition_to(obj.meta.phase) {
            return Err(StoreError::IllegalTransition { key, from: old.meta.phase, to: obj.meta.phase });
        }
        obj.meta.uid = old.meta.uid;
        obj.meta.created_at = old.meta.created_at;
        self.authorize(actor, Verb::Update, &obj)?;
        let obj = self.admit(Operation::Update, actor, obj, Some(&old))?;
        self.commit(EventOp::Update, obj, at)
    }

    /// Deletes `key`. A user deleting a kind with a finalizer only marks it
    /// `Terminating`; its controller completes the removal.
    pub fn delete(&mut self, actor: &Actor, key: &ObjectKey, at: SimTime) -> Result<StoredObject, StoreError> {
        let old = self.objects.get(key).cloned().ok_or_else(|| StoreError::NotFound(key.clone()))?;
        self.authorize(actor, Verb::Delete, &old)?;
        let old = self.admit(Operation::Delete, actor, old, None)?;
        if matches!(actor, Actor::User(_)) && key.kind.has_finalizer() {
            if old.meta.phase == Phase::Terminating {
                return Ok(old);
            }
            let mut marked = old;
            marked.meta.phase = Phase::Terminating;
            return self.commit(EventOp::Update, marked, at);
        }
        let mut companions = Vec::new();
        if let (Some(pod), Some(ns)) = (old.as_pod(), old.namespace.as_deref()) {
            if let Some(mut nsobj) = self.get_cluster(Kind::NamespaceRecord, ns).cloned() {
                let mut node = NamespaceNode::new(nsobj.meta.clone(), nsobj.as_namespace().expect("namespace").clone());
                release_usage(&mut node, &pod.request);
                *nsobj.as_namespace_mut().expect("namespace") = node.spec;
                companions.push(nsobj);
            }
            if let Some(node_name) = pod.node.as_deref() {
                if let Some(mut nodeobj) = self.get_cluster(Kind::Node, node_name).cloned() {
                    let n = nodeobj.as_node_mut().expect("node");
                    if n.resident.remove(&format!("{ns}/{}", old.name())) {
                        n.allocated = n.allocated.saturating_sub(&pod.request);
                    }
                    companions.push(nodeobj);
                }
            }
        }
        let deleted = self.commit(EventOp::Delete, old, at)?;
        for c in companions {
            self.commit(EventOp::Update, c, at)?;
        }
        Ok(deleted)
    }
}

fn model_err(e: ModelError) -> StoreError {
    match e {
        ModelError::ThresholdExceeded { threshold } => StoreError::ThresholdExceeded { threshold },
        other => StoreError::Model(other),
    }
}

impl Drop for Store {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NamespaceSpec;
    use crate::objects::{DataSpec, PodSpec};
    use crate::resources::ResourceVector;

    fn store() -> Store {
        Store::new(StoreConfig::seeded(1))
    }

    fn ns(name: &str) -> StoredObject {
        StoredObject::cluster(name, Spec::NamespaceRecord(NamespaceSpec::core(name)))
    }

    fn cm(ns: &str, name: &str, v: &str) -> StoredObject {
        let mut d = DataSpec::default();
        d.data.insert("k".into(), v.into());
        StoredObject::namespaced(ns, name, Spec::ConfigMap(d))
    }

    #[test]
    fn put_then_get() {
        let mut s = store();
        let base = s.seq();
        s.create(&Actor::System, ns("a"), SimTime::ZERO).unwrap();
        let got = s.get_cluster(Kind::NamespaceRecord, "a").unwrap();
        assert_eq!(got.resource_version, base + 1);
        assert_eq!(got.meta.name, "a");
        assert!(s.tree().contains("a"));
    }

    #[test]
    fn resource_version_increases_and_cas_conflicts() {
        let mut s = store();
        s.create(&Actor::System, ns("a"), SimTime::ZERO).unwrap();
        let v1 = s.create(&Actor::System, cm("a", "c", "1"), SimTime::ZERO).unwrap();
        let mut next = v1.clone();
        next.as_data_mut_for_test("2");
        let v2 = s.update(&Actor::System, next, SimTime(5)).unwrap();
        assert!(v2.resource_version > v1.resource_version);
        let err = s.update(&Actor::System, v1, SimTime(6)).unwrap_err();
        assert!(matches!(err, StoreError::Conflict { .. }));
    }

    #[test]
    fn delete_missing_is_not_found() {
        let mut s = store();
        let err = s.delete(&Actor::System, &ObjectKey::cluster(Kind::Node, "n1"), SimTime::ZERO).unwrap_err();
        assert!(matches!(err, StoreError::NotFound(_)));
    }

    #[test]
    fn threshold_is_enforced() {
        let mut cfg = StoreConfig::seeded(1);
        cfg.threshold = 3;
        let mut s = Store::new(cfg);
        for n in ["a", "b", "c"] {
            s.create(&Actor::System, ns(n), SimTime::ZERO).unwrap();
        }
        let err = s.create(&Actor::System, ns("d"), SimTime::ZERO).unwrap_err();
        assert!(matches!(err, StoreError::ThresholdExceeded { threshold: 3 }));
    }

    #[test]
    fn watch_delivers_in_order_without_gaps() {
        let mut s = store();
        let from = s.seq();
        let mut w1 = s.watch(None, from).unwrap();
        let mut w2 = s.watch(None, from).unwrap();
        s.create(&Actor::System, ns("a"), SimTime::ZERO).unwrap();
        s.create(&Actor::System, cm("a", "x", "1"), SimTime(1)).unwrap();
        s.create(&Actor::System, cm("a", "y", "1"), SimTime(2)).unwrap();
        let r1 = s.poll(&mut w1).unwrap();
        let r2 = s.poll(&mut w2).unwrap();
        assert_eq!(r1.len(), 3);
        assert_eq!(r1, r2);
        assert!(r1.windows(2).all(|w| w[1].seq == w[0].seq + 1));
        assert!(s.poll(&mut w1).unwrap().is_empty());

        let mut only_cm = s.watch(Some(Kind::ConfigMap), 0).unwrap();
        assert_eq!(s.poll(&mut only_cm).unwrap().len(), 2);
    }

    #[test]
    fn compacted_watch_is_refused() {
        let mut s = store();
        s.create(&Actor::System, ns("a"), SimTime::ZERO).unwrap();
        s.compact(2);
        assert!(matches!(s.watch(None, 0), Err(StoreError::SeqCompacted { .. })));
        assert!(s.watch(None, 2).is_ok());
    }

    #[test]
    fn replay_reproduces_live_objects() {
        let mut s = store();
        s.create(&Actor::System, ns("a"), SimTime::ZERO).unwrap();
        s.create(&Actor::System, cm("a", "x", "1"), SimTime(1)).unwrap();
        let pod = StoredObject::namespaced("a", "p", Spec::Pod(PodSpec::new("runc", ResourceVector::cpu(5))));
        let pod = s.create(&Actor::System, pod, SimTime(2)).unwrap();
        assert_eq!(pod.as_pod().unwrap().runtime_class, "kata");
        s.delete(&Actor::System, &ObjectKey::namespaced(Kind::ConfigMap, "a", "x"), SimTime(3)).unwrap();
        let replayed = Store::replay(s.config().clone(), s.log().to_vec()).unwrap();
        assert_eq!(replayed.snapshot(), s.snapshot());
        assert_eq!(replayed.tree(), s.tree());
        assert_eq!(replayed.seq(), s.seq());
    }

    #[test]
    fn log_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let mut s = store();
        s.attach_sink(&path).unwrap();
        s.create(&Actor::System, ns("a"), SimTime::ZERO).unwrap();
        s.create(&Actor::System, cm("a", "x", "1"), SimTime(1)).unwrap();
        s.flush().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with(r#"{"seq":2,"at":0,"op":"create","object":{"kind":"NamespaceRecord""#), "{first}");
        assert!(text.lines().all(|l| !l.ends_with(' ')));

        let full = dir.path().join("full.jsonl");
        s.write_log(&full).unwrap();
        let back = Store::load_log(s.config().clone(), &full).unwrap();
        assert_eq!(back.snapshot(), s.snapshot());
    }

    #[test]
    fn corrupt_log_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let s = store();
        s.write_log(&path).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("{not json\n");
        std::fs::write(&path, text).unwrap();
        let err = Store::load_log(s.config().clone(), &path).unwrap_err();
        assert!(matches!(err, StoreError::CorruptLog { line: 2, .. }));
    }

    #[test]
    fn users_need_bindings() {
        let mut s = store();
        s.create(&Actor::System, ns("a"), SimTime::ZERO).unwrap();
        let err = s.create(&Actor::user("mallory"), cm("a", "x", "1"), SimTime::ZERO).unwrap_err();
        assert_eq!(err.denial().unwrap().token, tokens::FORBIDDEN);
        s.create(&Actor::user(BOOTSTRAP_ADMIN), cm("a", "x", "1"), SimTime::ZERO).unwrap();
    }

    #[test]
    fn phase_must_move_forward() {
        let mut s = store();
        let mut a = s.create(&Actor::System, ns("a"), SimTime::ZERO).unwrap();
        a.meta.phase = Phase::Established;
        let mut a = s.update(&Actor::System, a, SimTime(1)).unwrap();
        a.meta.phase = Phase::Pending;
        assert!(matches!(s.update(&Actor::System, a, SimTime(2)), Err(StoreError::IllegalTransition { .. })));
    }

    impl StoredObject {
        fn as_data_mut_for_test(&mut self, v: &str) {
            if let Spec::ConfigMap(d) = &mut self.spec {
                d.data.insert("k".into(), v.into());
            }
        }
    }
}
