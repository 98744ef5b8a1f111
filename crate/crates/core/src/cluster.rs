//! The simulated data plane: nodes, first-fit pod placement and eviction.

use crate::error::{ClusterError, StoreError};
use crate::meta::Phase;
use crate::objects::{Kind, NodeSpec, NodeState, ObjectKey, PodPhase, PodSpec, SlicePhase, Spec, StoredObject, KATA};
use crate::runtime::{Client, ControllerConfig, EventOp, EventRecord, Outcome, Reconciler, Store};
use crate::time::SimTime;

/// The single work-queue key the scheduler runs under.
pub fn scheduler_key() -> ObjectKey {
    ObjectKey::cluster(Kind::Pod, "*")
}

/// Whether `node` may take a new pod from `namespace` running `runtime_class`.
/// Shared nodes take sandboxed pods only; a reserved node takes pods of the
/// namespace its slice is bound to.
pub fn node_accepts(store: &Store, node: &NodeSpec, namespace: &str, runtime_class: &str) -> bool {
    match &node.state {
        NodeState::Shared => runtime_class == KATA,
        NodeState::PreReserved(_) => false,
        NodeState::Reserved(slice) => store
            .get_cluster(Kind::Slice, slice)
            .and_then(|s| s.as_slice())
            .is_some_and(|s| s.phase == SlicePhase::Bound && s.bound_namespace.as_deref() == Some(namespace)),
    }
}

/// First node in name order that accepts the pod and has room for it.
pub fn place(store: &Store, namespace: &str, pod: &PodSpec) -> Option<String> {
    store
        .list(Kind::Node)
        .find(|n| {
            let spec = n.as_node().expect("node");
            node_accepts(store, spec, namespace, &pod.runtime_class) && pod.request.fits_within(&spec.free())
        })
        .map(|n| n.name().to_string())
}

/// Places pending pods first-fit. Runs as one worker so placements are
/// serialized.
#[derive(Debug, Default)]
pub struct Scheduler;

impl Reconciler for Scheduler {
    fn name(&self) -> &'static str {
        "scheduler"
    }

    fn keys_for(&self, _store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        let relevant = match rec.object.kind() {
            Kind::Pod => rec.op != EventOp::Delete && rec.object.as_pod().is_some_and(|p| p.phase == PodPhase::Pending),
            Kind::Node => true,
            Kind::Slice => rec.op != EventOp::Delete,
            _ => false,
        };
        if relevant {
            vec![scheduler_key()]
        } else {
            Vec::new()
        }
    }

    fn reconcile(&self, client: &mut dyn Client, _key: &ObjectKey) -> Result<Outcome, StoreError> {
        if client.store().list(Kind::Node).next().is_none() {
            return Ok(Outcome::Settled);
        }
        let pending: Vec<ObjectKey> = client
            .store()
            .list(Kind::Pod)
            .filter(|p| p.as_pod().is_some_and(|p| p.phase == PodPhase::Pending))
            .map(|p| p.key())
            .collect();
        for key in pending {
            let Some(pod) = client.get(&key) else { continue };
            let ns = key.namespace.clone().unwrap_or_default();
            let spec = pod.as_pod().expect("pod").clone();
            let Some(node) = place(client.store(), &ns, &spec) else { continue };
            let node_key = ObjectKey::cluster(Kind::Node, &node);
            let resident = format!("{ns}/{}", key.name);
            client.modify(&node_key, &mut |o| {
                let n = o.as_node_mut().expect("node");
                n.allocated += spec.request;
                n.resident.insert(resident.clone())
            })?;
            client.modify(&key, &mut |o| {
                let p = o.as_pod_mut().expect("pod");
                p.node = Some(node.clone());
                p.phase = PodPhase::Scheduled;
                true
            })?;
        }
        Ok(Outcome::Settled)
    }

    fn effective_config(&self, config: ControllerConfig) -> ControllerConfig {
        ControllerConfig { workers: 1, ..config }
    }
}

/// Removes terminating pods once their grace period has run out.
#[derive(Debug, Default)]
pub struct PodLifecycle;

impl Reconciler for PodLifecycle {
    fn name(&self) -> &'static str {
        "pod-lifecycle"
    }

    fn keys_for(&self, _store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        match rec.object.as_pod() {
            Some(p) if rec.op != EventOp::Delete && p.terminate_at.is_some() => vec![rec.object.key()],
            _ => Vec::new(),
        }
    }

    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
        let Some(at) = client.get(key).and_then(|p| p.as_pod().and_then(|p| p.terminate_at)) else {
            return Ok(Outcome::Settled);
        };
        let now = client.now();
        if at <= now {
            client.delete(key)?;
            Ok(Outcome::Settled)
        } else {
            Ok(Outcome::RequeueAfter(at.saturating_sub(now)))
        }
    }
}

/// Marks the pods on `node` matching `predicate` as terminating; they are
/// removed once `grace_ms` has passed (at once for a zero grace period).
/// Pods already terminating are left alone. Returns the pods newly marked.
pub fn evict(
    client: &mut dyn Client,
    node: &str,
    predicate: &dyn Fn(&StoredObject) -> bool,
    grace_ms: u64,
) -> Result<Vec<ObjectKey>, ClusterError> {
    let spec = client
        .store()
        .get_cluster(Kind::Node, node)
        .and_then(|n| n.as_node())
        .cloned()
        .ok_or_else(|| ClusterError::UnknownNode(node.to_string()))?;
    let deadline = client.now() + SimTime::from_millis(grace_ms);
    let mut out = Vec::new();
    for resident in &spec.resident {
        let Some((ns, name)) = resident.split_once('/') else { continue };
        let key = ObjectKey::namespaced(Kind::Pod, ns, name);
        let Some(pod) = client.get(&key) else { continue };
        if pod.as_pod().is_some_and(|p| p.phase == PodPhase::Terminating) || !predicate(&pod) {
            continue;
        }
        if grace_ms == 0 {
            client.delete(&key)?;
        } else {
            client.modify(&key, &mut |o| {
                let p = o.as_pod_mut().expect("pod");
                p.phase = PodPhase::Terminating;
                p.terminate_at = Some(deadline);
                true
            })?;
        }
        out.push(key);
    }
    Ok(out)
}

/// A node object with the given labels and capacity.
pub fn node(name: &str, capacity: crate::resources::ResourceVector, labels: &[(&str, &str)]) -> StoredObject {
    let mut spec = NodeSpec::new(capacity);
    spec.labels = labels.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let mut obj = StoredObject::cluster(name, Spec::Node(spec));
    obj.meta.phase = Phase::Established;
    obj
}
