//! Slices reserve whole nodes for one subnamespace; slice claims ask for
//! them.
//!
//! A slice first pre-reserves `node_count` shared nodes, picked first-fit
//! in name order. Binding it to a namespace turns those nodes reserved and
//! evicts foreign pods within the slice's grace period. Releasing it drains
//! the bound namespace's pods the same way, returns the nodes to the shared
//! pool and refunds any quota the claim charged.

use crate::cluster::evict;
use crate::error::{SliceError, StoreError};
use crate::meta::Phase;
use crate::objects::{
    ClaimMode, ClaimPhase, ClaimRef, Kind, NodeState, ObjectKey, SlicePhase, SliceSelector, SliceSpec, Spec,
    StoredObject,
};
use crate::resources::ResourceVector;
use crate::runtime::{Client, EventOp, EventRecord, Outcome, Reconciler, Store};

pub const INSUFFICIENT_NODES: &str = "insufficient nodes";
pub const INSUFFICIENT_QUOTA: &str = "insufficient quota";

/// Shared nodes matching `selector`, in name order.
pub fn eligible_nodes(store: &Store, selector: &SliceSelector) -> Vec<String> {
    store
        .list(Kind::Node)
        .filter(|n| {
            let spec = n.as_node().expect("node");
            spec.state == NodeState::Shared
                && selector.labels.iter().all(|(k, v)| spec.labels.get(k) == Some(v))
                && selector.resources.fits_within(&spec.free())
        })
        .map(|n| n.name().to_string())
        .collect()
}

/// Usage a dynamic claim charges its namespace.
pub fn claim_charge(selector: &SliceSelector) -> ResourceVector {
    selector.resources * u64::from(selector.node_count)
}

fn slice_key(name: &str) -> ObjectKey {
    ObjectKey::cluster(Kind::Slice, name)
}

fn set_node_state(client: &mut dyn Client, node: &str, state: NodeState) -> Result<(), StoreError> {
    client.modify(&ObjectKey::cluster(Kind::Node, node), &mut |o| {
        let n = o.as_node_mut().expect("node");
        if n.state == state {
            return false;
        }
        n.state = state.clone();
        true
    })?;
    Ok(())
}

/// Binds a pre-reserved slice to `namespace`: the nodes become reserved and
/// pods of other namespaces on them are evicted with the slice's grace
/// period.
pub fn bind_slice(
    client: &mut dyn Client,
    slice: &str,
    namespace: &str,
    claim: Option<ClaimRef>,
) -> Result<(), SliceError> {
    let obj = client.get(&slice_key(slice)).ok_or_else(|| SliceError::UnknownSlice(slice.to_string()))?;
    let spec = obj.as_slice().expect("slice").clone();
    if let Some(bound) = &spec.bound_namespace {
        if bound != namespace {
            return Err(SliceError::AlreadyBound { slice: slice.to_string(), namespace: bound.clone() });
        }
    }
    match spec.phase {
        SlicePhase::Bound => return Ok(()),
        SlicePhase::PreReserved => {}
        _ => return Err(SliceError::NotReserved(slice.to_string())),
    }
    if !client.store().tree().contains(namespace) {
        return Err(StoreError::Invalid(format!("namespace {namespace} does not exist")).into());
    }
    for node in &spec.nodes {
        set_node_state(client, node, NodeState::Reserved(slice.to_string()))?;
        evict(client, node, &|p| p.namespace.as_deref() != Some(namespace), spec.grace_period_ms)
            .map_err(|e| match e {
                crate::error::ClusterError::Store(s) => SliceError::Store(s),
                other => SliceError::Store(StoreError::Invalid(other.to_string())),
            })?;
    }
    let now = client.now();
    client.modify(&slice_key(slice), &mut |o| {
        let s = o.as_slice_mut().expect("slice");
        s.bound_namespace = Some(namespace.to_string());
        s.phase = SlicePhase::Bound;
        s.bound_at = Some(now);
        if claim.is_some() {
            s.claim = claim.clone();
        }
        true
    })?;
    Ok(())
}

/// Starts releasing a slice. The slice controller drains it and removes
/// it together with its claim.
pub fn release_slice(client: &mut dyn Client, slice: &str) -> Result<(), SliceError> {
    let key = slice_key(slice);
    if client.store().get(&key).is_none() {
        return Err(SliceError::UnknownSlice(slice.to_string()));
    }
    client.modify(&key, &mut |o| {
        let changed = o.meta.phase != Phase::Terminating;
        o.meta.phase = Phase::Terminating;
        changed
    })?;
    Ok(())
}

/// Drives slices through selection, pre-reservation and release.
#[derive(Debug, Default)]
pub struct SliceController;

impl SliceController {
    fn provision(&self, client: &mut dyn Client, obj: &StoredObject) -> Result<Outcome, StoreError> {
        let spec = obj.as_slice().expect("slice").clone();
        let picked: Vec<String> =
            eligible_nodes(client.store(), &spec.selector).into_iter().take(spec.selector.node_count as usize).collect();
        if picked.len() < spec.selector.node_count as usize {
            client.modify(&obj.key(), &mut |o| {
                let s = o.as_slice_mut().expect("slice");
                if s.phase == SlicePhase::Failed {
                    return false;
                }
                s.phase = SlicePhase::Failed;
                o.meta.failure_reason = Some(INSUFFICIENT_NODES.into());
                true
            })?;
            return Ok(Outcome::Retry);
        }
        for n in &picked {
            set_node_state(client, n, NodeState::PreReserved(obj.name().to_string()))?;
        }
        client.modify(&obj.key(), &mut |o| {
            let s = o.as_slice_mut().expect("slice");
            s.nodes = picked.iter().cloned().collect();
            s.phase = SlicePhase::PreReserved;
            o.meta.phase = Phase::Established;
            o.meta.failure_reason = None;
            true
        })?;
        Ok(Outcome::Settled)
    }

    fn finalize(&self, client: &mut dyn Client, obj: &StoredObject) -> Result<Outcome, StoreError> {
        let name = obj.name().to_string();
        let spec = obj.as_slice().expect("slice").clone();
        let now = client.now();
        if spec.release_at.is_none() {
            client.modify(&obj.key(), &mut |o| {
                let s = o.as_slice_mut().expect("slice");
                s.release_at = Some(now);
                s.phase = SlicePhase::Terminating;
                o.meta.phase = Phase::Terminating;
                true
            })?;
        }
        let mut draining = false;
        for node in &spec.nodes {
            let Some(n) = client.store().get_cluster(Kind::Node, node).and_then(|n| n.as_node()).cloned() else {
                continue;
            };
            if n.state.slice() != Some(name.as_str()) || n.resident.is_empty() {
                continue;
            }
            draining = true;
            evict(client, node, &|_| true, spec.grace_period_ms).map_err(|e| match e {
                crate::error::ClusterError::Store(s) => s,
                other => StoreError::Invalid(other.to_string()),
            })?;
        }
        if draining {
            return Ok(Outcome::RequeueAfter(crate::time::SimTime::from_millis(spec.grace_period_ms.max(1))));
        }
        for node in &spec.nodes {
            let owned = client
                .store()
                .get_cluster(Kind::Node, node)
                .and_then(|n| n.as_node())
                .is_some_and(|n| n.state.slice() == Some(name.as_str()));
            if owned {
                set_node_state(client, node, NodeState::Shared)?;
            }
        }
        if let Some(claim) = &spec.claim {
            let key = ObjectKey::namespaced(Kind::SliceClaim, &claim.namespace, &claim.name);
            if let Some(c) = client.get(&key) {
                let charged = c.as_slice_claim().and_then(|c| c.charged);
                if let Some(charged) = charged {
                    let ns_key = ObjectKey::cluster(Kind::NamespaceRecord, &claim.namespace);
                    if client.store().get(&ns_key).is_some() {
                        client.modify(&ns_key, &mut |o| {
                            let ns = o.as_namespace_mut().expect("namespace");
                            ns.usage = ns.usage.saturating_sub(&charged);
                            true
                        })?;
                    }
                }
                client.delete(&key)?;
            }
        }
        client.delete(&obj.key())?;
        Ok(Outcome::Settled)
    }
}

impl Reconciler for SliceController {
    fn name(&self) -> &'static str {
        "slice"
    }

    fn keys_for(&self, store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        match rec.object.kind() {
            Kind::Slice if rec.op != EventOp::Delete => vec![rec.object.key()],
            Kind::Node if rec.op != EventOp::Delete => store
                .list(Kind::Slice)
                .filter(|s| s.as_slice().is_some_and(|s| matches!(s.phase, SlicePhase::Provisioning | SlicePhase::Failed)))
                .map(|s| s.key())
                .collect(),
            Kind::Pod if rec.op == EventOp::Delete => {
                let Some(node) = rec.object.as_pod().and_then(|p| p.node.as_deref()) else { return Vec::new() };
                store
                    .get_cluster(Kind::Node, node)
                    .and_then(|n| n.as_node())
                    .and_then(|n| n.state.slice())
                    .map(|s| vec![slice_key(s)])
                    .unwrap_or_default()
            }
            Kind::SliceClaim if rec.op == EventOp::Delete => {
                let ns = rec.object.namespace.clone().unwrap_or_default();
                let claim = ClaimRef { namespace: ns, name: rec.object.name().to_string() };
                store
                    .list(Kind::Slice)
                    .filter(|s| s.as_slice().is_some_and(|s| s.claim.as_ref() == Some(&claim)))
                    .map(|s| s.key())
                    .collect()
            }
            Kind::NamespaceRecord if rec.op == EventOp::Delete => store
                .list(Kind::Slice)
                .filter(|s| s.as_slice().is_some_and(|s| s.bound_namespace.as_deref() == Some(rec.object.name())))
                .map(|s| s.key())
                .collect(),
            _ => Vec::new(),
        }
    }

    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
        let Some(obj) = client.get(key) else { return Ok(Outcome::Settled) };
        let spec = obj.as_slice().expect("slice").clone();
        if obj.meta.phase == Phase::Terminating || spec.phase == SlicePhase::Terminating {
            return self.finalize(client, &obj);
        }
        match spec.phase {
            SlicePhase::Provisioning | SlicePhase::Failed => self.provision(client, &obj),
            SlicePhase::Bound => {
                let ns_gone = spec.bound_namespace.as_deref().is_some_and(|ns| !client.store().tree().contains(ns));
                let claim_gone = spec.claim.as_ref().is_some_and(|c| {
                    client.store().get_namespaced(Kind::SliceClaim, &c.namespace, &c.name).is_none()
                });
                if ns_gone || claim_gone {
                    self.finalize(client, &obj)
                } else {
                    Ok(Outcome::Settled)
                }
            }
            _ => Ok(Outcome::Settled),
        }
    }
}

/// Turns slice claims into bound slices: dynamic claims create their slice
/// when the namespace has room for the charge, manual claims wait for an
/// administrator to create it.
#[derive(Debug, Default)]
pub struct SliceClaimController;

fn set_claim(
    client: &mut dyn Client,
    key: &ObjectKey,
    phase: ClaimPhase,
    reason: Option<&str>,
) -> Result<(), StoreError> {
    client.modify(key, &mut |o| {
        let c = o.as_slice_claim_mut().expect("claim");
        if c.phase == phase && c.reason.as_deref() == reason {
            return false;
        }
        c.phase = phase;
        c.reason = reason.map(str::to_string);
        if phase == ClaimPhase::Bound {
            o.meta.phase = Phase::Established;
        }
        true
    })?;
    Ok(())
}

impl Reconciler for SliceClaimController {
    fn name(&self) -> &'static str {
        "slice-claim"
    }

    fn keys_for(&self, store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        match rec.object.kind() {
            Kind::SliceClaim if rec.op != EventOp::Delete => vec![rec.object.key()],
            Kind::Slice if rec.op != EventOp::Delete => store
                .list(Kind::SliceClaim)
                .filter(|c| c.as_slice_claim().is_some_and(|c| c.slice_name == rec.object.name()))
                .map(|c| c.key())
                .collect(),
            _ => Vec::new(),
        }
    }

    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
        let Some(obj) = client.get(key) else { return Ok(Outcome::Settled) };
        let claim = obj.as_slice_claim().expect("claim").clone();
        if matches!(claim.phase, ClaimPhase::Bound | ClaimPhase::Failed) {
            return Ok(Outcome::Settled);
        }
        let ns = key.namespace.clone().unwrap_or_default();
        let Some(slice) = client.store().get_cluster(Kind::Slice, &claim.slice_name).cloned() else {
            return match claim.mode {
                ClaimMode::Manual => {
                    set_claim(client, key, ClaimPhase::Requested, None)?;
                    Ok(Outcome::Settled)
                }
                ClaimMode::Dynamic => self.create_slice(client, key, &ns, &claim),
            };
        };
        let s = slice.as_slice().expect("slice");
        let ours = ClaimRef { namespace: ns.clone(), name: key.name.clone() };
        if s.claim.as_ref().is_some_and(|c| c != &ours) {
            set_claim(client, key, ClaimPhase::Failed, Some("slice claimed by another claim"))?;
            return Ok(Outcome::Settled);
        }
        match bind_slice(client, &claim.slice_name, &ns, Some(ours)) {
            Ok(()) => {
                set_claim(client, key, ClaimPhase::Bound, None)?;
                Ok(Outcome::Settled)
            }
            Err(e @ SliceError::AlreadyBound { .. }) => {
                set_claim(client, key, ClaimPhase::Failed, Some(&e.to_string()))?;
                Ok(Outcome::Settled)
            }
            Err(SliceError::NotReserved(_)) => Ok(Outcome::Settled),
            Err(SliceError::UnknownSlice(_)) => Ok(Outcome::Retry),
            Err(SliceError::Store(e)) => Err(e),
        }
    }
}

impl SliceClaimController {
    fn create_slice(
        &self,
        client: &mut dyn Client,
        key: &ObjectKey,
        ns: &str,
        claim: &crate::objects::SliceClaimSpec,
    ) -> Result<Outcome, StoreError> {
        let Some(node) = client.store().tree().get(ns) else { return Ok(Outcome::Retry) };
        let need = claim_charge(&claim.requested);
        if claim.charged.is_none() {
            let remaining = node.spec.quota.saturating_sub(&node.spec.usage);
            if node.spec.quota_enforced && !need.fits_within(&remaining) {
                set_claim(client, key, ClaimPhase::Pending, Some(INSUFFICIENT_QUOTA))?;
                return Ok(Outcome::Retry);
            }
            client.modify(&ObjectKey::cluster(Kind::NamespaceRecord, ns), &mut |o| {
                let s = o.as_namespace_mut().expect("namespace");
                s.usage += need;
                true
            })?;
            client.modify(key, &mut |o| {
                let c = o.as_slice_claim_mut().expect("claim");
                c.charged = Some(need);
                c.reason = None;
                true
            })?;
        }
        let mut spec = SliceSpec::new(claim.requested.clone());
        spec.claim = Some(ClaimRef { namespace: ns.to_string(), name: key.name.clone() });
        client.create(StoredObject::cluster(&claim.slice_name, Spec::Slice(spec)))?;
        Ok(Outcome::Settled)
    }
}
