//! Whole-store consistency checks. Each returns human-readable violations;
//! an empty list means the property holds.

use std::collections::{BTreeMap, HashSet};

use crate::model::{validate_partition, Mode};
use crate::objects::{Kind, NodeState, ObjectKey, PodPhase, SlicePhase, Verb, KATA};
use crate::rbac::rbac_can;
use crate::resources::ResourceVector;
use crate::runtime::{EventRecord, Store};
use crate::time::SimTime;

/// Every quota-bearing tenant's tree adds up to its ledger's grant, and
/// no enforced namespace uses more than its own portion.
pub fn quota(store: &Store, now: SimTime) -> Vec<String> {
    let mut out = Vec::new();
    for t in store.list(Kind::Tenant) {
        let Some(ledger) = t.as_tenant().and_then(|s| s.ledger.as_ref()) else { continue };
        if !store.tree().contains(&ledger.tenant) {
            continue;
        }
        match validate_partition(store.tree(), ledger, now) {
            Ok(r) if r.is_ok() => {}
            Ok(r) => out.extend(r.violations.iter().map(|v| format!("tenant {}: {v:?}", t.name()))),
            Err(e) => out.push(format!("tenant {}: {e}", t.name())),
        }
    }
    out
}

/// Each node is shared or held by exactly one live slice that lists it,
/// its resident pods exist and sum to its allocation, and the allocation
/// fits its capacity.
pub fn nodes(store: &Store) -> Vec<String> {
    let mut out = Vec::new();
    let mut holders: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for s in store.list(Kind::Slice) {
        let spec = s.as_slice().expect("slice");
        for n in &spec.nodes {
            holders.entry(n.as_str()).or_default().push(s.name());
        }
    }
    for n in store.list(Kind::Node) {
        let spec = n.as_node().expect("node");
        let name = n.name();
        let held_by = holders.get(name).cloned().unwrap_or_default();
        if held_by.len() > 1 {
            out.push(format!("node {name} listed by slices {held_by:?}"));
        }
        if let Some(slice) = spec.state.slice() {
            let listed = store
                .get_cluster(Kind::Slice, slice)
                .and_then(|s| s.as_slice())
                .is_some_and(|s| s.nodes.contains(name));
            if !listed {
                out.push(format!("node {name} is held by {slice}, which does not list it"));
            }
            if let (NodeState::Reserved(_), Some(s)) =
                (&spec.state, store.get_cluster(Kind::Slice, slice).and_then(|s| s.as_slice()))
            {
                if !matches!(s.phase, SlicePhase::Bound | SlicePhase::Terminating) {
                    out.push(format!("node {name} reserved for unbound slice {slice}"));
                }
            }
        }
        if !spec.allocated.fits_within(&spec.capacity) {
            out.push(format!("node {name} allocates {} beyond capacity {}", spec.allocated, spec.capacity));
        }
        let mut sum = ResourceVector::ZERO;
        for r in &spec.resident {
            let Some((ns, pod)) = r.split_once('/') else { continue };
            match store.get_namespaced(Kind::Pod, ns, pod).and_then(|p| p.as_pod()) {
                Some(p) if p.node.as_deref() == Some(name) => sum += p.request,
                _ => out.push(format!("node {name} lists missing or misplaced pod {r}")),
            }
        }
        if sum != spec.allocated {
            out.push(format!("node {name} allocation {} differs from its pods' {sum}", spec.allocated));
        }
    }
    out
}

/// Pods on shared nodes run sandboxed, and no pod sits on a node reserved
/// for another namespace.
pub fn runtimes(store: &Store) -> Vec<String> {
    let mut out = Vec::new();
    for p in store.list(Kind::Pod) {
        let spec = p.as_pod().expect("pod");
        let Some(node) = spec.node.as_deref() else { continue };
        if spec.phase == PodPhase::Pending {
            continue;
        }
        let Some(n) = store.get_cluster(Kind::Node, node).and_then(|n| n.as_node()) else {
            out.push(format!("pod {} on unknown node {node}", p.key()));
            continue;
        };
        match &n.state {
            NodeState::Shared if spec.runtime_class != KATA => {
                out.push(format!("pod {} runs {} on shared node {node}", p.key(), spec.runtime_class));
            }
            NodeState::Reserved(s) if spec.phase == PodPhase::Scheduled => {
                let bound = store.get_cluster(Kind::Slice, s).and_then(|s| s.as_slice()).and_then(|s| s.bound_namespace.clone());
                if bound.as_deref() != p.namespace.as_deref() {
                    out.push(format!("pod {} scheduled on node {node} reserved for {bound:?}", p.key()));
                }
            }
            _ => {}
        }
    }
    out
}

/// The owner of the tenant a subtenant was carved from sees nothing inside
/// it, but may still delete its handle.
pub fn blindness(store: &Store) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let tree = store.tree();
    for node in tree.iter() {
        if node.spec.mode != Mode::Subtenant {
            continue;
        }
        let Some(parent) = node.spec.parent.as_deref() else { continue };
        let Some(vendor) = store
            .get_cluster(Kind::Tenant, &node.spec.tenant)
            .and_then(|t| t.as_tenant())
            .map(|t| t.owner.clone())
        else {
            continue;
        };
        if rbac_can(store, &vendor, Verb::Get, Kind::Pod, None) {
            continue;
        }
        let Ok(subtree) = tree.subtree(node.name()) else { continue };
        for ns in subtree {
            if !seen.insert((vendor.clone(), ns.to_string())) {
                continue;
            }
            let granted_here = store
                .list_in(Kind::RoleBinding, Some(ns))
                .any(|b| b.as_role_binding().is_some_and(|b| b.subjects.contains(&vendor)));
            if granted_here {
                continue;
            }
            for verb in [Verb::Get, Verb::List, Verb::Update] {
                if rbac_can(store, &vendor, verb, Kind::Pod, Some(ns)) {
                    out.push(format!("{vendor} can {verb:?} pods in subtenant namespace {ns}"));
                }
            }
        }
        if rbac_can(store, &vendor, Verb::Get, Kind::Pod, Some(parent))
            && !rbac_can(store, &vendor, Verb::Delete, Kind::Subnamespace, Some(parent))
        {
            out.push(format!("{vendor} cannot delete the handle of {} in {parent}", node.name()));
        }
    }
    out
}

/// Objects touched by `records` are identical in `live` and `replica`,
/// and both hold the same number of objects.
pub fn replica(live: &Store, replica: &Store, records: &[EventRecord]) -> Vec<String> {
    let mut out = Vec::new();
    if live.len() != replica.len() || live.seq() != replica.seq() {
        out.push(format!(
            "replica holds {} objects at seq {}, live {} at seq {}",
            replica.len(),
            replica.seq(),
            live.len(),
            live.seq()
        ));
    }
    for rec in records {
        let key: ObjectKey = rec.object.key();
        if live.get(&key) != replica.get(&key) {
            out.push(format!("replica differs on {key}"));
        }
    }
    out
}

/// Quota, node, runtime and blindness checks together.
pub fn all(store: &Store, now: SimTime) -> Vec<String> {
    let mut out = quota(store, now);
    out.extend(nodes(store));
    out.extend(runtimes(store));
    out.extend(blindness(store));
    out
}

/// Once a bound slice's grace period has passed, only pods of the bound
/// namespace remain on its nodes.
pub fn purity(store: &Store, now: SimTime) -> Vec<String> {
    let mut out = Vec::new();
    for s in store.list(Kind::Slice) {
        let spec = s.as_slice().expect("slice");
        let (Some(ns), Some(bound_at)) = (spec.bound_namespace.as_deref(), spec.bound_at) else { continue };
        if spec.phase != SlicePhase::Bound || now < bound_at + SimTime::from_millis(spec.grace_period_ms) {
            continue;
        }
        for n in &spec.nodes {
            let Some(node) = store.get_cluster(Kind::Node, n).and_then(|n| n.as_node()) else { continue };
            for r in &node.resident {
                if r.split_once('/').map(|(p, _)| p) != Some(ns) {
                    out.push(format!("foreign pod {r} on node {n} of slice {} past its grace period", s.name()));
                }
            }
        }
    }
    out
}
