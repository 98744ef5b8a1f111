use std::collections::BTreeMap;

use crate::error::{ModelError, StoreError};
use crate::meta::{Phase, Uid, LABEL_CLUSTER_UID, LABEL_INHERITED_FROM, LABEL_KIND, LABEL_TENANT, LABEL_TENANT_UID};
use crate::model::{check_allocation, subtree_quota, subtree_usage, Mode, NamespaceKind, NamespaceSpec};
use crate::naming::{NameRequest, Namer};
use crate::objects::{
    InheritKind, Kind, ObjectKey, RoleBindingSpec, RoleRef, Spec, StoredObject, SubnamespaceSpec,
};
use crate::rbac::CLUSTER_ROLE_ADMIN;
use crate::resources::ResourceVector;
use crate::runtime::{Client, EventOp, EventRecord, Outcome, Reconciler, Store};

use super::{ensure_object, fail, THRESHOLD_REASON};

pub const SUBNAMESPACE_OWNER_BINDING: &str = "subnamespace-owner";
pub const COLLISION: &str = "collision";

/// Creates the namespace behind each Subnamespace, copies inherited objects
/// into it and, on deletion, removes the whole subtree and hands its quota
/// back to the parent.
#[derive(Debug, Default)]
pub struct SubnamespaceController {
    namer: Namer,
}

impl SubnamespaceController {
    pub fn new(namer: Namer) -> Self {
        SubnamespaceController { namer }
    }

    fn child_name(&self, store: &Store, obj: &StoredObject) -> Result<String, String> {
        let spec = obj.as_subnamespace().expect("subnamespace");
        if let Some(c) = &spec.child {
            return Ok(c.clone());
        }
        let req = NameRequest {
            parent_namespace: spec.parent.clone(),
            requested_name: spec.requested_name.clone(),
            scope: spec.scope,
            cluster_uid: store.cluster_uid(),
        };
        self.namer.object_name(&req).map_err(|e| e.to_string())
    }
}

fn handles_in<'a>(store: &'a Store, parent: &str) -> impl Iterator<Item = &'a StoredObject> + 'a {
    store.list_in(Kind::Subnamespace, Some(parent))
}

fn child_labels(store: &Store, parent: &str, child: &str, spec: &SubnamespaceSpec, uid: Uid) -> BTreeMap<String, String> {
    let parent_labels = store
        .get_cluster(Kind::NamespaceRecord, parent)
        .map(|o| o.meta.labels.clone())
        .unwrap_or_default();
    let mut labels = BTreeMap::new();
    labels.insert(LABEL_KIND.to_string(), NamespaceKind::Sub.as_str().to_string());
    labels.insert(LABEL_CLUSTER_UID.to_string(), store.cluster_uid().to_string());
    match spec.mode {
        Mode::Workspace => {
            for l in [LABEL_TENANT, LABEL_TENANT_UID] {
                if let Some(v) = parent_labels.get(l) {
                    labels.insert(l.to_string(), v.clone());
                }
            }
        }
        Mode::Subtenant => {
            labels.insert(LABEL_TENANT.to_string(), child.to_string());
            labels.insert(LABEL_TENANT_UID.to_string(), uid.to_string());
        }
    }
    labels
}

fn inherited_copy(src: &StoredObject, parent: &str, child: &str) -> StoredObject {
    let mut copy = StoredObject::namespaced(child, src.name(), src.spec.clone());
    copy.meta.labels = src.meta.labels.clone();
    copy.meta.labels.insert(LABEL_INHERITED_FROM.to_string(), parent.to_string());
    copy
}

/// Brings the inherited objects in `child` in line with `parent`. Objects
/// created locally in the child are left alone; stale copies are removed
/// when `prune` is set.
fn sync_copies(
    client: &mut dyn Client,
    parent: &str,
    child: &str,
    kinds: &[InheritKind],
    prune: bool,
) -> Result<(), StoreError> {
    for ik in kinds {
        let kind = ik.kind();
        let sources: Vec<StoredObject> = client.store().list_in(kind, Some(parent)).cloned().collect();
        for src in &sources {
            let key = ObjectKey::namespaced(kind, child, src.name());
            if let Some(existing) = client.store().get(&key) {
                if existing.meta.labels.get(LABEL_INHERITED_FROM).map(String::as_str) != Some(parent) {
                    continue;
                }
            }
            ensure_object(client, inherited_copy(src, parent, child))?;
        }
        if prune {
            let stale: Vec<ObjectKey> = client
                .store()
                .list_in(kind, Some(child))
                .filter(|o| o.meta.labels.get(LABEL_INHERITED_FROM).map(String::as_str) == Some(parent))
                .filter(|o| !sources.iter().any(|s| s.name() == o.name()))
                .map(|o| o.key())
                .collect();
            for k in stale {
                client.delete(&k)?;
            }
        }
    }
    Ok(())
}

fn add_quota(client: &mut dyn Client, ns: &str, amount: ResourceVector, give: bool) -> Result<(), StoreError> {
    if amount.is_zero() {
        return Ok(());
    }
    let key = ObjectKey::cluster(Kind::NamespaceRecord, ns);
    client.modify(&key, &mut |o| {
        let spec = o.as_namespace_mut().expect("namespace");
        spec.quota = if give { spec.quota + amount } else { spec.quota.saturating_sub(&amount) };
        true
    })?;
    Ok(())
}

impl SubnamespaceController {
    fn establish(&self, client: &mut dyn Client, obj: &StoredObject) -> Result<Outcome, StoreError> {
        let key = obj.key();
        let spec = obj.as_subnamespace().expect("subnamespace").clone();
        let parent = spec.parent.clone();
        let Some(parent_node) = client.store().tree().get(&parent).cloned() else {
            return fail(client, &key, "unknown parent namespace");
        };
        let child = match self.child_name(client.store(), obj) {
            Ok(c) => c,
            Err(reason) => return fail(client, &key, &reason),
        };
        let fresh = match client.store().tree().get(&child) {
            Some(node) if node.spec.origin == Some(obj.meta.uid) => false,
            Some(_) => return fail(client, &key, COLLISION),
            None if obj.meta.phase == Phase::Established => return Ok(Outcome::Settled),
            None => true,
        };
        let inherit: Vec<InheritKind> = spec
            .inherit
            .iter()
            .copied()
            .filter(|k| spec.mode == Mode::Workspace || !matches!(k, InheritKind::Role | InheritKind::RoleBinding))
            .collect();

        if fresh {
            let amount = spec.quota.unwrap_or(ResourceVector::ZERO);
            if !amount.is_zero() {
                if let Err(e) = check_allocation(client.store().tree(), &parent, &amount) {
                    return fail(client, &key, &e.to_string());
                }
                let headroom = parent_node.spec.quota.saturating_sub(&parent_node.spec.usage);
                if parent_node.spec.quota_enforced {
                    if let Some(component) = amount.first_excess(&headroom) {
                        let e = ModelError::InsufficientQuota {
                            component,
                            requested: amount.get(component),
                            available: headroom.get(component),
                        };
                        return fail(client, &key, &e.to_string());
                    }
                }
            }
            add_quota(client, &parent, amount, false)?;
            let mut ns = NamespaceSpec::sub(parent_node.spec.tenant.clone(), &parent, &spec.requested_name)
                .with_quota(amount);
            ns.mode = spec.mode;
            ns.scope = spec.scope;
            ns.inherits_rbac = spec.inherits_rbac();
            ns.quota_enforced = parent_node.spec.quota_enforced;
            ns.network_policy_confined = parent_node.spec.network_policy_confined;
            ns.origin = Some(obj.meta.uid);
            let mut record = StoredObject::cluster(&child, Spec::NamespaceRecord(ns));
            record.meta.labels = child_labels(client.store(), &parent, &child, &spec, obj.meta.uid);
            match client.create(record) {
                Ok(_) => {}
                Err(e @ (StoreError::ThresholdExceeded { .. } | StoreError::AlreadyExists(_))) => {
                    add_quota(client, &parent, amount, true)?;
                    let reason = if matches!(e, StoreError::AlreadyExists(_)) { COLLISION } else { THRESHOLD_REASON };
                    return fail(client, &key, reason);
                }
                Err(e) => return Err(e),
            }
        }

        if let Some(owner) = &spec.owner {
            ensure_object(
                client,
                StoredObject::namespaced(
                    &child,
                    SUBNAMESPACE_OWNER_BINDING,
                    Spec::RoleBinding(RoleBindingSpec {
                        role_ref: RoleRef::ClusterRole(CLUSTER_ROLE_ADMIN.into()),
                        subjects: vec![owner.clone()],
                    }),
                ),
            )?;
        }
        if fresh || spec.sync {
            sync_copies(client, &parent, &child, &inherit, spec.sync)?;
        }

        client.modify(&key, &mut |o| {
            let changed = o.meta.phase != Phase::Established || o.as_subnamespace().unwrap().child.as_ref() != Some(&child);
            o.meta.phase = Phase::Established;
            o.meta.failure_reason = None;
            o.as_subnamespace_mut().unwrap().child = Some(child.clone());
            changed
        })?;
        Ok(Outcome::Settled)
    }

    fn finalize(&self, client: &mut dyn Client, obj: &StoredObject) -> Result<Outcome, StoreError> {
        let spec = obj.as_subnamespace().expect("subnamespace");
        let child = spec.child.clone().or_else(|| self.child_name(client.store(), obj).ok());
        let owned = child
            .as_deref()
            .and_then(|c| client.store().tree().get(c))
            .is_some_and(|n| n.spec.origin == Some(obj.meta.uid));
        if let (true, Some(child)) = (owned, child) {
            let tree = client.store().tree();
            if !subtree_usage(tree, &child)?.is_zero() {
                return Ok(Outcome::Retry);
            }
            let recouped = subtree_quota(tree, &child)?;
            let order: Vec<String> = tree.subtree(&child)?.into_iter().rev().map(String::from).collect();
            for ns in &order {
                let keys: Vec<ObjectKey> = Kind::ALL
                    .iter()
                    .filter(|k| !k.is_cluster_scoped())
                    .flat_map(|k| client.store().list_in(*k, Some(ns)).map(|o| o.key()).collect::<Vec<_>>())
                    .collect();
                for k in keys {
                    client.delete(&k)?;
                }
                client.delete(&ObjectKey::cluster(Kind::NamespaceRecord, ns))?;
            }
            if client.store().tree().contains(&spec.parent) {
                add_quota(client, &spec.parent, recouped, true)?;
            }
        }
        client.delete(&obj.key())?;
        Ok(Outcome::Settled)
    }
}

impl Reconciler for SubnamespaceController {
    fn name(&self) -> &'static str {
        "subnamespace"
    }

    fn keys_for(&self, store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        let kind = rec.object.kind();
        if kind == Kind::Subnamespace {
            return if rec.op == EventOp::Delete { Vec::new() } else { vec![rec.object.key()] };
        }
        let (Some(ik), Some(ns)) = (InheritKind::from_kind(kind), rec.object.namespace.as_deref()) else {
            return Vec::new();
        };
        let mut keys: Vec<ObjectKey> = handles_in(store, ns)
            .filter(|h| h.meta.phase == Phase::Established)
            .filter(|h| h.as_subnamespace().is_some_and(|s| s.sync && s.inherit.contains(&ik)))
            .map(|h| h.key())
            .collect();
        if let Some(p) = rec.object.meta.labels.get(LABEL_INHERITED_FROM) {
            keys.extend(
                handles_in(store, p)
                    .filter(|h| h.as_subnamespace().is_some_and(|s| s.sync && s.child.as_deref() == Some(ns)))
                    .map(|h| h.key()),
            );
        }
        keys
    }

    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
        let Some(obj) = client.get(key) else { return Ok(Outcome::Settled) };
        match obj.meta.phase {
            Phase::Failed => Ok(Outcome::Settled),
            Phase::Terminating => self.finalize(client, &obj),
            _ => self.establish(client, &obj),
        }
    }
}
