use std::collections::BTreeMap;

use crate::error::{ModelError, StoreError};
use crate::meta::{Phase, LABEL_CLUSTER_UID, LABEL_KIND, LABEL_TENANT, LABEL_TENANT_UID};
use crate::model::{subtree_quota, NamespaceKind, NamespaceSpec};
use crate::objects::{Kind, NetworkPolicySpec, ObjectKey, RoleBindingSpec, RoleRef, Spec, StoredObject};
use crate::rbac::CLUSTER_ROLE_ADMIN;
use crate::resources::ResourceVector;
use crate::runtime::{Client, EventRecord, Outcome, Reconciler, Store};

use super::{ensure_absent, ensure_object, establish, fail, own_key, THRESHOLD_REASON};

pub const OWNER_BINDING: &str = "tenant-owner";
pub const TENANT_NETWORK_POLICY: &str = "tenant-isolation";

/// Gives each tenant its core namespace, owner binding, optional
/// cluster-level network policy, and keeps the core namespace's own quota
/// equal to the ledger's grant minus what the children hold.
#[derive(Debug, Default)]
pub struct TenantController;

fn core_labels(name: &str, tenant_uid: &str, cluster_uid: &str) -> BTreeMap<String, String> {
    [
        (LABEL_KIND, NamespaceKind::Core.as_str()),
        (LABEL_TENANT, name),
        (LABEL_TENANT_UID, tenant_uid),
        (LABEL_CLUSTER_UID, cluster_uid),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

impl Reconciler for TenantController {
    fn name(&self) -> &'static str {
        "tenant"
    }

    fn keys_for(&self, _store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        own_key(rec, Kind::Tenant)
    }

    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
        let Some(tenant) = client.get(key) else { return Ok(Outcome::Settled) };
        if matches!(tenant.meta.phase, Phase::Failed | Phase::Terminating) {
            return Ok(Outcome::Settled);
        }
        let spec = tenant.as_tenant().expect("tenant").clone();
        let name = tenant.name().to_string();
        let tenant_uid = tenant.meta.uid.to_string();
        let now = client.now();
        let ns_key = ObjectKey::cluster(Kind::NamespaceRecord, &name);

        let grant = match &spec.ledger {
            Some(l) => Some(l.effective(now).unwrap_or(ResourceVector::ZERO)),
            None => None,
        };
        match client.get(&ns_key) {
            None => {
                let mut ns = NamespaceSpec::core(&name);
                ns.quota_enforced = grant.is_some();
                ns.quota = grant.unwrap_or_default();
                ns.network_policy_confined = spec.cluster_network_policy;
                ns.origin = Some(tenant.meta.uid);
                let mut obj = StoredObject::cluster(&name, Spec::NamespaceRecord(ns));
                obj.meta.labels = core_labels(&name, &tenant_uid, &client.store().cluster_uid().to_string());
                match client.create(obj) {
                    Ok(_) => {}
                    Err(StoreError::ThresholdExceeded { .. }) => return fail(client, key, THRESHOLD_REASON),
                    Err(StoreError::AlreadyExists(_)) => return fail(client, key, "namespace exists"),
                    Err(e) => return Err(e),
                }
            }
            Some(ns) => {
                if ns.meta.labels.get(LABEL_TENANT_UID) != Some(&tenant_uid) {
                    return fail(client, key, "namespace exists");
                }
                let mut desired = ns.as_namespace().expect("namespace").clone();
                if let Some(grant) = grant {
                    let tree = client.store().tree();
                    let held: ResourceVector = tree
                        .children(&name)
                        .map(|c| subtree_quota(tree, c))
                        .sum::<Result<ResourceVector, ModelError>>()?;
                    if let Some(own) = grant.checked_sub(&held) {
                        desired.quota = own;
                    }
                }
                desired.network_policy_confined = spec.cluster_network_policy;
                if &desired != ns.as_namespace().expect("namespace") {
                    let mut next = ns.clone();
                    *next.as_namespace_mut().expect("namespace") = desired;
                    client.update(next)?;
                }
            }
        }

        let np_key = ObjectKey::namespaced(Kind::NetworkPolicy, &name, TENANT_NETWORK_POLICY);
        if spec.cluster_network_policy {
            let selector = [(LABEL_TENANT_UID.to_string(), tenant_uid.clone())].into_iter().collect();
            ensure_object(
                client,
                StoredObject::namespaced(
                    &name,
                    TENANT_NETWORK_POLICY,
                    Spec::NetworkPolicy(NetworkPolicySpec { namespace_selector: selector, cluster_level: true }),
                ),
            )?;
        } else {
            ensure_absent(client, &np_key)?;
        }

        ensure_object(
            client,
            StoredObject::namespaced(
                &name,
                OWNER_BINDING,
                Spec::RoleBinding(RoleBindingSpec {
                    role_ref: RoleRef::ClusterRole(CLUSTER_ROLE_ADMIN.into()),
                    subjects: vec![spec.owner.clone()],
                }),
            ),
        )?;
        establish(client, key)?;

        match spec.ledger.as_ref().and_then(|l| l.next_expiry(now)) {
            Some(t) => Ok(Outcome::RequeueAfter(t.saturating_sub(client.now()))),
            None => Ok(Outcome::Settled),
        }
    }
}
