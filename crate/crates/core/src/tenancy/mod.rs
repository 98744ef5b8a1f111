//! Reconcilers for tenants, tenant requests, subnamespaces and role
//! requests.

mod role_request;
mod subnamespace;
mod tenant;
mod tenant_request;

pub use role_request::{
    cluster_role_request_binding, role_request_binding, ClusterRoleRequestController, RoleRequestController, UNKNOWN_ROLE,
};
pub use subnamespace::{SubnamespaceController, COLLISION, SUBNAMESPACE_OWNER_BINDING};
pub use tenant::{TenantController, OWNER_BINDING, TENANT_NETWORK_POLICY};
pub use tenant_request::{TenantRequestController, DUPLICATE_TENANT, LABEL_REQUEST_UID};

use crate::error::StoreError;
use crate::meta::Phase;
use crate::objects::{ObjectKey, StoredObject};
use crate::runtime::{Client, EventOp, EventRecord, Outcome};

/// Failure reason for a tenant or subnamespace that would push the store
/// past its namespace threshold.
pub const THRESHOLD_REASON: &str = "namespace threshold reached";

pub(crate) fn own_key(rec: &EventRecord, kind: crate::objects::Kind) -> Vec<ObjectKey> {
    if rec.object.kind() == kind && rec.op != EventOp::Delete {
        vec![rec.object.key()]
    } else {
        Vec::new()
    }
}

/// Parks the object in `Failed` with `reason`.
pub(crate) fn fail(client: &mut dyn Client, key: &ObjectKey, reason: &str) -> Result<Outcome, StoreError> {
    client.modify(key, &mut |o| {
        if o.meta.phase == Phase::Failed && o.meta.failure_reason.as_deref() == Some(reason) {
            return false;
        }
        o.meta.phase = Phase::Failed;
        o.meta.failure_reason = Some(reason.to_string());
        true
    })?;
    Ok(Outcome::Settled)
}

pub(crate) fn establish(client: &mut dyn Client, key: &ObjectKey) -> Result<(), StoreError> {
    client.modify(key, &mut |o| {
        if o.meta.phase == Phase::Established {
            return false;
        }
        o.meta.phase = Phase::Established;
        o.meta.failure_reason = None;
        true
    })?;
    Ok(())
}

/// Creates `desired` or brings the live object's spec and labels in line
/// with it.
pub(crate) fn ensure_object(client: &mut dyn Client, desired: StoredObject) -> Result<(), StoreError> {
    match client.get(&desired.key()) {
        None => client.create(desired).map(|_| ()),
        Some(mut live) => {
            if live.spec == desired.spec && live.meta.labels == desired.meta.labels {
                return Ok(());
            }
            live.spec = desired.spec;
            live.meta.labels = desired.meta.labels;
            client.update(live).map(|_| ())
        }
    }
}

/// Deletes `key` if it exists.
pub(crate) fn ensure_absent(client: &mut dyn Client, key: &ObjectKey) -> Result<(), StoreError> {
    if client.store().get(key).is_some() {
        client.delete(key)?;
    }
    Ok(())
}
