use crate::error::StoreError;
use crate::meta::Phase;
use crate::objects::{Kind, ObjectKey, RequestStatus, RoleBindingSpec, RoleRef, Spec, StoredObject, Verb};
use crate::rbac::{is_cluster_role, rbac_can};
use crate::runtime::{Client, EventRecord, Outcome, Reconciler, Store};

use super::{ensure_object, own_key};

pub const UNKNOWN_ROLE: &str = "UnknownRole";

fn settle(client: &mut dyn Client, key: &ObjectKey, status: RequestStatus, phase: Phase, reason: Option<&str>) -> Result<(), StoreError> {
    client.modify(key, &mut |o| {
        let current = match &o.spec {
            Spec::RoleRequest(s) => s.status,
            Spec::ClusterRoleRequest(s) => s.status,
            _ => return false,
        };
        if current == status && o.meta.phase == phase {
            return false;
        }
        match &mut o.spec {
            Spec::RoleRequest(s) => s.status = status,
            Spec::ClusterRoleRequest(s) => s.status = status,
            _ => {}
        }
        o.meta.phase = phase;
        o.meta.failure_reason = reason.map(str::to_string);
        true
    })?;
    Ok(())
}

fn clear_decision(client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
    client.modify(key, &mut |o| match &mut o.spec {
        Spec::RoleRequest(s) => s.decision.take().is_some(),
        Spec::ClusterRoleRequest(s) => s.decision.take().is_some(),
        _ => false,
    })?;
    Ok(Outcome::Settled)
}

/// Binds a role in one namespace once someone allowed to approve role
/// requests there has approved.
#[derive(Debug, Default)]
pub struct RoleRequestController;

pub fn role_request_binding(request: &str) -> String {
    format!("rr-{request}")
}

pub fn cluster_role_request_binding(request: &str) -> String {
    format!("crr-{request}")
}

impl Reconciler for RoleRequestController {
    fn name(&self) -> &'static str {
        "role-request"
    }

    fn keys_for(&self, _store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        own_key(rec, Kind::RoleRequest)
    }

    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
        let Some(req) = client.get(key) else { return Ok(Outcome::Settled) };
        if req.meta.phase != Phase::Pending {
            return Ok(Outcome::Settled);
        }
        let Some(ns) = req.namespace.clone() else { return Ok(Outcome::Settled) };
        let spec = req.as_role_request().expect("role request").clone();
        let Some(decision) = spec.decision else { return Ok(Outcome::Settled) };
        if !rbac_can(client.store(), &decision.by, Verb::Approve, Kind::RoleRequest, Some(&ns)) {
            return clear_decision(client, key);
        }
        if !decision.approve {
            settle(client, key, RequestStatus::Denied, Phase::Failed, Some("denied"))?;
            return Ok(Outcome::Settled);
        }
        let known = match &spec.role {
            RoleRef::ClusterRole(r) => is_cluster_role(r),
            RoleRef::Role(r) => client.store().get_namespaced(Kind::Role, &ns, r).is_some(),
        };
        if !known {
            settle(client, key, RequestStatus::Pending, Phase::Failed, Some(UNKNOWN_ROLE))?;
            return Ok(Outcome::Settled);
        }
        ensure_object(
            client,
            StoredObject::namespaced(
                &ns,
                &role_request_binding(req.name()),
                Spec::RoleBinding(RoleBindingSpec { role_ref: spec.role.clone(), subjects: vec![spec.user.clone()] }),
            ),
        )?;
        settle(client, key, RequestStatus::Approved, Phase::Established, None)?;
        Ok(Outcome::Settled)
    }
}

/// Binds a provider cluster role cluster-wide once a cluster
/// administrator has approved.
#[derive(Debug, Default)]
pub struct ClusterRoleRequestController;

impl Reconciler for ClusterRoleRequestController {
    fn name(&self) -> &'static str {
        "cluster-role-request"
    }

    fn keys_for(&self, _store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        own_key(rec, Kind::ClusterRoleRequest)
    }

    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
        let Some(req) = client.get(key) else { return Ok(Outcome::Settled) };
        if req.meta.phase != Phase::Pending {
            return Ok(Outcome::Settled);
        }
        let spec = req.as_cluster_role_request().expect("cluster role request").clone();
        let Some(decision) = spec.decision else { return Ok(Outcome::Settled) };
        if !rbac_can(client.store(), &decision.by, Verb::Approve, Kind::ClusterRoleRequest, None) {
            return clear_decision(client, key);
        }
        if !decision.approve {
            settle(client, key, RequestStatus::Denied, Phase::Failed, Some("denied"))?;
            return Ok(Outcome::Settled);
        }
        if !is_cluster_role(&spec.role) {
            settle(client, key, RequestStatus::Pending, Phase::Failed, Some(UNKNOWN_ROLE))?;
            return Ok(Outcome::Settled);
        }
        ensure_object(
            client,
            StoredObject::cluster(
                &cluster_role_request_binding(req.name()),
                Spec::RoleBinding(RoleBindingSpec {
                    role_ref: RoleRef::ClusterRole(spec.role.clone()),
                    subjects: vec![spec.user.clone()],
                }),
            ),
        )?;
        settle(client, key, RequestStatus::Approved, Phase::Established, None)?;
        Ok(Outcome::Settled)
    }
}
