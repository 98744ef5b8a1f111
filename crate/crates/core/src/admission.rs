//! Mutating and validating admission, applied inside the store's write path
//! to every create, update and delete of a policy-bearing kind.
//!
//! Mutations run first and are expressed as JSON-pointer patches against the
//! serialized object; validation then sees the patched object. A decision is
//! applied whole or not at all.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::meta::is_dns_label;
use crate::model::{check_allocation, subtree_usage, Mode};
use crate::naming::NameRequest;
use crate::objects::{Kind, RoleRef, SlicePhase, SliceSelector, StoredObject, Verb, KATA};
use crate::rbac::{is_cluster_role, rbac_can, Actor};
use crate::runtime::Store;

/// Stable machine-readable deny reasons.
pub mod tokens {
    pub const FORBIDDEN: &str = "forbidden";
    pub const UNKNOWN_NAMESPACE: &str = "unknown-namespace";
    pub const OWNER_REQUIRED: &str = "owner-required";
    pub const VENDOR_BLINDNESS: &str = "vendor-blindness";
    pub const INSUFFICIENT_QUOTA: &str = "insufficient-quota";
    pub const MIXED_ENFORCEMENT: &str = "mixed-enforcement";
    pub const QUOTA: &str = "quota";
    pub const NODE_COUNT: &str = "node-count";
    pub const INVALID_NAME: &str = "invalid-name";
    pub const UNKNOWN_ROLE: &str = "unknown-role";
    pub const USER_REQUIRED: &str = "user-required";
    pub const IMMUTABLE: &str = "immutable";
    pub const SUBTREE_IN_USE: &str = "subtree-in-use";
    pub const INVALID: &str = "invalid";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Create,
    Update,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Denial {
    pub token: String,
    pub message: String,
}

impl Denial {
    pub fn new(token: &str, message: impl Into<String>) -> Self {
        Denial { token: token.to_string(), message: message.into() }
    }
}

impl fmt::Display for Denial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.token, self.message)
    }
}

impl std::error::Error for Denial {}

/// Replace the value at `path` (a JSON pointer into the object envelope).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub path: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Allow,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissionDecision {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mutations: Vec<Patch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<Denial>,
}

impl AdmissionDecision {
    pub fn allow() -> Self {
        AdmissionDecision { verdict: Verdict::Allow, mutations: Vec::new(), reason: None }
    }

    pub fn patch(mutations: Vec<Patch>) -> Self {
        AdmissionDecision { verdict: Verdict::Allow, mutations, reason: None }
    }

    pub fn deny(token: &str, message: impl Into<String>) -> Self {
        AdmissionDecision { verdict: Verdict::Deny, mutations: Vec::new(), reason: Some(Denial::new(token, message)) }
    }

    pub fn is_allowed(&self) -> bool {
        self.verdict == Verdict::Allow
    }
}

/// One write presented for admission.
#[derive(Debug, Clone, Copy)]
pub struct AdmissionRequest<'a> {
    pub op: Operation,
    pub actor: &'a Actor,
    pub object: &'a StoredObject,
    pub old: Option<&'a StoredObject>,
}

/// Runs the mutating and validating steps for `req`. Validation of an
/// object that mutation touched sees the patched version.
pub fn review(store: &Store, req: &AdmissionRequest<'_>) -> AdmissionDecision {
    let mutated;
    let mut mutations = Vec::new();
    let mut req = *req;
    if req.op != Operation::Delete {
        mutations = mutate(store, &req);
        if !mutations.is_empty() {
            mutated = match apply_mutations(req.object, &mutations) {
                Ok(o) => o,
                Err(d) => return AdmissionDecision { verdict: Verdict::Deny, mutations: Vec::new(), reason: Some(d) },
            };
            req.object = &mutated;
        }
    }
    match validate(store, &req) {
        Ok(()) => AdmissionDecision::patch(mutations),
        Err(d) => AdmissionDecision { verdict: Verdict::Deny, mutations: Vec::new(), reason: Some(d) },
    }
}

fn mutate(store: &Store, req: &AdmissionRequest<'_>) -> Vec<Patch> {
    let obj = req.object;
    let mut out = Vec::new();
    match obj.kind() {
        Kind::Pod => {
            if let (Some(pod), Some(ns)) = (obj.as_pod(), obj.namespace.as_deref()) {
                if !store.is_slice_bound(ns) && pod.runtime_class != KATA {
                    out.push(Patch { path: "/spec/runtime_class".into(), value: KATA.into() });
                }
            }
        }
        Kind::TenantRequest | Kind::RoleRequest | Kind::ClusterRoleRequest => {
            // A user's decision is always recorded under that user's name.
            if let Actor::User(user) = req.actor {
                let by = match obj.kind() {
                    Kind::TenantRequest => obj.as_tenant_request().and_then(|s| s.decision.as_ref()),
                    Kind::RoleRequest => obj.as_role_request().and_then(|s| s.decision.as_ref()),
                    _ => obj.as_cluster_role_request().and_then(|s| s.decision.as_ref()),
                }
                .map(|d| d.by.as_str());
                if by.is_some_and(|by| by != user) {
                    out.push(Patch { path: "/spec/decision/by".into(), value: user.clone().into() });
                }
            }
        }
        _ => {}
    }
    out
}

/// Applies `patches` to a copy of `obj`.
pub fn apply_mutations(obj: &StoredObject, patches: &[Patch]) -> Result<StoredObject, Denial> {
    let bad = |m: String| Denial::new(tokens::INVALID, m);
    let mut v = serde_json::to_value(obj).map_err(|e| bad(e.to_string()))?;
    for p in patches {
        let slot = v.pointer_mut(&p.path).ok_or_else(|| bad(format!("no field at {}", p.path)))?;
        *slot = p.value.clone();
    }
    serde_json::from_value(v).map_err(|e| bad(e.to_string()))
}

fn validate(store: &Store, req: &AdmissionRequest<'_>) -> Result<(), Denial> {
    match req.object.kind() {
        Kind::Pod => admit_pod(store, req),
        Kind::Subnamespace => admit_subnamespace(store, req),
        Kind::Slice => admit_slice(req),
        Kind::SliceClaim => admit_slice_claim(store, req),
        Kind::RoleRequest | Kind::ClusterRoleRequest => admit_role_request(store, req),
        Kind::TenantRequest => admit_tenant_request(req),
        _ => Ok(()),
    }
}

fn require_namespace<'a>(store: &'a Store, obj: &'a StoredObject) -> Result<&'a str, Denial> {
    let ns = obj
        .namespace
        .as_deref()
        .ok_or_else(|| Denial::new(tokens::INVALID, format!("{} must be namespaced", obj.kind())))?;
    if !store.tree().contains(ns) {
        return Err(Denial::new(tokens::UNKNOWN_NAMESPACE, format!("namespace {ns} does not exist")));
    }
    Ok(ns)
}

/// Quota check for pod creation; runtime-class mutation happens earlier.
pub fn admit_pod(store: &Store, req: &AdmissionRequest<'_>) -> Result<(), Denial> {
    if req.op == Operation::Delete {
        return Ok(());
    }
    let ns = require_namespace(store, req.object)?;
    let pod = req.object.as_pod().expect("pod payload");
    if let (Operation::Update, Some(old)) = (req.op, req.old.and_then(|o| o.as_pod())) {
        if old.request != pod.request {
            return Err(Denial::new(tokens::IMMUTABLE, "pod resource requests cannot change"));
        }
        return Ok(());
    }
    let node = store.tree().get(ns).expect("checked above");
    if node.spec.quota_enforced {
        let next = node.spec.usage + pod.request;
        if let Some(c) = next.first_excess(&node.spec.quota) {
            return Err(Denial::new(
                tokens::QUOTA,
                format!("{c} request {} exceeds remaining quota in {ns}", pod.request.get(c)),
            ));
        }
    }
    Ok(())
}

/// Structural and authority checks for subnamespace requests.
pub fn admit_subnamespace(store: &Store, req: &AdmissionRequest<'_>) -> Result<(), Denial> {
    let obj = req.object;
    let spec = obj.as_subnamespace().expect("subnamespace payload");
    let ns = obj
        .namespace
        .as_deref()
        .ok_or_else(|| Denial::new(tokens::INVALID, "subnamespace must live in its parent namespace"))?;
    if req.op == Operation::Delete {
        if let Some(child) = spec.child.as_deref() {
            if store.tree().contains(child) {
                let used = subtree_usage(store.tree(), child).map_err(|e| Denial::new(tokens::INVALID, e.to_string()))?;
                if !used.is_zero() {
                    return Err(Denial::new(tokens::SUBTREE_IN_USE, format!("namespaces under {child} still use {used}")));
                }
            }
        }
        return Ok(());
    }
    if spec.parent != ns {
        return Err(Denial::new(tokens::INVALID, format!("parent {} differs from namespace {ns}", spec.parent)));
    }
    let Some(parent) = store.tree().get(ns) else {
        return Err(Denial::new(tokens::UNKNOWN_NAMESPACE, format!("parent namespace {ns} does not exist")));
    };
    if let Actor::User(u) = req.actor {
        if !rbac_can(store, u, Verb::Create, Kind::Subnamespace, Some(ns)) {
            return Err(Denial::new(tokens::FORBIDDEN, format!("{u} may not create subnamespaces in {ns}")));
        }
    }
    if spec.mode == Mode::Subtenant && spec.inherits_rbac() {
        return Err(Denial::new(tokens::VENDOR_BLINDNESS, "a subtenant cannot inherit the parent's roles and bindings"));
    }
    if !spec.inherits_rbac() && spec.owner.as_deref().is_none_or(str::is_empty) {
        return Err(Denial::new(tokens::OWNER_REQUIRED, "an owner is required when roles are not inherited"));
    }
    if let Err(e) = (NameRequest {
        parent_namespace: ns.to_string(),
        requested_name: spec.requested_name.clone(),
        scope: spec.scope,
        cluster_uid: store.cluster_uid(),
    })
    .validate()
    {
        return Err(Denial::new(tokens::INVALID_NAME, e.to_string()));
    }
    if let Some(old) = req.old.and_then(|o| o.as_subnamespace()) {
        let mut a = old.clone();
        let mut b = spec.clone();
        a.child = None;
        b.child = None;
        if a != b {
            return Err(Denial::new(tokens::IMMUTABLE, "subnamespace spec cannot change after creation"));
        }
        return Ok(());
    }
    if let Some(q) = spec.quota.filter(|q| !q.is_zero()) {
        if !parent.spec.quota_enforced {
            return Err(Denial::new(tokens::MIXED_ENFORCEMENT, format!("tenant of {ns} has no quota enforcement")));
        }
        if let Err(e) = check_allocation(store.tree(), ns, &q) {
            return Err(Denial::new(tokens::INSUFFICIENT_QUOTA, e.to_string()));
        }
    }
    Ok(())
}

fn check_selector(sel: &SliceSelector) -> Result<(), Denial> {
    if sel.node_count < 1 {
        return Err(Denial::new(tokens::NODE_COUNT, "node_count must be at least 1"));
    }
    if sel.labels.keys().any(|k| k.is_empty()) {
        return Err(Denial::new(tokens::INVALID, "label keys must be non-empty"));
    }
    Ok(())
}

pub fn admit_slice(req: &AdmissionRequest<'_>) -> Result<(), Denial> {
    if req.op == Operation::Delete {
        return Ok(());
    }
    let s = req.object.as_slice().expect("slice payload");
    check_selector(&s.selector)?;
    if matches!(s.phase, SlicePhase::PreReserved | SlicePhase::Bound) && s.nodes.len() != s.selector.node_count as usize {
        return Err(Denial::new(tokens::INVALID, "a reserved slice must hold exactly node_count nodes"));
    }
    Ok(())
}

pub fn admit_slice_claim(store: &Store, req: &AdmissionRequest<'_>) -> Result<(), Denial> {
    if req.op == Operation::Delete {
        return Ok(());
    }
    require_namespace(store, req.object)?;
    let c = req.object.as_slice_claim().expect("claim payload");
    if !is_dns_label(&c.slice_name) {
        return Err(Denial::new(tokens::INVALID_NAME, format!("slice name {:?} is not a DNS label", c.slice_name)));
    }
    check_selector(&c.requested)
}

pub fn admit_role_request(store: &Store, req: &AdmissionRequest<'_>) -> Result<(), Denial> {
    if req.op == Operation::Delete {
        return Ok(());
    }
    let obj = req.object;
    let (user, known) = match obj.kind() {
        Kind::RoleRequest => {
            let ns = require_namespace(store, obj)?;
            let r = obj.as_role_request().expect("role request payload");
            let known = match &r.role {
                RoleRef::ClusterRole(name) => is_cluster_role(name),
                RoleRef::Role(name) => store.get_namespaced(Kind::Role, ns, name).is_some(),
            };
            (&r.user, known)
        }
        _ => {
            let r = obj.as_cluster_role_request().expect("cluster role request payload");
            (&r.user, is_cluster_role(&r.role))
        }
    };
    if user.is_empty() {
        return Err(Denial::new(tokens::USER_REQUIRED, "the requesting user is required"));
    }
    if !known {
        return Err(Denial::new(tokens::UNKNOWN_ROLE, "the requested role does not exist"));
    }
    Ok(())
}

pub fn admit_tenant_request(req: &AdmissionRequest<'_>) -> Result<(), Denial> {
    if req.op == Operation::Delete {
        return Ok(());
    }
    let r = req.object.as_tenant_request().expect("tenant request payload");
    if r.owner.is_empty() {
        return Err(Denial::new(tokens::OWNER_REQUIRED, "a tenant request names its owner"));
    }
    if !is_dns_label(req.object.name()) {
        return Err(Denial::new(tokens::INVALID_NAME, format!("{:?} is not a DNS label", req.object.name())));
    }
    Ok(())
}
