//! The uniform object envelope and every kind-specific payload.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use crate::meta::{ObjectMeta, Uid};
use crate::model::{Mode, NamespaceSpec, Scope, TenantQuotaLedger};
use crate::resources::ResourceVector;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Tenant,
    TenantRequest,
    Subnamespace,
    Slice,
    SliceClaim,
    RoleRequest,
    ClusterRoleRequest,
    Role,
    RoleBinding,
    NetworkPolicy,
    LimitRange,
    Secret,
    ConfigMap,
    ServiceAccount,
    Node,
    Pod,
    NamespaceRecord,
}

impl Kind {
    pub const ALL: [Kind; 17] = [
        Kind::Tenant,
        Kind::TenantRequest,
        Kind::Subnamespace,
        Kind::Slice,
        Kind::SliceClaim,
        Kind::RoleRequest,
        Kind::ClusterRoleRequest,
        Kind::Role,
        Kind::RoleBinding,
        Kind::NetworkPolicy,
        Kind::LimitRange,
        Kind::Secret,
        Kind::ConfigMap,
        Kind::ServiceAccount,
        Kind::Node,
        Kind::Pod,
        Kind::NamespaceRecord,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Tenant => "Tenant",
            Kind::TenantRequest => "TenantRequest",
            Kind::Subnamespace => "Subnamespace",
            Kind::Slice => "Slice",
            Kind::SliceClaim => "SliceClaim",
            Kind::RoleRequest => "RoleRequest",
            Kind::ClusterRoleRequest => "ClusterRoleRequest",
            Kind::Role => "Role",
            Kind::RoleBinding => "RoleBinding",
            Kind::NetworkPolicy => "NetworkPolicy",
            Kind::LimitRange => "LimitRange",
            Kind::Secret => "Secret",
            Kind::ConfigMap => "ConfigMap",
            Kind::ServiceAccount => "ServiceAccount",
            Kind::Node => "Node",
            Kind::Pod => "Pod",
            Kind::NamespaceRecord => "NamespaceRecord",
        }
    }

    /// Kinds that never live in a namespace. RoleBinding may be either:
    /// without a namespace it is a cluster-wide binding.
    pub fn is_cluster_scoped(self) -> bool {
        matches!(
            self,
            Kind::Tenant | Kind::TenantRequest | Kind::Slice | Kind::ClusterRoleRequest | Kind::Node | Kind::NamespaceRecord
        )
    }

    /// Kinds whose writes go through admission.
    pub fn is_policy_bearing(self) -> bool {
        matches!(
            self,
            Kind::Subnamespace
                | Kind::Slice
                | Kind::SliceClaim
                | Kind::RoleRequest
                | Kind::TenantRequest
                | Kind::ClusterRoleRequest
                | Kind::Pod
        )
    }

    /// Kinds that a client delete only marks `Terminating`; a controller
    /// finishes the removal.
    pub fn has_finalizer(self) -> bool {
        matches!(self, Kind::Subnamespace | Kind::Slice)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(kind, namespace, name)`, ordered by kind text, then namespace, then name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ObjectKey {
    pub kind: Kind,
    pub namespace: Option<String>,
    pub name: String,
}

impl ObjectKey {
    pub fn new(kind: Kind, namespace: Option<&str>, name: &str) -> Self {
        ObjectKey { kind, namespace: namespace.map(str::to_string), name: name.to_string() }
    }

    pub fn cluster(kind: Kind, name: &str) -> Self {
        Self::new(kind, None, name)
    }

    pub fn namespaced(kind: Kind, namespace: &str, name: &str) -> Self {
        Self::new(kind, Some(namespace), name)
    }
}

impl Ord for ObjectKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kind
            .as_str()
            .cmp(other.kind.as_str())
            .then_with(|| self.namespace.cmp(&other.namespace))
            .then_with(|| self.name.cmp(&other.name))
    }
}

impl PartialOrd for ObjectKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ObjectKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.namespace {
            Some(ns) => write!(f, "{}/{}/{}", self.kind, ns, self.name),
            None => write!(f, "{}/{}", self.kind, self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    Get,
    List,
    Create,
    Update,
    Delete,
    Approve,
}

impl Verb {
    pub const ALL: [Verb; 6] = [Verb::Get, Verb::List, Verb::Create, Verb::Update, Verb::Delete, Verb::Approve];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub verbs: BTreeSet<Verb>,
    /// Empty together with `all_kinds` means every kind.
    #[serde(default)]
    pub kinds: Vec<Kind>,
    #[serde(default)]
    pub all_kinds: bool,
}

impl PolicyRule {
    pub fn allows(&self, verb: Verb, kind: Kind) -> bool {
        self.verbs.contains(&verb) && (self.all_kinds || self.kinds.contains(&kind))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleRef {
    /// A Role object in the binding's namespace.
    Role(String),
    /// A provider-defined cluster role.
    ClusterRole(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub by: String,
    pub approve: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestStatus {
    #[default]
    Pending,
    Approved,
    Denied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TenantRequestSpec {
    pub owner: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quota: Option<ResourceVector>,
    #[serde(default)]
    pub cluster_network_policy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TenantSpec {
    pub owner: String,
    #[serde(default)]
    pub cluster_network_policy: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ledger: Option<TenantQuotaLedger>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tenant_uid: Option<Uid>,
}

/// Kinds that may be passed from a parent namespace to its child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InheritKind {
    Role,
    RoleBinding,
    NetworkPolicy,
    LimitRange,
    Secret,
    ConfigMap,
    ServiceAccount,
}

impl InheritKind {
    pub const ALL: [InheritKind; 7] = [
        InheritKind::Role,
        InheritKind::RoleBinding,
        InheritKind::NetworkPolicy,
        InheritKind::LimitRange,
        InheritKind::Secret,
        InheritKind::ConfigMap,
        InheritKind::ServiceAccount,
    ];

    pub fn kind(self) -> Kind {
        match self {
            InheritKind::Role => Kind::Role,
            InheritKind::RoleBinding => Kind::RoleBinding,
            InheritKind::NetworkPolicy => Kind::NetworkPolicy,
            InheritKind::LimitRange => Kind::LimitRange,
            InheritKind::Secret => Kind::Secret,
            InheritKind::ConfigMap => Kind::ConfigMap,
            InheritKind::ServiceAccount => Kind::ServiceAccount,
        }
    }

    pub fn from_kind(kind: Kind) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.kind() == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubnamespaceSpec {
    pub requested_name: String,
    pub parent: String,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub scope: Scope,
    #[serde(default)]
    pub inherit: BTreeSet<InheritKind>,
    /// Keep inherited copies in step with the parent.
    #[serde(default)]
    pub sync: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quota: Option<ResourceVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_claim: Option<String>,
    /// Name of the namespace produced, once known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child: Option<String>,
}

impl SubnamespaceSpec {
    pub fn new(requested_name: impl Into<String>, parent: impl Into<String>) -> Self {
        SubnamespaceSpec {
            requested_name: requested_name.into(),
            parent: parent.into(),
            mode: Mode::Workspace,
            scope: Scope::Local,
            inherit: BTreeSet::new(),
            sync: false,
            owner: None,
            quota: None,
            slice_claim: None,
            child: None,
        }
    }

    pub fn inherits_rbac(&self) -> bool {
        self.inherit.contains(&InheritKind::Role) && self.inherit.contains(&InheritKind::RoleBinding)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSelector {
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    pub node_count: u32,
    /// Minimum free capacity per node.
    #[serde(default)]
    pub resources: ResourceVector,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlicePhase {
    #[default]
    Provisioning,
    PreReserved,
    Bound,
    Failed,
    Terminating,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClaimRef {
    pub namespace: String,
    pub name: String,
}

pub const DEFAULT_GRACE_PERIOD_MS: u64 = 60_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub selector: SliceSelector,
    #[serde(default)]
    pub phase: SlicePhase,
    #[serde(default)]
    pub nodes: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_namespace: Option<String>,
    pub grace_period_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<ClaimRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_at: Option<SimTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub release_at: Option<SimTime>,
}

impl SliceSpec {
    pub fn new(selector: SliceSelector) -> Self {
        SliceSpec {
            selector,
            phase: SlicePhase::Provisioning,
            nodes: BTreeSet::new(),
            bound_namespace: None,
            grace_period_ms: DEFAULT_GRACE_PERIOD_MS,
            claim: None,
            bound_at: None,
            release_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimMode {
    #[default]
    Dynamic,
    Manual,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimPhase {
    #[default]
    Pending,
    Requested,
    Bound,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceClaimSpec {
    pub mode: ClaimMode,
    pub slice_name: String,
    pub requested: SliceSelector,
    #[serde(default)]
    pub phase: ClaimPhase,
    /// Usage charged to the namespace for a dynamically created slice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charged: Option<ResourceVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleRequestSpec {
    pub user: String,
    pub role: RoleRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(default)]
    pub status: RequestStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRoleRequestSpec {
    pub user: String,
    pub role: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<Decision>,
    #[serde(default)]
    pub status: RequestStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSpec {
    pub rules: Vec<PolicyRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleBindingSpec {
    pub role_ref: RoleRef,
    pub subjects: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkPolicySpec {
    /// Namespaces whose labels match may talk to the policy's namespace.
    #[serde(default)]
    pub namespace_selector: BTreeMap<String, String>,
    #[serde(default)]
    pub cluster_level: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LimitRangeSpec {
    pub max_per_pod: ResourceVector,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSpec {
    #[serde(default)]
    pub data: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceAccountSpec {}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "slice", rename_all = "snake_case")]
pub enum NodeState {
    #[default]
    Shared,
    PreReserved(String),
    Reserved(String),
}

impl NodeState {
    pub fn slice(&self) -> Option<&str> {
        match self {
            NodeState::Shared => None,
            NodeState::PreReserved(s) | NodeState::Reserved(s) => Some(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    pub capacity: ResourceVector,
    #[serde(default)]
    pub state: NodeState,
    /// Resident pods as `namespace/name`.
    #[serde(default)]
    pub resident: BTreeSet<String>,
    #[serde(default)]
    pub allocated: ResourceVector,
}

impl NodeSpec {
    pub fn new(capacity: ResourceVector) -> Self {
        NodeSpec {
            labels: BTreeMap::new(),
            capacity,
            state: NodeState::Shared,
            resident: BTreeSet::new(),
            allocated: ResourceVector::ZERO,
        }
    }

    pub fn free(&self) -> ResourceVector {
        self.capacity.saturating_sub(&self.allocated)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PodPhase {
    #[default]
    Pending,
    Scheduled,
    Terminating,
    Gone,
}

pub const KATA: &str = "kata";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PodSpec {
    pub runtime_class: String,
    pub request: ResourceVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node: Option<String>,
    #[serde(default)]
    pub phase: PodPhase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminate_at: Option<SimTime>,
}

impl PodSpec {
    pub fn new(runtime_class: impl Into<String>, request: ResourceVector) -> Self {
        PodSpec { runtime_class: runtime_class.into(), request, node: None, phase: PodPhase::Pending, terminate_at: None }
    }
}

/// Kind-specific payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Spec {
    Tenant(TenantSpec),
    TenantRequest(TenantRequestSpec),
    Subnamespace(SubnamespaceSpec),
    Slice(SliceSpec),
    SliceClaim(SliceClaimSpec),
    RoleRequest(RoleRequestSpec),
    ClusterRoleRequest(ClusterRoleRequestSpec),
    Role(RoleSpec),
    RoleBinding(RoleBindingSpec),
    NetworkPolicy(NetworkPolicySpec),
    LimitRange(LimitRangeSpec),
    Secret(DataSpec),
    ConfigMap(DataSpec),
    ServiceAccount(ServiceAccountSpec),
    Node(NodeSpec),
    Pod(PodSpec),
    NamespaceRecord(NamespaceSpec),
}

impl Spec {
    pub fn kind(&self) -> Kind {
        match self {
            Spec::Tenant(_) => Kind::Tenant,
            Spec::TenantRequest(_) => Kind::TenantRequest,
            Spec::Subnamespace(_) => Kind::Subnamespace,
            Spec::Slice(_) => Kind::Slice,
            Spec::SliceClaim(_) => Kind::SliceClaim,
            Spec::RoleRequest(_) => Kind::RoleRequest,
            Spec::ClusterRoleRequest(_) => Kind::ClusterRoleRequest,
            Spec::Role(_) => Kind::Role,
            Spec::RoleBinding(_) => Kind::RoleBinding,
            Spec::NetworkPolicy(_) => Kind::NetworkPolicy,
            Spec::LimitRange(_) => Kind::LimitRange,
            Spec::Secret(_) => Kind::Secret,
            Spec::ConfigMap(_) => Kind::ConfigMap,
            Spec::ServiceAccount(_) => Kind::ServiceAccount,
            Spec::Node(_) => Kind::Node,
            Spec::Pod(_) => Kind::Pod,
            Spec::NamespaceRecord(_) => Kind::NamespaceRecord,
        }
    }

    fn to_value(&self) -> Result<serde_json::Value, serde_json::Error> {
        match self {
            Spec::Tenant(s) => serde_json::to_value(s),
            Spec::TenantRequest(s) => serde_json::to_value(s),
            Spec::Subnamespace(s) => serde_json::to_value(s),
            Spec::Slice(s) => serde_json::to_value(s),
            Spec::SliceClaim(s) => serde_json::to_value(s),
            Spec::RoleRequest(s) => serde_json::to_value(s),
            Spec::ClusterRoleRequest(s) => serde_json::to_value(s),
            Spec::Role(s) => serde_json::to_value(s),
            Spec::RoleBinding(s) => serde_json::to_value(s),
            Spec::NetworkPolicy(s) => serde_json::to_value(s),
            Spec::LimitRange(s) => serde_json::to_value(s),
            Spec::Secret(s) | Spec::ConfigMap(s) => serde_json::to_value(s),
            Spec::ServiceAccount(s) => serde_json::to_value(s),
            Spec::Node(s) => serde_json::to_value(s),
            Spec::Pod(s) => serde_json::to_value(s),
            Spec::NamespaceRecord(s) => serde_json::to_value(s),
        }
    }

    fn from_value(kind: Kind, v: serde_json::Value) -> Result<Spec, serde_json::Error> {
        use serde_json::from_value as fv;
        Ok(match kind {
            Kind::Tenant => Spec::Tenant(fv(v)?),
            Kind::TenantRequest => Spec::TenantRequest(fv(v)?),
            Kind::Subnamespace => Spec::Subnamespace(fv(v)?),
            Kind::Slice => Spec::Slice(fv(v)?),
            Kind::SliceClaim => Spec::SliceClaim(fv(v)?),
            Kind::RoleRequest => Spec::RoleRequest(fv(v)?),
            Kind::ClusterRoleRequest => Spec::ClusterRoleRequest(fv(v)?),
            Kind::Role => Spec::Role(fv(v)?),
            Kind::RoleBinding => Spec::RoleBinding(fv(v)?),
            Kind::NetworkPolicy => Spec::NetworkPolicy(fv(v)?),
            Kind::LimitRange => Spec::LimitRange(fv(v)?),
            Kind::Secret => Spec::Secret(fv(v)?),
            Kind::ConfigMap => Spec::ConfigMap(fv(v)?),
            Kind::ServiceAccount => Spec::ServiceAccount(fv(v)?),
            Kind::Node => Spec::Node(fv(v)?),
            Kind::Pod => Spec::Pod(fv(v)?),
            Kind::NamespaceRecord => Spec::NamespaceRecord(fv(v)?),
        })
    }
}

/// Envelope for every object in the store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredObject {
    pub meta: ObjectMeta,
    pub namespace: Option<String>,
    pub spec: Spec,
    pub resource_version: u64,
}

macro_rules! accessors {
    ($($variant:ident => $ty:ty, $get:ident, $get_mut:ident;)*) => {
        impl StoredObject {
            $(
                pub fn $get(&self) -> Option<&$ty> {
                    match &self.spec {
                        Spec::$variant(s) => Some(s),
                        _ => None,
                    }
                }

                pub fn $get_mut(&mut self) -> Option<&mut $ty> {
                    match &mut self.spec {
                        Spec::$variant(s) => Some(s),
                        _ => None,
                    }
                }
            )*
        }
    };
}

accessors! {
    Tenant => TenantSpec, as_tenant, as_tenant_mut;
    TenantRequest => TenantRequestSpec, as_tenant_request, as_tenant_request_mut;
    Subnamespace => SubnamespaceSpec, as_subnamespace, as_subnamespace_mut;
    Slice => SliceSpec, as_slice, as_slice_mut;
    SliceClaim => SliceClaimSpec, as_slice_claim, as_slice_claim_mut;
    RoleRequest => RoleRequestSpec, as_role_request, as_role_request_mut;
    ClusterRoleRequest => ClusterRoleRequestSpec, as_cluster_role_request, as_cluster_role_request_mut;
    Role => RoleSpec, as_role, as_role_mut;
    RoleBinding => RoleBindingSpec, as_role_binding, as_role_binding_mut;
    Node => NodeSpec, as_node, as_node_mut;
    Pod => PodSpec, as_pod, as_pod_mut;
    NamespaceRecord => NamespaceSpec, as_namespace, as_namespace_mut;
}

impl StoredObject {
    pub fn new(namespace: Option<&str>, name: impl Into<String>, spec: Spec) -> Self {
        StoredObject {
            meta: ObjectMeta::new(name),
            namespace: namespace.map(str::to_string),
            spec,
            resource_version: 0,
        }
    }

    pub fn cluster(name: impl Into<String>, spec: Spec) -> Self {
        Self::new(None, name, spec)
    }

    pub fn namespaced(namespace: &str, name: impl Into<String>, spec: Spec) -> Self {
        Self::new(Some(namespace), name, spec)
    }

    pub fn kind(&self) -> Kind {
        self.spec.kind()
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }

    pub fn key(&self) -> ObjectKey {
        ObjectKey { kind: self.kind(), namespace: self.namespace.clone(), name: self.meta.name.clone() }
    }

    pub fn with_label(mut self, k: impl Into<String>, v: impl Into<String>) -> Self {
        self.meta.labels.insert(k.into(), v.into());
        self
    }
}

impl Serialize for StoredObject {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let spec = self.spec.to_value().map_err(serde::ser::Error::custom)?;
        let mut s = serializer.serialize_struct("StoredObject", 5)?;
        s.serialize_field("kind", &self.kind())?;
        s.serialize_field("meta", &self.meta)?;
        s.serialize_field("namespace", &self.namespace)?;
        s.serialize_field("spec", &spec)?;
        s.serialize_field("resource_version", &self.resource_version)?;
        s.end()
    }
}

#[derive(Deserialize)]
struct RawObject {
    kind: Kind,
    meta: ObjectMeta,
    #[serde(default)]
    namespace: Option<String>,
    spec: serde_json::Value,
    resource_version: u64,
}

impl<'de> Deserialize<'de> for StoredObject {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawObject::deserialize(deserializer)?;
        let spec = Spec::from_value(raw.kind, raw.spec).map_err(serde::de::Error::custom)?;
        Ok(StoredObject { meta: raw.meta, namespace: raw.namespace, spec, resource_version: raw.resource_version })
    }
}
