use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::meta::{ObjectMeta, Uid};
use crate::resources::ResourceVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamespaceKind {
    Core,
    Sub,
}

impl NamespaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NamespaceKind::Core => "core",
            NamespaceKind::Sub => "sub",
        }
    }
}

/// Consumer (`Workspace`) or vendor (`Subtenant`) tenancy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Workspace,
    Subtenant,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Workspace => "workspace",
            Mode::Subtenant => "subtenant",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    #[default]
    Local,
    Federated,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::Local => "local",
            Scope::Federated => "federated",
        })
    }
}

/// Payload of a stored namespace record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamespaceSpec {
    pub kind: NamespaceKind,
    pub tenant: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub mode: Mode,
    pub scope: Scope,
    /// `q(v)`: the portion reserved for this namespace itself.
    pub quota: ResourceVector,
    /// Aggregate requests of resident pods and dynamic slice charges.
    pub usage: ResourceVector,
    pub network_policy_confined: bool,
    /// Role and RoleBinding are inherited from the parent, so the parent's
    /// users keep their permissions here.
    #[serde(default)]
    pub inherits_rbac: bool,
    /// Quota is enforced for the whole tenant hierarchy or not at all.
    #[serde(default)]
    pub quota_enforced: bool,
    /// The name the tenant asked for (the object name carries a hash suffix).
    pub display_name: String,
    /// UID of the subnamespace object that produced this namespace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Uid>,
}

impl NamespaceSpec {
    pub fn core(tenant: impl Into<String>) -> Self {
        let tenant = tenant.into();
        NamespaceSpec {
            kind: NamespaceKind::Core,
            display_name: tenant.clone(),
            tenant,
            parent: None,
            mode: Mode::Workspace,
            scope: Scope::Local,
            quota: ResourceVector::ZERO,
            usage: ResourceVector::ZERO,
            network_policy_confined: false,
            inherits_rbac: false,
            quota_enforced: false,
            origin: None,
        }
    }

    pub fn sub(tenant: impl Into<String>, parent: impl Into<String>, display_name: impl Into<String>) -> Self {
        NamespaceSpec {
            kind: NamespaceKind::Sub,
            parent: Some(parent.into()),
            display_name: display_name.into(),
            ..NamespaceSpec::core(tenant)
        }
    }

    pub fn with_quota(mut self, quota: ResourceVector) -> Self {
        self.quota = quota;
        self
    }
}

/// A vertex of the namespace forest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamespaceNode {
    pub meta: ObjectMeta,
    pub spec: NamespaceSpec,
}

impl NamespaceNode {
    pub fn new(meta: ObjectMeta, spec: NamespaceSpec) -> Self {
        NamespaceNode { meta, spec }
    }

    pub fn name(&self) -> &str {
        &self.meta.name
    }
}

/// The namespace forest `T = (V, E)`. The virtual root is implicit: its
/// children are the tenants' core namespaces.
#[derive(Debug, Clone, PartialEq)]
pub struct NamespaceTree {
    cluster_uid: Uid,
    threshold: usize,
    nodes: BTreeMap<String, NamespaceNode>,
    children: BTreeMap<String, BTreeSet<String>>,
    roots: BTreeSet<String>,
}

impl NamespaceTree {
    pub fn new(cluster_uid: Uid, threshold: usize) -> Self {
        NamespaceTree {
            cluster_uid,
            threshold,
            nodes: BTreeMap::new(),
            children: BTreeMap::new(),
            roots: BTreeSet::new(),
        }
    }

    pub fn cluster_uid(&self) -> Uid {
        self.cluster_uid
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&NamespaceNode> {
        self.nodes.get(name)
    }

    pub fn node(&self, name: &str) -> Result<&NamespaceNode, ModelError> {
        self.nodes
            .get(name)
            .ok_or_else(|| ModelError::UnknownNamespace(name.to_string()))
    }

    pub(crate) fn node_mut(&mut self, name: &str) -> Result<&mut NamespaceNode, ModelError> {
        self.nodes
            .get_mut(name)
            .ok_or_else(|| ModelError::UnknownNamespace(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &NamespaceNode> {
        self.nodes.values()
    }

    /// Core namespaces, in name order.
    pub fn roots(&self) -> impl Iterator<Item = &str> {
        self.roots.iter().map(String::as_str)
    }

    pub fn children(&self, name: &str) -> impl Iterator<Item = &str> {
        self.children
            .get(name)
            .into_iter()
            .flat_map(|c| c.iter().map(String::as_str))
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.nodes.get(name).and_then(|n| n.spec.parent.as_deref())
    }

    /// Ancestors of `name`, nearest first, ending at the core namespace.
    pub fn ancestors(&self, name: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.parent(name);
        while let Some(p) = cur {
            if out.len() > self.nodes.len() {
                break;
            }
            out.push(p);
            cur = self.parent(p);
        }
        out
    }

    /// The core namespace at the top of `name`'s tree.
    pub fn core_of<'a>(&'a self, name: &'a str) -> Option<&'a str> {
        if !self.contains(name) {
            return None;
        }
        Some(self.ancestors(name).last().copied().unwrap_or(name))
    }

    /// All names in the subtree rooted at `root`, pre-order, root first.
    pub fn subtree(&self, root: &str) -> Result<Vec<&str>, ModelError> {
        let (key, _) = self
            .nodes
            .get_key_value(root)
            .ok_or_else(|| ModelError::UnknownNamespace(root.to_string()))?;
        let mut out = Vec::new();
        let mut stack = vec![key.as_str()];
        while let Some(n) = stack.pop() {
            out.push(n);
            if let Some(cs) = self.children.get(n) {
                stack.extend(cs.iter().rev().map(String::as_str));
            }
        }
        Ok(out)
    }

    /// Adds a vertex. Sub nodes need an existing parent; core nodes must not
    /// have one.
    pub fn insert(&mut self, node: NamespaceNode) -> Result<(), ModelError> {
        let name = node.meta.name.clone();
        if self.nodes.contains_key(&name) {
            return Err(ModelError::AlreadyExists(name));
        }
        if self.nodes.len() >= self.threshold {
            return Err(ModelError::ThresholdExceeded { threshold: self.threshold });
        }
        match (node.spec.kind, node.spec.parent.as_deref()) {
            (NamespaceKind::Core, None) => {
                self.roots.insert(name.clone());
            }
            (NamespaceKind::Sub, Some(parent)) => {
                if !self.nodes.contains_key(parent) {
                    return Err(ModelError::UnknownNamespace(parent.to_string()));
                }
                self.children
                    .entry(parent.to_string())
                    .or_default()
                    .insert(name.clone());
            }
            (NamespaceKind::Core, Some(_)) => {
                return Err(ModelError::InvalidHierarchy(format!("core namespace {name} has a parent")))
            }
            (NamespaceKind::Sub, None) => {
                return Err(ModelError::InvalidHierarchy(format!("subnamespace {name} has no parent")))
            }
        }
        self.nodes.insert(name, node);
        Ok(())
    }

    /// Replaces a vertex's payload. The parent edge cannot change.
    pub fn replace(&mut self, node: NamespaceNode) -> Result<(), ModelError> {
        let slot = self.node_mut(&node.meta.name)?;
        if slot.spec.parent != node.spec.parent || slot.spec.kind != node.spec.kind {
            return Err(ModelError::InvalidHierarchy(format!(
                "namespace {} cannot be re-parented",
                node.meta.name
            )));
        }
        *slot = node;
        Ok(())
    }

    /// Removes a leaf vertex.
    pub fn remove(&mut self, name: &str) -> Result<NamespaceNode, ModelError> {
        if self.children.get(name).is_some_and(|c| !c.is_empty()) {
            return Err(ModelError::InvalidHierarchy(format!("namespace {name} still has children")));
        }
        let node = self
            .nodes
            .remove(name)
            .ok_or_else(|| ModelError::UnknownNamespace(name.to_string()))?;
        self.children.remove(name);
        match node.spec.parent.as_deref() {
            Some(p) => {
                if let Some(cs) = self.children.get_mut(p) {
                    cs.remove(name);
                    if cs.is_empty() {
                        self.children.remove(p);
                    }
                }
            }
            None => {
                self.roots.remove(name);
            }
        }
        Ok(node)
    }

    /// Removes the whole subtree rooted at `root`, returning the removed
    /// vertices deepest-first.
    pub fn remove_subtree(&mut self, root: &str) -> Result<Vec<NamespaceNode>, ModelError> {
        let names: Vec<String> = self.subtree(root)?.into_iter().map(str::to_string).collect();
        let mut out = Vec::with_capacity(names.len());
        for n in names.iter().rev() {
            out.push(self.remove(n)?);
        }
        Ok(out)
    }

    /// Overwrites `q(name)`. Used to model administrative edits.
    pub fn set_quota(&mut self, name: &str, quota: ResourceVector) -> Result<(), ModelError> {
        self.node_mut(name)?.spec.quota = quota;
        Ok(())
    }
}
