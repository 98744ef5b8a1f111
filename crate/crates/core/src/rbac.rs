//! Permission evaluation over role bindings and the namespace hierarchy.
//!
//! A binding in a namespace grants its rules there. Bindings in an ancestor
//! also apply when every hop from that ancestor down to the target inherits
//! Role and RoleBinding; a subtenant hop never does, so a vendor cannot see
//! into its subtenants. Cluster-scoped bindings (no namespace) apply
//! everywhere.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::Mode;
use crate::objects::{Kind, PolicyRule, RoleRef, Verb};
use crate::runtime::Store;

/// Who issued a write. Controllers act as `System` and skip authorization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    System,
    User(String),
}

impl Actor {
    pub fn user(name: impl Into<String>) -> Self {
        Actor::User(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Actor::System => "system",
            Actor::User(u) => u,
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const CLUSTER_ROLE_ADMIN: &str = "admin";
pub const CLUSTER_ROLE_EDIT: &str = "edit";
pub const CLUSTER_ROLE_VIEW: &str = "view";

/// Rules of a provider-defined cluster role, or `None` if unknown.
pub fn cluster_role_rules(name: &str) -> Option<Vec<PolicyRule>> {
    let verbs = match name {
        CLUSTER_ROLE_ADMIN => Verb::ALL.to_vec(),
        CLUSTER_ROLE_EDIT => vec![Verb::Get, Verb::List, Verb::Create, Verb::Update, Verb::Delete],
        CLUSTER_ROLE_VIEW => vec![Verb::Get, Verb::List],
        _ => return None,
    };
    Some(vec![PolicyRule { verbs: verbs.into_iter().collect(), kinds: Vec::new(), all_kinds: true }])
}

pub fn is_cluster_role(name: &str) -> bool {
    cluster_role_rules(name).is_some()
}

fn role_allows(store: &Store, namespace: Option<&str>, role: &RoleRef, verb: Verb, kind: Kind) -> bool {
    match role {
        RoleRef::ClusterRole(name) => {
            cluster_role_rules(name).is_some_and(|rules| rules.iter().any(|r| r.allows(verb, kind)))
        }
        RoleRef::Role(name) => {
            let Some(ns) = namespace else { return false };
            store
                .get_namespaced(Kind::Role, ns, name)
                .and_then(|o| o.as_role())
                .is_some_and(|r| r.rules.iter().any(|rule| rule.allows(verb, kind)))
        }
    }
}

fn bindings_grant(store: &Store, user: &str, namespace: Option<&str>, verb: Verb, kind: Kind) -> bool {
    store.list_in(Kind::RoleBinding, namespace).any(|obj| {
        obj.as_role_binding().is_some_and(|b| {
            b.subjects.iter().any(|s| s == user) && role_allows(store, namespace, &b.role_ref, verb, kind)
        })
    })
}

/// Whether `user` may perform `verb` on objects of `kind` in `namespace`
/// (`None` for cluster-scoped objects).
pub fn rbac_can(store: &Store, user: &str, verb: Verb, kind: Kind, namespace: Option<&str>) -> bool {
    if bindings_grant(store, user, None, verb, kind) {
        return true;
    }
    let Some(target) = namespace else { return false };
    let tree = store.tree();
    let mut cur = target;
    let mut hops = 0;
    loop {
        if bindings_grant(store, user, Some(cur), verb, kind) {
            return true;
        }
        let Some(node) = tree.get(cur) else { return false };
        let chain_intact = node.spec.mode == Mode::Workspace && node.spec.inherits_rbac;
        match node.spec.parent.as_deref() {
            Some(parent) if chain_intact && hops <= tree.len() => {
                cur = parent;
                hops += 1;
            }
            _ => return false,
        }
    }
}
