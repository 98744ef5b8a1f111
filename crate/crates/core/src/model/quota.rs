use std::fmt;

use serde::{Deserialize, Serialize};

use super::ledger::TenantQuotaLedger;
use super::tree::{NamespaceKind, NamespaceNode, NamespaceTree};
use crate::error::ModelError;
use crate::resources::{Resource, ResourceVector, SignedResourceVector};
use crate::time::SimTime;

/// Quota moved out of a parent's own portion, to be installed as a new
/// child's `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuotaGrant {
    pub amount: ResourceVector,
    /// The parent's own portion after the grant.
    pub parent_remaining: ResourceVector,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    /// The subtree total differs from the tenant's effective grant;
    /// `imbalance` is subtree minus grant.
    Imbalance { namespace: String, imbalance: SignedResourceVector },
    /// Enforced namespace whose usage exceeds its own portion.
    UsageExceedsQuota { namespace: String, component: Resource },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Imbalance { namespace, imbalance } => {
                write!(f, "subtree {namespace}: imbalance {imbalance}")
            }
            Violation::UsageExceedsQuota { namespace, component } => {
                write!(f, "namespace {namespace}: {component} usage exceeds quota")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("OK");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// `q(root)` plus the subtree quota of every child.
pub fn subtree_quota(tree: &NamespaceTree, root: &str) -> Result<ResourceVector, ModelError> {
    Ok(tree
        .subtree(root)?
        .into_iter()
        .filter_map(|n| tree.get(n))
        .map(|n| n.spec.quota)
        .sum())
}

/// Sum of `usage` over the subtree rooted at `root`.
pub fn subtree_usage(tree: &NamespaceTree, root: &str) -> Result<ResourceVector, ModelError> {
    Ok(tree
        .subtree(root)?
        .into_iter()
        .filter_map(|n| tree.get(n))
        .map(|n| n.spec.usage)
        .sum())
}

/// Checks that the tenant's whole tree adds up to the ledger's effective
/// grant at `now`, and that no enforced namespace is over its portion.
pub fn validate_partition(
    tree: &NamespaceTree,
    ledger: &TenantQuotaLedger,
    now: SimTime,
) -> Result<ValidationResult, ModelError> {
    let core = tree.node(&ledger.tenant)?;
    if core.spec.kind != NamespaceKind::Core {
        return Err(ModelError::InvalidHierarchy(format!("{} is not a core namespace", ledger.tenant)));
    }
    let mut violations = Vec::new();
    let total = subtree_quota(tree, &ledger.tenant)?;
    let granted = ledger.effective(now)?;
    if total != granted {
        violations.push(Violation::Imbalance {
            namespace: ledger.tenant.clone(),
            imbalance: SignedResourceVector::difference(&total, &granted),
        });
    }
    for name in tree.subtree(&ledger.tenant)? {
        let node = tree.node(name)?;
        if node.spec.quota_enforced {
            if let Some(component) = node.spec.usage.first_excess(&node.spec.quota) {
                violations.push(Violation::UsageExceedsQuota { namespace: name.to_string(), component });
            }
        }
    }
    Ok(ValidationResult { violations })
}

/// What the parent's own portion would be after granting `amount`.
pub fn check_allocation(
    tree: &NamespaceTree,
    parent: &str,
    amount: &ResourceVector,
) -> Result<QuotaGrant, ModelError> {
    let available = tree.node(parent)?.spec.quota;
    match available.checked_sub(amount) {
        Some(parent_remaining) => Ok(QuotaGrant { amount: *amount, parent_remaining }),
        None => {
            let component = amount.first_excess(&available).expect("underflow implies an excess");
            Err(ModelError::InsufficientQuota {
                component,
                requested: amount.get(component),
                available: available.get(component),
            })
        }
    }
}

/// Takes `amount` from `q(parent)`. The caller installs the grant as the
/// new child's quota, which keeps every ancestor's subtree total unchanged.
pub fn allocate_child_quota(
    tree: &mut NamespaceTree,
    parent: &str,
    amount: ResourceVector,
) -> Result<QuotaGrant, ModelError> {
    let grant = check_allocation(tree, parent, &amount)?;
    tree.node_mut(parent)?.spec.quota = grant.parent_remaining;
    Ok(grant)
}

/// Removes `child`'s subtree and returns its quota to the parent's own
/// portion. Refused while any namespace in the subtree has usage.
pub fn recoup_child_quota(tree: &mut NamespaceTree, child: &str) -> Result<ResourceVector, ModelError> {
    let node = tree.node(child)?;
    let parent = match (node.spec.kind, node.spec.parent.clone()) {
        (NamespaceKind::Sub, Some(p)) => p,
        _ => return Err(ModelError::NotSubnamespace(child.to_string())),
    };
    if !subtree_usage(tree, child)?.is_zero() {
        return Err(ModelError::SubtreeInUse(child.to_string()));
    }
    let recouped = subtree_quota(tree, child)?;
    tree.remove_subtree(child)?;
    tree.node_mut(&parent)?.spec.quota += recouped;
    Ok(recouped)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeOutcome {
    Admitted,
    Rejected { component: Resource },
}

/// Adds `request` to the namespace's usage if it still fits its quota.
/// Namespaces without quota enforcement always admit.
pub fn charge_usage(node: &mut NamespaceNode, request: &ResourceVector) -> ChargeOutcome {
    let next = node.spec.usage + *request;
    if node.spec.quota_enforced {
        if let Some(component) = next.first_excess(&node.spec.quota) {
            return ChargeOutcome::Rejected { component };
        }
    }
    node.spec.usage = next;
    ChargeOutcome::Admitted
}

/// Returns `request` from the namespace's usage.
pub fn release_usage(node: &mut NamespaceNode, request: &ResourceVector) {
    node.spec.usage = node.spec.usage.saturating_sub(request);
}
