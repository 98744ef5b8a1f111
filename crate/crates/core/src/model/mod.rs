//! Domain model and hierarchical quota arithmetic. Pure data; no I/O.
//!
//! A tenant's namespaces form a rooted tree. Every namespace `v` holds a
//! portion `q(v)` of the tenant's grant, and the grant of any subtree equals
//! the sum of the portions inside it:
//!
//! ```text
//! q(T_w) = q(w) + sum over children z of q(T_z)
//! ```
//!
//! Creating a child moves quota out of the parent's own portion; deleting a
//! child moves the whole subtree's quota back. Both leave every ancestor's
//! subtree total unchanged.

mod ledger;
mod quota;
mod tree;

pub use ledger::{QuotaDelta, TenantQuotaLedger};
pub use quota::{
    allocate_child_quota, charge_usage, check_allocation, recoup_child_quota, release_usage,
    subtree_quota, subtree_usage, validate_partition, ChargeOutcome, QuotaGrant,
    ValidationResult, Violation,
};
pub use tree::{Mode, NamespaceKind, NamespaceNode, NamespaceSpec, NamespaceTree, Scope};

/// Default cap on the number of namespaces in one store.
pub const DEFAULT_NAMESPACE_THRESHOLD: usize = 10_000;
