//! Fixtures shared by the criterion benches.

use tenancy_core::cluster::node;
use tenancy_core::model::{NamespaceNode, NamespaceSpec, NamespaceTree, DEFAULT_NAMESPACE_THRESHOLD};
use tenancy_core::objects::{InheritKind, SubnamespaceSpec};
use tenancy_core::runtime::{cluster_uid_from_seed, ControllerConfig, LatencyModel, Plane, Store};
use tenancy_core::system::{create_subnamespace, establish_tenant, standard_plane, SystemConfig};
use tenancy_core::{Actor, ObjectMeta, ResourceVector};

pub fn zero_latency(controller: ControllerConfig) -> SystemConfig {
    SystemConfig { controller, latency: LatencyModel::zero(), ..SystemConfig::with_seed(0) }
}

/// A forest of `tenants` core namespaces, each the root of a complete
/// `fanout`-ary tree of the given depth.
pub fn forest(tenants: usize, fanout: usize, depth: usize) -> NamespaceTree {
    let mut tree = NamespaceTree::new(cluster_uid_from_seed(0), DEFAULT_NAMESPACE_THRESHOLD);
    for t in 0..tenants {
        let root = format!("t{t}");
        tree.insert(NamespaceNode::new(ObjectMeta::new(&root), NamespaceSpec::core(&root).with_quota(ResourceVector::cpu(1_000))))
            .unwrap();
        let mut level = vec![root.clone()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for parent in &level {
                for c in 0..fanout {
                    let name = format!("{parent}-{c}");
                    let spec = NamespaceSpec::sub(&root, parent, &name).with_quota(ResourceVector::cpu(10));
                    tree.insert(NamespaceNode::new(ObjectMeta::new(&name), spec)).unwrap();
                    next.push(name);
                }
            }
            level = next;
        }
    }
    tree
}

/// A plane with `tenants` established tenants, each with one synced
/// workspace subnamespace, and `nodes` shared nodes.
pub fn populated_plane(tenants: usize, nodes: usize) -> Plane {
    let mut p = standard_plane(&zero_latency(ControllerConfig::optimized()));
    for n in 0..nodes {
        p.create(&Actor::user("admin"), node(&format!("node-{n:03}"), ResourceVector::uniform(64_000), &[("zone", "edge")]))
            .unwrap();
    }
    for t in 0..tenants {
        let name = format!("t{t:04}");
        let owner = format!("owner-{name}");
        establish_tenant(&mut p, &name, &owner, Some(ResourceVector::uniform(10_000))).unwrap();
        let mut spec = SubnamespaceSpec::new("dev", &name);
        spec.inherit = [InheritKind::Role, InheritKind::RoleBinding].into();
        spec.sync = true;
        spec.quota = Some(ResourceVector::uniform(2_000));
        create_subnamespace(&mut p, &Actor::user(&owner), "dev", spec).unwrap();
    }
    p
}

/// The log of a populated plane, for replay benches.
pub fn sample_log(tenants: usize) -> (SystemConfig, Vec<tenancy_core::runtime::EventRecord>) {
    let cfg = zero_latency(ControllerConfig::optimized());
    let p = populated_plane(tenants, 4);
    (cfg, p.store().log().to_vec())
}

pub fn replay(cfg: &SystemConfig, log: &[tenancy_core::runtime::EventRecord]) -> Store {
    Store::replay(cfg.store_config(), log.iter().cloned()).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tenancy_core::model::subtree_quota;

    #[test]
    fn forest_has_expected_size() {
        let t = forest(2, 3, 2);
        assert_eq!(t.len(), 2 * (1 + 3 + 9));
        assert_eq!(subtree_quota(&t, "t0").unwrap().cpu, 1_000 + 12 * 10);
    }

    #[test]
    fn replay_matches_live_plane() {
        let (cfg, log) = sample_log(3);
        let store = replay(&cfg, &log);
        assert_eq!(store.tree().len(), 6);
    }
}
