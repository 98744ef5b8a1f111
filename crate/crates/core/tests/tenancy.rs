use tenancy_core::meta::{LABEL_CLUSTER_UID, LABEL_INHERITED_FROM, LABEL_KIND, LABEL_TENANT, LABEL_TENANT_UID};
use tenancy_core::model::{subtree_quota, validate_partition, Mode, TenantQuotaLedger};
use tenancy_core::objects::{
    ClusterRoleRequestSpec, DataSpec, Decision, InheritKind, Kind, NetworkPolicySpec, ObjectKey, RequestStatus,
    RoleRef, RoleRequestSpec, Spec, StoredObject, SubnamespaceSpec, Verb,
};
use tenancy_core::rbac::rbac_can;
use tenancy_core::system::{create_subnamespace, decide_tenant_request, establish_tenant, standard_plane, tenant_request, SystemConfig};
use tenancy_core::tenancy::{role_request_binding, COLLISION, DUPLICATE_TENANT, OWNER_BINDING};
use tenancy_core::{Actor, Phase, ResourceVector};

fn plane() -> tenancy_core::runtime::Plane {
    standard_plane(&SystemConfig::with_seed(7))
}

fn admin() -> Actor {
    Actor::user("admin")
}

fn child_of(p: &tenancy_core::runtime::Plane, parent: &str, handle: &str) -> String {
    let h = p.store().get_namespaced(Kind::Subnamespace, parent, handle).expect("handle");
    assert_eq!(h.meta.phase, Phase::Established, "{:?}", h.meta.failure_reason);
    h.as_subnamespace().unwrap().child.clone().unwrap()
}

#[test]
fn approved_request_yields_labelled_core_namespace() {
    let mut p = plane();
    assert_eq!(establish_tenant(&mut p, "a", "alice", Some(ResourceVector::cpu(60_000))).unwrap(), Phase::Established);
    let tenant = p.store().get_cluster(Kind::Tenant, "a").unwrap();
    let ns = p.store().get_cluster(Kind::NamespaceRecord, "a").unwrap();
    let labels = &ns.meta.labels;
    assert_eq!(labels.len(), 4);
    assert_eq!(labels[LABEL_KIND], "core");
    assert_eq!(labels[LABEL_TENANT], "a");
    assert_eq!(labels[LABEL_TENANT_UID], tenant.meta.uid.to_string());
    assert_eq!(labels[LABEL_CLUSTER_UID], p.store().cluster_uid().to_string());
    assert_eq!(ns.as_namespace().unwrap().quota, ResourceVector::cpu(60_000));
    assert!(p.store().get_namespaced(Kind::RoleBinding, "a", OWNER_BINDING).is_some());
    let req = p.store().get_cluster(Kind::TenantRequest, "a").unwrap();
    assert_eq!(req.meta.phase, Phase::Established);
    assert!(rbac_can(p.store(), "alice", Verb::Delete, Kind::Pod, Some("a")));
    assert!(!rbac_can(p.store(), "alice", Verb::Get, Kind::Pod, Some("b")));
}

#[test]
fn denied_request_creates_nothing() {
    let mut p = plane();
    p.create(&Actor::user("bob"), tenant_request("bob", "b", None, false)).unwrap();
    decide_tenant_request(&mut p, &admin(), "b", false).unwrap();
    p.run_until_idle();
    assert!(p.store().get_cluster(Kind::Tenant, "b").is_none());
    assert_eq!(p.store().get_cluster(Kind::TenantRequest, "b").unwrap().meta.phase, Phase::Failed);
}

#[test]
fn unauthorized_decision_is_ignored() {
    let mut p = plane();
    p.create(&Actor::user("bob"), tenant_request("bob", "b", None, false)).unwrap();
    decide_tenant_request(&mut p, &Actor::user("bob"), "b", true).unwrap();
    p.run_until_idle();
    assert!(p.store().get_cluster(Kind::Tenant, "b").is_none());
    let req = p.store().get_cluster(Kind::TenantRequest, "b").unwrap();
    assert_eq!(req.meta.phase, Phase::Pending);
    assert!(req.as_tenant_request().unwrap().decision.is_none());
}

#[test]
fn duplicate_tenant_name_fails_request() {
    let mut p = plane();
    establish_tenant(&mut p, "a", "alice", None).unwrap();
    p.delete(&admin(), &ObjectKey::cluster(Kind::TenantRequest, "a")).unwrap();
    p.run_until_idle();
    p.create(&Actor::user("mallory"), tenant_request("mallory", "a", None, false)).unwrap();
    decide_tenant_request(&mut p, &admin(), "a", true).unwrap();
    p.run_until_idle();
    let req = p.store().get_cluster(Kind::TenantRequest, "a").unwrap();
    assert_eq!(req.meta.phase, Phase::Failed);
    assert_eq!(req.meta.failure_reason.as_deref(), Some(DUPLICATE_TENANT));
}

#[test]
fn network_policy_follows_tenant_flag() {
    let mut p = plane();
    p.create(&Actor::user("alice"), tenant_request("alice", "a", None, true)).unwrap();
    decide_tenant_request(&mut p, &admin(), "a", true).unwrap();
    p.run_until_idle();
    let np = p.store().get_namespaced(Kind::NetworkPolicy, "a", "tenant-isolation").unwrap();
    let uid = p.store().get_cluster(Kind::Tenant, "a").unwrap().meta.uid.to_string();
    assert_eq!(np.as_network_policy_selector(), Some(uid));
}

trait Selector {
    fn as_network_policy_selector(&self) -> Option<String>;
}

impl Selector for StoredObject {
    fn as_network_policy_selector(&self) -> Option<String> {
        match &self.spec {
            Spec::NetworkPolicy(NetworkPolicySpec { namespace_selector, .. }) => namespace_selector.get(LABEL_TENANT_UID).cloned(),
            _ => None,
        }
    }
}

#[test]
fn workspace_subnamespace_taxes_parent_and_copies_policies() {
    let mut p = plane();
    establish_tenant(&mut p, "a", "alice", Some(ResourceVector::cpu(60))).unwrap();
    let np = StoredObject::namespaced(
        "a",
        "allow-web",
        Spec::NetworkPolicy(NetworkPolicySpec { namespace_selector: Default::default(), cluster_level: false }),
    );
    p.create(&Actor::user("alice"), np).unwrap();
    let mut spec = SubnamespaceSpec::new("aa", "a");
    spec.quota = Some(ResourceVector::cpu(25));
    spec.inherit = [InheritKind::NetworkPolicy, InheritKind::Role, InheritKind::RoleBinding].into();
    create_subnamespace(&mut p, &Actor::user("alice"), "aa", spec).unwrap();
    p.run_until_idle();
    let child = child_of(&p, "a", "aa");
    assert!(child.starts_with("aa-"));
    let tree = p.store().tree();
    assert_eq!(tree.get("a").unwrap().spec.quota, ResourceVector::cpu(35));
    assert_eq!(tree.get(&child).unwrap().spec.quota, ResourceVector::cpu(25));
    assert_eq!(subtree_quota(tree, "a").unwrap(), ResourceVector::cpu(60));
    let ledger = TenantQuotaLedger::new("a", ResourceVector::cpu(60));
    assert!(validate_partition(tree, &ledger, p.now()).unwrap().is_ok());
    let copy = p.store().get_namespaced(Kind::NetworkPolicy, &child, "allow-web").unwrap();
    assert_eq!(copy.meta.labels[LABEL_INHERITED_FROM], "a");
    let ns = p.store().get_cluster(Kind::NamespaceRecord, &child).unwrap();
    let core = p.store().get_cluster(Kind::NamespaceRecord, "a").unwrap();
    assert_eq!(ns.meta.labels[LABEL_TENANT_UID], core.meta.labels[LABEL_TENANT_UID]);
    assert_eq!(ns.meta.labels[LABEL_KIND], "sub");
    assert!(rbac_can(p.store(), "alice", Verb::Get, Kind::Pod, Some(&child)));
}

#[test]
fn re_reconcile_changes_nothing() {
    let mut p = plane();
    establish_tenant(&mut p, "a", "alice", Some(ResourceVector::cpu(60))).unwrap();
    let np = StoredObject::namespaced(
        "a",
        "allow-web",
        Spec::NetworkPolicy(NetworkPolicySpec { namespace_selector: Default::default(), cluster_level: false }),
    );
    p.create(&Actor::user("alice"), np).unwrap();
    let mut spec = SubnamespaceSpec::new("aa", "a");
    spec.quota = Some(ResourceVector::cpu(25));
    spec.sync = true;
    spec.inherit = [InheritKind::NetworkPolicy, InheritKind::Role, InheritKind::RoleBinding].into();
    create_subnamespace(&mut p, &Actor::user("alice"), "aa", spec).unwrap();
    let before = p.store().snapshot();
    let len = p.store().len();

    let mut h = p.store().get_namespaced(Kind::Subnamespace, "a", "aa").unwrap().clone();
    h.meta.labels.insert("touched".into(), "1".into());
    p.update(&Actor::user("alice"), h).unwrap();
    p.run_until_idle();

    assert_eq!(p.store().len(), len);
    let after = p.store().snapshot();
    let changed: Vec<_> = after
        .iter()
        .filter(|o| o.kind() != Kind::Subnamespace && !before.contains(o))
        .map(|o| o.key())
        .collect();
    assert!(changed.is_empty(), "{changed:?}");
    let tree = p.store().tree();
    assert_eq!(tree.get("a").unwrap().spec.quota, ResourceVector::cpu(35));
}

#[test]
fn subtenant_is_hidden_from_vendor_but_deletable() {
    let mut p = plane();
    establish_tenant(&mut p, "b", "vendor", Some(ResourceVector::cpu(40))).unwrap();
    let mut spec = SubnamespaceSpec::new("cust", "b");
    spec.mode = Mode::Subtenant;
    spec.owner = Some("customer".into());
    spec.quota = Some(ResourceVector::cpu(10));
    create_subnamespace(&mut p, &Actor::user("vendor"), "cust", spec).unwrap();
    let child = child_of(&p, "b", "cust");
    let ns = p.store().get_cluster(Kind::NamespaceRecord, &child).unwrap();
    let vendor_uid = p.store().get_cluster(Kind::NamespaceRecord, "b").unwrap().meta.labels[LABEL_TENANT_UID].clone();
    assert_ne!(ns.meta.labels[LABEL_TENANT_UID], vendor_uid);
    assert!(!rbac_can(p.store(), "vendor", Verb::Get, Kind::Pod, Some(&child)));
    assert!(rbac_can(p.store(), "customer", Verb::Get, Kind::Pod, Some(&child)));
    assert!(rbac_can(p.store(), "vendor", Verb::Delete, Kind::Subnamespace, Some("b")));

    p.delete(&Actor::user("vendor"), &ObjectKey::namespaced(Kind::Subnamespace, "b", "cust")).unwrap();
    p.run_until_idle();
    assert!(!p.store().tree().contains(&child));
    assert!(p.store().get_namespaced(Kind::Subnamespace, "b", "cust").is_none());
    assert_eq!(p.store().tree().get("b").unwrap().spec.quota, ResourceVector::cpu(40));
}

#[test]
fn insufficient_quota_is_refused() {
    let mut p = plane();
    establish_tenant(&mut p, "a", "alice", Some(ResourceVector::cpu(10))).unwrap();
    let mut spec = SubnamespaceSpec::new("big", "a");
    spec.inherit = [InheritKind::Role, InheritKind::RoleBinding].into();
    spec.quota = Some(ResourceVector::cpu(11));
    let res = create_subnamespace(&mut p, &Actor::user("alice"), "big", spec);
    assert!(res.is_err() || res.unwrap().meta.phase == Phase::Failed);
    assert_eq!(p.store().tree().get("a").unwrap().spec.quota, ResourceVector::cpu(10));
}

#[test]
fn continuous_sync_reaches_grandchildren() {
    let mut p = plane();
    establish_tenant(&mut p, "a", "alice", None).unwrap();
    let alice = Actor::user("alice");
    let cm = |v: &str| {
        StoredObject::namespaced("a", "settings", Spec::ConfigMap(DataSpec { data: [("v".to_string(), v.to_string())].into() }))
    };
    p.create(&alice, cm("1")).unwrap();
    let mut spec = SubnamespaceSpec::new("ab", "a");
    spec.inherit = [InheritKind::Role, InheritKind::RoleBinding, InheritKind::ConfigMap].into();
    spec.sync = true;
    create_subnamespace(&mut p, &alice, "ab", spec.clone()).unwrap();
    let ab = child_of(&p, "a", "ab");
    let mut spec2 = spec.clone();
    spec2.requested_name = "aba".into();
    spec2.parent = ab.clone();
    create_subnamespace(&mut p, &alice, "aba", spec2).unwrap();
    let aba = child_of(&p, &ab, "aba");

    let mut live = p.store().get_namespaced(Kind::ConfigMap, "a", "settings").unwrap().clone();
    live.spec = cm("2").spec;
    p.update(&alice, live).unwrap();
    p.run_until_idle();
    for ns in [&ab, &aba] {
        let c = p.store().get_namespaced(Kind::ConfigMap, ns, "settings").unwrap();
        assert_eq!(c.spec, cm("2").spec, "{ns}");
    }

    let mut local = p.store().get_namespaced(Kind::ConfigMap, &ab, "settings").unwrap().clone();
    local.spec = cm("tampered").spec;
    p.update(&alice, local).unwrap();
    p.run_until_idle();
    assert_eq!(p.store().get_namespaced(Kind::ConfigMap, &ab, "settings").unwrap().spec, cm("2").spec);
}

#[test]
fn unsynced_child_keeps_its_copy() {
    let mut p = plane();
    establish_tenant(&mut p, "a", "alice", None).unwrap();
    let alice = Actor::user("alice");
    let secret = |v: &str| Spec::Secret(DataSpec { data: [("k".to_string(), v.to_string())].into() });
    p.create(&alice, StoredObject::namespaced("a", "token", secret("1"))).unwrap();
    let mut spec = SubnamespaceSpec::new("ab", "a");
    spec.inherit = [InheritKind::Role, InheritKind::RoleBinding, InheritKind::Secret].into();
    create_subnamespace(&mut p, &alice, "ab", spec).unwrap();
    let ab = child_of(&p, "a", "ab");
    let mut live = p.store().get_namespaced(Kind::Secret, "a", "token").unwrap().clone();
    live.spec = secret("2");
    p.update(&alice, live).unwrap();
    p.run_until_idle();
    assert_eq!(p.store().get_namespaced(Kind::Secret, &ab, "token").unwrap().spec, secret("1"));
}

#[test]
fn same_name_twice_collides() {
    let mut p = plane();
    establish_tenant(&mut p, "a", "alice", None).unwrap();
    let alice = Actor::user("alice");
    let mut spec = SubnamespaceSpec::new("dup", "a");
    spec.inherit = [InheritKind::Role, InheritKind::RoleBinding].into();
    create_subnamespace(&mut p, &alice, "first", spec.clone()).unwrap();
    let second = create_subnamespace(&mut p, &alice, "second", spec).unwrap();
    assert_eq!(second.meta.phase, Phase::Failed);
    assert_eq!(second.meta.failure_reason.as_deref(), Some(COLLISION));
}

#[test]
fn role_request_needs_an_admin_in_the_namespace() {
    let mut p = plane();
    establish_tenant(&mut p, "a", "alice", None).unwrap();
    let rr = |by: Option<&str>| {
        StoredObject::namespaced(
            "a",
            "lead",
            Spec::RoleRequest(RoleRequestSpec {
                user: "carol".into(),
                role: RoleRef::ClusterRole("edit".into()),
                decision: by.map(|b| Decision { by: b.into(), approve: true }),
                status: RequestStatus::Pending,
            }),
        )
    };
    p.create(&Actor::user("carol"), rr(None)).unwrap();
    let mut obj = p.store().get_namespaced(Kind::RoleRequest, "a", "lead").unwrap().clone();
    obj.spec = rr(Some("mallory")).spec;
    p.update(&Actor::user("mallory"), obj).unwrap();
    p.run_until_idle();
    assert!(p.store().get_namespaced(Kind::RoleBinding, "a", &role_request_binding("lead")).is_none());
    assert_eq!(p.store().get_namespaced(Kind::RoleRequest, "a", "lead").unwrap().meta.phase, Phase::Pending);

    let mut obj = p.store().get_namespaced(Kind::RoleRequest, "a", "lead").unwrap().clone();
    obj.spec = rr(Some("alice")).spec;
    p.update(&Actor::user("alice"), obj).unwrap();
    p.run_until_idle();
    assert!(p.store().get_namespaced(Kind::RoleBinding, "a", &role_request_binding("lead")).is_some());
    assert!(rbac_can(p.store(), "carol", Verb::Update, Kind::Pod, Some("a")));
    assert!(!rbac_can(p.store(), "carol", Verb::Approve, Kind::RoleRequest, Some("a")));
}

#[test]
fn cluster_role_request_binds_cluster_wide() {
    let mut p = plane();
    let crr = StoredObject::cluster(
        "ops",
        Spec::ClusterRoleRequest(ClusterRoleRequestSpec {
            user: "dave".into(),
            role: "view".into(),
            decision: None,
            status: RequestStatus::Pending,
        }),
    );
    p.create(&Actor::user("dave"), crr).unwrap();
    let mut obj = p.store().get_cluster(Kind::ClusterRoleRequest, "ops").unwrap().clone();
    if let Spec::ClusterRoleRequest(s) = &mut obj.spec {
        s.decision = Some(Decision { by: "admin".into(), approve: true });
    }
    p.update(&admin(), obj).unwrap();
    p.run_until_idle();
    assert!(p.store().get_cluster(Kind::RoleBinding, "crr-ops").is_some());
    assert!(rbac_can(p.store(), "dave", Verb::List, Kind::Pod, Some("anywhere")));
}
