//! A randomized workload over the whole plane with an incremental replica
//! of the event log, shared by the acceptance gate and the property tests.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tenancy_core::audit;
use tenancy_core::cluster::node;
use tenancy_core::model::{Mode, QuotaDelta};
use tenancy_core::objects::{
    ClaimMode, ClaimPhase, InheritKind, Kind, ObjectKey, PodSpec, SliceClaimSpec, SlicePhase, SliceSelector,
    SliceSpec, Spec, StoredObject, SubnamespaceSpec, KATA,
};
use tenancy_core::runtime::{Plane, Store, StoreConfig};
use tenancy_core::slicing::release_slice;
use tenancy_core::system::{decide_tenant_request, standard_plane, tenant_request, SystemConfig};
use tenancy_core::{Actor, ResourceVector, SimTime};

pub const NODES: usize = 6;

pub struct World {
    pub plane: Plane,
    pub replica: Store,
    rng: ChaCha8Rng,
    serial: u64,
    pub ops: [u64; 11],
}

fn admin() -> Actor {
    Actor::user("admin")
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.gen_range(0..items.len())])
    }
}

impl World {
    pub fn new(seed: u64) -> Self {
        let cfg = SystemConfig::with_seed(seed);
        let mut plane = standard_plane(&cfg);
        for i in 0..NODES {
            plane.create(&admin(), node(&format!("node-{i}"), ResourceVector::uniform(8_000), &[("zone", "edge")])).unwrap();
        }
        plane.run_until_idle();
        let replica = Store::replay(StoreConfig { ..cfg.store_config() }, Vec::new()).unwrap();
        World { plane, replica, rng: ChaCha8Rng::seed_from_u64(seed), serial: 0, ops: [0; 11] }
    }

    fn next(&mut self, prefix: &str) -> String {
        self.serial += 1;
        format!("{prefix}{}", self.serial)
    }

    fn namespaces(&self) -> Vec<String> {
        self.plane.store().tree().iter().map(|n| n.name().to_string()).collect()
    }

    fn keys(&self, kind: Kind) -> Vec<ObjectKey> {
        self.plane.store().list(kind).map(|o| o.key()).collect()
    }

    /// Applies one random operation and runs the plane until it is idle.
    pub fn step(&mut self) {
        let roll = self.rng.gen_range(0..100);
        let tenants = self.plane.store().list(Kind::Tenant).count();
        let op = match roll {
            _ if tenants == 0 => 0,
            0..=4 => 0,
            5..=24 => 1,
            25..=31 => 2,
            32..=36 => 3,
            37..=41 => 4,
            42..=48 => 5,
            49..=53 => 6,
            54..=79 => 7,
            80..=91 => 8,
            92..=96 => 9,
            _ => 10,
        };
        self.ops[op] += 1;
        match op {
            0 => self.create_tenant(),
            1 => self.create_subnamespace(),
            2 => self.delete_subnamespace(),
            3 => self.grant_quota(),
            4 => self.create_slice(),
            5 => self.claim_slice(),
            6 => self.release_slice(),
            7 => self.create_pod(),
            8 => self.delete_pod(),
            9 => self.plane.advance_by(SimTime::from_millis(self.rng.gen_range(1_000..90_000))),
            _ => self.plane.advance_by(SimTime::from_millis(self.rng.gen_range(1..500))),
        }
        self.plane.run_until_idle();
    }

    fn create_tenant(&mut self) {
        let name = self.next("t");
        let quota = self.rng.gen_bool(0.6).then(|| ResourceVector::uniform(self.rng.gen_range(10_000..60_000)));
        let owner = format!("owner-{name}");
        if self.plane.create(&Actor::user(&owner), tenant_request(&owner, &name, quota, self.rng.gen_bool(0.3))).is_ok() {
            decide_tenant_request(&mut self.plane, &admin(), &name, self.rng.gen_bool(0.9)).unwrap();
        }
    }

    fn create_subnamespace(&mut self) {
        let options = self.namespaces();
        let Some(parent) = pick(&mut self.rng, &options).cloned() else { return };
        let node = self.plane.store().tree().get(&parent).unwrap().spec.clone();
        let mut spec = SubnamespaceSpec::new(self.next("s"), &parent);
        if self.rng.gen_bool(0.25) {
            spec.mode = Mode::Subtenant;
            spec.owner = Some(self.next("cust"));
        } else {
            spec.inherit.insert(InheritKind::Role);
            spec.inherit.insert(InheritKind::RoleBinding);
        }
        for k in [InheritKind::NetworkPolicy, InheritKind::ConfigMap] {
            if self.rng.gen_bool(0.5) {
                spec.inherit.insert(k);
            }
        }
        spec.sync = self.rng.gen_bool(0.5);
        if node.quota_enforced {
            let cap = node.quota.cpu.max(1);
            let amount = self.rng.gen_range(0..cap + cap / 4);
            spec.quota = Some(ResourceVector::uniform(amount));
        }
        let handle = spec.requested_name.clone();
        let _ = self.plane.create(&admin(), StoredObject::namespaced(&parent, &handle, Spec::Subnamespace(spec)));
    }

    fn delete_subnamespace(&mut self) {
        let options = self.keys(Kind::Subnamespace);
        let Some(key) = pick(&mut self.rng, &options).cloned() else { return };
        let _ = self.plane.delete(&admin(), &key);
    }

    fn grant_quota(&mut self) {
        let tenants: Vec<ObjectKey> = self
            .plane
            .store()
            .list(Kind::Tenant)
            .filter(|t| t.as_tenant().is_some_and(|s| s.ledger.is_some()))
            .map(|t| t.key())
            .collect();
        let Some(key) = pick(&mut self.rng, &tenants).cloned() else { return };
        let amount = self.rng.gen_range(1..5_000);
        let now = self.plane.now();
        let mut t = self.plane.store().get(&key).unwrap().clone();
        let ledger = t.as_tenant_mut().unwrap().ledger.as_mut().unwrap();
        let delta = QuotaDelta {
            amount: ResourceVector::uniform(amount).to_signed(),
            expires_at: None,
            reason: "grant".into(),
        };
        if ledger.add_delta(delta, now).is_ok() {
            let _ = self.plane.update(&admin(), t);
        }
    }

    fn selector(&mut self) -> SliceSelector {
        SliceSelector {
            labels: [("zone".to_string(), "edge".to_string())].into(),
            node_count: self.rng.gen_range(1..=2),
            resources: ResourceVector::cpu(self.rng.gen_range(100..2_000)),
        }
    }

    fn create_slice(&mut self) {
        let name = self.next("slice");
        let sel = self.selector();
        let _ = self.plane.create(&admin(), StoredObject::cluster(&name, Spec::Slice(SliceSpec::new(sel))));
    }

    fn claim_slice(&mut self) {
        let options = self.namespaces();
        let Some(ns) = pick(&mut self.rng, &options).cloned() else { return };
        let manual: Vec<String> = self
            .plane
            .store()
            .list(Kind::Slice)
            .filter(|s| s.as_slice().is_some_and(|s| s.phase == SlicePhase::PreReserved && s.claim.is_none()))
            .map(|s| s.name().to_string())
            .collect();
        let (mode, slice_name) = match pick(&mut self.rng, &manual).cloned() {
            Some(s) if self.rng.gen_bool(0.5) => (ClaimMode::Manual, s),
            _ => (ClaimMode::Dynamic, self.next("dyn")),
        };
        let spec = SliceClaimSpec {
            mode,
            slice_name: slice_name.clone(),
            requested: self.selector(),
            phase: ClaimPhase::Pending,
            charged: None,
            reason: None,
        };
        let name = self.next("claim");
        let _ = self.plane.create(&admin(), StoredObject::namespaced(&ns, &name, Spec::SliceClaim(spec)));
    }

    fn release_slice(&mut self) {
        let options = self.keys(Kind::Slice);
        let Some(key) = pick(&mut self.rng, &options).cloned() else { return };
        let _ = release_slice(&mut self.plane.client(admin()), &key.name);
    }

    fn create_pod(&mut self) {
        let options = self.namespaces();
        let Some(ns) = pick(&mut self.rng, &options).cloned() else { return };
        let runtime = if self.rng.gen_bool(0.5) { KATA } else { "runc" };
        let cpu = self.rng.gen_range(50..3_000);
        let name = self.next("pod");
        let spec = PodSpec::new(runtime, ResourceVector { cpu, memory: cpu, ..ResourceVector::ZERO });
        let _ = self.plane.create(&admin(), StoredObject::namespaced(&ns, &name, Spec::Pod(spec)));
    }

    fn delete_pod(&mut self) {
        let options = self.keys(Kind::Pod);
        let Some(key) = pick(&mut self.rng, &options).cloned() else { return };
        let _ = self.plane.delete(&admin(), &key);
    }

    /// Feeds new log records to the replica and returns every invariant
    /// violation at this point.
    pub fn check(&mut self) -> Vec<String> {
        let fresh = self.plane.store().records_since(self.replica.seq()).to_vec();
        let mut out = Vec::new();
        for (i, rec) in fresh.iter().enumerate() {
            if let Err(e) = self.replica.apply_record(rec.clone(), i + 1) {
                out.push(format!("replica rejected record {}: {e}", rec.seq));
            }
        }
        out.extend(audit::replica(self.plane.store(), &self.replica, &fresh));
        let store = self.plane.store();
        out.extend(audit::quota(store, self.plane.now()));
        out.extend(audit::nodes(store));
        out.extend(audit::runtimes(store));
        let rbac_touched = fresh.iter().any(|r| {
            matches!(
                r.object.kind(),
                Kind::RoleBinding | Kind::Role | Kind::Tenant | Kind::NamespaceRecord | Kind::Subnamespace
            )
        });
        if rbac_touched {
            out.extend(audit::blindness(store));
        }
        out.extend(audit::purity(self.plane.store(), self.plane.now()));
        out
    }

    /// Rebuilds a store from the full log and compares it with the live one.
    pub fn replay_matches(&self) -> bool {
        let store = self.plane.store();
        let rebuilt = Store::replay(store.config().clone(), store.log().to_vec()).unwrap();
        rebuilt.snapshot() == store.snapshot()
    }
}
