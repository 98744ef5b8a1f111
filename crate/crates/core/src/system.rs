//! Assembles a plane with every controller registered, plus the handful of
//! user-level operations the CLI and the harness share.

use std::rc::Rc;

use crate::cluster::{PodLifecycle, Scheduler};
use crate::error::StoreError;
use crate::meta::Phase;
use crate::naming::Namer;
use crate::objects::{
    Decision, Kind, ObjectKey, Spec, StoredObject, SubnamespaceSpec, TenantRequestSpec,
};
use crate::rbac::Actor;
use crate::resources::ResourceVector;
use crate::runtime::{ControllerConfig, LatencyModel, Plane, Store, StoreConfig};
use crate::slicing::{SliceClaimController, SliceController};
use crate::tenancy::{
    ClusterRoleRequestController, RoleRequestController, SubnamespaceController, TenantController,
    TenantRequestController,
};

#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub seed: u64,
    pub controller: ControllerConfig,
    pub latency: LatencyModel,
    pub threshold: usize,
    pub namer: Namer,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            seed: 0,
            controller: ControllerConfig::default(),
            latency: LatencyModel::default(),
            threshold: crate::model::DEFAULT_NAMESPACE_THRESHOLD,
            namer: Namer::default(),
        }
    }
}

impl SystemConfig {
    pub fn with_seed(seed: u64) -> Self {
        SystemConfig { seed, latency: LatencyModel::default().with_seed(seed), ..Self::default() }
    }

    pub fn store_config(&self) -> StoreConfig {
        StoreConfig { threshold: self.threshold, ..StoreConfig::seeded(self.seed) }
    }
}

/// Registers the tenancy, slicing and cluster controllers on `plane`.
pub fn register_controllers(plane: &mut Plane, cfg: &SystemConfig) {
    let c = cfg.controller;
    plane.add_controller(Rc::new(TenantRequestController), c);
    plane.add_controller(Rc::new(TenantController), c);
    plane.add_controller(Rc::new(SubnamespaceController::new(cfg.namer.clone())), c);
    plane.add_controller(Rc::new(RoleRequestController), c);
    plane.add_controller(Rc::new(ClusterRoleRequestController), c);
    plane.add_controller(Rc::new(SliceController), c);
    plane.add_controller(Rc::new(SliceClaimController), c);
    plane.add_controller(Rc::new(Scheduler), c);
    plane.add_controller(Rc::new(PodLifecycle), c);
}

/// A fresh store with every controller running over it.
pub fn standard_plane(cfg: &SystemConfig) -> Plane {
    plane_over(Store::new(cfg.store_config()), cfg)
}

/// Every controller running over an existing store.
pub fn plane_over(store: Store, cfg: &SystemConfig) -> Plane {
    let mut plane = Plane::new(store, cfg.latency);
    register_controllers(&mut plane, cfg);
    plane
}

pub fn tenant_request(owner: &str, name: &str, quota: Option<ResourceVector>, network_policy: bool) -> StoredObject {
    StoredObject::cluster(
        name,
        Spec::TenantRequest(TenantRequestSpec {
            owner: owner.to_string(),
            quota,
            cluster_network_policy: network_policy,
            decision: None,
        }),
    )
}

/// Records `actor`'s decision on the tenant request `name`.
pub fn decide_tenant_request(plane: &mut Plane, actor: &Actor, name: &str, approve: bool) -> Result<StoredObject, StoreError> {
    let key = ObjectKey::cluster(Kind::TenantRequest, name);
    let mut req = plane.store().get(&key).cloned().ok_or(StoreError::NotFound(key))?;
    req.as_tenant_request_mut().expect("tenant request").decision =
        Some(Decision { by: actor.name().to_string(), approve });
    plane.update(actor, req)
}

/// Requests, approves (as the bootstrap admin) and establishes a tenant.
pub fn establish_tenant(plane: &mut Plane, name: &str, owner: &str, quota: Option<ResourceVector>) -> Result<Phase, StoreError> {
    let admin = Actor::user(crate::runtime::BOOTSTRAP_ADMIN);
    plane.create(&Actor::user(owner), tenant_request(owner, name, quota, false))?;
    decide_tenant_request(plane, &admin, name, true)?;
    plane.run_until_idle();
    Ok(plane
        .store()
        .get_cluster(Kind::Tenant, name)
        .map(|t| t.meta.phase)
        .unwrap_or(Phase::Failed))
}

/// Submits a subnamespace under `parent` and runs the plane to quiescence.
/// Returns the stored handle.
pub fn create_subnamespace(
    plane: &mut Plane,
    actor: &Actor,
    name: &str,
    spec: SubnamespaceSpec,
) -> Result<StoredObject, StoreError> {
    let parent = spec.parent.clone();
    plane.create(actor, StoredObject::namespaced(&parent, name, Spec::Subnamespace(spec)))?;
    plane.run_until_idle();
    plane
        .store()
        .get_namespaced(Kind::Subnamespace, &parent, name)
        .cloned()
        .ok_or_else(|| StoreError::NotFound(ObjectKey::namespaced(Kind::Subnamespace, &parent, name)))
}
