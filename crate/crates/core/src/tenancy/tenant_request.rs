use crate::error::StoreError;
use crate::meta::Phase;
use crate::model::TenantQuotaLedger;
use crate::objects::{Kind, ObjectKey, Spec, StoredObject, TenantSpec, Verb};
use crate::rbac::rbac_can;
use crate::runtime::{Client, EventRecord, Outcome, Reconciler, Store};

use super::{establish, fail, own_key};

/// Label on a Tenant naming the UID of the request that produced it.
pub const LABEL_REQUEST_UID: &str = "request-uid";
pub const DUPLICATE_TENANT: &str = "DuplicateTenantName";

/// Turns approved tenant requests into Tenant objects.
///
/// A decision only counts when its author may approve tenant requests
/// cluster-wide; any other decision is cleared and the request stays
/// pending.
#[derive(Debug, Default)]
pub struct TenantRequestController;

impl Reconciler for TenantRequestController {
    fn name(&self) -> &'static str {
        "tenant-request"
    }

    fn keys_for(&self, _store: &Store, rec: &EventRecord) -> Vec<ObjectKey> {
        own_key(rec, Kind::TenantRequest)
    }

    fn reconcile(&self, client: &mut dyn Client, key: &ObjectKey) -> Result<Outcome, StoreError> {
        let Some(req) = client.get(key) else { return Ok(Outcome::Settled) };
        if matches!(req.meta.phase, Phase::Established | Phase::Failed | Phase::Terminating) {
            return Ok(Outcome::Settled);
        }
        let spec = req.as_tenant_request().expect("tenant request").clone();
        let Some(decision) = spec.decision.clone() else { return Ok(Outcome::Settled) };
        if !rbac_can(client.store(), &decision.by, Verb::Approve, Kind::TenantRequest, None) {
            client.modify(key, &mut |o| o.as_tenant_request_mut().and_then(|s| s.decision.take()).is_some())?;
            return Ok(Outcome::Settled);
        }
        if !decision.approve {
            return fail(client, key, "denied");
        }
        let request_uid = req.meta.uid.to_string();
        match client.store().get_cluster(Kind::Tenant, req.name()) {
            Some(t) if t.meta.labels.get(LABEL_REQUEST_UID) != Some(&request_uid) => {
                return fail(client, key, DUPLICATE_TENANT);
            }
            Some(_) => {}
            None => {
                let tenant = StoredObject::cluster(
                    req.name(),
                    Spec::Tenant(TenantSpec {
                        owner: spec.owner.clone(),
                        cluster_network_policy: spec.cluster_network_policy,
                        ledger: spec.quota.map(|q| TenantQuotaLedger::new(req.name(), q)),
                        tenant_uid: None,
                    }),
                )
                .with_label(LABEL_REQUEST_UID, request_uid);
                client.create(tenant)?;
            }
        }
        establish(client, key)?;
        Ok(Outcome::Settled)
    }
}
