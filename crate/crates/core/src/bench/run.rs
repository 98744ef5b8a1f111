use std::collections::HashMap;

use super::report::{Aggregates, BenchReport, Overhead, RequestRecord};
use super::spec::{BenchSpec, Experiment};
use crate::error::BenchError;
use crate::meta::Phase;
use crate::objects::{Decision, Kind, PodSpec, Spec, StoredObject, KATA};
use crate::rbac::Actor;
use crate::resources::ResourceVector;
use crate::runtime::{Client, EventOp, Plane, BOOTSTRAP_ADMIN};
use crate::system::{standard_plane, tenant_request, SystemConfig};
use crate::time::SimTime;

fn plane_for(spec: &BenchSpec) -> Plane {
    let cfg = SystemConfig {
        seed: spec.seed,
        controller: spec.controller,
        latency: spec.latency.with_seed(spec.seed),
        threshold: spec.threshold,
        ..SystemConfig::default()
    };
    standard_plane(&cfg)
}

fn ms(t: SimTime) -> f64 {
    t.as_micros() as f64 / 1_000.0
}

fn tenant_name(i: u64) -> String {
    format!("tenant-{i:05}")
}

/// Submits a tenant request and its approval at the current time. The two
/// writes are pipelined.
fn submit_tenant(plane: &mut Plane, name: &str) -> Result<(), BenchError> {
    let admin = Actor::user(BOOTSTRAP_ADMIN);
    let mut client = plane.client(admin.clone());
    let mut req = client.create(tenant_request(&format!("owner-{name}"), name, None, false))?;
    req.as_tenant_request_mut().expect("tenant request").decision =
        Some(Decision { by: admin.name().to_string(), approve: true });
    client.update(req)?;
    Ok(())
}

/// Tenant creation: `count` requests spaced `inter_arrival_s` apart, each
/// approved on arrival. A request is created when the request object is
/// stored and established when its Tenant turns `Established`.
pub fn run_tenant_bench(spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    spec.validate()?;
    let mut plane = plane_for(spec);
    let objects_before = plane.store().len();
    let seq_before = plane.store().seq();
    for i in 0..spec.count {
        plane.advance_to(SimTime::from_secs(i * spec.inter_arrival_s));
        submit_tenant(&mut plane, &tenant_name(i))?;
    }
    plane.run_until_idle();

    let mut created: HashMap<&str, SimTime> = HashMap::new();
    let mut established: HashMap<&str, SimTime> = HashMap::new();
    for rec in plane.store().records_since(seq_before) {
        match (rec.object.kind(), rec.op) {
            (Kind::TenantRequest, EventOp::Create) => {
                created.entry(rec.object.name()).or_insert(rec.at);
            }
            (Kind::Tenant, EventOp::Update) if rec.object.meta.phase == Phase::Established => {
                established.entry(rec.object.name()).or_insert(rec.at);
            }
            _ => {}
        }
    }
    let records: Vec<RequestRecord> = (0..spec.count)
        .map(|i| {
            let name = tenant_name(i);
            RequestRecord::new(
                i,
                ms(SimTime::from_secs(i * spec.inter_arrival_s)),
                created.get(name.as_str()).copied().map(ms),
                established.get(name.as_str()).copied().map(ms),
                spec.timeout_ms,
            )
        })
        .collect();
    let resident = (plane.store().len() - objects_before) as f64;
    let overhead = Overhead {
        per_tenant_resident_objects: if spec.count == 0 { 0.0 } else { resident / spec.count as f64 },
        per_tenant_dedicated_processes: 0,
    };
    Ok(BenchReport {
        spec: spec.clone(),
        aggregates: Aggregates::from_records(&records),
        records,
        overhead,
        store_writes: plane.store().seq() - seq_before,
    })
}

/// Pod creation: `tenants_for_pods` tenants are set up first, then `count`
/// pods are submitted together, round-robin across the tenants. A pod is
/// established once it is stored as `Pending`.
pub fn run_pod_bench(spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    spec.validate()?;
    let mut plane = plane_for(spec);
    let tenants: Vec<String> = (0..u64::from(spec.tenants_for_pods)).map(tenant_name).collect();
    for t in &tenants {
        submit_tenant(&mut plane, t)?;
    }
    plane.run_until_idle();
    let start = plane.now();
    let seq_before = plane.store().seq();
    let mut commits = Vec::with_capacity(spec.count as usize);
    for i in 0..spec.count {
        let tenant = &tenants[(i % tenants.len() as u64) as usize];
        let pod = StoredObject::namespaced(
            tenant,
            &format!("pod-{i:05}"),
            Spec::Pod(PodSpec::new(KATA, ResourceVector::cpu(1))),
        );
        let mut client = plane.client(Actor::user(format!("owner-{tenant}")));
        client.create(pod)?;
        commits.push(client.last_commit().expect("committed"));
    }
    plane.run_until_idle();
    let records: Vec<RequestRecord> = commits
        .iter()
        .enumerate()
        .map(|(i, &c)| RequestRecord::new(i as u64, ms(start), Some(ms(c)), Some(ms(c)), spec.timeout_ms))
        .collect();
    Ok(BenchReport {
        spec: spec.clone(),
        aggregates: Aggregates::from_records(&records),
        records,
        overhead: Overhead::default(),
        store_writes: plane.store().seq() - seq_before,
    })
}

pub fn run(spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    match spec.experiment {
        Experiment::TenantCreation => run_tenant_bench(spec),
        Experiment::PodCreation => run_pod_bench(spec),
    }
}

/// One report per repetition, seeded `seed`, `seed + 1`, ...
pub fn run_repeated(spec: &BenchSpec) -> Result<Vec<BenchReport>, BenchError> {
    (0..u64::from(spec.repetitions)).map(|r| run(&spec.clone().with_seed(spec.seed + r))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::LatencyModel;

    #[test]
    fn single_tenant_succeeds() {
        let r = run_tenant_bench(&BenchSpec::tenants(1, 0)).unwrap();
        assert_eq!(r.aggregates.success_count, 1);
        assert_eq!(r.overhead.per_tenant_dedicated_processes, 0);
    }

    #[test]
    fn empty_pod_run() {
        let r = run_pod_bench(&BenchSpec::pods(0, 0)).unwrap();
        assert!(r.records.is_empty());
        assert_eq!(r.aggregates.success_count, 0);
    }

    #[test]
    fn pods_are_pending_in_submission_order() {
        let spec = BenchSpec::pods(10, 3).with_latency(LatencyModel::constant_rate(1_000));
        let r = run_pod_bench(&spec).unwrap();
        let created: Vec<f64> = r.records.iter().map(|x| x.object_created_ms.unwrap() - x.submitted_ms).collect();
        assert_eq!(created, (1..=10).map(f64::from).collect::<Vec<_>>());
    }
}
