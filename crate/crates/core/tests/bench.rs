use tenancy_core::bench::{read_csv, run_pod_bench, run_repeated, run_tenant_bench, Aggregates, BenchReport, BenchSpec, CSV_HEADER};
use tenancy_core::runtime::{ControllerConfig, LatencyModel};

fn read_free(write_us: u64) -> LatencyModel {
    LatencyModel::constant_rate(write_us)
}

#[test]
fn lone_tenant_takes_one_service_time_per_write() {
    // With free reads and no contention, every write on the establishment
    // path waits for the one before it, so the tenant is established after
    // exactly one write service time per store record.
    let r = run_tenant_bench(&BenchSpec::tenants(1, 0).with_latency(read_free(4_000))).unwrap();
    let rec = &r.records[0];
    assert!(rec.success);
    assert_eq!(rec.established_ms.unwrap(), r.store_writes as f64 * 4.0);
    assert_eq!(rec.object_created_ms.unwrap(), 4.0);
}

#[test]
fn identical_seeds_give_identical_csv() {
    let spec = BenchSpec::tenants(40, 0).with_seed(11);
    let a = run_tenant_bench(&spec).unwrap().csv();
    let b = run_tenant_bench(&spec).unwrap().csv();
    assert_eq!(a, b);
    let c = run_tenant_bench(&spec.clone().with_seed(12)).unwrap().csv();
    assert_ne!(a, c);
}

#[test]
fn json_round_trip_keeps_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_tenant_bench(&BenchSpec::tenants(20, 2).with_seed(5)).unwrap();
    let loaded = BenchReport::from_json(&report.to_json().unwrap()).unwrap();
    let csv = dir.path().join("r.csv");
    let sidecar = loaded.write_csv(&csv).unwrap();
    let rows = read_csv(&csv).unwrap();
    assert_eq!(Aggregates::from_records(&rows), report.aggregates);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar).unwrap()).unwrap();
    assert_eq!(side["aggregates"]["success_count"], 20);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn doubling_pods_doubles_writes() {
    let one = run_pod_bench(&BenchSpec::pods(300, 4).with_latency(LatencyModel::zero())).unwrap();
    let two = run_pod_bench(&BenchSpec::pods(600, 4).with_latency(LatencyModel::zero())).unwrap();
    assert_eq!(two.store_writes, 2 * one.store_writes);
    assert!(one.store_writes > 0);
}

#[test]
fn optimized_config_finishes_sooner() {
    for seed in 0..2 {
        let d = run_tenant_bench(&BenchSpec::tenants(64, 0).with_seed(seed)).unwrap();
        let o = run_tenant_bench(&BenchSpec::tenants(64, 0).with_seed(seed).with_controller(ControllerConfig::optimized()))
            .unwrap();
        assert!(o.aggregates.total_completion_ms < d.aggregates.total_completion_ms);
    }
}

#[test]
fn resident_objects_per_tenant_do_not_depend_on_scale() {
    let small = run_tenant_bench(&BenchSpec::tenants(5, 2)).unwrap();
    let large = run_tenant_bench(&BenchSpec::tenants(50, 2)).unwrap();
    assert_eq!(small.overhead.per_tenant_resident_objects, large.overhead.per_tenant_resident_objects);
    assert_eq!(large.overhead.per_tenant_dedicated_processes, 0);
}

#[test]
fn repetitions_use_consecutive_seeds() {
    let reps = run_repeated(&BenchSpec::tenants(3, 0).with_seed(40)).unwrap();
    let seeds: Vec<u64> = reps.iter().map(|r| r.spec.seed).collect();
    assert_eq!(seeds, vec![40, 41, 42]);
}
