use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

use tenancy_core::runtime::Store;
use tenancy_core::system::SystemConfig;

struct Cli {
    dir: TempDir,
}

impl Cli {
    fn new() -> Self {
        Cli { dir: tempfile::tempdir().unwrap() }
    }

    fn log(&self) -> PathBuf {
        self.dir.path().join("plane.log")
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_tenancy-plane"))
            .args(args)
            .current_dir(self.dir.path())
            .env("TENANCY_PLANE_LOG", self.log())
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn json(&self, args: &[&str]) -> serde_json::Value {
        let mut a = args.to_vec();
        a.push("--json");
        serde_json::from_str(&self.ok(&a)).unwrap()
    }
}

fn golden(name: &str, actual: &serde_json::Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let rendered = serde_json::to_string_pretty(actual).unwrap() + "\n";
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &rendered).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(rendered, expected, "{name} drifted; rerun with UPDATE_GOLDEN=1 if intended");
}

/// Tenants a (60) and b (40); a keeps 20, gives 25 to aa and 15 to ab,
/// which keeps 3 and gives 8 and 4 to aba and abb.
fn two_tenant_hierarchy(cli: &Cli) {
    cli.ok(&["tenant", "request", "a", "--owner", "alice", "--quota", "60"]);
    cli.ok(&["tenant", "approve", "a"]);
    cli.ok(&["tenant", "request", "b", "--owner", "bob", "--quota", "40"]);
    cli.ok(&["tenant", "approve", "b"]);
    cli.ok(&["subns", "create", "aa", "--parent", "a", "--quota", "25", "--as", "alice"]);
    let ab = cli.json(&["subns", "create", "ab", "--parent", "a", "--quota", "15", "--as", "alice"]);
    let ab = ab["namespace"].as_str().unwrap().to_string();
    cli.ok(&["subns", "create", "aba", "--parent", &ab, "--quota", "8", "--as", "alice"]);
    cli.ok(&["subns", "create", "abb", "--parent", &ab, "--quota", "4", "--as", "alice"]);
}

#[test]
fn quota_show_validates_hierarchy() {
    let cli = Cli::new();
    two_tenant_hierarchy(&cli);
    let text = cli.ok(&["quota", "show", "--validate"]);
    assert!(text.starts_with("OK\n"), "{text}");
    let v = cli.json(&["quota", "show", "--validate"]);
    assert_eq!(v["valid"], true);
    let sums: Vec<(String, u64)> = v["subtrees"]
        .as_object()
        .unwrap()
        .values()
        .map(|s| (s["display_name"].as_str().unwrap().to_string(), s["subtree_quota"]["cpu"].as_u64().unwrap()))
        .collect();
    assert_eq!(sums, [("a".to_string(), 60), ("ab".to_string(), 15), ("b".to_string(), 40)]);
    golden("quota_show.json", &v);
}

#[test]
fn list_output_is_stable() {
    let cli = Cli::new();
    two_tenant_hierarchy(&cli);
    golden("tenant_list.json", &cli.json(&["tenant", "list"]));
    golden("subns_tree.json", &cli.json(&["subns", "list", "--tree"]));
}

#[test]
fn replaying_the_log_reproduces_the_session() {
    let cli = Cli::new();
    two_tenant_hierarchy(&cli);
    cli.ok(&["node", "add", "n1", "--capacity", "cpu=8000", "--label", "zone=edge"]);
    cli.ok(&["slice", "create", "s1", "--nodes", "1", "--label", "zone=edge"]);
    cli.ok(&["claim", "create", "c1", "--namespace", "b", "--slice", "s1", "--as", "bob"]);
    cli.ok(&["subns", "delete", "aa", "--parent", "a", "--as", "alice"]);

    let live = cli.json(&["state", "snapshot"]);
    let store = Store::load_log(SystemConfig::default().store_config(), &cli.log()).unwrap();
    assert_eq!(live["objects"], serde_json::to_value(store.snapshot()).unwrap());
    assert_eq!(live["seq"], store.seq());

    let replayed = cli.json(&["state", "replay", cli.log().to_str().unwrap()]);
    assert_eq!(replayed["objects"], store.len());
}

#[test]
fn optimized_bench_creates_all_tenants() {
    let cli = Cli::new();
    let csv = cli.dir.path().join("run.csv");
    let v = cli.json(&[
        "bench", "tenants", "--count", "128", "--inter-arrival", "0", "--workers", "10", "--period-ms", "500", "--qps",
        "1000000", "--burst", "1000000", "--csv", csv.to_str().unwrap(),
    ]);
    for run in v["runs"].as_array().unwrap() {
        assert_eq!(run["aggregates"]["success_count"], 128);
    }
    let body = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(body.lines().count(), 129);
    assert!(csv.with_file_name("run.csv.json").exists());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = Cli::new().run(&["tenant", "list", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn refused_requests_exit_with_validation_code() {
    let cli = Cli::new();
    two_tenant_hierarchy(&cli);
    let out = cli.run(&["subns", "create", "big", "--parent", "a", "--quota", "100", "--as", "alice"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("insufficient"));
    let out = cli.run(&["tenant", "approve", "nobody"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cli.run(&["--workers", "0", "tenant", "list"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_log_is_an_internal_error() {
    let cli = Cli::new();
    std::fs::write(cli.log(), "{not json}\n").unwrap();
    let out = cli.run(&["tenant", "list"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn federated_names_do_not_collide() {
    let v = Cli::new().json(&["fed", "check-names", "--clusters", "3"]);
    assert_eq!(v["names"], 30_000);
    assert_eq!(v["collisions"], 0);
}

#[test]
fn role_request_needs_namespace_admin() {
    let cli = Cli::new();
    two_tenant_hierarchy(&cli);
    cli.ok(&["role-request", "create", "rr", "--namespace", "a", "--user", "carol", "--role", "view", "--as", "carol"]);
    assert_eq!(cli.run(&["role-request", "approve", "rr", "--namespace", "a", "--as", "carol"]).status.code(), Some(2));
    let v = cli.json(&["role-request", "approve", "rr", "--namespace", "a", "--as", "alice"]);
    assert_eq!(v["status"], "approved");
}
