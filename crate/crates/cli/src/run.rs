use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::{json, Value};

use tenancy_core::bench::{run_repeated, BenchReport, BenchSpec};
use tenancy_core::cluster::node;
use tenancy_core::model::{subtree_quota, validate_partition, Scope};
use tenancy_core::naming::{NameRequest, Namer};
use tenancy_core::objects::{
    ClaimMode, ClaimPhase, Decision, InheritKind, NodeState, RequestStatus, RoleRef, RoleRequestSpec,
    SliceClaimSpec, SliceSelector, SliceSpec,
};
use tenancy_core::rbac::is_cluster_role;
use tenancy_core::runtime::{cluster_uid_from_seed, LatencyModel, Plane, Store};
use tenancy_core::slicing::release_slice;
use tenancy_core::system::{decide_tenant_request, plane_over, tenant_request, SystemConfig};
use tenancy_core::{Actor, Kind, ObjectKey, Phase, Spec, StoredObject};

use crate::args::*;
use crate::{CliError, DEFAULT_LOG, LOG_ENV};

/// What a command prints. `ok == false` exits with the validation code
/// after printing.
pub struct Output {
    pub text: String,
    pub json: Value,
    pub ok: bool,
}

impl Output {
    fn new(text: String, json: Value) -> Self {
        Output { text, json, ok: true }
    }
}

type CliResult = Result<Output, CliError>;

fn log_path() -> PathBuf {
    std::env::var_os(LOG_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_LOG))
}

fn system_config(cli: &Cli) -> Result<SystemConfig, CliError> {
    let mut cfg = SystemConfig::with_seed(cli.seed);
    let c = &mut cfg.controller;
    if let Some(w) = cli.workers {
        c.workers = w;
    }
    if let Some(p) = cli.period_ms {
        c.period_ms = p;
    }
    if let Some(q) = cli.qps {
        c.qps = q;
    }
    if let Some(b) = cli.burst {
        c.burst = b;
    }
    c.validate().map_err(CliError::Invalid)?;
    Ok(cfg)
}

/// A plane over the persisted log. New records are appended as they
/// commit.
struct Session {
    plane: Plane,
}

impl Session {
    fn open(cfg: &SystemConfig) -> Result<Self, CliError> {
        let path = log_path();
        let mut store = if path.exists() {
            Store::load_log(cfg.store_config(), &path)?
        } else {
            let store = Store::new(cfg.store_config());
            store.write_log(&path)?;
            store
        };
        store.attach_sink(&path)?;
        let mut plane = plane_over(store, cfg);
        plane.run_until_idle();
        Ok(Session { plane })
    }

    fn settle(&mut self) -> Result<(), CliError> {
        self.plane.run_until_idle();
        self.plane.store_mut().flush()?;
        Ok(())
    }

    fn get(&self, key: &ObjectKey) -> Option<&StoredObject> {
        self.plane.store().get(key)
    }
}

pub fn dispatch(cli: Cli) -> CliResult {
    let cfg = system_config(&cli)?;
    match cli.command {
        Command::Bench(cmd) => bench(&cfg, cmd),
        Command::Fed(FedCmd::CheckNames { clusters, per_cluster }) => check_names(clusters, per_cluster),
        Command::State(StateCmd::Replay { log }) => replay(&cfg, log),
        command => {
            let mut s = Session::open(&cfg)?;
            let out = match command {
                Command::Tenant(c) => tenant(&mut s, c),
                Command::Subns(c) => subns(&mut s, c),
                Command::Quota(c) => quota(&mut s, c),
                Command::Slice(c) => slice(&mut s, c),
                Command::Claim(c) => claim(&mut s, c),
                Command::RoleRequest(c) => role_request(&mut s, c),
                Command::Node(c) => node_cmd(&mut s, c),
                Command::State(StateCmd::Snapshot { out }) => snapshot(&s, out),
                Command::Bench(_) | Command::Fed(_) | Command::State(StateCmd::Replay { .. }) => unreachable!(),
            };
            s.settle()?;
            out
        }
    }
}

fn phase_str(obj: &StoredObject) -> String {
    obj.meta.phase.to_string()
}

fn reason(obj: &StoredObject) -> Value {
    obj.meta.failure_reason.clone().map_or(Value::Null, Value::String)
}

fn lower<T: std::fmt::Debug>(v: &T) -> String {
    format!("{v:?}").to_lowercase()
}

fn tenant(s: &mut Session, cmd: TenantCmd) -> CliResult {
    match cmd {
        TenantCmd::Request { name, owner, quota, network_policy } => {
            s.plane.create(&Actor::user(&owner), tenant_request(&owner, &name, quota, network_policy))?;
            s.settle()?;
            let req = s.get(&ObjectKey::cluster(Kind::TenantRequest, &name)).expect("request stored");
            Ok(Output::new(
                format!("tenant request {name} submitted by {owner}, awaiting approval\n"),
                json!({ "request": name, "owner": owner, "phase": phase_str(req) }),
            ))
        }
        TenantCmd::Approve { name, id } => decide(s, name, id, true),
        TenantCmd::Deny { name, id } => decide(s, name, id, false),
        TenantCmd::List => {
            let store = s.plane.store();
            let mut text = String::new();
            let mut rows = Vec::new();
            for req in store.list(Kind::TenantRequest) {
                let spec = req.as_tenant_request().expect("tenant request");
                let tenant = store.get_cluster(Kind::Tenant, req.name());
                let tenant_phase = tenant.map(phase_str);
                let quota = spec.quota.map(|q| q.to_string());
                let _ = writeln!(
                    text,
                    "{:<24} owner={:<16} request={:<12} tenant={:<12} quota={}{}",
                    req.name(),
                    spec.owner,
                    phase_str(req),
                    tenant_phase.as_deref().unwrap_or("-"),
                    quota.as_deref().unwrap_or("-"),
                    req.meta.failure_reason.as_deref().map(|r| format!(" ({r})")).unwrap_or_default()
                );
                rows.push(json!({
                    "name": req.name(),
                    "owner": spec.owner,
                    "request_phase": phase_str(req),
                    "tenant_phase": tenant_phase,
                    "quota": spec.quota,
                    "reason": reason(req),
                }));
            }
            Ok(Output::new(text, json!({ "tenants": rows })))
        }
    }
}

fn decide(s: &mut Session, name: String, id: Identity, approve: bool) -> CliResult {
    decide_tenant_request(&mut s.plane, &Actor::user(&id.actor), &name, approve)?;
    s.settle()?;
    let req = s.get(&ObjectKey::cluster(Kind::TenantRequest, &name)).expect("request stored");
    let decided = req.as_tenant_request().and_then(|r| r.decision.clone()).is_some() || req.meta.phase != Phase::Pending;
    if !decided {
        return Err(CliError::Invalid(format!("{} may not decide tenant requests", id.actor)));
    }
    let tenant = s.get(&ObjectKey::cluster(Kind::Tenant, &name));
    let mut out = Output::new(
        match (approve, tenant) {
            (false, _) => format!("tenant request {name} denied\n"),
            (true, Some(t)) => format!(
                "tenant {name} {}{}\n",
                phase_str(t),
                t.meta.failure_reason.as_deref().map(|r| format!(": {r}")).unwrap_or_default()
            ),
            (true, None) => format!(
                "tenant request {name} {}{}\n",
                phase_str(req),
                req.meta.failure_reason.as_deref().map(|r| format!(": {r}")).unwrap_or_default()
            ),
        },
        json!({
            "request": name,
            "request_phase": phase_str(req),
            "tenant_phase": tenant.map(phase_str),
            "reason": tenant.map(reason).unwrap_or_else(|| reason(req)),
        }),
    );
    out.ok = !approve || tenant.is_some_and(|t| t.meta.phase == Phase::Established);
    Ok(out)
}

fn subns(s: &mut Session, cmd: SubnsCmd) -> CliResult {
    match cmd {
        SubnsCmd::Create { name, parent, quota, mode, scope, owner, inherit, sync, id } => {
            let mut spec = tenancy_core::objects::SubnamespaceSpec::new(&name, &parent);
            spec.quota = quota;
            spec.mode = mode.into();
            spec.scope = scope.into();
            spec.owner = owner;
            spec.inherit = inherit.into_iter().map(InheritKind::from).collect();
            spec.sync = sync;
            s.plane.create(&Actor::user(&id.actor), StoredObject::namespaced(&parent, &name, Spec::Subnamespace(spec)))?;
            s.settle()?;
            let h = s.get(&ObjectKey::namespaced(Kind::Subnamespace, &parent, &name)).expect("handle stored");
            let child = h.as_subnamespace().and_then(|x| x.child.clone());
            let mut out = Output::new(
                match &child {
                    Some(c) => format!("subnamespace {parent}/{name} -> namespace {c}\n"),
                    None => format!(
                        "subnamespace {parent}/{name} {}{}\n",
                        phase_str(h),
                        h.meta.failure_reason.as_deref().map(|r| format!(": {r}")).unwrap_or_default()
                    ),
                },
                json!({ "parent": parent, "name": name, "namespace": child, "phase": phase_str(h), "reason": reason(h) }),
            );
            out.ok = h.meta.phase == Phase::Established;
            Ok(out)
        }
        SubnsCmd::Delete { name, parent, id } => {
            let key = ObjectKey::namespaced(Kind::Subnamespace, &parent, &name);
            s.plane.delete(&Actor::user(&id.actor), &key)?;
            s.settle()?;
            let remaining = s.get(&key).map(phase_str);
            let text = match &remaining {
                None => format!("subnamespace {parent}/{name} deleted\n"),
                Some(p) => format!("subnamespace {parent}/{name} is {p}; its namespaces still hold pods\n"),
            };
            Ok(Output::new(text, json!({ "parent": parent, "name": name, "remaining_phase": remaining })))
        }
        SubnsCmd::List { tree: false } => {
            let mut text = String::new();
            let mut rows = Vec::new();
            for h in s.plane.store().list(Kind::Subnamespace) {
                let spec = h.as_subnamespace().expect("subnamespace");
                let parent = h.namespace.clone().unwrap_or_default();
                let _ = writeln!(
                    text,
                    "{parent}/{} -> {} mode={} phase={}",
                    h.name(),
                    spec.child.as_deref().unwrap_or("-"),
                    spec.mode,
                    phase_str(h)
                );
                rows.push(json!({
                    "parent": parent,
                    "name": h.name(),
                    "namespace": spec.child,
                    "mode": spec.mode.to_string(),
                    "phase": phase_str(h),
                }));
            }
            Ok(Output::new(text, json!({ "subnamespaces": rows })))
        }
        SubnsCmd::List { tree: true } => {
            let tree = s.plane.store().tree();
            let mut text = String::new();
            let mut roots: Vec<&str> = tree.roots().collect();
            roots.sort();
            let mut nodes = Vec::new();
            for root in roots {
                let mut stack = vec![(root, 0usize)];
                while let Some((n, depth)) = stack.pop() {
                    let node = tree.get(n).expect("tree node");
                    let sq = subtree_quota(tree, n).unwrap_or_default();
                    let _ = writeln!(
                        text,
                        "{}{} [{}] quota={} subtree={} usage={}",
                        "  ".repeat(depth),
                        n,
                        node.spec.mode,
                        node.spec.quota,
                        sq,
                        node.spec.usage
                    );
                    nodes.push(json!({
                        "name": n,
                        "parent": node.spec.parent,
                        "depth": depth,
                        "mode": node.spec.mode.to_string(),
                        "quota": node.spec.quota,
                        "subtree_quota": sq,
                        "usage": node.spec.usage,
                    }));
                    let mut children: Vec<&str> = tree.children(n).collect();
                    children.sort();
                    stack.extend(children.into_iter().rev().map(|c| (c, depth + 1)));
                }
            }
            Ok(Output::new(text, json!({ "namespaces": nodes })))
        }
    }
}

fn quota(s: &mut Session, cmd: QuotaCmd) -> CliResult {
    match cmd {
        QuotaCmd::Set { tenant, quota } => {
            let key = ObjectKey::cluster(Kind::Tenant, &tenant);
            let mut t = s.get(&key).cloned().ok_or_else(|| CliError::Invalid(format!("no tenant {tenant}")))?;
            let ledger = t
                .as_tenant_mut()
                .and_then(|t| t.ledger.as_mut())
                .ok_or_else(|| CliError::Invalid(format!("tenant {tenant} was created without quota enforcement")))?;
            ledger.base = quota;
            s.plane.update(&Actor::System, t)?;
            s.settle()?;
            let core = s.plane.store().tree().get(&tenant).map(|n| n.spec.quota);
            Ok(Output::new(
                format!("tenant {tenant} grant set to {quota}\n"),
                json!({ "tenant": tenant, "grant": quota, "core_quota": core }),
            ))
        }
        QuotaCmd::Show { tenant, validate } => {
            let store = s.plane.store();
            let tree = store.tree();
            let now = s.plane.now();
            let mut roots: Vec<&str> = tree.roots().filter(|r| tenant.as_deref().is_none_or(|t| t == *r)).collect();
            roots.sort();
            if let Some(t) = &tenant {
                if roots.is_empty() {
                    return Err(CliError::Invalid(format!("no tenant namespace {t}")));
                }
            }
            let mut text = String::new();
            let mut sums = BTreeMap::new();
            let mut problems = Vec::new();
            for root in roots {
                for n in tree.subtree(root).unwrap_or_default() {
                    let node = tree.get(n).expect("tree node");
                    if !tree.children(n).any(|_| true) && node.spec.parent.is_some() {
                        continue;
                    }
                    let sq = subtree_quota(tree, n).unwrap_or_default();
                    let _ = writeln!(text, "{n} ({}) subtree={sq}", node.spec.display_name);
                    sums.insert(n.to_string(), json!({ "display_name": node.spec.display_name, "subtree_quota": sq }));
                }
                if validate {
                    let ledger = store.get_cluster(Kind::Tenant, root).and_then(|t| t.as_tenant()).and_then(|t| t.ledger.clone());
                    if let Some(ledger) = ledger {
                        match validate_partition(tree, &ledger, now) {
                            Ok(r) => problems.extend(r.violations.iter().map(|v| format!("{root}: {v}"))),
                            Err(e) => problems.push(format!("{root}: {e}")),
                        }
                    }
                }
            }
            let mut json = json!({ "subtrees": sums });
            if validate {
                if problems.is_empty() {
                    text.insert_str(0, "OK\n");
                } else {
                    text.insert_str(0, &format!("INVALID\n{}\n", problems.join("\n")));
                }
                json["valid"] = json!(problems.is_empty());
                json["violations"] = json!(problems);
            }
            let mut out = Output::new(text, json);
            out.ok = problems.is_empty();
            Ok(out)
        }
    }
}

fn selector(a: SelectorArgs) -> SliceSelector {
    SliceSelector { labels: a.labels.into_iter().collect(), node_count: a.nodes, resources: a.resources }
}

fn slice(s: &mut Session, cmd: SliceCmd) -> CliResult {
    match cmd {
        SliceCmd::Create { name, selector: sel } => {
            s.plane.create(&Actor::user("admin"), StoredObject::cluster(&name, Spec::Slice(SliceSpec::new(selector(sel)))))?;
            s.settle()?;
            let obj = s.get(&ObjectKey::cluster(Kind::Slice, &name)).expect("slice stored");
            let spec = obj.as_slice().expect("slice");
            let nodes: Vec<&String> = spec.nodes.iter().collect();
            let mut out = Output::new(
                format!(
                    "slice {name} {}{}\n",
                    lower(&spec.phase),
                    if nodes.is_empty() {
                        obj.meta.failure_reason.as_deref().map(|r| format!(": {r}")).unwrap_or_default()
                    } else {
                        format!(" on {}", spec.nodes.iter().cloned().collect::<Vec<_>>().join(","))
                    }
                ),
                json!({ "name": name, "phase": spec.phase, "nodes": nodes, "reason": reason(obj) }),
            );
            out.ok = !nodes.is_empty();
            Ok(out)
        }
        SliceCmd::Release { name } => {
            release_slice(&mut s.plane.client(Actor::System), &name).map_err(|e| CliError::Invalid(e.to_string()))?;
            s.settle()?;
            let left = s.get(&ObjectKey::cluster(Kind::Slice, &name)).and_then(|o| o.as_slice()).map(|x| x.phase);
            let text = match left {
                None => format!("slice {name} released\n"),
                Some(p) => format!("slice {name} is {}; waiting for evicted pods\n", lower(&p)),
            };
            Ok(Output::new(text, json!({ "name": name, "remaining_phase": left })))
        }
        SliceCmd::List => {
            let mut text = String::new();
            let mut rows = Vec::new();
            for o in s.plane.store().list(Kind::Slice) {
                let spec = o.as_slice().expect("slice");
                let nodes = spec.nodes.iter().cloned().collect::<Vec<_>>().join(",");
                let _ = writeln!(
                    text,
                    "{} phase={} nodes={} namespace={}",
                    o.name(),
                    lower(&spec.phase),
                    if nodes.is_empty() { "-" } else { &nodes },
                    spec.bound_namespace.as_deref().unwrap_or("-")
                );
                rows.push(json!({
                    "name": o.name(),
                    "phase": spec.phase,
                    "nodes": spec.nodes,
                    "bound_namespace": spec.bound_namespace,
                }));
            }
            Ok(Output::new(text, json!({ "slices": rows })))
        }
    }
}

fn claim(s: &mut Session, cmd: ClaimCmd) -> CliResult {
    match cmd {
        ClaimCmd::Create { name, namespace, slice, selector: sel, id } => {
            let (mode, slice_name) = match slice {
                Some(sl) => (ClaimMode::Manual, sl),
                None => (ClaimMode::Dynamic, format!("{namespace}-{name}")),
            };
            let spec = SliceClaimSpec {
                mode,
                slice_name,
                requested: selector(sel),
                phase: ClaimPhase::Pending,
                charged: None,
                reason: None,
            };
            s.plane.create(&Actor::user(&id.actor), StoredObject::namespaced(&namespace, &name, Spec::SliceClaim(spec)))?;
            s.settle()?;
            let obj = s.get(&ObjectKey::namespaced(Kind::SliceClaim, &namespace, &name)).expect("claim stored");
            let c = obj.as_slice_claim().expect("claim");
            let why = c.reason.clone().or_else(|| obj.meta.failure_reason.clone());
            let mut out = Output::new(
                format!(
                    "claim {namespace}/{name} {} slice {}{}\n",
                    lower(&c.phase),
                    c.slice_name,
                    why.as_deref().map(|r| format!(": {r}")).unwrap_or_default()
                ),
                json!({ "namespace": namespace, "name": name, "slice": c.slice_name, "phase": c.phase, "reason": why }),
            );
            out.ok = c.phase != ClaimPhase::Failed;
            Ok(out)
        }
        ClaimCmd::List => {
            let mut text = String::new();
            let mut rows = Vec::new();
            for o in s.plane.store().list(Kind::SliceClaim) {
                let c = o.as_slice_claim().expect("claim");
                let ns = o.namespace.clone().unwrap_or_default();
                let _ = writeln!(text, "{ns}/{} {} slice={} phase={}", o.name(), lower(&c.mode), c.slice_name, lower(&c.phase));
                rows.push(json!({
                    "namespace": ns,
                    "name": o.name(),
                    "mode": c.mode,
                    "slice": c.slice_name,
                    "phase": c.phase,
                    "charged": c.charged,
                }));
            }
            Ok(Output::new(text, json!({ "claims": rows })))
        }
    }
}

fn role_request(s: &mut Session, cmd: RoleRequestCmd) -> CliResult {
    match cmd {
        RoleRequestCmd::Create { name, namespace, user, role, id } => {
            let role_ref = if is_cluster_role(&role) { RoleRef::ClusterRole(role) } else { RoleRef::Role(role) };
            let spec = RoleRequestSpec { user: user.clone(), role: role_ref, decision: None, status: RequestStatus::Pending };
            s.plane.create(&Actor::user(&id.actor), StoredObject::namespaced(&namespace, &name, Spec::RoleRequest(spec)))?;
            s.settle()?;
            Ok(Output::new(
                format!("role request {namespace}/{name} for {user} submitted\n"),
                json!({ "namespace": namespace, "name": name, "user": user, "status": RequestStatus::Pending }),
            ))
        }
        RoleRequestCmd::Approve { name, namespace, deny, id } => {
            let key = ObjectKey::namespaced(Kind::RoleRequest, &namespace, &name);
            let mut req = s.get(&key).cloned().ok_or_else(|| CliError::Invalid(format!("no role request {key}")))?;
            req.as_role_request_mut().expect("role request").decision =
                Some(Decision { by: id.actor.clone(), approve: !deny });
            s.plane.update(&Actor::user(&id.actor), req)?;
            s.settle()?;
            let req = s.get(&key).expect("role request stored");
            let r = req.as_role_request().expect("role request");
            if r.decision.is_none() && r.status == RequestStatus::Pending {
                return Err(CliError::Invalid(format!("{} may not approve role requests in {namespace}", id.actor)));
            }
            let mut out = Output::new(
                format!(
                    "role request {namespace}/{name} {}{}\n",
                    lower(&r.status),
                    req.meta.failure_reason.as_deref().map(|x| format!(": {x}")).unwrap_or_default()
                ),
                json!({ "namespace": namespace, "name": name, "status": r.status, "reason": reason(req) }),
            );
            out.ok = r.status == if deny { RequestStatus::Denied } else { RequestStatus::Approved };
            Ok(out)
        }
    }
}

fn node_cmd(s: &mut Session, cmd: NodeCmd) -> CliResult {
    match cmd {
        NodeCmd::Add { name, capacity, labels } => {
            let labels: Vec<(&str, &str)> = labels.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            s.plane.create(&Actor::user("admin"), node(&name, capacity, &labels))?;
            s.settle()?;
            Ok(Output::new(format!("node {name} added with {capacity}\n"), json!({ "name": name, "capacity": capacity })))
        }
        NodeCmd::List => {
            let mut text = String::new();
            let mut rows = Vec::new();
            for o in s.plane.store().list(Kind::Node) {
                let n = o.as_node().expect("node");
                let state = match &n.state {
                    NodeState::Shared => "shared".to_string(),
                    NodeState::PreReserved(sl) => format!("pre-reserved({sl})"),
                    NodeState::Reserved(sl) => format!("reserved({sl})"),
                };
                let _ = writeln!(text, "{} {} capacity={} allocated={} pods={}", o.name(), state, n.capacity, n.allocated, n.resident.len());
                rows.push(json!({
                    "name": o.name(),
                    "state": n.state,
                    "capacity": n.capacity,
                    "allocated": n.allocated,
                    "pods": n.resident.len(),
                }));
            }
            Ok(Output::new(text, json!({ "nodes": rows })))
        }
    }
}

fn snapshot(s: &Session, out: Option<PathBuf>) -> CliResult {
    let store = s.plane.store();
    if let Some(path) = &out {
        store.write_snapshot(path)?;
    }
    let mut counts = BTreeMap::new();
    for o in store.iter() {
        *counts.entry(o.kind().to_string()).or_insert(0u64) += 1;
    }
    let mut text = format!("seq {} objects {}\n", store.seq(), store.len());
    for (k, n) in &counts {
        let _ = writeln!(text, "  {k}: {n}");
    }
    Ok(Output::new(text, json!({ "seq": store.seq(), "objects": store.snapshot() })))
}

fn replay(cfg: &SystemConfig, log: PathBuf) -> CliResult {
    let store = Store::load_log(cfg.store_config(), &log)?;
    let mut counts = BTreeMap::new();
    for o in store.iter() {
        *counts.entry(o.kind().to_string()).or_insert(0u64) += 1;
    }
    let mut text = format!("replayed {} records: {} objects, {} namespaces\n", store.seq(), store.len(), store.tree().len());
    for (k, n) in &counts {
        let _ = writeln!(text, "  {k}: {n}");
    }
    Ok(Output::new(
        text,
        json!({ "records": store.seq(), "objects": store.len(), "namespaces": store.tree().len(), "kinds": counts }),
    ))
}

fn bench(cfg: &SystemConfig, cmd: BenchCmd) -> CliResult {
    let (spec, common) = match cmd {
        BenchCmd::Tenants { count, inter_arrival, common } => (BenchSpec::tenants(count, inter_arrival), common),
        BenchCmd::Pods { count, tenants, common } => (BenchSpec::pods(count, tenants), common),
    };
    let latency = match common.latency {
        LatencyArg::Default => LatencyModel::default(),
        LatencyArg::Zero => LatencyModel::zero(),
        LatencyArg::Calibrated => LatencyModel::calibrated(),
        LatencyArg::Constant => LatencyModel::constant_rate(common.write_us),
    };
    let mut spec = spec.with_seed(cfg.seed).with_controller(cfg.controller).with_latency(latency);
    spec.repetitions = common.repetitions;
    let reports = run_repeated(&spec)?;
    let mut written = Vec::new();
    if let Some(path) = &common.csv {
        for (i, r) in reports.iter().enumerate() {
            let p = if i == 0 { path.clone() } else { numbered(path, i) };
            r.write_csv(&p)?;
            written.push(p);
        }
    }
    let mut text = String::new();
    for r in &reports {
        text.push_str(&summary_line(r));
    }
    for p in &written {
        let _ = writeln!(text, "wrote {}", p.display());
    }
    let runs: Vec<Value> = reports
        .iter()
        .map(|r| json!({ "seed": r.spec.seed, "aggregates": r.aggregates, "overhead": r.overhead, "store_writes": r.store_writes }))
        .collect();
    Ok(Output::new(text, json!({ "spec": spec, "runs": runs })))
}

fn numbered(path: &std::path::Path, i: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}-{i}{ext}"))
}

fn summary_line(r: &BenchReport) -> String {
    let a = &r.aggregates;
    format!(
        "seed {}: {}/{} succeeded; establishment median {:.3} s, max {:.3} s; total {:.3} s; {} objects per tenant\n",
        r.spec.seed,
        a.success_count,
        r.records.len(),
        a.establishment.median_ms / 1_000.0,
        a.establishment.max_ms / 1_000.0,
        a.total_completion_ms / 1_000.0,
        r.overhead.per_tenant_resident_objects
    )
}

fn check_names(clusters: u64, per_cluster: u64) -> CliResult {
    if clusters == 0 || per_cluster == 0 {
        return Err(CliError::Invalid("--clusters and --per-cluster must be positive".into()));
    }
    let namer = Namer::default();
    let mut seen = HashSet::new();
    let mut collisions = 0u64;
    for c in 0..clusters {
        let cluster_uid = cluster_uid_from_seed(c);
        for i in 0..per_cluster {
            let req = NameRequest {
                parent_namespace: format!("parent-{}", i % 100),
                requested_name: format!("ns-{}", i / 100),
                scope: Scope::Federated,
                cluster_uid,
            };
            let name = namer.object_name(&req).map_err(|e| CliError::Invalid(e.to_string()))?;
            if !seen.insert(name) {
                collisions += 1;
            }
        }
    }
    let total = clusters * per_cluster;
    let mut out = Output::new(
        format!("{total} federated names across {clusters} clusters: {collisions} collisions\n"),
        json!({ "clusters": clusters, "names": total, "collisions": collisions }),
    );
    out.ok = collisions == 0;
    Ok(out)
}
