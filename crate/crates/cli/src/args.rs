use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tenancy_core::model::{Mode, Scope};
use tenancy_core::objects::InheritKind;
use tenancy_core::ResourceVector;

#[derive(Debug, Parser)]
#[command(name = "tenancy-plane", version, about = "Operate a single-instance multitenancy control plane")]
pub struct Cli {
    /// Seeds the cluster identity and the latency model.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Concurrent workers per controller.
    #[arg(long, global = true)]
    pub workers: Option<u32>,
    /// Controller resync period in milliseconds.
    #[arg(long, global = true)]
    pub period_ms: Option<u64>,
    /// Client rate limit in requests per second.
    #[arg(long, global = true)]
    pub qps: Option<f64>,
    /// Client token bucket capacity.
    #[arg(long, global = true)]
    pub burst: Option<u32>,
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tenant requests and tenants.
    #[command(subcommand)]
    Tenant(TenantCmd),
    /// Subnamespaces.
    #[command(subcommand)]
    Subns(SubnsCmd),
    /// Tenant quotas and their partition over namespaces.
    #[command(subcommand)]
    Quota(QuotaCmd),
    /// Node-level slices.
    #[command(subcommand)]
    Slice(SliceCmd),
    /// Slice claims.
    #[command(subcommand)]
    Claim(ClaimCmd),
    /// Role requests inside a namespace.
    #[command(subcommand, name = "role-request")]
    RoleRequest(RoleRequestCmd),
    /// Tenant-creation and pod-creation benchmarks.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Snapshots and log replay.
    #[command(subcommand)]
    State(StateCmd),
    /// Federation naming checks.
    #[command(subcommand)]
    Fed(FedCmd),
    /// Simulated cluster nodes.
    #[command(subcommand)]
    Node(NodeCmd),
}

#[derive(Debug, Args)]
pub struct Identity {
    /// User the command acts as.
    #[arg(long = "as", default_value = "admin")]
    pub actor: String,
}

#[derive(Debug, Subcommand)]
pub enum TenantCmd {
    Request {
        name: String,
        #[arg(long)]
        owner: String,
        /// Total grant, e.g. `60` (cpu only) or `cpu=60,memory=1024`.
        #[arg(long)]
        quota: Option<ResourceVector>,
        /// Confine the tenant's namespaces with a cluster-level policy.
        #[arg(long)]
        network_policy: bool,
    },
    Approve {
        name: String,
        #[command(flatten)]
        id: Identity,
    },
    Deny {
        name: String,
        #[command(flatten)]
        id: Identity,
    },
    List,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Workspace,
    Subtenant,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Workspace => Mode::Workspace,
            ModeArg::Subtenant => Mode::Subtenant,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScopeArg {
    Local,
    Federated,
}

impl From<ScopeArg> for Scope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Local => Scope::Local,
            ScopeArg::Federated => Scope::Federated,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InheritArg {
    Role,
    Rolebinding,
    Networkpolicy,
    Limitrange,
    Secret,
    Configmap,
    Serviceaccount,
}

impl From<InheritArg> for InheritKind {
    fn from(i: InheritArg) -> Self {
        match i {
            InheritArg::Role => InheritKind::Role,
            InheritArg::Rolebinding => InheritKind::RoleBinding,
            InheritArg::Networkpolicy => InheritKind::NetworkPolicy,
            InheritArg::Limitrange => InheritKind::LimitRange,
            InheritArg::Secret => InheritKind::Secret,
            InheritArg::Configmap => InheritKind::ConfigMap,
            InheritArg::Serviceaccount => InheritKind::ServiceAccount,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum SubnsCmd {
    Create {
        name: String,
        #[arg(long)]
        parent: String,
        #[arg(long)]
        quota: Option<ResourceVector>,
        #[arg(long, value_enum, default_value_t = ModeArg::Workspace)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = ScopeArg::Local)]
        scope: ScopeArg,
        /// Owner of a subtenant.
        #[arg(long)]
        owner: Option<String>,
        /// Kinds copied from the parent.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [InheritArg::Role, InheritArg::Rolebinding])]
        inherit: Vec<InheritArg>,
        /// Keep copies in step with the parent.
        #[arg(long)]
        sync: bool,
        #[command(flatten)]
        id: Identity,
    },
    Delete {
        name: String,
        #[arg(long)]
        parent: String,
        #[command(flatten)]
        id: Identity,
    },
    List {
        /// Print the namespace forest instead of the handles.
        #[arg(long)]
        tree: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum QuotaCmd {
    /// Replaces a tenant's base grant.
    Set {
        tenant: String,
        quota: ResourceVector,
    },
    Show {
        tenant: Option<String>,
        /// Check that every tenant's grant is exactly partitioned.
        #[arg(long)]
        validate: bool,
    },
}

#[derive(Debug, Args)]
pub struct SelectorArgs {
    #[arg(long, default_value_t = 1)]
    pub nodes: u32,
    /// Minimum free capacity on each node.
    #[arg(long, default_value = "0")]
    pub resources: ResourceVector,
    /// Node label to match, as `key=value`.
    #[arg(long = "label", value_parser = parse_label)]
    pub labels: Vec<(String, String)>,
}

pub fn parse_label(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

#[derive(Debug, Subcommand)]
pub enum SliceCmd {
    Create {
        name: String,
        #[command(flatten)]
        selector: SelectorArgs,
    },
    Release {
        name: String,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum ClaimCmd {
    Create {
        name: String,
        #[arg(long)]
        namespace: String,
        /// Bind an existing slice instead of provisioning one.
        #[arg(long)]
        slice: Option<String>,
        #[command(flatten)]
        selector: SelectorArgs,
        #[command(flatten)]
        id: Identity,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum RoleRequestCmd {
    Create {
        name: String,
        #[arg(long)]
        namespace: String,
        #[arg(long)]
        user: String,
        /// A cluster role (admin, edit, view) or a role in the namespace.
        #[arg(long)]
        role: String,
        #[command(flatten)]
        id: Identity,
    },
    Approve {
        name: String,
        #[arg(long)]
        namespace: String,
        /// Record a denial instead.
        #[arg(long)]
        deny: bool,
        #[command(flatten)]
        id: Identity,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LatencyArg {
    Default,
    Zero,
    Calibrated,
    Constant,
}

#[derive(Debug, Args)]
pub struct BenchCommon {
    #[arg(long, value_enum, default_value_t = LatencyArg::Default)]
    pub latency: LatencyArg,
    /// Service time per write for `--latency constant`, in microseconds.
    #[arg(long, default_value_t = 4_000)]
    pub write_us: u64,
    /// Runs with seeds `seed`, `seed + 1`, and so on. At least three.
    #[arg(long, default_value_t = 3)]
    pub repetitions: u32,
    /// Write the first run's per-request records here, with a JSON
    /// sidecar next to it. Later runs go to `<stem>-<n>.<ext>`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BenchCmd {
    Tenants {
        #[arg(long)]
        count: u64,
        /// Seconds between requests: 0, 2, 4, 8, 16 or 32.
        #[arg(long, default_value_t = 0)]
        inter_arrival: u64,
        #[command(flatten)]
        common: BenchCommon,
    },
    Pods {
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 32)]
        tenants: u32,
        #[command(flatten)]
        common: BenchCommon,
    },
}

#[derive(Debug, Subcommand)]
pub enum StateCmd {
    /// Prints the live objects.
    Snapshot {
        /// Also write the snapshot to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuilds a store from an event log and reports what it holds.
    Replay { log: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum FedCmd {
    /// Generates federated names on several clusters and counts collisions.
    CheckNames {
        #[arg(long, default_value_t = 3)]
        clusters: u64,
        #[arg(long, default_value_t = 10_000)]
        per_cluster: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum NodeCmd {
    Add {
        name: String,
        #[arg(long)]
        capacity: ResourceVector,
        #[arg(long = "label", value_parser = parse_label)]
        labels: Vec<(String, String)>,
    },
    List,
}
