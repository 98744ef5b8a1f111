//! Benchmark harness: tenant-creation and pod-creation runs on the
//! simulated clock, success accounting against a timeout, overhead
//! accounting and CSV/JSON export.

mod baseline;
mod report;
mod run;
mod spec;

pub use baseline::{MultiInstanceBaseline, DEFAULT_MEMORY_UNITS_PER_TENANT};
pub use report::{read_csv, Aggregates, BenchReport, Overhead, RequestRecord, Sidecar, Summary, CSV_HEADER};
pub use run::{run, run_pod_bench, run_repeated, run_tenant_bench};
pub use spec::{BenchSpec, Experiment, INTER_ARRIVALS_S};
