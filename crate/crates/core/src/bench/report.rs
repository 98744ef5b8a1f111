use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::spec::BenchSpec;
use crate::error::BenchError;

pub const CSV_HEADER: &str = "req_id,submitted_ms,object_created_ms,established_ms,success";

/// Milestones of one request, in simulated milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub req_id: u64,
    pub submitted_ms: f64,
    pub object_created_ms: Option<f64>,
    pub established_ms: Option<f64>,
    pub success: bool,
}

impl RequestRecord {
    pub fn new(req_id: u64, submitted_ms: f64, object_created_ms: Option<f64>, established_ms: Option<f64>, timeout_ms: u64) -> Self {
        let success = established_ms.is_some_and(|e| e - submitted_ms <= timeout_ms as f64);
        RequestRecord { req_id, submitted_ms, object_created_ms, established_ms, success }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: u64,
    pub median_ms: f64,
    pub mean_ms: f64,
    pub max_ms: f64,
}

impl Summary {
    pub fn of(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Summary::default();
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = if n % 2 == 1 { values[n / 2] } else { (values[n / 2 - 1] + values[n / 2]) / 2.0 };
        Summary {
            count: n as u64,
            median_ms: median,
            mean_ms: values.iter().sum::<f64>() / n as f64,
            max_ms: values[n - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub success_count: u64,
    /// Submission to the submitted object being stored.
    pub object_creation: Summary,
    /// Submission to establishment.
    pub establishment: Summary,
    /// Latest establishment, from the start of the run.
    pub total_completion_ms: f64,
}

impl Aggregates {
    pub fn from_records(records: &[RequestRecord]) -> Self {
        Aggregates {
            success_count: records.iter().filter(|r| r.success).count() as u64,
            object_creation: Summary::of(
                records.iter().filter_map(|r| r.object_created_ms.map(|c| c - r.submitted_ms)).collect(),
            ),
            establishment: Summary::of(
                records.iter().filter_map(|r| r.established_ms.map(|e| e - r.submitted_ms)).collect(),
            ),
            total_completion_ms: records.iter().filter_map(|r| r.established_ms).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    pub per_tenant_resident_objects: f64,
    pub per_tenant_dedicated_processes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub spec: BenchSpec,
    pub records: Vec<RequestRecord>,
    pub aggregates: Aggregates,
    pub overhead: Overhead,
    /// Store records written during the measured part of the run.
    pub store_writes: u64,
}

/// Everything in a report except the per-request rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: BenchSpec,
    pub aggregates: Aggregates,
    pub overhead: Overhead,
    pub store_writes: u64,
}

fn fmt_ms(v: f64) -> String {
    format!("{v:.3}")
}

impl BenchReport {
    pub fn csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.req_id,
                fmt_ms(r.submitted_ms),
                r.object_created_ms.map(fmt_ms).unwrap_or_default(),
                r.established_ms.map(fmt_ms).unwrap_or_default(),
                r.success
            ));
        }
        out
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            spec: self.spec.clone(),
            aggregates: self.aggregates,
            overhead: self.overhead,
            store_writes: self.store_writes,
        }
    }

    /// Writes the CSV rows to `path` and the aggregates next to it as
    /// `<path>.json`. Returns the sidecar path.
    pub fn write_csv(&self, path: &Path) -> Result<PathBuf, BenchError> {
        fs::write(path, self.csv())?;
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".json");
        let sidecar = PathBuf::from(sidecar);
        fs::write(&sidecar, serde_json::to_string_pretty(&self.sidecar())? + "\n")?;
        Ok(sidecar)
    }

    pub fn to_json(&self) -> Result<String, BenchError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Reads the rows of a report CSV.
pub fn read_csv(path: &Path) -> Result<Vec<RequestRecord>, BenchError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_even_and_odd() {
        let s = Summary::of(vec![3.0, 1.0, 2.0]);
        assert_eq!((s.median_ms, s.mean_ms, s.max_ms), (2.0, 2.0, 3.0));
        let s = Summary::of(vec![4.0, 1.0, 2.0, 3.0]);
        assert_eq!(s.median_ms, 2.5);
        assert_eq!(Summary::of(Vec::new()), Summary::default());
    }

    #[test]
    fn success_follows_timeout() {
        assert!(RequestRecord::new(0, 10.0, Some(11.0), Some(130.0), 120).success);
        assert!(!RequestRecord::new(0, 10.0, Some(11.0), Some(130.5), 120).success);
        assert!(!RequestRecord::new(0, 10.0, Some(11.0), None, 120).success);
    }

    #[test]
    fn csv_has_header_and_a_row_per_request() {
        let records: Vec<_> = (0..3).map(|i| RequestRecord::new(i, 0.0, Some(1.5), None, 10)).collect();
        let report = BenchReport {
            spec: BenchSpec::tenants(3, 0),
            aggregates: Aggregates::from_records(&records),
            records,
            overhead: Overhead::default(),
            store_writes: 0,
        };
        let csv = report.csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,0.000,1.500,,false");
    }
}
