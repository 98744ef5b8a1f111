use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::model::DEFAULT_NAMESPACE_THRESHOLD;
use crate::runtime::{ControllerConfig, LatencyModel};

/// The inter-arrival times a run may use, in seconds.
pub const INTER_ARRIVALS_S: [u64; 6] = [0, 2, 4, 8, 16, 32];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    TenantCreation,
    PodCreation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub experiment: Experiment,
    pub count: u64,
    pub inter_arrival_s: u64,
    /// Tenants the pods are spread over (pod runs only).
    pub tenants_for_pods: u32,
    pub controller: ControllerConfig,
    pub latency: LatencyModel,
    pub timeout_ms: u64,
    pub repetitions: u32,
    pub seed: u64,
    pub threshold: usize,
}

impl BenchSpec {
    pub fn tenants(count: u64, inter_arrival_s: u64) -> Self {
        BenchSpec {
            experiment: Experiment::TenantCreation,
            count,
            inter_arrival_s,
            tenants_for_pods: 0,
            controller: ControllerConfig::default(),
            latency: LatencyModel::default(),
            timeout_ms: 120_000,
            repetitions: 3,
            seed: 0,
            threshold: DEFAULT_NAMESPACE_THRESHOLD,
        }
    }

    pub fn pods(count: u64, tenants: u32) -> Self {
        BenchSpec { experiment: Experiment::PodCreation, tenants_for_pods: tenants, ..Self::tenants(count, 0) }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_controller(mut self, controller: ControllerConfig) -> Self {
        self.controller = controller;
        self
    }

    pub fn with_latency(mut self, latency: LatencyModel) -> Self {
        self.latency = latency;
        self
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if !INTER_ARRIVALS_S.contains(&self.inter_arrival_s) {
            return Err(BenchError::InvalidSpec(format!(
                "inter-arrival {} s is not one of {INTER_ARRIVALS_S:?}",
                self.inter_arrival_s
            )));
        }
        if self.repetitions < 3 {
            return Err(BenchError::InvalidSpec("at least three repetitions are required".into()));
        }
        if self.experiment == Experiment::PodCreation && self.tenants_for_pods == 0 && self.count > 0 {
            return Err(BenchError::InvalidSpec("pod runs need at least one tenant".into()));
        }
        self.controller.validate().map_err(BenchError::InvalidSpec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_inter_arrival_and_few_repetitions() {
        assert!(BenchSpec::tenants(1, 3).validate().is_err());
        let mut s = BenchSpec::tenants(1, 2);
        assert!(s.validate().is_ok());
        s.repetitions = 2;
        assert!(s.validate().is_err());
        assert!(BenchSpec::pods(5, 0).validate().is_err());
        assert!(BenchSpec::pods(0, 0).validate().is_ok());
    }
}
