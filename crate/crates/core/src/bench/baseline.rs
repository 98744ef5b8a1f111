use serde::{Deserialize, Serialize};

/// Memory units a dedicated control-plane instance costs per tenant.
pub const DEFAULT_MEMORY_UNITS_PER_TENANT: u64 = 285;

/// Overhead of a multi-instance design, where every tenant gets its own
/// control plane. Costs grow linearly with the tenant count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiInstanceBaseline {
    pub memory_units_per_tenant: u64,
    pub resident_objects_per_tenant: u64,
    pub processes_per_tenant: u64,
}

impl Default for MultiInstanceBaseline {
    fn default() -> Self {
        MultiInstanceBaseline {
            memory_units_per_tenant: DEFAULT_MEMORY_UNITS_PER_TENANT,
            resident_objects_per_tenant: 40,
            processes_per_tenant: 3,
        }
    }
}

impl MultiInstanceBaseline {
    pub fn memory_units(&self, tenants: u64) -> u64 {
        self.memory_units_per_tenant * tenants
    }

    pub fn resident_objects(&self, tenants: u64) -> u64 {
        self.resident_objects_per_tenant * tenants
    }

    pub fn processes(&self, tenants: u64) -> u64 {
        self.processes_per_tenant * tenants
    }

    /// `(tenants, memory units)` for each tenant count.
    pub fn memory_curve(&self, tenants: &[u64]) -> Vec<(u64, u64)> {
        tenants.iter().map(|&n| (n, self.memory_units(n))).collect()
    }
}
