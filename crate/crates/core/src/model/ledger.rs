use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::resources::{ResourceVector, SignedResourceVector};
use crate::time::SimTime;

/// A temporary (or permanent, when `expires_at` is `None`) adjustment to a
/// tenant's grant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaDelta {
    pub amount: SignedResourceVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires_at: Option<SimTime>,
    #[serde(default)]
    pub reason: String,
}

impl QuotaDelta {
    pub fn is_live(&self, now: SimTime) -> bool {
        self.expires_at.is_none_or(|t| t > now)
    }
}

/// The tenant's total grant `q(T_v)`: a base plus signed deltas. Expired
/// deltas are ignored on read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TenantQuotaLedger {
    pub tenant: String,
    pub base: ResourceVector,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<QuotaDelta>,
}

impl TenantQuotaLedger {
    pub fn new(tenant: impl Into<String>, base: ResourceVector) -> Self {
        TenantQuotaLedger { tenant: tenant.into(), base, deltas: Vec::new() }
    }

    /// `base + sum of live deltas`, component-wise.
    pub fn effective(&self, now: SimTime) -> Result<ResourceVector, ModelError> {
        let total = self
            .deltas
            .iter()
            .filter(|d| d.is_live(now))
            .fold(SignedResourceVector::ZERO, |acc, d| acc + d.amount);
        total
            .apply_to(&self.base)
            .ok_or_else(|| ModelError::NegativeQuota(self.tenant.clone()))
    }

    /// Appends a delta, refusing one that would drive any component
    /// negative now.
    pub fn add_delta(&mut self, delta: QuotaDelta, now: SimTime) -> Result<(), ModelError> {
        self.deltas.push(delta);
        if let Err(e) = self.effective(now) {
            self.deltas.pop();
            return Err(e);
        }
        Ok(())
    }

    /// Earliest expiry strictly after `now`.
    pub fn next_expiry(&self, now: SimTime) -> Option<SimTime> {
        self.deltas
            .iter()
            .filter_map(|d| d.expires_at)
            .filter(|&t| t > now)
            .min()
    }

    /// Drops expired deltas; `effective` is unchanged.
    pub fn prune(&mut self, now: SimTime) {
        self.deltas.retain(|d| d.is_live(now));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn signed_cpu(v: i64) -> SignedResourceVector {
        SignedResourceVector { cpu: v, ..Default::default() }
    }

    #[test]
    fn temporary_delta_expires_on_read() {
        let mut l = TenantQuotaLedger::new("a", ResourceVector::cpu(60));
        l.add_delta(
            QuotaDelta { amount: signed_cpu(10), expires_at: Some(SimTime::from_secs(5)), reason: "burst".into() },
            SimTime::ZERO,
        )
        .unwrap();
        assert_eq!(l.effective(SimTime::from_secs(4)).unwrap(), ResourceVector::cpu(70));
        assert_eq!(l.effective(SimTime::from_secs(5)).unwrap(), ResourceVector::cpu(60));
        assert_eq!(l.next_expiry(SimTime::ZERO), Some(SimTime::from_secs(5)));
        l.prune(SimTime::from_secs(6));
        assert!(l.deltas.is_empty());
    }

    #[test]
    fn negative_effective_is_refused() {
        let mut l = TenantQuotaLedger::new("a", ResourceVector::cpu(5));
        let err = l.add_delta(QuotaDelta { amount: signed_cpu(-6), expires_at: None, reason: String::new() }, SimTime::ZERO);
        assert_eq!(err, Err(ModelError::NegativeQuota("a".into())));
        assert!(l.deltas.is_empty());
    }

    proptest! {
        #[test]
        fn add_then_expire_restores_effective(base in 0u64..10_000, delta in -5_000i64..5_000, at in 1u64..1_000) {
            let mut l = TenantQuotaLedger::new("t", ResourceVector::uniform(base));
            let before = l.effective(SimTime::ZERO).unwrap();
            let d = QuotaDelta {
                amount: SignedResourceVector { cpu: delta, memory: delta, ..Default::default() },
                expires_at: Some(SimTime(at)),
                reason: String::new(),
            };
            if l.add_delta(d, SimTime::ZERO).is_ok() {
                prop_assert_eq!(l.effective(SimTime(at)).unwrap(), before);
            } else {
                prop_assert!(delta < 0 && (-delta) as u64 > base);
            }
        }
    }
}
