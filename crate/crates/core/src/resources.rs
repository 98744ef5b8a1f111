//! Resource vectors: five independently accounted quantities.
//!
//! All components are integers (millicores, bytes, bits per second) so that
//! quota partitioning is exact.

use std::fmt;
use std::ops::{Add, AddAssign, Mul};

use serde::{Deserialize, Serialize};

/// One component of a [`ResourceVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    Cpu,
    Memory,
    LocalStorage,
    EphemeralStorage,
    Bandwidth,
}

impl Resource {
    pub const ALL: [Resource; 5] = [
        Resource::Cpu,
        Resource::Memory,
        Resource::LocalStorage,
        Resource::EphemeralStorage,
        Resource::Bandwidth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Resource::Cpu => "cpu",
            Resource::Memory => "memory",
            Resource::LocalStorage => "local_storage",
            Resource::EphemeralStorage => "ephemeral_storage",
            Resource::Bandwidth => "bandwidth",
        }
    }
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Non-negative quantities of cpu (millicores), memory, local storage and
/// ephemeral storage (bytes), and bandwidth (bits per second).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResourceVector {
    #[serde(default)]
    pub cpu: u64,
    #[serde(default)]
    pub memory: u64,
    #[serde(default)]
    pub local_storage: u64,
    #[serde(default)]
    pub ephemeral_storage: u64,
    #[serde(default)]
    pub bandwidth: u64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector {
        cpu: 0,
        memory: 0,
        local_storage: 0,
        ephemeral_storage: 0,
        bandwidth: 0,
    };

    pub fn cpu(cpu: u64) -> Self {
        ResourceVector { cpu, ..Self::ZERO }
    }

    /// Every component set to `amount`.
    pub fn uniform(amount: u64) -> Self {
        ResourceVector {
            cpu: amount,
            memory: amount,
            local_storage: amount,
            ephemeral_storage: amount,
            bandwidth: amount,
        }
    }

    pub fn get(&self, r: Resource) -> u64 {
        match r {
            Resource::Cpu => self.cpu,
            Resource::Memory => self.memory,
            Resource::LocalStorage => self.local_storage,
            Resource::EphemeralStorage => self.ephemeral_storage,
            Resource::Bandwidth => self.bandwidth,
        }
    }

    pub fn get_mut(&mut self, r: Resource) -> &mut u64 {
        match r {
            Resource::Cpu => &mut self.cpu,
            Resource::Memory => &mut self.memory,
            Resource::LocalStorage => &mut self.local_storage,
            Resource::EphemeralStorage => &mut self.ephemeral_storage,
            Resource::Bandwidth => &mut self.bandwidth,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// Component-wise `self <= other`.
    pub fn fits_within(&self, other: &ResourceVector) -> bool {
        Resource::ALL.iter().all(|&r| self.get(r) <= other.get(r))
    }

    /// First component (in canonical order) where `self > other`.
    pub fn first_excess(&self, other: &ResourceVector) -> Option<Resource> {
        Resource::ALL
            .iter()
            .copied()
            .find(|&r| self.get(r) > other.get(r))
    }

    pub fn checked_sub(&self, other: &ResourceVector) -> Option<ResourceVector> {
        let mut out = ResourceVector::ZERO;
        for r in Resource::ALL {
            *out.get_mut(r) = self.get(r).checked_sub(other.get(r))?;
        }
        Some(out)
    }

    pub fn saturating_sub(&self, other: &ResourceVector) -> ResourceVector {
        let mut out = ResourceVector::ZERO;
        for r in Resource::ALL {
            *out.get_mut(r) = self.get(r).saturating_sub(other.get(r));
        }
        out
    }

    pub fn to_signed(self) -> SignedResourceVector {
        let mut out = SignedResourceVector::ZERO;
        for r in Resource::ALL {
            *out.get_mut(r) = self.get(r) as i64;
        }
        out
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;

    fn add(self, rhs: ResourceVector) -> ResourceVector {
        let mut out = self;
        out += rhs;
        out
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, rhs: ResourceVector) {
        for r in Resource::ALL {
            *self.get_mut(r) += rhs.get(r);
        }
    }
}

impl Mul<u64> for ResourceVector {
    type Output = ResourceVector;

    fn mul(self, k: u64) -> ResourceVector {
        let mut out = self;
        for r in Resource::ALL {
            *out.get_mut(r) *= k;
        }
        out
    }
}

impl std::iter::Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> Self {
        iter.fold(ResourceVector::ZERO, |acc, v| acc + v)
    }
}

impl fmt::Display for ResourceVector {
    /// Renders the non-zero components as `cpu=60,memory=1024`; the zero
    /// vector renders as `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for r in Resource::ALL {
            let v = self.get(r);
            if v == 0 {
                continue;
            }
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{r}={v}")?;
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for ResourceVector {
    type Err = String;

    /// Parses the `Display` form. A bare integer is a cpu-only vector.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Ok(cpu) = s.parse::<u64>() {
            return Ok(ResourceVector::cpu(cpu));
        }
        let mut out = ResourceVector::ZERO;
        for part in s.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected name=value, got {part:?}"))?;
            let r = Resource::ALL
                .into_iter()
                .find(|r| r.as_str() == k.trim())
                .ok_or_else(|| format!("unknown resource {k:?}"))?;
            *out.get_mut(r) = v.trim().parse().map_err(|_| format!("bad quantity {v:?}"))?;
        }
        Ok(out)
    }
}

/// Signed counterpart used for quota deltas and imbalance reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignedResourceVector {
    #[serde(default)]
    pub cpu: i64,
    #[serde(default)]
    pub memory: i64,
    #[serde(default)]
    pub local_storage: i64,
    #[serde(default)]
    pub ephemeral_storage: i64,
    #[serde(default)]
    pub bandwidth: i64,
}

impl SignedResourceVector {
    pub const ZERO: SignedResourceVector = SignedResourceVector {
        cpu: 0,
        memory: 0,
        local_storage: 0,
        ephemeral_storage: 0,
        bandwidth: 0,
    };

    pub fn get(&self, r: Resource) -> i64 {
        match r {
            Resource::Cpu => self.cpu,
            Resource::Memory => self.memory,
            Resource::LocalStorage => self.local_storage,
            Resource::EphemeralStorage => self.ephemeral_storage,
            Resource::Bandwidth => self.bandwidth,
        }
    }

    pub fn get_mut(&mut self, r: Resource) -> &mut i64 {
        match r {
            Resource::Cpu => &mut self.cpu,
            Resource::Memory => &mut self.memory,
            Resource::LocalStorage => &mut self.local_storage,
            Resource::EphemeralStorage => &mut self.ephemeral_storage,
            Resource::Bandwidth => &mut self.bandwidth,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// `a - b` component-wise.
    pub fn difference(a: &ResourceVector, b: &ResourceVector) -> Self {
        let mut out = Self::ZERO;
        for r in Resource::ALL {
            *out.get_mut(r) = a.get(r) as i64 - b.get(r) as i64;
        }
        out
    }

    /// `Some(base + self)` if no component goes negative.
    pub fn apply_to(&self, base: &ResourceVector) -> Option<ResourceVector> {
        let mut out = ResourceVector::ZERO;
        for r in Resource::ALL {
            let v = base.get(r) as i64 + self.get(r);
            if v < 0 {
                return None;
            }
            *out.get_mut(r) = v as u64;
        }
        Some(out)
    }
}

impl Add for SignedResourceVector {
    type Output = SignedResourceVector;

    fn add(self, rhs: SignedResourceVector) -> SignedResourceVector {
        let mut out = self;
        for r in Resource::ALL {
            *out.get_mut(r) += rhs.get(r);
        }
        out
    }
}

impl fmt::Display for SignedResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for r in Resource::ALL {
            let v = self.get(r);
            if v == 0 {
                continue;
            }
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{r}={v:+}")?;
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trips_display() {
        let v = ResourceVector { cpu: 60, bandwidth: 7, ..Default::default() };
        assert_eq!(v.to_string().parse::<ResourceVector>().unwrap(), v);
        assert_eq!("0".parse::<ResourceVector>().unwrap(), ResourceVector::ZERO);
        assert_eq!("25".parse::<ResourceVector>().unwrap(), ResourceVector::cpu(25));
        assert!("gpu=1".parse::<ResourceVector>().is_err());
    }

    #[test]
    fn component_wise_order() {
        let a = ResourceVector { cpu: 1, memory: 5, ..Default::default() };
        let b = ResourceVector { cpu: 2, memory: 5, ..Default::default() };
        assert!(a.fits_within(&b));
        assert!(!b.fits_within(&a));
        assert_eq!(b.first_excess(&a), Some(Resource::Cpu));
    }

    #[test]
    fn checked_sub_rejects_underflow() {
        assert_eq!(ResourceVector::cpu(10).checked_sub(&ResourceVector::cpu(11)), None);
        assert_eq!(
            ResourceVector::cpu(60).checked_sub(&ResourceVector::cpu(25)),
            Some(ResourceVector::cpu(35))
        );
    }

    #[test]
    fn display_skips_zero_components() {
        assert_eq!(ResourceVector::cpu(60).to_string(), "cpu=60");
        assert_eq!(ResourceVector::ZERO.to_string(), "0");
        let d = SignedResourceVector::difference(&ResourceVector::cpu(61), &ResourceVector::cpu(60));
        assert_eq!(d.to_string(), "cpu=+1");
    }
}
