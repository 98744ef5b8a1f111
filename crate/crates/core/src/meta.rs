//! Object identity and metadata shared by every stored kind.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::time::SimTime;

/// Label keys applied to every tenancy namespace.
pub const LABEL_KIND: &str = "kind";
pub const LABEL_TENANT: &str = "tenant";
pub const LABEL_TENANT_UID: &str = "tenant-uid";
pub const LABEL_CLUSTER_UID: &str = "cluster-uid";
/// Provenance label carried by objects copied from a parent namespace.
pub const LABEL_INHERITED_FROM: &str = "inherited-from";

pub const MAX_NAME_LEN: usize = 63;

/// 128-bit universally unique identifier, rendered in canonical lowercase
/// hyphenated form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Uid(uuid::Uuid);

impl Uid {
    /// Draws a random (version 4) UID from `rng`.
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        Uid(uuid::Builder::from_random_bytes(bytes).into_uuid())
    }

    /// The 32 hex digits without hyphens.
    pub fn compact(&self) -> String {
        self.0.simple().to_string()
    }

    pub fn as_uuid(&self) -> &uuid::Uuid {
        &self.0
    }
}

impl From<uuid::Uuid> for Uid {
    fn from(u: uuid::Uuid) -> Self {
        Uid(u)
    }
}

impl FromStr for Uid {
    type Err = uuid::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        uuid::Uuid::parse_str(s).map(Uid)
    }
}

impl fmt::Display for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.hyphenated())
    }
}

/// Lifecycle phase common to all objects.
///
/// Transitions are monotone along
/// `Pending -> Establishing -> {Established | Failed} -> Terminating`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pending,
    Establishing,
    Established,
    Failed,
    Terminating,
}

impl Phase {
    fn rank(self) -> u8 {
        match self {
            Phase::Pending => 0,
            Phase::Establishing => 1,
            Phase::Established | Phase::Failed => 2,
            Phase::Terminating => 3,
        }
    }

    pub fn can_transition_to(self, next: Phase) -> bool {
        if self == next {
            return true;
        }
        if self == Phase::Terminating {
            return false;
        }
        next.rank() > self.rank()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Pending => "pending",
            Phase::Establishing => "establishing",
            Phase::Established => "established",
            Phase::Failed => "failed",
            Phase::Terminating => "terminating",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectMeta {
    pub name: String,
    pub uid: Uid,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    pub created_at: SimTime,
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
}

impl ObjectMeta {
    /// Metadata for a new object. `uid` and `created_at` are overwritten by
    /// the store on create.
    pub fn new(name: impl Into<String>) -> Self {
        ObjectMeta {
            name: name.into(),
            uid: Uid(uuid::Uuid::nil()),
            labels: BTreeMap::new(),
            created_at: SimTime::ZERO,
            phase: Phase::Pending,
            failure_reason: None,
        }
    }

    pub fn with_label(mut self, k: impl Into<String>, v: impl Into<String>) -> Self {
        self.labels.insert(k.into(), v.into());
        self
    }
}

/// Whether `name` is a lowercase DNS label: `[a-z0-9]([-a-z0-9]*[a-z0-9])?`,
/// at most 63 characters.
pub fn is_dns_label(name: &str) -> bool {
    let bytes = name.as_bytes();
    if bytes.is_empty() || bytes.len() > MAX_NAME_LEN {
        return false;
    }
    let alnum = |b: u8| b.is_ascii_lowercase() || b.is_ascii_digit();
    alnum(bytes[0])
        && alnum(bytes[bytes.len() - 1])
        && bytes.iter().all(|&b| alnum(b) || b == b'-')
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn dns_labels() {
        assert!(is_dns_label("a"));
        assert!(is_dns_label("aa-0123456789ab"));
        assert!(!is_dns_label(""));
        assert!(!is_dns_label("-a"));
        assert!(!is_dns_label("a-"));
        assert!(!is_dns_label("A"));
        assert!(!is_dns_label("a_b"));
        assert!(is_dns_label(&"a".repeat(63)));
        assert!(!is_dns_label(&"a".repeat(64)));
    }

    #[test]
    fn phase_is_monotone() {
        use Phase::*;
        assert!(Pending.can_transition_to(Establishing));
        assert!(Pending.can_transition_to(Established));
        assert!(Establishing.can_transition_to(Failed));
        assert!(Established.can_transition_to(Terminating));
        assert!(!Established.can_transition_to(Pending));
        assert!(!Established.can_transition_to(Failed));
        assert!(!Failed.can_transition_to(Established));
        assert!(!Terminating.can_transition_to(Established));
        assert!(Terminating.can_transition_to(Terminating));
    }

    #[test]
    fn uid_text_forms() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let uid = Uid::generate(&mut rng);
        let text = uid.to_string();
        assert_eq!(text.len(), 36);
        assert_eq!(text, text.to_lowercase());
        assert_eq!(uid.compact(), text.replace('-', ""));
        assert_eq!(text.parse::<Uid>().unwrap(), uid);
    }
}
