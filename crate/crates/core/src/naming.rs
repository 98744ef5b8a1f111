//! Subnamespace object names: `<requested>-<hash>` locally, and
//! `<cluster>-<requested>-<hash>` when federated.
//!
//! The hash is the first 6 bytes of a SHA-256 digest, as 12 lowercase hex
//! characters. Local names hash `parent/requested`; federated names hash
//! `cluster-uid/parent/requested`, so the same request on two clusters
//! yields different names.

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::NamingError;
use crate::meta::{is_dns_label, Uid, MAX_NAME_LEN};
use crate::model::{NamespaceTree, Scope};

pub const MAX_REQUESTED_LEN: usize = 32;
pub const HASH_HEX_LEN: usize = 12;
pub const CLUSTER_PREFIX_LEN: usize = 12;

/// A 256-bit digest. Swappable so tests can force collisions.
pub trait NameDigest: Send + Sync {
    fn digest(&self, input: &[u8]) -> [u8; 32];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sha256Digest;

impl NameDigest for Sha256Digest {
    fn digest(&self, input: &[u8]) -> [u8; 32] {
        Sha256::digest(input).into()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameRequest {
    pub parent_namespace: String,
    pub requested_name: String,
    pub scope: Scope,
    pub cluster_uid: Uid,
}

impl NameRequest {
    pub fn validate(&self) -> Result<(), NamingError> {
        if self.requested_name.len() > MAX_REQUESTED_LEN {
            return Err(NamingError::RequestedTooLong(self.requested_name.clone()));
        }
        if !is_dns_label(&self.requested_name) {
            return Err(NamingError::InvalidName(self.requested_name.clone()));
        }
        if !is_dns_label(&self.parent_namespace) {
            return Err(NamingError::InvalidName(self.parent_namespace.clone()));
        }
        Ok(())
    }
}

#[derive(Clone)]
pub struct Namer {
    digest: Arc<dyn NameDigest>,
}

impl Default for Namer {
    fn default() -> Self {
        Namer::new(Arc::new(Sha256Digest))
    }
}

impl fmt::Debug for Namer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Namer").finish_non_exhaustive()
    }
}

impl Namer {
    pub fn new(digest: Arc<dyn NameDigest>) -> Self {
        Namer { digest }
    }

    pub fn derive_hash(&self, parent: &str, requested: &str, cluster_uid: &Uid, scope: Scope) -> String {
        let input = match scope {
            Scope::Local => format!("{parent}/{requested}"),
            Scope::Federated => format!("{cluster_uid}/{parent}/{requested}"),
        };
        let d = self.digest.digest(input.as_bytes());
        hex::encode(&d[..HASH_HEX_LEN / 2])
    }

    pub fn object_name(&self, req: &NameRequest) -> Result<String, NamingError> {
        req.validate()?;
        let hash = self.derive_hash(&req.parent_namespace, &req.requested_name, &req.cluster_uid, req.scope);
        let name = match req.scope {
            Scope::Local => format!("{}-{hash}", req.requested_name),
            Scope::Federated => {
                let uid = req.cluster_uid.compact();
                format!("{}-{}-{hash}", &uid[..CLUSTER_PREFIX_LEN], req.requested_name)
            }
        };
        if name.len() > MAX_NAME_LEN {
            return Err(NamingError::NameTooLong(name));
        }
        Ok(name)
    }
}

/// Whether `candidate` is already taken by a namespace in `tree`.
pub fn detect_collision(tree: &NamespaceTree, candidate: &str) -> bool {
    tree.contains(candidate)
}

/// Digest that ignores its input; every name gets the same hash.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantDigest;

impl NameDigest for ConstantDigest {
    fn digest(&self, _input: &[u8]) -> [u8; 32] {
        [0u8; 32]
    }
}
