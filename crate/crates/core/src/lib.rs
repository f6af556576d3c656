//! Keyed discovery and passphrase-sealed recovery for wallet root secrets.
//!
//! A user who remembers an identifier and a passphrase can find and open
//! their backup on any device. The registry key is an HMAC under a
//! passphrase-derived key, so the public registry cannot be enumerated by
//! identifier. Backups live in content-addressed storage and the registry
//! pins each one with a commitment, a strictly increasing version and an
//! owner signature.

pub mod artifact;
pub mod error;
pub mod flows;
pub mod framing;
pub mod games;
pub mod identity;
pub mod keyschedule;
pub mod registry;
pub mod secret;
pub mod storage;

pub use artifact::{BackupArtifact, Commitment, DevicePrf, LocalArtifact, RootEntityValue};
pub use error::{Error, ErrorClass, Result};
pub use identity::{DiscoveryContext, DiscoveryId, NormalizedIdentifier};
pub use keyschedule::{KdfParams, KdfProfile, Passphrase};
pub use storage::{BlobStore, ContentId};

/// JSON with object keys in sorted order.
pub fn canonical_json<T: serde::Serialize>(value: &T) -> String {
    // serde_json::Value keeps maps in a BTreeMap unless preserve_order is on.
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_string(&v).expect("value serializes")
}

/// Pretty-printed variant of [`canonical_json`].
pub fn canonical_json_pretty<T: serde::Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_string_pretty(&v).expect("value serializes")
}
