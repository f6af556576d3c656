use thiserror::Error;

use crate::identity::DiscoveryId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by callers that map failures onto exit codes
/// or retry policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorClass {
    /// Bad input, wrong passphrase, unknown registration.
    User,
    /// Tampering, forged authorization, commitment mismatch.
    Integrity,
    /// Storage or registry could not be reached.
    Availability,
    /// Misconfiguration: binding mismatch, KDF floor, missing files.
    Config,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("passphrase must not be empty")]
    EmptyPassphrase,
    #[error("identifier is empty after trimming")]
    EmptyIdentifier,
    #[error("KDF parameters below the {profile} floor: {detail}")]
    KdfParamsBelowFloor {
        profile: &'static str,
        detail: String,
    },
    #[error("KDF parameters exceed the accepted ceiling: {0}")]
    KdfParamsAboveCeiling(String),
    #[error("key derivation failed: {0}")]
    Kdf(String),
    #[error("illegal key derivation: {stage:?} root cannot produce a {domain:?} key")]
    IllegalStageDomainPair {
        stage: crate::keyschedule::Stage,
        domain: crate::keyschedule::Domain,
    },
    #[error("expected a {expected:?} key, found {found:?}")]
    DomainMismatch {
        expected: crate::keyschedule::Domain,
        found: crate::keyschedule::Domain,
    },
    #[error("{field} is too long ({len} bytes, max {max})")]
    FieldTooLong {
        field: &'static str,
        len: usize,
        max: usize,
    },
    #[error("associated data looks like it carries an identifier")]
    IdentifyingAad,
    #[error("malformed encoding: {0}")]
    MalformedEncoding(String),
    #[error("malformed artifact at byte {offset}: {reason}")]
    MalformedArtifact { offset: usize, reason: String },
    #[error("wrong passphrase or tampered artifact")]
    WrongPassphraseOrTampered,
    #[error("wrong device or tampered local artifact")]
    WrongDeviceOrTampered,
    #[error("entropy source failed: {0}")]
    EntropyFailure(String),
    #[error("unsupported {what}: {value}")]
    Unsupported { what: &'static str, value: u32 },

    #[error("blob not found")]
    NotFound,
    #[error("{0}: stored bytes do not hash to the requested content id")]
    CorruptBlob(String),
    #[error("storage backend {0} unavailable")]
    BackendUnavailable(String),
    #[error("no backend returned a blob matching the requested content id ({0})")]
    AllBackendsFailed(crate::storage::FetchReport),
    #[error("storage I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("registry slot already occupied")]
    SlotOccupied,
    #[error("authorization does not verify")]
    BadAuth,
    #[error("first write must carry version 1, got {0}")]
    BadVersion(u64),
    #[error("stale version {offered} (current {current})")]
    StaleVersion { offered: u64, current: u64 },
    #[error("registry entry is tombstoned")]
    Tombstoned,
    #[error("registry entry is already tombstoned")]
    AlreadyTombstoned,
    #[error("registry entry not found")]
    RecordNotFound,
    #[error("registry identity does not match the canonical binding: {0}")]
    RegistryMismatch(String),
    #[error("registry snapshot: {0}")]
    Snapshot(String),

    #[error("no backup is registered for this identifier and passphrase")]
    NotRegistered,
    #[error("fetched artifact does not match the registry commitment")]
    CommitMismatch,
    #[error("backup artifact unavailable from every storage backend")]
    StorageUnavailable,
    #[error("redirect chain exceeds one hop")]
    RedirectLoop,
    #[error("backup was retired without a successor; not recoverable with this passphrase")]
    NotRecoverableWithThisPassphrase,
    #[error("backup was migrated to discovery id {}; recover with the rotated passphrase", .0.to_hex())]
    MigratedTo(DiscoveryId),
    #[error("owner signing key unavailable: {0}")]
    OwnerKeyUnavailable(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            EmptyPassphrase
            | EmptyIdentifier
            | FieldTooLong { .. }
            | MalformedEncoding(_)
            | WrongPassphraseOrTampered
            | WrongDeviceOrTampered
            | SlotOccupied
            | BadVersion(_)
            | StaleVersion { .. }
            | Tombstoned
            | AlreadyTombstoned
            | RecordNotFound
            | NotRegistered
            | RedirectLoop
            | NotRecoverableWithThisPassphrase
            | MigratedTo(_) => ErrorClass::User,
            MalformedArtifact { .. } | BadAuth | CommitMismatch | CorruptBlob(_) => {
                ErrorClass::Integrity
            }
            NotFound
            | BackendUnavailable(_)
            | AllBackendsFailed(_)
            | Io(_)
            | StorageUnavailable
            | EntropyFailure(_) => ErrorClass::Availability,
            KdfParamsBelowFloor { .. }
            | KdfParamsAboveCeiling(_)
            | Kdf(_)
            | IllegalStageDomainPair { .. }
            | DomainMismatch { .. }
            | Unsupported { .. }
            | RegistryMismatch(_)
            | Snapshot(_)
            | OwnerKeyUnavailable(_)
            | IdentifyingAad => ErrorClass::Config,
        }
    }
}
