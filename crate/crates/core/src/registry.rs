//! Public registry: discovery id -> record.
//!
//! First writes are initialize-if-empty and bind the owner's verification
//! key. Every later state change must be signed by that key over the framed
//! `(did, cid, ver, commit)` message, and versions strictly increase per
//! discovery id. Tombstones are terminal.
//!
//! The registry is simulated in process. All mutations serialize through one
//! lock, and readers see whole records only.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::RwLock;
use std::time::{SystemTime, UNIX_EPOCH};

use ed25519_dalek::{Signature, Signer, SigningKey, VerifyingKey};
use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

use crate::artifact::Commitment;
use crate::error::{Error, Result};
use crate::framing::Framer;
use crate::identity::{hex_bytes, DiscoveryContext, DiscoveryId};
use crate::keyschedule::{LookupRoot, RegistryAuthKey, INFO_OWNER_SEED};
use crate::secret::SecretBytes;
use crate::storage::{write_atomic, ContentId};

/// Ed25519.
pub const SIG_ALG_ED25519: u16 = 1;

/// Owner verification key as stored in a record.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OwnerPublicKey {
    pub sig_alg: u16,
    #[serde(with = "hex_bytes")]
    pub bytes: Vec<u8>,
}

impl OwnerPublicKey {
    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    /// Checks `sig` over `msg`. Unknown algorithms and malformed keys or
    /// signatures all fail as [`Error::BadAuth`].
    pub fn verify(&self, msg: &[u8], sig: &[u8]) -> Result<()> {
        if self.sig_alg != SIG_ALG_ED25519 {
            return Err(Error::BadAuth);
        }
        let pk: [u8; 32] = self
            .bytes
            .as_slice()
            .try_into()
            .map_err(|_| Error::BadAuth)?;
        let vk = VerifyingKey::from_bytes(&pk).map_err(|_| Error::BadAuth)?;
        let sig = Signature::from_slice(sig).map_err(|_| Error::BadAuth)?;
        vk.verify_strict(msg, &sig).map_err(|_| Error::BadAuth)
    }
}

impl fmt::Debug for OwnerPublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OwnerPublicKey({}:{})", self.sig_alg, self.to_hex())
    }
}

/// Owner signing key (Ed25519).
pub struct OwnerSigningKey(SigningKey);

impl OwnerSigningKey {
    /// Random owner key: uniformly random key kept by the device.
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self(SigningKey::generate(rng))
    }

    pub fn from_seed(seed: &SecretBytes<32>) -> Self {
        Self(SigningKey::from_bytes(seed.expose()))
    }

    /// Derived owner key: deterministic from the lookup root.
    pub fn from_lookup_root(root: &LookupRoot, info: &str) -> Self {
        Self::from_seed(&root.owner_seed(info))
    }

    pub fn seed(&self) -> SecretBytes<32> {
        SecretBytes::new(self.0.to_bytes())
    }

    pub fn public(&self) -> OwnerPublicKey {
        OwnerPublicKey {
            sig_alg: SIG_ALG_ED25519,
            bytes: self.0.verifying_key().to_bytes().to_vec(),
        }
    }

    pub fn sign(&self, msg: &AuthMessage) -> Vec<u8> {
        self.0.sign(&msg.encode()).to_bytes().to_vec()
    }

    /// Hex seed file with owner-only permissions.
    pub fn save(&self, path: &Path) -> Result<()> {
        let seed = self.seed();
        write_private(path, hex::encode(seed.expose()).as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::OwnerKeyUnavailable(format!("{}: {e}", path.display())))?;
        let mut seed = SecretBytes::<32>::zeroed();
        hex::decode_to_slice(text.trim(), seed.expose_mut())
            .map_err(|e| Error::OwnerKeyUnavailable(format!("{}: {e}", path.display())))?;
        Ok(Self::from_seed(&seed))
    }
}

impl fmt::Debug for OwnerSigningKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OwnerSigningKey(pk={})", self.public().to_hex())
    }
}

/// Writes a file readable only by its owner (on unix).
pub fn write_private(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        path.file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("secret")
    ));
    let mut opts = std::fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let mut f = opts.open(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// The exact byte string that is signed (Option B) or MACed (Option A).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthMessage {
    pub discovery_id: DiscoveryId,
    pub cid: ContentId,
    pub ver: u64,
    pub commit: Commitment,
    /// Present only on tombstone messages, as a fifth framed field (empty
    /// when there is no redirect).
    pub tombstone: Option<Option<DiscoveryId>>,
}

impl AuthMessage {
    pub fn new(discovery_id: DiscoveryId, cid: ContentId, ver: u64, commit: Commitment) -> Self {
        Self {
            discovery_id,
            cid,
            ver,
            commit,
            tombstone: None,
        }
    }

    /// Tombstone authorization: zero cid and commit sentinels plus the
    /// redirect target.
    pub fn tombstone(discovery_id: DiscoveryId, ver: u64, redirect: Option<DiscoveryId>) -> Self {
        Self {
            discovery_id,
            cid: ContentId([0; 32]),
            ver,
            commit: Commitment([0; 32]),
            tombstone: Some(redirect),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut f = Framer::new()
            .field(&self.discovery_id.0)
            .field(&self.cid.0)
            .field(&self.ver.to_be_bytes())
            .field(&self.commit.0);
        if let Some(redirect) = &self.tombstone {
            f = f.field(redirect.as_ref().map(|d| &d.0[..]).unwrap_or(&[]));
        }
        f.finish()
    }
}

#[derive(Clone, PartialEq, Eq)]
pub enum AuthProof {
    SignatureB(Vec<u8>),
    HmacA([u8; 32]),
}

impl fmt::Debug for AuthProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuthProof::SignatureB(s) => write!(f, "SignatureB({})", hex::encode(s)),
            AuthProof::HmacA(t) => write!(f, "HmacA({})", hex::encode(t)),
        }
    }
}

/// Option A tag: HMAC-SHA-256 under the registry-auth key.
pub fn option_a_tag(k_reg: &RegistryAuthKey, msg: &AuthMessage) -> [u8; 32] {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(k_reg.expose()).expect("any key length");
    mac.update(&msg.encode());
    mac.finalize().into_bytes().into()
}

/// Off-chain Option A verifier. Comparison is constant time.
pub fn verify_option_a(k_reg: &RegistryAuthKey, msg: &AuthMessage, tag: &[u8]) -> bool {
    let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(k_reg.expose()).expect("any key length");
    mac.update(&msg.encode());
    mac.verify_slice(tag).is_ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum RecordState {
    Active,
    Tombstoned {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        redirect: Option<DiscoveryId>,
        /// Unix seconds when the entry was retired.
        migrated_at: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryRecord {
    pub cid: ContentId,
    pub ver: u64,
    pub commit: Commitment,
    pub pk_owner: OwnerPublicKey,
    /// Authorization of the last accepted transition. Not persisted.
    pub auth: Option<AuthProof>,
    pub state: RecordState,
}

impl RegistryRecord {
    /// A signed first-write record at version 1.
    pub fn signed_initial(
        did: DiscoveryId,
        cid: ContentId,
        commit: Commitment,
        owner: &OwnerSigningKey,
    ) -> Self {
        let sig = owner.sign(&AuthMessage::new(did, cid, 1, commit));
        Self {
            cid,
            ver: 1,
            commit,
            pk_owner: owner.public(),
            auth: Some(AuthProof::SignatureB(sig)),
            state: RecordState::Active,
        }
    }

    pub fn is_active(&self) -> bool {
        self.state == RecordState::Active
    }

    pub fn redirect(&self) -> Option<DiscoveryId> {
        match self.state {
            RecordState::Tombstoned { redirect, .. } => redirect,
            RecordState::Active => None,
        }
    }
}

/// On-chain identity of a registry instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegistryIdentity {
    pub app_id: String,
    pub chain_id: u64,
    #[serde(with = "hex_bytes")]
    pub contract_address: Vec<u8>,
}

/// The deployment constants every client of one registry must agree on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalBinding {
    pub app_id: String,
    pub chain_id: u64,
    #[serde(with = "hex_bytes")]
    pub contract_address: Vec<u8>,
    /// Version field of the discovery context.
    pub context_version: u32,
    pub norm_policy_id: String,
    pub kdf_profile_id: String,
    pub owner_seed_info: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_signature: Option<String>,
}

pub const NORM_POLICY_ID: &str = "trim+nfc+simple-casefold/v1";

impl CanonicalBinding {
    pub fn new(identity: &RegistryIdentity, kdf_profile_id: &str) -> Self {
        Self {
            app_id: identity.app_id.clone(),
            chain_id: identity.chain_id,
            contract_address: identity.contract_address.clone(),
            context_version: 1,
            norm_policy_id: NORM_POLICY_ID.into(),
            kdf_profile_id: kdf_profile_id.into(),
            owner_seed_info: INFO_OWNER_SEED.into(),
            config_signature: None,
        }
    }

    pub fn identity(&self) -> RegistryIdentity {
        RegistryIdentity {
            app_id: self.app_id.clone(),
            chain_id: self.chain_id,
            contract_address: self.contract_address.clone(),
        }
    }

    pub fn context(&self) -> DiscoveryContext {
        DiscoveryContext {
            app_id: self.app_id.clone(),
            chain_id: self.chain_id,
            contract_address: self.contract_address.clone(),
            version: self.context_version,
        }
    }

    /// Bytes covered by `config_signature`: the canonical JSON without it.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut unsigned = self.clone();
        unsigned.config_signature = None;
        crate::canonical_json(&unsigned).into_bytes()
    }

    pub fn sign(&mut self, publisher: &OwnerSigningKey) {
        let sig = publisher.0.sign(&self.signing_bytes());
        self.config_signature = Some(hex::encode(sig.to_bytes()));
    }

    pub fn verify_signature(&self, publisher: &OwnerPublicKey) -> Result<()> {
        let sig = self
            .config_signature
            .as_deref()
            .ok_or_else(|| Error::RegistryMismatch("binding is unsigned".into()))?;
        let sig = hex::decode(sig).map_err(|_| Error::BadAuth)?;
        publisher.verify(&self.signing_bytes(), &sig)
    }

    pub fn to_json(&self) -> String {
        crate::canonical_json_pretty(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Snapshot(format!("binding: {e}")))
    }
}

/// Refuses to talk to a registry whose identity differs from the binding.
pub fn check_binding(instance: &RegistryIdentity, binding: &CanonicalBinding) -> Result<()> {
    let expected = binding.identity();
    let mut diffs = Vec::new();
    if instance.app_id != expected.app_id {
        diffs.push("app_id");
    }
    if instance.chain_id != expected.chain_id {
        diffs.push("chain_id");
    }
    if instance.contract_address != expected.contract_address {
        diffs.push("contract_address");
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Error::RegistryMismatch(format!(
            "{} differ",
            diffs.join(", ")
        )))
    }
}

/// Read access to a registry view, fresh or not.
pub trait RegistryRead {
    fn identity(&self) -> &RegistryIdentity;
    fn lookup(&self, did: &DiscoveryId) -> Option<RegistryRecord>;
}

pub struct Registry {
    identity: RegistryIdentity,
    records: RwLock<BTreeMap<DiscoveryId, RegistryRecord>>,
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Registry {
    pub fn new(identity: RegistryIdentity) -> Self {
        Self {
            identity,
            records: RwLock::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dids(&self) -> Vec<DiscoveryId> {
        self.records.read().unwrap().keys().copied().collect()
    }

    /// Initialize-if-empty. The record must carry a valid self-signature at
    /// version 1.
    pub fn initialize(&self, did: DiscoveryId, record: RegistryRecord) -> Result<()> {
        if record.ver != 1 {
            return Err(Error::BadVersion(record.ver));
        }
        if record.state != RecordState::Active {
            return Err(Error::BadAuth);
        }
        let msg = AuthMessage::new(did, record.cid, 1, record.commit);
        match &record.auth {
            Some(AuthProof::SignatureB(sig)) => record.pk_owner.verify(&msg.encode(), sig)?,
            // Option A is not verifiable by the registry itself.
            _ => return Err(Error::BadAuth),
        }
        let mut records = self.records.write().unwrap();
        if records.contains_key(&did) {
            return Err(Error::SlotOccupied);
        }
        records.insert(did, record);
        Ok(())
    }

    /// Signed update to a strictly higher version.
    pub fn update(
        &self,
        did: &DiscoveryId,
        new_cid: ContentId,
        new_ver: u64,
        new_commit: Commitment,
        sig: &[u8],
    ) -> Result<()> {
        let mut records = self.records.write().unwrap();
        let rec = records.get_mut(did).ok_or(Error::RecordNotFound)?;
        if !rec.is_active() {
            return Err(Error::Tombstoned);
        }
        let msg = AuthMessage::new(*did, new_cid, new_ver, new_commit);
        rec.pk_owner.verify(&msg.encode(), sig)?;
        if new_ver <= rec.ver {
            return Err(Error::StaleVersion {
                offered: new_ver,
                current: rec.ver,
            });
        }
        rec.cid = new_cid;
        rec.ver = new_ver;
        rec.commit = new_commit;
        rec.auth = Some(AuthProof::SignatureB(sig.to_vec()));
        Ok(())
    }

    /// Retires an entry, optionally pointing at its successor. The signed
    /// message uses version `current + 1`.
    pub fn tombstone(
        &self,
        did: &DiscoveryId,
        redirect: Option<DiscoveryId>,
        sig: &[u8],
    ) -> Result<()> {
        let mut records = self.records.write().unwrap();
        let rec = records.get_mut(did).ok_or(Error::RecordNotFound)?;
        if !rec.is_active() {
            return Err(Error::AlreadyTombstoned);
        }
        let next = rec.ver + 1;
        rec.pk_owner
            .verify(&AuthMessage::tombstone(*did, next, redirect).encode(), sig)?;
        rec.ver = next;
        rec.auth = Some(AuthProof::SignatureB(sig.to_vec()));
        rec.state = RecordState::Tombstoned {
            redirect,
            migrated_at: now_secs(),
        };
        Ok(())
    }

    pub fn lookup(&self, did: &DiscoveryId) -> Option<RegistryRecord> {
        self.records.read().unwrap().get(did).cloned()
    }

    /// Frozen copy of the current state.
    pub fn view(&self) -> RegistryView {
        RegistryView {
            identity: self.identity.clone(),
            records: self.records.read().unwrap().clone(),
        }
    }

    pub fn to_snapshot(&self) -> Snapshot {
        self.view().to_snapshot()
    }

    pub fn from_snapshot(snapshot: Snapshot) -> Result<Self> {
        let view = RegistryView::from_snapshot(snapshot)?;
        Ok(Self {
            identity: view.identity,
            records: RwLock::new(view.records),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = crate::canonical_json_pretty(&self.to_snapshot());
        write_atomic(path, json.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let snap: Snapshot =
            serde_json::from_str(&text).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::from_snapshot(snap)
    }
}

impl RegistryRead for Registry {
    fn identity(&self) -> &RegistryIdentity {
        &self.identity
    }

    fn lookup(&self, did: &DiscoveryId) -> Option<RegistryRecord> {
        Registry::lookup(self, did)
    }
}

/// A read-only registry state, possibly stale.
#[derive(Debug, Clone)]
pub struct RegistryView {
    identity: RegistryIdentity,
    records: BTreeMap<DiscoveryId, RegistryRecord>,
}

impl RegistryView {
    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            identity: self.identity.clone(),
            records: self
                .records
                .iter()
                .map(|(did, r)| {
                    (
                        did.to_hex(),
                        SnapshotRecord {
                            cid: r.cid,
                            ver: r.ver,
                            commit: r.commit,
                            pk_owner: r.pk_owner.to_hex(),
                            sig_alg: r.pk_owner.sig_alg,
                            state: r.state.clone(),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn from_snapshot(snapshot: Snapshot) -> Result<Self> {
        let mut records = BTreeMap::new();
        for (did_hex, r) in snapshot.records {
            let did: DiscoveryId = did_hex.parse()?;
            let bytes = hex::decode(&r.pk_owner).map_err(|e| Error::Snapshot(e.to_string()))?;
            records.insert(
                did,
                RegistryRecord {
                    cid: r.cid,
                    ver: r.ver,
                    commit: r.commit,
                    pk_owner: OwnerPublicKey {
                        sig_alg: r.sig_alg,
                        bytes,
                    },
                    auth: None,
                    state: r.state,
                },
            );
        }
        Ok(Self {
            identity: snapshot.identity,
            records,
        })
    }
}

impl RegistryRead for RegistryView {
    fn identity(&self) -> &RegistryIdentity {
        &self.identity
    }

    fn lookup(&self, did: &DiscoveryId) -> Option<RegistryRecord> {
        self.records.get(did).cloned()
    }
}

/// Persisted form. Signatures are not kept: they authorize transitions,
/// not states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub identity: RegistryIdentity,
    pub records: BTreeMap<String, SnapshotRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    #[serde(rename = "cid_hex")]
    pub cid: ContentId,
    pub ver: u64,
    #[serde(rename = "commit_hex")]
    pub commit: Commitment,
    #[serde(rename = "pk_owner_hex")]
    pub pk_owner: String,
    pub sig_alg: u16,
    #[serde(flatten)]
    pub state: RecordState,
}
