//! Registration, recovery and backup update.
//!
//! Each flow runs the key schedule, storage and registry steps in a fixed
//! order and records them in a [`Trace`]. Errors carry the step at which
//! they occurred.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use crate::artifact::{
    commit, seal_backup, seal_local, BackupArtifact, Commitment, DevicePrf, EntropySource,
    LocalArtifact, RootEntityValue,
};
use crate::error::{Error, Result};
use crate::identity::{
    discovery_id, normalize, DiscoveryContext, DiscoveryId, NormalizedIdentifier,
};
use crate::keyschedule::{
    derive_lookup_root, derive_lookup_salt, IndexKey, KdfProfile, LookupRoot, Passphrase,
    RegistryAuthKey,
};
use crate::registry::{
    check_binding, option_a_tag, AuthMessage, CanonicalBinding, OwnerSigningKey, Registry,
    RegistryRead, RegistryRecord, NORM_POLICY_ID,
};
use crate::secret::SecretBytes;
use crate::storage::{get_any, put_all, ContentId, SharedStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    CheckBinding,
    Normalize,
    LookupSalt,
    LookupRoot,
    DomainKeys,
    SaltPw,
    SealRoot,
    Seal,
    Put,
    DiscoveryId,
    OwnerKey,
    Initialize,
    Lookup,
    FollowRedirect,
    Fetch,
    VerifyCommit,
    Open,
    Update,
    Tombstone,
    SealLocal,
    Zeroize,
}

pub type Trace = Vec<Step>;

#[derive(Debug)]
pub struct FlowError {
    pub step: Step,
    pub error: Error,
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.step, self.error)
    }
}

impl std::error::Error for FlowError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<FlowError> for Error {
    fn from(e: FlowError) -> Self {
        e.error
    }
}

pub type FlowResult<T> = std::result::Result<T, FlowError>;

trait At<T> {
    fn at(self, step: Step) -> FlowResult<T>;
}

impl<T> At<T> for Result<T> {
    fn at(self, step: Step) -> FlowResult<T> {
        self.map_err(|error| FlowError { step, error })
    }
}

fn fail<T>(step: Step, error: Error) -> FlowResult<T> {
    Err(FlowError { step, error })
}

/// Local store for random owner keys, indexed by discovery id.
#[derive(Default)]
pub struct KeyStore {
    dir: Option<PathBuf>,
    mem: Mutex<HashMap<DiscoveryId, SecretBytes<32>>>,
}

impl KeyStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn dir(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir: Some(dir),
            mem: Mutex::default(),
        })
    }

    fn path(&self, did: &DiscoveryId) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("owner-{}.key", did.to_hex())))
    }

    pub fn save(&self, did: &DiscoveryId, key: &OwnerSigningKey) -> Result<()> {
        match self.path(did) {
            Some(p) => key.save(&p),
            None => {
                self.mem.lock().unwrap().insert(*did, key.seed());
                Ok(())
            }
        }
    }

    pub fn load(&self, did: &DiscoveryId) -> Result<OwnerSigningKey> {
        match self.path(did) {
            Some(p) => OwnerSigningKey::load(&p),
            None => self
                .mem
                .lock()
                .unwrap()
                .get(did)
                .map(OwnerSigningKey::from_seed)
                .ok_or_else(|| Error::OwnerKeyUnavailable(format!("no key for {did}"))),
        }
    }
}

#[derive(Clone)]
pub enum OwnerKeyModel {
    /// (R) random key kept in a local key store.
    RandomKey(Arc<KeyStore>),
    /// (D) seed derived from the lookup root.
    PassphraseDerived,
}

impl fmt::Debug for OwnerKeyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OwnerKeyModel::RandomKey(_) => f.write_str("RandomKey"),
            OwnerKeyModel::PassphraseDerived => f.write_str("PassphraseDerived"),
        }
    }
}

#[derive(Clone)]
pub struct FlowConfig {
    pub binding: CanonicalBinding,
    pub profile: KdfProfile,
    pub owner_key_model: OwnerKeyModel,
    /// Tried in order on reads; every backend receives writes.
    pub backends: Vec<SharedStore>,
    pub redirect_on_rotation: bool,
}

impl fmt::Debug for FlowConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.backends.iter().map(|b| b.name()).collect();
        f.debug_struct("FlowConfig")
            .field("binding", &self.binding)
            .field("profile", &self.profile.name)
            .field("owner_key_model", &self.owner_key_model)
            .field("backends", &names)
            .field("redirect_on_rotation", &self.redirect_on_rotation)
            .finish()
    }
}

impl FlowConfig {
    pub fn new(
        binding: CanonicalBinding,
        owner_key_model: OwnerKeyModel,
        backends: Vec<SharedStore>,
    ) -> Result<Self> {
        let profile = KdfProfile::by_name(&binding.kdf_profile_id).ok_or_else(|| {
            Error::RegistryMismatch(format!("unknown kdf profile {}", binding.kdf_profile_id))
        })?;
        Ok(Self {
            binding,
            profile,
            owner_key_model,
            backends,
            redirect_on_rotation: false,
        })
    }

    /// Binding and local settings agree with each other and with the registry.
    pub fn check(&self, registry: &dyn RegistryRead) -> Result<()> {
        if self.binding.norm_policy_id != NORM_POLICY_ID {
            return Err(Error::RegistryMismatch(format!(
                "unsupported normalization policy {}",
                self.binding.norm_policy_id
            )));
        }
        if self.binding.kdf_profile_id != self.profile.name {
            return Err(Error::RegistryMismatch(format!(
                "binding expects kdf profile {}, configured {}",
                self.binding.kdf_profile_id, self.profile.name
            )));
        }
        self.profile.validate()?;
        check_binding(registry.identity(), &self.binding)
    }

    pub fn context(&self) -> DiscoveryContext {
        self.binding.context()
    }
}

/// Stage A state for one (identifier, passphrase) pair.
pub struct Session {
    identifier: NormalizedIdentifier,
    passphrase: Passphrase,
    ctx: DiscoveryContext,
    lookup_root: LookupRoot,
    k_idx: IndexKey,
    k_reg: RegistryAuthKey,
    did: Option<DiscoveryId>,
    pub trace: Trace,
}

impl fmt::Debug for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Session")
            .field("did", &self.did)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Registered {
    pub did: DiscoveryId,
    pub cid: ContentId,
    pub ver: u64,
}

#[derive(Debug)]
pub struct RecoveryOutcome {
    pub rev: RootEntityValue,
    pub record_ver: u64,
    pub redirect_followed: Option<DiscoveryId>,
    pub artifact_commit: Commitment,
}

/// Normalizes the identifier and runs Stage A. The registry identity is
/// checked first.
pub fn unlock(
    identifier: &str,
    passphrase: &Passphrase,
    config: &FlowConfig,
    registry: &dyn RegistryRead,
) -> FlowResult<Session> {
    let mut trace = vec![Step::CheckBinding];
    config.check(registry).at(Step::CheckBinding)?;
    trace.push(Step::Normalize);
    let identifier = normalize(identifier).at(Step::Normalize)?;
    trace.push(Step::LookupSalt);
    let salt = derive_lookup_salt(&identifier);
    trace.push(Step::LookupRoot);
    let lookup_root = derive_lookup_root(
        passphrase,
        &salt,
        &config.profile.stage_a,
        config.profile.floor(),
    )
    .at(Step::LookupRoot)?;
    trace.push(Step::DomainKeys);
    let k_idx: IndexKey = lookup_root.derive();
    let k_reg: RegistryAuthKey = lookup_root.derive();
    Ok(Session {
        identifier,
        passphrase: passphrase.clone(),
        ctx: config.context(),
        lookup_root,
        k_idx,
        k_reg,
        did: None,
        trace,
    })
}

impl Session {
    pub fn did(&mut self) -> FlowResult<DiscoveryId> {
        if let Some(d) = self.did {
            return Ok(d);
        }
        self.trace.push(Step::DiscoveryId);
        let d = discovery_id(&self.k_idx, &self.ctx, &self.identifier).at(Step::DiscoveryId)?;
        self.did = Some(d);
        Ok(d)
    }

    /// Option A tag over `msg` under this session's registry-auth key.
    pub fn option_a_tag(&self, msg: &AuthMessage) -> [u8; 32] {
        option_a_tag(&self.k_reg, msg)
    }

    pub fn derived_owner_key(&self, config: &FlowConfig) -> OwnerSigningKey {
        OwnerSigningKey::from_lookup_root(&self.lookup_root, &config.binding.owner_seed_info)
    }

    fn seal_and_put(
        &mut self,
        rev: &RootEntityValue,
        config: &FlowConfig,
        entropy: &mut impl EntropySource,
    ) -> FlowResult<(ContentId, Commitment)> {
        let aad = self.ctx.encode().at(Step::Seal)?;
        self.trace
            .extend([Step::SaltPw, Step::SealRoot, Step::Seal]);
        let art = seal_backup(
            rev,
            &self.passphrase,
            &config.profile.stage_b,
            &aad,
            config.profile.floor(),
            entropy,
        )
        .at(Step::Seal)?;
        let bytes = art.encode();
        self.trace.push(Step::Put);
        let cid = put_all(&bytes, &config.backends).at(Step::Put)?;
        Ok((cid, commit(&bytes)))
    }

    fn owner_key_for_new(
        &mut self,
        config: &FlowConfig,
        entropy: &mut impl EntropySource,
    ) -> FlowResult<OwnerSigningKey> {
        self.trace.push(Step::OwnerKey);
        match &config.owner_key_model {
            OwnerKeyModel::PassphraseDerived => Ok(self.derived_owner_key(config)),
            OwnerKeyModel::RandomKey(_) => {
                let mut seed = SecretBytes::<32>::zeroed();
                entropy.fill(seed.expose_mut()).at(Step::OwnerKey)?;
                Ok(OwnerSigningKey::from_seed(&seed))
            }
        }
    }

    fn owner_key_for_existing(
        &mut self,
        config: &FlowConfig,
        record: &RegistryRecord,
    ) -> FlowResult<OwnerSigningKey> {
        self.trace.push(Step::OwnerKey);
        let did = self.did()?;
        let key = match &config.owner_key_model {
            OwnerKeyModel::PassphraseDerived => self.derived_owner_key(config),
            OwnerKeyModel::RandomKey(store) => store.load(&did).at(Step::OwnerKey)?,
        };
        if key.public() != record.pk_owner {
            return fail(Step::OwnerKey, Error::BadAuth);
        }
        Ok(key)
    }

    /// Registration: seal, store, then bind the slot at version 1.
    pub fn register(
        &mut self,
        rev: &RootEntityValue,
        config: &FlowConfig,
        registry: &Registry,
        entropy: &mut impl EntropySource,
    ) -> FlowResult<Registered> {
        let (cid, commitment) = self.seal_and_put(rev, config, entropy)?;
        let did = self.did()?;
        let owner = self.owner_key_for_new(config, entropy)?;
        self.trace.push(Step::Initialize);
        registry
            .initialize(
                did,
                RegistryRecord::signed_initial(did, cid, commitment, &owner),
            )
            .at(Step::Initialize)?;
        if let OwnerKeyModel::RandomKey(store) = &config.owner_key_model {
            store.save(&did, &owner).at(Step::OwnerKey)?;
        }
        self.trace.push(Step::Zeroize);
        Ok(Registered { did, cid, ver: 1 })
    }

    /// Recovery: look up, fetch, verify the commitment, then run Stage B and
    /// open. Follows at most one redirect.
    pub fn recover(
        &mut self,
        config: &FlowConfig,
        registry: &dyn RegistryRead,
    ) -> FlowResult<RecoveryOutcome> {
        let did = self.did()?;
        self.trace.push(Step::Lookup);
        let record = registry
            .lookup(&did)
            .ok_or(Error::NotRegistered)
            .at(Step::Lookup)?;
        if record.is_active() {
            return self.fetch_and_open(&record, config, None);
        }
        let Some(target) = record.redirect() else {
            return fail(Step::Lookup, Error::NotRecoverableWithThisPassphrase);
        };
        self.trace.push(Step::FollowRedirect);
        let Some(next) = registry.lookup(&target) else {
            return fail(Step::FollowRedirect, Error::MigratedTo(target));
        };
        if !next.is_active() {
            return fail(Step::FollowRedirect, Error::RedirectLoop);
        }
        match self.fetch_and_open(&next, config, Some(target)) {
            Err(FlowError {
                step: Step::Open,
                error: Error::WrongPassphraseOrTampered,
            }) => fail(Step::FollowRedirect, Error::MigratedTo(target)),
            other => other,
        }
    }

    fn fetch_and_open(
        &mut self,
        record: &RegistryRecord,
        config: &FlowConfig,
        redirect_followed: Option<DiscoveryId>,
    ) -> FlowResult<RecoveryOutcome> {
        self.trace.push(Step::Fetch);
        let blob = match get_any(&record.cid, &config.backends) {
            Ok(f) => f.blob,
            Err(Error::AllBackendsFailed(report)) if report.mismatches() > 0 => {
                return fail(Step::Fetch, Error::CommitMismatch)
            }
            Err(_) => return fail(Step::Fetch, Error::StorageUnavailable),
        };
        self.trace.push(Step::VerifyCommit);
        let artifact_commit = commit(&blob);
        if artifact_commit != record.commit {
            return fail(Step::VerifyCommit, Error::CommitMismatch);
        }
        let art = BackupArtifact::decode(&blob).at(Step::VerifyCommit)?;
        self.trace.push(Step::SealRoot);
        let root = art
            .seal_root(&self.passphrase, config.profile.floor())
            .at(Step::SealRoot)?;
        self.trace.push(Step::Open);
        let rev = art.open_with_root(&root).at(Step::Open)?;
        drop(root);
        self.trace.push(Step::Zeroize);
        Ok(RecoveryOutcome {
            rev,
            record_ver: record.ver,
            redirect_followed,
            artifact_commit,
        })
    }

    fn active_record(&mut self, registry: &Registry) -> FlowResult<RegistryRecord> {
        let did = self.did()?;
        self.trace.push(Step::Lookup);
        let record = registry
            .lookup(&did)
            .ok_or(Error::NotRegistered)
            .at(Step::Lookup)?;
        if !record.is_active() {
            return fail(Step::Lookup, Error::Tombstoned);
        }
        Ok(record)
    }

    /// Same passphrase, new artifact, next version.
    pub fn update(
        &mut self,
        rev: &RootEntityValue,
        config: &FlowConfig,
        registry: &Registry,
        entropy: &mut impl EntropySource,
    ) -> FlowResult<Registered> {
        let record = self.active_record(registry)?;
        let owner = self.owner_key_for_existing(config, &record)?;
        let (cid, commitment) = self.seal_and_put(rev, config, entropy)?;
        let did = self.did()?;
        let ver = record.ver + 1;
        let sig = owner.sign(&AuthMessage::new(did, cid, ver, commitment));
        self.trace.push(Step::Update);
        registry
            .update(&did, cid, ver, commitment, &sig)
            .at(Step::Update)?;
        self.trace.push(Step::Zeroize);
        Ok(Registered { did, cid, ver })
    }

    /// New passphrase: register under `next` (the new passphrase) and retire
    /// this entry, with a redirect if configured.
    pub fn rotate(
        &mut self,
        next: &mut Session,
        rev: &RootEntityValue,
        config: &FlowConfig,
        registry: &Registry,
        entropy: &mut impl EntropySource,
    ) -> FlowResult<Registered> {
        let record = self.active_record(registry)?;
        let owner = self.owner_key_for_existing(config, &record)?;
        let registered = next.register(rev, config, registry, entropy)?;
        let did = self.did()?;
        let redirect = config.redirect_on_rotation.then_some(registered.did);
        let sig = owner.sign(&AuthMessage::tombstone(did, record.ver + 1, redirect));
        self.trace.push(Step::Tombstone);
        registry
            .tombstone(&did, redirect, &sig)
            .at(Step::Tombstone)?;
        self.trace.push(Step::Zeroize);
        Ok(registered)
    }
}

pub fn register(
    identifier: &str,
    passphrase: &Passphrase,
    rev: &RootEntityValue,
    config: &FlowConfig,
    registry: &Registry,
    entropy: &mut impl EntropySource,
) -> FlowResult<Registered> {
    unlock(identifier, passphrase, config, registry)?.register(rev, config, registry, entropy)
}

/// Takes no device handle: recovery depends on the identifier and
/// passphrase only.
pub fn recover(
    identifier: &str,
    passphrase: &Passphrase,
    config: &FlowConfig,
    registry: &dyn RegistryRead,
) -> FlowResult<RecoveryOutcome> {
    unlock(identifier, passphrase, config, registry)?.recover(config, registry)
}

/// Recovery followed by a device-local reseal.
pub fn recover_to_device(
    identifier: &str,
    passphrase: &Passphrase,
    config: &FlowConfig,
    registry: &dyn RegistryRead,
    prf: &DevicePrf,
    label: &str,
    entropy: &mut impl EntropySource,
) -> FlowResult<(RecoveryOutcome, LocalArtifact)> {
    let outcome = recover(identifier, passphrase, config, registry)?;
    let local = seal_local(&outcome.rev, prf, label, entropy).at(Step::SealLocal)?;
    Ok((outcome, local))
}

/// Updates in place when the passphrases match, rotates otherwise. Returns
/// the active entry.
pub fn update_backup(
    identifier: &str,
    old_passphrase: &Passphrase,
    new_passphrase: &Passphrase,
    rev: &RootEntityValue,
    config: &FlowConfig,
    registry: &Registry,
    entropy: &mut impl EntropySource,
) -> FlowResult<Registered> {
    let mut current = unlock(identifier, old_passphrase, config, registry)?;
    if old_passphrase == new_passphrase {
        current.update(rev, config, registry, entropy)
    } else {
        let mut next = unlock(identifier, new_passphrase, config, registry)?;
        current.rotate(&mut next, rev, config, registry, entropy)
    }
}
