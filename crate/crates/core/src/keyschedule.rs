//! Passphrase-rooted key schedule.
//!
//! Keys are derived in two stages. Stage A needs only the identifier and the
//! passphrase: a deterministic lookup salt feeds Argon2id, producing the
//! lookup root from which the discovery-index and registry-auth keys are
//! expanded. Stage B runs after a backup artifact has been fetched: its
//! embedded salt and parameters feed Argon2id again, producing the seal root
//! from which the artifact sealing key is expanded.
//!
//! Which root may produce which key is enforced by the type system:
//! [`RootKey::derive`] only compiles for legal pairs. The type-erased
//! [`derive_domain_key`] applies the same table at runtime for callers that
//! carry keys dynamically.
//!
//! A lookup root cannot produce a sealing key:
//!
//! ```compile_fail
//! use vadar_core::keyschedule::{marker, LookupRoot, SealKey};
//! fn f(root: &LookupRoot) -> SealKey { root.derive::<marker::Seal>() }
//! ```
//!
//! ```compile_fail
//! use vadar_core::keyschedule::{marker, LookupRoot, DomainKey};
//! fn f(root: &LookupRoot) -> DomainKey<marker::LocalSeal> { root.derive() }
//! ```
//!
//! A seal root cannot produce discovery, registry or device keys:
//!
//! ```compile_fail
//! use vadar_core::keyschedule::{marker, SealRoot, IndexKey};
//! fn f(root: &SealRoot) -> IndexKey { root.derive::<marker::Index>() }
//! ```
//!
//! ```compile_fail
//! use vadar_core::keyschedule::{marker, SealRoot, RegistryAuthKey};
//! fn f(root: &SealRoot) -> RegistryAuthKey { root.derive::<marker::RegistryAuth>() }
//! ```
//!
//! ```compile_fail
//! use vadar_core::keyschedule::{marker, SealRoot, DomainKey};
//! fn f(root: &SealRoot) -> DomainKey<marker::LocalSeal> { root.derive() }
//! ```
//!
//! A device PRF root only produces the local sealing key:
//!
//! ```compile_fail
//! use vadar_core::keyschedule::{marker, DeviceRoot, SealKey};
//! fn f(root: &DeviceRoot) -> SealKey { root.derive::<marker::Seal>() }
//! ```
//!
//! ```compile_fail
//! use vadar_core::keyschedule::{marker, DeviceRoot, IndexKey};
//! fn f(root: &DeviceRoot) -> IndexKey { root.derive::<marker::Index>() }
//! ```
//!
//! ```compile_fail
//! use vadar_core::keyschedule::{marker, DeviceRoot, RegistryAuthKey};
//! fn f(root: &DeviceRoot) -> RegistryAuthKey { root.derive::<marker::RegistryAuth>() }
//! ```
//!
//! The legal pairs compile:
//!
//! ```
//! use vadar_core::keyschedule::{marker, DeviceRoot, IndexKey, LocalSealKey, LookupRoot,
//!     RegistryAuthKey, SealKey, SealRoot};
//! fn a(root: &LookupRoot) -> (IndexKey, RegistryAuthKey) { (root.derive(), root.derive()) }
//! fn b(root: &SealRoot) -> SealKey { root.derive() }
//! fn c(root: &DeviceRoot) -> LocalSealKey { root.derive() }
//! ```

use std::fmt;
use std::marker::PhantomData;

use argon2::{Algorithm, Argon2, Params, Version};
use hkdf::Hkdf;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::framing::frame;
use crate::identity::NormalizedIdentifier;
use crate::secret::{SecretBytes, SecretVec};

pub const KEY_LEN: usize = 32;
pub const SALT_PW_LEN: usize = 16;

pub const LOOKUP_SALT_LABEL: &str = "va-dar:lookup:v1";
pub const INFO_SEAL: &str = "acegf:sa2:seal";
pub const INFO_INDEX: &str = "va-dar:discovery:index";
pub const INFO_REGISTRY_AUTH: &str = "va-dar:registry:auth";
pub const INFO_LOCAL_SEAL: &str = "acegf:local:seal";
pub const INFO_OWNER_SEED: &str = "va-dar:registry:ownerseed";

const DEV_MIN_MEMORY_KIB: u32 = 8 * 1024;
const PROD_MIN_MEMORY_KIB: u32 = 64 * 1024;

// Upper bounds on parameters read from untrusted artifacts.
pub const MAX_MEMORY_KIB: u32 = 512 * 1024;
pub const MAX_TIME_COST: u32 = 16;
pub const MAX_PARALLELISM: u32 = 16;

/// The user's recovery passphrase.
pub struct Passphrase(SecretVec);

impl Passphrase {
    pub fn new(passphrase: &str) -> Result<Self> {
        Self::from_bytes(passphrase.as_bytes().to_vec())
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::EmptyPassphrase);
        }
        Ok(Self(SecretVec::new(bytes)))
    }

    pub fn expose(&self) -> &[u8] {
        self.0.expose()
    }
}

impl Clone for Passphrase {
    fn clone(&self) -> Self {
        Self(self.0.clone())
    }
}

impl PartialEq for Passphrase {
    fn eq(&self, other: &Self) -> bool {
        use subtle::ConstantTimeEq;
        self.expose().ct_eq(other.expose()).into()
    }
}

impl fmt::Debug for Passphrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Passphrase(..)")
    }
}

/// Argon2id cost parameters. The output length is always [`KEY_LEN`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KdfParams {
    #[serde(rename = "m_kib")]
    pub memory_kib: u32,
    #[serde(rename = "t")]
    pub time_cost: u32,
    #[serde(rename = "p")]
    pub parallelism: u32,
}

impl KdfParams {
    pub const fn new(memory_kib: u32, time_cost: u32, parallelism: u32) -> Self {
        Self {
            memory_kib,
            time_cost,
            parallelism,
        }
    }

    /// Rejects parameters below `floor` or above the fixed ceiling.
    pub fn check(&self, floor: Floor) -> Result<()> {
        let min_m = floor.min_memory_kib();
        if self.memory_kib < min_m || self.time_cost < 1 || self.parallelism < 1 {
            return Err(Error::KdfParamsBelowFloor {
                profile: floor.name(),
                detail: format!(
                    "m={} KiB t={} p={} (need m>={min_m}, t>=1, p>=1)",
                    self.memory_kib, self.time_cost, self.parallelism
                ),
            });
        }
        if self.memory_kib > MAX_MEMORY_KIB
            || self.time_cost > MAX_TIME_COST
            || self.parallelism > MAX_PARALLELISM
        {
            return Err(Error::KdfParamsAboveCeiling(format!(
                "m={} KiB t={} p={}",
                self.memory_kib, self.time_cost, self.parallelism
            )));
        }
        Ok(())
    }
}

/// Minimum accepted Argon2id cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Floor {
    /// 8 MiB; only for tests and local experiments.
    Dev,
    /// 64 MiB.
    Production,
}

impl Floor {
    pub fn min_memory_kib(self) -> u32 {
        match self {
            Floor::Dev => DEV_MIN_MEMORY_KIB,
            Floor::Production => PROD_MIN_MEMORY_KIB,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Floor::Dev => "dev",
            Floor::Production => "production",
        }
    }
}

/// A named pair of Stage A (lookup) and Stage B (sealing) parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KdfProfile {
    #[serde(rename = "profile")]
    pub name: String,
    pub stage_a: KdfParams,
    pub stage_b: KdfParams,
}

impl KdfProfile {
    pub fn dev() -> Self {
        Self {
            name: "dev".into(),
            stage_a: KdfParams::new(8 * 1024, 1, 1),
            stage_b: KdfParams::new(8 * 1024, 1, 1),
        }
    }

    pub fn mobile() -> Self {
        Self {
            name: "mobile".into(),
            stage_a: KdfParams::new(64 * 1024, 2, 1),
            stage_b: KdfParams::new(128 * 1024, 3, 1),
        }
    }

    pub fn desktop() -> Self {
        Self {
            name: "desktop".into(),
            stage_a: KdfParams::new(128 * 1024, 3, 1),
            stage_b: KdfParams::new(256 * 1024, 3, 1),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "dev" => Some(Self::dev()),
            "mobile" => Some(Self::mobile()),
            "desktop" => Some(Self::desktop()),
            _ => None,
        }
    }

    pub fn floor(&self) -> Floor {
        if self.name == "dev" {
            Floor::Dev
        } else {
            Floor::Production
        }
    }

    /// Checks both stages against this profile's floor.
    pub fn validate(&self) -> Result<()> {
        self.stage_a.check(self.floor())?;
        self.stage_b.check(self.floor())
    }

    pub fn to_json(&self) -> String {
        crate::canonical_json(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let profile: Self =
            serde_json::from_str(s).map_err(|e| Error::MalformedEncoding(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }
}

/// Deterministic Stage A salt, a function of the normalized identifier only.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct LookupSalt(pub [u8; 32]);

impl fmt::Debug for LookupSalt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LookupSalt({})", hex::encode(self.0))
    }
}

pub fn derive_lookup_salt(identifier: &NormalizedIdentifier) -> LookupSalt {
    let digest = Sha256::digest(frame(&[
        LOOKUP_SALT_LABEL.as_bytes(),
        identifier.as_bytes(),
    ]));
    LookupSalt(digest.into())
}

fn argon2id(
    passphrase: &Passphrase,
    salt: &[u8],
    params: &KdfParams,
) -> Result<SecretBytes<KEY_LEN>> {
    let argon = Argon2::new(
        Algorithm::Argon2id,
        Version::V0x13,
        Params::new(
            params.memory_kib,
            params.time_cost,
            params.parallelism,
            Some(KEY_LEN),
        )
        .map_err(|e| Error::Kdf(e.to_string()))?,
    );
    let mut out = SecretBytes::<KEY_LEN>::zeroed();
    argon
        .hash_password_into(passphrase.expose(), salt, out.expose_mut())
        .map_err(|e| Error::Kdf(e.to_string()))?;
    Ok(out)
}

/// Stage A: the lookup root, computable from identifier and passphrase alone.
pub fn derive_lookup_root(
    passphrase: &Passphrase,
    salt: &LookupSalt,
    params: &KdfParams,
    floor: Floor,
) -> Result<LookupRoot> {
    params.check(floor)?;
    Ok(RootKey::from_secret(argon2id(passphrase, &salt.0, params)?))
}

/// Stage B: the seal root, bound to the salt and parameters embedded in a
/// backup artifact.
///
/// Embedded parameters are untrusted; anything under the dev floor is
/// refused regardless of `floor`.
pub fn derive_sealroot(
    passphrase: &Passphrase,
    salt_pw: &[u8],
    params_pw: &KdfParams,
    floor: Floor,
) -> Result<SealRoot> {
    if salt_pw.len() != SALT_PW_LEN {
        return Err(Error::MalformedEncoding(format!(
            "salt_pw must be {SALT_PW_LEN} bytes, got {}",
            salt_pw.len()
        )));
    }
    params_pw.check(Floor::Dev)?;
    params_pw.check(floor)?;
    Ok(RootKey::from_secret(argon2id(
        passphrase, salt_pw, params_pw,
    )?))
}

fn hkdf_expand(ikm: &[u8], info: &str) -> SecretBytes<KEY_LEN> {
    let hk = Hkdf::<Sha256>::new(None, ikm);
    let mut out = SecretBytes::<KEY_LEN>::zeroed();
    hk.expand(info.as_bytes(), out.expose_mut())
        .expect("32 bytes is a valid HKDF-SHA-256 output length");
    out
}

/// Which derivation produced a root key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    LookupRoot,
    SealRoot,
    DeviceRoot,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::LookupRoot, Stage::SealRoot, Stage::DeviceRoot];

    pub fn permits(self, domain: Domain) -> bool {
        matches!(
            (self, domain),
            (Stage::SealRoot, Domain::Seal)
                | (Stage::LookupRoot, Domain::Index)
                | (Stage::LookupRoot, Domain::RegistryAuth)
                | (Stage::DeviceRoot, Domain::LocalSeal)
        )
    }
}

/// The role a derived key plays. Each maps to exactly one HKDF info string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Seal,
    Index,
    RegistryAuth,
    LocalSeal,
}

impl Domain {
    pub const ALL: [Domain; 4] = [
        Domain::Seal,
        Domain::Index,
        Domain::RegistryAuth,
        Domain::LocalSeal,
    ];

    pub fn info(self) -> &'static str {
        match self {
            Domain::Seal => INFO_SEAL,
            Domain::Index => INFO_INDEX,
            Domain::RegistryAuth => INFO_REGISTRY_AUTH,
            Domain::LocalSeal => INFO_LOCAL_SEAL,
        }
    }
}

/// Type-level tags for stages and domains.
pub mod marker {
    use super::{Domain, Stage};

    pub trait RootStage {
        const STAGE: Stage;
    }

    pub trait KeyDomain {
        const DOMAIN: Domain;
    }

    /// Implemented only for the legal (stage, domain) pairs.
    pub trait DerivableFrom<S: RootStage>: KeyDomain {}

    pub enum Lookup {}
    pub enum SealRoot {}
    pub enum Device {}

    pub enum Seal {}
    pub enum Index {}
    pub enum RegistryAuth {}
    pub enum LocalSeal {}

    impl RootStage for Lookup {
        const STAGE: Stage = Stage::LookupRoot;
    }
    impl RootStage for SealRoot {
        const STAGE: Stage = Stage::SealRoot;
    }
    impl RootStage for Device {
        const STAGE: Stage = Stage::DeviceRoot;
    }

    impl KeyDomain for Seal {
        const DOMAIN: Domain = Domain::Seal;
    }
    impl KeyDomain for Index {
        const DOMAIN: Domain = Domain::Index;
    }
    impl KeyDomain for RegistryAuth {
        const DOMAIN: Domain = Domain::RegistryAuth;
    }
    impl KeyDomain for LocalSeal {
        const DOMAIN: Domain = Domain::LocalSeal;
    }

    impl DerivableFrom<SealRoot> for Seal {}
    impl DerivableFrom<Lookup> for Index {}
    impl DerivableFrom<Lookup> for RegistryAuth {}
    impl DerivableFrom<Device> for LocalSeal {}
}

use marker::{DerivableFrom, KeyDomain, RootStage};

/// Output of Argon2id (or of a device PRF), tagged with its stage.
pub struct RootKey<S> {
    key: SecretBytes<KEY_LEN>,
    _stage: PhantomData<S>,
}

pub type LookupRoot = RootKey<marker::Lookup>;
pub type SealRoot = RootKey<marker::SealRoot>;
pub type DeviceRoot = RootKey<marker::Device>;

impl<S: RootStage> RootKey<S> {
    pub(crate) fn from_secret(key: SecretBytes<KEY_LEN>) -> Self {
        Self {
            key,
            _stage: PhantomData,
        }
    }

    pub fn stage(&self) -> Stage {
        S::STAGE
    }

    pub fn derive<D: DerivableFrom<S>>(&self) -> DomainKey<D> {
        DomainKey::from_secret(hkdf_expand(self.key.expose(), D::DOMAIN.info()))
    }

    pub fn expose(&self) -> &[u8; KEY_LEN] {
        self.key.expose()
    }
}

impl LookupRoot {
    /// Seed for an owner signing key derived from passphrase material
    /// (derived owner-key model). `info` is a deployment constant, normally
    /// [`INFO_OWNER_SEED`].
    pub fn owner_seed(&self, info: &str) -> SecretBytes<KEY_LEN> {
        hkdf_expand(self.key.expose(), info)
    }
}

impl<S> fmt::Debug for RootKey<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RootKey(..)")
    }
}

/// A 32-byte key bound to one role.
pub struct DomainKey<D> {
    key: SecretBytes<KEY_LEN>,
    _domain: PhantomData<D>,
}

pub type SealKey = DomainKey<marker::Seal>;
pub type IndexKey = DomainKey<marker::Index>;
pub type RegistryAuthKey = DomainKey<marker::RegistryAuth>;
pub type LocalSealKey = DomainKey<marker::LocalSeal>;

impl<D: KeyDomain> DomainKey<D> {
    fn from_secret(key: SecretBytes<KEY_LEN>) -> Self {
        Self {
            key,
            _domain: PhantomData,
        }
    }

    /// Wraps raw key bytes. Meant for test vectors and games; protocol code
    /// obtains keys through [`RootKey::derive`].
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        Self::from_secret(SecretBytes::new(bytes))
    }

    pub fn domain(&self) -> Domain {
        D::DOMAIN
    }

    pub fn expose(&self) -> &[u8; KEY_LEN] {
        self.key.expose()
    }
}

impl<D> Clone for DomainKey<D> {
    fn clone(&self) -> Self {
        Self {
            key: self.key.clone(),
            _domain: PhantomData,
        }
    }
}

impl<D> fmt::Debug for DomainKey<D> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DomainKey(..)")
    }
}

/// Root key with its stage carried at runtime.
pub struct AnyRootKey {
    stage: Stage,
    key: SecretBytes<KEY_LEN>,
}

impl AnyRootKey {
    pub fn new(stage: Stage, bytes: [u8; KEY_LEN]) -> Self {
        Self {
            stage,
            key: SecretBytes::new(bytes),
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }
}

impl<S: RootStage> From<RootKey<S>> for AnyRootKey {
    fn from(root: RootKey<S>) -> Self {
        Self {
            stage: S::STAGE,
            key: root.key,
        }
    }
}

/// Domain key with its domain carried at runtime.
pub struct AnyDomainKey {
    domain: Domain,
    key: SecretBytes<KEY_LEN>,
}

impl AnyDomainKey {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn expose(&self) -> &[u8; KEY_LEN] {
        self.key.expose()
    }

    pub fn into_typed<D: KeyDomain>(self) -> Result<DomainKey<D>> {
        if self.domain != D::DOMAIN {
            return Err(Error::DomainMismatch {
                expected: D::DOMAIN,
                found: self.domain,
            });
        }
        Ok(DomainKey::from_secret(self.key))
    }
}

/// Runtime counterpart of [`RootKey::derive`].
pub fn derive_domain_key(root: &AnyRootKey, domain: Domain) -> Result<AnyDomainKey> {
    if !root.stage.permits(domain) {
        return Err(Error::IllegalStageDomainPair {
            stage: root.stage,
            domain,
        });
    }
    Ok(AnyDomainKey {
        domain,
        key: hkdf_expand(root.key.expose(), domain.info()),
    })
}

/// HKDF-SHA-256 expansion of arbitrary root material under every domain's
/// info string, ignoring the stage table. Used to check domain separation.
pub fn expand_all_domains(root: &[u8; KEY_LEN]) -> [[u8; KEY_LEN]; 4] {
    Domain::ALL.map(|d| *hkdf_expand(root, d.info()).expose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::normalize;

    #[test]
    fn lookup_salt_is_deterministic_and_distinct() {
        let a = normalize("alice@example.com").unwrap();
        let b = normalize("bob@example.com").unwrap();
        assert_eq!(derive_lookup_salt(&a), derive_lookup_salt(&a));
        assert_ne!(derive_lookup_salt(&a), derive_lookup_salt(&b));
    }

    #[test]
    fn lookup_root_separates_passphrases() {
        let salt = derive_lookup_salt(&normalize("alice@example.com").unwrap());
        let params = KdfProfile::dev().stage_a;
        let p1 = Passphrase::new("correct horse").unwrap();
        let p2 = Passphrase::new("correct horse battery").unwrap();
        let a = derive_lookup_root(&p1, &salt, &params, Floor::Dev).unwrap();
        let b = derive_lookup_root(&p1, &salt, &params, Floor::Dev).unwrap();
        let c = derive_lookup_root(&p2, &salt, &params, Floor::Dev).unwrap();
        assert_eq!(a.expose(), b.expose());
        assert_ne!(a.expose(), c.expose());
    }

    #[test]
    fn weak_embedded_params_are_refused() {
        let p = Passphrase::new("test-passphrase").unwrap();
        let weak = KdfParams::new(1024, 1, 1);
        assert!(matches!(
            derive_sealroot(&p, &[0x42; 16], &weak, Floor::Dev),
            Err(Error::KdfParamsBelowFloor { .. })
        ));
        let dev = KdfProfile::dev().stage_b;
        assert!(matches!(
            derive_sealroot(&p, &[0x42; 16], &dev, Floor::Production),
            Err(Error::KdfParamsBelowFloor {
                profile: "production",
                ..
            })
        ));
        assert!(matches!(
            derive_sealroot(&p, &[0x42; 16], &KdfParams::new(8192, 0, 1), Floor::Dev),
            Err(Error::KdfParamsBelowFloor { .. })
        ));
    }

    #[test]
    fn absurd_params_hit_the_ceiling() {
        let err = KdfParams::new(u32::MAX, 1, 1)
            .check(Floor::Dev)
            .unwrap_err();
        assert!(matches!(err, Error::KdfParamsAboveCeiling(_)));
        assert!(KdfParams::new(8192, 200, 1).check(Floor::Dev).is_err());
    }

    #[test]
    fn sealroot_rejects_wrong_salt_length() {
        let p = Passphrase::new("x").unwrap();
        assert!(derive_sealroot(&p, &[0; 15], &KdfProfile::dev().stage_b, Floor::Dev).is_err());
    }

    #[test]
    fn empty_passphrase_is_rejected() {
        assert!(matches!(Passphrase::new(""), Err(Error::EmptyPassphrase)));
    }

    #[test]
    fn runtime_pairing_table() {
        for stage in Stage::ALL {
            let root = AnyRootKey::new(stage, [1; 32]);
            for domain in Domain::ALL {
                let res = derive_domain_key(&root, domain);
                assert_eq!(
                    res.is_ok(),
                    stage.permits(domain),
                    "{stage:?} -> {domain:?}"
                );
            }
        }
        let root = AnyRootKey::new(Stage::LookupRoot, [1; 32]);
        assert!(matches!(
            derive_domain_key(&root, Domain::Seal),
            Err(Error::IllegalStageDomainPair {
                stage: Stage::LookupRoot,
                domain: Domain::Seal
            })
        ));
    }

    #[test]
    fn typed_and_runtime_paths_agree() {
        let typed: IndexKey = LookupRoot::from_secret(SecretBytes::new([1; 32])).derive();
        let any =
            derive_domain_key(&AnyRootKey::new(Stage::LookupRoot, [1; 32]), Domain::Index).unwrap();
        assert_eq!(typed.expose(), any.expose());
        assert!(any.into_typed::<marker::RegistryAuth>().is_err());
    }

    #[test]
    fn index_and_registry_keys_differ() {
        let root = LookupRoot::from_secret(SecretBytes::new([9; 32]));
        let idx: IndexKey = root.derive();
        let reg: RegistryAuthKey = root.derive();
        assert_ne!(idx.expose(), reg.expose());
        assert_ne!(idx.expose(), root.owner_seed(INFO_OWNER_SEED).expose());
    }

    #[test]
    fn profiles_meet_their_floors() {
        for p in [
            KdfProfile::dev(),
            KdfProfile::mobile(),
            KdfProfile::desktop(),
        ] {
            p.validate().unwrap();
            assert_eq!(KdfProfile::from_json(&p.to_json()).unwrap(), p);
        }
        let mut cheap = KdfProfile::mobile();
        cheap.stage_a.memory_kib = 8192;
        assert!(cheap.validate().is_err());
    }

    #[test]
    fn profile_json_is_key_ordered() {
        assert_eq!(
            KdfProfile::dev().to_json(),
            r#"{"profile":"dev","stage_a":{"m_kib":8192,"p":1,"t":1},"stage_b":{"m_kib":8192,"p":1,"t":1}}"#
        );
    }
}
