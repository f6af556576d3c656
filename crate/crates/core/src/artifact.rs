//! Sealed artifact formats.
//!
//! The backup artifact (`VADARSA2`) is sealed under a key derived from the
//! passphrase alone and carries everything else needed to open it: salt,
//! Argon2id parameters, AEAD identifier, nonce and associated data. Local
//! artifacts (`VADARSA1`) are sealed under a device PRF output and are never
//! needed for cross-device recovery.
//!
//! Backup layout, all integers big-endian:
//!
//! ```text
//! magic "VADARSA2"      8
//! version               u16
//! salt_pw               16
//! m_kib, t, p           u32 x 3
//! aead_alg              u16
//! nonce_len, nonce      u8 + n
//! aad_len, aad          u32 + n
//! ct_len, ct            u32 + n
//! ```

use std::fmt;

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{XChaCha20Poly1305, XNonce};
use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::keyschedule::{
    derive_sealroot, DeviceRoot, Floor, KdfParams, LocalSealKey, Passphrase, RootKey, SealKey,
    SALT_PW_LEN,
};
use crate::secret::SecretBytes;

pub const BACKUP_MAGIC: &[u8; 8] = b"VADARSA2";
pub const LOCAL_MAGIC: &[u8; 8] = b"VADARSA1";
pub const FORMAT_VERSION: u16 = 1;
pub const REV_LEN: usize = 32;

/// XChaCha20-Poly1305: 32-byte key, 24-byte nonce, 16-byte tag.
pub const AEAD_XCHACHA20POLY1305: u16 = 1;
const NONCE_LEN: usize = 24;
const TAG_LEN: usize = 16;

/// The wallet root secret that artifacts protect.
#[derive(Clone, PartialEq, Eq)]
pub struct RootEntityValue(SecretBytes<REV_LEN>);

impl RootEntityValue {
    pub fn new(bytes: [u8; REV_LEN]) -> Self {
        Self(SecretBytes::new(bytes))
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        SecretBytes::from_slice(bytes).map(Self)
    }

    pub fn random(entropy: &mut impl EntropySource) -> Result<Self> {
        let mut s = SecretBytes::zeroed();
        entropy.fill(s.expose_mut())?;
        Ok(Self(s))
    }

    pub fn expose(&self) -> &[u8; REV_LEN] {
        self.0.expose()
    }

    /// SHA-256 of the secret, for confirming a recovery without revealing it.
    pub fn fingerprint(&self) -> Commitment {
        commit(self.expose())
    }
}

impl fmt::Debug for RootEntityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RootEntityValue(..)")
    }
}

/// Source of salts and nonces.
pub trait EntropySource {
    fn fill(&mut self, dst: &mut [u8]) -> Result<()>;
}

impl<R: RngCore + CryptoRng> EntropySource for R {
    fn fill(&mut self, dst: &mut [u8]) -> Result<()> {
        self.try_fill_bytes(dst)
            .map_err(|e| Error::EntropyFailure(e.to_string()))
    }
}

/// Fills every request with one byte value. Test vectors only.
#[derive(Debug, Clone, Copy)]
pub struct FixedEntropy(pub u8);

impl EntropySource for FixedEntropy {
    fn fill(&mut self, dst: &mut [u8]) -> Result<()> {
        dst.fill(self.0);
        Ok(())
    }
}

/// SHA-256 over exact artifact bytes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Commitment(pub [u8; 32]);

impl Commitment {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| Error::MalformedEncoding(e.to_string()))?;
        Ok(Self(out))
    }
}

impl fmt::Debug for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Commitment({})", self.to_hex())
    }
}

impl fmt::Display for Commitment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Commitment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Commitment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Self::from_hex(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

pub fn commit(artifact_bytes: &[u8]) -> Commitment {
    Commitment(Sha256::digest(artifact_bytes).into())
}

/// Portable, passphrase-sealed backup of the root secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackupArtifact {
    pub version: u16,
    pub salt_pw: [u8; SALT_PW_LEN],
    pub params_pw: KdfParams,
    pub aead_alg: u16,
    pub nonce: Vec<u8>,
    pub aad: Vec<u8>,
    pub ct: Vec<u8>,
}

fn aead_seal(key: &[u8; 32], nonce: &[u8], aad: &[u8], plaintext: &[u8]) -> Vec<u8> {
    XChaCha20Poly1305::new(key.into())
        .encrypt(
            XNonce::from_slice(nonce),
            Payload {
                msg: plaintext,
                aad,
            },
        )
        .expect("XChaCha20-Poly1305 encryption of a short message cannot fail")
}

fn aead_open(key: &[u8; 32], nonce: &[u8], aad: &[u8], ct: &[u8]) -> Option<SecretBytes<REV_LEN>> {
    if nonce.len() != NONCE_LEN {
        return None;
    }
    let pt = XChaCha20Poly1305::new(key.into())
        .decrypt(XNonce::from_slice(nonce), Payload { msg: ct, aad })
        .ok()?;
    let out = SecretBytes::from_slice(&pt);
    let mut pt = pt;
    zeroize::Zeroize::zeroize(&mut pt);
    out
}

/// True if `aad` holds something shaped like `local@domain.tld`.
pub fn looks_identifying(aad: &[u8]) -> bool {
    let word = |b: &u8| b.is_ascii_alphanumeric() || b"._%+-".contains(b);
    aad.iter().enumerate().any(|(i, &b)| {
        if b != b'@' || i == 0 || !word(&aad[i - 1]) {
            return false;
        }
        let domain: Vec<u8> = aad[i + 1..]
            .iter()
            .copied()
            .take_while(|c| word(c))
            .collect();
        domain.contains(&b'.') && domain.first().is_some_and(u8::is_ascii_alphanumeric)
    })
}

/// Seals `rev` under a fresh salt and nonce.
pub fn seal_backup(
    rev: &RootEntityValue,
    passphrase: &Passphrase,
    params_pw: &KdfParams,
    aad: &[u8],
    floor: Floor,
    entropy: &mut impl EntropySource,
) -> Result<BackupArtifact> {
    if looks_identifying(aad) {
        return Err(Error::IdentifyingAad);
    }
    params_pw.check(floor)?;
    let mut salt_pw = [0u8; SALT_PW_LEN];
    entropy.fill(&mut salt_pw)?;
    let mut nonce = vec![0u8; NONCE_LEN];
    entropy.fill(&mut nonce)?;

    let root = derive_sealroot(passphrase, &salt_pw, params_pw, floor)?;
    let k_sa: SealKey = root.derive();
    let ct = aead_seal(k_sa.expose(), &nonce, aad, rev.expose());
    Ok(BackupArtifact {
        version: FORMAT_VERSION,
        salt_pw,
        params_pw: *params_pw,
        aead_alg: AEAD_XCHACHA20POLY1305,
        nonce,
        aad: aad.to_vec(),
        ct,
    })
}

/// Decodes and opens an encoded backup with the passphrase alone.
pub fn open_backup(artifact_bytes: &[u8], passphrase: &Passphrase) -> Result<RootEntityValue> {
    BackupArtifact::decode(artifact_bytes)?.open(passphrase, Floor::Dev)
}

impl BackupArtifact {
    /// Stage B derivation from the embedded salt and parameters, then AEAD open.
    pub fn open(&self, passphrase: &Passphrase, floor: Floor) -> Result<RootEntityValue> {
        let root = self.seal_root(passphrase, floor)?;
        self.open_with_root(&root)
    }

    pub fn seal_root(
        &self,
        passphrase: &Passphrase,
        floor: Floor,
    ) -> Result<crate::keyschedule::SealRoot> {
        derive_sealroot(passphrase, &self.salt_pw, &self.params_pw, floor)
    }

    pub fn open_with_root(&self, root: &crate::keyschedule::SealRoot) -> Result<RootEntityValue> {
        let k_sa: SealKey = root.derive();
        aead_open(k_sa.expose(), &self.nonce, &self.aad, &self.ct)
            .map(RootEntityValue)
            .ok_or(Error::WrongPassphraseOrTampered)
    }

    pub fn encode(&self) -> Vec<u8> {
        encode_backup(self)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        decode_backup(bytes)
    }

    pub fn commitment(&self) -> Commitment {
        commit(&self.encode())
    }
}

pub fn encode_backup(a: &BackupArtifact) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + a.nonce.len() + a.aad.len() + a.ct.len());
    out.extend_from_slice(BACKUP_MAGIC);
    out.extend_from_slice(&a.version.to_be_bytes());
    out.extend_from_slice(&a.salt_pw);
    out.extend_from_slice(&a.params_pw.memory_kib.to_be_bytes());
    out.extend_from_slice(&a.params_pw.time_cost.to_be_bytes());
    out.extend_from_slice(&a.params_pw.parallelism.to_be_bytes());
    out.extend_from_slice(&a.aead_alg.to_be_bytes());
    out.push(u8::try_from(a.nonce.len()).expect("nonce longer than 255 bytes"));
    out.extend_from_slice(&a.nonce);
    out.extend_from_slice(&(a.aad.len() as u32).to_be_bytes());
    out.extend_from_slice(&a.aad);
    out.extend_from_slice(&(a.ct.len() as u32).to_be_bytes());
    out.extend_from_slice(&a.ct);
    out
}

/// Cursor over untrusted bytes that reports the failing offset.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::MalformedArtifact {
            offset: self.pos,
            reason: reason.into(),
        })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        match self.buf.get(self.pos..self.pos + n) {
            Some(s) => {
                self.pos += n;
                Ok(s)
            }
            None => self.fail(format!(
                "truncated {what}: need {n} bytes, {} left",
                self.buf.len() - self.pos
            )),
        }
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().unwrap())
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_be_bytes(self.array(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_be_bytes(self.array(what)?))
    }

    fn end(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return self.fail(format!("{} trailing bytes", self.buf.len() - self.pos));
        }
        Ok(())
    }
}

fn check_alg(r: &Reader<'_>, aead_alg: u16) -> Result<()> {
    if aead_alg != AEAD_XCHACHA20POLY1305 {
        return r.fail(format!("unknown aead_alg {aead_alg}"));
    }
    Ok(())
}

pub fn decode_backup(bytes: &[u8]) -> Result<BackupArtifact> {
    let mut r = Reader::new(bytes);
    if r.take(8, "magic")? != BACKUP_MAGIC {
        r.pos = 0;
        return r.fail("bad magic");
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return r.fail(format!("unsupported version {version}"));
    }
    let salt_pw = r.array::<SALT_PW_LEN>("salt_pw")?;
    let params_pw = KdfParams::new(r.u32("m_kib")?, r.u32("t")?, r.u32("p")?);
    let aead_alg = r.u16("aead_alg")?;
    check_alg(&r, aead_alg)?;
    let nonce_len = r.u8("nonce_len")? as usize;
    if nonce_len != NONCE_LEN {
        return r.fail(format!("nonce must be {NONCE_LEN} bytes, got {nonce_len}"));
    }
    let nonce = r.take(nonce_len, "nonce")?.to_vec();
    let aad_len = r.u32("aad_len")? as usize;
    let aad = r.take(aad_len, "aad")?.to_vec();
    let ct_len = r.u32("ct_len")? as usize;
    if ct_len != REV_LEN + TAG_LEN {
        return r.fail(format!(
            "ct must be {} bytes, got {ct_len}",
            REV_LEN + TAG_LEN
        ));
    }
    let ct = r.take(ct_len, "ct")?.to_vec();
    r.end()?;
    Ok(BackupArtifact {
        version,
        salt_pw,
        params_pw,
        aead_alg,
        nonce,
        aad,
        ct,
    })
}

/// Mock device-bound PRF: HMAC-SHA-256 under a device-held key.
pub struct DevicePrf {
    device_id: String,
    prf_key: SecretBytes<32>,
}

impl DevicePrf {
    pub fn new(device_id: impl Into<String>, prf_key: [u8; 32]) -> Self {
        Self {
            device_id: device_id.into(),
            prf_key: SecretBytes::new(prf_key),
        }
    }

    pub fn generate(
        device_id: impl Into<String>,
        entropy: &mut impl EntropySource,
    ) -> Result<Self> {
        let mut key = SecretBytes::zeroed();
        entropy.fill(key.expose_mut())?;
        Ok(Self {
            device_id: device_id.into(),
            prf_key: key,
        })
    }

    pub fn device_id(&self) -> &str {
        &self.device_id
    }

    /// PRF output, typed so it can only feed the local sealing key.
    pub fn evaluate(&self, label: &str) -> DeviceRoot {
        let mut mac = <Hmac<Sha256> as Mac>::new_from_slice(self.prf_key.expose())
            .expect("HMAC accepts any key");
        mac.update(label.as_bytes());
        RootKey::from_secret(SecretBytes::new(mac.finalize().into_bytes().into()))
    }
}

impl fmt::Debug for DevicePrf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DevicePrf")
            .field("device_id", &self.device_id)
            .finish_non_exhaustive()
    }
}

/// Device-local artifact sealed under a PRF-derived key. The label is bound
/// as associated data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalArtifact {
    pub version: u16,
    pub label: String,
    pub aead_alg: u16,
    pub nonce: Vec<u8>,
    pub ct: Vec<u8>,
}

pub fn seal_local(
    rev: &RootEntityValue,
    prf: &DevicePrf,
    label: &str,
    entropy: &mut impl EntropySource,
) -> Result<LocalArtifact> {
    let mut nonce = vec![0u8; NONCE_LEN];
    entropy.fill(&mut nonce)?;
    let k_local: LocalSealKey = prf.evaluate(label).derive();
    let ct = aead_seal(k_local.expose(), &nonce, label.as_bytes(), rev.expose());
    Ok(LocalArtifact {
        version: FORMAT_VERSION,
        label: label.to_owned(),
        aead_alg: AEAD_XCHACHA20POLY1305,
        nonce,
        ct,
    })
}

pub fn open_local(art: &LocalArtifact, prf: &DevicePrf) -> Result<RootEntityValue> {
    let k_local: LocalSealKey = prf.evaluate(&art.label).derive();
    aead_open(k_local.expose(), &art.nonce, art.label.as_bytes(), &art.ct)
        .map(RootEntityValue)
        .ok_or(Error::WrongDeviceOrTampered)
}

impl LocalArtifact {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(LOCAL_MAGIC);
        out.extend_from_slice(&self.version.to_be_bytes());
        out.extend_from_slice(&(self.label.len() as u32).to_be_bytes());
        out.extend_from_slice(self.label.as_bytes());
        out.extend_from_slice(&self.aead_alg.to_be_bytes());
        out.push(self.nonce.len() as u8);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&(self.ct.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.ct);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8, "magic")? != LOCAL_MAGIC {
            r.pos = 0;
            return r.fail("bad magic");
        }
        let version = r.u16("version")?;
        if version != FORMAT_VERSION {
            return r.fail(format!("unsupported version {version}"));
        }
        let label_len = r.u32("label_len")? as usize;
        let label = std::str::from_utf8(r.take(label_len, "label")?)
            .map_err(|_| Error::MalformedArtifact {
                offset: 14,
                reason: "label is not UTF-8".into(),
            })?
            .to_owned();
        let aead_alg = r.u16("aead_alg")?;
        check_alg(&r, aead_alg)?;
        let nonce_len = r.u8("nonce_len")? as usize;
        if nonce_len != NONCE_LEN {
            return r.fail(format!("nonce must be {NONCE_LEN} bytes, got {nonce_len}"));
        }
        let nonce = r.take(nonce_len, "nonce")?.to_vec();
        let ct_len = r.u32("ct_len")? as usize;
        let ct = r.take(ct_len, "ct")?.to_vec();
        r.end()?;
        Ok(Self {
            version,
            label,
            aead_alg,
            nonce,
            ct,
        })
    }
}
