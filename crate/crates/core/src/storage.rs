//! Content-addressed blob storage.
//!
//! A [`ContentId`] is the raw SHA-256 of the blob. Honest backends verify
//! the hash before serving; adversarial backends exist for the security
//! games and do not. Callers fetching through [`get_any`] never see a blob
//! whose hash differs from the requested id.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::artifact::Commitment;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentId(pub [u8; 32]);

impl ContentId {
    pub fn of(blob: &[u8]) -> Self {
        Self(Sha256::digest(blob).into())
    }

    pub fn matches(&self, blob: &[u8]) -> bool {
        Self::of(blob) == *self
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|e| Error::MalformedEncoding(e.to_string()))?;
        Ok(Self(out))
    }
}

impl From<Commitment> for ContentId {
    fn from(c: Commitment) -> Self {
        Self(c.0)
    }
}

impl fmt::Debug for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentId({})", self.to_hex())
    }
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for ContentId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Self::from_hex(&String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    Honest,
    Tampering,
    Withholding,
}

pub trait BlobStore: Send + Sync {
    fn name(&self) -> &str;

    fn behavior(&self) -> Behavior {
        Behavior::Honest
    }

    /// Stores `blob` and returns its content id. Idempotent.
    fn put(&self, blob: &[u8]) -> Result<ContentId>;

    fn get(&self, cid: &ContentId) -> Result<Vec<u8>>;
}

pub type SharedStore = Arc<dyn BlobStore>;

/// In-process store.
#[derive(Default)]
pub struct MemoryStore {
    name: String,
    blobs: Mutex<HashMap<ContentId, Vec<u8>>>,
}

impl MemoryStore {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            blobs: Mutex::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.blobs.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl BlobStore for MemoryStore {
    fn name(&self) -> &str {
        &self.name
    }

    fn put(&self, blob: &[u8]) -> Result<ContentId> {
        let cid = ContentId::of(blob);
        self.blobs
            .lock()
            .unwrap()
            .entry(cid)
            .or_insert_with(|| blob.to_vec());
        Ok(cid)
    }

    fn get(&self, cid: &ContentId) -> Result<Vec<u8>> {
        let blob = self
            .blobs
            .lock()
            .unwrap()
            .get(cid)
            .cloned()
            .ok_or(Error::NotFound)?;
        if !cid.matches(&blob) {
            return Err(Error::CorruptBlob(format!("{} blob {cid}", self.name)));
        }
        Ok(blob)
    }
}

/// One file per blob, named by the lowercase hex content id.
pub struct FileStore {
    name: String,
    root: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            name: format!("file:{}", root.display()),
            root,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_of(&self, cid: &ContentId) -> PathBuf {
        self.root.join(cid.to_hex())
    }
}

/// Writes `bytes` to `path` through a temp file in the same directory and an
/// atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".tmp-{}-{}-{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed),
        path.file_name().and_then(|n| n.to_str()).unwrap_or("blob")
    ));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

impl BlobStore for FileStore {
    fn name(&self) -> &str {
        &self.name
    }

    fn put(&self, blob: &[u8]) -> Result<ContentId> {
        let cid = ContentId::of(blob);
        let path = self.path_of(&cid);
        if !path.exists() {
            write_atomic(&path, blob)?;
        }
        Ok(cid)
    }

    fn get(&self, cid: &ContentId) -> Result<Vec<u8>> {
        let blob = match fs::read(self.path_of(cid)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(Error::NotFound),
            Err(e) => return Err(e.into()),
        };
        if !cid.matches(&blob) {
            return Err(Error::CorruptBlob(format!("{} blob {cid}", self.name)));
        }
        Ok(blob)
    }
}

/// Serves wrong bytes: a registered substitute if one exists for the
/// requested id, otherwise the real blob with one byte flipped.
pub struct TamperingStore {
    name: String,
    inner: SharedStore,
    substitutes: Mutex<HashMap<ContentId, Vec<u8>>>,
}

impl TamperingStore {
    pub fn new(name: impl Into<String>, inner: SharedStore) -> Self {
        Self {
            name: name.into(),
            inner,
            substitutes: Mutex::default(),
        }
    }

    pub fn substitute(&self, cid: ContentId, blob: Vec<u8>) {
        self.substitutes.lock().unwrap().insert(cid, blob);
    }
}

impl BlobStore for TamperingStore {
    fn name(&self) -> &str {
        &self.name
    }

    fn behavior(&self) -> Behavior {
        Behavior::Tampering
    }

    fn put(&self, blob: &[u8]) -> Result<ContentId> {
        self.inner.put(blob)
    }

    fn get(&self, cid: &ContentId) -> Result<Vec<u8>> {
        if let Some(sub) = self.substitutes.lock().unwrap().get(cid) {
            return Ok(sub.clone());
        }
        let mut blob = self.inner.get(cid)?;
        if let Some(last) = blob.last_mut() {
            *last ^= 0x01;
        } else {
            blob.push(0);
        }
        Ok(blob)
    }
}

/// Accepts uploads but never serves them.
pub struct WithholdingStore {
    name: String,
    inner: SharedStore,
}

impl WithholdingStore {
    pub fn new(name: impl Into<String>, inner: SharedStore) -> Self {
        Self {
            name: name.into(),
            inner,
        }
    }
}

impl BlobStore for WithholdingStore {
    fn name(&self) -> &str {
        &self.name
    }

    fn behavior(&self) -> Behavior {
        Behavior::Withholding
    }

    fn put(&self, blob: &[u8]) -> Result<ContentId> {
        self.inner.put(blob)
    }

    fn get(&self, _cid: &ContentId) -> Result<Vec<u8>> {
        Err(Error::BackendUnavailable(self.name.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchOutcome {
    Served,
    /// Returned bytes whose hash differs from the requested id.
    Mismatch,
    NotFound,
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchAttempt {
    pub backend: String,
    pub outcome: FetchOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchReport {
    pub attempts: Vec<FetchAttempt>,
}

impl FetchReport {
    pub fn mismatches(&self) -> usize {
        self.attempts
            .iter()
            .filter(|a| a.outcome == FetchOutcome::Mismatch)
            .count()
    }

    pub fn failures(&self) -> usize {
        self.attempts
            .iter()
            .filter(|a| a.outcome != FetchOutcome::Served)
            .count()
    }
}

impl fmt::Display for FetchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.attempts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}: {:?}", a.backend, a.outcome)?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct Fetched {
    pub blob: Vec<u8>,
    pub report: FetchReport,
}

/// Tries each backend in order and returns the first blob whose hash
/// matches `cid`.
pub fn get_any(cid: &ContentId, backends: &[SharedStore]) -> Result<Fetched> {
    let mut report = FetchReport::default();
    for b in backends {
        let outcome = match b.get(cid) {
            Ok(blob) if cid.matches(&blob) => {
                report.attempts.push(FetchAttempt {
                    backend: b.name().to_owned(),
                    outcome: FetchOutcome::Served,
                });
                return Ok(Fetched { blob, report });
            }
            Ok(_) | Err(Error::CorruptBlob(_)) => FetchOutcome::Mismatch,
            Err(Error::NotFound) => FetchOutcome::NotFound,
            Err(e) => FetchOutcome::Unavailable(e.to_string()),
        };
        report.attempts.push(FetchAttempt {
            backend: b.name().to_owned(),
            outcome,
        });
    }
    Err(Error::AllBackendsFailed(report))
}

/// Puts `blob` on every backend; the first error is kept per backend.
pub fn put_all(blob: &[u8], backends: &[SharedStore]) -> Result<ContentId> {
    let cid = ContentId::of(blob);
    let mut stored = 0;
    let mut last_err = None;
    for b in backends {
        match b.put(blob) {
            Ok(c) if c == cid => stored += 1,
            Ok(_) => {
                last_err = Some(Error::BackendUnavailable(format!(
                    "{}: wrong cid",
                    b.name()
                )))
            }
            Err(e) => last_err = Some(e),
        }
    }
    if stored == 0 {
        return Err(last_err.unwrap_or_else(|| Error::BackendUnavailable("no backends".into())));
    }
    Ok(cid)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplicaStatus {
    /// Backend already served a verified copy.
    Held,
    /// Copy uploaded and read back successfully.
    Stored,
    /// Upload accepted but the backend does not serve a verified copy.
    Unverified,
    Failed(String),
}

#[derive(Debug, Clone, Default)]
pub struct ReplicationReport {
    pub source: FetchReport,
    pub replicas: Vec<(String, ReplicaStatus)>,
}

impl ReplicationReport {
    pub fn verified_replicas(&self) -> usize {
        self.replicas
            .iter()
            .filter(|(_, s)| matches!(s, ReplicaStatus::Held | ReplicaStatus::Stored))
            .count()
    }
}

/// Copies the blob for `cid` from any backend that serves it onto every
/// backend, then reads each copy back.
pub fn replicate(cid: &ContentId, backends: &[SharedStore]) -> Result<ReplicationReport> {
    let Fetched { blob, report } = get_any(cid, backends)?;
    let mut out = ReplicationReport {
        source: report,
        replicas: Vec::new(),
    };
    for b in backends {
        let status = match b.get(cid) {
            Ok(existing) if cid.matches(&existing) => ReplicaStatus::Held,
            _ => match b.put(&blob) {
                Err(e) => ReplicaStatus::Failed(e.to_string()),
                Ok(_) => match b.get(cid) {
                    Ok(back) if cid.matches(&back) => ReplicaStatus::Stored,
                    _ => ReplicaStatus::Unverified,
                },
            },
        };
        out.replicas.push((b.name().to_owned(), status));
    }
    Ok(out)
}
