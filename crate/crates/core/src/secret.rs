//! Zeroizing containers for key material, with a per-thread wipe audit.
//!
//! Every secret container registers itself on construction and reports a
//! wipe when it is dropped, after checking its buffer reads back as zero.
//! Tests use [`audit`] to confirm a flow left no live secrets behind.

use std::fmt;

use zeroize::Zeroize;

pub mod audit {
    use std::cell::Cell;

    thread_local! {
        static CREATED: Cell<u64> = const { Cell::new(0) };
        static WIPED: Cell<u64> = const { Cell::new(0) };
        static DIRTY: Cell<u64> = const { Cell::new(0) };
    }

    /// Counters observed on the current thread.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
    pub struct Snapshot {
        pub created: u64,
        pub wiped: u64,
        /// Buffers that did not read back as all-zero after zeroize.
        pub dirty: u64,
    }

    impl Snapshot {
        /// Secrets created since `earlier` that are still alive.
        pub fn live_since(&self, earlier: &Snapshot) -> i64 {
            (self.created - earlier.created) as i64 - (self.wiped - earlier.wiped) as i64
        }
    }

    pub fn snapshot() -> Snapshot {
        Snapshot {
            created: CREATED.with(Cell::get),
            wiped: WIPED.with(Cell::get),
            dirty: DIRTY.with(Cell::get),
        }
    }

    pub(crate) fn created() {
        CREATED.with(|c| c.set(c.get() + 1));
    }

    pub(crate) fn wiped(clean: bool) {
        WIPED.with(|c| c.set(c.get() + 1));
        if !clean {
            DIRTY.with(|c| c.set(c.get() + 1));
        }
    }
}

/// Fixed-size secret, wiped on drop.
pub struct SecretBytes<const N: usize> {
    bytes: Box<[u8; N]>,
}

impl<const N: usize> SecretBytes<N> {
    pub fn new(bytes: [u8; N]) -> Self {
        let mut bytes = bytes;
        let out = Self::from_slice_unchecked(&bytes);
        bytes.zeroize();
        out
    }

    /// Zero-filled buffer to be written in place.
    pub fn zeroed() -> Self {
        audit::created();
        Self {
            bytes: Box::new([0u8; N]),
        }
    }

    fn from_slice_unchecked(src: &[u8]) -> Self {
        let mut s = Self::zeroed();
        s.bytes.copy_from_slice(src);
        s
    }

    pub fn from_slice(src: &[u8]) -> Option<Self> {
        (src.len() == N).then(|| Self::from_slice_unchecked(src))
    }

    pub fn expose(&self) -> &[u8; N] {
        &self.bytes
    }

    pub fn expose_mut(&mut self) -> &mut [u8; N] {
        &mut self.bytes
    }
}

impl<const N: usize> Clone for SecretBytes<N> {
    fn clone(&self) -> Self {
        Self::from_slice_unchecked(&self.bytes[..])
    }
}

impl<const N: usize> Drop for SecretBytes<N> {
    fn drop(&mut self) {
        self.bytes.zeroize();
        let clean = self.bytes.iter().all(|&b| b == 0);
        audit::wiped(clean);
    }
}

impl<const N: usize> PartialEq for SecretBytes<N> {
    fn eq(&self, other: &Self) -> bool {
        use subtle::ConstantTimeEq;
        self.bytes[..].ct_eq(&other.bytes[..]).into()
    }
}

impl<const N: usize> Eq for SecretBytes<N> {}

impl<const N: usize> fmt::Debug for SecretBytes<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretBytes<{N}>(..)")
    }
}

/// Variable-length secret, wiped on drop.
pub struct SecretVec {
    bytes: Vec<u8>,
}

impl SecretVec {
    pub fn new(bytes: Vec<u8>) -> Self {
        audit::created();
        Self { bytes }
    }

    pub fn expose(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

impl Clone for SecretVec {
    fn clone(&self) -> Self {
        Self::new(self.bytes.clone())
    }
}

impl Drop for SecretVec {
    fn drop(&mut self) {
        // Zeroize wipes the full capacity, then truncates.
        let spare = self.bytes.capacity();
        self.bytes.zeroize();
        let clean = self.bytes.is_empty() && spare == self.bytes.capacity();
        audit::wiped(clean);
    }
}

impl fmt::Debug for SecretVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretVec({} bytes)", self.bytes.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drop_is_audited() {
        let before = audit::snapshot();
        {
            let a = SecretBytes::new([7u8; 32]);
            let _b = a.clone();
            let _v = SecretVec::new(b"hunter2".to_vec());
            assert_eq!(audit::snapshot().live_since(&before), 3);
        }
        let after = audit::snapshot();
        assert_eq!(after.live_since(&before), 0);
        assert_eq!(after.dirty, before.dirty);
    }

    #[test]
    fn debug_redacts() {
        let s = SecretBytes::new([0x41u8; 4]);
        assert!(!format!("{s:?}").contains("65"));
        let v = SecretVec::new(b"hunter2".to_vec());
        assert!(!format!("{v:?}").contains("hunter2"));
    }
}
