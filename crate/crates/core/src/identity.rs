//! Identifier normalization, discovery context, and keyed discovery IDs.

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use hmac::{Hmac, Mac};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::Sha256;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::framing::{frame, Framer, Unframer};
use crate::keyschedule::IndexKey;

pub const MAX_APP_ID_LEN: usize = 255;
pub const MAX_CONTRACT_ADDRESS_LEN: usize = 64;

/// Identifier after trimming, NFC and simple case folding.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NormalizedIdentifier(String);

impl NormalizedIdentifier {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

// Identifiers are personal data; keep them out of logs.
impl fmt::Debug for NormalizedIdentifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NormalizedIdentifier({} bytes)", self.0.len())
    }
}

/// Simple (single code point) case folding. Characters without a simple
/// mapping are kept; locale-specific rules are not applied.
fn simple_fold(c: char) -> char {
    // Lowercase code points that still fold to another code point.
    let special = match c {
        '\u{00B5}' => Some('\u{03BC}'),
        '\u{017F}' => Some('s'),
        '\u{0345}' | '\u{1FBE}' => Some('\u{03B9}'),
        '\u{03C2}' => Some('\u{03C3}'),
        '\u{03D0}' => Some('\u{03B2}'),
        '\u{03D1}' => Some('\u{03B8}'),
        '\u{03D5}' => Some('\u{03C6}'),
        '\u{03D6}' => Some('\u{03C0}'),
        '\u{03F0}' => Some('\u{03BA}'),
        '\u{03F1}' => Some('\u{03C1}'),
        '\u{03F5}' => Some('\u{03B5}'),
        '\u{1E9B}' => Some('\u{1E61}'),
        '\u{1C80}' => Some('\u{0432}'),
        '\u{1C81}' => Some('\u{0434}'),
        '\u{1C82}' => Some('\u{043E}'),
        '\u{1C83}' => Some('\u{0441}'),
        '\u{1C84}' | '\u{1C85}' => Some('\u{0442}'),
        '\u{1C86}' => Some('\u{044A}'),
        '\u{1C87}' => Some('\u{0463}'),
        '\u{1C88}' => Some('\u{A64B}'),
        // Cherokee folds to the uppercase block, so uppercase stays put.
        '\u{13A0}'..='\u{13F5}' => Some(c),
        '\u{13F8}'..='\u{13FD}' => char::from_u32(c as u32 - 8),
        '\u{AB70}'..='\u{ABBF}' => char::from_u32(c as u32 - 0xAB70 + 0x13A0),
        _ => None,
    };
    if let Some(f) = special {
        return f;
    }
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn normalize_once(s: &str) -> String {
    s.trim()
        .nfc()
        .map(simple_fold)
        .collect::<String>()
        .nfc()
        .collect()
}

/// Canonical identifier form: trim whitespace, NFC, simple case fold.
///
/// No provider-specific rewriting is done: plus tags and dots in email
/// local parts are kept as typed.
pub fn normalize(raw: &str) -> Result<NormalizedIdentifier> {
    let mut cur = normalize_once(raw);
    // Folding can expose new compositions; iterate to a fixed point.
    for _ in 0..4 {
        let next = normalize_once(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    if cur.is_empty() {
        return Err(Error::EmptyIdentifier);
    }
    Ok(NormalizedIdentifier(cur))
}

/// Public domain-separation context bound into every discovery ID.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscoveryContext {
    pub app_id: String,
    pub chain_id: u64,
    #[serde(with = "hex_bytes")]
    pub contract_address: Vec<u8>,
    pub version: u32,
}

impl DiscoveryContext {
    pub fn encode(&self) -> Result<Vec<u8>> {
        encode_context(self)
    }
}

pub fn encode_context(ctx: &DiscoveryContext) -> Result<Vec<u8>> {
    if ctx.app_id.len() > MAX_APP_ID_LEN {
        return Err(Error::FieldTooLong {
            field: "app_id",
            len: ctx.app_id.len(),
            max: MAX_APP_ID_LEN,
        });
    }
    if ctx.contract_address.len() > MAX_CONTRACT_ADDRESS_LEN {
        return Err(Error::FieldTooLong {
            field: "contract_address",
            len: ctx.contract_address.len(),
            max: MAX_CONTRACT_ADDRESS_LEN,
        });
    }
    Ok(Framer::new()
        .field(ctx.app_id.as_bytes())
        .field(&ctx.chain_id.to_be_bytes())
        .field(&ctx.contract_address)
        .field(&ctx.version.to_be_bytes())
        .finish())
}

pub fn decode_context(bytes: &[u8]) -> Result<DiscoveryContext> {
    let mut u = Unframer::new(bytes);
    let app_id = std::str::from_utf8(u.next_field()?)
        .map_err(|_| Error::MalformedEncoding("app_id is not UTF-8".into()))?
        .to_owned();
    let chain_id = u64::from_be_bytes(u.next_fixed()?);
    let contract_address = u.next_field()?.to_vec();
    let version = u32::from_be_bytes(u.next_fixed()?);
    u.finish()?;
    let ctx = DiscoveryContext {
        app_id,
        chain_id,
        contract_address,
        version,
    };
    // Enforce the same bounds as encode so decode∘encode is the identity.
    encode_context(&ctx)?;
    Ok(ctx)
}

/// Keyed registry lookup key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscoveryId(pub [u8; 32]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdEncoding {
    Hex,
    Base64Url,
}

impl DiscoveryId {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn encode(&self, form: IdEncoding) -> String {
        encode_discovery_id(self, form)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for DiscoveryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiscoveryId({})", self.to_hex())
    }
}

impl fmt::Display for DiscoveryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for DiscoveryId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        decode_discovery_id(s)
    }
}

impl Serialize for DiscoveryId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for DiscoveryId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        decode_discovery_id(&s).map_err(serde::de::Error::custom)
    }
}

/// HMAC-SHA-256 under the index key over the framed context and identifier.
pub fn discovery_id(
    k_idx: &IndexKey,
    ctx: &DiscoveryContext,
    identifier: &NormalizedIdentifier,
) -> Result<DiscoveryId> {
    let ctx_bytes = encode_context(ctx)?;
    let mut mac = Hmac::<Sha256>::new_from_slice(k_idx.expose()).expect("HMAC accepts any key");
    mac.update(&frame(&[&ctx_bytes, identifier.as_bytes()]));
    Ok(DiscoveryId(mac.finalize().into_bytes().into()))
}

pub fn encode_discovery_id(id: &DiscoveryId, form: IdEncoding) -> String {
    match form {
        IdEncoding::Hex => hex::encode(id.0),
        IdEncoding::Base64Url => URL_SAFE_NO_PAD.encode(id.0),
    }
}

/// Accepts canonical lowercase hex (64 chars) or unpadded base64url (43).
pub fn decode_discovery_id(s: &str) -> Result<DiscoveryId> {
    let bytes = match s.len() {
        64 => {
            if !s
                .bytes()
                .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
            {
                return Err(Error::MalformedEncoding(
                    "discovery id hex must be lowercase [0-9a-f]".into(),
                ));
            }
            hex::decode(s).map_err(|e| Error::MalformedEncoding(e.to_string()))?
        }
        43 => URL_SAFE_NO_PAD
            .decode(s)
            .map_err(|e| Error::MalformedEncoding(e.to_string()))?,
        n => {
            return Err(Error::MalformedEncoding(format!(
                "discovery id must be 64 hex or 43 base64url chars, got {n}"
            )))
        }
    };
    let arr: [u8; 32] = bytes
        .try_into()
        .map_err(|_| Error::MalformedEncoding("discovery id must decode to 32 bytes".into()))?;
    // Non-canonical base64url (stray low bits in the final char) is refused.
    if s.len() == 43 && URL_SAFE_NO_PAD.encode(arr) != s {
        return Err(Error::MalformedEncoding("non-canonical base64url".into()));
    }
    Ok(DiscoveryId(arr))
}

pub(crate) mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn demo_ctx() -> DiscoveryContext {
        DiscoveryContext {
            app_id: "vadar-demo".into(),
            chain_id: 10,
            contract_address: vec![0xAA; 20],
            version: 1,
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize("  Alice@Example.COM ").unwrap().as_str(),
            "alice@example.com"
        );
        assert_eq!(
            normalize("alice@example.com").unwrap().as_str(),
            "alice@example.com"
        );
        assert!(matches!(
            normalize(" \t\u{3000} "),
            Err(Error::EmptyIdentifier)
        ));
        assert!(matches!(normalize(""), Err(Error::EmptyIdentifier)));
    }

    #[test]
    fn normalize_composes_nfd() {
        let nfd = normalize("Cafe\u{0301}@ex.com").unwrap();
        let nfc = normalize("caf\u{00E9}@ex.com").unwrap();
        assert_eq!(nfd, nfc);
        assert_eq!(nfd.as_bytes(), b"caf\xc3\xa9@ex.com");
    }

    #[test]
    fn normalize_keeps_provider_semantics() {
        assert_eq!(
            normalize("a.b+tag@gmail.com").unwrap().as_str(),
            "a.b+tag@gmail.com"
        );
    }

    #[test]
    fn simple_fold_not_full_fold() {
        // Full folding would turn ß into "ss"; simple folding keeps it.
        assert_eq!(normalize("STRAßE").unwrap().as_str(), "straße");
        assert_eq!(normalize("ΟΔΟΣ").unwrap().as_str(), "οδοσ");
        assert_eq!(normalize("οδος").unwrap().as_str(), "οδοσ");
        // No locale rules: dotless/dotted i stay as the code points say.
        assert_eq!(normalize("I").unwrap().as_str(), "i");
    }

    #[test]
    fn context_injective_in_chain_id() {
        let a = demo_ctx();
        let mut b = demo_ctx();
        b.chain_id = 11;
        assert_ne!(encode_context(&a).unwrap(), encode_context(&b).unwrap());
    }

    #[test]
    fn context_bounds() {
        let mut c = demo_ctx();
        c.contract_address = vec![0; 65];
        assert!(matches!(
            encode_context(&c),
            Err(Error::FieldTooLong {
                field: "contract_address",
                ..
            })
        ));
        let mut c = demo_ctx();
        c.app_id = "x".repeat(256);
        assert!(matches!(
            encode_context(&c),
            Err(Error::FieldTooLong {
                field: "app_id",
                ..
            })
        ));
    }

    #[test]
    fn discovery_id_encodings() {
        let zero = DiscoveryId([0; 32]);
        assert_eq!(zero.encode(IdEncoding::Hex), "0".repeat(64));
        assert_eq!(zero.encode(IdEncoding::Base64Url).len(), 43);
        let mixed = "AB".to_string() + &"0".repeat(62);
        assert!(matches!(
            decode_discovery_id(&mixed),
            Err(Error::MalformedEncoding(_))
        ));
        assert!(decode_discovery_id("abc").is_err());
        assert!(decode_discovery_id(&"g".repeat(64)).is_err());
        assert!(decode_discovery_id(&"*".repeat(43)).is_err());
    }

    #[test]
    fn discovery_id_depends_on_key_and_context() {
        let id = normalize("alice@example.com").unwrap();
        let k1 = IndexKey::from_bytes([1; 32]);
        let k2 = IndexKey::from_bytes([2; 32]);
        let ctx = demo_ctx();
        let a = discovery_id(&k1, &ctx, &id).unwrap();
        assert_eq!(a, discovery_id(&k1, &ctx, &id).unwrap());
        assert_ne!(a, discovery_id(&k2, &ctx, &id).unwrap());
        let mut bumped = demo_ctx();
        bumped.version = 2;
        assert_ne!(a, discovery_id(&k1, &bumped, &id).unwrap());
    }

    #[test]
    fn debug_hides_identifier() {
        let id = normalize("alice@example.com").unwrap();
        assert!(!format!("{id:?}").contains("alice"));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC{0,24}") {
            if let Ok(n) = normalize(&s) {
                let again = normalize(n.as_str()).unwrap();
                prop_assert_eq!(again, n);
            }
        }

        #[test]
        fn normalized_has_no_simple_uppercase(s in "\\PC{1,24}") {
            if let Ok(n) = normalize(&s) {
                prop_assert!(n.as_str().chars().all(|c| simple_fold(c) == c));
                prop_assert_eq!(n.as_str().trim(), n.as_str());
            }
        }

        #[test]
        fn context_round_trip(app in "[a-z0-9-]{0,40}", chain in any::<u64>(),
                              addr in proptest::collection::vec(any::<u8>(), 0..=64),
                              ver in any::<u32>()) {
            let ctx = DiscoveryContext { app_id: app, chain_id: chain, contract_address: addr, version: ver };
            let bytes = encode_context(&ctx).unwrap();
            let back = decode_context(&bytes).unwrap();
            prop_assert_eq!(encode_context(&back).unwrap(), bytes);
            prop_assert_eq!(back, ctx);
        }

        #[test]
        fn discovery_id_round_trip(bytes in any::<[u8; 32]>()) {
            let id = DiscoveryId(bytes);
            for form in [IdEncoding::Hex, IdEncoding::Base64Url] {
                prop_assert_eq!(decode_discovery_id(&id.encode(form)).unwrap(), id);
            }
        }
    }
}
