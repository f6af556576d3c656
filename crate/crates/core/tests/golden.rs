//! Fixed vectors produced by `tests/oracle/gen_vectors.py`, an independent
//! composition over Python's hashlib, `cryptography` and libsodium.

use vadar_core::artifact::{commit, open_backup, seal_backup, FixedEntropy, RootEntityValue};
use vadar_core::framing::frame;
use vadar_core::identity::{discovery_id, encode_context, normalize, DiscoveryContext};
use vadar_core::keyschedule::*;
use vadar_core::registry::{option_a_tag, verify_option_a, AuthMessage, OwnerSigningKey};
use vadar_core::{BackupArtifact, Commitment, ContentId, DevicePrf, DiscoveryId};

const LOOKUP_SALT_ALICE: &str = "741dd7dfc5f319f089998e31a5cf1d7b82accb2fa5b01cdf7bc4d962c52efeea";
const LOOKUP_SALT_BOB: &str = "ab67015b9cdeb596c725e8199ab1fcf6882847bfa840ca79bb446c8af7aabdb2";
const LOOKUP_ROOT_DEV: &str = "ebb75a91ad8d56171643e19b2ef08c6b3e91c80a0656eda608ffef34997dd766";
const SEAL_ROOT_DEV: &str = "1adefc53e6523ccdb48917b8c3788eeccdd8f4ac0d92827f7a6b646b071d723c";
const HKDF_INDEX: &str = "93a894779e10b0358af8e49b1de51b1a2c2d717485ff1e74bc8690df907463f2";
const HKDF_REGISTRY_AUTH: &str = "a052d932450cd6fb5f44e3989bd9ddd6158cf1d415db607c9d3a4187045a49f2";
const HKDF_SEAL: &str = "f79401c247b336124e181230d047a144583483fead1b757ac053f55cc26b8540";
const HKDF_LOCAL_SEAL: &str = "e4e2dace98739a78164d9224428dcc203b44e37c66c60471cc7e709d59ab842f";
const DEMO_CONTEXT: &str = "0000000a76616461722d64656d6f00000008000000000000000a00000014aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa0000000400000001";
const DISCOVERY_ID_DEMO: &str = "c7e18f75fe4dc5b15761d7b9973652b782636d81b4284add1e449b56b16c5676";
const AUTH_MESSAGE: &str = "000000201111111111111111111111111111111111111111111111111111111111111111000000202222222222222222222222222222222222222222222222222222222222222222000000080000000000000001000000203333333333333333333333333333333333333333333333333333333333333333";
const OPTION_A_TAG: &str = "b95c0886a57379fcfbbb92ce97b1347207d0c7af2357d0dda127ba50725e5765";
const SA2_GOLDEN: &str = "56414441525341320001070707070707070707070707070707070000200000000001000000010001180707070707070707070707070707070707070707070707070000003a0000000a76616461722d64656d6f00000008000000000000000a00000014aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa000000040000000100000030bff6ecdcc7c97e012ccc15709664becb18dcaba5602fbe9b1636cbdec57ce6ab313ece22425b79f3fc594fc56963309f";
const SA2_GOLDEN_COMMIT: &str = "5d958baf892e1a5a61ad9a299db1951af10513cd1a0f06a797d35c0192fae539";
const OWNER_PK_DERIVED: &str = "c48bef6110c07df46b76cc281015f140d954b776170c29e6869a9c80b0acfba2";
const LOCAL_SEAL_KEY: &str = "a1bfc225482a5800f4c895520ca5553f02dad5caf0d1916ab526c821d9cd11c4";

const PASS: &str = "test-passphrase";
const ALICE: &str = "alice@example.com";

macro_rules! run_each {
    ($($name:ident),* $(,)?) => {
        mod run {
            $(#[test]
            fn $name() {
                super::$name()
            })*
        }
    };
}

run_each!(
    lookup_salts,
    argon2id_dev_roots,
    hkdf_domain_keys,
    context_and_discovery_id,
    framing_and_option_a,
    sa2_bytes_and_commitment,
    derived_owner_key,
    device_local_seal_key,
    nfd_input_normalizes_to_nfc,
    empty_input_commitment,
);

fn h(s: &str) -> Vec<u8> {
    hex::decode(s).unwrap()
}

fn h32(s: &str) -> [u8; 32] {
    h(s).try_into().unwrap()
}

fn demo_context() -> DiscoveryContext {
    DiscoveryContext {
        app_id: "vadar-demo".into(),
        chain_id: 10,
        contract_address: vec![0xAA; 20],
        version: 1,
    }
}

fn pass() -> Passphrase {
    Passphrase::new(PASS).unwrap()
}

pub fn lookup_salts() {
    let alice = derive_lookup_salt(&normalize(ALICE).unwrap());
    assert_eq!(hex::encode(alice.0), LOOKUP_SALT_ALICE);
    let bob = derive_lookup_salt(&normalize("Bob@Example.COM").unwrap());
    assert_eq!(hex::encode(bob.0), LOOKUP_SALT_BOB);
}

pub fn argon2id_dev_roots() {
    let dev = KdfProfile::dev();
    let salt = derive_lookup_salt(&normalize(ALICE).unwrap());
    let root = derive_lookup_root(&pass(), &salt, &dev.stage_a, Floor::Dev).unwrap();
    assert_eq!(hex::encode(root.expose()), LOOKUP_ROOT_DEV);
    let seal = derive_sealroot(&pass(), &[0x42; 16], &dev.stage_b, Floor::Dev).unwrap();
    assert_eq!(hex::encode(seal.expose()), SEAL_ROOT_DEV);
}

pub fn hkdf_domain_keys() {
    let root = [0x01; 32];
    let cases = [
        (Stage::LookupRoot, Domain::Index, HKDF_INDEX),
        (Stage::LookupRoot, Domain::RegistryAuth, HKDF_REGISTRY_AUTH),
        (Stage::SealRoot, Domain::Seal, HKDF_SEAL),
        (Stage::DeviceRoot, Domain::LocalSeal, HKDF_LOCAL_SEAL),
    ];
    for (stage, domain, want) in cases {
        let k = derive_domain_key(&AnyRootKey::new(stage, root), domain).unwrap();
        assert_eq!(hex::encode(k.expose()), want, "{domain:?}");
    }
    let all = expand_all_domains(&root);
    for (i, d) in Domain::ALL.iter().enumerate() {
        let k = derive_domain_key(
            &AnyRootKey::new(
                Stage::ALL.into_iter().find(|s| s.permits(*d)).unwrap(),
                root,
            ),
            *d,
        )
        .unwrap();
        assert_eq!(&all[i], k.expose());
    }
}

pub fn context_and_discovery_id() {
    let ctx = encode_context(&demo_context()).unwrap();
    assert_eq!(hex::encode(&ctx), DEMO_CONTEXT);
    let k_idx = IndexKey::from_bytes(h32(HKDF_INDEX));
    let did = discovery_id(&k_idx, &demo_context(), &normalize(ALICE).unwrap()).unwrap();
    assert_eq!(did.to_hex(), DISCOVERY_ID_DEMO);
    // Every surface spelling of the same identifier lands on the same id.
    let did2 = discovery_id(
        &k_idx,
        &demo_context(),
        &normalize("  ALICE@example.COM\t").unwrap(),
    )
    .unwrap();
    assert_eq!(did, did2);
}

pub fn framing_and_option_a() {
    let msg = AuthMessage::new(
        DiscoveryId([0x11; 32]),
        ContentId([0x22; 32]),
        1,
        Commitment([0x33; 32]),
    );
    assert_eq!(hex::encode(msg.encode()), AUTH_MESSAGE);
    assert_eq!(
        msg.encode(),
        frame(&[&[0x11; 32], &[0x22; 32], &1u64.to_be_bytes(), &[0x33; 32]])
    );
    let k_reg = RegistryAuthKey::from_bytes(h32(HKDF_REGISTRY_AUTH));
    assert_eq!(hex::encode(option_a_tag(&k_reg, &msg)), OPTION_A_TAG);
    assert!(verify_option_a(&k_reg, &msg, &h(OPTION_A_TAG)));
}

pub fn sa2_bytes_and_commitment() {
    let rev = RootEntityValue::new([0x5A; 32]);
    let aad = encode_context(&demo_context()).unwrap();
    let art = seal_backup(
        &rev,
        &pass(),
        &KdfProfile::dev().stage_b,
        &aad,
        Floor::Dev,
        &mut FixedEntropy(7),
    )
    .unwrap();
    let bytes = art.encode();
    assert_eq!(hex::encode(&bytes), SA2_GOLDEN);
    assert_eq!(commit(&bytes).to_hex(), SA2_GOLDEN_COMMIT);
    assert_eq!(art.commitment().to_hex(), SA2_GOLDEN_COMMIT);

    let golden = h(SA2_GOLDEN);
    assert_eq!(BackupArtifact::decode(&golden).unwrap(), art);
    assert_eq!(open_backup(&golden, &pass()).unwrap().expose(), &[0x5A; 32]);
}

pub fn derived_owner_key() {
    let salt = derive_lookup_salt(&normalize(ALICE).unwrap());
    let root = derive_lookup_root(&pass(), &salt, &KdfProfile::dev().stage_a, Floor::Dev).unwrap();
    let key = OwnerSigningKey::from_lookup_root(&root, INFO_OWNER_SEED);
    assert_eq!(key.public().to_hex(), OWNER_PK_DERIVED);
}

pub fn device_local_seal_key() {
    let prf = DevicePrf::new("device-1", [0x09; 32]);
    let k: LocalSealKey = prf.evaluate("vadar-demo/user-1").derive();
    assert_eq!(hex::encode(k.expose()), LOCAL_SEAL_KEY);
}

pub fn nfd_input_normalizes_to_nfc() {
    assert_eq!(
        normalize("Cafe\u{301}@ex.com").unwrap().as_bytes(),
        b"caf\xc3\xa9@ex.com"
    );
}

pub fn empty_input_commitment() {
    assert_eq!(
        commit(b"").to_hex(),
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    );
}
