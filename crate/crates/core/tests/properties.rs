use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vadar_core::keyschedule::{derive_domain_key, expand_all_domains, AnyRootKey, Domain, Stage};
use vadar_core::registry::{
    AuthMessage, OwnerSigningKey, Registry, RegistryIdentity, RegistryRecord,
};
use vadar_core::{Commitment, ContentId, DiscoveryId, Error};

#[derive(Debug, Clone)]
enum Op {
    Update { delta: i64, by_owner: bool },
    Replay { index: usize },
    Tombstone { by_owner: bool, redirect: bool },
    Overwrite,
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => (-3i64..=4, prop::bool::weighted(0.8)).prop_map(|(delta, by_owner)| Op::Update { delta, by_owner }),
        2 => any::<usize>().prop_map(|index| Op::Replay { index }),
        1 => (prop::bool::weighted(0.5), any::<bool>()).prop_map(|(by_owner, redirect)| Op::Tombstone { by_owner, redirect }),
        1 => Just(Op::Overwrite),
    ]
}

fn identity() -> RegistryIdentity {
    RegistryIdentity {
        app_id: "props".into(),
        chain_id: 1,
        contract_address: vec![1; 20],
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn versions_strictly_increase(seed in any::<u64>(), ops in prop::collection::vec(op(), 1..40)) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let reg = Registry::new(identity());
        let owner = OwnerSigningKey::generate(&mut rng);
        let other = OwnerSigningKey::generate(&mut rng);
        let did = DiscoveryId([9; 32]);
        reg.initialize(did, RegistryRecord::signed_initial(did, ContentId([0; 32]), Commitment([1; 32]), &owner)).unwrap();

        let mut accepted = vec![1u64];
        let mut history: Vec<(AuthMessage, Vec<u8>)> = Vec::new();
        for op in ops {
            let before = reg.lookup(&did).unwrap();
            let mut c = [0u8; 32];
            rng.fill_bytes(&mut c);
            let result = match op {
                Op::Update { delta, by_owner } => {
                    let ver = (before.ver as i64 + delta).max(0) as u64;
                    let msg = AuthMessage::new(did, ContentId(c), ver, Commitment(c));
                    let sig = if by_owner { owner.sign(&msg) } else { other.sign(&msg) };
                    let r = reg.update(&did, msg.cid, ver, msg.commit, &sig);
                    history.push((msg, sig));
                    r
                }
                Op::Replay { index } if !history.is_empty() => {
                    let (m, s) = &history[index % history.len()];
                    reg.update(&did, m.cid, m.ver, m.commit, s)
                }
                Op::Replay { .. } => continue,
                Op::Tombstone { by_owner, redirect } => {
                    let target = redirect.then_some(DiscoveryId(c));
                    let msg = AuthMessage::tombstone(did, before.ver + 1, target);
                    let sig = if by_owner { owner.sign(&msg) } else { other.sign(&msg) };
                    reg.tombstone(&did, target, &sig)
                }
                Op::Overwrite => reg.initialize(
                    did,
                    RegistryRecord::signed_initial(did, ContentId(c), Commitment(c), &other),
                ),
            };
            let after = reg.lookup(&did).unwrap();
            prop_assert_eq!(&after.pk_owner, &owner.public());
            match result {
                Ok(()) => {
                    prop_assert!(before.is_active());
                    prop_assert!(after.ver > before.ver);
                    accepted.push(after.ver);
                }
                Err(e) => {
                    prop_assert_eq!((after.cid, after.ver, after.commit, after.state.clone()),
                                    (before.cid, before.ver, before.commit, before.state.clone()));
                    if !before.is_active() {
                        prop_assert!(matches!(e, Error::Tombstoned | Error::AlreadyTombstoned | Error::SlotOccupied));
                    }
                }
            }
        }
        prop_assert!(accepted.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn domain_keys_pairwise_distinct_over_random_roots() {
    let mut rng = ChaCha20Rng::seed_from_u64(0xD0);
    for _ in 0..1000 {
        let mut root = [0u8; 32];
        rng.fill_bytes(&mut root);
        let keys = expand_all_domains(&root);
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(keys[i], keys[j]);
            }
        }
    }
}

#[test]
fn runtime_rejects_every_illegal_pair() {
    let mut illegal = 0;
    for stage in Stage::ALL {
        for domain in Domain::ALL {
            let r = derive_domain_key(&AnyRootKey::new(stage, [7; 32]), domain);
            if stage.permits(domain) {
                assert_eq!(r.unwrap().domain(), domain);
            } else {
                illegal += 1;
                assert!(matches!(r, Err(Error::IllegalStageDomainPair { .. })));
            }
        }
    }
    assert_eq!(illegal, 8);
}

/// Registry and storage only ever see discovery ids and content ids.
#[test]
fn registry_and_storage_never_take_raw_identifiers() {
    let src = concat!(env!("CARGO_MANIFEST_DIR"), "/src");
    for file in ["registry.rs", "storage.rs"] {
        let text = std::fs::read_to_string(format!("{src}/{file}")).unwrap();
        let code = text.split("#[cfg(test)]").next().unwrap();
        for needle in [
            "NormalizedIdentifier",
            "normalize(",
            "Passphrase",
            "identifier: &str",
        ] {
            assert!(!code.contains(needle), "{file} mentions {needle}");
        }
    }
}
