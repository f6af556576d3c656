//! Shared fixtures for the benches.

use std::sync::Arc;

use vadar_core::flows::{FlowConfig, OwnerKeyModel};
use vadar_core::registry::{CanonicalBinding, Registry, RegistryIdentity};
use vadar_core::storage::MemoryStore;
use vadar_core::Passphrase;

pub const IDENTIFIER: &str = "bench@example.com";

pub fn identity() -> RegistryIdentity {
    RegistryIdentity {
        app_id: "vadar-bench".into(),
        chain_id: 1,
        contract_address: vec![0xBE; 20],
    }
}

pub fn passphrase() -> Passphrase {
    Passphrase::new("bench passphrase").expect("non-empty")
}

/// Dev profile, passphrase-derived owner key, one in-memory store.
pub fn flow_config() -> FlowConfig {
    let binding = CanonicalBinding::new(&identity(), "dev");
    FlowConfig::new(
        binding,
        OwnerKeyModel::PassphraseDerived,
        vec![Arc::new(MemoryStore::new("bench"))],
    )
    .expect("dev profile is valid")
}

pub fn registry() -> Registry {
    Registry::new(identity())
}
