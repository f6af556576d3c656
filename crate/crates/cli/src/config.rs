use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use vadar_core::registry::CanonicalBinding;

use crate::Failure;

pub const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum KeyModel {
    /// Random owner key kept in the key directory.
    Random,
    /// Owner key derived from the passphrase.
    Derived,
}

/// Persisted settings. Relative paths resolve against the home directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliConfig {
    pub binding: PathBuf,
    pub store_dir: PathBuf,
    /// Further store directories. Writes go to all; reads take the first
    /// blob whose hash matches.
    #[serde(default)]
    pub replica_dirs: Vec<PathBuf>,
    pub snapshot: PathBuf,
    pub profile: String,
    pub owner_key_model: KeyModel,
    pub key_dir: PathBuf,
    pub redirect_on_rotation: bool,
    /// Shortest passphrase, in characters, accepted for a new entry.
    #[serde(default = "default_min_passphrase_chars")]
    pub min_passphrase_chars: usize,
}

fn default_min_passphrase_chars() -> usize {
    10
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            binding: "binding.json".into(),
            store_dir: "store".into(),
            replica_dirs: Vec::new(),
            snapshot: "registry.json".into(),
            profile: "dev".into(),
            owner_key_model: KeyModel::Random,
            key_dir: "keys".into(),
            redirect_on_rotation: false,
            min_passphrase_chars: default_min_passphrase_chars(),
        }
    }
}

#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub binding: Option<PathBuf>,
    pub store_dir: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub profile: Option<String>,
    pub owner_key_model: Option<KeyModel>,
    pub key_dir: Option<PathBuf>,
}

impl CliConfig {
    /// Reads `<home>/config.json` if present, then applies overrides and
    /// resolves relative paths.
    pub fn load(home: &Path, o: &Overrides) -> Result<Self, Failure> {
        let path = home.join(CONFIG_FILE);
        let mut cfg = if path.exists() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| {
                Failure::config(format!("{} is not a valid config: {e}", path.display()))
            })?
        } else {
            CliConfig::default()
        };
        if let Some(v) = &o.binding {
            cfg.binding = v.clone();
        }
        if let Some(v) = &o.store_dir {
            cfg.store_dir = v.clone();
        }
        if let Some(v) = &o.snapshot {
            cfg.snapshot = v.clone();
        }
        if let Some(v) = &o.profile {
            cfg.profile = v.clone();
        }
        if let Some(v) = o.owner_key_model {
            cfg.owner_key_model = v;
        }
        if let Some(v) = &o.key_dir {
            cfg.key_dir = v.clone();
        }
        for p in [
            &mut cfg.binding,
            &mut cfg.store_dir,
            &mut cfg.snapshot,
            &mut cfg.key_dir,
        ]
        .into_iter()
        .chain(cfg.replica_dirs.iter_mut())
        {
            if p.is_relative() {
                *p = home.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fails closed: no binding, no registry access.
    pub fn binding(&self) -> Result<CanonicalBinding, Failure> {
        let text = std::fs::read_to_string(&self.binding).map_err(|e| {
            Failure::config(format!(
                "canonical binding {} unavailable ({e}); run `vadar init` or pass --binding",
                self.binding.display()
            ))
        })?;
        CanonicalBinding::from_json(&text).map_err(Failure::from)
    }
}
