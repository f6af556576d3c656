use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::rngs::OsRng;
use serde::Serialize;

use vadar_core::flows::{unlock, FlowConfig, KeyStore, OwnerKeyModel};
use vadar_core::games::{
    run_enum_game, run_map_derived_key_guessing, run_map_game, run_roll_game, EnumParams,
    EnumStrategy, GameReport, MapParams, RollParams,
};
use vadar_core::identity::decode_discovery_id;
use vadar_core::registry::{
    write_private, CanonicalBinding, RecordState, Registry, RegistryIdentity, RegistryRecord,
};
use vadar_core::storage::{FileStore, SharedStore};
use vadar_core::{DiscoveryId, KdfProfile, Passphrase, RootEntityValue};

use crate::config::{CliConfig, KeyModel, Overrides, CONFIG_FILE};
use crate::passphrase::{self, ENV_NEW_PASSPHRASE, ENV_PASSPHRASE};
use crate::Failure;

pub struct Ctx {
    pub home: PathBuf,
    pub overrides: Overrides,
    pub insecure_env: bool,
}

struct Env {
    cfg: CliConfig,
    flow: FlowConfig,
    registry: Registry,
}

impl Ctx {
    fn env(&self) -> Result<Env, Failure> {
        let cfg = CliConfig::load(&self.home, &self.overrides)?;
        let binding = cfg.binding()?;
        let registry = Registry::load(&cfg.snapshot).map_err(|e| match e {
            vadar_core::Error::Io(io) => Failure::availability(format!(
                "registry snapshot {} unreachable: {io}",
                cfg.snapshot.display()
            )),
            other => Failure::from(other),
        })?;
        let mut backends: Vec<SharedStore> = Vec::new();
        for dir in std::iter::once(&cfg.store_dir).chain(&cfg.replica_dirs) {
            let store = FileStore::open(dir).map_err(|e| {
                Failure::availability(format!("store {} unavailable: {e}", dir.display()))
            })?;
            backends.push(Arc::new(store));
        }
        let model = match cfg.owner_key_model {
            KeyModel::Random => OwnerKeyModel::RandomKey(Arc::new(KeyStore::dir(&cfg.key_dir)?)),
            KeyModel::Derived => OwnerKeyModel::PassphraseDerived,
        };
        let mut flow = FlowConfig::new(binding, model, backends)?;
        flow.profile = KdfProfile::by_name(&cfg.profile)
            .ok_or_else(|| Failure::config(format!("unknown kdf profile {}", cfg.profile)))?;
        flow.redirect_on_rotation = cfg.redirect_on_rotation;
        flow.check(&registry)?;
        Ok(Env {
            cfg,
            flow,
            registry,
        })
    }

    fn passphrase(&self, confirm: bool) -> Result<Passphrase, Failure> {
        passphrase::read(self.insecure_env, ENV_PASSPHRASE, "Passphrase: ", confirm)
    }
}

impl Env {
    fn save(&self) -> Result<(), Failure> {
        self.registry.save(&self.cfg.snapshot).map_err(|e| {
            Failure::availability(format!(
                "cannot write registry snapshot {}: {e}",
                self.cfg.snapshot.display()
            ))
        })
    }
}

fn print_rows(rows: &[(&str, String)]) {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = std::io::stdout().lock();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
}

fn read_rev(path: &Path) -> Result<RootEntityValue, Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::user(format!("cannot read {}: {e}", path.display())))?;
    if let Some(rev) = RootEntityValue::from_slice(&bytes) {
        return Ok(rev);
    }
    let text = String::from_utf8_lossy(&bytes);
    let mut raw = [0u8; 32];
    hex::decode_to_slice(text.trim(), &mut raw).map_err(|_| {
        Failure::user(format!(
            "{} must hold 32 raw bytes or 64 hex characters",
            path.display()
        ))
    })?;
    Ok(RootEntityValue::new(raw))
}

/// Length floor for passphrases that create entries. Recovery never checks
/// it, so raising the floor does not lock out existing backups.
fn check_strength(pass: &Passphrase, cfg: &CliConfig) -> Result<(), Failure> {
    let chars = String::from_utf8_lossy(pass.expose()).chars().count();
    if chars < cfg.min_passphrase_chars {
        return Err(Failure::user(format!(
            "passphrase has {chars} characters; this deployment requires at least {}",
            cfg.min_passphrase_chars
        )));
    }
    Ok(())
}

pub struct InitArgs {
    pub app_id: String,
    pub chain_id: u64,
    pub contract_address: String,
    pub profile: String,
    pub owner_key_model: KeyModel,
    pub redirect_on_rotation: bool,
    pub min_passphrase_chars: Option<usize>,
    pub force: bool,
}

pub fn init(ctx: &Ctx, a: InitArgs) -> Result<(), Failure> {
    let contract_address = hex::decode(a.contract_address.trim_start_matches("0x"))
        .map_err(|e| Failure::user(format!("contract address must be hex: {e}")))?;
    if KdfProfile::by_name(&a.profile).is_none() {
        return Err(Failure::user(format!(
            "unknown kdf profile {} (dev, mobile, desktop)",
            a.profile
        )));
    }
    std::fs::create_dir_all(&ctx.home)?;
    let cfg_path = ctx.home.join(CONFIG_FILE);
    if cfg_path.exists() && !a.force {
        return Err(Failure::user(format!(
            "{} exists; pass --force to replace it",
            cfg_path.display()
        )));
    }
    let cfg = CliConfig {
        profile: a.profile.clone(),
        owner_key_model: a.owner_key_model,
        redirect_on_rotation: a.redirect_on_rotation,
        min_passphrase_chars: a
            .min_passphrase_chars
            .unwrap_or(CliConfig::default().min_passphrase_chars),
        ..CliConfig::default()
    };
    std::fs::write(&cfg_path, vadar_core::canonical_json_pretty(&cfg) + "\n")?;
    let cfg = CliConfig::load(&ctx.home, &ctx.overrides)?;

    let identity = RegistryIdentity {
        app_id: a.app_id,
        chain_id: a.chain_id,
        contract_address,
    };
    let binding = CanonicalBinding::new(&identity, &a.profile);
    // Validates field lengths.
    binding.context().encode()?;
    if let Some(dir) = cfg.binding.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&cfg.binding, binding.to_json() + "\n")?;
    if !cfg.snapshot.exists() || a.force {
        if let Some(dir) = cfg.snapshot.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Registry::new(identity).save(&cfg.snapshot)?;
    }
    FileStore::open(&cfg.store_dir)?;
    print_rows(&[
        ("config", cfg_path.display().to_string()),
        ("binding", cfg.binding.display().to_string()),
        ("snapshot", cfg.snapshot.display().to_string()),
        ("store", cfg.store_dir.display().to_string()),
    ]);
    Ok(())
}

pub fn register(ctx: &Ctx, identifier: &str, rev_file: Option<&Path>) -> Result<(), Failure> {
    let env = ctx.env()?;
    let rev = match rev_file {
        Some(p) => read_rev(p)?,
        None => RootEntityValue::random(&mut OsRng)?,
    };
    let pass = ctx.passphrase(true)?;
    check_strength(&pass, &env.cfg)?;
    let mut session = unlock(identifier, &pass, &env.flow, &env.registry)?;
    let r = session.register(&rev, &env.flow, &env.registry, &mut OsRng)?;
    env.save()?;
    print_rows(&[
        ("did", r.did.to_hex()),
        ("cid", r.cid.to_hex()),
        ("ver", r.ver.to_string()),
        ("rev_fingerprint", rev.fingerprint().to_hex()),
    ]);
    Ok(())
}

pub fn recover(
    ctx: &Ctx,
    identifier: &str,
    out: Option<&Path>,
    verify_only: bool,
) -> Result<(), Failure> {
    let env = ctx.env()?;
    let pass = ctx.passphrase(false)?;
    let mut session = unlock(identifier, &pass, &env.flow, &env.registry)?;
    let outcome = session.recover(&env.flow, &env.registry)?;
    let mut rows = vec![
        ("ver", outcome.record_ver.to_string()),
        ("artifact_commit", outcome.artifact_commit.to_hex()),
    ];
    if let Some(d) = outcome.redirect_followed {
        rows.push(("redirect_followed", d.to_hex()));
    }
    if let Some(path) = out {
        write_private(path, outcome.rev.expose())
            .map_err(|e| Failure::user(format!("cannot write {}: {e}", path.display())))?;
        rows.push(("written", path.display().to_string()));
    }
    if verify_only || out.is_none() {
        rows.push(("rev_fingerprint", outcome.rev.fingerprint().to_hex()));
    }
    print_rows(&rows);
    Ok(())
}

pub fn update(ctx: &Ctx, identifier: &str, rev_file: Option<&Path>) -> Result<(), Failure> {
    let env = ctx.env()?;
    let pass = ctx.passphrase(false)?;
    let mut session = unlock(identifier, &pass, &env.flow, &env.registry)?;
    let rev = match rev_file {
        Some(p) => read_rev(p)?,
        None => session.recover(&env.flow, &env.registry)?.rev,
    };
    let r = session.update(&rev, &env.flow, &env.registry, &mut OsRng)?;
    env.save()?;
    print_rows(&[
        ("did", r.did.to_hex()),
        ("cid", r.cid.to_hex()),
        ("ver", r.ver.to_string()),
    ]);
    Ok(())
}

pub fn rotate(
    ctx: &Ctx,
    identifier: &str,
    rev_file: Option<&Path>,
    redirect: Option<bool>,
) -> Result<(), Failure> {
    let mut env = ctx.env()?;
    if let Some(r) = redirect {
        env.flow.redirect_on_rotation = r;
    }
    let old = ctx.passphrase(false)?;
    let new = passphrase::read(
        ctx.insecure_env,
        ENV_NEW_PASSPHRASE,
        "New passphrase: ",
        true,
    )?;
    if old == new {
        return Err(Failure::user(
            "new passphrase equals the current one; use `vadar update`",
        ));
    }
    check_strength(&new, &env.cfg)?;
    let mut current = unlock(identifier, &old, &env.flow, &env.registry)?;
    let rev = match rev_file {
        Some(p) => read_rev(p)?,
        None => current.recover(&env.flow, &env.registry)?.rev,
    };
    let mut next = unlock(identifier, &new, &env.flow, &env.registry)?;
    let old_did = current.did()?;
    let r = current.rotate(&mut next, &rev, &env.flow, &env.registry, &mut OsRng)?;
    env.save()?;
    print_rows(&[
        ("did", r.did.to_hex()),
        ("ver", r.ver.to_string()),
        ("retired", old_did.to_hex()),
        (
            "redirect",
            if env.flow.redirect_on_rotation {
                "yes"
            } else {
                "no"
            }
            .into(),
        ),
    ]);
    Ok(())
}

#[derive(Serialize)]
struct RecordView {
    did: DiscoveryId,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    cid_hex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    commit_hex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ver: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pk_owner_hex: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sig_alg: Option<u16>,
    #[serde(skip_serializing_if = "Option::is_none")]
    redirect: Option<DiscoveryId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    migrated_at: Option<u64>,
}

fn record_view(did: DiscoveryId, rec: Option<RegistryRecord>) -> RecordView {
    let Some(r) = rec else {
        return RecordView {
            did,
            status: "absent",
            cid_hex: None,
            commit_hex: None,
            ver: None,
            pk_owner_hex: None,
            sig_alg: None,
            redirect: None,
            migrated_at: None,
        };
    };
    let (status, redirect, migrated_at) = match r.state {
        RecordState::Active => ("active", None, None),
        RecordState::Tombstoned {
            redirect,
            migrated_at,
        } => ("tombstoned", redirect, Some(migrated_at)),
    };
    RecordView {
        did,
        status,
        cid_hex: Some(r.cid.to_hex()),
        commit_hex: Some(r.commit.to_hex()),
        ver: Some(r.ver),
        pk_owner_hex: Some(r.pk_owner.to_hex()),
        sig_alg: Some(r.pk_owner.sig_alg),
        redirect,
        migrated_at,
    }
}

pub fn inspect(ctx: &Ctx, did: Option<&str>, identifier: Option<&str>) -> Result<(), Failure> {
    let env = ctx.env()?;
    let did = match (did, identifier) {
        (Some(d), _) => decode_discovery_id(d)?,
        (None, Some(i)) => {
            // Computed locally; the identifier goes nowhere else.
            let pass = ctx.passphrase(false)?;
            unlock(i, &pass, &env.flow, &env.registry)?.did()?
        }
        (None, None) => return Err(Failure::user("pass --did or --identifier")),
    };
    let view = record_view(did, env.registry.lookup(&did));
    println!("{}", vadar_core::canonical_json_pretty(&view));
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GameKind {
    Enum,
    Map,
    Roll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EnumStrategyArg {
    Guesser,
    Bytes,
}

pub struct GameArgs {
    pub game: GameKind,
    pub trials: u64,
    pub mu: u32,
    pub guesses: u64,
    pub strategy: EnumStrategyArg,
    pub derived_owner_key: bool,
    pub seed: Option<u64>,
    pub json: bool,
}

pub fn games(a: GameArgs) -> Result<(), Failure> {
    if a.mu > 16 {
        return Err(Failure::user("--mu above 16 is impractical at desk scale"));
    }
    let report: GameReport = match a.game {
        GameKind::Enum => {
            let strategy = match a.strategy {
                EnumStrategyArg::Guesser => EnumStrategy::Guesser { k: a.guesses },
                EnumStrategyArg::Bytes => EnumStrategy::ByteDistinguisher,
            };
            let mut p = EnumParams::new(a.trials, a.mu, strategy);
            if let Some(s) = a.seed {
                p.seed = s;
            }
            run_enum_game(&p)
        }
        GameKind::Map if a.derived_owner_key => {
            run_map_derived_key_guessing(a.trials, a.mu, &KdfProfile::dev(), a.seed.unwrap_or(4))
        }
        GameKind::Map => {
            let mut p = MapParams::new(a.trials);
            if let Some(s) = a.seed {
                p.seed = s;
            }
            run_map_game(&p)
        }
        GameKind::Roll => {
            let mut p = RollParams::new(a.trials);
            if let Some(s) = a.seed {
                p.seed = s;
            }
            run_roll_game(&p)
        }
    };
    if a.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}
