//! `vadar`: register, recover and rotate passphrase-sealed backups against a
//! file-backed registry and store.
//!
//! Exit codes: 0 success, 2 user error, 3 integrity failure, 4 storage or
//! registry unavailable, 5 configuration error.

mod commands;
mod config;
mod passphrase;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vadar_core::flows::FlowError;
use vadar_core::{Error, ErrorClass};

use commands::{Ctx, EnumStrategyArg, GameArgs, GameKind, InitArgs};
use config::{KeyModel, Overrides};

pub const EXIT_USER: u8 = 2;
pub const EXIT_INTEGRITY: u8 = 3;
pub const EXIT_AVAILABILITY: u8 = 4;
pub const EXIT_CONFIG: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn user(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_USER,
            message: m.into(),
        }
    }

    pub fn config(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: m.into(),
        }
    }

    pub fn availability(m: impl Into<String>) -> Self {
        Self {
            code: EXIT_AVAILABILITY,
            message: m.into(),
        }
    }
}

fn code_for(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::User => EXIT_USER,
        ErrorClass::Integrity => EXIT_INTEGRITY,
        ErrorClass::Availability => EXIT_AVAILABILITY,
        ErrorClass::Config => EXIT_CONFIG,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: code_for(&e),
            message: e.to_string(),
        }
    }
}

impl From<FlowError> for Failure {
    fn from(e: FlowError) -> Self {
        Self {
            code: code_for(&e.error),
            message: format!("{} (at step {:?})", e.error, e.step),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::from(Error::Io(e))
    }
}

#[derive(Parser)]
#[command(
    name = "vadar",
    version,
    about = "Passphrase-sealed wallet backup with keyed registry discovery"
)]
struct Cli {
    /// State directory holding config.json, the binding, snapshot, store and keys.
    #[arg(long, env = "VADAR_HOME", default_value = ".vadar", global = true)]
    home: PathBuf,
    /// Canonical binding file.
    #[arg(long, global = true)]
    binding: Option<PathBuf>,
    /// Blob store directory.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Registry snapshot file.
    #[arg(long, global = true)]
    snapshot: Option<PathBuf>,
    /// KDF profile: dev, mobile or desktop.
    #[arg(long, global = true)]
    profile: Option<String>,
    #[arg(long, value_enum, global = true)]
    owner_key_model: Option<KeyModel>,
    /// Directory for random owner keys.
    #[arg(long, global = true)]
    key_dir: Option<PathBuf>,
    /// Read passphrases from VADAR_PASSPHRASE / VADAR_NEW_PASSPHRASE.
    #[arg(long, global = true)]
    insecure_env: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct IdentifierArg {
    /// Account identifier, e.g. an email address. Never stored.
    #[arg(long)]
    identifier: String,
}

#[derive(Subcommand)]
enum Command {
    /// Create config, binding, empty registry snapshot and store.
    Init {
        #[arg(long)]
        app_id: String,
        #[arg(long)]
        chain_id: u64,
        /// Registry contract address, hex.
        #[arg(long)]
        contract_address: String,
        #[arg(long, default_value = "dev")]
        kdf_profile: String,
        #[arg(long, value_enum, default_value = "random")]
        key_model: KeyModel,
        /// Leave a redirect to the new entry on rotation.
        #[arg(long)]
        redirect: bool,
        /// Shortest passphrase accepted by register and rotate (default 10).
        #[arg(long)]
        min_passphrase_chars: Option<usize>,
        #[arg(long)]
        force: bool,
    },
    /// Seal a root secret and register it.
    Register {
        #[command(flatten)]
        id: IdentifierArg,
        /// Root secret to back up (32 raw bytes or hex). Random if omitted.
        #[arg(long)]
        rev_file: Option<PathBuf>,
    },
    /// Recover the root secret with identifier and passphrase.
    Recover {
        #[command(flatten)]
        id: IdentifierArg,
        /// Write the recovered secret here with owner-only permissions.
        #[arg(
            long,
            conflicts_with = "verify_only",
            required_unless_present = "verify_only"
        )]
        out: Option<PathBuf>,
        /// Print only the secret's fingerprint.
        #[arg(long)]
        verify_only: bool,
    },
    /// Re-seal under a fresh salt and bump the version (same passphrase).
    Update {
        #[command(flatten)]
        id: IdentifierArg,
        #[arg(long)]
        rev_file: Option<PathBuf>,
    },
    /// Move the backup to a new passphrase and retire the old entry.
    Rotate {
        #[command(flatten)]
        id: IdentifierArg,
        #[arg(long)]
        rev_file: Option<PathBuf>,
        #[arg(long, conflicts_with = "no_redirect")]
        redirect: bool,
        #[arg(long)]
        no_redirect: bool,
    },
    /// Show a registry record by discovery id, or by identifier plus passphrase.
    Inspect {
        #[arg(
            long,
            conflicts_with = "identifier",
            required_unless_present = "identifier"
        )]
        did: Option<String>,
        #[arg(long)]
        identifier: Option<String>,
    },
    /// Security games.
    Games {
        #[command(subcommand)]
        command: GamesCommand,
    },
}

#[derive(Subcommand)]
enum GamesCommand {
    Run {
        #[arg(value_enum)]
        game: GameKind,
        #[arg(long, default_value_t = 500)]
        trials: u64,
        /// Passphrase entropy in bits (word list of 2^mu).
        #[arg(long, default_value_t = 8)]
        mu: u32,
        /// Enumeration guess budget.
        #[arg(long, default_value_t = 64)]
        guesses: u64,
        #[arg(long, value_enum, default_value = "guesser")]
        strategy: EnumStrategyArg,
        /// Mapping game against a passphrase-derived owner key.
        #[arg(long)]
        derived_owner_key: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx {
        home: cli.home,
        overrides: Overrides {
            binding: cli.binding,
            store_dir: cli.store,
            snapshot: cli.snapshot,
            profile: cli.profile,
            owner_key_model: cli.owner_key_model,
            key_dir: cli.key_dir,
        },
        insecure_env: cli.insecure_env,
    };
    match cli.command {
        Command::Init {
            app_id,
            chain_id,
            contract_address,
            kdf_profile,
            key_model,
            redirect,
            min_passphrase_chars,
            force,
        } => commands::init(
            &ctx,
            InitArgs {
                app_id,
                chain_id,
                contract_address,
                profile: kdf_profile,
                owner_key_model: key_model,
                redirect_on_rotation: redirect,
                min_passphrase_chars,
                force,
            },
        ),
        Command::Register { id, rev_file } => {
            commands::register(&ctx, &id.identifier, rev_file.as_deref())
        }
        Command::Recover {
            id,
            out,
            verify_only,
        } => commands::recover(&ctx, &id.identifier, out.as_deref(), verify_only),
        Command::Update { id, rev_file } => {
            commands::update(&ctx, &id.identifier, rev_file.as_deref())
        }
        Command::Rotate {
            id,
            rev_file,
            redirect,
            no_redirect,
        } => {
            let choice = if redirect {
                Some(true)
            } else if no_redirect {
                Some(false)
            } else {
                None
            };
            commands::rotate(&ctx, &id.identifier, rev_file.as_deref(), choice)
        }
        Command::Inspect { did, identifier } => {
            commands::inspect(&ctx, did.as_deref(), identifier.as_deref())
        }
        Command::Games {
            command:
                GamesCommand::Run {
                    game,
                    trials,
                    mu,
                    guesses,
                    strategy,
                    derived_owner_key,
                    seed,
                    json,
                },
        } => commands::games(GameArgs {
            game,
            trials,
            mu,
            guesses,
            strategy,
            derived_owner_key,
            seed,
            json,
        }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("vadar: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
