//! Desk-scale security games: enumeration, mapping integrity, rollback.
//!
//! Every trial builds a private registry and store. Passphrases for the
//! enumeration and model-D games are drawn from an explicit word list of
//! size `2^mu`, so the guessing baseline is exact.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::artifact::{Commitment, RootEntityValue};
use crate::error::Error;
use crate::flows::{unlock, FlowConfig, KeyStore, OwnerKeyModel, Session};
use crate::identity::DiscoveryId;
use crate::keyschedule::{KdfProfile, Passphrase};
use crate::registry::{
    AuthMessage, AuthProof, CanonicalBinding, OwnerSigningKey, Registry, RegistryIdentity,
    RegistryRecord,
};
use crate::storage::{ContentId, MemoryStore, SharedStore, TamperingStore, WithholdingStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Enum,
    Map,
    Roll,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameParams {
    pub kdf_profile: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<u32>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversaryStrategy {
    pub name: String,
    /// Guesses (enumeration, derived owner key) or operations (map, roll).
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameReport {
    pub game: Game,
    pub trials: u64,
    pub adversary_wins: u64,
    pub baseline: String,
    pub params: GameParams,
    pub strategy: AdversaryStrategy,
    pub counters: BTreeMap<String, u64>,
    pub stats: BTreeMap<String, f64>,
}

impl GameReport {
    fn new(
        game: Game,
        params: GameParams,
        strategy: AdversaryStrategy,
        baseline: impl Into<String>,
    ) -> Self {
        Self {
            game,
            trials: 0,
            adversary_wins: 0,
            baseline: baseline.into(),
            params,
            strategy,
            counters: BTreeMap::new(),
            stats: BTreeMap::new(),
        }
    }

    fn bump(&mut self, key: &str) {
        *self.counters.entry(key.to_owned()).or_default() += 1;
    }

    pub fn counter(&self, key: &str) -> u64 {
        self.counters.get(key).copied().unwrap_or(0)
    }

    pub fn stat(&self, key: &str) -> Option<f64> {
        self.stats.get(key).copied()
    }

    pub fn win_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.adversary_wins as f64 / self.trials as f64
        }
    }

    pub fn to_json(&self) -> String {
        crate::canonical_json_pretty(self)
    }

    /// Two-column aligned text table.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("game".into(), format!("{:?}", self.game).to_lowercase()),
            ("strategy".into(), self.strategy.name.clone()),
            ("budget".into(), self.strategy.budget.to_string()),
            ("kdf_profile".into(), self.params.kdf_profile.clone()),
        ];
        if let Some(mu) = self.params.mu {
            rows.push(("mu".into(), mu.to_string()));
        }
        rows.push(("seed".into(), self.params.seed.to_string()));
        rows.push(("trials".into(), self.trials.to_string()));
        rows.push(("adversary_wins".into(), self.adversary_wins.to_string()));
        for (k, v) in &self.counters {
            rows.push((k.clone(), v.to_string()));
        }
        for (k, v) in &self.stats {
            rows.push((k.clone(), format!("{v:.4}")));
        }
        rows.push(("baseline".into(), self.baseline.clone()));
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes as f64 == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

pub const Z_95: f64 = 1.959_963_984_540_054;

pub fn game_identity() -> RegistryIdentity {
    RegistryIdentity {
        app_id: "vadar-games".into(),
        chain_id: 31337,
        contract_address: vec![0x5A; 20],
    }
}

/// Passphrase word list of size `2^mu`.
pub fn word_list(mu: u32) -> Vec<String> {
    (0..1u64 << mu).map(|i| format!("word-{i:05}")).collect()
}

fn game_config(
    profile: &KdfProfile,
    model: OwnerKeyModel,
    backends: Vec<SharedStore>,
) -> FlowConfig {
    let binding = CanonicalBinding::new(&game_identity(), &profile.name);
    let mut cfg = FlowConfig::new(binding, model, backends).expect("built-in profile");
    cfg.profile = profile.clone();
    cfg
}

fn random_record(rng: &mut ChaCha20Rng, did: DiscoveryId) -> RegistryRecord {
    let key = OwnerSigningKey::generate(rng);
    let mut cid = [0u8; 32];
    rng.fill_bytes(&mut cid);
    RegistryRecord::signed_initial(did, ContentId(cid), Commitment(cid), &key)
}

fn random_did(rng: &mut ChaCha20Rng) -> DiscoveryId {
    let mut d = [0u8; 32];
    rng.fill_bytes(&mut d);
    DiscoveryId(d)
}

/// Stage A results per (identifier, word), shared by everyone who derives
/// them. Counts unique Argon2id evaluations.
struct SessionCache {
    identifier: String,
    words: Vec<String>,
    config: FlowConfig,
    sessions: HashMap<usize, Session>,
    registry: Registry,
}

impl SessionCache {
    fn new(identifier: &str, mu: u32, config: FlowConfig) -> Self {
        Self {
            identifier: identifier.into(),
            words: word_list(mu),
            config,
            sessions: HashMap::new(),
            registry: Registry::new(game_identity()),
        }
    }

    fn session(&mut self, word: usize) -> &mut Session {
        let (identifier, words, config, registry) =
            (&self.identifier, &self.words, &self.config, &self.registry);
        self.sessions.entry(word).or_insert_with(|| {
            let p = Passphrase::new(&words[word]).expect("non-empty word");
            unlock(identifier, &p, config, registry).expect("game config is consistent")
        })
    }

    fn did(&mut self, word: usize) -> DiscoveryId {
        self.session(word).did().expect("context encodes")
    }

    fn evaluations(&self) -> u64 {
        self.sessions.len() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumStrategy {
    /// Tries `k` distinct words for the target identifier; answers 1 iff a
    /// derived id is in the registry.
    Guesser { k: u64 },
    /// Looks only at registry key bytes.
    ByteDistinguisher,
}

#[derive(Debug, Clone)]
pub struct EnumParams {
    pub trials: u64,
    pub mu: u32,
    pub strategy: EnumStrategy,
    /// Unrelated registrations present in every registry view.
    pub decoys: usize,
    pub profile: KdfProfile,
    pub seed: u64,
}

impl EnumParams {
    pub fn new(trials: u64, mu: u32, strategy: EnumStrategy) -> Self {
        Self {
            trials,
            mu,
            strategy,
            decoys: 3,
            profile: KdfProfile::dev(),
            seed: 1,
        }
    }

    /// Expected win rate of the strategy: 1/2 + k / 2^(mu+1).
    pub fn baseline_win_rate(&self) -> f64 {
        match self.strategy {
            EnumStrategy::Guesser { k } => {
                0.5 + k.min(1 << self.mu) as f64 / (2u64 << self.mu) as f64
            }
            EnumStrategy::ByteDistinguisher => 0.5,
        }
    }
}

pub const ENUM_TARGET: &str = "target@example.org";

/// Enumeration game. With `b = 1` the target registers under a random word;
/// with `b = 0` a uniformly random id is registered instead.
pub fn run_enum_game(params: &EnumParams) -> GameReport {
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let n_words = 1usize << params.mu;
    let (strategy_name, budget) = match params.strategy {
        EnumStrategy::Guesser { k } => ("uniform-guesser", k.min(n_words as u64)),
        EnumStrategy::ByteDistinguisher => ("byte-distinguisher", 0),
    };
    let baseline = params.baseline_win_rate();
    let mut report = GameReport::new(
        Game::Enum,
        GameParams {
            kdf_profile: params.profile.name.clone(),
            mu: Some(params.mu),
            seed: params.seed,
        },
        AdversaryStrategy {
            name: strategy_name.into(),
            budget,
        },
        format!("win rate 1/2 + k/2^(mu+1) = {baseline:.4}; advantage k/2^mu"),
    );

    let store: Arc<MemoryStore> = Arc::new(MemoryStore::new("mem"));
    let cfg = game_config(
        &params.profile,
        OwnerKeyModel::PassphraseDerived,
        vec![store],
    );
    let mut challenger = SessionCache::new(ENUM_TARGET, params.mu, cfg.clone());
    let mut adversary = SessionCache::new(ENUM_TARGET, params.mu, cfg.clone());
    let mut logical_guesses = 0u64;

    for _ in 0..params.trials {
        let registry = Registry::new(game_identity());
        for _ in 0..params.decoys {
            let d = random_did(&mut rng);
            registry
                .initialize(d, random_record(&mut rng, d))
                .expect("fresh slot");
        }
        let b = rng.gen_bool(0.5);
        if b {
            let w = rng.gen_range(0..n_words);
            let rev = RootEntityValue::random(&mut rng).expect("rng");
            challenger
                .session(w)
                .register(&rev, &cfg, &registry, &mut rng)
                .expect("honest registration");
            report.bump("b1");
        } else {
            let d = random_did(&mut rng);
            registry
                .initialize(d, random_record(&mut rng, d))
                .expect("fresh slot");
            report.bump("b0");
        }

        let guess = match params.strategy {
            EnumStrategy::Guesser { .. } => {
                let mut found = false;
                for w in sample(&mut rng, n_words, budget as usize) {
                    logical_guesses += 1;
                    if registry.lookup(&adversary.did(w)).is_some() {
                        found = true;
                        break;
                    }
                }
                found
            }
            EnumStrategy::ByteDistinguisher => {
                let ones: u32 = registry
                    .dids()
                    .iter()
                    .flat_map(|d| d.0)
                    .map(u8::count_ones)
                    .sum();
                let bits = registry.len() as u32 * 256;
                ones * 2 > bits
            }
        };
        report.trials += 1;
        if guess == b {
            report.adversary_wins += 1;
        }
    }

    let n = report.trials as f64;
    let rate = report.win_rate();
    let (lo, hi) = wilson_interval(report.adversary_wins, report.trials, Z_95);
    report
        .counters
        .insert("logical_guesses".into(), logical_guesses);
    report
        .counters
        .insert("adversary_kdf_evaluations".into(), adversary.evaluations());
    report.stats.insert("win_rate".into(), rate);
    report.stats.insert("advantage".into(), 2.0 * rate - 1.0);
    report.stats.insert(
        "advantage_sigma".into(),
        if n > 0.0 { 1.0 / n.sqrt() } else { 0.0 },
    );
    report.stats.insert("baseline_win_rate".into(), baseline);
    report
        .stats
        .insert("baseline_advantage".into(), 2.0 * baseline - 1.0);
    report.stats.insert("win_rate_ci95_low".into(), lo);
    report.stats.insert("win_rate_ci95_high".into(), hi);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Forgery {
    /// Uniformly random signature bytes on an update.
    Random,
    /// One bit flipped in a signature the victim actually produced.
    BitFlipped,
    /// A valid signature the adversary made for its own id.
    Transplanted,
    /// Stale message re-signed under the adversary's key, or the victim's
    /// own stale signature replayed.
    ResignedStale,
    /// Initialize over the occupied slot.
    CreateOverwrite,
    /// Tombstone without the victim's key.
    Delete,
    /// Option A tag offered to the signature-only registry.
    OptionATag,
}

impl Forgery {
    pub const ALL: [Forgery; 7] = [
        Forgery::Random,
        Forgery::BitFlipped,
        Forgery::Transplanted,
        Forgery::ResignedStale,
        Forgery::CreateOverwrite,
        Forgery::Delete,
        Forgery::OptionATag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Forgery::Random => "random",
            Forgery::BitFlipped => "bit-flipped",
            Forgery::Transplanted => "transplanted",
            Forgery::ResignedStale => "resigned-stale",
            Forgery::CreateOverwrite => "create-overwrite",
            Forgery::Delete => "delete",
            Forgery::OptionATag => "option-a-tag",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapParams {
    pub attempts: u64,
    pub strategies: Vec<Forgery>,
    /// Victim history length before the attack (observed signatures).
    pub victim_updates: u64,
    /// Separate first-registration races run after the forgery phase.
    pub front_running_trials: u64,
    pub seed: u64,
}

impl MapParams {
    pub fn new(attempts: u64) -> Self {
        Self {
            attempts,
            strategies: Forgery::ALL.to_vec(),
            victim_updates: 3,
            front_running_trials: 10,
            seed: 2,
        }
    }
}

struct Observed {
    msg: AuthMessage,
    sig: Vec<u8>,
}

fn state_key(r: &RegistryRecord) -> (ContentId, u64, Commitment, Vec<u8>, bool) {
    (
        r.cid,
        r.ver,
        r.commit,
        r.pk_owner.bytes.clone(),
        r.is_active(),
    )
}

fn signed_update(
    reg: &Registry,
    key: &OwnerSigningKey,
    did: DiscoveryId,
    ver: u64,
    rng: &mut ChaCha20Rng,
) -> Observed {
    let mut c = [0u8; 32];
    rng.fill_bytes(&mut c);
    let msg = AuthMessage::new(did, ContentId(c), ver, Commitment(c));
    let sig = key.sign(&msg);
    reg.update(&did, msg.cid, ver, msg.commit, &sig)
        .expect("owner update");
    Observed { msg, sig }
}

/// Mapping-integrity game against a victim with a random owner key. Any change to the victim's
/// record is a win. Front-running of an empty slot is counted separately.
pub fn run_map_game(params: &MapParams) -> GameReport {
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let mut report = GameReport::new(
        Game::Map,
        GameParams {
            kdf_profile: "none".into(),
            mu: None,
            seed: params.seed,
        },
        AdversaryStrategy {
            name: params
                .strategies
                .iter()
                .map(|s| s.name())
                .collect::<Vec<_>>()
                .join("+"),
            budget: params.attempts,
        },
        "0 accepted state changes on the victim id (EUF-CMA, random owner key)",
    );
    let reg = Registry::new(game_identity());

    let victim_did = random_did(&mut rng);
    let victim = OwnerSigningKey::generate(&mut rng);
    let first = RegistryRecord::signed_initial(
        victim_did,
        ContentId([1; 32]),
        Commitment([1; 32]),
        &victim,
    );
    let mut history = vec![Observed {
        msg: AuthMessage::new(victim_did, first.cid, 1, first.commit),
        sig: match &first.auth {
            Some(AuthProof::SignatureB(s)) => s.clone(),
            _ => unreachable!("signed_initial always signs"),
        },
    }];
    reg.initialize(victim_did, first)
        .expect("victim registers first");
    for v in 2..=params.victim_updates + 1 {
        history.push(signed_update(&reg, &victim, victim_did, v, &mut rng));
    }

    // The adversary runs its own entries and collects its own signatures.
    let mallory = OwnerSigningKey::generate(&mut rng);
    let mut own: Vec<Observed> = Vec::new();
    for _ in 0..4 {
        let d = random_did(&mut rng);
        let rec =
            RegistryRecord::signed_initial(d, ContentId([2; 32]), Commitment([2; 32]), &mallory);
        reg.initialize(d, rec).expect("adversary slot");
        for v in 2..=3 {
            own.push(signed_update(&reg, &mallory, d, v, &mut rng));
        }
        if rng.gen_bool(0.5) {
            let sig = mallory.sign(&AuthMessage::tombstone(d, 4, None));
            reg.tombstone(&d, None, &sig).expect("adversary tombstone");
        }
    }

    let before = state_key(&reg.lookup(&victim_did).expect("victim record"));
    let strategies = if params.strategies.is_empty() {
        Forgery::ALL.to_vec()
    } else {
        params.strategies.clone()
    };

    for i in 0..params.attempts {
        let strategy = strategies[i as usize % strategies.len()];
        let current = reg.lookup(&victim_did).expect("victim record").ver;
        let mut fresh = [0u8; 32];
        rng.fill_bytes(&mut fresh);
        let result = match strategy {
            Forgery::Random => {
                let mut sig = vec![0u8; 64];
                rng.fill_bytes(&mut sig);
                reg.update(
                    &victim_did,
                    ContentId(fresh),
                    current + 1,
                    Commitment(fresh),
                    &sig,
                )
            }
            Forgery::BitFlipped => {
                let o = &history[rng.gen_range(0..history.len())];
                let mut sig = o.sig.clone();
                let bit = rng.gen_range(0..sig.len() * 8);
                sig[bit / 8] ^= 1 << (bit % 8);
                // Either the original tuple or the same tuple at a fresh version.
                let ver = if rng.gen_bool(0.5) {
                    o.msg.ver
                } else {
                    current + 1
                };
                reg.update(&victim_did, o.msg.cid, ver, o.msg.commit, &sig)
            }
            Forgery::Transplanted => {
                let o = &own[rng.gen_range(0..own.len())];
                let ver = if rng.gen_bool(0.5) {
                    o.msg.ver
                } else {
                    current + 1
                };
                reg.update(&victim_did, o.msg.cid, ver, o.msg.commit, &o.sig)
            }
            Forgery::ResignedStale => {
                let o = &history[rng.gen_range(0..history.len())];
                if rng.gen_bool(0.5) {
                    reg.update(&victim_did, o.msg.cid, o.msg.ver, o.msg.commit, &o.sig)
                } else {
                    let ver = if rng.gen_bool(0.5) {
                        o.msg.ver
                    } else {
                        current + 1
                    };
                    let msg = AuthMessage::new(victim_did, o.msg.cid, ver, o.msg.commit);
                    reg.update(&victim_did, msg.cid, ver, msg.commit, &mallory.sign(&msg))
                }
            }
            Forgery::CreateOverwrite => {
                let rec = RegistryRecord::signed_initial(
                    victim_did,
                    ContentId(fresh),
                    Commitment(fresh),
                    &mallory,
                );
                reg.initialize(victim_did, rec)
            }
            Forgery::Delete => {
                let redirect = rng.gen_bool(0.5).then(|| random_did(&mut rng));
                let sig = match rng.gen_range(0..3) {
                    0 => mallory.sign(&AuthMessage::tombstone(victim_did, current + 1, redirect)),
                    1 => history[rng.gen_range(0..history.len())].sig.clone(),
                    _ => {
                        let mut s = vec![0u8; 64];
                        rng.fill_bytes(&mut s);
                        s
                    }
                };
                reg.tombstone(&victim_did, redirect, &sig)
            }
            Forgery::OptionATag => {
                let mut rec = RegistryRecord::signed_initial(
                    victim_did,
                    ContentId(fresh),
                    Commitment(fresh),
                    &mallory,
                );
                rec.auth = Some(AuthProof::HmacA(fresh));
                reg.initialize(victim_did, rec)
            }
        };
        report.trials += 1;
        report.bump(&format!("attempts.{}", strategy.name()));
        match result {
            Ok(()) => {}
            Err(Error::BadAuth) => report.bump("rejected.bad_auth"),
            Err(Error::StaleVersion { .. }) => report.bump("rejected.stale_version"),
            Err(Error::SlotOccupied) => report.bump("rejected.slot_occupied"),
            Err(_) => report.bump("rejected.other"),
        }
        let after = state_key(&reg.lookup(&victim_did).expect("victim record"));
        if after != before {
            report.adversary_wins += 1;
            report.bump(&format!("wins.{}", strategy.name()));
        }
    }

    // Victim still controls the entry.
    let current = reg.lookup(&victim_did).expect("victim record").ver;
    signed_update(&reg, &victim, victim_did, current + 1, &mut rng);
    report.bump("victim_update_after_attack");

    for _ in 0..params.front_running_trials {
        let did = random_did(&mut rng);
        let squat =
            RegistryRecord::signed_initial(did, ContentId([3; 32]), Commitment([3; 32]), &mallory);
        reg.initialize(did, squat).expect("empty slot");
        let honest =
            RegistryRecord::signed_initial(did, ContentId([4; 32]), Commitment([4; 32]), &victim);
        if matches!(reg.initialize(did, honest), Err(Error::SlotOccupied)) {
            report.bump("front_running_exposures");
        }
    }
    report
        .counters
        .entry("front_running_exposures".into())
        .or_insert(0);
    report
}

/// Model D victims under exhaustive guessing: the adversary walks the word
/// list, rederives the owner key and signs an update. Expected to win.
pub fn run_map_derived_key_guessing(
    trials: u64,
    mu: u32,
    profile: &KdfProfile,
    seed: u64,
) -> GameReport {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let n_words = 1usize << mu;
    let mut report = GameReport::new(
        Game::Map,
        GameParams {
            kdf_profile: profile.name.clone(),
            mu: Some(mu),
            seed,
        },
        AdversaryStrategy {
            name: "model-d-exhaustive-guessing".into(),
            budget: n_words as u64,
        },
        "derived owner key: adversary recovers the owner key after at most 2^mu KDF guesses",
    );
    let store: Arc<MemoryStore> = Arc::new(MemoryStore::new("mem"));
    let cfg = game_config(profile, OwnerKeyModel::PassphraseDerived, vec![store]);
    let mut challenger = SessionCache::new(ENUM_TARGET, mu, cfg.clone());
    let mut adversary = SessionCache::new(ENUM_TARGET, mu, cfg.clone());
    let mut logical_guesses = 0u64;

    for _ in 0..trials {
        let reg = Registry::new(game_identity());
        let w = rng.gen_range(0..n_words);
        let rev = RootEntityValue::random(&mut rng).expect("rng");
        let target = challenger
            .session(w)
            .register(&rev, &cfg, &reg, &mut rng)
            .expect("victim registers")
            .did;
        let before = state_key(&reg.lookup(&target).expect("victim record"));

        for guess in sample(&mut rng, n_words, n_words) {
            logical_guesses += 1;
            if adversary.did(guess) != target {
                continue;
            }
            let key = adversary.session(guess).derived_owner_key(&cfg);
            let mut c = [0u8; 32];
            rng.fill_bytes(&mut c);
            let msg = AuthMessage::new(target, ContentId(c), 2, Commitment(c));
            let _ = reg.update(&target, msg.cid, 2, msg.commit, &key.sign(&msg));
            break;
        }
        report.trials += 1;
        if state_key(&reg.lookup(&target).expect("victim record")) != before {
            report.adversary_wins += 1;
        }
    }
    report
        .counters
        .insert("logical_guesses".into(), logical_guesses);
    report
        .counters
        .insert("adversary_kdf_evaluations".into(), adversary.evaluations());
    if trials > 0 {
        report.stats.insert(
            "mean_guesses_per_trial".into(),
            logical_guesses as f64 / trials as f64,
        );
    }
    report
}

#[derive(Debug, Clone)]
pub struct RollParams {
    pub trials: u64,
    pub min_chain: u64,
    pub max_chain: u64,
    pub profile: KdfProfile,
    pub seed: u64,
}

impl RollParams {
    pub fn new(trials: u64) -> Self {
        Self {
            trials,
            min_chain: 5,
            max_chain: 10,
            profile: KdfProfile::dev(),
            seed: 3,
        }
    }
}

/// Rollback game. The victim drives its record through versions
/// `1..=n`; the adversary replays stale writes and controls storage. The
/// client wins back only the version-n secret or an error. A separate
/// stale-view run reads an old registry snapshot on purpose.
pub fn run_roll_game(params: &RollParams) -> GameReport {
    let mut rng = ChaCha20Rng::seed_from_u64(params.seed);
    let mut report = GameReport::new(
        Game::Roll,
        GameParams {
            kdf_profile: params.profile.name.clone(),
            mu: None,
            seed: params.seed,
        },
        AdversaryStrategy {
            name: "stale-replay+substitute+tamper+withhold".into(),
            budget: 4,
        },
        "0 stale or tampered acceptances under fresh reads; stale views bounded by eps_fresh",
    );
    let keys = Arc::new(KeyStore::in_memory());
    let honest: Arc<MemoryStore> = Arc::new(MemoryStore::new("honest"));
    let cfg = game_config(
        &params.profile,
        OwnerKeyModel::RandomKey(keys),
        vec![honest.clone()],
    );
    let pass = Passphrase::new("roll-game-passphrase").expect("non-empty");
    let lookup = Registry::new(game_identity());
    let mut session =
        unlock("victim@example.org", &pass, &cfg, &lookup).expect("consistent config");

    let tamper = Arc::new(TamperingStore::new("tamper", honest.clone()));
    let mut tamper_cfg = cfg.clone();
    tamper_cfg.backends = vec![tamper.clone()];
    let mut withhold_cfg = cfg.clone();
    withhold_cfg.backends = vec![Arc::new(WithholdingStore::new("withhold", honest.clone()))];

    let mut seen = HashSet::new();
    for _ in 0..params.trials {
        let reg = Registry::new(game_identity());
        let n = rng.gen_range(params.min_chain..=params.max_chain);
        let mut revs = Vec::new();
        let mut writes = Vec::new();
        let mut views = Vec::new();
        for v in 1..=n {
            let rev = RootEntityValue::random(&mut rng).expect("rng");
            let r = if v == 1 {
                session.register(&rev, &cfg, &reg, &mut rng)
            } else {
                session.update(&rev, &cfg, &reg, &mut rng)
            }
            .expect("honest chain");
            assert_eq!(r.ver, v);
            let rec = reg.lookup(&r.did).expect("record");
            if let Some(AuthProof::SignatureB(sig)) = &rec.auth {
                writes.push((r.did, rec.cid, rec.ver, rec.commit, sig.clone()));
            }
            revs.push(rev);
            views.push(reg.view());
        }
        let latest = revs.last().expect("n >= 1").expose();
        report.trials += 1;
        let mut won = false;

        // Stale registry writes.
        let (did, cid, ver, commit, sig) = writes[rng.gen_range(0..writes.len() - 1)].clone();
        report.bump("stale_replay_attempts");
        match reg.update(&did, cid, ver, commit, &sig) {
            Err(Error::StaleVersion { .. }) => {}
            _ => {
                report.bump("stale_replay_accepted");
                won = true;
            }
        }

        let fresh = reg.lookup(&did).expect("record");
        let check = |out: crate::flows::FlowResult<crate::flows::RecoveryOutcome>| -> Option<bool> {
            match out {
                Ok(o) => Some(o.rev.expose() == latest),
                Err(_) => None,
            }
        };

        // Storage serves an older, validly sealed artifact for the latest cid.
        let j = rng.gen_range(0..writes.len() - 1);
        let old_blob =
            crate::storage::BlobStore::get(honest.as_ref(), &writes[j].1).expect("old blob");
        tamper.substitute(fresh.cid, old_blob);
        report.bump("substitution_attempts");
        if check(session.recover(&tamper_cfg, &reg)) == Some(false) {
            report.bump("substitution_accepted");
            won = true;
        }

        // Storage flips a byte of the latest artifact.
        tamper.substitute(fresh.cid, {
            let mut b = crate::storage::BlobStore::get(honest.as_ref(), &fresh.cid).expect("blob");
            let i = rng.gen_range(0..b.len());
            b[i] ^= 1 << rng.gen_range(0..8);
            b
        });
        report.bump("tamper_attempts");
        if check(session.recover(&tamper_cfg, &reg)) == Some(false) {
            report.bump("tamper_accepted");
            won = true;
        }

        report.bump("withhold_attempts");
        if check(session.recover(&withhold_cfg, &reg)).is_some() {
            // Nothing should come back at all.
            report.bump("withhold_served");
        }

        match check(session.recover(&cfg, &reg)) {
            Some(true) => report.bump("fresh_view_latest"),
            Some(false) => {
                report.bump("fresh_view_stale_accepts");
                won = true;
            }
            None => report.bump("fresh_view_errors"),
        }

        // Freshness deliberately violated: the client reads an old view.
        let k = rng.gen_range(0..views.len() - 1);
        report.bump("stale_view_reads");
        if let Ok(o) = session.recover(&cfg, &views[k]) {
            if o.rev.expose() != latest {
                report.bump("stale_view_accepts");
            }
        }

        seen.insert(n);
        if won {
            report.adversary_wins += 1;
        }
    }
    for key in [
        "stale_replay_accepted",
        "substitution_accepted",
        "tamper_accepted",
        "fresh_view_stale_accepts",
        "stale_view_accepts",
        "withhold_served",
    ] {
        report.counters.entry(key.into()).or_insert(0);
    }
    report
        .counters
        .insert("distinct_chain_lengths".into(), seen.len() as u64);
    if report.counter("stale_view_reads") > 0 {
        report.stats.insert(
            "eps_fresh_observed".into(),
            report.counter("stale_view_accepts") as f64 / report.counter("stale_view_reads") as f64,
        );
    }
    report
}
