use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONTRACT: &str = "aaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaaa";
const ID: &str = "erin@example.com";

fn vadar(home: &Path, args: &[&str], pass: Option<&str>, new_pass: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vadar"));
    cmd.env_remove("VADAR_HOME")
        .env_remove("VADAR_PASSPHRASE")
        .env_remove("VADAR_NEW_PASSPHRASE")
        .arg("--home")
        .arg(home);
    if pass.is_some() || new_pass.is_some() {
        cmd.arg("--insecure-env");
    }
    if let Some(p) = pass {
        cmd.env("VADAR_PASSPHRASE", p);
    }
    if let Some(p) = new_pass {
        cmd.env("VADAR_NEW_PASSPHRASE", p);
    }
    cmd.args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn field(out: &Output, key: &str) -> String {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().to_string()))
        .unwrap_or_else(|| panic!("no {key} in output"))
}

fn init(home: &Path, extra: &[&str]) {
    let mut args = vec![
        "init",
        "--app-id",
        "cli-tests",
        "--chain-id",
        "5",
        "--contract-address",
        CONTRACT,
    ];
    args.extend_from_slice(extra);
    let out = vadar(home, &args, None, None);
    assert!(out.status.success(), "{}", stderr(&out));
}

fn registered(extra: &[&str]) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    init(tmp.path(), extra);
    let out = vadar(
        tmp.path(),
        &["register", "--identifier", ID],
        Some("first passphrase"),
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    tmp
}

#[test]
fn missing_binding_fails_closed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("fingerprint test"),
        None,
    );
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("vadar init"));
}

#[test]
fn edited_binding_is_a_config_error() {
    let tmp = registered(&[]);
    let path = tmp.path().join("binding.json");
    let text = fs::read_to_string(&path)
        .unwrap()
        .replace(CONTRACT, "bbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbbb");
    fs::write(&path, text).unwrap();
    let out = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("first passphrase"),
        None,
    );
    assert_eq!(code(&out), 5, "{}", stderr(&out));
}

#[test]
fn tampered_blob_is_an_integrity_error() {
    let tmp = registered(&[]);
    let store = tmp.path().join("store");
    for entry in fs::read_dir(&store).unwrap() {
        let path = entry.unwrap().path();
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        fs::write(&path, bytes).unwrap();
    }
    let out = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("first passphrase"),
        None,
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(
        stderr(&out).contains("does not match the registry commitment"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn missing_blob_and_snapshot_are_availability_errors() {
    let tmp = registered(&[]);
    for entry in fs::read_dir(tmp.path().join("store")).unwrap() {
        fs::remove_file(entry.unwrap().path()).unwrap();
    }
    let out = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("first passphrase"),
        None,
    );
    assert_eq!(code(&out), 4, "{}", stderr(&out));

    fs::remove_file(tmp.path().join("registry.json")).unwrap();
    let out = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("first passphrase"),
        None,
    );
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn wrong_passphrase_and_duplicate_register_are_user_errors() {
    let tmp = registered(&[]);
    let out = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("second passphrase"),
        None,
    );
    assert_eq!(code(&out), 2);
    let out = vadar(
        tmp.path(),
        &["register", "--identifier", ID],
        Some("first passphrase"),
        None,
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("occupied"));
}

#[test]
fn no_terminal_and_no_env_flag_refuses_to_read_passphrase() {
    let tmp = registered(&[]);
    let out = Command::new(env!("CARGO_BIN_EXE_vadar"))
        .env("VADAR_PASSPHRASE", "first passphrase")
        .arg("--home")
        .arg(tmp.path())
        .args(["recover", "--identifier", ID, "--verify-only"])
        .stdin(std::process::Stdio::null())
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--insecure-env"));
}

#[test]
fn verify_only_fingerprint_matches_register() {
    let tmp = tempfile::tempdir().unwrap();
    init(tmp.path(), &[]);
    let rev = tmp.path().join("rev.hex");
    fs::write(&rev, hex::encode([0x11u8; 32])).unwrap();
    let reg = vadar(
        tmp.path(),
        &[
            "register",
            "--identifier",
            ID,
            "--rev-file",
            rev.to_str().unwrap(),
        ],
        Some("fingerprint test"),
        None,
    );
    assert!(reg.status.success());
    let rec = vadar(
        tmp.path(),
        &[
            "recover",
            "--identifier",
            "  ERIN@example.com",
            "--verify-only",
        ],
        Some("fingerprint test"),
        None,
    );
    assert!(rec.status.success());
    assert_eq!(
        field(&reg, "rev_fingerprint"),
        field(&rec, "rev_fingerprint")
    );
    assert_eq!(field(&rec, "ver"), "1");
}

#[test]
fn out_file_is_owner_only() {
    let tmp = registered(&[]);
    let out_path = tmp.path().join("rev.bin");
    let out = vadar(
        tmp.path(),
        &[
            "recover",
            "--identifier",
            ID,
            "--out",
            out_path.to_str().unwrap(),
        ],
        Some("first passphrase"),
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read(&out_path).unwrap().len(), 32);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        assert_eq!(
            fs::metadata(&out_path).unwrap().permissions().mode() & 0o777,
            0o600
        );
    }
}

#[test]
fn rotation_with_redirect_reports_the_move() {
    let tmp = registered(&["--redirect"]);
    let out = vadar(
        tmp.path(),
        &["rotate", "--identifier", ID],
        Some("first passphrase"),
        Some("second passphrase"),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let new_did = field(&out, "did");

    let old = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("first passphrase"),
        None,
    );
    assert_eq!(code(&old), 2);
    assert!(
        stderr(&old).contains(&format!("migrated to discovery id {new_did}")),
        "{}",
        stderr(&old)
    );

    let new = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("second passphrase"),
        None,
    );
    assert!(new.status.success());

    let same = vadar(
        tmp.path(),
        &["rotate", "--identifier", ID],
        Some("second passphrase"),
        Some("second passphrase"),
    );
    assert_eq!(code(&same), 2);
}

#[test]
fn update_bumps_version_and_inspect_agrees() {
    let tmp = registered(&[]);
    let out = vadar(
        tmp.path(),
        &["update", "--identifier", ID],
        Some("first passphrase"),
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(field(&out, "ver"), "2");
    let did = field(&out, "did");

    let by_did = vadar(tmp.path(), &["inspect", "--did", &did], None, None);
    let by_id = vadar(
        tmp.path(),
        &["inspect", "--identifier", ID],
        Some("first passphrase"),
        None,
    );
    assert!(by_did.status.success() && by_id.status.success());
    assert_eq!(by_did.stdout, by_id.stdout);
    let view: serde_json::Value = serde_json::from_slice(&by_did.stdout).unwrap();
    assert_eq!(view["status"], "active");
    assert_eq!(view["ver"], 2);
}

#[test]
fn derived_key_model_needs_no_key_files() {
    let tmp = registered(&["--key-model", "derived"]);
    assert!(
        !tmp.path().join("keys").exists()
            || fs::read_dir(tmp.path().join("keys"))
                .unwrap()
                .next()
                .is_none()
    );
    let out = vadar(
        tmp.path(),
        &["update", "--identifier", ID],
        Some("first passphrase"),
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn games_emit_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = vadar(
        tmp.path(),
        &["games", "run", "map", "--trials", "14", "--json"],
        None,
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["adversary_wins"], 0);
    assert_eq!(report["game"], "map");
}

#[test]
fn short_passphrases_cannot_create_entries() {
    let tmp = tempfile::tempdir().unwrap();
    init(tmp.path(), &["--min-passphrase-chars", "12"]);
    let out = vadar(
        tmp.path(),
        &["register", "--identifier", ID],
        Some("eleven char"),
        None,
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("at least 12"));
    let out = vadar(
        tmp.path(),
        &["register", "--identifier", ID],
        Some("twelve chars"),
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = vadar(
        tmp.path(),
        &["rotate", "--identifier", ID],
        Some("twelve chars"),
        Some("too short"),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn replicas_serve_when_the_primary_store_loses_a_blob() {
    let tmp = tempfile::tempdir().unwrap();
    init(tmp.path(), &[]);
    let cfg_path = tmp.path().join("config.json");
    let mut cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&cfg_path).unwrap()).unwrap();
    cfg["replica_dirs"] = serde_json::json!(["mirror"]);
    fs::write(&cfg_path, cfg.to_string()).unwrap();

    let out = vadar(
        tmp.path(),
        &["register", "--identifier", ID],
        Some("first passphrase"),
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_dir(tmp.path().join("mirror")).unwrap().count(), 1);
    for entry in fs::read_dir(tmp.path().join("store")).unwrap() {
        fs::remove_file(entry.unwrap().path()).unwrap();
    }
    let out = vadar(
        tmp.path(),
        &["recover", "--identifier", ID, "--verify-only"],
        Some("first passphrase"),
        None,
    );
    assert!(out.status.success(), "{}", stderr(&out));
}
