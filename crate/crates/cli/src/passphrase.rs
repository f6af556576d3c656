use vadar_core::Passphrase;

use crate::Failure;

pub const ENV_PASSPHRASE: &str = "VADAR_PASSPHRASE";
pub const ENV_NEW_PASSPHRASE: &str = "VADAR_NEW_PASSPHRASE";

/// Environment input is honoured only with `--insecure-env`; otherwise the
/// terminal is prompted without echo.
pub fn read(
    insecure_env: bool,
    var: &str,
    prompt: &str,
    confirm: bool,
) -> Result<Passphrase, Failure> {
    if insecure_env {
        return match std::env::var(var) {
            Ok(v) => Passphrase::new(&v).map_err(Failure::from),
            Err(_) => Err(Failure::user(format!(
                "--insecure-env given but {var} is not set"
            ))),
        };
    }
    let first = rpassword::prompt_password(prompt).map_err(|e| {
        Failure::user(format!(
            "cannot prompt for a passphrase ({e}); for scripted use set {var} and pass --insecure-env"
        ))
    })?;
    let p = Passphrase::new(&first)?;
    if confirm {
        let again = rpassword::prompt_password("Repeat passphrase: ")
            .map_err(|e| Failure::user(format!("cannot prompt for a passphrase ({e})")))?;
        if Passphrase::new(&again)? != p {
            return Err(Failure::user("passphrases do not match"));
        }
    }
    Ok(p)
}
