//! Service configuration: one TOML file, then `KRS_*` environment overrides.

use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::FixedOffset;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid {key}={value:?}: {reason}")]
    Invalid {
        key: &'static str,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub listen: String,
    pub state_dir: PathBuf,
    pub timezone: FixedOffset,
    pub require_pass: bool,
    pub session_ttl: Duration,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            state_dir: PathBuf::from("krs-state"),
            timezone: FixedOffset::east_opt(7 * 3600).expect("valid offset"),
            require_pass: true,
            session_ttl: Duration::from_secs(60 * 60),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    listen: Option<String>,
    state_dir: Option<PathBuf>,
    timezone: Option<String>,
    require_pass: Option<bool>,
    session_ttl_min: Option<u64>,
}

/// `UTC`, `Z`, `+07:00`, `-0330` or `+7`.
pub fn parse_timezone(raw: &str) -> Result<FixedOffset, String> {
    let s = raw.trim();
    if s.eq_ignore_ascii_case("utc") || s == "Z" {
        return Ok(FixedOffset::east_opt(0).expect("zero offset"));
    }
    let (sign, rest) = match s.as_bytes().first() {
        Some(b'+') => (1, &s[1..]),
        Some(b'-') => (-1, &s[1..]),
        _ => return Err("expected UTC or a signed offset like +07:00".into()),
    };
    let (h, m) = match rest.split_once(':') {
        Some((h, m)) => (h, m),
        None if rest.len() == 4 => rest.split_at(2),
        None => (rest, "0"),
    };
    let h: i32 = h.parse().map_err(|_| format!("bad hours {h:?}"))?;
    let m: i32 = m.parse().map_err(|_| format!("bad minutes {m:?}"))?;
    if h > 23 || m > 59 {
        return Err("offset out of range".into());
    }
    FixedOffset::east_opt(sign * (h * 3600 + m * 60)).ok_or_else(|| "offset out of range".into())
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl Config {
    /// Defaults, then `path` if given, then overrides from `env`.
    pub fn load<I, K, V>(path: Option<&Path>, env: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: Into<String>,
    {
        let mut cfg = Config::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.to_owned(),
                source,
            })?;
            let file: FileConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.to_owned(),
                message: e.to_string(),
            })?;
            cfg.apply_file(file)?;
        }
        for (k, v) in env {
            cfg.apply_env(k.as_ref(), v.into())?;
        }
        Ok(cfg)
    }

    /// [`Config::load`] with the process environment.
    pub fn from_env(path: Option<&Path>) -> Result<Self, ConfigError> {
        Self::load(path, std::env::vars())
    }

    fn apply_file(&mut self, file: FileConfig) -> Result<(), ConfigError> {
        if let Some(v) = file.listen {
            self.listen = v;
        }
        if let Some(v) = file.state_dir {
            self.state_dir = v;
        }
        if let Some(v) = file.timezone {
            self.timezone = parse_timezone(&v).map_err(|reason| ConfigError::Invalid {
                key: "timezone",
                value: v,
                reason,
            })?;
        }
        if let Some(v) = file.require_pass {
            self.require_pass = v;
        }
        if let Some(v) = file.session_ttl_min {
            self.session_ttl = ttl("session_ttl_min", v)?;
        }
        Ok(())
    }

    fn apply_env(&mut self, key: &str, value: String) -> Result<(), ConfigError> {
        match key {
            "KRS_LISTEN" => self.listen = value,
            "KRS_STATE_DIR" => self.state_dir = PathBuf::from(value),
            "KRS_TZ" => {
                self.timezone = parse_timezone(&value).map_err(|reason| ConfigError::Invalid {
                    key: "KRS_TZ",
                    value,
                    reason,
                })?
            }
            "KRS_REQUIRE_PASS" => {
                self.require_pass = parse_bool(&value).ok_or_else(|| ConfigError::Invalid {
                    key: "KRS_REQUIRE_PASS",
                    value: value.clone(),
                    reason: "expected true or false".into(),
                })?
            }
            "KRS_SESSION_TTL_MIN" => {
                let minutes = value.trim().parse().map_err(|_| ConfigError::Invalid {
                    key: "KRS_SESSION_TTL_MIN",
                    value: value.clone(),
                    reason: "expected whole minutes".into(),
                })?;
                self.session_ttl = ttl("KRS_SESSION_TTL_MIN", minutes)?;
            }
            _ => {}
        }
        Ok(())
    }
}

fn ttl(key: &'static str, minutes: u64) -> Result<Duration, ConfigError> {
    if minutes == 0 {
        return Err(ConfigError::Invalid {
            key,
            value: "0".into(),
            reason: "session TTL must be at least one minute".into(),
        });
    }
    Ok(Duration::from_secs(minutes * 60))
}
