//! Node configuration: TOML file plus environment overrides.
//!
//! | key               | env                      | default            |
//! |-------------------|--------------------------|--------------------|
//! | `listen`          | `ALBANK_LISTEN`          | `127.0.0.1:8545`   |
//! | `chain_file`      | `ALBANK_CHAIN_FILE`      | none (in-memory)   |
//! | `node_key_file`   | `ALBANK_NODE_KEY`        | `<chain_file>.key` |
//! | `gas_price`       | `ALBANK_GAS_PRICE`       | `20000000000` wei  |
//! | `token_lifetime`  | `ALBANK_TOKEN_LIFETIME`  | `3600` s           |
//! | `nonce_lifetime`  | `ALBANK_NONCE_LIFETIME`  | `300` s            |
//! | `fixed_clock_ms`  | `ALBANK_FIXED_CLOCK_MS`  | none (system time) |

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::amount::Wei;
use crate::bankvm::DEFAULT_GAS_PRICE;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("environment variable {name}: {message}")]
    Env { name: &'static str, message: String },
    #[error("{0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockSource {
    System,
    /// Frozen at the given epoch milliseconds. For tests.
    Fixed(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeConfig {
    pub listen: String,
    pub chain_file: Option<PathBuf>,
    pub node_key_file: Option<PathBuf>,
    pub gas_price: Wei,
    pub token_lifetime_secs: u64,
    pub nonce_lifetime_secs: u64,
    pub clock: ClockSource,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            listen: "127.0.0.1:8545".into(),
            chain_file: None,
            node_key_file: None,
            gas_price: DEFAULT_GAS_PRICE,
            token_lifetime_secs: 3600,
            nonce_lifetime_secs: 300,
            clock: ClockSource::System,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    listen: Option<String>,
    chain_file: Option<PathBuf>,
    node_key_file: Option<PathBuf>,
    gas_price: Option<String>,
    token_lifetime: Option<u64>,
    nonce_lifetime: Option<u64>,
    fixed_clock_ms: Option<u64>,
}

impl NodeConfig {
    /// An in-memory node on an ephemeral localhost port.
    pub fn ephemeral() -> Self {
        NodeConfig {
            listen: "127.0.0.1:0".into(),
            ..Default::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: FileConfig = toml::from_str(text)?;
        let mut cfg = NodeConfig::default();
        if let Some(v) = file.listen {
            cfg.listen = v;
        }
        cfg.chain_file = file.chain_file;
        cfg.node_key_file = file.node_key_file;
        if let Some(v) = file.gas_price {
            cfg.gas_price = v
                .parse()
                .map_err(|_| ConfigError::Invalid("gas_price must be a decimal wei string"))?;
        }
        if let Some(v) = file.token_lifetime {
            cfg.token_lifetime_secs = v;
        }
        if let Some(v) = file.nonce_lifetime {
            cfg.nonce_lifetime_secs = v;
        }
        if let Some(ms) = file.fixed_clock_ms {
            cfg.clock = ClockSource::Fixed(ms);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Applies `ALBANK_*` overrides from `lookup` (normally `std::env::var`).
    pub fn with_env<F>(mut self, lookup: F) -> Result<Self, ConfigError>
    where
        F: Fn(&str) -> Option<String>,
    {
        fn num(name: &'static str, v: String) -> Result<u64, ConfigError> {
            v.trim().parse().map_err(|e: std::num::ParseIntError| ConfigError::Env {
                name,
                message: e.to_string(),
            })
        }
        if let Some(v) = lookup("ALBANK_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = lookup("ALBANK_CHAIN_FILE") {
            self.chain_file = Some(v.into());
        }
        if let Some(v) = lookup("ALBANK_NODE_KEY") {
            self.node_key_file = Some(v.into());
        }
        if let Some(v) = lookup("ALBANK_GAS_PRICE") {
            self.gas_price = v.parse().map_err(|e: crate::amount::AmountError| ConfigError::Env {
                name: "ALBANK_GAS_PRICE",
                message: e.to_string(),
            })?;
        }
        if let Some(v) = lookup("ALBANK_TOKEN_LIFETIME") {
            self.token_lifetime_secs = num("ALBANK_TOKEN_LIFETIME", v)?;
        }
        if let Some(v) = lookup("ALBANK_NONCE_LIFETIME") {
            self.nonce_lifetime_secs = num("ALBANK_NONCE_LIFETIME", v)?;
        }
        if let Some(v) = lookup("ALBANK_FIXED_CLOCK_MS") {
            self.clock = ClockSource::Fixed(num("ALBANK_FIXED_CLOCK_MS", v)?);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.gas_price == Wei::ZERO {
            return Err(ConfigError::Invalid("gas_price must be positive"));
        }
        if self.gas_price.0 > u64::MAX as u128 {
            return Err(ConfigError::Invalid("gas_price must fit in 64 bits"));
        }
        if self.token_lifetime_secs == 0 || self.nonce_lifetime_secs == 0 {
            return Err(ConfigError::Invalid("lifetimes must be positive"));
        }
        Ok(())
    }

    /// Where the node's signing key lives, if it is persisted at all.
    pub fn resolved_key_file(&self) -> Option<PathBuf> {
        self.node_key_file.clone().or_else(|| {
            self.chain_file.as_ref().map(|p| {
                let mut name = p.file_name().unwrap_or_default().to_os_string();
                name.push(".key");
                p.with_file_name(name)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn toml_and_env_layers() {
        let cfg = NodeConfig::from_toml(
            r#"
            listen = "0.0.0.0:9000"
            chain_file = "/tmp/albank/chain.bin"
            gas_price = "7"
            token_lifetime = 60
            "#,
        )
        .unwrap();
        assert_eq!(cfg.listen, "0.0.0.0:9000");
        assert_eq!(cfg.gas_price, Wei(7));
        assert_eq!(cfg.token_lifetime_secs, 60);
        assert_eq!(cfg.nonce_lifetime_secs, 300);
        assert_eq!(
            cfg.resolved_key_file(),
            Some(PathBuf::from("/tmp/albank/chain.bin.key"))
        );

        let env: HashMap<&str, &str> =
            [("ALBANK_GAS_PRICE", "9"), ("ALBANK_FIXED_CLOCK_MS", "1000")].into();
        let cfg = cfg.with_env(|k| env.get(k).map(|v| v.to_string())).unwrap();
        assert_eq!(cfg.gas_price, Wei(9));
        assert_eq!(cfg.clock, ClockSource::Fixed(1000));
    }

    #[test]
    fn rejects_zero_price_and_lifetimes() {
        assert!(NodeConfig::from_toml("gas_price = \"0\"").is_err());
        assert!(NodeConfig::from_toml("nonce_lifetime = 0").is_err());
        assert!(NodeConfig::from_toml("bogus = 1").is_err());
        let env = |k: &str| (k == "ALBANK_TOKEN_LIFETIME").then(|| "abc".to_string());
        assert!(NodeConfig::default().with_env(env).is_err());
    }
}
