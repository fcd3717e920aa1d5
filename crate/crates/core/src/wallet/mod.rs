//! Wallet keys, address derivation, signing, and the nonce challenge login.
//!
//! A wallet is an Ed25519 keypair. Its address is the final 20 bytes of
//! SHA-256 over the public key. The node never sees private keys: login is a
//! signed one-time nonce (see [`auth`]) and every write is a signed
//! transaction.

pub mod auth;

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use rand::rngs::OsRng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::primitives::{Address, Digest, ParseHexError};

pub use auth::{AuthError, Nonce, NonceRegistry, SessionToken, TokenError, TokenIssuer};

/// Wallet file format version byte.
pub const WALLET_FILE_VERSION: u8 = 1;
const WALLET_SEED_LABEL: &[u8] = b"albank/wallet-seed/v1";

/// A detached Ed25519 signature.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Signature(pub [u8; 64]);

impl Signature {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}…)", &self.to_hex()[..16])
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Signature {
    type Err = ParseHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s.strip_prefix("0x").unwrap_or(s))?;
        let arr: [u8; 64] = bytes.as_slice().try_into().map_err(|_| ParseHexError::Length {
            expected: 64,
            actual: bytes.len(),
        })?;
        Ok(Signature(arr))
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// A 32-byte Ed25519 public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey(pub [u8; 32]);

impl PublicKey {
    pub fn address(&self) -> Address {
        Address::from_public_key(&self.0)
    }

    /// Strict verification; malformed keys simply fail to verify.
    pub fn verify(&self, message: &[u8], signature: &Signature) -> bool {
        let Ok(key) = VerifyingKey::from_bytes(&self.0) else {
            return false;
        };
        let sig = ed25519_dalek::Signature::from_bytes(&signature.0);
        key.verify_strict(message, &sig).is_ok()
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.to_hex())
    }
}

impl fmt::Display for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for PublicKey {
    type Err = ParseHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<Digest>().map(|d| PublicKey(d.0))
    }
}

impl Serialize for PublicKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PublicKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum WalletFileError {
    #[error("wallet file io: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported wallet file version {0}")]
    Version(u8),
    #[error("malformed wallet file")]
    Malformed,
}

/// An Ed25519 keypair plus its derived address.
#[derive(Clone)]
pub struct Wallet {
    signing_key: SigningKey,
}

impl fmt::Debug for Wallet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Wallet").field("address", &self.address()).finish_non_exhaustive()
    }
}

impl Wallet {
    /// Creates a wallet. With a seed the keypair is a pure function of the
    /// seed bytes; without one it is drawn from the OS RNG.
    pub fn create(seed: Option<&[u8]>) -> Self {
        let signing_key = match seed {
            Some(seed) => {
                let secret = Digest::of_parts(&[WALLET_SEED_LABEL, seed]);
                SigningKey::from_bytes(&secret.0)
            }
            None => SigningKey::generate(&mut OsRng),
        };
        Wallet { signing_key }
    }

    pub fn from_secret(secret: [u8; 32]) -> Self {
        Wallet {
            signing_key: SigningKey::from_bytes(&secret),
        }
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.signing_key.verifying_key().to_bytes())
    }

    pub fn address(&self) -> Address {
        self.public_key().address()
    }

    pub fn sign(&self, message: &[u8]) -> Signature {
        Signature(self.signing_key.sign(message).to_bytes())
    }

    /// Signs a login challenge. The signature covers the raw nonce bytes.
    pub fn sign_nonce(&self, nonce_value: &[u8; 32]) -> Signature {
        self.sign(nonce_value)
    }

    pub(crate) fn signing_key(&self) -> &SigningKey {
        &self.signing_key
    }

    /// `[version][secret 32][public 32]`
    pub fn to_file_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(65);
        out.push(WALLET_FILE_VERSION);
        out.extend_from_slice(&self.signing_key.to_bytes());
        out.extend_from_slice(&self.public_key().0);
        out
    }

    pub fn from_file_bytes(bytes: &[u8]) -> Result<Self, WalletFileError> {
        let (&version, rest) = bytes.split_first().ok_or(WalletFileError::Malformed)?;
        if version != WALLET_FILE_VERSION {
            return Err(WalletFileError::Version(version));
        }
        if rest.len() != 64 {
            return Err(WalletFileError::Malformed);
        }
        let secret: [u8; 32] = rest[..32].try_into().expect("length checked");
        let wallet = Wallet::from_secret(secret);
        if wallet.public_key().0[..] != rest[32..] {
            return Err(WalletFileError::Malformed);
        }
        Ok(wallet)
    }

    /// Writes the wallet file with owner-only permissions.
    pub fn save(&self, path: &Path) -> Result<(), WalletFileError> {
        write_private(path, &self.to_file_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, WalletFileError> {
        Wallet::from_file_bytes(&fs::read(path)?)
    }
}

pub(crate) fn write_private(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut options = fs::OpenOptions::new();
    options.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        options.mode(0o600);
    }
    let mut file = options.open(path)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        file.set_permissions(fs::Permissions::from_mode(0o600))?;
    }
    io::Write::write_all(&mut file, bytes)?;
    file.sync_all()
}
