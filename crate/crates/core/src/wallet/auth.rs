//! Nonce challenge-response login and server-signed session tokens.
//!
//! Flow: the client asks for a challenge for its address, signs the 32 nonce
//! bytes with its wallet key, and presents (address, public key, nonce,
//! signature). A correct answer consumes the nonce and yields a
//! [`SessionToken`] signed by the node's [`TokenIssuer`].

use std::collections::HashMap;
use std::sync::Mutex;

use ed25519_dalek::{Signer, SigningKey};
use rand::RngCore;
use serde::Serialize;
use thiserror::Error;

use super::{PublicKey, Signature};
use crate::codec::{Decoder, Encoder};
use crate::primitives::Address;

pub const DEFAULT_NONCE_LIFETIME_MS: u64 = 5 * 60 * 1000;
pub const DEFAULT_TOKEN_LIFETIME_MS: u64 = 60 * 60 * 1000;
const TOKEN_LABEL: &[u8] = b"albank/session-token/v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Nonce {
    #[serde(with = "hex_bytes")]
    pub value: [u8; 32],
    pub issued_to: Address,
    pub issued_at: u64,
    pub expires_at: u64,
    pub consumed: bool,
}

mod hex_bytes {
    pub fn serialize<S: serde::Serializer>(v: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("unknown nonce")]
    UnknownNonce,
    #[error("nonce already used")]
    NonceConsumed,
    #[error("signature verification failed")]
    BadSignature,
}

/// Server-side record of issued login challenges.
#[derive(Debug)]
pub struct NonceRegistry {
    lifetime_ms: u64,
    entries: Mutex<HashMap<[u8; 32], Nonce>>,
}

impl NonceRegistry {
    pub fn new(lifetime_ms: u64) -> Self {
        Self {
            lifetime_ms,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn issue(&self, address: Address, now_ms: u64) -> Nonce {
        let mut value = [0u8; 32];
        rand::thread_rng().fill_bytes(&mut value);
        let nonce = Nonce {
            value,
            issued_to: address,
            issued_at: now_ms,
            expires_at: now_ms.saturating_add(self.lifetime_ms),
            consumed: false,
        };
        let mut entries = self.entries.lock().expect("nonce registry poisoned");
        entries.retain(|_, n| n.expires_at > now_ms);
        entries.insert(value, nonce.clone());
        nonce
    }

    /// Checks a signed challenge and consumes the nonce on success. Failures
    /// leave the registry untouched. The lookup, check and consume happen
    /// under one lock so two racing calls cannot both succeed.
    pub fn verify(
        &self,
        address: Address,
        public_key: &PublicKey,
        nonce_value: &[u8; 32],
        signature: &Signature,
        now_ms: u64,
    ) -> Result<(), AuthError> {
        let mut entries = self.entries.lock().expect("nonce registry poisoned");
        let entry = entries
            .get_mut(nonce_value)
            .filter(|n| n.issued_to == address)
            .ok_or(AuthError::UnknownNonce)?;
        if entry.consumed {
            return Err(AuthError::NonceConsumed);
        }
        if now_ms >= entry.expires_at {
            return Err(AuthError::UnknownNonce);
        }
        if public_key.address() != address || !public_key.verify(nonce_value, signature) {
            return Err(AuthError::BadSignature);
        }
        entry.consumed = true;
        Ok(())
    }

    pub fn get(&self, nonce_value: &[u8; 32]) -> Option<Nonce> {
        self.entries
            .lock()
            .expect("nonce registry poisoned")
            .get(nonce_value)
            .cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenError {
    #[error("malformed session token")]
    Malformed,
    #[error("session token signature invalid")]
    BadSignature,
    #[error("session token expired")]
    Expired,
}

/// A server-signed session credential. Travels as hex of
/// `[subject 20][issued_at u64][expires_at u64][signature 64]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionToken {
    pub subject: Address,
    pub issued_at: u64,
    pub expires_at: u64,
    pub signature: Signature,
}

impl SessionToken {
    fn signed_bytes(subject: &Address, issued_at: u64, expires_at: u64) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.fixed(TOKEN_LABEL)
            .fixed(subject.as_bytes())
            .u64(issued_at)
            .u64(expires_at);
        enc.finish()
    }

    pub fn encode(&self) -> String {
        let mut enc = Encoder::new();
        enc.fixed(self.subject.as_bytes())
            .u64(self.issued_at)
            .u64(self.expires_at)
            .fixed(&self.signature.0);
        hex::encode(enc.finish())
    }

    pub fn decode(text: &str) -> Result<Self, TokenError> {
        let raw = hex::decode(text.trim()).map_err(|_| TokenError::Malformed)?;
        let mut dec = Decoder::new(&raw);
        let parse = |dec: &mut Decoder| -> Result<SessionToken, crate::codec::DecodeError> {
            Ok(SessionToken {
                subject: Address(dec.array()?),
                issued_at: dec.u64()?,
                expires_at: dec.u64()?,
                signature: Signature(dec.array()?),
            })
        };
        let token = parse(&mut dec).map_err(|_| TokenError::Malformed)?;
        dec.finish().map_err(|_| TokenError::Malformed)?;
        Ok(token)
    }
}

/// Issues and checks session tokens with the node's signing key.
pub struct TokenIssuer {
    key: SigningKey,
    lifetime_ms: u64,
}

impl TokenIssuer {
    pub fn new(key: SigningKey, lifetime_ms: u64) -> Self {
        Self { key, lifetime_ms }
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.key.verifying_key().to_bytes())
    }

    pub fn issue(&self, subject: Address, now_ms: u64) -> SessionToken {
        let expires_at = now_ms.saturating_add(self.lifetime_ms);
        let msg = SessionToken::signed_bytes(&subject, now_ms, expires_at);
        SessionToken {
            subject,
            issued_at: now_ms,
            expires_at,
            signature: Signature(self.key.sign(&msg).to_bytes()),
        }
    }

    pub fn verify(&self, token: &SessionToken, now_ms: u64) -> Result<Address, TokenError> {
        let msg = SessionToken::signed_bytes(&token.subject, token.issued_at, token.expires_at);
        if !self.public_key().verify(&msg, &token.signature) {
            return Err(TokenError::BadSignature);
        }
        if now_ms >= token.expires_at {
            return Err(TokenError::Expired);
        }
        Ok(token.subject)
    }

    pub fn verify_encoded(&self, text: &str, now_ms: u64) -> Result<Address, TokenError> {
        self.verify(&SessionToken::decode(text)?, now_ms)
    }
}
