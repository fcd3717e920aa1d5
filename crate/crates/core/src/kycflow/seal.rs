//! Encryption of KYC submissions before they reach the ledger.
//!
//! The wallet and the node agree on a key by X25519 Diffie-Hellman over their
//! Ed25519 keys (converted to Montgomery form), stretched with HKDF-SHA256
//! under a fixed label. The submission is then sealed with
//! ChaCha20-Poly1305. Only the submitting wallet and the node can open it,
//! which lets the node rebuild contract state by replaying the ledger while
//! the ledger itself holds ciphertext only.
//!
//! Wire layout: `version u8 = 1 | kdf tag 16 | nonce 12 | ciphertext (len u32 | bytes)`.

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce as AeadNonce};
use curve25519_dalek::montgomery::MontgomeryPoint;
use ed25519_dalek::{SigningKey, VerifyingKey};
use hkdf::Hkdf;
use rand::RngCore;
use sha2::Sha256;

use crate::bankvm::{KycSubmission, PayloadOpener, UserRegistrationData};
use crate::codec::{Decoder, Encoder};
use crate::primitives::Digest;
use crate::wallet::{PublicKey, Wallet};

use super::KycError;

pub const SEAL_VERSION: u8 = 1;
const KDF_LABEL: &[u8] = b"albank/kyc-seal/v1";
const TAG_LABEL: &[u8] = b"albank/kyc-seal-tag/v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedKycPayload {
    pub ciphertext: Vec<u8>,
    pub nonce: [u8; 12],
    /// Identifies the (wallet key, node key) pair the payload was sealed for.
    pub kdf_tag: [u8; 16],
}

impl EncryptedKycPayload {
    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.u8(SEAL_VERSION)
            .fixed(&self.kdf_tag)
            .fixed(&self.nonce)
            .bytes(&self.ciphertext);
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, KycError> {
        let mut dec = Decoder::new(bytes);
        let parse = |dec: &mut Decoder| -> Result<EncryptedKycPayload, crate::codec::DecodeError> {
            let version = dec.u8()?;
            if version != SEAL_VERSION {
                return Err(crate::codec::DecodeError::InvalidTag { what: "seal version", tag: version });
            }
            Ok(EncryptedKycPayload {
                kdf_tag: dec.array()?,
                nonce: dec.array()?,
                ciphertext: dec.bytes()?.to_vec(),
            })
        };
        let out = parse(&mut dec).map_err(|_| KycError::DecryptionFailed)?;
        dec.finish().map_err(|_| KycError::DecryptionFailed)?;
        Ok(out)
    }
}

fn kdf_tag(wallet_pk: &PublicKey, node_pk: &PublicKey) -> [u8; 16] {
    let d = Digest::of_parts(&[TAG_LABEL, &wallet_pk.0, &node_pk.0]);
    d.0[..16].try_into().expect("16 <= 32")
}

fn derive_key(shared: &MontgomeryPoint, wallet_pk: &PublicKey, node_pk: &PublicKey) -> Key {
    let hk = Hkdf::<Sha256>::new(Some(KDF_LABEL), shared.as_bytes());
    let mut info = Vec::with_capacity(64);
    info.extend_from_slice(&wallet_pk.0);
    info.extend_from_slice(&node_pk.0);
    let mut okm = [0u8; 32];
    hk.expand(&info, &mut okm).expect("32 bytes is a valid HKDF length");
    Key::from(okm)
}

fn montgomery(pk: &PublicKey) -> Result<MontgomeryPoint, KycError> {
    VerifyingKey::from_bytes(&pk.0)
        .map(|k| k.to_montgomery())
        .map_err(|_| KycError::DecryptionFailed)
}

fn shared_secret(own: &SigningKey, peer: &PublicKey) -> Result<MontgomeryPoint, KycError> {
    Ok(montgomery(peer)? * own.to_scalar())
}

fn aad(wallet_pk: &PublicKey, node_pk: &PublicKey) -> Vec<u8> {
    let mut aad = KDF_LABEL.to_vec();
    aad.extend_from_slice(&wallet_pk.0);
    aad.extend_from_slice(&node_pk.0);
    aad
}

fn seal_with(key: &Key, wallet_pk: &PublicKey, node_pk: &PublicKey, plaintext: &[u8]) -> EncryptedKycPayload {
    let mut nonce = [0u8; 12];
    rand::thread_rng().fill_bytes(&mut nonce);
    let cipher = ChaCha20Poly1305::new(key);
    let ciphertext = cipher
        .encrypt(
            AeadNonce::from_slice(&nonce),
            Payload {
                msg: plaintext,
                aad: &aad(wallet_pk, node_pk),
            },
        )
        .expect("chacha20poly1305 encryption cannot fail for in-memory buffers");
    EncryptedKycPayload {
        ciphertext,
        nonce,
        kdf_tag: kdf_tag(wallet_pk, node_pk),
    }
}

fn open_with(
    key: &Key,
    wallet_pk: &PublicKey,
    node_pk: &PublicKey,
    payload: &EncryptedKycPayload,
) -> Result<Vec<u8>, KycError> {
    if payload.kdf_tag != kdf_tag(wallet_pk, node_pk) {
        return Err(KycError::DecryptionFailed);
    }
    ChaCha20Poly1305::new(key)
        .decrypt(
            AeadNonce::from_slice(&payload.nonce),
            Payload {
                msg: &payload.ciphertext,
                aad: &aad(wallet_pk, node_pk),
            },
        )
        .map_err(|_| KycError::DecryptionFailed)
}

/// Seals a full submission (record plus optional ID-document digest).
pub fn seal_submission(
    wallet: &Wallet,
    node_pk: &PublicKey,
    submission: &KycSubmission,
) -> Result<EncryptedKycPayload, KycError> {
    let wallet_pk = wallet.public_key();
    let shared = shared_secret(wallet.signing_key(), node_pk)?;
    let key = derive_key(&shared, &wallet_pk, node_pk);
    Ok(seal_with(&key, &wallet_pk, node_pk, &submission.encode()))
}

/// Wallet-side open of a sealed submission.
pub fn open_submission(
    wallet: &Wallet,
    node_pk: &PublicKey,
    payload: &EncryptedKycPayload,
) -> Result<KycSubmission, KycError> {
    let wallet_pk = wallet.public_key();
    let shared = shared_secret(wallet.signing_key(), node_pk)?;
    let key = derive_key(&shared, &wallet_pk, node_pk);
    let plain = open_with(&key, &wallet_pk, node_pk, payload)?;
    KycSubmission::decode(&plain).map_err(|_| KycError::DecryptionFailed)
}

pub fn encrypt_payload(
    wallet: &Wallet,
    node_pk: &PublicKey,
    data: &UserRegistrationData,
) -> Result<EncryptedKycPayload, KycError> {
    seal_submission(
        wallet,
        node_pk,
        &KycSubmission {
            record: data.clone(),
            id_document: None,
        },
    )
}

pub fn decrypt_payload(
    wallet: &Wallet,
    node_pk: &PublicKey,
    payload: &EncryptedKycPayload,
) -> Result<UserRegistrationData, KycError> {
    open_submission(wallet, node_pk, payload).map(|s| s.record)
}

/// Node-side opener: the node derives the same key from its own secret and
/// the sender's public key.
pub struct NodeKeyOpener {
    node_key: SigningKey,
}

impl NodeKeyOpener {
    pub fn new(node_key: SigningKey) -> Self {
        Self { node_key }
    }

    pub fn open(&self, sender: &PublicKey, payload: &[u8]) -> Result<Vec<u8>, KycError> {
        let node_pk = PublicKey(self.node_key.verifying_key().to_bytes());
        let sealed = EncryptedKycPayload::decode(payload)?;
        let shared = shared_secret(&self.node_key, sender)?;
        let key = derive_key(&shared, sender, &node_pk);
        open_with(&key, sender, &node_pk, &sealed)
    }
}

impl PayloadOpener for NodeKeyOpener {
    fn open(&self, sender: &PublicKey, payload: &[u8]) -> Result<Vec<u8>, String> {
        NodeKeyOpener::open(self, sender, payload).map_err(|e| e.to_string())
    }
}
