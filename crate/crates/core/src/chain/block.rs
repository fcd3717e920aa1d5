use serde::Serialize;

use crate::amount::Wei;
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::primitives::{Address, Digest};
use crate::wallet::{PublicKey, Signature, Wallet};

const TX_LABEL: &[u8] = b"albank/tx/v1";
const BLOCK_LABEL: &[u8] = b"albank/block/v1";

/// The four write operations the bank contract accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Operation {
    AddCustomer,
    RegisterKyc,
    Deposit,
    Withdraw,
}

impl Operation {
    pub fn tag(self) -> u8 {
        match self {
            Operation::AddCustomer => 0,
            Operation::RegisterKyc => 1,
            Operation::Deposit => 2,
            Operation::Withdraw => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self, DecodeError> {
        Ok(match tag {
            0 => Operation::AddCustomer,
            1 => Operation::RegisterKyc,
            2 => Operation::Deposit,
            3 => Operation::Withdraw,
            tag => return Err(DecodeError::InvalidTag { what: "operation", tag }),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Operation::AddCustomer => "AddCustomer",
            Operation::RegisterKyc => "RegisterKyc",
            Operation::Deposit => "Deposit",
            Operation::Withdraw => "Withdraw",
        }
    }
}

/// A signed contract call. `sender` and `value` play the roles of
/// `msg.sender` and `msg.value`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transaction {
    pub tx_id: Digest,
    pub sender: Address,
    pub public_key: PublicKey,
    pub operation: Operation,
    pub value: Wei,
    #[serde(serialize_with = "hex_vec")]
    pub payload: Vec<u8>,
    pub sequence: u64,
    pub signature: Signature,
}

fn hex_vec<S: serde::Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&hex::encode(v))
}

impl Transaction {
    /// Builds and signs a transaction from `wallet`.
    pub fn signed(
        wallet: &Wallet,
        operation: Operation,
        value: Wei,
        payload: Vec<u8>,
        sequence: u64,
    ) -> Self {
        let public_key = wallet.public_key();
        let sender = public_key.address();
        let signature = wallet.sign(&Self::signing_bytes(
            &sender, &public_key, operation, value, &payload, sequence,
        ));
        Self::from_parts(sender, public_key, operation, value, payload, sequence, signature)
    }

    /// Assembles a transaction from its signed fields, deriving `tx_id`.
    pub fn from_parts(
        sender: Address,
        public_key: PublicKey,
        operation: Operation,
        value: Wei,
        payload: Vec<u8>,
        sequence: u64,
        signature: Signature,
    ) -> Self {
        let mut tx = Transaction {
            tx_id: Digest::ZERO,
            sender,
            public_key,
            operation,
            value,
            payload,
            sequence,
            signature,
        };
        tx.tx_id = tx.compute_id();
        tx
    }

    /// The bytes a wallet signs. Clients reproduce this layout exactly.
    pub fn signing_bytes(
        sender: &Address,
        public_key: &PublicKey,
        operation: Operation,
        value: Wei,
        payload: &[u8],
        sequence: u64,
    ) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.fixed(TX_LABEL)
            .fixed(sender.as_bytes())
            .fixed(&public_key.0)
            .u8(operation.tag())
            .u128(value.0)
            .bytes(payload)
            .u64(sequence);
        enc.finish()
    }

    fn own_signing_bytes(&self) -> Vec<u8> {
        Self::signing_bytes(
            &self.sender,
            &self.public_key,
            self.operation,
            self.value,
            &self.payload,
            self.sequence,
        )
    }

    /// Digest of every field except `tx_id` itself, signature included.
    pub fn compute_id(&self) -> Digest {
        let mut bytes = self.own_signing_bytes();
        bytes.extend_from_slice(&self.signature.0);
        Digest::of(&bytes)
    }

    /// True when the signature verifies and `sender` is the key's address.
    pub fn verify_signature(&self) -> bool {
        self.public_key.address() == self.sender
            && self.public_key.verify(&self.own_signing_bytes(), &self.signature)
    }

    pub fn encode_into(&self, enc: &mut Encoder) {
        enc.fixed(self.tx_id.as_bytes())
            .fixed(self.sender.as_bytes())
            .fixed(&self.public_key.0)
            .u8(self.operation.tag())
            .u128(self.value.0)
            .bytes(&self.payload)
            .u64(self.sequence)
            .fixed(&self.signature.0);
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode_into(&mut enc);
        enc.finish()
    }

    pub fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Transaction {
            tx_id: Digest(dec.array()?),
            sender: Address(dec.array()?),
            public_key: PublicKey(dec.array()?),
            operation: Operation::from_tag(dec.u8()?)?,
            value: Wei(dec.u128()?),
            payload: dec.bytes()?.to_vec(),
            sequence: dec.u64()?,
            signature: Signature(dec.array()?),
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let tx = Self::decode_from(&mut dec)?;
        dec.finish()?;
        Ok(tx)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub height: u64,
    pub prev_hash: Digest,
    pub transactions: Vec<Transaction>,
    pub timestamp: u64,
    pub block_hash: Digest,
}

impl Block {
    pub fn new(height: u64, prev_hash: Digest, transactions: Vec<Transaction>, timestamp: u64) -> Self {
        let mut block = Block {
            height,
            prev_hash,
            transactions,
            timestamp,
            block_hash: Digest::ZERO,
        };
        block.block_hash = block.compute_hash();
        block
    }

    /// Hash over (height, prev_hash, transaction ids, timestamp).
    pub fn compute_hash(&self) -> Digest {
        let mut enc = Encoder::new();
        enc.fixed(BLOCK_LABEL)
            .u64(self.height)
            .fixed(self.prev_hash.as_bytes())
            .u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            enc.fixed(tx.tx_id.as_bytes());
        }
        enc.u64(self.timestamp);
        Digest::of(&enc.finish())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.u64(self.height)
            .fixed(self.prev_hash.as_bytes())
            .u64(self.timestamp)
            .u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            let mut inner = Encoder::new();
            tx.encode_into(&mut inner);
            enc.bytes(&inner.finish());
        }
        enc.fixed(self.block_hash.as_bytes());
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let height = dec.u64()?;
        let prev_hash = Digest(dec.array()?);
        let timestamp = dec.u64()?;
        let count = dec.u32()? as usize;
        // each encoded transaction is well over 100 bytes
        if count > dec.remaining() / 100 {
            return Err(DecodeError::Invalid(format!("implausible transaction count {count}")));
        }
        let mut transactions = Vec::with_capacity(count);
        for _ in 0..count {
            transactions.push(Transaction::decode(dec.bytes()?)?);
        }
        let block_hash = Digest(dec.array()?);
        dec.finish()?;
        Ok(Block {
            height,
            prev_hash,
            transactions,
            timestamp,
            block_hash,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tx_id_covers_signature_and_fields() {
        let w = Wallet::create(Some(b"tx"));
        let tx = Transaction::signed(&w, Operation::Deposit, Wei(11), vec![], 1);
        assert_eq!(tx.tx_id, tx.compute_id());
        assert!(tx.verify_signature());

        let mut tampered = tx.clone();
        tampered.payload.push(1);
        assert!(!tampered.verify_signature());
        assert_ne!(tampered.compute_id(), tx.tx_id);
    }

    #[test]
    fn sender_must_match_key() {
        let w = Wallet::create(Some(b"tx"));
        let mut tx = Transaction::signed(&w, Operation::AddCustomer, Wei(0), vec![], 1);
        tx.sender = Address([1; 20]);
        assert!(!tx.verify_signature());
    }

    #[test]
    fn block_round_trips_and_rejects_trailing_bytes() {
        let w = Wallet::create(Some(b"blk"));
        let txs = vec![
            Transaction::signed(&w, Operation::Deposit, Wei(50), vec![], 1),
            Transaction::signed(&w, Operation::Withdraw, Wei(0), 7u128.to_be_bytes().to_vec(), 2),
        ];
        let block = Block::new(4, Digest([1; 32]), txs, 1234);
        let bytes = block.encode();
        assert_eq!(Block::decode(&bytes).unwrap(), block);
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(Block::decode(&longer).is_err());
        assert!(Block::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn unknown_operation_tag_fails_decode() {
        let w = Wallet::create(Some(b"tag"));
        let tx = Transaction::signed(&w, Operation::Deposit, Wei(50), vec![], 1);
        let mut bytes = tx.encode();
        bytes[32 + 20 + 32] = 9;
        assert_eq!(
            Transaction::decode(&bytes),
            Err(DecodeError::InvalidTag { what: "operation", tag: 9 })
        );
    }
}
