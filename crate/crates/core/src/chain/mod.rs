//! Append-only hash-linked ledger.
//!
//! Every block commits to its predecessor's hash; every transaction is signed
//! by its sender and carries a per-sender sequence number that must strictly
//! increase across accepted history. The only way to change a [`Chain`] is
//! [`Chain::append_block`].

mod block;
pub mod store;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::primitives::{Address, Digest};

pub use block::{Block, Operation, Transaction};
pub use store::{ChainStore, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid signature on transaction {0}")]
    InvalidSignature(Digest),
    #[error("transaction id {0} does not match its contents")]
    TxIdMismatch(Digest),
    #[error("stale sequence {sequence} from {sender}: last accepted is {last}")]
    StaleSequence {
        sender: Address,
        sequence: u64,
        last: u64,
    },
    #[error("transaction {0} not found")]
    NotFound(Digest),
    #[error("corrupt chain file: {0}")]
    CorruptFile(String),
    #[error("chain io: {0}")]
    Io(#[from] std::io::Error),
}

/// Position of a transaction: block height and 0-based index in the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TxLocation {
    pub height: u64,
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationReason {
    HeightMismatch,
    LinkMismatch,
    HashMismatch,
    BadSignature,
    SequenceViolation,
}

impl fmt::Display for ViolationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationReason::HeightMismatch => "height-mismatch",
            ViolationReason::LinkMismatch => "link-mismatch",
            ViolationReason::HashMismatch => "hash-mismatch",
            ViolationReason::BadSignature => "bad-signature",
            ViolationReason::SequenceViolation => "sequence-violation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub height: u64,
    pub reason: ViolationReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntegrityReport {
    pub valid: bool,
    pub blocks_checked: usize,
    pub first_violation: Option<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
    tx_index: HashMap<Digest, TxLocation>,
    last_sequence: HashMap<Address, u64>,
}

impl Chain {
    /// A chain holding only the genesis block: height 0, zero parent hash,
    /// no transactions, timestamp 0. Every node shares the same genesis hash.
    pub fn genesis() -> Self {
        Chain {
            blocks: vec![Block::new(0, Digest::ZERO, Vec::new(), 0)],
            tx_index: HashMap::new(),
            last_sequence: HashMap::new(),
        }
    }

    /// Rebuilds a chain from stored blocks, refusing anything that does not
    /// verify.
    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self, ChainError> {
        let report = verify_blocks(&blocks);
        if let Some(v) = report.first_violation {
            return Err(ChainError::CorruptFile(format!(
                "verification failed at height {}: {}",
                v.height, v.reason
            )));
        }
        let mut chain = Chain {
            blocks: Vec::with_capacity(blocks.len()),
            tx_index: HashMap::new(),
            last_sequence: HashMap::new(),
        };
        for block in blocks {
            chain.index_block(&block);
            chain.blocks.push(block);
        }
        Ok(chain)
    }

    fn index_block(&mut self, block: &Block) {
        for (position, tx) in block.transactions.iter().enumerate() {
            self.tx_index.insert(
                tx.tx_id,
                TxLocation {
                    height: block.height,
                    position,
                },
            );
            self.last_sequence.insert(tx.sender, tx.sequence);
        }
    }

    pub fn head(&self) -> &Block {
        self.blocks.last().expect("chain always holds genesis")
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, height: u64) -> Option<&Block> {
        self.blocks.get(height as usize)
    }

    pub fn genesis_hash(&self) -> Digest {
        self.blocks[0].block_hash
    }

    /// Highest accepted sequence number for `sender`, 0 if none.
    pub fn last_sequence(&self, sender: &Address) -> u64 {
        self.last_sequence.get(sender).copied().unwrap_or(0)
    }

    /// Checks a transaction against the current head without appending it.
    pub fn check_transaction(&self, tx: &Transaction) -> Result<(), ChainError> {
        if !tx.verify_signature() {
            return Err(ChainError::InvalidSignature(tx.tx_id));
        }
        if tx.compute_id() != tx.tx_id {
            return Err(ChainError::TxIdMismatch(tx.tx_id));
        }
        let last = self.last_sequence(&tx.sender);
        if tx.sequence <= last || self.tx_index.contains_key(&tx.tx_id) {
            return Err(ChainError::StaleSequence {
                sender: tx.sender,
                sequence: tx.sequence,
                last,
            });
        }
        Ok(())
    }

    /// Seals `transactions` into a new head block stamped with `timestamp`.
    /// Nothing is appended unless every transaction is acceptable.
    pub fn append_block(
        &mut self,
        transactions: Vec<Transaction>,
        timestamp: u64,
    ) -> Result<&Block, ChainError> {
        let mut pending: HashMap<Address, u64> = HashMap::new();
        for tx in &transactions {
            self.check_transaction(tx)?;
            if let Some(&prev) = pending.get(&tx.sender) {
                if tx.sequence <= prev {
                    return Err(ChainError::StaleSequence {
                        sender: tx.sender,
                        sequence: tx.sequence,
                        last: prev,
                    });
                }
            }
            pending.insert(tx.sender, tx.sequence);
        }
        let head = self.head();
        let block = Block::new(head.height + 1, head.block_hash, transactions, timestamp);
        self.index_block(&block);
        self.blocks.push(block);
        Ok(self.head())
    }

    pub fn get_transaction(&self, tx_id: &Digest) -> Result<(&Transaction, TxLocation), ChainError> {
        let loc = *self.tx_index.get(tx_id).ok_or(ChainError::NotFound(*tx_id))?;
        let tx = &self.blocks[loc.height as usize].transactions[loc.position];
        Ok((tx, loc))
    }

    pub fn verify(&self) -> IntegrityReport {
        verify_blocks(&self.blocks)
    }

    pub fn transactions(&self) -> impl Iterator<Item = (&Transaction, TxLocation)> {
        self.blocks.iter().flat_map(|b| {
            b.transactions.iter().enumerate().map(move |(position, tx)| {
                (
                    tx,
                    TxLocation {
                        height: b.height,
                        position,
                    },
                )
            })
        })
    }
}

/// Checks links, hashes, signatures and sequence order, reporting the first
/// violation in height order.
pub fn verify_blocks(blocks: &[Block]) -> IntegrityReport {
    let mut last_sequence: HashMap<Address, u64> = HashMap::new();
    let fail = |height: u64, reason, checked| IntegrityReport {
        valid: false,
        blocks_checked: checked,
        first_violation: Some(Violation { height, reason }),
    };
    for (i, block) in blocks.iter().enumerate() {
        let height = i as u64;
        if block.height != height {
            return fail(height, ViolationReason::HeightMismatch, i);
        }
        let expected_prev = if i == 0 {
            Digest::ZERO
        } else {
            blocks[i - 1].block_hash
        };
        if block.prev_hash != expected_prev {
            return fail(height, ViolationReason::LinkMismatch, i);
        }
        if block.transactions.iter().any(|tx| tx.compute_id() != tx.tx_id)
            || block.compute_hash() != block.block_hash
        {
            return fail(height, ViolationReason::HashMismatch, i);
        }
        if block.transactions.iter().any(|tx| !tx.verify_signature()) {
            return fail(height, ViolationReason::BadSignature, i);
        }
        for tx in &block.transactions {
            let last = last_sequence.entry(tx.sender).or_insert(0);
            if tx.sequence <= *last {
                return fail(height, ViolationReason::SequenceViolation, i);
            }
            *last = tx.sequence;
        }
    }
    IntegrityReport {
        valid: true,
        blocks_checked: blocks.len(),
        first_violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amount::Wei;
    use crate::wallet::Wallet;

    fn deposit(w: &Wallet, seq: u64) -> Transaction {
        Transaction::signed(w, Operation::Deposit, Wei(100 + seq as u128), vec![], seq)
    }

    fn chain_of(n: usize, w: &Wallet) -> Chain {
        let mut chain = Chain::genesis();
        for seq in 1..=n as u64 {
            chain.append_block(vec![deposit(w, seq)], 1_000 + seq).unwrap();
        }
        chain
    }

    #[test]
    fn genesis_shape() {
        let chain = Chain::genesis();
        assert_eq!(chain.len(), 1);
        assert_eq!(chain.head().height, 0);
        assert_eq!(chain.head().prev_hash, Digest::ZERO);
        assert!(chain.head().transactions.is_empty());
        assert!(chain.verify().valid);
    }

    #[test]
    fn append_links_to_previous_head() {
        let w = Wallet::create(Some(b"a"));
        let mut chain = Chain::genesis();
        let prev = chain.head().block_hash;
        let block = chain.append_block(vec![deposit(&w, 1)], 5).unwrap();
        assert_eq!(block.height, 1);
        assert_eq!(block.prev_hash, prev);
        assert_eq!(chain.len(), 2);
    }

    #[test]
    fn tampered_payload_is_invalid_signature() {
        let w = Wallet::create(Some(b"a"));
        let mut chain = Chain::genesis();
        let mut tx = deposit(&w, 1);
        tx.payload = vec![1, 2, 3];
        assert!(matches!(chain.append_block(vec![tx], 1), Err(ChainError::InvalidSignature(_))));
        assert_eq!(chain.len(), 1);
    }

    #[test]
    fn replayed_transaction_is_stale() {
        let w = Wallet::create(Some(b"a"));
        let mut chain = Chain::genesis();
        let tx = deposit(&w, 1);
        chain.append_block(vec![tx.clone()], 1).unwrap();
        assert!(matches!(
            chain.append_block(vec![tx], 2),
            Err(ChainError::StaleSequence { sequence: 1, last: 1, .. })
        ));
        let lower = deposit(&w, 0);
        assert!(matches!(chain.append_block(vec![lower], 2), Err(ChainError::StaleSequence { .. })));
        assert_eq!(chain.len(), 2);
    }

    #[test]
    fn duplicate_sequence_within_one_batch_is_rejected() {
        let w = Wallet::create(Some(b"a"));
        let mut chain = Chain::genesis();
        let err = chain.append_block(vec![deposit(&w, 3), deposit(&w, 2)], 1);
        assert!(matches!(err, Err(ChainError::StaleSequence { .. })));
        assert_eq!(chain.len(), 1);
    }

    #[test]
    fn five_block_chain_verifies() {
        let w = Wallet::create(Some(b"a"));
        assert!(chain_of(4, &w).verify().valid);
        assert_eq!(chain_of(4, &w).len(), 5);
    }

    #[test]
    fn bit_flip_in_block_three_payload_is_hash_mismatch_at_three() {
        let w = Wallet::create(Some(b"a"));
        let chain = chain_of(4, &w);
        let mut blocks = chain.blocks().to_vec();
        blocks[3].transactions[0].value.0 ^= 1;
        let report = verify_blocks(&blocks);
        assert_eq!(
            report.first_violation,
            Some(Violation { height: 3, reason: ViolationReason::HashMismatch })
        );
    }

    #[test]
    fn rehashed_forgery_breaks_the_next_link() {
        let w = Wallet::create(Some(b"a"));
        let forger = Wallet::create(Some(b"forger"));
        let chain = chain_of(4, &w);
        let mut blocks = chain.blocks().to_vec();
        let forged_tx = Transaction::signed(&forger, Operation::Deposit, Wei(10_000), vec![], 1);
        blocks[2] = Block::new(2, blocks[1].block_hash, vec![forged_tx], blocks[2].timestamp);
        let report = verify_blocks(&blocks);
        assert_eq!(
            report.first_violation,
            Some(Violation { height: 3, reason: ViolationReason::LinkMismatch })
        );
    }

    #[test]
    fn lookup_reports_zero_based_position() {
        let a = Wallet::create(Some(b"a"));
        let b = Wallet::create(Some(b"b"));
        let c = Wallet::create(Some(b"c"));
        let mut chain = Chain::genesis();
        chain.append_block(vec![deposit(&a, 1)], 1).unwrap();
        let third = deposit(&c, 1);
        chain
            .append_block(vec![deposit(&a, 2), deposit(&b, 1), third.clone()], 2)
            .unwrap();
        let (tx, loc) = chain.get_transaction(&third.tx_id).unwrap();
        assert_eq!(tx, &third);
        assert_eq!(loc, TxLocation { height: 2, position: 2 });
        assert!(matches!(chain.get_transaction(&Digest([0x5a; 32])), Err(ChainError::NotFound(_))));
    }

    #[test]
    fn fixed_timestamps_give_identical_hashes() {
        let w = Wallet::create(Some(b"det"));
        let txs: Vec<_> = (1..=3).map(|s| deposit(&w, s)).collect();
        let build = || {
            let mut chain = Chain::genesis();
            for tx in &txs {
                chain.append_block(vec![tx.clone()], 42).unwrap();
            }
            chain.head().block_hash
        };
        assert_eq!(build(), build());
    }
}
