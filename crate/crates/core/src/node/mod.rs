//! The running node: a single-authority sequencer that checks, executes and
//! seals transactions, the login service, and the HTTP front end.
//!
//! All writes go through one write lock (the sequencer queue). Reads take a
//! shared lock on the last sealed state, so they never see a half-applied
//! block. Every sealed block is appended and synced to the chain file before
//! the call returns.

pub mod api;
pub mod config;
pub mod http;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use ed25519_dalek::SigningKey;
use rand::rngs::OsRng;
use thiserror::Error;

use crate::amount::Wei;
use crate::bankvm::{BankVm, ContractState, KycSubmission, PayloadOpener, Receipt, UserRegistrationData, View, VmError};
use crate::chain::{store, Chain, ChainError, ChainStore, IntegrityReport, Operation, Transaction, TxLocation};
use crate::clock::{Clock, FixedClock, SystemClock};
use crate::kycflow::{validate_kyc, KycHandle, KycToken, NodeKeyOpener, ValidationReport};
use crate::primitives::{Address, Digest};
use crate::wallet::{AuthError, Nonce, NonceRegistry, PublicKey, SessionToken, Signature, TokenError, TokenIssuer, Wallet};

pub use api::OperationMetrics;
pub use config::{ClockSource, NodeConfig};
pub use http::{serve, start, RunningNode};

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("unauthorized: {0}")]
    Unauthorized(String),
    #[error("authentication failed: {0}")]
    Auth(#[from] AuthError),
    #[error("invalid transaction signature")]
    InvalidSignature,
    #[error("stale sequence {sequence}; next is {}", last + 1)]
    StaleSequence { sequence: u64, last: u64 },
    #[error("{}", .0.error_message.as_deref().unwrap_or("reverted"))]
    Reverted(Box<Receipt>),
    #[error("{0}")]
    Validation(ValidationReport),
    #[error("{0}")]
    BadRequest(String),
    #[error("Invalid address")]
    InvalidAddress,
    #[error("{0}")]
    NotFound(String),
    #[error("corrupt chain file: {0}")]
    CorruptChainFile(String),
    #[error("port in use: {0}")]
    PortInUse(String),
    #[error("storage: {0}")]
    Storage(String),
}

impl From<ChainError> for NodeError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::InvalidSignature(_) | ChainError::TxIdMismatch(_) => NodeError::InvalidSignature,
            ChainError::StaleSequence { sequence, last, .. } => NodeError::StaleSequence { sequence, last },
            ChainError::NotFound(id) => NodeError::NotFound(format!("transaction {id} not found")),
            ChainError::CorruptFile(m) => NodeError::CorruptChainFile(m),
            ChainError::Io(e) => NodeError::Storage(e.to_string()),
        }
    }
}

impl From<TokenError> for NodeError {
    fn from(e: TokenError) -> Self {
        NodeError::Unauthorized(e.to_string())
    }
}

#[derive(Debug, Default, Clone)]
struct KycIndex {
    by_token: HashMap<Digest, KycToken>,
    by_tx: HashMap<Digest, KycToken>,
    by_address: HashMap<Address, KycToken>,
}

impl KycIndex {
    fn insert(&mut self, token: KycToken) {
        self.by_token.insert(token.token, token);
        self.by_tx.insert(token.tx_id, token);
        self.by_address.insert(token.subject, token);
    }
}

#[derive(Debug, Default, Clone)]
struct MetricAccumulator {
    count: u64,
    failures: u64,
    total_gas: u64,
    total_elapsed_ms: f64,
    total_fee: Wei,
}

struct NodeState {
    chain: Chain,
    vm: BankVm,
    store: Option<ChainStore>,
    receipts: HashMap<Digest, Receipt>,
    kyc: KycIndex,
    metrics: BTreeMap<Operation, MetricAccumulator>,
}

impl NodeState {
    fn record(&mut self, tx: &Transaction, receipt: &Receipt) {
        if tx.operation == Operation::RegisterKyc && receipt.success {
            self.kyc.insert(KycToken::derive(tx.sender, tx.tx_id));
        }
        let m = self.metrics.entry(tx.operation).or_default();
        m.count += 1;
        if !receipt.success {
            m.failures += 1;
        }
        m.total_gas += receipt.gas_used;
        m.total_elapsed_ms += receipt.elapsed_ms;
        m.total_fee = m.total_fee.checked_add(receipt.network_fee).unwrap_or(Wei(u128::MAX));
        self.receipts.insert(tx.tx_id, receipt.clone());
    }
}

pub struct Node {
    config: NodeConfig,
    clock: Arc<dyn Clock>,
    node_key: SigningKey,
    nonces: NonceRegistry,
    tokens: TokenIssuer,
    state: RwLock<NodeState>,
}

fn load_or_create_key(path: Option<&Path>) -> Result<SigningKey, NodeError> {
    let Some(path) = path else {
        return Ok(SigningKey::generate(&mut OsRng));
    };
    match fs::read(path) {
        Ok(bytes) => Wallet::from_file_bytes(&bytes)
            .map(|w| w.signing_key().clone())
            .map_err(|e| NodeError::Storage(format!("node key {}: {e}", path.display()))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            let wallet = Wallet::create(None);
            wallet
                .save(path)
                .map_err(|e| NodeError::Storage(format!("node key {}: {e}", path.display())))?;
            Ok(wallet.signing_key().clone())
        }
        Err(e) => Err(NodeError::Storage(format!("node key {}: {e}", path.display()))),
    }
}

impl Node {
    /// Loads (or creates) the chain, replays it through a fresh contract and
    /// returns a node ready to sequence.
    pub fn open(config: NodeConfig) -> Result<Node, NodeError> {
        config
            .validate()
            .map_err(|e| NodeError::BadRequest(e.to_string()))?;
        let clock: Arc<dyn Clock> = match config.clock {
            ClockSource::System => Arc::new(SystemClock::new()),
            ClockSource::Fixed(ms) => Arc::new(FixedClock::new(ms)),
        };
        Self::open_with_clock(config, clock)
    }

    pub fn open_with_clock(config: NodeConfig, clock: Arc<dyn Clock>) -> Result<Node, NodeError> {
        let node_key = load_or_create_key(config.resolved_key_file().as_deref())?;
        let (store, chain) = match &config.chain_file {
            Some(path) => {
                let (store, chain) = ChainStore::open(path)?;
                (Some(store), chain)
            }
            None => (None, Chain::genesis()),
        };
        let tokens = TokenIssuer::new(node_key.clone(), config.token_lifetime_secs * 1000);
        let nonces = NonceRegistry::new(config.nonce_lifetime_secs * 1000);
        let vm = Self::fresh_vm(&config, &node_key, Arc::clone(&clock));
        let mut state = NodeState {
            chain: Chain::genesis(),
            vm,
            store,
            receipts: HashMap::new(),
            kyc: KycIndex::default(),
            metrics: BTreeMap::new(),
        };
        for (tx, _) in chain.transactions() {
            let receipt = state.vm.execute(tx);
            state.record(tx, &receipt);
        }
        state.chain = chain;
        Ok(Node {
            config,
            clock,
            node_key,
            nonces,
            tokens,
            state: RwLock::new(state),
        })
    }

    fn fresh_vm(config: &NodeConfig, node_key: &SigningKey, clock: Arc<dyn Clock>) -> BankVm {
        let owner = PublicKey(node_key.verifying_key().to_bytes()).address();
        let opener: Arc<dyn PayloadOpener> = Arc::new(NodeKeyOpener::new(node_key.clone()));
        BankVm::new(owner)
            .with_gas_price(config.gas_price)
            .with_clock(clock)
            .with_opener(opener)
    }

    fn read(&self) -> RwLockReadGuard<'_, NodeState> {
        self.state.read().expect("node state poisoned")
    }

    fn write(&self) -> RwLockWriteGuard<'_, NodeState> {
        self.state.write().expect("node state poisoned")
    }

    pub fn config(&self) -> &NodeConfig {
        &self.config
    }

    pub fn now_millis(&self) -> u64 {
        self.clock.now_millis()
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(self.node_key.verifying_key().to_bytes())
    }

    pub fn gas_price(&self) -> Wei {
        self.config.gas_price
    }

    // --- authentication ---------------------------------------------------

    pub fn issue_nonce(&self, address: Address) -> Nonce {
        self.nonces.issue(address, self.clock.now_millis())
    }

    pub fn verify_login(
        &self,
        address: Address,
        public_key: &PublicKey,
        nonce_value: &[u8; 32],
        signature: &Signature,
    ) -> Result<SessionToken, NodeError> {
        let now = self.clock.now_millis();
        self.nonces.verify(address, public_key, nonce_value, signature, now)?;
        Ok(self.tokens.issue(address, now))
    }

    /// Resolves an encoded session token to its subject.
    pub fn authenticate(&self, token: &str) -> Result<Address, NodeError> {
        Ok(self.tokens.verify_encoded(token, self.clock.now_millis())?)
    }

    // --- sequencing -------------------------------------------------------

    pub fn next_sequence(&self, address: &Address) -> u64 {
        self.read().chain.last_sequence(address) + 1
    }

    /// Checks, executes and seals one transaction. Contract reverts are
    /// still sealed and come back as an unsuccessful receipt.
    pub fn sequence(&self, tx: Transaction) -> Result<Receipt, NodeError> {
        let mut state = self.write();
        self.sequence_locked(&mut state, tx)
    }

    fn sequence_locked(&self, state: &mut NodeState, tx: Transaction) -> Result<Receipt, NodeError> {
        state.chain.check_transaction(&tx)?;
        let receipt = state.vm.execute(&tx);
        let block = state
            .chain
            .append_block(vec![tx.clone()], self.clock.now_millis())?
            .clone();
        if let Some(store) = state.store.as_mut() {
            if let Err(e) = store.append(&block) {
                self.rebuild_from_disk(state)?;
                return Err(NodeError::Storage(e.to_string()));
            }
        }
        state.record(&tx, &receipt);
        Ok(receipt)
    }

    /// After a failed append the in-memory state is ahead of the file;
    /// reload what is durable and replay it.
    fn rebuild_from_disk(&self, state: &mut NodeState) -> Result<(), NodeError> {
        let Some(path) = self.config.chain_file.as_deref() else {
            return Ok(());
        };
        let chain = store::load(path)?;
        let mut vm = Self::fresh_vm(&self.config, &self.node_key, Arc::clone(&self.clock));
        let mut fresh = NodeState {
            chain: Chain::genesis(),
            vm: BankVm::new(Address::ZERO),
            store: state.store.take(),
            receipts: HashMap::new(),
            kyc: KycIndex::default(),
            metrics: BTreeMap::new(),
        };
        let mut receipts = Vec::new();
        for (tx, _) in chain.transactions() {
            receipts.push((tx.clone(), vm.execute(tx)));
        }
        fresh.vm = vm;
        for (tx, r) in &receipts {
            fresh.record(tx, r);
        }
        fresh.chain = chain;
        *state = fresh;
        Ok(())
    }

    /// Authenticated write: the session subject must be the signer.
    pub fn submit(&self, session: &str, tx: Transaction) -> Result<Receipt, NodeError> {
        let subject = self.authenticate(session)?;
        if subject != tx.sender {
            return Err(NodeError::Unauthorized("session does not belong to the signer".into()));
        }
        self.sequence(tx)
    }

    /// Authenticated KYC submission. The sealed payload is opened and
    /// validated before anything is sealed; invalid data never reaches the
    /// ledger.
    pub fn submit_kyc(&self, session: &str, tx: Transaction) -> Result<(Receipt, Option<KycToken>), NodeError> {
        let subject = self.authenticate(session)?;
        if subject != tx.sender {
            return Err(NodeError::Unauthorized("session does not belong to the signer".into()));
        }
        if tx.operation != Operation::RegisterKyc {
            return Err(NodeError::BadRequest("not a KYC transaction".into()));
        }
        let opener = NodeKeyOpener::new(self.node_key.clone());
        let plain = opener
            .open(&tx.public_key, &tx.payload)
            .map_err(|_| NodeError::BadRequest("KYC payload could not be opened".into()))?;
        let submission = KycSubmission::decode(&plain)
            .map_err(|e| NodeError::BadRequest(format!("KYC payload malformed: {e}")))?;
        let report = validate_kyc(&submission.record);
        if !report.ok {
            return Err(NodeError::Validation(report));
        }
        let mut state = self.write();
        let receipt = self.sequence_locked(&mut state, tx.clone())?;
        let token = receipt.success.then(|| KycToken::derive(tx.sender, tx.tx_id));
        Ok((receipt, token))
    }

    // --- reads ------------------------------------------------------------

    pub fn balance(&self, address: &Address) -> View<Wei> {
        self.read().vm.get_balance(address)
    }

    pub fn get_user(&self, address: &Address) -> Result<View<UserRegistrationData>, VmError> {
        self.read().vm.get_user(address)
    }

    /// Resolves a KYC handle and returns the stored record with its token.
    pub fn fetch_kyc(&self, handle: &KycHandle) -> Result<(View<UserRegistrationData>, KycToken), NodeError> {
        let state = self.read();
        let not_found = || NodeError::NotFound("User does not exist".into());
        let token = match handle {
            KycHandle::Token(d) => state.kyc.by_token.get(d),
            KycHandle::TxId(d) => state.kyc.by_tx.get(d),
            KycHandle::Digest(d) => state.kyc.by_token.get(d).or_else(|| state.kyc.by_tx.get(d)),
            KycHandle::Address(a) => {
                if a.is_zero() {
                    return Err(NodeError::InvalidAddress);
                }
                state.kyc.by_address.get(a)
            }
        }
        .copied()
        .ok_or_else(not_found)?;
        let view = state.vm.get_user(&token.subject).map_err(|e| match e {
            VmError::InvalidAddress => NodeError::InvalidAddress,
            _ => not_found(),
        })?;
        Ok((view, token))
    }

    pub fn get_transaction(&self, tx_id: &Digest) -> Result<(Transaction, TxLocation, Option<Receipt>), NodeError> {
        let state = self.read();
        let (tx, loc) = state.chain.get_transaction(tx_id)?;
        Ok((tx.clone(), loc, state.receipts.get(tx_id).cloned()))
    }

    pub fn verify_chain(&self) -> IntegrityReport {
        self.read().chain.verify()
    }

    pub fn chain_len(&self) -> usize {
        self.read().chain.len()
    }

    pub fn genesis_hash(&self) -> Digest {
        self.read().chain.genesis_hash()
    }

    pub fn chain_snapshot(&self) -> Chain {
        self.read().chain.clone()
    }

    pub fn contract_state(&self) -> ContractState {
        self.read().vm.state().clone()
    }

    pub fn metrics(&self) -> Vec<OperationMetrics> {
        self.read()
            .metrics
            .iter()
            .map(|(op, m)| OperationMetrics {
                operation: op.name().to_string(),
                count: m.count,
                failures: m.failures,
                total_gas: m.total_gas,
                mean_gas: m.total_gas as f64 / m.count.max(1) as f64,
                mean_elapsed_ms: m.total_elapsed_ms / m.count.max(1) as f64,
                total_fee: m.total_fee,
            })
            .collect()
    }

    /// Replays the current chain through a brand-new contract instance.
    pub fn replayed_state(&self) -> ContractState {
        let chain = self.chain_snapshot();
        let mut vm = Self::fresh_vm(&self.config, &self.node_key, Arc::clone(&self.clock));
        for (tx, _) in chain.transactions() {
            vm.execute(tx);
        }
        vm.state().clone()
    }

    /// Syncs the chain file. Blocks are already durable once sequenced; this
    /// is for orderly shutdown.
    pub fn flush(&self) -> Result<(), NodeError> {
        if let Some(store) = self.write().store.as_mut() {
            store.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
