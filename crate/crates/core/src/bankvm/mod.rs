//! Deterministic execution of the bank + KYC contract.
//!
//! Semantics follow the contract's Solidity source: `registerUser` with its
//! `onlyOnce` guard and twelve required-field checks, `getUser`, a payable
//! `deposit` with a strict `> 10 wei` floor, a `nonReentrant` `withdraw`, and
//! `getbalance`. Every write is metered by [`GasSchedule`]; a failing write
//! is rolled back in full but still reports the gas it burned.

pub mod event;
pub mod gas;
pub mod payload;
pub mod record;
pub mod state;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::amount::Wei;
use crate::chain::{Operation, Transaction};
use crate::clock::{Clock, SystemClock};
use crate::codec::DecodeError;
use crate::primitives::{Address, Digest};
use crate::wallet::PublicKey;

pub use event::{Event, EventArg, EventName, EventRecord};
pub use gas::{GasSchedule, StorageDelta};
pub use payload::KycSubmission;
pub use record::{UserRegistrationData, REQUIRED_FIELDS};
pub use state::ContractState;

pub const MIN_DEPOSIT_EXCLUSIVE: Wei = Wei(10);
/// Default price: 20 gwei per gas unit.
pub const DEFAULT_GAS_PRICE: Wei = Wei(20_000_000_000);

/// Contract reverts and dispatcher failures. `Display` is the exact revert
/// string.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum VmError {
    #[error("{message}")]
    FieldRequired {
        field: &'static str,
        message: &'static str,
    },
    #[error("User is already registered")]
    AlreadyRegistered,
    #[error("Invalid address")]
    InvalidAddress,
    #[error("User does not exist")]
    NoSuchUser,
    #[error("Please deposit at least 10 wei")]
    DepositTooSmall,
    #[error("You do not have sufficient balance")]
    InsufficientBalance,
    #[error("Reentrant call")]
    ReentrantCall,
    #[error("Customer already exists")]
    AlreadyCustomer,
    #[error("Arithmetic overflow")]
    Overflow,
    #[error("Transfer failed: {0}")]
    TransferFailed(String),
    #[error("Unknown operation")]
    UnknownOperation,
    #[error("Malformed call: {0}")]
    DecodeError(String),
}

impl From<DecodeError> for VmError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::InvalidTag { what: "operation", .. } => VmError::UnknownOperation,
            other => VmError::DecodeError(other.to_string()),
        }
    }
}

/// Outcome of one write call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Receipt {
    pub tx_id: Digest,
    pub success: bool,
    pub events: Vec<Event>,
    pub gas_used: u64,
    pub elapsed_ms: f64,
    pub network_fee: Wei,
    pub error_message: Option<String>,
    #[serde(skip)]
    pub error: Option<VmError>,
}

impl Receipt {
    pub fn event_records(&self) -> Vec<EventRecord> {
        self.events.iter().map(|e| EventRecord::new(self.tx_id, e)).collect()
    }

    /// A copy with the timing field zeroed, for comparing replays.
    pub fn without_timing(&self) -> Receipt {
        let mut r = self.clone();
        r.elapsed_ms = 0.0;
        for e in &mut r.events {
            if e.name == EventName::ElapsedTime {
                e.args = vec![EventArg::Uint(0)];
            }
        }
        r
    }
}

/// Result of a read-only call. Views cost nothing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct View<T> {
    pub value: T,
    pub gas_used: u64,
    pub network_fee: Wei,
}

/// Recovers the plaintext of a `RegisterKyc` payload.
pub trait PayloadOpener: Send + Sync {
    fn open(&self, sender: &PublicKey, payload: &[u8]) -> Result<Vec<u8>, String>;
}

/// Treats payloads as already-plaintext submissions.
#[derive(Debug, Default, Clone, Copy)]
pub struct PlaintextPayloads;

impl PayloadOpener for PlaintextPayloads {
    fn open(&self, _sender: &PublicKey, payload: &[u8]) -> Result<Vec<u8>, String> {
        Ok(payload.to_vec())
    }
}

/// Called when `withdraw` sends value to the caller. It may call back into
/// the contract; an `Err` reverts the withdrawal.
pub type TransferHook = Box<dyn FnMut(&mut BankVm, Address, Wei) -> Result<(), String> + Send + Sync>;

struct Frame {
    events: Vec<Event>,
    delta: StorageDelta,
    metering_events: bool,
}

pub struct BankVm {
    state: ContractState,
    schedule: GasSchedule,
    gas_price: Wei,
    clock: Arc<dyn Clock>,
    opener: Arc<dyn PayloadOpener>,
    hook: Option<TransferHook>,
}

impl fmt::Debug for BankVm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BankVm")
            .field("state", &self.state)
            .field("gas_price", &self.gas_price)
            .field("hook", &self.hook.is_some())
            .finish()
    }
}

impl BankVm {
    pub fn new(owner: Address) -> Self {
        BankVm {
            state: ContractState::new(owner),
            schedule: GasSchedule::default(),
            gas_price: DEFAULT_GAS_PRICE,
            clock: Arc::new(SystemClock::new()),
            opener: Arc::new(PlaintextPayloads),
            hook: None,
        }
    }

    pub fn with_gas_price(mut self, gas_price: Wei) -> Self {
        self.gas_price = gas_price;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_opener(mut self, opener: Arc<dyn PayloadOpener>) -> Self {
        self.opener = opener;
        self
    }

    pub fn with_schedule(mut self, schedule: GasSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn state(&self) -> &ContractState {
        &self.state
    }

    pub fn gas_price(&self) -> Wei {
        self.gas_price
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.schedule
    }

    /// Installs (or with `None` removes) the value-transfer hook.
    pub fn set_transfer_hook(&mut self, hook: Option<TransferHook>) {
        self.hook = hook;
    }

    fn fee(&self, gas: u64) -> Wei {
        // gas < 2^64 and price < 2^64 in every config we accept; saturate otherwise
        self.gas_price.checked_mul_gas(gas).unwrap_or(Wei(u128::MAX))
    }

    fn transact<F>(&mut self, tx_id: Digest, payload_len: usize, call: F) -> Receipt
    where
        F: FnOnce(&mut BankVm, &mut Frame) -> Result<(), VmError>,
    {
        let started = self.clock.monotonic_micros();
        let snapshot = self.state.clone();
        let mut frame = Frame {
            events: Vec::new(),
            delta: StorageDelta::default(),
            metering_events: false,
        };
        let outcome = call(self, &mut frame);
        let elapsed_us = self.clock.monotonic_micros().saturating_sub(started);
        let elapsed_ms = elapsed_us as f64 / 1000.0;
        match outcome {
            Ok(()) => {
                let gas_used = self.schedule.write_cost(payload_len, frame.delta);
                if frame.metering_events {
                    frame.events.push(Event::gas_consumption(gas_used));
                    frame.events.push(Event::elapsed_time(elapsed_us / 1000));
                }
                Receipt {
                    tx_id,
                    success: true,
                    events: frame.events,
                    gas_used,
                    elapsed_ms,
                    network_fee: self.fee(gas_used),
                    error_message: None,
                    error: None,
                }
            }
            Err(err) => {
                self.state = snapshot;
                let gas_used = self.schedule.write_cost(payload_len, StorageDelta::default());
                Receipt {
                    tx_id,
                    success: false,
                    events: Vec::new(),
                    gas_used,
                    elapsed_ms,
                    network_fee: self.fee(gas_used),
                    error_message: Some(err.to_string()),
                    error: Some(err),
                }
            }
        }
    }

    /// Enrolls `sender` in the customer roster. No balance effect.
    pub fn add_customer(&mut self, sender: Address) -> Receipt {
        self.add_customer_in(Digest::ZERO, sender, 0)
    }

    fn add_customer_in(&mut self, tx_id: Digest, sender: Address, payload_len: usize) -> Receipt {
        self.transact(tx_id, payload_len, |vm, frame| {
            if !vm.state.customers.insert(sender) {
                return Err(VmError::AlreadyCustomer);
            }
            frame.delta.new_words += 1;
            Ok(())
        })
    }

    pub fn register_user(&mut self, sender: Address, data: UserRegistrationData) -> Receipt {
        let len = data.encode().len() + 1;
        let submission = KycSubmission {
            record: data,
            id_document: None,
        };
        self.register_user_in(Digest::ZERO, sender, submission, len)
    }

    fn register_user_in(
        &mut self,
        tx_id: Digest,
        sender: Address,
        submission: KycSubmission,
        payload_len: usize,
    ) -> Receipt {
        self.transact(tx_id, payload_len, |vm, frame| {
            // onlyOnce
            if vm.state.users.get(&sender).is_some_and(|u| {
                !u.first_name.is_empty() || !u.id_type.is_empty() || !u.id_number.is_empty()
            }) {
                return Err(VmError::AlreadyRegistered);
            }
            let data = submission.record;
            for field in &REQUIRED_FIELDS {
                if (field.get)(&data).is_empty() {
                    return Err(VmError::FieldRequired {
                        field: field.name,
                        message: field.message,
                    });
                }
            }
            frame.delta.new_words += data.storage_words();
            vm.state.users.insert(sender, data);
            if let Some(doc) = submission.id_document {
                frame.delta.new_words += 1;
                vm.state.id_documents.insert(sender, doc);
            }
            frame.events.push(Event::user_registered(sender));
            Ok(())
        })
    }

    pub fn deposit(&mut self, sender: Address, value: Wei) -> Receipt {
        self.deposit_in(Digest::ZERO, sender, value, 0)
    }

    fn deposit_in(&mut self, tx_id: Digest, sender: Address, value: Wei, payload_len: usize) -> Receipt {
        self.transact(tx_id, payload_len, |vm, frame| {
            frame.metering_events = true;
            if value <= MIN_DEPOSIT_EXCLUSIVE {
                return Err(VmError::DepositTooSmall);
            }
            let current = vm.state.balance_of(&sender);
            let updated = current.checked_add(value).ok_or(VmError::Overflow)?;
            let pool = vm.state.pool.checked_add(value).ok_or(VmError::Overflow)?;
            if current == Wei::ZERO {
                frame.delta.new_words += 1;
            } else {
                frame.delta.overwritten_words += 1;
            }
            vm.state.userbalance.insert(sender, updated);
            vm.state.pool = pool;
            frame.events.push(Event::deposit(sender, value));
            Ok(())
        })
    }

    pub fn withdraw(&mut self, sender: Address, amount: Wei) -> Receipt {
        self.withdraw_in(Digest::ZERO, sender, amount, 16)
    }

    fn withdraw_in(&mut self, tx_id: Digest, sender: Address, amount: Wei, payload_len: usize) -> Receipt {
        self.transact(tx_id, payload_len, |vm, frame| {
            frame.metering_events = true;
            // nonReentrant
            if vm.state.locked {
                return Err(VmError::ReentrantCall);
            }
            vm.state.locked = true;
            let balance = vm.state.balance_of(&sender);
            if amount > balance {
                return Err(VmError::InsufficientBalance);
            }
            let remaining = balance.checked_sub(amount).ok_or(VmError::InsufficientBalance)?;
            vm.state.userbalance.insert(sender, remaining);
            vm.state.pool = vm.state.pool.checked_sub(amount).ok_or(VmError::Overflow)?;
            frame.delta.overwritten_words += 1;
            if let Some(mut hook) = vm.hook.take() {
                let sent = hook(vm, sender, amount);
                if vm.hook.is_none() {
                    vm.hook = Some(hook);
                }
                sent.map_err(VmError::TransferFailed)?;
            }
            frame.events.push(Event::withdrawal(sender, amount));
            vm.state.locked = false;
            Ok(())
        })
    }

    /// Looks up a KYC record. Anyone may call this.
    pub fn get_user(&self, queried: &Address) -> Result<View<UserRegistrationData>, VmError> {
        if queried.is_zero() {
            return Err(VmError::InvalidAddress);
        }
        let user = self
            .state
            .users
            .get(queried)
            .filter(|u| u.is_present())
            .ok_or(VmError::NoSuchUser)?;
        Ok(self.view(user.clone()))
    }

    pub fn get_balance(&self, who: &Address) -> View<Wei> {
        self.view(self.state.balance_of(who))
    }

    fn view<T>(&self, value: T) -> View<T> {
        let gas_used = self.schedule.view_cost();
        View {
            value,
            gas_used,
            network_fee: self.fee(gas_used),
        }
    }

    /// Dispatches a signed transaction. Signature and sequence checks are the
    /// sequencer's job; this only decodes and runs the call.
    pub fn execute(&mut self, tx: &Transaction) -> Receipt {
        let len = tx.payload.len();
        let malformed = |vm: &mut BankVm, err: VmError| {
            vm.transact(tx.tx_id, len, move |_, _| Err(err))
        };
        if tx.operation != Operation::Deposit && tx.value != Wei::ZERO {
            let err = VmError::DecodeError(format!("{} does not accept value", tx.operation.name()));
            return malformed(self, err);
        }
        match tx.operation {
            Operation::AddCustomer => {
                if !tx.payload.is_empty() {
                    return malformed(self, VmError::DecodeError("unexpected payload".into()));
                }
                self.add_customer_in(tx.tx_id, tx.sender, len)
            }
            Operation::Deposit => {
                if !tx.payload.is_empty() {
                    return malformed(self, VmError::DecodeError("unexpected payload".into()));
                }
                self.deposit_in(tx.tx_id, tx.sender, tx.value, len)
            }
            Operation::Withdraw => match payload::decode_withdraw(&tx.payload) {
                Ok(amount) => self.withdraw_in(tx.tx_id, tx.sender, amount, len),
                Err(e) => malformed(self, e.into()),
            },
            Operation::RegisterKyc => {
                let submission = self
                    .opener
                    .open(&tx.public_key, &tx.payload)
                    .map_err(VmError::DecodeError)
                    .and_then(|plain| KycSubmission::decode(&plain).map_err(VmError::from));
                match submission {
                    Ok(s) => self.register_user_in(tx.tx_id, tx.sender, s, len),
                    Err(e) => malformed(self, e),
                }
            }
        }
    }

    /// Decodes and executes a canonically encoded transaction.
    pub fn execute_encoded(&mut self, bytes: &[u8]) -> Receipt {
        match Transaction::decode(bytes) {
            Ok(tx) => self.execute(&tx),
            Err(e) => {
                let err = VmError::from(e);
                self.transact(Digest::ZERO, bytes.len(), move |_, _| Err(err))
            }
        }
    }
}

#[cfg(test)]
mod tests;
