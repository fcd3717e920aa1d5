use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::record::UserRegistrationData;
use crate::amount::Wei;
use crate::primitives::{Address, Digest};

/// Everything the bank contract stores.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ContractState {
    pub owner: Address,
    pub userbalance: BTreeMap<Address, Wei>,
    pub users: BTreeMap<Address, UserRegistrationData>,
    /// Digest of the uploaded ID document, when one accompanied registration.
    pub id_documents: BTreeMap<Address, Digest>,
    pub customers: BTreeSet<Address>,
    pub locked: bool,
    /// Total value held by the contract.
    pub pool: Wei,
}

impl ContractState {
    pub fn new(owner: Address) -> Self {
        ContractState {
            owner,
            ..Default::default()
        }
    }

    pub fn balance_of(&self, who: &Address) -> Wei {
        self.userbalance.get(who).copied().unwrap_or(Wei::ZERO)
    }

    /// Σ userbalance, or `None` on overflow.
    pub fn total_balances(&self) -> Option<Wei> {
        self.userbalance
            .values()
            .try_fold(Wei::ZERO, |acc, v| acc.checked_add(*v))
    }

    /// pool == Σ userbalance and the reentrancy latch is released.
    pub fn is_quiescent_consistent(&self) -> bool {
        !self.locked && self.total_balances() == Some(self.pool)
    }
}
