//! Wei amounts and exact ETH/wei conversion.
//!
//! All on-ledger amounts are integers in wei. Fractional ETH only exists at
//! the edges (CLI input, CSV display) and is converted with scaled integer
//! arithmetic, never through floating point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const WEI_PER_ETH: u128 = 1_000_000_000_000_000_000;
const ETH_DECIMALS: usize = 18;

/// An amount of wei. Serialized as a decimal string to avoid precision loss
/// in JSON consumers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Wei(pub u128);

impl Wei {
    pub const ZERO: Wei = Wei(0);

    pub fn checked_add(self, rhs: Wei) -> Option<Wei> {
        self.0.checked_add(rhs.0).map(Wei)
    }

    pub fn checked_sub(self, rhs: Wei) -> Option<Wei> {
        self.0.checked_sub(rhs.0).map(Wei)
    }

    pub fn checked_mul_gas(self, gas: u64) -> Option<Wei> {
        self.0.checked_mul(gas as u128).map(Wei)
    }

    pub fn from_eth(eth: u64) -> Wei {
        Wei(eth as u128 * WEI_PER_ETH)
    }

    /// Exact decimal ETH rendering with trailing zeros trimmed (`"0.6"`, `"1"`).
    pub fn to_eth_string(self) -> String {
        let whole = self.0 / WEI_PER_ETH;
        let frac = self.0 % WEI_PER_ETH;
        if frac == 0 {
            return whole.to_string();
        }
        let digits = format!("{frac:0width$}", width = ETH_DECIMALS);
        format!("{whole}.{}", digits.trim_end_matches('0'))
    }

    /// Parses a decimal ETH string such as `"0.4"` into wei.
    pub fn parse_eth(text: &str) -> Result<Wei, AmountError> {
        let text = text.trim();
        let (whole, frac) = match text.split_once('.') {
            Some((w, f)) => (w, f),
            None => (text, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(AmountError::Malformed(text.to_string()));
        }
        let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(whole) || !all_digits(frac) {
            return Err(AmountError::Malformed(text.to_string()));
        }
        if frac.len() > ETH_DECIMALS {
            return Err(AmountError::TooPrecise(text.to_string()));
        }
        let whole: u128 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| AmountError::Overflow)?
        };
        let frac_wei: u128 = if frac.is_empty() {
            0
        } else {
            let padded = format!("{frac:0<width$}", width = ETH_DECIMALS);
            padded.parse().map_err(|_| AmountError::Overflow)?
        };
        whole
            .checked_mul(WEI_PER_ETH)
            .and_then(|w| w.checked_add(frac_wei))
            .map(Wei)
            .ok_or(AmountError::Overflow)
    }

    /// Parses an amount with an optional unit suffix: `"10wei"`, `"1eth"`,
    /// `"0.4 eth"`. A bare number is read as wei.
    pub fn parse_with_unit(text: &str) -> Result<Wei, AmountError> {
        let lower = text.trim().to_ascii_lowercase();
        if let Some(eth) = lower.strip_suffix("eth") {
            Wei::parse_eth(eth)
        } else {
            let wei = lower.strip_suffix("wei").unwrap_or(&lower);
            wei.trim().parse()
        }
    }
}

impl fmt::Display for Wei {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmountError {
    #[error("malformed amount {0:?}")]
    Malformed(String),
    #[error("amount {0:?} has more than 18 decimal places")]
    TooPrecise(String),
    #[error("amount overflows 128 bits")]
    Overflow,
}

impl FromStr for Wei {
    type Err = AmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(AmountError::Malformed(s.to_string()));
        }
        s.parse::<u128>().map(Wei).map_err(|_| AmountError::Overflow)
    }
}

impl Serialize for Wei {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Wei {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
