//! Deterministic gas schedule.
//!
//! Gas depends only on the operation's payload size and how many 32-byte
//! storage words it writes, never on timing or host state.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GasSchedule {
    pub base_tx: u64,
    pub word_new: u64,
    pub word_overwrite: u64,
    pub payload_byte: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule {
            base_tx: 21_000,
            word_new: 20_000,
            word_overwrite: 5_000,
            payload_byte: 16,
        }
    }
}

/// Storage writes performed by one call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StorageDelta {
    pub new_words: u64,
    pub overwritten_words: u64,
}

impl GasSchedule {
    pub fn write_cost(&self, payload_len: usize, delta: StorageDelta) -> u64 {
        self.base_tx
            + self.payload_byte * payload_len as u64
            + self.word_new * delta.new_words
            + self.word_overwrite * delta.overwritten_words
    }

    pub fn view_cost(&self) -> u64 {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_is_linear_in_inputs() {
        let s = GasSchedule::default();
        assert_eq!(s.write_cost(0, StorageDelta::default()), 21_000);
        let delta = StorageDelta {
            new_words: 2,
            overwritten_words: 1,
        };
        assert_eq!(s.write_cost(10, delta), 21_000 + 160 + 40_000 + 5_000);
        assert_eq!(s.view_cost(), 0);
    }
}
