//! Request and response bodies of the node's HTTP API (JSON).
//!
//! Amounts are decimal wei strings, keys/signatures/digests are hex, and
//! addresses are `0x`-prefixed hex. Write requests carry the fields of a
//! signed transaction; the node rebuilds the transaction and checks the
//! signature over [`crate::chain::Transaction::signing_bytes`].

use serde::{Deserialize, Serialize};

use crate::amount::Wei;
use crate::bankvm::{EventRecord, Receipt, UserRegistrationData};
use crate::chain::{IntegrityReport, Transaction, TxLocation};
use crate::kycflow::{KycToken, ValidationReport};
use crate::primitives::{Address, Digest};
use crate::wallet::{PublicKey, Signature};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeRequest {
    pub address: Address,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeResponse {
    pub address: Address,
    /// 32 bytes, hex. The wallet signs these raw bytes.
    pub nonce: String,
    pub expires_at: u64,
    pub node_public_key: PublicKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoginRequest {
    pub address: Address,
    pub public_key: PublicKey,
    pub nonce: String,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub subject: Address,
    pub expires_at: u64,
}

/// `POST /bank/customers`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerRequest {
    pub public_key: PublicKey,
    pub sequence: u64,
    pub signature: Signature,
}

/// `POST /bank/deposit` and `POST /bank/withdraw`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmountRequest {
    pub public_key: PublicKey,
    pub sequence: u64,
    pub amount: Wei,
    pub signature: Signature,
}

/// `POST /kyc`; `payload` is the hex of a sealed submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KycRequest {
    pub public_key: PublicKey,
    pub sequence: u64,
    pub payload: String,
    pub signature: Signature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiptBody {
    pub tx_id: Digest,
    pub success: bool,
    pub gas_used: u64,
    pub network_fee: Wei,
    pub elapsed_ms: f64,
    pub events: Vec<EventRecordBody>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecordBody {
    pub tx_id: Digest,
    pub name: String,
    pub args: Vec<String>,
}

impl From<&EventRecord> for EventRecordBody {
    fn from(r: &EventRecord) -> Self {
        EventRecordBody {
            tx_id: r.tx_id,
            name: r.name.as_str().to_string(),
            args: r.args.iter().map(ToString::to_string).collect(),
        }
    }
}

impl From<&Receipt> for ReceiptBody {
    fn from(r: &Receipt) -> Self {
        ReceiptBody {
            tx_id: r.tx_id,
            success: r.success,
            gas_used: r.gas_used,
            network_fee: r.network_fee,
            elapsed_ms: r.elapsed_ms,
            events: r.event_records().iter().map(EventRecordBody::from).collect(),
            error: r.error_message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WriteResponse {
    pub receipt: ReceiptBody,
    pub height: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KycResponse {
    pub receipt: ReceiptBody,
    pub height: u64,
    pub kyc_token: KycToken,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KycRecordResponse {
    pub subject: Address,
    pub tx_id: Digest,
    pub token: Digest,
    pub record: UserRegistrationData,
    pub gas_used: u64,
    pub network_fee: Wei,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceResponse {
    pub address: Address,
    pub balance: Wei,
    pub gas_used: u64,
    pub network_fee: Wei,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TxResponse {
    pub tx: Transaction,
    pub location: TxLocation,
    pub receipt: Option<ReceiptBody>,
}

/// Client-side view of `GET /chain/tx/{id}`; the transaction stays as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TxLookup {
    pub tx: serde_json::Value,
    pub location: LocationBody,
    pub receipt: Option<ReceiptBody>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocationBody {
    pub height: u64,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyResponse {
    pub valid: bool,
    pub blocks_checked: usize,
    pub violation_height: Option<u64>,
    pub violation_reason: Option<String>,
}

impl From<&IntegrityReport> for VerifyResponse {
    fn from(r: &IntegrityReport) -> Self {
        VerifyResponse {
            valid: r.valid,
            blocks_checked: r.blocks_checked,
            violation_height: r.first_violation.map(|v| v.height),
            violation_reason: r.first_violation.map(|v| v.reason.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub node_public_key: PublicKey,
    pub node_address: Address,
    pub gas_price: Wei,
    pub height: u64,
    pub genesis_hash: Digest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResponse {
    pub address: Address,
    pub next_sequence: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationMetrics {
    pub operation: String,
    pub count: u64,
    pub failures: u64,
    pub total_gas: u64,
    pub mean_gas: f64,
    pub mean_elapsed_ms: f64,
    pub total_fee: Wei,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsResponse {
    pub height: u64,
    pub gas_price: Wei,
    pub operations: Vec<OperationMetrics>,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub receipt: Option<ReceiptBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ValidationReport>,
}
