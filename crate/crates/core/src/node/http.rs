//! HTTP front end.
//!
//! | method | path                         | auth   | body / response                       |
//! |--------|------------------------------|--------|---------------------------------------|
//! | POST   | `/auth/challenge`            |        | `ChallengeRequest` → `ChallengeResponse` |
//! | POST   | `/auth/login`                |        | `LoginRequest` → `LoginResponse`      |
//! | POST   | `/bank/customers`            | bearer | `CustomerRequest` → `WriteResponse`   |
//! | POST   | `/kyc`                       | bearer | `KycRequest` → `KycResponse`          |
//! | GET    | `/kyc/{handle}`              |        | `KycRecordResponse`                   |
//! | POST   | `/bank/deposit`              | bearer | `AmountRequest` → `WriteResponse`     |
//! | POST   | `/bank/withdraw`             | bearer | `AmountRequest` → `WriteResponse`     |
//! | GET    | `/bank/balance/{address}`    |        | `BalanceResponse`                     |
//! | GET    | `/chain/tx/{tx_id}`          |        | `TxResponse`                          |
//! | GET    | `/chain/verify`              |        | `VerifyResponse`                      |
//! | GET    | `/chain/sequence/{address}`  |        | `SequenceResponse`                    |
//! | GET    | `/node/info`                 |        | `NodeInfo`                            |
//! | GET    | `/metrics`                   |        | `MetricsResponse`                     |
//!
//! Status codes: 401 for missing/expired/forged sessions and failed
//! signatures, 404 for unknown records, 409 for sequence conflicts, 422 for
//! invalid input and contract reverts (the body then carries the sealed
//! receipt), 500 for storage faults.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use super::api::*;
use super::{Node, NodeConfig, NodeError};
use crate::bankvm::payload::encode_withdraw;
use crate::chain::{Operation, Transaction};
use crate::kycflow::KycHandle;
use crate::primitives::{Address, Digest};
use crate::amount::Wei;
use crate::wallet::{PublicKey, Signature};

pub struct ApiError(NodeError);

impl From<NodeError> for ApiError {
    fn from(e: NodeError) -> Self {
        ApiError(e)
    }
}

impl NodeError {
    pub fn status(&self) -> StatusCode {
        match self {
            NodeError::Unauthorized(_) | NodeError::Auth(_) | NodeError::InvalidSignature => StatusCode::UNAUTHORIZED,
            NodeError::StaleSequence { .. } => StatusCode::CONFLICT,
            NodeError::Reverted(_)
            | NodeError::Validation(_)
            | NodeError::BadRequest(_)
            | NodeError::InvalidAddress => StatusCode::UNPROCESSABLE_ENTITY,
            NodeError::NotFound(_) => StatusCode::NOT_FOUND,
            NodeError::CorruptChainFile(_) | NodeError::PortInUse(_) | NodeError::Storage(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NodeError::Unauthorized(_) => "unauthorized",
            NodeError::Auth(_) => "authentication",
            NodeError::InvalidSignature => "invalid-signature",
            NodeError::StaleSequence { .. } => "stale-sequence",
            NodeError::Reverted(_) => "reverted",
            NodeError::Validation(_) => "validation",
            NodeError::BadRequest(_) => "bad-request",
            NodeError::InvalidAddress => "invalid-address",
            NodeError::NotFound(_) => "not-found",
            NodeError::CorruptChainFile(_) => "corrupt-chain",
            NodeError::PortInUse(_) => "port-in-use",
            NodeError::Storage(_) => "storage",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let err = self.0;
        let body = ErrorBody {
            error: err.to_string(),
            kind: err.kind().to_string(),
            receipt: match &err {
                NodeError::Reverted(r) => Some(ReceiptBody::from(r.as_ref())),
                _ => None,
            },
            report: match &err {
                NodeError::Validation(r) => Some(r.clone()),
                _ => None,
            },
        };
        (err.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(NodeError::BadRequest(format!("invalid request body: {e}"))))
}

fn parse_path<T: std::str::FromStr>(raw: &str, what: &str) -> Result<T, ApiError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| ApiError(NodeError::BadRequest(format!("invalid {what}: {e}"))))
}

fn bearer(headers: &HeaderMap) -> Result<String, ApiError> {
    headers
        .get(axum::http::header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(|t| t.trim().to_string())
        .ok_or_else(|| ApiError(NodeError::Unauthorized("missing bearer token".into())))
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, NodeError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(NodeError::Storage(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

fn build_tx(
    public_key: PublicKey,
    operation: Operation,
    value: Wei,
    payload: Vec<u8>,
    sequence: u64,
    signature: Signature,
) -> Transaction {
    Transaction::from_parts(public_key.address(), public_key, operation, value, payload, sequence, signature)
}

fn write_response(node: &Node, receipt: crate::bankvm::Receipt) -> Result<WriteResponse, NodeError> {
    if !receipt.success {
        return Err(NodeError::Reverted(Box::new(receipt)));
    }
    let height = node.get_transaction(&receipt.tx_id)?.1.height;
    Ok(WriteResponse {
        receipt: ReceiptBody::from(&receipt),
        height,
    })
}

async fn challenge(State(node): State<Arc<Node>>, body: Bytes) -> ApiResult<ChallengeResponse> {
    let req: ChallengeRequest = parse_body(&body)?;
    let nonce = node.issue_nonce(req.address);
    Ok(Json(ChallengeResponse {
        address: req.address,
        nonce: hex::encode(nonce.value),
        expires_at: nonce.expires_at,
        node_public_key: node.public_key(),
    }))
}

async fn login(State(node): State<Arc<Node>>, body: Bytes) -> ApiResult<LoginResponse> {
    let req: LoginRequest = parse_body(&body)?;
    let nonce: [u8; 32] = parse_path::<Digest>(&req.nonce, "nonce")?.0;
    let token = node.verify_login(req.address, &req.public_key, &nonce, &req.signature)?;
    Ok(Json(LoginResponse {
        token: token.encode(),
        subject: token.subject,
        expires_at: token.expires_at,
    }))
}

async fn add_customer(State(node): State<Arc<Node>>, headers: HeaderMap, body: Bytes) -> ApiResult<WriteResponse> {
    let session = bearer(&headers)?;
    let req: CustomerRequest = parse_body(&body)?;
    let tx = build_tx(req.public_key, Operation::AddCustomer, Wei::ZERO, Vec::new(), req.sequence, req.signature);
    blocking(move || {
        let receipt = node.submit(&session, tx)?;
        write_response(&node, receipt)
    })
    .await
    .map(Json)
}

async fn deposit(State(node): State<Arc<Node>>, headers: HeaderMap, body: Bytes) -> ApiResult<WriteResponse> {
    let session = bearer(&headers)?;
    let req: AmountRequest = parse_body(&body)?;
    let tx = build_tx(req.public_key, Operation::Deposit, req.amount, Vec::new(), req.sequence, req.signature);
    blocking(move || {
        let receipt = node.submit(&session, tx)?;
        write_response(&node, receipt)
    })
    .await
    .map(Json)
}

async fn withdraw(State(node): State<Arc<Node>>, headers: HeaderMap, body: Bytes) -> ApiResult<WriteResponse> {
    let session = bearer(&headers)?;
    let req: AmountRequest = parse_body(&body)?;
    let tx = build_tx(
        req.public_key,
        Operation::Withdraw,
        Wei::ZERO,
        encode_withdraw(req.amount),
        req.sequence,
        req.signature,
    );
    blocking(move || {
        let receipt = node.submit(&session, tx)?;
        write_response(&node, receipt)
    })
    .await
    .map(Json)
}

async fn submit_kyc(State(node): State<Arc<Node>>, headers: HeaderMap, body: Bytes) -> ApiResult<KycResponse> {
    let session = bearer(&headers)?;
    let req: KycRequest = parse_body(&body)?;
    let payload = hex::decode(&req.payload)
        .map_err(|e| ApiError(NodeError::BadRequest(format!("invalid payload hex: {e}"))))?;
    let tx = build_tx(req.public_key, Operation::RegisterKyc, Wei::ZERO, payload, req.sequence, req.signature);
    blocking(move || {
        let (receipt, token) = node.submit_kyc(&session, tx)?;
        let token = match token {
            Some(t) => t,
            None => return Err(NodeError::Reverted(Box::new(receipt))),
        };
        let written = write_response(&node, receipt)?;
        Ok(KycResponse {
            receipt: written.receipt,
            height: written.height,
            kyc_token: token,
        })
    })
    .await
    .map(Json)
}

async fn get_kyc(State(node): State<Arc<Node>>, Path(handle): Path<String>) -> ApiResult<KycRecordResponse> {
    let handle: KycHandle = parse_path(&handle, "KYC handle")?;
    let (view, token) = node.fetch_kyc(&handle)?;
    Ok(Json(KycRecordResponse {
        subject: token.subject,
        tx_id: token.tx_id,
        token: token.token,
        record: view.value,
        gas_used: view.gas_used,
        network_fee: view.network_fee,
    }))
}

async fn balance(State(node): State<Arc<Node>>, Path(address): Path<String>) -> ApiResult<BalanceResponse> {
    let address: Address = parse_path(&address, "address")?;
    let view = node.balance(&address);
    Ok(Json(BalanceResponse {
        address,
        balance: view.value,
        gas_used: view.gas_used,
        network_fee: view.network_fee,
    }))
}

async fn get_tx(State(node): State<Arc<Node>>, Path(tx_id): Path<String>) -> Result<Response, ApiError> {
    let tx_id: Digest = parse_path(&tx_id, "transaction id")?;
    let (tx, location, receipt) = node.get_transaction(&tx_id)?;
    Ok(Json(TxResponse {
        tx,
        location,
        receipt: receipt.as_ref().map(ReceiptBody::from),
    })
    .into_response())
}

async fn verify(State(node): State<Arc<Node>>) -> ApiResult<VerifyResponse> {
    Ok(Json(VerifyResponse::from(&node.verify_chain())))
}

async fn sequence(State(node): State<Arc<Node>>, Path(address): Path<String>) -> ApiResult<SequenceResponse> {
    let address: Address = parse_path(&address, "address")?;
    Ok(Json(SequenceResponse {
        address,
        next_sequence: node.next_sequence(&address),
    }))
}

async fn info(State(node): State<Arc<Node>>) -> ApiResult<NodeInfo> {
    let public_key = node.public_key();
    Ok(Json(NodeInfo {
        node_public_key: public_key,
        node_address: public_key.address(),
        gas_price: node.gas_price(),
        height: node.chain_len() as u64 - 1,
        genesis_hash: node.genesis_hash(),
    }))
}

async fn metrics(State(node): State<Arc<Node>>) -> ApiResult<MetricsResponse> {
    Ok(Json(MetricsResponse {
        height: node.chain_len() as u64 - 1,
        gas_price: node.gas_price(),
        operations: node.metrics(),
    }))
}

pub fn router(node: Arc<Node>) -> Router {
    Router::new()
        .route("/auth/challenge", post(challenge))
        .route("/auth/login", post(login))
        .route("/bank/customers", post(add_customer))
        .route("/bank/deposit", post(deposit))
        .route("/bank/withdraw", post(withdraw))
        .route("/bank/balance/{address}", get(balance))
        .route("/kyc", post(submit_kyc))
        .route("/kyc/{handle}", get(get_kyc))
        .route("/chain/tx/{tx_id}", get(get_tx))
        .route("/chain/verify", get(verify))
        .route("/chain/sequence/{address}", get(sequence))
        .route("/node/info", get(info))
        .route("/metrics", get(metrics))
        .with_state(node)
}

/// A node serving HTTP in the background.
pub struct RunningNode {
    pub addr: SocketAddr,
    pub node: Arc<Node>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
}

impl RunningNode {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting requests, waits for in-flight ones, and syncs the
    /// chain file.
    pub async fn shutdown(mut self) -> Result<(), NodeError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = (&mut self.task).await;
        self.node.flush()
    }
}

/// Binds `listen` and serves `node` until [`RunningNode::shutdown`].
pub async fn serve(node: Arc<Node>, listen: &str) -> Result<RunningNode, NodeError> {
    let listener = tokio::net::TcpListener::bind(listen).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => NodeError::PortInUse(listen.to_string()),
        _ => NodeError::Storage(format!("bind {listen}: {e}")),
    })?;
    let addr = listener
        .local_addr()
        .map_err(|e| NodeError::Storage(e.to_string()))?;
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(Arc::clone(&node));
    let task = tokio::spawn(async move {
        let result = axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await;
        if let Err(e) = result {
            tracing::error!("http server stopped: {e}");
        }
    });
    tracing::info!(%addr, "node listening");
    Ok(RunningNode {
        addr,
        node,
        shutdown: Some(tx),
        task,
    })
}

/// Opens the chain described by `config` and serves it.
pub async fn start(config: NodeConfig) -> Result<RunningNode, NodeError> {
    let listen = config.listen.clone();
    let node = tokio::task::spawn_blocking(move || Node::open(config))
        .await
        .map_err(|e| NodeError::Storage(e.to_string()))??;
    serve(Arc::new(node), &listen).await
}
