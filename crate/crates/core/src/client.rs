//! Async client for the node's HTTP API.
//!
//! Requests are built as plain [`ApiRequest`] values by the functions in
//! [`requests`] and handed to a [`Transport`], so every front end (CLI,
//! bench, browser shim) emits the same bytes for the same logical action.

use std::future::Future;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::amount::Wei;
use crate::bankvm::payload::encode_withdraw;
use crate::bankvm::{KycSubmission, UserRegistrationData};
use crate::chain::{Operation, Transaction};
use crate::kycflow::{seal_submission, validate_kyc, KycError, KycHandle};
use crate::node::api::*;
use crate::primitives::{Address, Digest};
use crate::wallet::{PublicKey, Wallet};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot reach node: {0}")]
    Connect(String),
    #[error("{}", .body.error)]
    Server { status: u16, body: Box<ErrorBody> },
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error(transparent)]
    Kyc(#[from] KycError),
    #[error("not logged in")]
    NotLoggedIn,
}

impl ClientError {
    pub fn is_connectivity(&self) -> bool {
        matches!(self, ClientError::Connect(_))
    }

    /// The sealed receipt of a reverted transaction, if the node sent one.
    pub fn receipt(&self) -> Option<&ReceiptBody> {
        match self {
            ClientError::Server { body, .. } => body.receipt.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Get,
    Post,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiRequest {
    pub method: Method,
    pub path: String,
    pub bearer: Option<String>,
    pub body: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

pub trait Transport: Send + Sync {
    fn send(&self, request: ApiRequest) -> impl Future<Output = Result<ApiResponse, ClientError>> + Send;
}

/// Request builders. Pure functions of their inputs.
pub mod requests {
    use super::*;

    fn get(path: String) -> ApiRequest {
        ApiRequest {
            method: Method::Get,
            path,
            bearer: None,
            body: None,
        }
    }

    fn post<B: Serialize>(path: &str, bearer: Option<&str>, body: &B) -> ApiRequest {
        ApiRequest {
            method: Method::Post,
            path: path.to_string(),
            bearer: bearer.map(str::to_string),
            body: Some(serde_json::to_vec(body).expect("request bodies serialize")),
        }
    }

    pub fn challenge(address: Address) -> ApiRequest {
        post("/auth/challenge", None, &ChallengeRequest { address })
    }

    pub fn login(wallet: &Wallet, nonce: &[u8; 32]) -> ApiRequest {
        post(
            "/auth/login",
            None,
            &LoginRequest {
                address: wallet.address(),
                public_key: wallet.public_key(),
                nonce: hex::encode(nonce),
                signature: wallet.sign_nonce(nonce),
            },
        )
    }

    pub fn add_customer(token: &str, wallet: &Wallet, sequence: u64) -> ApiRequest {
        let tx = Transaction::signed(wallet, Operation::AddCustomer, Wei::ZERO, Vec::new(), sequence);
        post(
            "/bank/customers",
            Some(token),
            &CustomerRequest {
                public_key: tx.public_key,
                sequence,
                signature: tx.signature,
            },
        )
    }

    pub fn deposit(token: &str, wallet: &Wallet, amount: Wei, sequence: u64) -> ApiRequest {
        let tx = Transaction::signed(wallet, Operation::Deposit, amount, Vec::new(), sequence);
        post(
            "/bank/deposit",
            Some(token),
            &AmountRequest {
                public_key: tx.public_key,
                sequence,
                amount,
                signature: tx.signature,
            },
        )
    }

    pub fn withdraw(token: &str, wallet: &Wallet, amount: Wei, sequence: u64) -> ApiRequest {
        let tx = Transaction::signed(wallet, Operation::Withdraw, Wei::ZERO, encode_withdraw(amount), sequence);
        post(
            "/bank/withdraw",
            Some(token),
            &AmountRequest {
                public_key: tx.public_key,
                sequence,
                amount,
                signature: tx.signature,
            },
        )
    }

    /// `sealed` is an already-encrypted submission.
    pub fn submit_kyc(token: &str, wallet: &Wallet, sealed: Vec<u8>, sequence: u64) -> ApiRequest {
        let payload = hex::encode(&sealed);
        let tx = Transaction::signed(wallet, Operation::RegisterKyc, Wei::ZERO, sealed, sequence);
        post(
            "/kyc",
            Some(token),
            &KycRequest {
                public_key: tx.public_key,
                sequence,
                payload,
                signature: tx.signature,
            },
        )
    }

    pub fn get_kyc(handle: &KycHandle) -> ApiRequest {
        get(format!("/kyc/{handle}"))
    }

    pub fn balance(address: Address) -> ApiRequest {
        get(format!("/bank/balance/{address}"))
    }

    pub fn transaction(tx_id: Digest) -> ApiRequest {
        get(format!("/chain/tx/{tx_id}"))
    }

    pub fn verify() -> ApiRequest {
        get("/chain/verify".into())
    }

    pub fn sequence(address: Address) -> ApiRequest {
        get(format!("/chain/sequence/{address}"))
    }

    pub fn info() -> ApiRequest {
        get("/node/info".into())
    }

    pub fn metrics() -> ApiRequest {
        get("/metrics".into())
    }
}

/// [`Transport`] over HTTP.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    base: String,
    http: reqwest::Client,
}

impl HttpTransport {
    pub fn new(endpoint: &str) -> Self {
        HttpTransport {
            base: endpoint.trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }
}

impl Transport for HttpTransport {
    async fn send(&self, request: ApiRequest) -> Result<ApiResponse, ClientError> {
        let url = format!("{}{}", self.base, request.path);
        let mut builder = match request.method {
            Method::Get => self.http.get(url),
            Method::Post => self.http.post(url),
        };
        if let Some(token) = &request.bearer {
            builder = builder.bearer_auth(token);
        }
        if let Some(body) = request.body {
            builder = builder.header(reqwest::header::CONTENT_TYPE, "application/json").body(body);
        }
        let response = builder.send().await.map_err(|e| ClientError::Connect(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response.bytes().await.map_err(|e| ClientError::Connect(e.to_string()))?;
        Ok(ApiResponse {
            status,
            body: body.to_vec(),
        })
    }
}

/// A wallet-holding session against one node.
pub struct ApiClient<T = HttpTransport> {
    transport: T,
    token: Option<String>,
}

impl ApiClient<HttpTransport> {
    pub fn connect(endpoint: &str) -> Self {
        Self::with_transport(HttpTransport::new(endpoint))
    }
}

impl<T: Transport> ApiClient<T> {
    pub fn with_transport(transport: T) -> Self {
        ApiClient { transport, token: None }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn token(&self) -> Option<&str> {
        self.token.as_deref()
    }

    pub fn set_token(&mut self, token: Option<String>) {
        self.token = token;
    }

    fn session(&self) -> Result<&str, ClientError> {
        self.token.as_deref().ok_or(ClientError::NotLoggedIn)
    }

    async fn call<R: DeserializeOwned>(&self, request: ApiRequest) -> Result<R, ClientError> {
        let response = self.transport.send(request).await?;
        if (200..300).contains(&response.status) {
            return serde_json::from_slice(&response.body).map_err(|e| ClientError::Protocol(e.to_string()));
        }
        let body: ErrorBody = serde_json::from_slice(&response.body).unwrap_or_else(|_| ErrorBody {
            error: String::from_utf8_lossy(&response.body).into_owned(),
            kind: "http".into(),
            receipt: None,
            report: None,
        });
        Err(ClientError::Server {
            status: response.status,
            body: Box::new(body),
        })
    }

    pub async fn info(&self) -> Result<NodeInfo, ClientError> {
        self.call(requests::info()).await
    }

    /// Challenge, sign, log in. Keeps the session token for later writes.
    pub async fn login(&mut self, wallet: &Wallet) -> Result<LoginResponse, ClientError> {
        let challenge: ChallengeResponse = self.call(requests::challenge(wallet.address())).await?;
        let nonce: Digest = challenge
            .nonce
            .parse()
            .map_err(|_| ClientError::Protocol("malformed nonce".into()))?;
        let login: LoginResponse = self.call(requests::login(wallet, &nonce.0)).await?;
        self.token = Some(login.token.clone());
        Ok(login)
    }

    pub async fn next_sequence(&self, address: Address) -> Result<u64, ClientError> {
        let r: SequenceResponse = self.call(requests::sequence(address)).await?;
        Ok(r.next_sequence)
    }

    pub async fn add_customer(&self, wallet: &Wallet) -> Result<WriteResponse, ClientError> {
        let token = self.session()?;
        let seq = self.next_sequence(wallet.address()).await?;
        self.call(requests::add_customer(token, wallet, seq)).await
    }

    pub async fn deposit(&self, wallet: &Wallet, amount: Wei) -> Result<WriteResponse, ClientError> {
        let token = self.session()?;
        let seq = self.next_sequence(wallet.address()).await?;
        self.call(requests::deposit(token, wallet, amount, seq)).await
    }

    pub async fn withdraw(&self, wallet: &Wallet, amount: Wei) -> Result<WriteResponse, ClientError> {
        let token = self.session()?;
        let seq = self.next_sequence(wallet.address()).await?;
        self.call(requests::withdraw(token, wallet, amount, seq)).await
    }

    /// Validates locally, asks `approve` (the wallet's confirmation step),
    /// seals the record for the node and submits it.
    pub async fn submit_kyc<F>(
        &self,
        wallet: &Wallet,
        submission: &KycSubmission,
        approve: F,
    ) -> Result<KycResponse, ClientError>
    where
        F: FnOnce(&UserRegistrationData) -> bool,
    {
        let token = self.session()?;
        let report = validate_kyc(&submission.record);
        if !report.ok {
            return Err(KycError::ValidationFailed(report).into());
        }
        if !approve(&submission.record) {
            return Err(KycError::UserRejected.into());
        }
        let node_pk: PublicKey = self.info().await?.node_public_key;
        let sealed = seal_submission(wallet, &node_pk, submission)?;
        let seq = self.next_sequence(wallet.address()).await?;
        self.call(requests::submit_kyc(token, wallet, sealed.encode(), seq)).await
    }

    pub async fn get_kyc(&self, handle: &KycHandle) -> Result<KycRecordResponse, ClientError> {
        self.call(requests::get_kyc(handle)).await
    }

    pub async fn balance(&self, address: Address) -> Result<BalanceResponse, ClientError> {
        self.call(requests::balance(address)).await
    }

    pub async fn transaction(&self, tx_id: Digest) -> Result<TxLookup, ClientError> {
        self.call(requests::transaction(tx_id)).await
    }

    pub async fn verify(&self) -> Result<VerifyResponse, ClientError> {
        self.call(requests::verify()).await
    }

    pub async fn metrics(&self) -> Result<MetricsResponse, ClientError> {
        self.call(requests::metrics()).await
    }
}
