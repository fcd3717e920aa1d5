//! The `albank` command line: a thin shim over [`crate::client`] plus node
//! hosting and the bench harness.
//!
//! Exit codes: 0 success, 1 failure reported by the node (or a local
//! validation/IO failure), 2 usage error, 3 node unreachable.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::amount::Wei;
use crate::bankvm::{KycSubmission, UserRegistrationData};
use crate::bench::{self, ExportFormat};
use crate::chain::store;
use crate::client::{ApiClient, ClientError, Transport};
use crate::kycflow::KycHandle;
use crate::node::api::VerifyResponse;
use crate::node::{self, NodeConfig};
use crate::primitives::{Address, Digest};
use crate::wallet::{SessionToken, Wallet};

pub const DEFAULT_ENDPOINT: &str = "http://127.0.0.1:8545";
pub const DEFAULT_WALLET: &str = "albank.wallet";

#[derive(Debug, Parser)]
#[command(name = "albank", version, about = "Desk-scale bank node and client")]
pub struct Cli {
    /// Node API base URL.
    #[arg(long, global = true, env = "ALBANK_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Wallet file.
    #[arg(long, global = true, env = "ALBANK_WALLET", default_value = DEFAULT_WALLET)]
    pub wallet: PathBuf,
    /// Session token to use instead of logging in.
    #[arg(long, global = true, env = "ALBANK_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// One JSON record per line instead of human-readable output.
    #[arg(long, global = true)]
    pub machine: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a node.
    #[command(subcommand)]
    Node(NodeCommand),
    #[command(subcommand)]
    Wallet(WalletCommand),
    /// Log in and print the session token.
    Login {
        /// Store the token next to the wallet (plaintext, mode 0600).
        #[arg(long)]
        save_token: bool,
    },
    #[command(subcommand)]
    Customer(CustomerCommand),
    #[command(subcommand)]
    Kyc(KycCommand),
    /// Deposit an amount such as `100`, `250wei` or `0.5eth`.
    Deposit { amount: String },
    /// Withdraw an amount such as `100`, `250wei` or `0.5eth`.
    Withdraw { amount: String },
    /// Balance of ADDRESS (default: the wallet's).
    Balance { address: Option<Address> },
    /// Look up a transaction by id.
    Tx { tx_id: Digest },
    #[command(subcommand)]
    Chain(ChainCommand),
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Subcommand)]
pub enum NodeCommand {
    /// Serve the API until interrupted.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        listen: Option<String>,
        #[arg(long)]
        chain_file: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum WalletCommand {
    /// Create a wallet file.
    New {
        /// Overwrite an existing wallet.
        #[arg(long)]
        force: bool,
    },
    /// Print the wallet's address and public key.
    Show,
}

#[derive(Debug, Subcommand)]
pub enum CustomerCommand {
    /// Register the wallet as a bank customer.
    Add,
}

#[derive(Debug, Subcommand)]
pub enum KycCommand {
    /// Submit a KYC record (JSON) for the wallet.
    Submit {
        #[arg(long)]
        file: PathBuf,
        /// ID document; only its SHA-256 digest is submitted.
        #[arg(long)]
        id_file: Option<PathBuf>,
        /// Approve without prompting.
        #[arg(long, short)]
        yes: bool,
    },
    /// Fetch a record by token, tx id or address.
    Get { handle: KycHandle },
}

#[derive(Debug, Subcommand)]
pub enum ChainCommand {
    /// Verify the node's chain, or a chain file with --file.
    Verify {
        #[arg(long)]
        file: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Measure the six banking functions. Without an endpoint a temporary
    /// local node is used.
    Run {
        #[arg(long, default_value_t = bench::DEFAULT_SAMPLES)]
        samples: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv", value_parser = ["csv", "long"])]
        format: String,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Unreachable(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Unreachable(_) => 3,
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Connect(m) => CliError::Unreachable(format!("cannot reach node: {m}")),
            e => CliError::Failed(e.to_string()),
        }
    }
}

impl From<bench::BenchError> for CliError {
    fn from(e: bench::BenchError) -> Self {
        match e {
            bench::BenchError::NodeUnreachable(m) => CliError::Unreachable(format!("cannot reach node: {m}")),
            e => CliError::Failed(e.to_string()),
        }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// Human or machine rendering of JSON values.
pub struct Output<'a> {
    machine: bool,
    out: &'a mut dyn Write,
}

impl<'a> Output<'a> {
    pub fn new(machine: bool, out: &'a mut dyn Write) -> Self {
        Output { machine, out }
    }

    pub fn emit<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let value = serde_json::to_value(value).map_err(failed)?;
        let text = if self.machine {
            format!("{}\n", serde_json::to_string(&value).map_err(failed)?)
        } else {
            human(&value, 0)
        };
        self.out.write_all(text.as_bytes()).map_err(failed)
    }

    pub fn text(&mut self, line: &str) -> Result<(), CliError> {
        if self.machine {
            return Ok(());
        }
        writeln!(self.out, "{line}").map_err(failed)
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn human(value: &Value, indent: usize) -> String {
    let pad = " ".repeat(indent);
    match value {
        Value::Object(map) => {
            let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
            let mut out = String::new();
            for (k, v) in map {
                match v {
                    Value::Object(_) => out.push_str(&format!("{pad}{k}:\n{}", human(v, indent + 2))),
                    Value::Array(items) if items.iter().any(|i| i.is_object()) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        for item in items {
                            out.push_str(&format!("{pad}  -\n{}", human(item, indent + 4)));
                        }
                    }
                    Value::Array(items) => {
                        let joined: Vec<String> = items.iter().map(scalar).collect();
                        out.push_str(&format!("{pad}{k:<width$}  {}\n", joined.join(", ")));
                    }
                    v => out.push_str(&format!("{pad}{k:<width$}  {}\n", scalar(v))),
                }
            }
            out
        }
        other => format!("{pad}{}\n", scalar(other)),
    }
}

fn token_path(wallet: &Path) -> PathBuf {
    let mut name = wallet.as_os_str().to_owned();
    name.push(".token");
    PathBuf::from(name)
}

fn load_wallet(path: &Path) -> Result<Wallet, CliError> {
    Wallet::load(path).map_err(|e| failed(format!("wallet {}: {e}", path.display())))
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn saved_token(wallet: &Path) -> Option<String> {
    let text = fs::read_to_string(token_path(wallet)).ok()?;
    let text = text.trim().to_string();
    let token = SessionToken::decode(&text).ok()?;
    (token.expires_at > now_millis()).then_some(text)
}

fn parse_amount(text: &str) -> Result<Wei, CliError> {
    Wei::parse_with_unit(text).map_err(|e| CliError::Usage(format!("invalid amount {text:?}: {e}")))
}

/// Uses `--token`, then a saved unexpired token, then a fresh login.
async fn ensure_session<T: Transport>(cli: &Cli, client: &mut ApiClient<T>, wallet: &Wallet) -> Result<(), CliError> {
    if let Some(token) = cli.token.clone().or_else(|| saved_token(&cli.wallet)) {
        client.set_token(Some(token));
        return Ok(());
    }
    client.login(wallet).await?;
    Ok(())
}

fn read_record(path: &Path) -> Result<UserRegistrationData, CliError> {
    let text = fs::read_to_string(path).map_err(|e| failed(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| failed(format!("{}: not a KYC record: {e}", path.display())))
}

fn confirm(record: &UserRegistrationData) -> bool {
    let mut err = io::stderr();
    let _ = writeln!(err, "Submitting KYC record for {} {}.", record.first_name, record.last_name);
    let _ = write!(err, "Approve? [y/N] ");
    let _ = err.flush();
    let mut line = String::new();
    if io::stdin().lock().read_line(&mut line).is_err() {
        return false;
    }
    matches!(line.trim(), "y" | "Y" | "yes")
}

/// Runs a networked command through `client`.
pub async fn dispatch<T: Transport>(cli: &Cli, client: &mut ApiClient<T>, out: &mut Output<'_>) -> Result<(), CliError> {
    match &cli.command {
        Command::Login { save_token } => {
            let wallet = load_wallet(&cli.wallet)?;
            let login = client.login(&wallet).await?;
            if *save_token {
                let path = token_path(&cli.wallet);
                crate::wallet::write_private(&path, login.token.as_bytes()).map_err(failed)?;
            }
            out.emit(&login)
        }
        Command::Customer(CustomerCommand::Add) => {
            let wallet = load_wallet(&cli.wallet)?;
            ensure_session(cli, client, &wallet).await?;
            out.emit(&client.add_customer(&wallet).await?)
        }
        Command::Kyc(KycCommand::Submit { file, id_file, yes }) => {
            let wallet = load_wallet(&cli.wallet)?;
            let record = read_record(file)?;
            let id_document = match id_file {
                Some(p) => Some(Digest::of(&fs::read(p).map_err(|e| failed(format!("{}: {e}", p.display())))?)),
                None => None,
            };
            let submission = KycSubmission { record, id_document };
            ensure_session(cli, client, &wallet).await?;
            let approve = *yes;
            let response = client
                .submit_kyc(&wallet, &submission, |r| approve || confirm(r))
                .await?;
            out.emit(&response)
        }
        Command::Kyc(KycCommand::Get { handle }) => out.emit(&client.get_kyc(handle).await?),
        Command::Deposit { amount } => {
            let amount = parse_amount(amount)?;
            let wallet = load_wallet(&cli.wallet)?;
            ensure_session(cli, client, &wallet).await?;
            out.emit(&client.deposit(&wallet, amount).await?)
        }
        Command::Withdraw { amount } => {
            let amount = parse_amount(amount)?;
            let wallet = load_wallet(&cli.wallet)?;
            ensure_session(cli, client, &wallet).await?;
            out.emit(&client.withdraw(&wallet, amount).await?)
        }
        Command::Balance { address } => {
            let address = match address {
                Some(a) => *a,
                None => load_wallet(&cli.wallet)?.address(),
            };
            out.emit(&client.balance(address).await?)
        }
        Command::Tx { tx_id } => out.emit(&client.transaction(*tx_id).await?),
        Command::Chain(ChainCommand::Verify { file: None }) => {
            let report = client.verify().await?;
            out.emit(&report)?;
            verified(&report)
        }
        _ => Err(CliError::Usage("not a networked command".into())),
    }
}

fn verified(report: &VerifyResponse) -> Result<(), CliError> {
    if report.valid {
        return Ok(());
    }
    Err(CliError::Failed(format!(
        "chain invalid: {} at height {}",
        report.violation_reason.as_deref().unwrap_or("unknown"),
        report.violation_height.unwrap_or(0)
    )))
}

fn wallet_command(cli: &Cli, cmd: &WalletCommand, out: &mut Output<'_>) -> Result<(), CliError> {
    let wallet = match cmd {
        WalletCommand::New { force } => {
            if cli.wallet.exists() && !force {
                return Err(CliError::Usage(format!(
                    "{} already exists (use --force to overwrite)",
                    cli.wallet.display()
                )));
            }
            let wallet = Wallet::create(None);
            wallet.save(&cli.wallet).map_err(failed)?;
            wallet
        }
        WalletCommand::Show => load_wallet(&cli.wallet)?,
    };
    out.emit(&json!({
        "address": wallet.address(),
        "public_key": wallet.public_key(),
        "file": cli.wallet.display().to_string(),
    }))
}

async fn serve(config: Option<&Path>, listen: Option<&String>, chain_file: Option<&PathBuf>, out: &mut Output<'_>) -> Result<(), CliError> {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(io::stderr).try_init();
    let mut cfg = match config {
        Some(p) => NodeConfig::from_file(p).map_err(|e| CliError::Usage(e.to_string()))?,
        None => NodeConfig::default(),
    };
    cfg = cfg
        .with_env(|k| std::env::var(k).ok())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(l) = listen {
        cfg.listen = l.clone();
    }
    if let Some(c) = chain_file {
        cfg.chain_file = Some(c.clone());
    }
    let running = node::start(cfg).await.map_err(failed)?;
    out.emit(&json!({ "listening": running.url(), "height": running.node.chain_len() - 1 }))?;
    out.out.flush().map_err(failed)?;
    let _ = tokio::signal::ctrl_c().await;
    running.shutdown().await.map_err(failed)
}

async fn run_bench(cli: &Cli, samples: u32, out_file: Option<&Path>, format: &str, out: &mut Output<'_>) -> Result<(), CliError> {
    let format: ExportFormat = format.parse().map_err(|e: bench::BenchError| CliError::Usage(e.to_string()))?;
    if samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let report = match &cli.endpoint {
        Some(endpoint) => bench::run_remote(endpoint, samples).await?,
        None => bench::run_local(samples).await?,
    };
    let text = bench::render(&report.rows, format)?;
    match out_file {
        Some(path) => {
            fs::write(path, &text).map_err(|e| failed(format!("{}: {e}", path.display())))?;
            if out.machine {
                for row in &report.rows {
                    out.emit(row)?;
                }
                Ok(())
            } else {
                out.text(&format!("wrote {} rows to {}", report.rows.len(), path.display()))
            }
        }
        None if out.machine => {
            for row in &report.rows {
                out.emit(row)?;
            }
            Ok(())
        }
        None => out.out.write_all(text.as_bytes()).map_err(failed),
    }
}

/// Executes a parsed command line.
pub async fn execute(cli: &Cli, out: &mut Output<'_>) -> Result<(), CliError> {
    match &cli.command {
        Command::Node(NodeCommand::Serve { config, listen, chain_file }) => {
            serve(config.as_deref(), listen.as_ref(), chain_file.as_ref(), out).await
        }
        Command::Wallet(cmd) => wallet_command(cli, cmd, out),
        Command::Chain(ChainCommand::Verify { file: Some(path) }) => {
            let report = match store::load(path) {
                Ok(chain) => VerifyResponse::from(&chain.verify()),
                Err(crate::chain::ChainError::Io(e)) => return Err(failed(format!("{}: {e}", path.display()))),
                Err(e) => return Err(failed(e)),
            };
            out.emit(&report)?;
            verified(&report)
        }
        Command::Bench(BenchCommand::Run { samples, out: file, format }) => {
            run_bench(cli, *samples, file.as_deref(), format, out).await
        }
        _ => {
            let endpoint = cli.endpoint.as_deref().unwrap_or(DEFAULT_ENDPOINT);
            let mut client = ApiClient::connect(endpoint);
            dispatch(cli, &mut client, out).await
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    let mut out = Output::new(cli.machine, &mut lock);
    match runtime.block_on(execute(&cli, &mut out)) {
        Ok(()) => 0,
        Err(e) => {
            if cli.machine {
                let _ = writeln!(lock, "{}", json!({ "error": e.to_string(), "exit_code": e.exit_code() }));
            }
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
