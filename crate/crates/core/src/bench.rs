//! Measurement harness for the six banking functions: per-sample client-side
//! latency, gas used and network fee, with CSV and long-format export.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amount::Wei;
use crate::bankvm::KycSubmission;
use crate::client::{ApiClient, ClientError, Transport};
use crate::kycflow::{sample_record, KycHandle};
use crate::node::{self, NodeConfig};
use crate::wallet::Wallet;

pub const DEFAULT_SAMPLES: u32 = 10;

const FUNDING: Wei = Wei(1_000_000_000_000_000_000);
const STEP: Wei = Wei(10_000_000_000_000_000);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BenchFunction {
    AddCustomer,
    AddKycCustomerData,
    GetKycData,
    DepositEth,
    WithdrawEth,
    GetBankBalance,
}

impl BenchFunction {
    /// Reporting order.
    pub const ALL: [BenchFunction; 6] = [
        BenchFunction::AddCustomer,
        BenchFunction::AddKycCustomerData,
        BenchFunction::GetKycData,
        BenchFunction::DepositEth,
        BenchFunction::WithdrawEth,
        BenchFunction::GetBankBalance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchFunction::AddCustomer => "Add Customer",
            BenchFunction::AddKycCustomerData => "Add KYC Customer Data",
            BenchFunction::GetKycData => "Get KYC Data",
            BenchFunction::DepositEth => "Deposit ETH",
            BenchFunction::WithdrawEth => "Withdraw ETH",
            BenchFunction::GetBankBalance => "Get Bank Balance",
        }
    }

    pub fn is_view(self) -> bool {
        matches!(self, BenchFunction::GetKycData | BenchFunction::GetBankBalance)
    }
}

impl fmt::Display for BenchFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchFunction {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| BenchError::Format(format!("unknown function {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub function: BenchFunction,
    pub sample: u32,
    pub speed_ms: f64,
    pub gas_units: u64,
    pub fee: Wei,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub gas_price: Wei,
    pub rows: Vec<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSummary {
    pub function: BenchFunction,
    pub samples: usize,
    pub mean_speed_ms: f64,
    pub mean_gas: f64,
    /// Mean fee in wei.
    pub mean_fee: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Long,
}

impl FromStr for ExportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "long" => Ok(ExportFormat::Long),
            other => Err(BenchError::Format(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("node unreachable: {0}")]
    NodeUnreachable(String),
    #[error("setup failed: {0}")]
    SetupFailed(String),
    #[error("no rows")]
    Empty,
    #[error("malformed bench file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn setup(what: &str) -> impl FnOnce(ClientError) -> BenchError + '_ {
    move |e| match e {
        ClientError::Connect(m) => BenchError::NodeUnreachable(m),
        e => BenchError::SetupFailed(format!("{what}: {e}")),
    }
}

struct Timed<T> {
    value: T,
    ms: f64,
}

async fn timed<T, F: std::future::Future<Output = T>>(f: F) -> Timed<T> {
    let start = Instant::now();
    let value = f.await;
    Timed {
        value,
        ms: start.elapsed().as_micros() as f64 / 1000.0,
    }
}

fn row(function: BenchFunction, sample: u32, ms: f64, gas_units: u64, fee: Wei) -> MetricsRow {
    MetricsRow {
        function,
        sample,
        speed_ms: ms,
        gas_units,
        fee,
    }
}

/// Runs every function `samples` times, strictly sequentially.
///
/// Add Customer and Add KYC Customer Data use a fresh wallet per sample;
/// deposits and withdrawals share one wallet funded during setup.
pub async fn run_suite<T: Transport>(client: &mut ApiClient<T>, samples: u32) -> Result<BenchReport, BenchError> {
    let gas_price = client.info().await.map_err(setup("node info"))?.gas_price;
    let mut by_function: Vec<Vec<MetricsRow>> = vec![Vec::new(); BenchFunction::ALL.len()];

    let mut handles = Vec::new();
    for i in 1..=samples {
        let wallet = Wallet::create(None);
        client.login(&wallet).await.map_err(setup("login"))?;
        let t = timed(client.add_customer(&wallet)).await;
        let r = t.value.map_err(setup("Add Customer"))?.receipt;
        by_function[0].push(row(BenchFunction::AddCustomer, i, t.ms, r.gas_used, r.network_fee));

        let wallet = Wallet::create(None);
        client.login(&wallet).await.map_err(setup("login"))?;
        let submission = KycSubmission {
            record: sample_record(i),
            id_document: None,
        };
        let t = timed(client.submit_kyc(&wallet, &submission, |_| true)).await;
        let r = t.value.map_err(setup("Add KYC Customer Data"))?;
        handles.push(KycHandle::Token(r.kyc_token.token));
        by_function[1].push(row(BenchFunction::AddKycCustomerData, i, t.ms, r.receipt.gas_used, r.receipt.network_fee));
    }

    for (i, handle) in (1..=samples).zip(&handles) {
        let t = timed(client.get_kyc(handle)).await;
        let r = t.value.map_err(setup("Get KYC Data"))?;
        by_function[2].push(row(BenchFunction::GetKycData, i, t.ms, r.gas_used, r.network_fee));
    }

    let shared = Wallet::create(None);
    client.login(&shared).await.map_err(setup("login"))?;
    client.deposit(&shared, FUNDING).await.map_err(setup("funding deposit"))?;
    for i in 1..=samples {
        let t = timed(client.deposit(&shared, STEP)).await;
        let r = t.value.map_err(setup("Deposit ETH"))?.receipt;
        by_function[3].push(row(BenchFunction::DepositEth, i, t.ms, r.gas_used, r.network_fee));
    }
    for i in 1..=samples {
        let t = timed(client.withdraw(&shared, STEP)).await;
        let r = t.value.map_err(setup("Withdraw ETH"))?.receipt;
        by_function[4].push(row(BenchFunction::WithdrawEth, i, t.ms, r.gas_used, r.network_fee));
    }
    for i in 1..=samples {
        let t = timed(client.balance(shared.address())).await;
        let r = t.value.map_err(setup("Get Bank Balance"))?;
        by_function[5].push(row(BenchFunction::GetBankBalance, i, t.ms, r.gas_used, r.network_fee));
    }

    Ok(BenchReport {
        gas_price,
        rows: by_function.into_iter().flatten().collect(),
    })
}

/// Runs the suite against `endpoint`.
pub async fn run_remote(endpoint: &str, samples: u32) -> Result<BenchReport, BenchError> {
    let mut client = ApiClient::connect(endpoint);
    run_suite(&mut client, samples).await
}

/// Starts a throwaway in-memory node on a local port, benches it, and
/// shuts it down.
pub async fn run_local(samples: u32) -> Result<BenchReport, BenchError> {
    let running = node::start(NodeConfig::ephemeral())
        .await
        .map_err(|e| BenchError::SetupFailed(format!("local node: {e}")))?;
    let result = run_remote(&running.url(), samples).await;
    let _ = running.shutdown().await;
    result
}

pub fn summarize(rows: &[MetricsRow]) -> Result<Vec<FunctionSummary>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::Empty);
    }
    Ok(BenchFunction::ALL
        .into_iter()
        .filter_map(|function| {
            let of: Vec<&MetricsRow> = rows.iter().filter(|r| r.function == function).collect();
            if of.is_empty() {
                return None;
            }
            let n = of.len() as f64;
            Some(FunctionSummary {
                function,
                samples: of.len(),
                mean_speed_ms: of.iter().map(|r| r.speed_ms).sum::<f64>() / n,
                mean_gas: of.iter().map(|r| r.gas_units as f64).sum::<f64>() / n,
                mean_fee: of.iter().map(|r| r.fee.0 as f64).sum::<f64>() / n,
            })
        })
        .collect())
}

const PARAMETERS: [&str; 3] = ["Transaction Speed (ms)", "Cumulative Gas Used (units)", "Network fee (ETH)"];
const SUMMARY_HEADER: [&str; 4] = ["function", "mean_speed_ms", "mean_gas_units", "mean_fee_eth"];
const LONG_HEADER: &str = "# function\tsample\tspeed_ms\tgas_units\tfee_wei";

/// Means rounded to nanoseconds keep float noise out of the table.
fn mean_ms(ms: f64) -> String {
    ((ms * 1e6).round() / 1e6).to_string()
}

fn mean_eth(wei: f64) -> String {
    format!("{:.18}", wei / 1e18)
        .trim_end_matches('0')
        .trim_end_matches('.')
        .to_string()
}

/// Table layout: one line per function × parameter with a column per
/// sample and a mean column, then a blank line and a per-function summary.
pub fn to_csv(rows: &[MetricsRow]) -> Result<String, BenchError> {
    let summary = summarize(rows)?;
    let samples = summary.iter().map(|s| s.samples).max().unwrap_or(0);
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let csv_err = |e: csv::Error| BenchError::Format(e.to_string());

    let mut header = vec!["function".to_string(), "parameter".to_string()];
    header.extend((1..=samples).map(|i| format!("sample_{i}")));
    header.push("mean".into());
    w.write_record(&header).map_err(csv_err)?;

    for s in &summary {
        let mut of: Vec<&MetricsRow> = rows.iter().filter(|r| r.function == s.function).collect();
        of.sort_by_key(|r| r.sample);
        let lines: [(Vec<String>, String); 3] = [
            (of.iter().map(|r| r.speed_ms.to_string()).collect(), mean_ms(s.mean_speed_ms)),
            (of.iter().map(|r| r.gas_units.to_string()).collect(), s.mean_gas.to_string()),
            (of.iter().map(|r| r.fee.to_eth_string()).collect(), mean_eth(s.mean_fee)),
        ];
        for (parameter, (values, mean)) in PARAMETERS.iter().zip(lines) {
            let mut record = vec![s.function.name().to_string(), parameter.to_string()];
            record.extend(values);
            record.resize(samples + 2, String::new());
            record.push(mean);
            w.write_record(&record).map_err(csv_err)?;
        }
    }
    let mut out = String::from_utf8(w.into_inner().map_err(|e| BenchError::Format(e.to_string()))?)
        .expect("csv output is utf-8");

    out.push('\n');
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for s in &summary {
        w.write_record([
            s.function.name().to_string(),
            mean_ms(s.mean_speed_ms),
            s.mean_gas.to_string(),
            mean_eth(s.mean_fee),
        ])
        .map_err(csv_err)?;
    }
    out.push_str(&String::from_utf8(w.into_inner().map_err(|e| BenchError::Format(e.to_string()))?).expect("utf-8"));
    Ok(out)
}

/// One tab-separated line per sample, gnuplot-friendly.
pub fn to_long(rows: &[MetricsRow]) -> String {
    let mut out = String::from(LONG_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.function.name(),
            r.sample,
            r.speed_ms,
            r.gas_units,
            r.fee
        ));
    }
    out
}

fn field<T: FromStr>(value: &str, what: &str) -> Result<T, BenchError> {
    value
        .trim()
        .parse()
        .map_err(|_| BenchError::Format(format!("bad {what} {value:?}")))
}

pub fn from_csv(text: &str) -> Result<Vec<MetricsRow>, BenchError> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = r.records();
    let header = records
        .next()
        .ok_or_else(|| BenchError::Format("empty file".into()))?
        .map_err(|e| BenchError::Format(e.to_string()))?;
    if header.get(0) != Some("function") || header.get(1) != Some("parameter") {
        return Err(BenchError::Format("missing table header".into()));
    }
    let samples = header.len().saturating_sub(3);

    let mut rows: Vec<MetricsRow> = Vec::new();
    for record in records {
        let record = record.map_err(|e| BenchError::Format(e.to_string()))?;
        if record.get(0) == Some(SUMMARY_HEADER[0]) {
            break;
        }
        let function: BenchFunction = field(&record[0], "function")?;
        let parameter = PARAMETERS
            .iter()
            .position(|p| *p == &record[1])
            .ok_or_else(|| BenchError::Format(format!("unknown parameter {:?}", &record[1])))?;
        for i in 0..samples {
            let value = record.get(i + 2).unwrap_or("");
            if value.is_empty() {
                continue;
            }
            let sample = i as u32 + 1;
            let idx = match rows.iter().position(|r| r.function == function && r.sample == sample) {
                Some(idx) => idx,
                None => {
                    rows.push(row(function, sample, 0.0, 0, Wei::ZERO));
                    rows.len() - 1
                }
            };
            let target = &mut rows[idx];
            match parameter {
                0 => target.speed_ms = field(value, "speed")?,
                1 => target.gas_units = field(value, "gas")?,
                _ => target.fee = Wei::parse_eth(value).map_err(|e| BenchError::Format(e.to_string()))?,
            }
        }
    }
    Ok(rows)
}

pub fn from_long(text: &str) -> Result<Vec<MetricsRow>, BenchError> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(BenchError::Format(format!("expected 5 columns: {line:?}")));
            }
            Ok(MetricsRow {
                function: field(cols[0], "function")?,
                sample: field(cols[1], "sample")?,
                speed_ms: field(cols[2], "speed")?,
                gas_units: field(cols[3], "gas")?,
                fee: field(cols[4], "fee")?,
            })
        })
        .collect()
}

pub fn render(rows: &[MetricsRow], format: ExportFormat) -> Result<String, BenchError> {
    match format {
        ExportFormat::Csv => to_csv(rows),
        ExportFormat::Long => Ok(to_long(rows)),
    }
}

pub fn export(rows: &[MetricsRow], path: &Path, format: ExportFormat) -> Result<(), BenchError> {
    fs::write(path, render(rows, format)?)?;
    Ok(())
}

pub fn import(path: &Path, format: ExportFormat) -> Result<Vec<MetricsRow>, BenchError> {
    let text = fs::read_to_string(path)?;
    match format {
        ExportFormat::Csv => from_csv(&text),
        ExportFormat::Long => from_long(&text),
    }
}
