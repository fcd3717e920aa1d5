//! KYC onboarding end to end against an in-process node: validate, approve,
//! seal, submit, then fetch the record by token as a second institution.
//!
//!     cargo run --example kyc_onboarding

use albank::amount::Wei;
use albank::bankvm::KycSubmission;
use albank::chain::{Operation, Transaction};
use albank::kycflow::{sample_record, seal_submission, validate_kyc, KycHandle};
use albank::node::{Node, NodeConfig};
use albank::primitives::Digest;
use albank::wallet::Wallet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let node = Node::open(NodeConfig::ephemeral())?;
    let wallet = Wallet::create(None);
    let nonce = node.issue_nonce(wallet.address());
    let session = node
        .verify_login(wallet.address(), &wallet.public_key(), &nonce.value, &wallet.sign_nonce(&nonce.value))?
        .encode();

    let mut record = sample_record(7);
    record.email = "not-an-email".into();
    record.dob = "1990-02-30".into();
    let report = validate_kyc(&record);
    println!("validation ok={}:", report.ok);
    for f in &report.failures {
        println!("  {}: {}", f.field, f.message);
    }

    let record = sample_record(7);
    let submission = KycSubmission {
        record: record.clone(),
        id_document: Some(Digest::of(b"scanned passport bytes")),
    };
    let sealed = seal_submission(&wallet, &node.public_key(), &submission)?;
    let payload = sealed.encode();
    let leaks = [&record.first_name, &record.email, &record.id_number]
        .iter()
        .any(|v| payload.windows(v.len()).any(|w| w == v.as_bytes()));
    println!("\nsealed payload: {} bytes, plaintext visible: {leaks}", payload.len());

    let seq = node.next_sequence(&wallet.address());
    let tx = Transaction::signed(&wallet, Operation::RegisterKyc, Wei::ZERO, payload, seq);
    let (receipt, token) = node.submit_kyc(&session, tx)?;
    let token = token.expect("registration succeeded");
    println!("registered: gas {} fee {} wei", receipt.gas_used, receipt.network_fee);
    println!("KYC token {} (verifies: {})", token.token, token.verify());

    let (view, _) = node.fetch_kyc(&KycHandle::Token(token.token))?;
    println!(
        "\nsecond institution fetch: {} {}, {} ({} gas, chain length still {})",
        view.value.first_name,
        view.value.last_name,
        view.value.email,
        view.gas_used,
        node.chain_len()
    );
    Ok(())
}
