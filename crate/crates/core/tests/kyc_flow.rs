use std::sync::Arc;

use albank::amount::Wei;
use albank::bankvm::KycSubmission;
use albank::chain::{Operation, Transaction};
use albank::client::ApiClient;
use albank::kycflow::{sample_record, seal_submission, KycHandle};
use albank::node::{self, Node, NodeConfig};
use albank::wallet::Wallet;

fn session(node: &Node, w: &Wallet) -> String {
    let n = node.issue_nonce(w.address());
    node.verify_login(w.address(), &w.public_key(), &n.value, &w.sign_nonce(&n.value))
        .unwrap()
        .encode()
}

#[test]
fn persisted_ledger_never_holds_plaintext_kyc_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.bin");
    let node = Node::open(NodeConfig {
        chain_file: Some(path.clone()),
        ..NodeConfig::ephemeral()
    })
    .unwrap();
    let mut records = Vec::new();
    for i in 0..5u32 {
        let w = Wallet::create(None);
        let s = session(&node, &w);
        let record = sample_record(1000 + i);
        let sealed = seal_submission(&w, &node.public_key(), &KycSubmission { record: record.clone(), id_document: None }).unwrap();
        let tx = Transaction::signed(&w, Operation::RegisterKyc, Wei::ZERO, sealed.encode(), 1);
        assert!(node.submit_kyc(&s, tx).unwrap().0.success);
        records.push(record);
    }
    node.flush().unwrap();
    let bytes = std::fs::read(&path).unwrap();
    for record in &records {
        for (name, value) in record.text_fields() {
            if value.len() < 4 {
                continue;
            }
            let leaked = bytes.windows(value.len()).any(|w| w == value.as_bytes());
            assert!(!leaked, "{name} = {value:?} found in chain file");
        }
    }
}

#[test]
fn concurrent_submissions_from_one_wallet_accept_exactly_one() {
    let node = Arc::new(Node::open(NodeConfig::ephemeral()).unwrap());
    let w = Arc::new(Wallet::create(None));
    let s = session(&node, &w);
    let handles: Vec<_> = (1..=12u64)
        .map(|seq| {
            let (node, w, s) = (Arc::clone(&node), Arc::clone(&w), s.clone());
            std::thread::spawn(move || {
                let sub = KycSubmission { record: sample_record(seq as u32), id_document: None };
                let sealed = seal_submission(&w, &node.public_key(), &sub).unwrap();
                let tx = Transaction::signed(&w, Operation::RegisterKyc, Wei::ZERO, sealed.encode(), seq);
                node.submit_kyc(&s, tx)
            })
        })
        .collect();
    let accepted = handles
        .into_iter()
        .map(|h| h.join().unwrap())
        .filter(|r| matches!(r, Ok((receipt, Some(_))) if receipt.success))
        .count();
    assert_eq!(accepted, 1);
    let registered = node
        .chain_snapshot()
        .transactions()
        .filter(|(tx, _)| tx.operation == Operation::RegisterKyc)
        .count();
    assert!(registered >= 1);
    assert!(node.get_user(&w.address()).is_ok());
}

#[tokio::test]
async fn second_institution_reuses_record_for_free() {
    let running = node::start(NodeConfig::ephemeral()).await.unwrap();
    let w = Wallet::create(None);
    let mut bank_a = ApiClient::connect(&running.url());
    bank_a.login(&w).await.unwrap();
    let sub = KycSubmission { record: sample_record(3), id_document: None };
    let token = bank_a.submit_kyc(&w, &sub, |_| true).await.unwrap().kyc_token;
    assert!(token.verify());
    let height = running.node.chain_len();

    let bank_b = ApiClient::connect(&running.url());
    let fetched = bank_b.get_kyc(&KycHandle::Token(token.token)).await.unwrap();
    assert_eq!(fetched.record, sample_record(3));
    assert_eq!((fetched.gas_used, fetched.network_fee), (0, Wei::ZERO));
    assert_eq!(fetched.subject, w.address());
    assert_eq!(running.node.chain_len(), height);
    let by_tx = bank_b.get_kyc(&KycHandle::TxId(token.tx_id)).await.unwrap();
    assert_eq!(by_tx.token, token.token);
    running.shutdown().await.unwrap();
}
