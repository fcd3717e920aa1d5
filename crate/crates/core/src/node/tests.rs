use super::*;
use crate::bankvm::payload::encode_withdraw;
use crate::kycflow::{sample_record, seal_submission};

fn node_at(dir: &Path) -> Node {
    let config = NodeConfig {
        chain_file: Some(dir.join("chain.bin")),
        clock: ClockSource::Fixed(1_700_000_000_000),
        ..NodeConfig::ephemeral()
    };
    Node::open(config).unwrap()
}

fn login(node: &Node, wallet: &Wallet) -> String {
    let nonce = node.issue_nonce(wallet.address());
    node.verify_login(wallet.address(), &wallet.public_key(), &nonce.value, &wallet.sign_nonce(&nonce.value))
        .unwrap()
        .encode()
}

fn tx(node: &Node, wallet: &Wallet, op: Operation, value: u128, payload: Vec<u8>) -> Transaction {
    let seq = node.next_sequence(&wallet.address());
    Transaction::signed(wallet, op, Wei(value), payload, seq)
}

fn kyc_tx(node: &Node, wallet: &Wallet, index: u32) -> Transaction {
    let submission = KycSubmission {
        record: sample_record(index),
        id_document: None,
    };
    let sealed = seal_submission(wallet, &node.public_key(), &submission).unwrap();
    tx(node, wallet, Operation::RegisterKyc, 0, sealed.encode())
}

#[test]
fn restart_rebuilds_identical_state() {
    let dir = tempfile::tempdir().unwrap();
    let alice = Wallet::create(Some(b"alice"));
    let bob = Wallet::create(Some(b"bob"));
    let before = {
        let node = node_at(dir.path());
        for (i, w) in [&alice, &bob].into_iter().enumerate() {
            let s = login(&node, w);
            node.submit_kyc(&s, kyc_tx(&node, w, i as u32)).unwrap();
            node.submit(&s, tx(&node, w, Operation::Deposit, 5_000, vec![])).unwrap();
        }
        let s = login(&node, &alice);
        node.submit(&s, tx(&node, &alice, Operation::Withdraw, 0, encode_withdraw(Wei(1_200))))
            .unwrap();
        node.flush().unwrap();
        node.contract_state()
    };
    let node = node_at(dir.path());
    assert_eq!(node.contract_state(), before);
    assert_eq!(node.balance(&alice.address()).value, Wei(3_800));
    assert_eq!(node.get_user(&bob.address()).unwrap().value, sample_record(1));
    assert!(node.verify_chain().valid);
    let (_, token) = node.fetch_kyc(&KycHandle::Address(alice.address())).unwrap();
    assert!(token.verify());
}

#[test]
fn corrupt_chain_file_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let w = Wallet::create(Some(b"w"));
    {
        let node = node_at(dir.path());
        let s = login(&node, &w);
        node.submit(&s, tx(&node, &w, Operation::Deposit, 100, vec![])).unwrap();
    }
    let path = dir.path().join("chain.bin");
    let mut bytes = fs::read(&path).unwrap();
    let last = bytes.len() - 3;
    bytes[last] ^= 0x10;
    fs::write(&path, bytes).unwrap();
    let config = NodeConfig {
        chain_file: Some(path),
        ..NodeConfig::ephemeral()
    };
    assert!(matches!(Node::open(config), Err(NodeError::CorruptChainFile(_))));
}

#[test]
fn stale_sequence_rejected_without_block() {
    let dir = tempfile::tempdir().unwrap();
    let node = node_at(dir.path());
    let w = Wallet::create(Some(b"w"));
    let s = login(&node, &w);
    let t = tx(&node, &w, Operation::Deposit, 100, vec![]);
    node.submit(&s, t.clone()).unwrap();
    let height = node.chain_len();
    let err = node.submit(&s, t).unwrap_err();
    assert!(matches!(err, NodeError::StaleSequence { sequence: 1, last: 1 }));
    assert_eq!(node.chain_len(), height);
    assert_eq!(node.balance(&w.address()).value, Wei(100));
}

#[test]
fn failing_withdraw_is_sealed_with_receipt() {
    let dir = tempfile::tempdir().unwrap();
    let node = node_at(dir.path());
    let w = Wallet::create(Some(b"w"));
    let s = login(&node, &w);
    node.submit(&s, tx(&node, &w, Operation::Deposit, 100, vec![])).unwrap();
    let r = node
        .submit(&s, tx(&node, &w, Operation::Withdraw, 0, encode_withdraw(Wei(500))))
        .unwrap();
    assert!(!r.success);
    assert_eq!(r.error_message.as_deref(), Some("You do not have sufficient balance"));
    let (_, loc, receipt) = node.get_transaction(&r.tx_id).unwrap();
    assert_eq!(loc.height, 2);
    assert!(!receipt.unwrap().success);
    assert_eq!(node.balance(&w.address()).value, Wei(100));
}

#[test]
fn bad_sessions_change_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let node = node_at(dir.path());
    let w = Wallet::create(Some(b"w"));
    let other = Wallet::create(Some(b"other"));
    let good = login(&node, &w);
    let mut forged = good.clone();
    let flip = if forged.ends_with('0') { "1" } else { "0" };
    forged.replace_range(forged.len() - 1.., flip);
    let t = tx(&node, &w, Operation::Deposit, 100, vec![]);
    for session in ["", "zz", forged.as_str(), login(&node, &other).as_str()] {
        let err = node.submit(session, t.clone()).unwrap_err();
        assert!(matches!(err, NodeError::Unauthorized(_)), "{err:?}");
    }
    assert_eq!(node.chain_len(), 1);

    node_expiry(&node, &w);
}

fn node_expiry(node: &Node, w: &Wallet) {
    let expired = node.tokens.issue(w.address(), 0).encode();
    let err = node.submit(&expired, tx(node, w, Operation::Deposit, 100, vec![])).unwrap_err();
    assert!(matches!(err, NodeError::Unauthorized(_)));
    assert_eq!(node.chain_len(), 1);
}

#[test]
fn login_nonce_single_use() {
    let dir = tempfile::tempdir().unwrap();
    let node = node_at(dir.path());
    let w = Wallet::create(Some(b"w"));
    let nonce = node.issue_nonce(w.address());
    let sig = w.sign_nonce(&nonce.value);
    node.verify_login(w.address(), &w.public_key(), &nonce.value, &sig).unwrap();
    let err = node.verify_login(w.address(), &w.public_key(), &nonce.value, &sig).unwrap_err();
    assert!(matches!(err, NodeError::Auth(AuthError::NonceConsumed)));
}

#[test]
fn invalid_kyc_never_reaches_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let node = node_at(dir.path());
    let w = Wallet::create(Some(b"w"));
    let s = login(&node, &w);
    let mut record = sample_record(0);
    record.email = "nobody".into();
    record.first_name.clear();
    let sealed = seal_submission(&w, &node.public_key(), &KycSubmission { record, id_document: None }).unwrap();
    let t = tx(&node, &w, Operation::RegisterKyc, 0, sealed.encode());
    match node.submit_kyc(&s, t).unwrap_err() {
        NodeError::Validation(report) => assert_eq!(report.failures.len(), 2),
        e => panic!("{e:?}"),
    }
    assert_eq!(node.chain_len(), 1);
}

#[test]
fn duplicate_kyc_reverts_and_is_sealed() {
    let dir = tempfile::tempdir().unwrap();
    let node = node_at(dir.path());
    let w = Wallet::create(Some(b"w"));
    let s = login(&node, &w);
    let (first, token) = node.submit_kyc(&s, kyc_tx(&node, &w, 0)).unwrap();
    assert!(first.success && token.is_some());
    let (second, token) = node.submit_kyc(&s, kyc_tx(&node, &w, 0)).unwrap();
    assert!(!second.success && token.is_none());
    assert_eq!(second.error_message.as_deref(), Some("User is already registered"));
    assert_eq!(node.chain_len(), 3);
}

#[test]
fn kyc_handles_resolve_to_same_record() {
    let dir = tempfile::tempdir().unwrap();
    let node = node_at(dir.path());
    let w = Wallet::create(Some(b"w"));
    let s = login(&node, &w);
    let (_, token) = node.submit_kyc(&s, kyc_tx(&node, &w, 4)).unwrap();
    let token = token.unwrap();
    for handle in [
        KycHandle::Token(token.token),
        KycHandle::TxId(token.tx_id),
        KycHandle::Digest(token.tx_id),
        KycHandle::Address(w.address()),
    ] {
        let (view, t) = node.fetch_kyc(&handle).unwrap();
        assert_eq!(view.value, sample_record(4));
        assert_eq!(view.gas_used, 0);
        assert_eq!(t, token);
    }
    assert!(matches!(
        node.fetch_kyc(&KycHandle::Address(Address::ZERO)),
        Err(NodeError::InvalidAddress)
    ));
    assert!(matches!(
        node.fetch_kyc(&KycHandle::Address(Wallet::create(None).address())),
        Err(NodeError::NotFound(_))
    ));
}

#[test]
fn metrics_track_operations() {
    let node = Node::open(NodeConfig::ephemeral()).unwrap();
    let w = Wallet::create(Some(b"w"));
    let s = login(&node, &w);
    node.submit(&s, tx(&node, &w, Operation::Deposit, 100, vec![])).unwrap();
    node.submit(&s, tx(&node, &w, Operation::Deposit, 1, vec![])).unwrap();
    let m = node.metrics();
    assert_eq!(m.len(), 1);
    assert_eq!((m[0].count, m[0].failures), (2, 1));
    assert_eq!(m[0].total_fee, node.gas_price().checked_mul_gas(m[0].total_gas).unwrap());
}
