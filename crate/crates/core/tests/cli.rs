use std::path::Path;
use std::process::{Command, Output};

use albank::kycflow::sample_record;
use albank::node::{self, NodeConfig};
use serde_json::Value;

fn albank(endpoint: &str, wallet: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_albank"))
        .env_remove("ALBANK_TOKEN")
        .arg("--endpoint")
        .arg(endpoint)
        .arg("--wallet")
        .arg(wallet)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn machine(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", stderr(o));
    serde_json::from_str(stdout(o).lines().last().unwrap()).unwrap()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn operator_session() {
    let dir = tempfile::tempdir().unwrap();
    let config = NodeConfig {
        chain_file: Some(dir.path().join("chain.bin")),
        ..NodeConfig::ephemeral()
    };
    let running = node::start(config).await.unwrap();
    let url = running.url();
    let wallet = dir.path().join("op.wallet");

    let out = tokio::task::spawn_blocking({
        let (url, wallet, dir) = (url.clone(), wallet.clone(), dir.path().to_path_buf());
        move || {
            let created = machine(&albank(&url, &wallet, &["--machine", "wallet", "new"]));
            let address = created["address"].as_str().unwrap().to_string();
            let shown = machine(&albank(&url, &wallet, &["--machine", "wallet", "show"]));
            assert_eq!(shown["address"], created["address"]);
            assert_eq!(albank(&url, &wallet, &["wallet", "new"]).status.code(), Some(2));

            let login = albank(&url, &wallet, &["--machine", "login"]);
            assert!(login.status.success());
            assert!(!dir.join("op.wallet.token").exists());
            machine(&albank(&url, &wallet, &["--machine", "login", "--save-token"]));
            assert!(dir.join("op.wallet.token").exists());

            let dep = machine(&albank(&url, &wallet, &["--machine", "deposit", "1eth"]));
            assert_eq!(dep["receipt"]["success"], true);
            let bal = machine(&albank(&url, &wallet, &["--machine", "balance"]));
            assert_eq!(bal["balance"], "1000000000000000000");
            assert_eq!(bal["gas_used"], 0);

            let small = albank(&url, &wallet, &["deposit", "10wei"]);
            assert_eq!(small.status.code(), Some(1));
            assert!(stderr(&small).contains("Please deposit at least 10 wei"));

            let over = albank(&url, &wallet, &["withdraw", "2eth"]);
            assert_eq!(over.status.code(), Some(1));
            assert!(stderr(&over).contains("You do not have sufficient balance"));

            let record = dir.join("record.json");
            std::fs::write(&record, serde_json::to_vec(&sample_record(9)).unwrap()).unwrap();
            let kyc = machine(&albank(
                &url,
                &wallet,
                &["--machine", "kyc", "submit", "--file", record.to_str().unwrap(), "--yes"],
            ));
            let token = kyc["kyc_token"]["token"].as_str().unwrap().to_string();
            let again = albank(&url, &wallet, &["kyc", "submit", "--file", record.to_str().unwrap(), "--yes"]);
            assert_eq!(again.status.code(), Some(1));
            assert!(stderr(&again).contains("User is already registered"));

            let got = albank(&url, &wallet, &["kyc", "get", &token]);
            assert!(got.status.success(), "{}", stderr(&got));
            let text = stdout(&got);
            for needle in ["firstName", "Customer0009", "idExpiry", "annualIncome", "address_"] {
                assert!(text.contains(needle), "{needle} missing from\n{text}");
            }
            let got = machine(&albank(&url, &wallet, &["--machine", "kyc", "get", &address]));
            assert_eq!(got["record"].as_object().unwrap().len(), 19);

            let tx_id = dep["receipt"]["tx_id"].as_str().unwrap().to_string();
            let tx = machine(&albank(&url, &wallet, &["--machine", "tx", &tx_id]));
            assert_eq!(tx["location"]["height"], 1);

            let verify = machine(&albank(&url, &wallet, &["--machine", "chain", "verify"]));
            assert_eq!(verify["valid"], true);
            machine(&albank(&url, &wallet, &["--machine", "customer", "add"]))
        }
    })
    .await
    .unwrap();
    assert_eq!(out["receipt"]["success"], true);
    running.shutdown().await.unwrap();

    let chain = dir.path().join("chain.bin");
    let offline = albank("http://unused", &wallet, &["--machine", "chain", "verify", "--file", chain.to_str().unwrap()]);
    assert_eq!(machine(&offline)["blocks_checked"], 7);
}

#[test]
fn unreachable_node_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = albank("http://127.0.0.1:1", &dir.path().join("none"), &["balance", "0x0000000000000000000000000000000000000001"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w");
    assert_eq!(albank("http://x", &w, &["deposit"]).status.code(), Some(2));
    assert_eq!(albank("http://x", &w, &["deposit", "ten"]).status.code(), Some(2));
    assert_eq!(albank("http://x", &w, &["tx", "nothex"]).status.code(), Some(2));
}

#[test]
fn tampered_chain_file_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chain.bin");
    let mut chain = albank::chain::Chain::genesis();
    let w = albank::wallet::Wallet::create(Some(b"t"));
    for seq in 1..=3 {
        let tx = albank::chain::Transaction::signed(&w, albank::chain::Operation::Deposit, albank::amount::Wei(100), vec![], seq);
        chain.append_block(vec![tx], seq * 1000).unwrap();
    }
    let mut bytes = albank::chain::store::encode_file(&chain);
    let n = bytes.len();
    bytes[n - 2] ^= 1;
    std::fs::write(&path, bytes).unwrap();
    let o = albank("http://x", &dir.path().join("w"), &["chain", "verify", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn killed_node_leaves_a_verifiable_chain() {
    use std::io::BufRead;
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.bin");
    let mut child = Command::new(env!("CARGO_BIN_EXE_albank"))
        .args(["--machine", "node", "serve", "--listen", "127.0.0.1:0", "--chain-file"])
        .arg(&chain)
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    std::io::BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let url = serde_json::from_str::<Value>(&line).unwrap()["listening"].as_str().unwrap().to_string();

    let w = albank::wallet::Wallet::create(None);
    let mut client = albank::client::ApiClient::connect(&url);
    client.login(&w).await.unwrap();
    for i in 0..5u128 {
        client.deposit(&w, albank::amount::Wei(1_000 + i)).await.unwrap();
    }
    let _ = client.withdraw(&w, albank::amount::Wei(1)).await.unwrap();
    child.kill().unwrap();
    child.wait().unwrap();

    let loaded = albank::chain::store::load(&chain).unwrap();
    assert!(loaded.verify().valid);
    assert_eq!(loaded.len(), 7);
    let node = albank::node::Node::open(NodeConfig { chain_file: Some(chain), ..NodeConfig::ephemeral() }).unwrap();
    assert_eq!(node.balance(&w.address()).value, albank::amount::Wei(5_000 + 10 - 1));
}
