//! Run a node with a chain file, drive it over HTTP with the client, then
//! restart it and show that the state is rebuilt from the chain.
//!
//!     cargo run --example node_http

use albank::amount::Wei;
use albank::client::ApiClient;
use albank::node::{self, NodeConfig};
use albank::wallet::Wallet;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let config = NodeConfig {
        chain_file: Some(dir.path().join("chain.bin")),
        ..NodeConfig::ephemeral()
    };

    let running = node::start(config.clone()).await?;
    println!("node at {}", running.url());
    let wallet = Wallet::create(None);
    let mut client = ApiClient::connect(&running.url());
    client.login(&wallet).await?;

    let r = client.deposit(&wallet, Wei::from_eth(1)).await?;
    println!("deposit 1 ETH    -> block {} gas {}", r.height, r.receipt.gas_used);
    let r = client.withdraw(&wallet, Wei::parse_eth("0.4")?).await?;
    println!("withdraw 0.4 ETH -> block {} gas {}", r.height, r.receipt.gas_used);
    match client.deposit(&wallet, Wei(10)).await {
        Ok(_) => println!("tiny deposit accepted (unexpected)"),
        Err(e) => println!("deposit 10 wei   -> {e} (still sealed: tx {})", e.receipt().map(|r| r.tx_id.to_string()).unwrap_or_default()),
    }
    let balance = client.balance(wallet.address()).await?;
    println!("balance          {} ETH", balance.balance.to_eth_string());
    running.shutdown().await?;

    let running = node::start(config).await?;
    let client = ApiClient::connect(&running.url());
    let balance = client.balance(wallet.address()).await?;
    let verify = client.verify().await?;
    println!("\nafter restart: balance {} ETH, chain valid={} ({} blocks)", balance.balance.to_eth_string(), verify.valid, verify.blocks_checked);
    running.shutdown().await?;
    Ok(())
}
