//! Challenge-response login: the node issues a nonce, the wallet signs it,
//! the node returns a session token. Replaying the signed nonce fails.
//!
//!     cargo run --example wallet_login

use albank::node::{Node, NodeConfig};
use albank::wallet::Wallet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let node = Node::open(NodeConfig::ephemeral())?;
    let wallet = Wallet::create(None);
    println!("wallet address  {}", wallet.address());
    println!("public key      {}", wallet.public_key());

    let nonce = node.issue_nonce(wallet.address());
    println!("nonce           {} (expires at {} ms)", hex::encode(nonce.value), nonce.expires_at);
    let signature = wallet.sign_nonce(&nonce.value);
    let token = node.verify_login(wallet.address(), &wallet.public_key(), &nonce.value, &signature)?;
    println!("session for     {} until {} ms", token.subject, token.expires_at);

    let encoded = token.encode();
    println!("token resolves  {}", node.authenticate(&encoded)?);

    match node.verify_login(wallet.address(), &wallet.public_key(), &nonce.value, &signature) {
        Ok(_) => println!("replay accepted (unexpected)"),
        Err(e) => println!("replayed nonce  rejected: {e}"),
    }

    let impostor = Wallet::create(None);
    let nonce = node.issue_nonce(wallet.address());
    let forged = impostor.sign_nonce(&nonce.value);
    match node.verify_login(wallet.address(), &impostor.public_key(), &nonce.value, &forged) {
        Ok(_) => println!("impostor accepted (unexpected)"),
        Err(e) => println!("impostor        rejected: {e}"),
    }
    Ok(())
}
