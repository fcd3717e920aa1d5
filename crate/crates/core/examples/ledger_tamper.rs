//! Build a small chain, persist it, flip one bit in the file and watch
//! verification point at the damaged block.
//!
//!     cargo run --example ledger_tamper

use albank::amount::Wei;
use albank::chain::{store, Chain, Operation, Transaction};
use albank::wallet::Wallet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alice = Wallet::create(Some(b"alice"));
    let mut chain = Chain::genesis();
    for seq in 1..=5 {
        let tx = Transaction::signed(&alice, Operation::Deposit, Wei(1_000 * seq as u128), vec![], seq);
        chain.append_block(vec![tx], 1_700_000_000_000 + seq * 12_000)?;
    }
    for b in chain.blocks() {
        println!("block {:>2}  {}  prev {}", b.height, b.block_hash, b.prev_hash);
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("chain.bin");
    store::save(&chain, &path)?;
    let report = store::load(&path)?.verify();
    println!("\nuntampered: valid={} blocks_checked={}", report.valid, report.blocks_checked);

    // Edit block 3 in memory without re-sealing it.
    let mut blocks = chain.blocks().to_vec();
    blocks[3].timestamp ^= 1;
    let report = albank::chain::verify_blocks(&blocks);
    let v = report.first_violation.expect("tampering is detected");
    println!("in-memory edit of block 3: valid={} first violation: {} at height {}", report.valid, v.reason, v.height);

    let mut bytes = std::fs::read(&path)?;
    let last = bytes.len() - 10;
    bytes[last] ^= 0x04;
    std::fs::write(&path, &bytes)?;
    match store::load(&path) {
        Ok(c) => println!("file bit flip: valid={}", c.verify().valid),
        Err(e) => println!("file bit flip: refused to load: {e}"),
    }
    Ok(())
}
