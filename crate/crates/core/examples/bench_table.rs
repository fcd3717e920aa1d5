//! Measure the six banking functions against a throwaway local node and
//! print the per-sample table and the per-function means.
//!
//!     cargo run --example bench_table -- [SAMPLES]

use albank::bench;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let samples = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(bench::DEFAULT_SAMPLES);
    let report = bench::run_local(samples).await?;
    print!("{}", bench::to_csv(&report.rows)?);

    println!("\ngas price {} wei", report.gas_price);
    println!("{:<24} {:>12} {:>12} {:>22}", "function", "mean ms", "mean gas", "mean fee (ETH)");
    for s in bench::summarize(&report.rows)? {
        println!(
            "{:<24} {:>12.3} {:>12.0} {:>22.9}",
            s.function.name(),
            s.mean_speed_ms,
            s.mean_gas,
            s.mean_fee / 1e18
        );
    }
    Ok(())
}
