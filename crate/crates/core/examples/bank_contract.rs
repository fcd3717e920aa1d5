//! The bank contract on its own: deposits, withdrawals, guard messages, gas
//! and fees, and the free views.
//!
//!     cargo run --example bank_contract

use albank::amount::Wei;
use albank::bankvm::{BankVm, Receipt};
use albank::wallet::Wallet;

fn show(label: &str, r: &Receipt) {
    let outcome = match &r.error_message {
        None => "ok".to_string(),
        Some(m) => format!("reverted: {m}"),
    };
    println!("{label:<28} gas {:>6}  fee {:>22} wei  {outcome}", r.gas_used, r.network_fee);
    for e in r.event_records() {
        let args: Vec<String> = e.args.iter().map(ToString::to_string).collect();
        println!("{:<30}event {}({})", "", e.name.as_str(), args.join(", "));
    }
}

fn main() {
    let owner = Wallet::create(Some(b"owner")).address();
    let alice = Wallet::create(Some(b"alice")).address();
    let mut vm = BankVm::new(owner);

    show("add customer", &vm.add_customer(alice));
    show("add customer again", &vm.add_customer(alice));
    show("deposit 10 wei", &vm.deposit(alice, Wei(10)));
    show("deposit 1 ETH", &vm.deposit(alice, Wei::from_eth(1)));
    show("deposit 0.5 ETH", &vm.deposit(alice, Wei::parse_eth("0.5").unwrap()));
    show("withdraw 2 ETH", &vm.withdraw(alice, Wei::from_eth(2)));
    show("withdraw 0.4 ETH", &vm.withdraw(alice, Wei::parse_eth("0.4").unwrap()));
    show("register KYC", &vm.register_user(alice, albank::kycflow::sample_record(1)));
    show("register KYC again", &vm.register_user(alice, albank::kycflow::sample_record(1)));

    let balance = vm.get_balance(&alice);
    println!("\nbalance {} ETH (gas {}, fee {})", balance.value.to_eth_string(), balance.gas_used, balance.network_fee);
    let user = vm.get_user(&alice).unwrap();
    println!("getUser {} {} (gas {})", user.value.first_name, user.value.last_name, user.gas_used);
    println!("getUser of a stranger: {}", vm.get_user(&owner).unwrap_err());
    let total = vm.state().total_balances().expect("no overflow at this scale");
    println!("pool {} == sum of balances {}", vm.state().pool, total);
}
