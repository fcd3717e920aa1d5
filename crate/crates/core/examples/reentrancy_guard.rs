//! A malicious receiver tries to withdraw again while its first withdrawal
//! is still paying out. The lock rejects the nested call.
//!
//!     cargo run --example reentrancy_guard

use albank::amount::Wei;
use albank::bankvm::BankVm;
use albank::wallet::Wallet;

fn main() {
    let attacker = Wallet::create(Some(b"mallory")).address();
    let honest = Wallet::create(Some(b"honest")).address();
    let mut vm = BankVm::new(Wallet::create(Some(b"owner")).address());
    vm.deposit(attacker, Wei(1_000));
    vm.deposit(honest, Wei(9_000));

    vm.set_transfer_hook(Some(Box::new(|vm: &mut BankVm, who, amount| {
        for attempt in 1..=3 {
            let nested = vm.withdraw(who, amount);
            println!(
                "  nested withdraw #{attempt}: {}",
                nested.error_message.as_deref().unwrap_or("succeeded")
            );
        }
        Ok(())
    })));

    println!("attacker withdraws 400 wei");
    let outer = vm.withdraw(attacker, Wei(400));
    println!("outer withdraw: success={}", outer.success);
    println!("attacker balance {} (expected 600)", vm.get_balance(&attacker).value);
    println!("honest balance   {} (untouched)", vm.get_balance(&honest).value);
    println!("pool             {}", vm.state().pool);
}
