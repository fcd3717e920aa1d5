use std::sync::{Arc, Mutex};

use super::*;
use crate::clock::FixedClock;
use crate::wallet::Wallet;

fn addr(tag: u8) -> Address {
    Address([tag; 20])
}

fn vm() -> BankVm {
    BankVm::new(addr(0xee)).with_clock(Arc::new(FixedClock::new(0)))
}

pub(crate) fn valid_record() -> UserRegistrationData {
    UserRegistrationData {
        first_name: "Amina".into(),
        middle_name: "".into(),
        last_name: "Lee".into(),
        dob: "1990-12-31".into(),
        email: "amina@example.org".into(),
        phone: "+1-555-0100".into(),
        marital_status: "Single".into(),
        address: "12 Harbour Rd".into(),
        city: "Springfield".into(),
        state: "IL".into(),
        country: "US".into(),
        zip: "62701".into(),
        nationality: "US".into(),
        occupation: "Engineer".into(),
        employment_status: "Employed".into(),
        annual_income: 85_000,
        id_type: "Passport".into(),
        id_number: "X1234567".into(),
        id_expiry: "2031-01-01".into(),
    }
}

#[test]
fn add_customer_inserts_once() {
    let mut vm = vm();
    let r = vm.add_customer(addr(1));
    assert!(r.success);
    assert!(vm.state().customers.contains(&addr(1)));
    assert_eq!(vm.state().balance_of(&addr(1)), Wei::ZERO);
    let again = vm.add_customer(addr(1));
    assert_eq!(again.error, Some(VmError::AlreadyCustomer));
}

#[test]
fn add_customer_gas_follows_schedule() {
    let mut vm = vm();
    let r = vm.add_customer(addr(1));
    // base + one new roster word
    assert_eq!(r.gas_used, 21_000 + 20_000);
    assert_eq!(r.network_fee, Wei(41_000 * DEFAULT_GAS_PRICE.0));
}

#[test]
fn register_requires_each_field_in_order() {
    let mut vm = vm();
    let mut data = valid_record();
    data.first_name.clear();
    data.zip.clear();
    let r = vm.register_user(addr(1), data);
    assert_eq!(r.error_message.as_deref(), Some("First name is required"));
    assert!(vm.state().users.is_empty());
}

#[test]
fn every_required_field_message_is_reachable() {
    for field in &REQUIRED_FIELDS {
        let mut vm = vm();
        let mut data = valid_record();
        let json = serde_json::to_value(&data).unwrap();
        let mut obj = json.as_object().unwrap().clone();
        obj.insert(field.name.to_string(), serde_json::Value::String(String::new()));
        data = serde_json::from_value(serde_json::Value::Object(obj)).unwrap();
        let r = vm.register_user(addr(1), data);
        assert_eq!(r.error_message.as_deref(), Some(field.message));
    }
}

#[test]
fn second_registration_is_rejected_and_record_unchanged() {
    let mut vm = vm();
    let record = valid_record();
    let first = vm.register_user(addr(1), record.clone());
    assert!(first.success);
    assert_eq!(first.events, vec![Event::user_registered(addr(1))]);
    let mut other = valid_record();
    other.first_name = "Mallory".into();
    let second = vm.register_user(addr(1), other);
    assert_eq!(second.error_message.as_deref(), Some("User is already registered"));
    assert_eq!(vm.get_user(&addr(1)).unwrap().value, record);
}

#[test]
fn get_user_guards() {
    let mut vm = vm();
    assert_eq!(vm.get_user(&Address::ZERO), Err(VmError::InvalidAddress));
    assert_eq!(VmError::InvalidAddress.to_string(), "Invalid address");
    assert_eq!(vm.get_user(&addr(2)), Err(VmError::NoSuchUser));
    assert_eq!(VmError::NoSuchUser.to_string(), "User does not exist");
    vm.register_user(addr(2), valid_record());
    let before = vm.state().clone();
    let view = vm.get_user(&addr(2)).unwrap();
    assert_eq!(view.value, valid_record());
    assert_eq!(view.gas_used, 0);
    assert_eq!(view.network_fee, Wei::ZERO);
    assert_eq!(vm.state(), &before);
}

#[test]
fn deposit_floor_is_strict() {
    let mut vm = vm();
    let r = vm.deposit(addr(1), Wei(10));
    assert_eq!(r.error_message.as_deref(), Some("Please deposit at least 10 wei"));
    assert!(!r.success);
    assert!(r.gas_used > 0);
    assert_eq!(vm.get_balance(&addr(1)).value, Wei::ZERO);
    let ok = vm.deposit(addr(1), Wei(11));
    assert!(ok.success);
    assert_eq!(vm.get_balance(&addr(1)).value, Wei(11));
}

#[test]
fn deposit_emits_in_order() {
    let mut vm = vm();
    let r = vm.deposit(addr(1), Wei::from_eth(1));
    let names: Vec<_> = r.events.iter().map(|e| e.name).collect();
    assert_eq!(names, vec![EventName::Deposit, EventName::GasConsumption, EventName::ElapsedTime]);
    assert_eq!(r.events[0], Event::deposit(addr(1), Wei(1_000_000_000_000_000_000)));
    assert_eq!(r.events[1], Event::gas_consumption(r.gas_used));
    assert_eq!(vm.get_balance(&addr(1)).value, Wei(1_000_000_000_000_000_000));
}

#[test]
fn withdraw_boundaries() {
    let mut vm = vm();
    vm.deposit(addr(1), Wei(100));
    let over = vm.withdraw(addr(1), Wei(101));
    assert_eq!(over.error_message.as_deref(), Some("You do not have sufficient balance"));
    assert!(!vm.state().locked);
    let exact = vm.withdraw(addr(1), Wei(100));
    assert!(exact.success);
    assert_eq!(vm.get_balance(&addr(1)).value, Wei::ZERO);
    assert_eq!(vm.state().pool, Wei::ZERO);
}

#[test]
fn balance_view_is_free() {
    let mut vm = vm();
    assert_eq!(vm.get_balance(&addr(9)).value, Wei::ZERO);
    vm.deposit(addr(9), Wei(100));
    vm.withdraw(addr(9), Wei(40));
    let view = vm.get_balance(&addr(9));
    assert_eq!(view.value, Wei(60));
    assert_eq!((view.gas_used, view.network_fee), (0, Wei::ZERO));
}

#[test]
fn reentrant_withdraw_is_blocked() {
    let mut vm = vm();
    vm.deposit(addr(1), Wei(100));
    let inner: Arc<Mutex<Vec<Receipt>>> = Arc::default();
    let seen = Arc::clone(&inner);
    vm.set_transfer_hook(Some(Box::new(move |vm, to, amount| {
        seen.lock().unwrap().push(vm.withdraw(to, amount));
        Ok(())
    })));
    let outer = vm.withdraw(addr(1), Wei(100));
    assert!(outer.success);
    let inner = inner.lock().unwrap();
    assert_eq!(inner.len(), 1);
    assert_eq!(inner[0].error_message.as_deref(), Some("Reentrant call"));
    assert_eq!(vm.get_balance(&addr(1)).value, Wei::ZERO);
    assert_eq!(vm.state().pool, Wei::ZERO);
    assert!(!vm.state().locked);
    let withdrawals = outer.events.iter().filter(|e| e.name == EventName::Withdrawal).count();
    assert_eq!(withdrawals, 1);
}

#[test]
fn hook_may_deposit_during_withdrawal() {
    let mut vm = vm();
    vm.deposit(addr(1), Wei(100));
    vm.set_transfer_hook(Some(Box::new(|vm, to, _| {
        assert!(vm.deposit(to, Wei(50)).success);
        Ok(())
    })));
    assert!(vm.withdraw(addr(1), Wei(40)).success);
    assert_eq!(vm.get_balance(&addr(1)).value, Wei(110));
    assert!(vm.state().is_quiescent_consistent());
}

#[test]
fn failed_transfer_reverts_everything_including_nested_calls() {
    let mut vm = vm();
    vm.deposit(addr(1), Wei(100));
    let before = vm.state().clone();
    vm.set_transfer_hook(Some(Box::new(|vm, to, _| {
        vm.deposit(to, Wei(50));
        Err("recipient refused".into())
    })));
    let r = vm.withdraw(addr(1), Wei(40));
    assert!(!r.success);
    assert_eq!(vm.state(), &before);
}

#[test]
fn no_hook_means_plain_withdrawal() {
    let mut vm = vm();
    vm.deposit(addr(3), Wei(500));
    vm.set_transfer_hook(None);
    assert!(vm.withdraw(addr(3), Wei(200)).success);
    assert_eq!(vm.get_balance(&addr(3)).value, Wei(300));
}

#[test]
fn execute_dispatches_and_rejects_malformed_payloads() {
    let mut vm = vm();
    let w = Wallet::create(Some(b"exec"));
    let tx = Transaction::signed(&w, Operation::Deposit, Wei(11), vec![], 1);
    let r = vm.execute(&tx);
    assert!(r.success);
    assert_eq!(r.tx_id, tx.tx_id);
    assert!(r.events.iter().any(|e| e.name == EventName::Deposit));

    let before = vm.state().clone();
    let bad = Transaction::signed(&w, Operation::Withdraw, Wei(0), vec![1, 2, 3], 2);
    let r = vm.execute(&bad);
    assert!(matches!(r.error, Some(VmError::DecodeError(_))));
    assert_eq!(vm.state(), &before);

    let bad_kyc = Transaction::signed(&w, Operation::RegisterKyc, Wei(0), vec![0xff; 8], 3);
    assert!(matches!(vm.execute(&bad_kyc).error, Some(VmError::DecodeError(_))));
    let valued = Transaction::signed(&w, Operation::AddCustomer, Wei(5), vec![], 4);
    assert!(matches!(vm.execute(&valued).error, Some(VmError::DecodeError(_))));
    assert_eq!(vm.state(), &before);
}

#[test]
fn unknown_operation_tag_is_reported() {
    let mut vm = vm();
    let w = Wallet::create(Some(b"op"));
    let mut bytes = Transaction::signed(&w, Operation::Deposit, Wei(11), vec![], 1).encode();
    bytes[32 + 20 + 32] = 7;
    assert_eq!(vm.execute_encoded(&bytes).error, Some(VmError::UnknownOperation));
    assert!(vm.state().userbalance.is_empty());
}

#[test]
fn kyc_is_the_most_expensive_write() {
    let mut vm = vm();
    let kyc = vm.register_user(addr(1), valid_record()).gas_used;
    let add = vm.add_customer(addr(1)).gas_used;
    let dep_new = vm.deposit(addr(1), Wei(1000)).gas_used;
    let dep_again = vm.deposit(addr(1), Wei(1000)).gas_used;
    let wd = vm.withdraw(addr(1), Wei(10)).gas_used;
    assert!(kyc > add && kyc > dep_new && kyc > dep_again && kyc > wd);
}

#[test]
fn identical_sequences_give_identical_receipts() {
    let w = Wallet::create(Some(b"replay"));
    let txs = [
        Transaction::signed(&w, Operation::AddCustomer, Wei(0), vec![], 1),
        Transaction::signed(&w, Operation::Deposit, Wei(500), vec![], 2),
        Transaction::signed(&w, Operation::Withdraw, Wei(0), payload::encode_withdraw(Wei(900)), 3),
        Transaction::signed(&w, Operation::Withdraw, Wei(0), payload::encode_withdraw(Wei(200)), 4),
    ];
    let run = || {
        let mut vm = vm();
        txs.iter().map(|tx| vm.execute(tx)).collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}
