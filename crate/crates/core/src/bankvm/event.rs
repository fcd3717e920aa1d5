//! Contract events and the event log record format.
//!
//! A log record is `(tx_id, name, args)`, canonically encoded as
//! `tx_id 32 | name (len u32 | utf8) | arg count u32 | args`, each arg being
//! `0x00 | address 20` or `0x01 | uint u128`.

use serde::Serialize;

use crate::amount::Wei;
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::primitives::{Address, Digest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventName {
    UserRegistered,
    Deposit,
    Withdrawal,
    GasConsumption,
    ElapsedTime,
}

impl EventName {
    pub fn as_str(self) -> &'static str {
        match self {
            EventName::UserRegistered => "UserRegistered",
            EventName::Deposit => "Deposit",
            EventName::Withdrawal => "Withdrawal",
            EventName::GasConsumption => "GasConsumption",
            EventName::ElapsedTime => "ElapsedTime",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "UserRegistered" => EventName::UserRegistered,
            "Deposit" => EventName::Deposit,
            "Withdrawal" => EventName::Withdrawal,
            "GasConsumption" => EventName::GasConsumption,
            "ElapsedTime" => EventName::ElapsedTime,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum EventArg {
    Address(Address),
    #[serde(serialize_with = "uint_string")]
    Uint(u128),
}

impl std::fmt::Display for EventArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventArg::Address(a) => write!(f, "{a}"),
            EventArg::Uint(v) => write!(f, "{v}"),
        }
    }
}

fn uint_string<S: serde::Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub name: EventName,
    pub args: Vec<EventArg>,
}

impl Event {
    pub fn user_registered(who: Address) -> Self {
        Event {
            name: EventName::UserRegistered,
            args: vec![EventArg::Address(who)],
        }
    }

    pub fn deposit(who: Address, value: Wei) -> Self {
        Event {
            name: EventName::Deposit,
            args: vec![EventArg::Address(who), EventArg::Uint(value.0)],
        }
    }

    pub fn withdrawal(who: Address, amount: Wei) -> Self {
        Event {
            name: EventName::Withdrawal,
            args: vec![EventArg::Address(who), EventArg::Uint(amount.0)],
        }
    }

    pub fn gas_consumption(gas: u64) -> Self {
        Event {
            name: EventName::GasConsumption,
            args: vec![EventArg::Uint(gas as u128)],
        }
    }

    pub fn elapsed_time(ms: u64) -> Self {
        Event {
            name: EventName::ElapsedTime,
            args: vec![EventArg::Uint(ms as u128)],
        }
    }
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub tx_id: Digest,
    pub name: EventName,
    pub args: Vec<EventArg>,
}

impl EventRecord {
    pub fn new(tx_id: Digest, event: &Event) -> Self {
        EventRecord {
            tx_id,
            name: event.name,
            args: event.args.clone(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.fixed(self.tx_id.as_bytes())
            .str(self.name.as_str())
            .u32(self.args.len() as u32);
        for arg in &self.args {
            match arg {
                EventArg::Address(a) => enc.u8(0).fixed(a.as_bytes()),
                EventArg::Uint(v) => enc.u8(1).u128(*v),
            };
        }
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let tx_id = Digest(dec.array()?);
        let name = dec.string()?;
        let name = EventName::parse(&name).ok_or_else(|| DecodeError::Invalid(format!("unknown event {name}")))?;
        let count = dec.u32()? as usize;
        if count > dec.remaining() {
            return Err(DecodeError::Invalid("implausible argument count".into()));
        }
        let mut args = Vec::with_capacity(count);
        for _ in 0..count {
            args.push(match dec.u8()? {
                0 => EventArg::Address(Address(dec.array()?)),
                1 => EventArg::Uint(dec.u128()?),
                tag => return Err(DecodeError::InvalidTag { what: "event arg", tag }),
            });
        }
        dec.finish()?;
        Ok(EventRecord { tx_id, name, args })
    }
}
