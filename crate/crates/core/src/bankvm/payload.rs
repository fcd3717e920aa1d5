//! Operation payload encodings.
//!
//! | operation    | value      | payload                                             |
//! |--------------|------------|-----------------------------------------------------|
//! | AddCustomer  | 0          | empty                                               |
//! | RegisterKyc  | 0          | sealed submission (see `kycflow::seal`); opens to a |
//! |              |            | `KycSubmission`                                     |
//! | Deposit      | amount     | empty                                               |
//! | Withdraw     | 0          | amount as u128 big-endian (16 bytes)                |
//!
//! A `KycSubmission` is the canonical record encoding followed by
//! `0x00` (no ID document) or `0x01 | document digest 32`.

use crate::amount::Wei;
use crate::codec::{DecodeError, Decoder, Encoder};
use crate::primitives::Digest;

use super::record::UserRegistrationData;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KycSubmission {
    pub record: UserRegistrationData,
    pub id_document: Option<Digest>,
}

impl KycSubmission {
    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.record.encode_into(&mut enc);
        match &self.id_document {
            None => enc.u8(0),
            Some(d) => enc.u8(1).fixed(d.as_bytes()),
        };
        enc.finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let record = UserRegistrationData::decode_from(&mut dec)?;
        let id_document = match dec.u8()? {
            0 => None,
            1 => Some(Digest(dec.array()?)),
            tag => return Err(DecodeError::InvalidTag { what: "id document flag", tag }),
        };
        dec.finish()?;
        Ok(KycSubmission { record, id_document })
    }
}

pub fn encode_withdraw(amount: Wei) -> Vec<u8> {
    amount.0.to_be_bytes().to_vec()
}

pub fn decode_withdraw(payload: &[u8]) -> Result<Wei, DecodeError> {
    let mut dec = Decoder::new(payload);
    let amount = dec.u128()?;
    dec.finish()?;
    Ok(Wei(amount))
}
