//! The nineteen-field KYC registration record.

use serde::{Deserialize, Serialize};

use crate::codec::{DecodeError, Decoder, Encoder};

/// A customer's KYC record, field-for-field as the contract stores it.
/// JSON names follow the contract's struct (`firstName`, `address_`, ...).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserRegistrationData {
    pub first_name: String,
    pub middle_name: String,
    pub last_name: String,
    pub dob: String,
    pub email: String,
    pub phone: String,
    pub marital_status: String,
    #[serde(rename = "address_")]
    pub address: String,
    pub city: String,
    pub state: String,
    pub country: String,
    pub zip: String,
    pub nationality: String,
    pub occupation: String,
    pub employment_status: String,
    pub annual_income: u64,
    pub id_type: String,
    pub id_number: String,
    pub id_expiry: String,
}

/// A required text field and the revert message for leaving it empty.
pub struct RequiredField {
    pub name: &'static str,
    pub message: &'static str,
    pub get: fn(&UserRegistrationData) -> &str,
}

/// The twelve required fields, in the order the contract checks them.
pub const REQUIRED_FIELDS: [RequiredField; 12] = [
    RequiredField { name: "firstName", message: "First name is required", get: |d| &d.first_name },
    RequiredField { name: "lastName", message: "Last name is required", get: |d| &d.last_name },
    RequiredField { name: "dob", message: "Date of birth is required", get: |d| &d.dob },
    RequiredField { name: "email", message: "Email is required", get: |d| &d.email },
    RequiredField { name: "phone", message: "Phone number is required", get: |d| &d.phone },
    RequiredField { name: "address_", message: "Address is required", get: |d| &d.address },
    RequiredField { name: "city", message: "City is required", get: |d| &d.city },
    RequiredField { name: "state", message: "State is required", get: |d| &d.state },
    RequiredField { name: "country", message: "Country is required", get: |d| &d.country },
    RequiredField { name: "zip", message: "ZIP code is required", get: |d| &d.zip },
    RequiredField { name: "idType", message: "ID type is required", get: |d| &d.id_type },
    RequiredField { name: "idNumber", message: "ID number is required", get: |d| &d.id_number },
];

impl UserRegistrationData {
    /// The eighteen text fields in declaration order, paired with their
    /// contract names. `annualIncome` sits between `employmentStatus` and
    /// `idType` in the struct and is handled separately.
    pub fn text_fields(&self) -> [(&'static str, &str); 18] {
        [
            ("firstName", &self.first_name),
            ("middleName", &self.middle_name),
            ("lastName", &self.last_name),
            ("dob", &self.dob),
            ("email", &self.email),
            ("phone", &self.phone),
            ("maritalStatus", &self.marital_status),
            ("address_", &self.address),
            ("city", &self.city),
            ("state", &self.state),
            ("country", &self.country),
            ("zip", &self.zip),
            ("nationality", &self.nationality),
            ("occupation", &self.occupation),
            ("employmentStatus", &self.employment_status),
            ("idType", &self.id_type),
            ("idNumber", &self.id_number),
            ("idExpiry", &self.id_expiry),
        ]
    }

    /// A record counts as present when firstName, idType and idNumber are
    /// all non-empty.
    pub fn is_present(&self) -> bool {
        !self.first_name.is_empty() && !self.id_type.is_empty() && !self.id_number.is_empty()
    }

    /// Storage words the record occupies: strings up to 31 bytes take one
    /// 32-byte word, longer strings one length word plus their data words;
    /// the income takes one word.
    pub fn storage_words(&self) -> u64 {
        let string_words = |len: usize| -> u64 {
            if len <= 31 {
                1
            } else {
                1 + len.div_ceil(32) as u64
            }
        };
        self.text_fields()
            .iter()
            .map(|(_, v)| string_words(v.len()))
            .sum::<u64>()
            + 1
    }

    pub fn encode_into(&self, enc: &mut Encoder) {
        enc.str(&self.first_name)
            .str(&self.middle_name)
            .str(&self.last_name)
            .str(&self.dob)
            .str(&self.email)
            .str(&self.phone)
            .str(&self.marital_status)
            .str(&self.address)
            .str(&self.city)
            .str(&self.state)
            .str(&self.country)
            .str(&self.zip)
            .str(&self.nationality)
            .str(&self.occupation)
            .str(&self.employment_status)
            .u64(self.annual_income)
            .str(&self.id_type)
            .str(&self.id_number)
            .str(&self.id_expiry);
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.encode_into(&mut enc);
        enc.finish()
    }

    pub fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(UserRegistrationData {
            first_name: dec.string()?,
            middle_name: dec.string()?,
            last_name: dec.string()?,
            dob: dec.string()?,
            email: dec.string()?,
            phone: dec.string()?,
            marital_status: dec.string()?,
            address: dec.string()?,
            city: dec.string()?,
            state: dec.string()?,
            country: dec.string()?,
            zip: dec.string()?,
            nationality: dec.string()?,
            occupation: dec.string()?,
            employment_status: dec.string()?,
            annual_income: dec.u64()?,
            id_type: dec.string()?,
            id_number: dec.string()?,
            id_expiry: dec.string()?,
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut dec = Decoder::new(bytes);
        let out = Self::decode_from(&mut dec)?;
        dec.finish()?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_uses_contract_field_names() {
        let record = UserRegistrationData {
            first_name: "Ada".into(),
            address: "1 Main St".into(),
            annual_income: 5,
            ..Default::default()
        };
        let json = serde_json::to_value(&record).unwrap();
        let obj = json.as_object().unwrap();
        assert_eq!(obj.len(), 19);
        assert_eq!(obj["firstName"], "Ada");
        assert_eq!(obj["address_"], "1 Main St");
        assert_eq!(obj["annualIncome"], 5);
        for key in ["middleName", "maritalStatus", "employmentStatus", "idType", "idNumber", "idExpiry"] {
            assert!(obj.contains_key(key), "{key}");
        }
    }

    #[test]
    fn storage_words_count_long_strings() {
        let mut record = UserRegistrationData::default();
        assert_eq!(record.storage_words(), 19);
        record.address = "x".repeat(32);
        assert_eq!(record.storage_words(), 20);
        record.address = "x".repeat(65);
        assert_eq!(record.storage_words(), 22);
    }
}
