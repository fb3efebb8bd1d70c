//! The patient demographic record and its fixed marshalled layout.

use super::codec::{put_u32, Reader};
use super::WireError;

pub const INFO_FIELD_COUNT: usize = 10;

/// Field names in declaration (and marshalling) order.
pub const INFO_FIELD_NAMES: [&str; INFO_FIELD_COUNT] = [
    "name", "patient_id", "address", "city", "state", "zip", "country", "email", "phone",
    "program",
];

/// Patient demographic record: ten text fields marshalled in declaration
/// order. `patient_id` is the record key; it must be nonempty wherever a key
/// is required.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatientInfo {
    pub name: String,
    pub patient_id: String,
    pub address: String,
    pub city: String,
    pub state: String,
    pub zip: String,
    pub country: String,
    pub email: String,
    pub phone: String,
    pub program: String,
}

impl PatientInfo {
    /// Record with only the key set, as used by key-only operations.
    pub fn with_id(patient_id: impl Into<String>) -> Self {
        PatientInfo {
            patient_id: patient_id.into(),
            ..Default::default()
        }
    }

    /// Fields in declaration order, parallel to [`INFO_FIELD_NAMES`].
    pub fn fields(&self) -> [&str; INFO_FIELD_COUNT] {
        [
            &self.name,
            &self.patient_id,
            &self.address,
            &self.city,
            &self.state,
            &self.zip,
            &self.country,
            &self.email,
            &self.phone,
            &self.program,
        ]
    }

    fn from_fields(fields: [String; INFO_FIELD_COUNT]) -> Self {
        let [name, patient_id, address, city, state, zip, country, email, phone, program] = fields;
        PatientInfo {
            name,
            patient_id,
            address,
            city,
            state,
            zip,
            country,
            email,
            phone,
            program,
        }
    }
}

/// Longest permitted marshalled field, in bytes.
const MAX_FIELD_LEN: usize = 1 << 16;

/// Encodes the ten fields in declaration order, each as a `u32` length
/// prefix followed by UTF-8 bytes.
pub fn marshal_info(info: &PatientInfo) -> Result<Vec<u8>, WireError> {
    let fields = info.fields();
    let mut buf = Vec::with_capacity(fields.iter().map(|f| 4 + f.len()).sum());
    for (name, value) in INFO_FIELD_NAMES.iter().zip(fields) {
        if value.len() > MAX_FIELD_LEN {
            return Err(WireError::FieldTooLong {
                field: name,
                len: value.len(),
            });
        }
        put_u32(&mut buf, value.len() as u32);
        buf.extend_from_slice(value.as_bytes());
    }
    Ok(buf)
}

/// Exact inverse of [`marshal_info`]; the whole input must be consumed.
pub fn unmarshal_info(bytes: &[u8]) -> Result<PatientInfo, WireError> {
    let mut reader = Reader::new(bytes);
    let info = read_info(&mut reader)?;
    reader.finish()?;
    Ok(info)
}

/// Reads one marshalled record from the current position of `reader`,
/// for layouts that embed a record among other fields.
pub fn read_info(reader: &mut Reader<'_>) -> Result<PatientInfo, WireError> {
    let mut fields: [String; INFO_FIELD_COUNT] = Default::default();
    for slot in fields.iter_mut() {
        *slot = reader.get_str()?;
    }
    Ok(PatientInfo::from_fields(fields))
}
