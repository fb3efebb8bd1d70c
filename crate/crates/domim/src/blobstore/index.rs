//! On-disk index encoding: `DIDX` magic, version byte, record and blob
//! tables in the wire marshalling, and a trailing CRC32 over everything
//! before it.

use std::collections::BTreeMap;

use crate::wire::codec::{put_str, put_u32, put_u64, Reader};
use crate::wire::{marshal_info, read_info, WireError};

use super::{BlobEntry, PatientRecord, StoreError};

const INDEX_MAGIC: [u8; 4] = *b"DIDX";
const INDEX_VERSION: u8 = 0x01;

type IndexTables = (BTreeMap<String, PatientRecord>, BTreeMap<String, BlobEntry>);

pub(super) fn encode_index(
    records: &BTreeMap<String, PatientRecord>,
    blobs: &BTreeMap<String, BlobEntry>,
) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(&INDEX_MAGIC);
    buf.push(INDEX_VERSION);

    put_u32(&mut buf, records.len() as u32);
    for record in records.values() {
        // The marshalled info needs no outer length; its ten prefixes
        // delimit it.
        buf.extend_from_slice(&marshal_info(&record.info).expect("stored fields fit the limit"));
        put_u32(&mut buf, record.files.len() as u32);
        for name in &record.files {
            put_str(&mut buf, name);
        }
        put_u64(&mut buf, record.updated_at);
    }

    put_u32(&mut buf, blobs.len() as u32);
    for entry in blobs.values() {
        put_str(&mut buf, &entry.name);
        put_u64(&mut buf, entry.length);
        buf.extend_from_slice(&entry.sha256);
    }

    let crc = crc32fast::hash(&buf);
    put_u32(&mut buf, crc);
    buf
}

pub(super) fn decode_index(bytes: &[u8]) -> Result<IndexTables, StoreError> {
    let corrupt = |why: &str| StoreError::CorruptIndex(why.to_string());
    let wire_err = |e: WireError| StoreError::CorruptIndex(e.to_string());

    if bytes.len() < 4 + 1 + 4 {
        return Err(corrupt("index shorter than header"));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(corrupt("checksum mismatch"));
    }
    if body[..4] != INDEX_MAGIC {
        return Err(corrupt("bad magic"));
    }
    if body[4] != INDEX_VERSION {
        return Err(corrupt("unsupported version"));
    }

    let mut reader = Reader::new(&body[5..]);

    let record_count = reader.get_u32().map_err(wire_err)?;
    let mut records = BTreeMap::new();
    for _ in 0..record_count {
        let info = read_info(&mut reader).map_err(wire_err)?;
        let file_count = reader.get_u32().map_err(wire_err)?;
        let mut files = Vec::new();
        for _ in 0..file_count {
            files.push(reader.get_str().map_err(wire_err)?);
        }
        let updated_at = reader.get_u64().map_err(wire_err)?;
        if info.patient_id.is_empty() {
            return Err(corrupt("record with empty patient id"));
        }
        let key = info.patient_id.clone();
        let record = PatientRecord {
            info,
            files,
            updated_at,
        };
        if records.insert(key, record).is_some() {
            return Err(corrupt("duplicate patient id"));
        }
    }

    let blob_count = reader.get_u32().map_err(wire_err)?;
    let mut blobs = BTreeMap::new();
    for _ in 0..blob_count {
        let name = reader.get_str().map_err(wire_err)?;
        let length = reader.get_u64().map_err(wire_err)?;
        let sha256: [u8; 32] = reader.get_raw(32).map_err(wire_err)?.try_into().unwrap();
        if name.is_empty() {
            return Err(corrupt("blob entry with empty name"));
        }
        let entry = BlobEntry {
            name: name.clone(),
            length,
            sha256,
        };
        if blobs.insert(name, entry).is_some() {
            return Err(corrupt("duplicate blob name"));
        }
    }

    reader.finish().map_err(wire_err)?;
    Ok((records, blobs))
}
