//! Request and reply payload layouts for the four interface methods.
//!
//! A request payload is the method id as an unsigned 16-bit little-endian
//! integer followed by the method arguments in the wire encodings. The
//! `operation` selector of `execute`/`execute2` travels as a signed
//! 16-bit integer.

use crate::wire::codec::{put_i16, put_str, put_u16, put_u32, put_u64, Reader};
use crate::wire::{marshal_info, read_info, PatientInfo, WireError};

use super::status::StatusText;

pub const METHOD_EXECUTE: u16 = 1;
pub const METHOD_EXECUTE2: u16 = 2;
pub const METHOD_DOWNLOAD_FILE: u16 = 3;
pub const METHOD_UPLOAD_FILE: u16 = 4;

/// Decoded request payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Execute {
        operation: i16,
        info: PatientInfo,
    },
    Execute2 {
        operation: i16,
        info: PatientInfo,
    },
    DownloadFile {
        file_name: String,
    },
    UploadFile {
        file_name: String,
        patient_id: String,
        total_length: u64,
    },
}

impl Request {
    pub fn encode(&self) -> Result<Vec<u8>, WireError> {
        let mut buf = Vec::new();
        match self {
            Request::Execute { operation, info } => {
                put_u16(&mut buf, METHOD_EXECUTE);
                put_i16(&mut buf, *operation);
                buf.extend_from_slice(&marshal_info(info)?);
            }
            Request::Execute2 { operation, info } => {
                put_u16(&mut buf, METHOD_EXECUTE2);
                put_i16(&mut buf, *operation);
                buf.extend_from_slice(&marshal_info(info)?);
            }
            Request::DownloadFile { file_name } => {
                put_u16(&mut buf, METHOD_DOWNLOAD_FILE);
                put_str(&mut buf, file_name);
            }
            Request::UploadFile {
                file_name,
                patient_id,
                total_length,
            } => {
                put_u16(&mut buf, METHOD_UPLOAD_FILE);
                put_str(&mut buf, file_name);
                put_str(&mut buf, patient_id);
                put_u64(&mut buf, *total_length);
            }
        }
        Ok(buf)
    }

    pub fn decode(payload: &[u8]) -> Result<Request, WireError> {
        let mut reader = Reader::new(payload);
        let request = match reader.get_u16()? {
            METHOD_EXECUTE => Request::Execute {
                operation: reader.get_i16()?,
                info: read_info(&mut reader)?,
            },
            METHOD_EXECUTE2 => Request::Execute2 {
                operation: reader.get_i16()?,
                info: read_info(&mut reader)?,
            },
            METHOD_DOWNLOAD_FILE => Request::DownloadFile {
                file_name: reader.get_str()?,
            },
            METHOD_UPLOAD_FILE => Request::UploadFile {
                file_name: reader.get_str()?,
                patient_id: reader.get_str()?,
                total_length: reader.get_u64()?,
            },
            _ => return Err(WireError::InvalidValue("unknown method id")),
        };
        reader.finish()?;
        Ok(request)
    }
}

/// Reply payload announcing an octet stream: total byte count and the
/// chunk size the stream will use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DownloadHeader {
    pub total_length: u64,
    pub chunk_size: u32,
}

impl DownloadHeader {
    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        put_u64(&mut buf, self.total_length);
        put_u32(&mut buf, self.chunk_size);
        buf
    }

    pub fn decode(payload: &[u8]) -> Result<DownloadHeader, WireError> {
        let mut reader = Reader::new(payload);
        let header = DownloadHeader {
            total_length: reader.get_u64()?,
            chunk_size: reader.get_u32()?,
        };
        reader.finish()?;
        Ok(header)
    }
}

/// Status text as a reply payload: one length-prefixed string.
pub fn encode_status(status: &StatusText) -> Vec<u8> {
    let mut buf = Vec::new();
    put_str(&mut buf, &status.to_string());
    buf
}

pub fn decode_status(payload: &[u8]) -> Result<StatusText, WireError> {
    let mut reader = Reader::new(payload);
    let text = reader.get_str()?;
    reader.finish()?;
    StatusText::parse(&text)
}

/// Subscription id as a reply payload.
pub fn encode_subscription_id(id: u64) -> Vec<u8> {
    let mut buf = Vec::new();
    put_u64(&mut buf, id);
    buf
}

pub fn decode_subscription_id(payload: &[u8]) -> Result<u64, WireError> {
    let mut reader = Reader::new(payload);
    let id = reader.get_u64()?;
    reader.finish()?;
    Ok(id)
}
