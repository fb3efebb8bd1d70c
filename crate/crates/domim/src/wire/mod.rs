//! The DOMM/1 wire protocol: message framing, record marshalling, and
//! chunked octet streaming with out-of-order reassembly.
//!
//! Every multi-byte integer on the wire is little-endian. A connection
//! carries a sequence of frames, each a fixed 16-byte [`FrameHeader`]
//! followed by `payload_length` bytes of payload. Strings inside payloads
//! are encoded as a `u32` byte length followed by UTF-8 bytes.

pub mod codec;
mod chunk;
mod frame;
mod info;

pub use chunk::{chunk_stream, FeedOutcome, StreamChunk, StreamReassembler, DEFAULT_WINDOW};
pub use frame::{
    frame_message, parse_frame, FrameDecoder, FrameHeader, MessageKind, WireMessage,
    FLAG_LAST_CHUNK, FRAME_HEADER_LEN, MAX_PAYLOAD_LEN, PROTOCOL_MAGIC, PROTOCOL_VERSION,
};
pub use info::{
    marshal_info, read_info, unmarshal_info, PatientInfo, INFO_FIELD_COUNT, INFO_FIELD_NAMES,
};

use thiserror::Error;

/// Errors produced by encoding, decoding, framing, and reassembly.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    /// A single marshalled field exceeds the 2^16-byte limit.
    #[error("FieldTooLong: field `{field}` is {len} bytes, limit is 65536")]
    FieldTooLong { field: &'static str, len: usize },
    /// Payload ended before the declared content.
    #[error("TruncatedPayload: needed {needed} more bytes at offset {offset}")]
    TruncatedPayload { offset: usize, needed: usize },
    /// Payload decoded cleanly but bytes were left over.
    #[error("TrailingBytes: {remaining} bytes left after decoding")]
    TrailingBytes { remaining: usize },
    /// A string field did not hold valid UTF-8.
    #[error("InvalidUtf8: string at offset {offset} is not valid UTF-8")]
    InvalidUtf8 { offset: usize },
    /// Frame payload at or above the 2^24-byte cap.
    #[error("PayloadTooLarge: {len} bytes, cap is {MAX_PAYLOAD_LEN}")]
    PayloadTooLarge { len: usize },
    /// Frame did not start with the `DOMM` magic.
    #[error("BadMagic: frame does not start with `DOMM`")]
    BadMagic,
    /// Frame carried a protocol version other than 1.
    #[error("UnsupportedVersion: got {0:#04x}, expected {PROTOCOL_VERSION:#04x}")]
    UnsupportedVersion(u8),
    /// Frame kind byte outside the defined set.
    #[error("UnknownKind: {0:#04x} is not a defined message kind")]
    UnknownKind(u8),
    /// Chunk sequence number beyond the reassembly window.
    #[error("WindowOverflow: sequence {sequence} is outside window starting at {next_expected}")]
    WindowOverflow { sequence: u32, next_expected: u32 },
    /// Two different payloads arrived for one sequence number, or chunks
    /// contradicted the declared end of stream.
    #[error("StreamCorrupt: {0}")]
    StreamCorrupt(&'static str),
    /// A decoded value was outside its defined set.
    #[error("InvalidValue: {0}")]
    InvalidValue(&'static str),
}
