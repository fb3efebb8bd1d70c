//! Frame layout and incremental frame decoding.
//!
//! A frame is a 16-byte header followed by the payload:
//!
//! ```text
//! offset  0   4 bytes  magic "DOMM"
//! offset  4   1 byte   protocol version, 0x01
//! offset  5   1 byte   message kind
//! offset  6   1 byte   flags (bit 0 = last chunk, StreamChunk only)
//! offset  7   1 byte   reserved, 0x00
//! offset  8   4 bytes  request id, little-endian
//! offset 12   4 bytes  payload length, little-endian, < 2^24
//! ```

use super::WireError;

pub const PROTOCOL_MAGIC: [u8; 4] = *b"DOMM";
pub const PROTOCOL_VERSION: u8 = 0x01;
pub const FRAME_HEADER_LEN: usize = 16;
/// Payload cap: 16 MiB exclusive.
pub const MAX_PAYLOAD_LEN: usize = 1 << 24;
/// Flag bit 0: final chunk of an octet stream.
pub const FLAG_LAST_CHUNK: u8 = 0x01;

/// Message kinds carried in the frame header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MessageKind {
    Request = 0x01,
    Reply = 0x02,
    Error = 0x03,
    Subscribe = 0x04,
    Unsubscribe = 0x05,
    Event = 0x06,
    StreamChunk = 0x07,
}

impl MessageKind {
    pub fn from_code(code: u8) -> Result<Self, WireError> {
        Ok(match code {
            0x01 => MessageKind::Request,
            0x02 => MessageKind::Reply,
            0x03 => MessageKind::Error,
            0x04 => MessageKind::Subscribe,
            0x05 => MessageKind::Unsubscribe,
            0x06 => MessageKind::Event,
            0x07 => MessageKind::StreamChunk,
            other => return Err(WireError::UnknownKind(other)),
        })
    }
}

/// Decoded 16-byte frame header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub kind: MessageKind,
    pub flags: u8,
    pub request_id: u32,
    pub payload_length: u32,
}

impl FrameHeader {
    pub fn is_last_chunk(&self) -> bool {
        self.flags & FLAG_LAST_CHUNK != 0
    }
}

/// One framed protocol message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub header: FrameHeader,
    pub payload: Vec<u8>,
}

/// Encodes a complete frame.
pub fn frame_message(
    kind: MessageKind,
    flags: u8,
    request_id: u32,
    payload: &[u8],
) -> Result<Vec<u8>, WireError> {
    if payload.len() >= MAX_PAYLOAD_LEN {
        return Err(WireError::PayloadTooLarge { len: payload.len() });
    }
    let mut buf = Vec::with_capacity(FRAME_HEADER_LEN + payload.len());
    buf.extend_from_slice(&PROTOCOL_MAGIC);
    buf.push(PROTOCOL_VERSION);
    buf.push(kind as u8);
    buf.push(flags);
    buf.push(0x00);
    buf.extend_from_slice(&request_id.to_le_bytes());
    buf.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    buf.extend_from_slice(payload);
    Ok(buf)
}

/// Tries to decode one frame from the start of `buf`.
///
/// Returns `Ok(None)` when more bytes are needed, otherwise the message and
/// the number of bytes consumed. Header validation happens as soon as the
/// relevant bytes are available, so garbage is rejected without waiting for
/// a full header.
pub fn parse_frame(buf: &[u8]) -> Result<Option<(WireMessage, usize)>, WireError> {
    let probe = buf.len().min(4);
    if buf[..probe] != PROTOCOL_MAGIC[..probe] {
        return Err(WireError::BadMagic);
    }
    if buf.len() >= 5 && buf[4] != PROTOCOL_VERSION {
        return Err(WireError::UnsupportedVersion(buf[4]));
    }
    let kind = if buf.len() >= 6 {
        Some(MessageKind::from_code(buf[5])?)
    } else {
        None
    };
    if buf.len() < FRAME_HEADER_LEN {
        return Ok(None);
    }
    let payload_length = u32::from_le_bytes(buf[12..16].try_into().unwrap());
    if payload_length as usize >= MAX_PAYLOAD_LEN {
        return Err(WireError::PayloadTooLarge {
            len: payload_length as usize,
        });
    }
    let total = FRAME_HEADER_LEN + payload_length as usize;
    if buf.len() < total {
        return Ok(None);
    }
    let header = FrameHeader {
        kind: kind.unwrap(),
        flags: buf[6],
        request_id: u32::from_le_bytes(buf[8..12].try_into().unwrap()),
        payload_length,
    };
    let payload = buf[FRAME_HEADER_LEN..total].to_vec();
    Ok(Some((WireMessage { header, payload }, total)))
}

/// Incremental frame decoder for a byte stream.
///
/// Feed raw reads with [`FrameDecoder::extend`], then drain complete frames
/// with [`FrameDecoder::next_frame`] until it yields `None`.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        FrameDecoder::default()
    }

    pub fn extend(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Bytes buffered but not yet consumed by a complete frame.
    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    pub fn next_frame(&mut self) -> Result<Option<WireMessage>, WireError> {
        match parse_frame(&self.buf)? {
            Some((message, consumed)) => {
                self.buf.drain(..consumed);
                Ok(Some(message))
            }
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_request_layout() {
        let bytes = frame_message(MessageKind::Request, 0, 7, &[]).unwrap();
        assert_eq!(
            bytes,
            [
                0x44, 0x4F, 0x4D, 0x4D, 0x01, 0x01, 0x00, 0x00, 0x07, 0x00, 0x00, 0x00, 0x00,
                0x00, 0x00, 0x00
            ]
        );
    }

    #[test]
    fn payload_cap_enforced() {
        let payload = vec![0u8; 1 << 24];
        assert_eq!(
            frame_message(MessageKind::Reply, 0, 0, &payload),
            Err(WireError::PayloadTooLarge { len: 1 << 24 })
        );
    }

    #[test]
    fn bad_magic_detected_early() {
        assert_eq!(parse_frame(b"DOMN"), Err(WireError::BadMagic));
        // Even a two-byte prefix that cannot become DOMM is rejected.
        assert_eq!(parse_frame(b"DX"), Err(WireError::BadMagic));
    }

    #[test]
    fn unsupported_version() {
        let mut bytes = frame_message(MessageKind::Request, 0, 1, &[]).unwrap();
        bytes[4] = 0x02;
        assert_eq!(parse_frame(&bytes), Err(WireError::UnsupportedVersion(0x02)));
    }

    #[test]
    fn unknown_kind() {
        let mut bytes = frame_message(MessageKind::Request, 0, 1, &[]).unwrap();
        bytes[5] = 0x09;
        assert_eq!(parse_frame(&bytes), Err(WireError::UnknownKind(0x09)));
    }

    #[test]
    fn partial_header_needs_more() {
        let bytes = frame_message(MessageKind::Request, 0, 1, &[]).unwrap();
        assert_eq!(parse_frame(&bytes[..15]), Ok(None));
    }

    #[test]
    fn partial_payload_needs_more() {
        let bytes = frame_message(MessageKind::Reply, 0, 1, &[1, 2, 3]).unwrap();
        assert_eq!(parse_frame(&bytes[..17]), Ok(None));
    }

    #[test]
    fn decoder_handles_split_and_coalesced_frames() {
        let a = frame_message(MessageKind::Request, 0, 1, b"aa").unwrap();
        let b = frame_message(MessageKind::Reply, 0, 2, b"bb").unwrap();
        let joined = [a.clone(), b.clone()].concat();

        let mut dec = FrameDecoder::new();
        dec.extend(&joined[..9]);
        assert_eq!(dec.next_frame().unwrap(), None);
        dec.extend(&joined[9..]);
        let first = dec.next_frame().unwrap().unwrap();
        assert_eq!(first.header.request_id, 1);
        let second = dec.next_frame().unwrap().unwrap();
        assert_eq!(second.header.request_id, 2);
        assert_eq!(dec.next_frame().unwrap(), None);
        assert_eq!(dec.buffered(), 0);
    }

    proptest! {
        #[test]
        fn frame_round_trip(
            kind_code in 1u8..=7,
            flags: u8,
            request_id: u32,
            payload in proptest::collection::vec(any::<u8>(), 0..512),
        ) {
            let kind = MessageKind::from_code(kind_code).unwrap();
            let bytes = frame_message(kind, flags, request_id, &payload).unwrap();
            prop_assert_eq!(bytes.len(), FRAME_HEADER_LEN + payload.len());
            let (message, consumed) = parse_frame(&bytes).unwrap().unwrap();
            prop_assert_eq!(consumed, bytes.len());
            prop_assert_eq!(message.header.kind, kind);
            prop_assert_eq!(message.header.flags, flags);
            prop_assert_eq!(message.header.request_id, request_id);
            prop_assert_eq!(message.payload, payload);
        }
    }
}
