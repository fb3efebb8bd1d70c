//! Octet-stream chunking and the bounded reordering buffer that puts
//! chunks back in sequence on the receiving side.

use std::collections::BTreeMap;

use super::codec::{put_u32, Reader};
use super::WireError;

/// Default reassembly window, in chunks.
pub const DEFAULT_WINDOW: u32 = 64;

/// One chunk of an octet stream. Sequence numbers start at 0 per stream;
/// every chunk is full-size except possibly the final one, which carries
/// `last = true`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamChunk {
    pub sequence_number: u32,
    pub data: Vec<u8>,
    pub last: bool,
}

impl StreamChunk {
    /// Chunk payload as carried inside a StreamChunk frame: the sequence
    /// number followed by the raw data. The `last` flag rides in the frame
    /// header.
    pub fn encode_payload(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(4 + self.data.len());
        put_u32(&mut buf, self.sequence_number);
        buf.extend_from_slice(&self.data);
        buf
    }

    pub fn decode_payload(payload: &[u8], last: bool) -> Result<Self, WireError> {
        let mut reader = Reader::new(payload);
        let sequence_number = reader.get_u32()?;
        Ok(StreamChunk {
            sequence_number,
            data: reader.rest().to_vec(),
            last,
        })
    }
}

/// Splits `data` into chunks of `chunk_size` bytes. Empty input yields a
/// single empty chunk flagged last, so every stream has an explicit end.
pub fn chunk_stream(data: &[u8], chunk_size: usize) -> Vec<StreamChunk> {
    assert!(chunk_size >= 1, "chunk_size must be at least 1");
    if data.is_empty() {
        return vec![StreamChunk {
            sequence_number: 0,
            data: Vec::new(),
            last: true,
        }];
    }
    let count = data.len().div_ceil(chunk_size);
    data.chunks(chunk_size)
        .enumerate()
        .map(|(i, piece)| StreamChunk {
            sequence_number: i as u32,
            data: piece.to_vec(),
            last: i + 1 == count,
        })
        .collect()
}

/// Result of feeding one chunk to a [`StreamReassembler`].
#[derive(Debug, PartialEq, Eq)]
pub enum FeedOutcome {
    /// Stream not yet complete.
    InProgress,
    /// Final chunk and all predecessors arrived; the full stream bytes.
    Complete(Vec<u8>),
}

/// Reorders out-of-order chunks within a bounded window and releases the
/// stream bytes once contiguous.
///
/// Chunks may arrive in any order as long as each sequence number stays
/// within `window` of the next expected one; duplicates are dropped
/// silently. Pending out-of-order data is bounded by
/// `window × chunk size` bytes.
#[derive(Debug)]
pub struct StreamReassembler {
    next_expected: u32,
    window: u32,
    pending: BTreeMap<u32, Vec<u8>>,
    delivered: Vec<u8>,
    last_sequence: Option<u32>,
    complete: bool,
}

impl Default for StreamReassembler {
    fn default() -> Self {
        StreamReassembler::new(DEFAULT_WINDOW)
    }
}

impl StreamReassembler {
    pub fn new(window: u32) -> Self {
        assert!(window >= 1, "window must be at least 1");
        StreamReassembler {
            next_expected: 0,
            window,
            pending: BTreeMap::new(),
            delivered: Vec::new(),
            last_sequence: None,
            complete: false,
        }
    }

    /// Next sequence number the in-order prefix is waiting for.
    pub fn next_expected(&self) -> u32 {
        self.next_expected
    }

    /// Bytes currently held for out-of-order chunks.
    pub fn pending_bytes(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }

    /// In-order bytes accumulated so far.
    pub fn delivered_len(&self) -> usize {
        self.delivered.len()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Accepts one chunk, in any arrival order within the window.
    ///
    /// Returns `Complete` exactly once, when the last chunk and all of its
    /// predecessors have arrived; the returned bytes are the original
    /// stream. Duplicates of already-delivered or pending chunks are
    /// dropped.
    pub fn feed(&mut self, chunk: StreamChunk) -> Result<FeedOutcome, WireError> {
        if self.complete || chunk.sequence_number < self.next_expected {
            // Duplicate of something already delivered.
            return Ok(FeedOutcome::InProgress);
        }
        if chunk.sequence_number - self.next_expected >= self.window {
            return Err(WireError::WindowOverflow {
                sequence: chunk.sequence_number,
                next_expected: self.next_expected,
            });
        }
        if let Some(last) = self.last_sequence {
            if chunk.sequence_number > last {
                return Err(WireError::StreamCorrupt(
                    "chunk follows the declared final chunk",
                ));
            }
            if chunk.last && chunk.sequence_number != last {
                return Err(WireError::StreamCorrupt("conflicting final chunks"));
            }
        }
        if let Some(existing) = self.pending.get(&chunk.sequence_number) {
            if *existing != chunk.data {
                return Err(WireError::StreamCorrupt(
                    "two different payloads for one sequence number",
                ));
            }
            return Ok(FeedOutcome::InProgress);
        }
        if chunk.last {
            if self.pending.keys().next_back().is_some_and(|&s| s > chunk.sequence_number) {
                return Err(WireError::StreamCorrupt(
                    "chunk follows the declared final chunk",
                ));
            }
            self.last_sequence = Some(chunk.sequence_number);
        }

        if chunk.sequence_number == self.next_expected {
            self.delivered.extend_from_slice(&chunk.data);
            self.next_expected += 1;
            while let Some(data) = self.pending.remove(&self.next_expected) {
                self.delivered.extend_from_slice(&data);
                self.next_expected += 1;
            }
        } else {
            self.pending.insert(chunk.sequence_number, chunk.data);
        }

        if self.last_sequence.is_some_and(|last| self.next_expected > last) {
            self.complete = true;
            return Ok(FeedOutcome::Complete(std::mem::take(&mut self.delivered)));
        }
        Ok(FeedOutcome::InProgress)
    }
}
