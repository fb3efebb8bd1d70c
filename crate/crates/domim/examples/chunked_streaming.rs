//! Split a buffer into chunks, deliver them out of order, and reassemble.
//!
//! ```bash
//! cargo run --example chunked_streaming
//! ```

use domim::wire::{chunk_stream, FeedOutcome, StreamReassembler};

fn main() {
    let data: Vec<u8> = (0..100_000u32).map(|i| (i % 251) as u8).collect();
    let chunks = chunk_stream(&data, 8192);
    println!("{} bytes -> {} chunks of up to 8192 bytes", data.len(), chunks.len());

    // Deliver with local reordering: swap each pair of neighbours.
    let mut order: Vec<usize> = (0..chunks.len()).collect();
    for pair in order.chunks_mut(2) {
        pair.reverse();
    }

    let mut reassembler = StreamReassembler::default();
    for index in order {
        match reassembler.feed(chunks[index].clone()).expect("feed") {
            FeedOutcome::InProgress => {
                println!(
                    "fed chunk {:2}: {:5} bytes pending, waiting for {}",
                    index,
                    reassembler.pending_bytes(),
                    reassembler.next_expected()
                );
            }
            FeedOutcome::Complete(bytes) => {
                assert_eq!(bytes, data);
                println!("stream complete: {} bytes, identical to the input", bytes.len());
                return;
            }
        }
    }
    unreachable!("the last chunk completes the stream");
}
