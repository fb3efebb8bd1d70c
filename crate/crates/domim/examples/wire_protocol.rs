//! Marshal a patient record and frame a request, then decode both.
//!
//! ```bash
//! cargo run --example wire_protocol
//! ```

use domim::server::Request;
use domim::wire::{frame_message, marshal_info, parse_frame, MessageKind, PatientInfo};

fn main() {
    let info = PatientInfo {
        name: "Doe^Jane".into(),
        patient_id: "001".into(),
        city: "Springfield".into(),
        ..Default::default()
    };

    let marshalled = marshal_info(&info).expect("marshal");
    println!("marshalled record: {} bytes", marshalled.len());
    println!("first field: {}", hex_prefix(&marshalled, 12));

    let payload = Request::Execute {
        operation: 1,
        info,
    }
    .encode()
    .expect("encode request");
    let frame = frame_message(MessageKind::Request, 0, 7, &payload).expect("frame");
    println!("framed request: {} bytes, header {}", frame.len(), hex_prefix(&frame, 16));

    let (message, consumed) = parse_frame(&frame).expect("parse").expect("complete frame");
    println!(
        "decoded: kind {:?}, request id {}, {} payload bytes ({} consumed)",
        message.header.kind, message.header.request_id, message.payload.len(), consumed
    );
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes
        .iter()
        .take(n)
        .map(|b| format!("{b:02x}"))
        .collect::<Vec<_>>()
        .join(" ")
}
