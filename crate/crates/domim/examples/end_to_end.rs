//! The full flow in one process: embedded server, client connection,
//! record insert, image upload/download, event push, and PGM export.
//!
//! ```bash
//! cargo run --example end_to_end
//! ```

use std::thread;
use std::time::Duration;

use domim::client::{ClientConfig, Connection};
use domim::dicom::{decode_frame, export_pgm, parse, pixel_descriptor, serialize, tags};
use domim::dicom::{DicomObject, Element, TransferSyntax, Vr};
use domim::server::{ExecuteOp, Server, ServerConfig, QUERY_BY_ID};
use domim::wire::PatientInfo;

fn image_bytes() -> Vec<u8> {
    let pixels: Vec<u8> = (0..32 * 32).map(|i| (i % 256) as u8).collect();
    let mut object = DicomObject::new(TransferSyntax::ExplicitVrLittleEndian);
    object.dataset = vec![
        Element::text(tags::PATIENT_ID, Vr::LO, "001"),
        Element::us(tags::SAMPLES_PER_PIXEL, 1),
        Element::text(tags::PHOTOMETRIC_INTERPRETATION, Vr::CS, "MONOCHROME2"),
        Element::us(tags::ROWS, 32),
        Element::us(tags::COLUMNS, 32),
        Element::us(tags::BITS_ALLOCATED, 8),
        Element::us(tags::BITS_STORED, 8),
        Element::us(tags::HIGH_BIT, 7),
        Element::us(tags::PIXEL_REPRESENTATION, 0),
        Element::new(tags::PIXEL_DATA, Vr::OB, pixels),
    ];
    serialize(&object).expect("serialize fixture")
}

fn main() {
    let data_dir = tempfile::tempdir().expect("temp dir");
    let mut config = ServerConfig::new(data_dir.path());
    config.port = 0; // ephemeral
    let server = Server::bind(config).expect("bind");
    let port = server.local_port();
    let shutdown = server.shutdown_handle();
    let server_thread = thread::spawn(move || server.run().expect("serve"));
    println!("embedded server on port {port}");

    let mut conn = Connection::connect(&ClientConfig::new("127.0.0.1", port)).expect("connect");
    let mut watcher = Connection::connect(&ClientConfig::new("127.0.0.1", port)).expect("connect");
    watcher.subscribe("image.stored").expect("subscribe");

    let info = PatientInfo {
        name: "Doe^Jane".into(),
        patient_id: "001".into(),
        ..Default::default()
    };
    println!("insert:   {}", conn.execute(ExecuteOp::Insert as i16, &info).expect("execute"));

    let bytes = image_bytes();
    println!("upload:   {}", conn.upload("scan.dcm", "001", &bytes).expect("upload"));

    let event = watcher
        .next_event(Duration::from_secs(3))
        .expect("event stream")
        .expect("image.stored event");
    println!("event:    seq {} {} {} {}", event.seq, event.kind.as_str(), event.patient_id, event.file_name);

    let stored = conn.execute2(QUERY_BY_ID, &PatientInfo::with_id("001")).expect("query");
    println!("query:    name {}", stored.name);

    let downloaded = conn.download("scan.dcm").expect("download");
    assert_eq!(downloaded, bytes);
    println!("download: {} bytes, identical to the upload", downloaded.len());

    let object = parse(&downloaded).expect("parse");
    let descriptor = pixel_descriptor(&object).expect("descriptor");
    let image = decode_frame(&object, 0).expect("decode");
    let pgm = export_pgm(&image, descriptor.photometric);
    std::fs::write("scan.pgm", &pgm).expect("write scan.pgm");
    println!("export:   scan.pgm ({} bytes)", pgm.len());

    shutdown.trigger();
    server_thread.join().expect("server thread");
}
