//! Durable records and blobs: write, attach, reopen, read back.
//!
//! ```bash
//! cargo run --example blob_store
//! ```

use domim::blobstore::{PatientRecord, PutMode, Store};
use domim::wire::PatientInfo;

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    {
        let store = Store::open(dir.path()).expect("open");
        store
            .put_record(
                PatientRecord::new(PatientInfo {
                    name: "Doe^Jane".into(),
                    patient_id: "001".into(),
                    ..Default::default()
                }),
                PutMode::Insert,
            )
            .expect("insert");
        let entry = store.put_blob("scan.dcm", b"opaque image bytes").expect("blob");
        println!("stored blob {} ({} bytes, sha256 {})", entry.name, entry.length, hex::encode(entry.sha256));
        store.attach_file("001", "scan.dcm").expect("attach");
        // Dropping the handle is an orderly close; every mutation was
        // already durable before its call returned.
    }

    let store = Store::open(dir.path()).expect("reopen");
    let record = store.get_record("001").expect("record survives reopen");
    println!(
        "reopened: patient {} ({}) with files {:?}",
        record.info.patient_id, record.info.name, record.files
    );
    let content = store.get_blob("scan.dcm").expect("blob survives reopen");
    println!("blob content intact: {:?}", String::from_utf8_lossy(&content));
}
