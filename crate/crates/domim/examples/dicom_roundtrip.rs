//! Build a DICOM object in memory, write it to bytes, and parse it back.
//!
//! ```bash
//! cargo run --example dicom_roundtrip
//! ```

use domim::dicom::{parse, serialize, tags, DicomObject, Element, Tag, TransferSyntax, Vr};

fn main() {
    let mut object = DicomObject::new(TransferSyntax::ExplicitVrLittleEndian);
    object.dataset = vec![
        Element::text(Tag::new(0x0008, 0x0060), Vr::CS, "MR"),
        Element::sequence(
            Tag::new(0x0008, 0x1140),
            vec![vec![Element::text(Tag::new(0x0008, 0x0060), Vr::CS, "CT")]],
        ),
        Element::text(tags::PATIENT_NAME, Vr::PN, "Doe^Jane"),
        Element::text(tags::PATIENT_ID, Vr::LO, "001"),
    ];

    let bytes = serialize(&object).expect("serialize");
    println!("serialized {} bytes (128-byte preamble + DICM + elements)", bytes.len());

    let reparsed = parse(&bytes).expect("parse");
    assert_eq!(reparsed, object);
    println!("round trip is identical, field for field");

    for element in &reparsed.dataset {
        println!(
            "{} {} {:4} bytes  {}",
            element.tag,
            element.vr,
            element.value.len(),
            element.trimmed_text().unwrap_or("")
        );
    }
}
