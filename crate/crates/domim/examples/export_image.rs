//! Decode a synthetic monochrome image and export it as binary PGM.
//!
//! ```bash
//! cargo run --example export_image
//! ```

use domim::dicom::{
    decode_frame, export_pgm, pixel_descriptor, serialize, tags, DicomObject, Element,
    TransferSyntax, Vr,
};

fn main() {
    let (rows, cols) = (64u16, 64u16);
    // A diagonal gradient.
    let pixels: Vec<u8> = (0..rows as usize)
        .flat_map(|r| (0..cols as usize).map(move |c| ((r + c) * 2 % 256) as u8))
        .collect();

    let mut object = DicomObject::new(TransferSyntax::ExplicitVrLittleEndian);
    object.dataset = vec![
        Element::us(tags::SAMPLES_PER_PIXEL, 1),
        Element::text(tags::PHOTOMETRIC_INTERPRETATION, Vr::CS, "MONOCHROME2"),
        Element::us(tags::ROWS, rows),
        Element::us(tags::COLUMNS, cols),
        Element::us(tags::BITS_ALLOCATED, 8),
        Element::us(tags::BITS_STORED, 8),
        Element::us(tags::HIGH_BIT, 7),
        Element::us(tags::PIXEL_REPRESENTATION, 0),
        Element::new(tags::PIXEL_DATA, Vr::OB, pixels),
    ];
    // Also a valid file on disk, if you want one to poke at.
    let _file_bytes = serialize(&object).expect("serialize");

    let descriptor = pixel_descriptor(&object).expect("pixel descriptor");
    println!(
        "{}x{}, {} bits, {:?}, {} frame(s)",
        descriptor.rows, descriptor.cols, descriptor.bits_allocated, descriptor.photometric,
        descriptor.frames
    );

    let image = decode_frame(&object, 0).expect("decode frame");
    let pgm = export_pgm(&image, descriptor.photometric);
    std::fs::write("gradient.pgm", &pgm).expect("write gradient.pgm");
    println!("wrote gradient.pgm ({} bytes)", pgm.len());
}
