//! Binary PGM (P5) export, the portable stand-in for on-screen display.

use super::pixel::{ImageBuffer, Photometric};

/// Writes the frame as binary PGM.
///
/// Layout is `P5\n<cols> <rows>\n<max_value>\n` followed by one byte per
/// sample when `max_value` fits a byte, otherwise two bytes big-endian per
/// the PGM convention. MONOCHROME1 samples are inverted on the way out
/// (`max_value - s`); MONOCHROME2 samples are written as stored.
pub fn export_pgm(img: &ImageBuffer, photometric: Photometric) -> Vec<u8> {
    let header = format!("P5\n{} {}\n{}\n", img.cols, img.rows, img.max_value);
    let wide = img.max_value > 255;
    let mut out = Vec::with_capacity(header.len() + img.samples.len() * if wide { 2 } else { 1 });
    out.extend_from_slice(header.as_bytes());
    for &sample in &img.samples {
        let value = match photometric {
            Photometric::Monochrome2 => sample,
            Photometric::Monochrome1 => img.max_value - sample,
        };
        if wide {
            out.extend_from_slice(&value.to_be_bytes());
        } else {
            out.push(value as u8);
        }
    }
    out
}
