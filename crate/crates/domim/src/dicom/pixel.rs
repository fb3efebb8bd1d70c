//! Pixel-module interpretation: descriptor extraction and frame decoding.

use super::tag::{tags, Tag};
use super::{DicomError, DicomObject, Element};

/// Monochrome photometric interpretations. MONOCHROME1 renders minimum
/// sample values as white, MONOCHROME2 as black.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Photometric {
    Monochrome1,
    Monochrome2,
}

impl Photometric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Photometric::Monochrome1 => "MONOCHROME1",
            Photometric::Monochrome2 => "MONOCHROME2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "MONOCHROME1" => Some(Photometric::Monochrome1),
            "MONOCHROME2" => Some(Photometric::Monochrome2),
            _ => None,
        }
    }
}

/// Validated pixel-module geometry of an image object.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelDescriptor {
    pub rows: u16,
    pub cols: u16,
    pub bits_allocated: u16,
    pub bits_stored: u16,
    pub high_bit: u16,
    pub samples_per_pixel: u16,
    pub photometric: Photometric,
    pub pixel_representation: u16,
    pub frames: u32,
}

impl PixelDescriptor {
    /// Bytes per single frame.
    pub fn frame_len(&self) -> u64 {
        self.rows as u64 * self.cols as u64 * (self.bits_allocated as u64 / 8)
    }

    /// Largest sample value expressible in `bits_stored` bits.
    pub fn max_value(&self) -> u16 {
        if self.bits_stored >= 16 {
            u16::MAX
        } else {
            (1u16 << self.bits_stored) - 1
        }
    }
}

/// One decoded frame: row-major unsigned samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    pub rows: u32,
    pub cols: u32,
    pub max_value: u16,
    pub samples: Vec<u16>,
}

fn required(obj: &DicomObject, tag: Tag) -> Result<&Element, DicomError> {
    obj.get_element(tag).ok_or(DicomError::MissingAttribute(tag))
}

fn required_u16(obj: &DicomObject, tag: Tag) -> Result<u16, DicomError> {
    required(obj, tag)?
        .as_u16()
        .ok_or(DicomError::MissingAttribute(tag))
}

/// Reads and validates the pixel module against the pixel data length.
pub fn pixel_descriptor(obj: &DicomObject) -> Result<PixelDescriptor, DicomError> {
    let rows = required_u16(obj, tags::ROWS)?;
    let cols = required_u16(obj, tags::COLUMNS)?;
    let bits_allocated = required_u16(obj, tags::BITS_ALLOCATED)?;
    let bits_stored = required_u16(obj, tags::BITS_STORED)?;
    let high_bit = required_u16(obj, tags::HIGH_BIT)?;
    let samples_per_pixel = required_u16(obj, tags::SAMPLES_PER_PIXEL)?;
    let pixel_representation = required_u16(obj, tags::PIXEL_REPRESENTATION)?;

    let photometric_text = required(obj, tags::PHOTOMETRIC_INTERPRETATION)?
        .trimmed_text()
        .map(str::to_string)
        .ok_or(DicomError::MissingAttribute(tags::PHOTOMETRIC_INTERPRETATION))?;

    let frames = match obj.get_element(tags::NUMBER_OF_FRAMES) {
        None => 1,
        Some(element) => element
            .trimmed_text()
            .and_then(|s| s.trim().parse::<u32>().ok())
            .ok_or(DicomError::MissingAttribute(tags::NUMBER_OF_FRAMES))?,
    };

    if !matches!(bits_allocated, 8 | 16) {
        return Err(DicomError::UnsupportedPixelFormat(format!(
            "bits allocated {bits_allocated} not in {{8, 16}}"
        )));
    }
    if bits_stored == 0 || bits_stored > bits_allocated {
        return Err(DicomError::UnsupportedPixelFormat(format!(
            "bits stored {bits_stored} outside 1..={bits_allocated}"
        )));
    }
    if high_bit != bits_stored - 1 {
        return Err(DicomError::UnsupportedPixelFormat(format!(
            "high bit {high_bit} is not bits stored - 1"
        )));
    }
    if samples_per_pixel != 1 {
        return Err(DicomError::UnsupportedPixelFormat(format!(
            "samples per pixel {samples_per_pixel}, only 1 supported"
        )));
    }
    if pixel_representation != 0 {
        return Err(DicomError::UnsupportedPixelFormat(
            "signed pixel representation".into(),
        ));
    }
    let photometric = Photometric::parse(&photometric_text).ok_or_else(|| {
        DicomError::UnsupportedPixelFormat(format!(
            "photometric interpretation {photometric_text:?}"
        ))
    })?;
    if frames == 0 {
        return Err(DicomError::UnsupportedPixelFormat("zero frames".into()));
    }

    let descriptor = PixelDescriptor {
        rows,
        cols,
        bits_allocated,
        bits_stored,
        high_bit,
        samples_per_pixel,
        photometric,
        pixel_representation,
        frames,
    };

    let pixel_data = required(obj, tags::PIXEL_DATA)?;
    let expected = descriptor.frame_len() * frames as u64;
    let actual = pixel_data.value.len() as u64;
    if expected != actual {
        return Err(DicomError::PixelLengthMismatch { expected, actual });
    }
    Ok(descriptor)
}

/// Decodes one frame's stored sample values, unchanged: no windowing, no
/// photometric inversion. 16-bit samples are read little-endian.
pub fn decode_frame(obj: &DicomObject, frame: u32) -> Result<ImageBuffer, DicomError> {
    let descriptor = pixel_descriptor(obj)?;
    if frame >= descriptor.frames {
        return Err(DicomError::FrameOutOfRange {
            frame,
            frames: descriptor.frames,
        });
    }
    let pixel_data = required(obj, tags::PIXEL_DATA)?;
    let frame_len = descriptor.frame_len() as usize;
    let start = frame as usize * frame_len;
    let bytes = &pixel_data.value[start..start + frame_len];

    let samples: Vec<u16> = if descriptor.bits_allocated == 8 {
        bytes.iter().map(|&b| b as u16).collect()
    } else {
        bytes
            .chunks_exact(2)
            .map(|pair| u16::from_le_bytes([pair[0], pair[1]]))
            .collect()
    };

    Ok(ImageBuffer {
        rows: descriptor.rows as u32,
        cols: descriptor.cols as u32,
        max_value: descriptor.max_value(),
        samples,
    })
}
