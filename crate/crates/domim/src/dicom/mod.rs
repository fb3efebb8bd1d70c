//! DICOM file codec: parse and write Part-10 files in the two uncompressed
//! little-endian transfer syntaxes, decode monochrome pixel data, and
//! export frames as binary PGM.
//!
//! The subset is deliberately narrow but byte-exact: 128-byte preamble,
//! `DICM` magic, explicit-VR file-meta group, then the data set in either
//! Implicit or Explicit VR Little Endian. Undefined lengths are accepted on
//! parse (sequences and pixel-data fragments) and always resolved to
//! defined lengths on output.

mod dict;
mod parse;
mod pgm;
mod pixel;
mod tag;
mod vr;
mod write;

pub use dict::{dictionary_entries, implicit_vr};
pub use parse::parse;
pub use pgm::export_pgm;
pub use pixel::{decode_frame, pixel_descriptor, ImageBuffer, Photometric, PixelDescriptor};
pub use tag::{tags, Tag};
pub use vr::Vr;
pub use write::{encoded_value_len, serialize};

use thiserror::Error;

/// UID of Implicit VR Little Endian.
pub const IMPLICIT_VR_LE: &str = "1.2.840.10008.1.2";
/// UID of Explicit VR Little Endian.
pub const EXPLICIT_VR_LE: &str = "1.2.840.10008.1.2.1";

/// Errors from parsing, writing, and pixel decoding.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DicomError {
    /// Input shorter than the 132-byte preamble + magic minimum.
    #[error("TruncatedPreamble: input is {0} bytes, minimum is 132")]
    TruncatedPreamble(usize),
    /// Bytes 128..132 are not `DICM`.
    #[error("MissingMagic: bytes 128..132 are not `DICM`")]
    MissingMagic,
    /// Transfer syntax absent or outside the supported pair.
    #[error("UnsupportedTransferSyntax: {0:?}")]
    UnsupportedTransferSyntax(String),
    /// Tags at one data-set level must be strictly ascending.
    #[error("OutOfOrderTag: {tag} does not ascend at its level")]
    OutOfOrderTag { tag: Tag },
    /// A declared length runs past the available input.
    #[error("LengthOverrun: element data exceeds input at offset {offset}")]
    LengthOverrun { offset: usize },
    /// Undefined-length structure without proper item/sequence delimiters.
    #[error("MalformedSequence: {0}")]
    MalformedSequence(&'static str),
    /// Object violates a structural invariant and cannot be written.
    #[error("InvalidObject: {0}")]
    InvalidObject(String),
    /// Required attribute absent (or unreadable as its expected type).
    #[error("MissingAttribute: {0}")]
    MissingAttribute(Tag),
    /// Pixel module outside the supported 8/16-bit unsigned monochrome set.
    #[error("UnsupportedPixelFormat: {0}")]
    UnsupportedPixelFormat(String),
    /// Pixel data length disagrees with the descriptor geometry.
    #[error("PixelLengthMismatch: descriptor implies {expected} bytes, pixel data has {actual}")]
    PixelLengthMismatch { expected: u64, actual: u64 },
    /// Frame index at or past the frame count.
    #[error("FrameOutOfRange: frame {frame} of {frames}")]
    FrameOutOfRange { frame: u32, frames: u32 },
}

/// The two supported transfer syntaxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferSyntax {
    ImplicitVrLittleEndian,
    ExplicitVrLittleEndian,
}

impl TransferSyntax {
    pub fn uid(&self) -> &'static str {
        match self {
            TransferSyntax::ImplicitVrLittleEndian => IMPLICIT_VR_LE,
            TransferSyntax::ExplicitVrLittleEndian => EXPLICIT_VR_LE,
        }
    }

    pub fn from_uid(uid: &str) -> Option<Self> {
        match uid {
            IMPLICIT_VR_LE => Some(TransferSyntax::ImplicitVrLittleEndian),
            EXPLICIT_VR_LE => Some(TransferSyntax::ExplicitVrLittleEndian),
            _ => None,
        }
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self, TransferSyntax::ExplicitVrLittleEndian)
    }
}

/// One data element: tag, VR, raw value bytes, and nested data sets when
/// the VR is SQ (in which case `value` stays empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub tag: Tag,
    pub vr: Vr,
    pub value: Vec<u8>,
    pub items: Vec<Vec<Element>>,
}

impl Element {
    pub fn new(tag: Tag, vr: Vr, value: Vec<u8>) -> Self {
        Element {
            tag,
            vr,
            value,
            items: Vec::new(),
        }
    }

    /// Text element, value padded to even length with the VR's pad byte.
    pub fn text(tag: Tag, vr: Vr, text: &str) -> Self {
        let mut value = text.as_bytes().to_vec();
        if !value.len().is_multiple_of(2) {
            value.push(vr.pad_byte());
        }
        Element::new(tag, vr, value)
    }

    /// Single unsigned short element.
    pub fn us(tag: Tag, v: u16) -> Self {
        Element::new(tag, Vr::US, v.to_le_bytes().to_vec())
    }

    /// Sequence element with nested data sets.
    pub fn sequence(tag: Tag, items: Vec<Vec<Element>>) -> Self {
        Element {
            tag,
            vr: Vr::SQ,
            value: Vec::new(),
            items,
        }
    }

    /// Value as UTF-8 text, if it decodes.
    pub fn text_value(&self) -> Option<&str> {
        std::str::from_utf8(&self.value).ok()
    }

    /// Text value with trailing pad bytes (space, NUL) removed.
    pub fn trimmed_text(&self) -> Option<&str> {
        self.text_value()
            .map(|s| s.trim_end_matches([' ', '\0']))
    }

    /// Value decoded as a single little-endian unsigned short.
    pub fn as_u16(&self) -> Option<u16> {
        let bytes: [u8; 2] = self.value.as_slice().try_into().ok()?;
        Some(u16::from_le_bytes(bytes))
    }
}

/// A parsed Part-10 file: file-meta group, data set, and the transfer
/// syntax governing the data set's encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DicomObject {
    /// Group-0002 elements, always Explicit VR Little Endian on disk.
    pub meta: Vec<Element>,
    /// Data set elements (group ≠ 0002), in the transfer syntax.
    pub dataset: Vec<Element>,
    /// Trimmed UID text, equal to the value of (0002,0010).
    pub transfer_syntax: String,
}

impl DicomObject {
    /// Object with an empty data set and the minimal meta group naming the
    /// transfer syntax.
    pub fn new(syntax: TransferSyntax) -> Self {
        DicomObject {
            meta: vec![Element::text(tags::TRANSFER_SYNTAX_UID, Vr::UI, syntax.uid())],
            dataset: Vec::new(),
            transfer_syntax: syntax.uid().to_string(),
        }
    }

    pub fn with_dataset(syntax: TransferSyntax, dataset: Vec<Element>) -> Self {
        let mut obj = DicomObject::new(syntax);
        obj.dataset = dataset;
        obj
    }

    /// Looks up a top-level element: in the meta group for group 0002,
    /// otherwise in the data set.
    pub fn get_element(&self, tag: Tag) -> Option<&Element> {
        let list = if tag.is_meta() { &self.meta } else { &self.dataset };
        list.iter().find(|e| e.tag == tag)
    }

    pub fn syntax(&self) -> Option<TransferSyntax> {
        TransferSyntax::from_uid(&self.transfer_syntax)
    }
}
