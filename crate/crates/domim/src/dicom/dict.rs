//! Built-in data dictionary used to resolve value representations when
//! parsing implicit-VR files. Tags not listed here parse as UN.

use super::tag::Tag;
use super::vr::Vr;

const ENTRIES: &[(u16, u16, Vr)] = &[
    (0x0002, 0x0000, Vr::UL), // File Meta Information Group Length
    (0x0002, 0x0001, Vr::OB), // File Meta Information Version
    (0x0002, 0x0002, Vr::UI), // Media Storage SOP Class UID
    (0x0002, 0x0003, Vr::UI), // Media Storage SOP Instance UID
    (0x0002, 0x0010, Vr::UI), // Transfer Syntax UID
    (0x0002, 0x0012, Vr::UI), // Implementation Class UID
    (0x0002, 0x0013, Vr::SH), // Implementation Version Name
    (0x0008, 0x0016, Vr::UI), // SOP Class UID
    (0x0008, 0x0018, Vr::UI), // SOP Instance UID
    (0x0008, 0x0020, Vr::DA), // Study Date
    (0x0008, 0x0030, Vr::TM), // Study Time
    (0x0008, 0x0050, Vr::SH), // Accession Number
    (0x0008, 0x0060, Vr::CS), // Modality
    (0x0008, 0x1140, Vr::SQ), // Referenced Image Sequence
    (0x0010, 0x0010, Vr::PN), // Patient Name
    (0x0010, 0x0020, Vr::LO), // Patient ID
    (0x0010, 0x0030, Vr::DA), // Patient Birth Date
    (0x0010, 0x0040, Vr::CS), // Patient Sex
    (0x0018, 0x0050, Vr::DS), // Slice Thickness
    (0x0020, 0x000D, Vr::UI), // Study Instance UID
    (0x0020, 0x000E, Vr::UI), // Series Instance UID
    (0x0020, 0x0011, Vr::IS), // Series Number
    (0x0020, 0x0013, Vr::IS), // Instance Number
    (0x0028, 0x0002, Vr::US), // Samples per Pixel
    (0x0028, 0x0004, Vr::CS), // Photometric Interpretation
    (0x0028, 0x0008, Vr::IS), // Number of Frames
    (0x0028, 0x0010, Vr::US), // Rows
    (0x0028, 0x0011, Vr::US), // Columns
    (0x0028, 0x0030, Vr::DS), // Pixel Spacing
    (0x0028, 0x0100, Vr::US), // Bits Allocated
    (0x0028, 0x0101, Vr::US), // Bits Stored
    (0x0028, 0x0102, Vr::US), // High Bit
    (0x0028, 0x0103, Vr::US), // Pixel Representation
    (0x0028, 0x1050, Vr::DS), // Window Center
    (0x0028, 0x1051, Vr::DS), // Window Width
    (0x0040, 0x0275, Vr::SQ), // Request Attributes Sequence
    (0x7FE0, 0x0010, Vr::OW), // Pixel Data
];

/// VR for a tag under implicit encoding; UN when the tag is not listed.
pub fn implicit_vr(tag: Tag) -> Vr {
    ENTRIES
        .binary_search_by_key(&(tag.group, tag.element), |&(g, e, _)| (g, e))
        .map(|i| ENTRIES[i].2)
        .unwrap_or(Vr::UN)
}

/// All dictionary entries, in tag order.
pub fn dictionary_entries() -> impl Iterator<Item = (Tag, Vr)> {
    ENTRIES.iter().map(|&(g, e, vr)| (Tag::new(g, e), vr))
}
