//! Part-10 parser for the two supported little-endian transfer syntaxes.

use super::dict::implicit_vr;
use super::tag::{tags, Tag};
use super::vr::Vr;
use super::{DicomError, DicomObject, Element, TransferSyntax};

const PREAMBLE_LEN: usize = 128;
const MAGIC: &[u8; 4] = b"DICM";
const UNDEFINED_LENGTH: u32 = 0xFFFF_FFFF;
const MAX_DEPTH: usize = 32;

/// Parses a complete Part-10 file.
///
/// The 128-byte preamble content is not interpreted; the file-meta group is
/// always read as explicit VR, the data set per the transfer syntax named
/// by (0002,0010). Supported syntaxes are Implicit and Explicit VR Little
/// Endian.
pub fn parse(bytes: &[u8]) -> Result<DicomObject, DicomError> {
    if bytes.len() < PREAMBLE_LEN + MAGIC.len() {
        return Err(DicomError::TruncatedPreamble(bytes.len()));
    }
    if &bytes[PREAMBLE_LEN..PREAMBLE_LEN + 4] != MAGIC {
        return Err(DicomError::MissingMagic);
    }
    let mut cur = Cursor {
        buf: bytes,
        pos: PREAMBLE_LEN + 4,
    };

    let meta = parse_meta(&mut cur)?;
    let uid = meta
        .iter()
        .find(|e| e.tag == tags::TRANSFER_SYNTAX_UID)
        .and_then(|e| e.trimmed_text())
        .map(str::to_string)
        .ok_or_else(|| DicomError::UnsupportedTransferSyntax("(0002,0010) absent".into()))?;
    let syntax = TransferSyntax::from_uid(&uid)
        .ok_or_else(|| DicomError::UnsupportedTransferSyntax(uid.clone()))?;

    let end = cur.buf.len();
    let dataset = parse_dataset(&mut cur, end, syntax.is_explicit(), 0, true)?;
    Ok(DicomObject {
        meta,
        dataset,
        transfer_syntax: uid,
    })
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, end: usize) -> Result<&'a [u8], DicomError> {
        if self.pos + n > end {
            return Err(DicomError::LengthOverrun { offset: self.pos });
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self, end: usize) -> Result<u16, DicomError> {
        Ok(u16::from_le_bytes(self.take(2, end)?.try_into().unwrap()))
    }

    fn u32(&mut self, end: usize) -> Result<u32, DicomError> {
        Ok(u32::from_le_bytes(self.take(4, end)?.try_into().unwrap()))
    }

    fn tag(&mut self, end: usize) -> Result<Tag, DicomError> {
        let group = self.u16(end)?;
        let element = self.u16(end)?;
        Ok(Tag::new(group, element))
    }

    fn peek_group(&self, end: usize) -> Option<u16> {
        if self.pos + 2 > end {
            return None;
        }
        Some(u16::from_le_bytes(
            self.buf[self.pos..self.pos + 2].try_into().unwrap(),
        ))
    }

    fn peek_tag(&self, end: usize) -> Option<Tag> {
        if self.pos + 4 > end {
            return None;
        }
        let group = u16::from_le_bytes(self.buf[self.pos..self.pos + 2].try_into().unwrap());
        let element = u16::from_le_bytes(self.buf[self.pos + 2..self.pos + 4].try_into().unwrap());
        Some(Tag::new(group, element))
    }
}

/// Reads the contiguous run of group-0002 elements, explicit VR.
fn parse_meta(cur: &mut Cursor<'_>) -> Result<Vec<Element>, DicomError> {
    let end = cur.buf.len();
    let mut meta = Vec::new();
    let mut last: Option<Tag> = None;
    while cur.peek_group(end) == Some(0x0002) {
        let element = parse_element(cur, end, true, 0)?;
        if last.is_some_and(|l| l >= element.tag) {
            return Err(DicomError::OutOfOrderTag { tag: element.tag });
        }
        last = Some(element.tag);
        meta.push(element);
    }
    Ok(meta)
}

/// Parses elements until `end`. `top_level` marks the file-level data set,
/// where meta-group tags are no longer allowed.
fn parse_dataset(
    cur: &mut Cursor<'_>,
    end: usize,
    explicit: bool,
    depth: usize,
    top_level: bool,
) -> Result<Vec<Element>, DicomError> {
    let mut dataset = Vec::new();
    let mut last: Option<Tag> = None;
    while cur.pos < end {
        let element = parse_element(cur, end, explicit, depth)?;
        if element.tag.is_meta() && top_level {
            // Meta elements end before the data set begins.
            return Err(DicomError::OutOfOrderTag { tag: element.tag });
        }
        if last.is_some_and(|l| l >= element.tag) {
            return Err(DicomError::OutOfOrderTag { tag: element.tag });
        }
        last = Some(element.tag);
        dataset.push(element);
    }
    Ok(dataset)
}

fn parse_element(
    cur: &mut Cursor<'_>,
    end: usize,
    explicit: bool,
    depth: usize,
) -> Result<Element, DicomError> {
    if depth > MAX_DEPTH {
        return Err(DicomError::MalformedSequence("sequence nesting too deep"));
    }
    let tag = cur.tag(end)?;
    if tag.is_delimiter_group() {
        return Err(DicomError::MalformedSequence(
            "delimiter tag where an element was expected",
        ));
    }

    let (vr, length) = if explicit {
        let code: [u8; 2] = cur.take(2, end)?.try_into().unwrap();
        let vr = Vr::from_bytes(code);
        // Unknown codes map to UN and are assumed to use the long form.
        let length = if vr.uses_long_length() {
            cur.take(2, end)?;
            cur.u32(end)?
        } else {
            cur.u16(end)? as u32
        };
        (vr, length)
    } else {
        let vr = implicit_vr(tag);
        (vr, cur.u32(end)?)
    };

    if length == UNDEFINED_LENGTH {
        return match vr {
            Vr::SQ => {
                let items = parse_items_undefined(cur, end, explicit, depth)?;
                Ok(Element {
                    tag,
                    vr,
                    value: Vec::new(),
                    items,
                })
            }
            Vr::OB | Vr::OW if tag == tags::PIXEL_DATA => {
                let value = parse_pixel_fragments(cur, end)?;
                Ok(Element::new(tag, vr, value))
            }
            _ => Err(DicomError::MalformedSequence(
                "undefined length outside a sequence or pixel data",
            )),
        };
    }

    if vr == Vr::SQ {
        let region_end = cur
            .pos
            .checked_add(length as usize)
            .filter(|&e| e <= end)
            .ok_or(DicomError::LengthOverrun { offset: cur.pos })?;
        let items = parse_items_defined(cur, region_end, explicit, depth)?;
        return Ok(Element {
            tag,
            vr,
            value: Vec::new(),
            items,
        });
    }

    let value = cur.take(length as usize, end)?.to_vec();
    Ok(Element::new(tag, vr, value))
}

/// Items of an undefined-length sequence, terminated by (FFFE,E0DD).
fn parse_items_undefined(
    cur: &mut Cursor<'_>,
    end: usize,
    explicit: bool,
    depth: usize,
) -> Result<Vec<Vec<Element>>, DicomError> {
    let mut items = Vec::new();
    loop {
        if cur.pos >= end {
            return Err(DicomError::MalformedSequence("missing sequence delimiter"));
        }
        let tag = cur.tag(end)?;
        let length = cur.u32(end)?;
        match tag {
            tags::SEQUENCE_DELIMITER => {
                if length != 0 {
                    return Err(DicomError::MalformedSequence(
                        "sequence delimiter with nonzero length",
                    ));
                }
                return Ok(items);
            }
            tags::ITEM => items.push(parse_item_body(cur, end, length, explicit, depth)?),
            _ => {
                return Err(DicomError::MalformedSequence(
                    "expected item or sequence delimiter",
                ))
            }
        }
    }
}

/// Items of a defined-length sequence occupying exactly `[pos, region_end)`.
fn parse_items_defined(
    cur: &mut Cursor<'_>,
    region_end: usize,
    explicit: bool,
    depth: usize,
) -> Result<Vec<Vec<Element>>, DicomError> {
    let mut items = Vec::new();
    while cur.pos < region_end {
        let tag = cur.tag(region_end)?;
        let length = cur.u32(region_end)?;
        if tag != tags::ITEM {
            return Err(DicomError::MalformedSequence(
                "expected item inside defined-length sequence",
            ));
        }
        items.push(parse_item_body(cur, region_end, length, explicit, depth)?);
    }
    Ok(items)
}

/// One item's data set, with a defined or undefined item length.
fn parse_item_body(
    cur: &mut Cursor<'_>,
    end: usize,
    length: u32,
    explicit: bool,
    depth: usize,
) -> Result<Vec<Element>, DicomError> {
    if length == UNDEFINED_LENGTH {
        let mut elements = Vec::new();
        let mut last: Option<Tag> = None;
        loop {
            match cur.peek_tag(end) {
                Some(tags::ITEM_DELIMITER) => {
                    cur.tag(end)?;
                    let delim_len = cur.u32(end)?;
                    if delim_len != 0 {
                        return Err(DicomError::MalformedSequence(
                            "item delimiter with nonzero length",
                        ));
                    }
                    return Ok(elements);
                }
                Some(_) => {
                    let element = parse_element(cur, end, explicit, depth + 1)?;
                    if last.is_some_and(|l| l >= element.tag) {
                        return Err(DicomError::OutOfOrderTag { tag: element.tag });
                    }
                    last = Some(element.tag);
                    elements.push(element);
                }
                None => return Err(DicomError::MalformedSequence("missing item delimiter")),
            }
        }
    } else {
        let item_end = cur
            .pos
            .checked_add(length as usize)
            .filter(|&e| e <= end)
            .ok_or(DicomError::LengthOverrun { offset: cur.pos })?;
        parse_dataset(cur, item_end, explicit, depth + 1, false)
    }
}

/// Pixel-data fragments of an undefined-length OB/OW element, concatenated.
fn parse_pixel_fragments(cur: &mut Cursor<'_>, end: usize) -> Result<Vec<u8>, DicomError> {
    let mut value = Vec::new();
    loop {
        if cur.pos >= end {
            return Err(DicomError::MalformedSequence("missing sequence delimiter"));
        }
        let tag = cur.tag(end)?;
        let length = cur.u32(end)?;
        match tag {
            tags::SEQUENCE_DELIMITER => {
                if length != 0 {
                    return Err(DicomError::MalformedSequence(
                        "sequence delimiter with nonzero length",
                    ));
                }
                return Ok(value);
            }
            tags::ITEM => {
                if length == UNDEFINED_LENGTH {
                    return Err(DicomError::MalformedSequence(
                        "pixel fragment with undefined length",
                    ));
                }
                value.extend_from_slice(cur.take(length as usize, end)?);
            }
            _ => {
                return Err(DicomError::MalformedSequence(
                    "expected pixel fragment or sequence delimiter",
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::EXPLICIT_VR_LE;

    fn file_with(meta_and_dataset: &[u8]) -> Vec<u8> {
        let mut bytes = vec![0u8; 128];
        bytes.extend_from_slice(b"DICM");
        bytes.extend_from_slice(meta_and_dataset);
        bytes
    }

    /// Explicit-VR transfer syntax element for the meta group.
    fn meta_ts(uid: &str) -> Vec<u8> {
        let mut v = uid.as_bytes().to_vec();
        if !v.len().is_multiple_of(2) {
            v.push(0);
        }
        let mut out = vec![0x02, 0x00, 0x10, 0x00, b'U', b'I'];
        out.extend_from_slice(&(v.len() as u16).to_le_bytes());
        out.extend_from_slice(&v);
        out
    }

    #[test]
    fn input_below_minimum_is_truncated_preamble() {
        assert_eq!(parse(&[0u8; 131]), Err(DicomError::TruncatedPreamble(131)));
        assert_eq!(parse(&[]), Err(DicomError::TruncatedPreamble(0)));
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = vec![0u8; 128];
        bytes.extend_from_slice(b"DICX");
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(parse(&bytes), Err(DicomError::MissingMagic));
    }

    #[test]
    fn minimal_explicit_file() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        // (0010,0020) LO, length 4, "001 "
        body.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, b'L', b'O', 0x04, 0x00]);
        body.extend_from_slice(b"001 ");
        let obj = parse(&file_with(&body)).unwrap();
        assert_eq!(obj.transfer_syntax, EXPLICIT_VR_LE);
        assert_eq!(obj.dataset.len(), 1);
        let element = obj.get_element(tags::PATIENT_ID).unwrap();
        assert_eq!(element.vr, Vr::LO);
        assert_eq!(element.trimmed_text(), Some("001"));
        assert!(obj.get_element(tags::PATIENT_NAME).is_none());
    }

    #[test]
    fn missing_transfer_syntax_is_unsupported() {
        let obj = parse(&file_with(&[]));
        assert!(matches!(obj, Err(DicomError::UnsupportedTransferSyntax(_))));
    }

    #[test]
    fn unknown_transfer_syntax_rejected() {
        let body = meta_ts("1.2.840.10008.1.2.2");
        assert_eq!(
            parse(&file_with(&body)),
            Err(DicomError::UnsupportedTransferSyntax(
                "1.2.840.10008.1.2.2".into()
            ))
        );
    }

    #[test]
    fn out_of_order_dataset_rejected() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        body.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, b'L', b'O', 0x00, 0x00]);
        body.extend_from_slice(&[0x10, 0x00, 0x10, 0x00, b'P', b'N', 0x00, 0x00]);
        assert_eq!(
            parse(&file_with(&body)),
            Err(DicomError::OutOfOrderTag {
                tag: tags::PATIENT_NAME
            })
        );
    }

    #[test]
    fn duplicate_tag_rejected() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        body.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, b'L', b'O', 0x00, 0x00]);
        body.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, b'L', b'O', 0x00, 0x00]);
        assert_eq!(
            parse(&file_with(&body)),
            Err(DicomError::OutOfOrderTag {
                tag: tags::PATIENT_ID
            })
        );
    }

    #[test]
    fn declared_length_beyond_input_is_overrun() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        body.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, b'L', b'O', 0x10, 0x00]);
        body.extend_from_slice(b"001 ");
        assert!(matches!(
            parse(&file_with(&body)),
            Err(DicomError::LengthOverrun { .. })
        ));
    }

    #[test]
    fn undefined_length_sequence_round() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        // (0008,1140) SQ undefined length
        body.extend_from_slice(&[0x08, 0x00, 0x40, 0x11, b'S', b'Q', 0x00, 0x00]);
        body.extend_from_slice(&0xFFFF_FFFFu32.to_le_bytes());
        // item, undefined length
        body.extend_from_slice(&[0xFE, 0xFF, 0x00, 0xE0]);
        body.extend_from_slice(&0xFFFF_FFFFu32.to_le_bytes());
        // (0008,0060) CS "CT"
        body.extend_from_slice(&[0x08, 0x00, 0x60, 0x00, b'C', b'S', 0x02, 0x00]);
        body.extend_from_slice(b"CT");
        // item delimiter
        body.extend_from_slice(&[0xFE, 0xFF, 0x0D, 0xE0, 0, 0, 0, 0]);
        // sequence delimiter
        body.extend_from_slice(&[0xFE, 0xFF, 0xDD, 0xE0, 0, 0, 0, 0]);
        let obj = parse(&file_with(&body)).unwrap();
        let seq = &obj.dataset[0];
        assert_eq!(seq.vr, Vr::SQ);
        assert_eq!(seq.items.len(), 1);
        assert_eq!(seq.items[0][0].trimmed_text(), Some("CT"));
    }

    #[test]
    fn missing_sequence_delimiter_is_malformed() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        body.extend_from_slice(&[0x08, 0x00, 0x40, 0x11, b'S', b'Q', 0x00, 0x00]);
        body.extend_from_slice(&0xFFFF_FFFFu32.to_le_bytes());
        assert_eq!(
            parse(&file_with(&body)),
            Err(DicomError::MalformedSequence("missing sequence delimiter"))
        );
    }

    #[test]
    fn undefined_length_on_text_vr_is_malformed() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        body.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, b'U', b'T', 0x00, 0x00]);
        body.extend_from_slice(&0xFFFF_FFFFu32.to_le_bytes());
        assert!(matches!(
            parse(&file_with(&body)),
            Err(DicomError::MalformedSequence(_))
        ));
    }

    #[test]
    fn implicit_vr_resolves_from_dictionary() {
        let mut body = meta_ts(crate::dicom::IMPLICIT_VR_LE);
        // (0010,0020) length 4, "001 ": no VR bytes in implicit syntax
        body.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, 0x04, 0x00, 0x00, 0x00]);
        body.extend_from_slice(b"001 ");
        // unknown private tag
        body.extend_from_slice(&[0x11, 0x00, 0x01, 0x00, 0x02, 0x00, 0x00, 0x00]);
        body.extend_from_slice(&[0xAB, 0xCD]);
        let obj = parse(&file_with(&body)).unwrap();
        assert_eq!(obj.dataset[0].vr, Vr::LO);
        assert_eq!(obj.dataset[1].vr, Vr::UN);
        assert_eq!(obj.dataset[1].value, vec![0xAB, 0xCD]);
    }

    #[test]
    fn pixel_fragments_concatenate() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        body.extend_from_slice(&[0xE0, 0x7F, 0x10, 0x00, b'O', b'B', 0x00, 0x00]);
        body.extend_from_slice(&0xFFFF_FFFFu32.to_le_bytes());
        body.extend_from_slice(&[0xFE, 0xFF, 0x00, 0xE0, 0x02, 0x00, 0x00, 0x00]);
        body.extend_from_slice(&[0x01, 0x02]);
        body.extend_from_slice(&[0xFE, 0xFF, 0x00, 0xE0, 0x02, 0x00, 0x00, 0x00]);
        body.extend_from_slice(&[0x03, 0x04]);
        body.extend_from_slice(&[0xFE, 0xFF, 0xDD, 0xE0, 0, 0, 0, 0]);
        let obj = parse(&file_with(&body)).unwrap();
        assert_eq!(obj.dataset[0].value, vec![1, 2, 3, 4]);
    }

    #[test]
    fn odd_length_value_accepted_on_parse() {
        let mut body = meta_ts(EXPLICIT_VR_LE);
        body.extend_from_slice(&[0x10, 0x00, 0x20, 0x00, b'L', b'O', 0x03, 0x00]);
        body.extend_from_slice(b"001");
        let obj = parse(&file_with(&body)).unwrap();
        assert_eq!(obj.dataset[0].value, b"001");
    }

    /// Arbitrary bytes behind a valid magic must never panic the parser.
    #[test]
    fn random_garbage_never_panics() {
        let mut state = 0x12345678u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as u8
        };
        for _ in 0..2000 {
            let len = 132 + (next() as usize * 4);
            let mut bytes: Vec<u8> = (0..len).map(|_| next()).collect();
            bytes[128..132].copy_from_slice(b"DICM");
            let _ = parse(&bytes);
        }
    }
}
