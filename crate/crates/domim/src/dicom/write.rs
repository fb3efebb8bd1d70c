//! Part-10 writer. Output is canonical: defined lengths everywhere, values
//! padded to even length, meta group in explicit VR.

use super::tag::{tags, Tag};
use super::vr::Vr;
use super::{DicomError, DicomObject, Element};

/// Serializes a valid object: 128 zero bytes, `DICM`, the meta group in
/// explicit VR, then the data set in the object's transfer syntax.
pub fn serialize(obj: &DicomObject) -> Result<Vec<u8>, DicomError> {
    let syntax = obj
        .syntax()
        .ok_or_else(|| DicomError::UnsupportedTransferSyntax(obj.transfer_syntax.clone()))?;
    validate(obj)?;

    let mut out = vec![0u8; 128];
    out.extend_from_slice(b"DICM");
    for element in &obj.meta {
        write_element(&mut out, element, true)?;
    }
    for element in &obj.dataset {
        write_element(&mut out, element, syntax.is_explicit())?;
    }
    Ok(out)
}

/// Encoded size of an element's value region (after even padding), items
/// included for sequences. Used for length fields and for display.
pub fn encoded_value_len(element: &Element, explicit: bool) -> usize {
    if element.vr == Vr::SQ {
        element
            .items
            .iter()
            .map(|item| 8 + item.iter().map(|e| encoded_element_len(e, explicit)).sum::<usize>())
            .sum()
    } else {
        element.value.len() + element.value.len() % 2
    }
}

fn encoded_element_len(element: &Element, explicit: bool) -> usize {
    let header = if explicit {
        if element.vr.uses_long_length() {
            12
        } else {
            8
        }
    } else {
        8
    };
    header + encoded_value_len(element, explicit)
}

fn write_element(out: &mut Vec<u8>, element: &Element, explicit: bool) -> Result<(), DicomError> {
    let value_len = encoded_value_len(element, explicit);

    out.extend_from_slice(&element.tag.group.to_le_bytes());
    out.extend_from_slice(&element.tag.element.to_le_bytes());
    if explicit {
        out.extend_from_slice(&element.vr.as_bytes());
        if element.vr.uses_long_length() {
            out.extend_from_slice(&[0x00, 0x00]);
            out.extend_from_slice(&(value_len as u32).to_le_bytes());
        } else {
            let short_len: u16 = value_len.try_into().map_err(|_| {
                DicomError::InvalidObject(format!(
                    "{} value of {} bytes does not fit a 16-bit length",
                    element.tag, value_len
                ))
            })?;
            out.extend_from_slice(&short_len.to_le_bytes());
        }
    } else {
        out.extend_from_slice(&(value_len as u32).to_le_bytes());
    }

    if element.vr == Vr::SQ {
        for item in &element.items {
            let item_len: usize = item.iter().map(|e| encoded_element_len(e, explicit)).sum();
            out.extend_from_slice(&tags::ITEM.group.to_le_bytes());
            out.extend_from_slice(&tags::ITEM.element.to_le_bytes());
            out.extend_from_slice(&(item_len as u32).to_le_bytes());
            for nested in item {
                write_element(out, nested, explicit)?;
            }
        }
    } else {
        out.extend_from_slice(&element.value);
        if !element.value.len().is_multiple_of(2) {
            out.push(element.vr.pad_byte());
        }
    }
    Ok(())
}

fn validate(obj: &DicomObject) -> Result<(), DicomError> {
    let mut last: Option<Tag> = None;
    for element in &obj.meta {
        if !element.tag.is_meta() {
            return Err(DicomError::InvalidObject(format!(
                "meta contains non-0002 element {}",
                element.tag
            )));
        }
        if last.is_some_and(|l| l >= element.tag) {
            return Err(DicomError::InvalidObject(format!(
                "meta tags not strictly ascending at {}",
                element.tag
            )));
        }
        last = Some(element.tag);
        validate_element(element)?;
    }

    let declared = obj
        .get_element(tags::TRANSFER_SYNTAX_UID)
        .and_then(Element::trimmed_text);
    if declared != Some(obj.transfer_syntax.as_str()) {
        return Err(DicomError::InvalidObject(
            "(0002,0010) does not match the object's transfer syntax".into(),
        ));
    }

    validate_dataset(&obj.dataset)
}

fn validate_dataset(dataset: &[Element]) -> Result<(), DicomError> {
    let mut last: Option<Tag> = None;
    for element in dataset {
        if element.tag.is_meta() {
            return Err(DicomError::InvalidObject(format!(
                "data set contains meta-group element {}",
                element.tag
            )));
        }
        if element.tag.is_delimiter_group() {
            return Err(DicomError::InvalidObject(format!(
                "data set contains delimiter-group element {}",
                element.tag
            )));
        }
        if last.is_some_and(|l| l >= element.tag) {
            return Err(DicomError::InvalidObject(format!(
                "tags not strictly ascending at {}",
                element.tag
            )));
        }
        last = Some(element.tag);
        validate_element(element)?;
        for item in &element.items {
            validate_dataset(item)?;
        }
    }
    Ok(())
}

fn validate_element(element: &Element) -> Result<(), DicomError> {
    if element.vr != Vr::SQ && !element.items.is_empty() {
        return Err(DicomError::InvalidObject(format!(
            "{} has nested items but is not a sequence",
            element.tag
        )));
    }
    if element.vr == Vr::SQ && !element.value.is_empty() {
        return Err(DicomError::InvalidObject(format!(
            "sequence {} carries raw value bytes",
            element.tag
        )));
    }
    Ok(())
}
