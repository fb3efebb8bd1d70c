//! Value representations: the two-letter type codes of data elements.

use std::fmt;

/// The supported value representations. Any other two-letter code found in
/// a file maps to [`Vr::UN`] on parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[allow(clippy::upper_case_acronyms)]
pub enum Vr {
    AE,
    AS,
    CS,
    DA,
    DS,
    IS,
    LO,
    LT,
    OB,
    OW,
    PN,
    SH,
    SL,
    SQ,
    TM,
    UI,
    UL,
    US,
    UN,
    UT,
}

impl Vr {
    pub const ALL: [Vr; 20] = [
        Vr::AE,
        Vr::AS,
        Vr::CS,
        Vr::DA,
        Vr::DS,
        Vr::IS,
        Vr::LO,
        Vr::LT,
        Vr::OB,
        Vr::OW,
        Vr::PN,
        Vr::SH,
        Vr::SL,
        Vr::SQ,
        Vr::TM,
        Vr::UI,
        Vr::UL,
        Vr::US,
        Vr::UN,
        Vr::UT,
    ];

    /// Maps a two-byte code from a file; unknown codes become `UN`.
    pub fn from_bytes(code: [u8; 2]) -> Vr {
        match &code {
            b"AE" => Vr::AE,
            b"AS" => Vr::AS,
            b"CS" => Vr::CS,
            b"DA" => Vr::DA,
            b"DS" => Vr::DS,
            b"IS" => Vr::IS,
            b"LO" => Vr::LO,
            b"LT" => Vr::LT,
            b"OB" => Vr::OB,
            b"OW" => Vr::OW,
            b"PN" => Vr::PN,
            b"SH" => Vr::SH,
            b"SL" => Vr::SL,
            b"SQ" => Vr::SQ,
            b"TM" => Vr::TM,
            b"UI" => Vr::UI,
            b"UL" => Vr::UL,
            b"US" => Vr::US,
            b"UN" => Vr::UN,
            b"UT" => Vr::UT,
            _ => Vr::UN,
        }
    }

    pub fn as_bytes(&self) -> [u8; 2] {
        let s: &[u8; 2] = match self {
            Vr::AE => b"AE",
            Vr::AS => b"AS",
            Vr::CS => b"CS",
            Vr::DA => b"DA",
            Vr::DS => b"DS",
            Vr::IS => b"IS",
            Vr::LO => b"LO",
            Vr::LT => b"LT",
            Vr::OB => b"OB",
            Vr::OW => b"OW",
            Vr::PN => b"PN",
            Vr::SH => b"SH",
            Vr::SL => b"SL",
            Vr::SQ => b"SQ",
            Vr::TM => b"TM",
            Vr::UI => b"UI",
            Vr::UL => b"UL",
            Vr::US => b"US",
            Vr::UN => b"UN",
            Vr::UT => b"UT",
        };
        *s
    }

    /// VRs written in explicit syntax with 2 reserved bytes and a 32-bit
    /// length; the rest use a 16-bit length.
    pub fn uses_long_length(&self) -> bool {
        matches!(self, Vr::OB | Vr::OW | Vr::SQ | Vr::UN | Vr::UT)
    }

    /// Text VRs whose values display as strings and pad with a space.
    pub fn is_text(&self) -> bool {
        matches!(
            self,
            Vr::AE
                | Vr::AS
                | Vr::CS
                | Vr::DA
                | Vr::DS
                | Vr::IS
                | Vr::LO
                | Vr::LT
                | Vr::PN
                | Vr::SH
                | Vr::TM
                | Vr::UI
                | Vr::UT
        )
    }

    /// Byte used to pad odd-length values on output: space for text VRs,
    /// NUL for UI and binary VRs.
    pub fn pad_byte(&self) -> u8 {
        if self.is_text() && *self != Vr::UI {
            b' '
        } else {
            0x00
        }
    }
}

impl fmt::Display for Vr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let code = self.as_bytes();
        write!(f, "{}{}", code[0] as char, code[1] as char)
    }
}
