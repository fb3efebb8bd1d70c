//! The status grammar of string-returning methods and the operation codes
//! of `execute`/`execute2`.

use std::fmt;

use crate::wire::WireError;

/// Operation selector for `execute`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i16)]
pub enum ExecuteOp {
    Insert = 1,
    Update = 2,
    Delete = 3,
    ListFiles = 4,
}

impl ExecuteOp {
    pub fn from_code(code: i16) -> Option<Self> {
        match code {
            1 => Some(ExecuteOp::Insert),
            2 => Some(ExecuteOp::Update),
            3 => Some(ExecuteOp::Delete),
            4 => Some(ExecuteOp::ListFiles),
            _ => None,
        }
    }
}

/// The only defined `execute2` operation: query by patient id.
pub const QUERY_BY_ID: i16 = 1;

/// Status codes allowed by the reply grammar.
pub const STATUS_CODES: [u16; 4] = [400, 404, 409, 500];

/// Reply text matching `OK` | `OK <payload>` | `ERR <code> <message>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StatusText {
    Ok { payload: Option<String> },
    Err { code: u16, message: String },
}

impl StatusText {
    pub fn ok() -> Self {
        StatusText::Ok { payload: None }
    }

    pub fn ok_with(payload: impl Into<String>) -> Self {
        StatusText::Ok {
            payload: Some(payload.into()),
        }
    }

    pub fn err(code: u16, message: impl Into<String>) -> Self {
        debug_assert!(STATUS_CODES.contains(&code));
        StatusText::Err {
            code,
            message: message.into(),
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, StatusText::Ok { .. })
    }

    /// Error code, if this is an error status.
    pub fn error_code(&self) -> Option<u16> {
        match self {
            StatusText::Ok { .. } => None,
            StatusText::Err { code, .. } => Some(*code),
        }
    }

    /// Parses a reply under the status grammar; codes outside the defined
    /// set are rejected.
    pub fn parse(text: &str) -> Result<StatusText, WireError> {
        if text == "OK" {
            return Ok(StatusText::ok());
        }
        if let Some(payload) = text.strip_prefix("OK ") {
            return Ok(StatusText::ok_with(payload));
        }
        if let Some(rest) = text.strip_prefix("ERR ") {
            let (code_text, message) = rest
                .split_once(' ')
                .ok_or(WireError::InvalidValue("status missing error message"))?;
            let code: u16 = code_text
                .parse()
                .map_err(|_| WireError::InvalidValue("status code is not a number"))?;
            if !STATUS_CODES.contains(&code) {
                return Err(WireError::InvalidValue("status code outside defined set"));
            }
            return Ok(StatusText::err(code, message));
        }
        Err(WireError::InvalidValue("status text matches no rule"))
    }
}

impl fmt::Display for StatusText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatusText::Ok { payload: None } => write!(f, "OK"),
            StatusText::Ok { payload: Some(p) } => write!(f, "OK {p}"),
            StatusText::Err { code, message } => write!(f, "ERR {code} {message}"),
        }
    }
}
