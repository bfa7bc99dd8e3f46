//! Exit statuses, following the BSD sysexits numbering.

use clmkit::ClmError;

pub const PARTIAL: u8 = 2;
pub const USAGE: u8 = 64;
pub const DATA: u8 = 65;
pub const NO_INPUT: u8 = 66;
pub const SOFTWARE: u8 = 70;
pub const CANT_CREATE: u8 = 73;
pub const FAILURE: u8 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(DATA, message)
    }

    pub fn no_input(message: impl Into<String>) -> Self {
        Self::new(NO_INPUT, message)
    }

    pub fn cant_create(message: impl Into<String>) -> Self {
        Self::new(CANT_CREATE, message)
    }

    pub fn software(message: impl Into<String>) -> Self {
        Self::new(SOFTWARE, message)
    }

    pub fn failure(message: impl Into<String>) -> Self {
        Self::new(FAILURE, message)
    }
}

impl From<ClmError> for CliError {
    fn from(e: ClmError) -> Self {
        let code = match &e {
            ClmError::Io(_) => NO_INPUT,
            ClmError::Parse { .. } | ClmError::InvalidDataset(_) => DATA,
            ClmError::InvalidArgument(_) => USAGE,
            _ => FAILURE,
        };
        Self::new(code, e.to_string())
    }
}
