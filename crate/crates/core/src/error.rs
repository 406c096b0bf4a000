use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Caller-supplied arguments violate an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),
    /// A raw attention map whose maximum is zero cannot be max-normalized.
    #[error("attention map is identically zero")]
    DegenerateMap,
    #[error("invalid attention dump: {0}")]
    Dump(String),
    #[error("cannot encode tensor: {0}")]
    Encoding(String),
    #[error("malformed ATNB data: {0}")]
    Format(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! input_err {
    ($($arg:tt)*) => { $crate::error::Error::Input(alloc::format!($($arg)*)) };
}

macro_rules! dump_err {
    ($($arg:tt)*) => { $crate::error::Error::Dump(alloc::format!($($arg)*)) };
}

pub(crate) use dump_err;
pub(crate) use input_err;
