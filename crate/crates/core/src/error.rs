use std::fmt;

/// Where in an input a parse error was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    /// One-based line number (text formats).
    Line(usize),
    /// Zero-based byte offset (binary formats).
    Byte(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Byte(b) => write!(f, "byte {b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    MalformedHeader,
    LengthMismatch,
    NonFinite,
    Syntax,
    UnexpectedEof,
    Invalid,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::MalformedHeader => "malformed header",
            ParseErrorKind::LengthMismatch => "length mismatch",
            ParseErrorKind::NonFinite => "non-finite value",
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnexpectedEof => "unexpected end of input",
            ParseErrorKind::Invalid => "invalid value",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{kind} at {location}: {message}")]
    Parse {
        kind: ParseErrorKind,
        location: Location,
        message: String,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("length mismatch: {0}")]
    Mismatch(String),
    #[error("no foreground points")]
    EmptyForeground,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid scene spec: {0}")]
    Spec(String),
    #[error("invalid calibration: {0}")]
    Calibration(String),
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(kind: ParseErrorKind, location: Location, message: impl Into<String>) -> Self {
        Error::Parse {
            kind,
            location,
            message: message.into(),
        }
    }

    pub(crate) fn json(err: serde_json::Error) -> Self {
        let kind = match err.classify() {
            serde_json::error::Category::Eof => ParseErrorKind::UnexpectedEof,
            serde_json::error::Category::Syntax => ParseErrorKind::Syntax,
            _ => ParseErrorKind::Invalid,
        };
        Error::parse(kind, Location::Line(err.line()), err.to_string())
    }

    /// True when the failure stems from the input data rather than from
    /// how the caller invoked the API.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Mismatch(_)
                | Error::Spec(_)
                | Error::Calibration(_)
                | Error::InvalidCloud(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
